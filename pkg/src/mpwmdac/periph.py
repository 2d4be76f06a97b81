"""Cycle-stepped register-map emulation of the modulator as an SoC peripheral.

The register layout, double-buffering rules, fault codes and the 1024-cycle
delay-line lock latency are emulation-local conventions for driver
development; they do not claim fidelity to any silicon.  The emitted bit
stream, however, must match the pure generators bit for bit once the
peripheral is enabled and locked.

Register map (32-bit word addresses):

    CTRL   @ 0x00   bit0 EN, bits7..4 SF          (SF change rejected while EN=1)
    NBITS  @ 0x04   counter width n, 4..16        (rejected while EN=1)
    DUTY   @ 0x08   coarse duty, double-buffered  (latched at period boundaries)
    HRDUTY @ 0x0C   4-bit fine duty, double-buffered
    STATUS @ 0x10   bit0 DLL_LOCKED               (read-only)

Reserved bits read as zero and are ignored on write.  The fine delay line
models 16 phases (fine_bits = 4); the output is forced low until the lock
latency elapses.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParameterError
from .modwave import rearranged_counter

__all__ = [
    "ADDR_CTRL",
    "ADDR_NBITS",
    "ADDR_DUTY",
    "ADDR_HRDUTY",
    "ADDR_STATUS",
    "LOCK_LATENCY_CYCLES",
    "FINE_BITS",
    "FaultCode",
    "PeripheralFault",
    "MpwmPeripheral",
    "run_script",
    "ScriptResult",
    "trace_to_vcd",
    "trace_to_csv",
]

ADDR_CTRL = 0x00
ADDR_NBITS = 0x04
ADDR_DUTY = 0x08
ADDR_HRDUTY = 0x0C
ADDR_STATUS = 0x10

_CTRL_EN = 0x01
_CTRL_SF_SHIFT = 4
_CTRL_SF_MASK = 0xF0

LOCK_LATENCY_CYCLES = 1024
FINE_BITS = 4


class FaultCode(str, Enum):
    UNMAPPED_ADDRESS = "unmapped_address"
    READ_ONLY = "read_only"
    CONFIG_LOCKED = "config_locked"
    BAD_VALUE = "bad_value"


class PeripheralFault(Exception):
    """Rejected bus access; the peripheral state is untouched."""

    def __init__(self, code: FaultCode, message: str):
        super().__init__(message)
        self.code = code


class MpwmPeripheral:
    """Single-owner stepped automaton emulating the DAC peripheral."""

    def __init__(self) -> None:
        self._n = 12
        self._sf = 0
        self._en = False
        self._duty_shadow = 0
        self._hrduty_shadow = 0
        self._duty_active = 0
        self._hrduty_active = 0
        self._counter = 0
        self._cycles_since_en = 0
        self._cr = rearranged_counter(self._n, self._sf)

    # -- bus interface -------------------------------------------------------

    def reg_write(self, addr: int, value: int) -> None:
        if value < 0:
            raise PeripheralFault(FaultCode.BAD_VALUE, f"negative value {value}")
        if addr == ADDR_CTRL:
            value &= _CTRL_EN | _CTRL_SF_MASK
            sf = (value & _CTRL_SF_MASK) >> _CTRL_SF_SHIFT
            en = bool(value & _CTRL_EN)
            if self._en and sf != self._sf:
                raise PeripheralFault(
                    FaultCode.CONFIG_LOCKED, "SF change rejected while enabled"
                )
            if en and sf >= self._n:
                raise PeripheralFault(
                    FaultCode.BAD_VALUE, f"SF={sf} must be below NBITS={self._n}"
                )
            starting = en and not self._en
            self._sf = sf
            self._en = en
            if starting:
                self._counter = 0
                self._cycles_since_en = 0
                self._duty_active = self._duty_shadow & (self._size - 1)
                self._hrduty_active = self._hrduty_shadow
                self._cr = rearranged_counter(self._n, self._sf)
        elif addr == ADDR_NBITS:
            if self._en:
                raise PeripheralFault(
                    FaultCode.CONFIG_LOCKED, "NBITS change rejected while enabled"
                )
            if not 4 <= value <= 16:
                raise PeripheralFault(
                    FaultCode.BAD_VALUE, f"NBITS={value} outside [4, 16]"
                )
            self._n = value
        elif addr == ADDR_DUTY:
            self._duty_shadow = value & 0xFFFF
        elif addr == ADDR_HRDUTY:
            self._hrduty_shadow = value & ((1 << FINE_BITS) - 1)
        elif addr == ADDR_STATUS:
            raise PeripheralFault(FaultCode.READ_ONLY, "STATUS is read-only")
        else:
            raise PeripheralFault(
                FaultCode.UNMAPPED_ADDRESS, f"no register at 0x{addr:02X}"
            )

    def reg_read(self, addr: int) -> int:
        if addr == ADDR_CTRL:
            return (self._sf << _CTRL_SF_SHIFT) | int(self._en)
        if addr == ADDR_NBITS:
            return self._n
        if addr == ADDR_DUTY:
            return self._duty_shadow
        if addr == ADDR_HRDUTY:
            return self._hrduty_shadow
        if addr == ADDR_STATUS:
            return int(self.locked)
        raise PeripheralFault(
            FaultCode.UNMAPPED_ADDRESS, f"no register at 0x{addr:02X}"
        )

    # -- emulation ------------------------------------------------------------

    @property
    def _size(self) -> int:
        return 1 << self._n

    @property
    def locked(self) -> bool:
        return self._en and self._cycles_since_en >= LOCK_LATENCY_CYCLES

    @property
    def cycle(self) -> int:
        return self._cycles_since_en

    def registers(self) -> dict[str, int]:
        """Observable register state (used by fault-atomicity checks)."""
        return {
            "CTRL": self.reg_read(ADDR_CTRL),
            "NBITS": self.reg_read(ADDR_NBITS),
            "DUTY": self.reg_read(ADDR_DUTY),
            "HRDUTY": self.reg_read(ADDR_HRDUTY),
            "STATUS": self.reg_read(ADDR_STATUS),
        }

    def snapshot(self) -> dict[str, int]:
        """Full observable state snapshot, including internal position."""
        state = self.registers()
        state.update(
            counter=self._counter,
            duty_active=self._duty_active,
            hrduty_active=self._hrduty_active,
            cycles_since_en=self._cycles_since_en,
        )
        return state

    def step(self, cycles: int) -> np.ndarray:
        """Advance the emulation and return one output bit per cycle.

        Output is forced low until the delay-line lock latency has elapsed;
        duty writes take effect at the next period boundary.
        """
        if cycles < 1:
            raise ParameterError(f"cycles must be >= 1, got {cycles}")
        out = np.zeros(cycles, dtype=np.uint8)
        if not self._en:
            return out
        for i in range(cycles):
            if self.locked:
                out[i] = 1 if self._cr[self._counter] < self._duty_active else 0
            self._counter += 1
            self._cycles_since_en += 1
            if self._counter == self._size:
                self._counter = 0
                self._duty_active = self._duty_shadow & (self._size - 1)
                self._hrduty_active = self._hrduty_shadow
        return out


@dataclass
class ScriptResult:
    """Outcome of a register script run."""

    bits: np.ndarray
    reads: list[tuple[int, int]]
    final_registers: dict[str, int]


def run_script(text: str, periph: MpwmPeripheral | None = None) -> ScriptResult:
    """Execute a line-oriented register program.

    Lines are `write <addr> <value>`, `read <addr>` or `step <cycles>`;
    blank lines and `#` comments are skipped.  Numbers accept 0x prefixes.
    Syntax errors raise ParameterError naming the line; peripheral faults
    propagate as PeripheralFault.
    """
    periph = periph or MpwmPeripheral()
    chunks: list[np.ndarray] = []
    reads: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        op = fields[0].lower()
        try:
            if op == "write" and len(fields) == 3:
                periph.reg_write(int(fields[1], 0), int(fields[2], 0))
            elif op == "read" and len(fields) == 2:
                addr = int(fields[1], 0)
                reads.append((addr, periph.reg_read(addr)))
            elif op == "step" and len(fields) == 2:
                chunks.append(periph.step(int(fields[1], 0)))
            else:
                raise ValueError
        except PeripheralFault as fault:
            raise PeripheralFault(
                fault.code, f"line {lineno}: {fault}"
            ) from fault
        except ValueError:
            raise ParameterError(
                f"script syntax error at line {lineno}: {raw!r}"
            ) from None
    bits = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.uint8)
    return ScriptResult(bits=bits, reads=reads, final_registers=periph.registers())


def trace_to_vcd(bits: np.ndarray, clock_ns: float = 10.0) -> str:
    """Change-dump of the output bit, one clock cycle per `clock_ns`."""
    lines = [
        "$timescale 1ns $end",
        "$scope module mpwm_dac $end",
        "$var wire 1 ! out $end",
        "$upscope $end",
        "$enddefinitions $end",
        "#0",
        "0!" if (bits.size == 0 or bits[0] == 0) else "1!",
    ]
    prev = bits[0] if bits.size else 0
    for i in range(1, bits.size):
        if bits[i] != prev:
            lines.append(f"#{int(round(i * clock_ns))}")
            lines.append(f"{int(bits[i])}!")
            prev = bits[i]
    if bits.size:
        lines.append(f"#{int(round(bits.size * clock_ns))}")
    return "\n".join(lines) + "\n"


def trace_to_csv(bits: np.ndarray) -> str:
    """Per-cycle dump with header `cycle,out`."""
    lines = ["cycle,out"]
    lines.extend(f"{i},{int(b)}" for i, b in enumerate(bits))
    return "\n".join(lines) + "\n"
