"""Digital waveform generators for pulse-modulation DACs.

One modulation period is 2**n clock cycles driven by an n-bit free-running
counter.  The supported modulators are:

* PWM     -- one contiguous pulse per period.
* MPWM    -- the period is split into SN = 2**sf sub-regions, each carrying
             one sub-pulse; sub-pulse widths differ by at most one clock.
* PCM     -- MPWM with sf = n-1, i.e. maximally spread unit pulses.
* FONS    -- first-order noise shaping (error-feedback accumulator).
* HRMPWM  -- MPWM plus a calibrated delay line that moves one falling edge
             with sub-clock resolution t_d = 1 / (2**fine_bits * f_clk).

MPWM waveforms are produced by two deliberately independent constructions,
`mpwm_wave` (counter comparator) and `mpwm_wave_decoder` (sub-region
address/wave decoder), which must agree bit for bit and serve as mutual
oracles in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ParameterError

__all__ = [
    "Kind",
    "ModulatorConfig",
    "DutyCode",
    "BitWaveform",
    "EdgeList",
    "DecoderState",
    "bit_reverse",
    "rearranged_counter",
    "mpwm_wave",
    "mpwm_wave_decoder",
    "decoder_states",
    "fons_wave",
    "hr_mpwm_wave",
    "count_pulses",
    "edge_count_formula",
]


class Kind(str, Enum):
    """Modulator family."""

    PWM = "pwm"
    PCM = "pcm"
    FONS = "fons"
    MPWM = "mpwm"
    HRMPWM = "hrmpwm"


@dataclass(frozen=True)
class ModulatorConfig:
    """Static configuration of one modulator instance.

    n is the counter bit width (2..16), sf the splitting factor (0..n-1),
    f_clk the clock in Hz.  fine_bits is the sub-clock resolution of the
    HR delay line and must be 0 for every kind except HRMPWM.
    """

    kind: Kind
    n: int
    sf: int = 0
    f_clk: float = 100e6
    fine_bits: int = 0

    def __post_init__(self) -> None:
        if not 2 <= self.n <= 16:
            raise ParameterError(f"n must be in [2, 16], got {self.n}")
        if not 0 <= self.sf <= self.n - 1:
            raise ParameterError(
                f"sf must be in [0, {self.n - 1}] for n={self.n}, got {self.sf}"
            )
        if not self.f_clk > 0:
            raise ParameterError(f"f_clk must be positive, got {self.f_clk}")
        if self.kind == Kind.PWM and self.sf != 0:
            raise ParameterError(f"PWM requires sf=0, got sf={self.sf}")
        if self.kind == Kind.PCM and self.sf != self.n - 1:
            raise ParameterError(
                f"PCM requires sf=n-1={self.n - 1}, got sf={self.sf}"
            )
        if self.kind == Kind.FONS and self.sf != 0:
            raise ParameterError(f"FONS ignores sf and requires sf=0, got {self.sf}")
        if self.kind == Kind.HRMPWM:
            if not 1 <= self.fine_bits <= 6:
                raise ParameterError(
                    f"HRMPWM requires fine_bits in [1, 6], got {self.fine_bits}"
                )
        elif self.fine_bits != 0:
            raise ParameterError(
                f"fine_bits must be 0 for kind={self.kind.value}, got {self.fine_bits}"
            )

    # -- derived quantities ------------------------------------------------

    @property
    def steps(self) -> int:
        """Clock cycles per modulation period (2**n)."""
        return 1 << self.n

    @property
    def sn(self) -> int:
        """Splitting number SN = 2**sf."""
        return 1 << self.sf

    @property
    def period(self) -> float:
        """Modulation period T = 2**n / f_clk in seconds."""
        return self.steps / self.f_clk

    @property
    def t_d(self) -> float:
        """Fine delay-line tap pitch in seconds (0.0 when fine_bits == 0)."""
        if self.fine_bits == 0:
            return 0.0
        return 1.0 / ((1 << self.fine_bits) * self.f_clk)

    @property
    def is_mpwm_family(self) -> bool:
        return self.kind in (Kind.PWM, Kind.PCM, Kind.MPWM, Kind.HRMPWM)

    # -- convenience constructors -------------------------------------------

    @classmethod
    def pwm(cls, n: int, f_clk: float = 100e6) -> "ModulatorConfig":
        return cls(Kind.PWM, n, 0, f_clk)

    @classmethod
    def pcm(cls, n: int, f_clk: float = 100e6) -> "ModulatorConfig":
        return cls(Kind.PCM, n, n - 1, f_clk)

    @classmethod
    def fons(cls, n: int, f_clk: float = 100e6) -> "ModulatorConfig":
        return cls(Kind.FONS, n, 0, f_clk)

    @classmethod
    def mpwm(cls, n: int, sf: int, f_clk: float = 100e6) -> "ModulatorConfig":
        return cls(Kind.MPWM, n, sf, f_clk)

    @classmethod
    def hr_mpwm(
        cls, n: int, sf: int, fine_bits: int = 4, f_clk: float = 100e6
    ) -> "ModulatorConfig":
        return cls(Kind.HRMPWM, n, sf, f_clk, fine_bits)


@dataclass(frozen=True)
class DutyCode:
    """Duty target: coarse code in clock cycles plus optional fine code."""

    coarse: int
    fine: int = 0


def _coerce_duty(cfg: ModulatorConfig, duty: int | DutyCode) -> DutyCode:
    if isinstance(duty, int) and not isinstance(duty, bool):
        duty = DutyCode(duty)
    if not isinstance(duty, DutyCode):
        raise ParameterError(f"duty must be an int or DutyCode, got {type(duty)!r}")
    top = cfg.steps - 1
    if not 0 <= duty.coarse <= top:
        raise ParameterError(
            f"duty.coarse must be in [0, {top}] for n={cfg.n}, got {duty.coarse}"
        )
    if cfg.kind != Kind.HRMPWM:
        if duty.fine != 0:
            raise ParameterError(
                f"duty.fine must be 0 for kind={cfg.kind.value}, got {duty.fine}"
            )
    else:
        fine_top = (1 << cfg.fine_bits) - 1
        if not 0 <= duty.fine <= fine_top:
            raise ParameterError(
                f"duty.fine must be in [0, {fine_top}] for fine_bits={cfg.fine_bits},"
                f" got {duty.fine}"
            )
    return duty


@dataclass(frozen=True, eq=False)
class BitWaveform:
    """One full modulation period as one 0/1 entry per clock cycle."""

    bits: np.ndarray
    f_clk: float

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size == 0:
            raise ParameterError("bits must be a non-empty 1-D sequence")
        if np.any(bits > 1):
            raise ParameterError("bits entries must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def period(self) -> float:
        return self.bits.size / self.f_clk

    @property
    def duty_count(self) -> int:
        """Number of high cycles in the period."""
        return int(self.bits.sum())


@dataclass(frozen=True, eq=False)
class EdgeList:
    """One period as timed transitions (seconds within [0, period)).

    Polarities alternate cyclically and rising/falling counts are equal.
    An empty list means a constant-low period.
    """

    times: np.ndarray
    risings: np.ndarray
    period: float
    f_clk: float

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        risings = np.asarray(self.risings, dtype=bool)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "risings", risings)
        if times.shape != risings.shape or times.ndim != 1:
            raise ParameterError("times and risings must be 1-D and equal length")
        if times.size:
            if np.any(np.diff(times) <= 0):
                raise ParameterError("transition times must be strictly increasing")
            if times[0] < 0 or times[-1] >= self.period:
                raise ParameterError("transition times must lie in [0, period)")
            adjacent_equal = bool(np.any(risings[1:] == risings[:-1]))
            wrap_equal = times.size > 1 and bool(risings[0]) == bool(risings[-1])
            if adjacent_equal or wrap_equal:
                raise ParameterError("transition polarities must alternate cyclically")
            if int(risings.sum()) * 2 != times.size:
                raise ParameterError("rising and falling transition counts must match")

    @classmethod
    def from_bits(cls, wave: BitWaveform) -> "EdgeList":
        bits = wave.bits
        prev = np.roll(bits, 1)
        idx = np.nonzero(bits != prev)[0]
        times = idx / wave.f_clk
        risings = bits[idx] == 1
        return cls(times, risings, wave.period, wave.f_clk)

    @property
    def rising_times(self) -> np.ndarray:
        return self.times[self.risings]

    @property
    def falling_times(self) -> np.ndarray:
        return self.times[~self.risings]

    def high_time(self) -> float:
        """Total high duration per period.

        Pulses wrapping the period boundary are handled cyclically; an empty
        list is a constant-low period (duty 0).
        """
        if not self.times.size:
            return 0.0
        total = float(np.sum(self.falling_times) - np.sum(self.rising_times))
        if not self.risings[0]:  # first event falls: one pulse wraps through 0
            total += self.period
        return total


@dataclass(frozen=True, eq=False)
class DecoderState:
    """Per-sub-region view of the decoder construction.

    sn_pos indexes the sub-region, data is the wave-select value (the upper
    bits of the duty code), and wav is the bit word placed into the
    sub-region (a left-aligned run of ones).
    """

    sn_pos: int
    data: int
    wav: np.ndarray


def bit_reverse(value: int, bits: int) -> int:
    """Reverse the low `bits` bits of `value` (0 bits -> 0)."""
    out = 0
    for i in range(bits):
        out |= ((value >> i) & 1) << (bits - 1 - i)
    return out


def rearranged_counter(n: int, sf: int) -> np.ndarray:
    """Rearranged counter word C_R for every counter state 0..2**n-1.

    The counter's low n-sf bits move to the top of the word with their order
    kept; its top sf bits move to the bottom with their significance
    reversed.  The map is a bit permutation, hence a bijection on
    [0, 2**n): exactly D counter states satisfy C_R < D for any duty D.
    """
    size = 1 << n
    sub = size >> sf
    c = np.arange(size)
    rev = np.array([bit_reverse(s, sf) for s in range(1 << sf)], dtype=np.int64)
    return (c % sub) * (1 << sf) + rev[c // sub]


def _require_mpwm_family(cfg: ModulatorConfig) -> None:
    if cfg.kind not in (Kind.MPWM, Kind.PWM, Kind.PCM):
        raise ParameterError(
            f"kind must be one of pwm/pcm/mpwm for this generator, got {cfg.kind.value}"
        )


def mpwm_wave(cfg: ModulatorConfig, duty: int | DutyCode) -> BitWaveform:
    """Generate one period through the comparator construction.

    The output is high on every cycle whose rearranged counter word is
    strictly below the coarse duty code, so code D yields exactly D high
    cycles and code 0 is all-low.
    """
    _require_mpwm_family(cfg)
    duty = _coerce_duty(cfg, duty)
    cr = rearranged_counter(cfg.n, cfg.sf)
    return BitWaveform((cr < duty.coarse).astype(np.uint8), cfg.f_clk)


def decoder_states(cfg: ModulatorConfig, duty: int | DutyCode) -> list[DecoderState]:
    """Sub-region decoder view: one wave word per sub-region.

    Every sub-region receives a left-aligned run of `data` ones; the
    remainder r = D mod SN is distributed one extra cycle at a time to the
    sub-regions whose bit-reversed index is below r.
    """
    _require_mpwm_family(cfg)
    duty = _coerce_duty(cfg, duty)
    sub = cfg.steps >> cfg.sf
    data = duty.coarse >> cfg.sf
    rem = duty.coarse & (cfg.sn - 1)
    states = []
    for sn_pos in range(cfg.sn):
        width = data + (1 if bit_reverse(sn_pos, cfg.sf) < rem else 0)
        wav = (np.arange(sub) < width).astype(np.uint8)
        states.append(DecoderState(sn_pos=sn_pos, data=data, wav=wav))
    return states


def mpwm_wave_decoder(cfg: ModulatorConfig, duty: int | DutyCode) -> BitWaveform:
    """Generate one period through the address/wave decoder construction.

    Must be bit-identical to `mpwm_wave` for all inputs; the two paths are
    mutual oracles.
    """
    states = decoder_states(cfg, duty)
    bits = np.concatenate([st.wav for st in states])
    return BitWaveform(bits, cfg.f_clk)


def fons_wave(cfg: ModulatorConfig, duty: int | DutyCode) -> BitWaveform:
    """First-order noise-shaping (error-feedback) period.

    Recurrence: acc += D each cycle; when acc >= 2**n emit 1 and subtract
    2**n, else emit 0.  Closed form: bit[k] = floor((k+1)*D/2**n) -
    floor(k*D/2**n).  The accumulator starts at 0 and returns to 0 at the
    period end, so every period carries exactly D high cycles.
    """
    if cfg.kind != Kind.FONS:
        raise ParameterError(f"kind must be fons for this generator, got {cfg.kind.value}")
    duty = _coerce_duty(cfg, duty)
    k = np.arange(cfg.steps + 1, dtype=np.int64)
    carry = (k * duty.coarse) // cfg.steps
    return BitWaveform(np.diff(carry).astype(np.uint8), cfg.f_clk)


def hr_mpwm_wave(cfg: ModulatorConfig, duty: int | DutyCode) -> EdgeList:
    """HR-MPWM period: coarse MPWM edges plus one fine-delayed falling edge.

    The chronologically last falling edge is delayed by fine * t_d, adding
    fine * t_d of high time on top of coarse / f_clk.  A zero coarse code
    with a nonzero fine code yields a single sliver pulse of fine * t_d at
    the period start.
    """
    if cfg.kind != Kind.HRMPWM:
        raise ParameterError(f"kind must be hrmpwm for this generator, got {cfg.kind.value}")
    duty = _coerce_duty(cfg, duty)
    coarse_cfg = replace(cfg, kind=Kind.MPWM, fine_bits=0)
    base = mpwm_wave(coarse_cfg, DutyCode(duty.coarse))
    edges = EdgeList.from_bits(base)
    if duty.fine == 0:
        return EdgeList(edges.times, edges.risings, cfg.period, cfg.f_clk)
    shift = duty.fine * cfg.t_d
    if not edges.times.size:
        times = np.array([0.0, shift])
        risings = np.array([True, False])
        return EdgeList(times, risings, cfg.period, cfg.f_clk)
    times = edges.times.copy()
    falling_idx = np.nonzero(~edges.risings)[0]
    times[falling_idx[-1]] += shift
    order = np.argsort(times, kind="stable")
    return EdgeList(times[order], edges.risings[order], cfg.period, cfg.f_clk)


def count_pulses(wave: BitWaveform | EdgeList) -> int:
    """Rising edges per period, counted cyclically.

    A pulse spanning the period wrap counts once; constant waveforms have
    zero rising edges.
    """
    if isinstance(wave, EdgeList):
        return int(wave.risings.sum())
    bits = wave.bits
    return int(np.sum((bits == 1) & (np.roll(bits, 1) == 0)))


def edge_count_formula(cfg: ModulatorConfig, duty: int | DutyCode) -> int:
    """Pulse count of the MPWM-family waveform by the piecewise duty law.

    D for D <= SN, SN in the middle range, 2**n - D for D > 2**n - SN.
    Equals count_pulses(mpwm_wave(cfg, D)) for every D.
    """
    _require_mpwm_family(cfg)
    duty = _coerce_duty(cfg, duty)
    d = duty.coarse
    sn = cfg.sn
    size = cfg.steps
    if d <= sn:
        return d
    if d <= size - sn:
        return sn
    return size - d
