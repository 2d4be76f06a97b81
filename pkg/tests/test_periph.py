"""Peripheral emulation tests: stream equivalence, buffering, fault atomicity."""

import numpy as np
import pytest

from mpwmdac import ModulatorConfig, ParameterError, mpwm_wave
from mpwmdac.periph import (
    ADDR_CTRL,
    ADDR_DUTY,
    ADDR_HRDUTY,
    ADDR_NBITS,
    ADDR_STATUS,
    FINE_BITS,
    LOCK_LATENCY_CYCLES,
    FaultCode,
    MpwmPeripheral,
    PeripheralFault,
    run_script,
    trace_to_csv,
    trace_to_vcd,
)


def enabled_periph(n: int, sf: int, duty: int) -> MpwmPeripheral:
    p = MpwmPeripheral()
    p.reg_write(ADDR_NBITS, n)
    p.reg_write(ADDR_DUTY, duty)
    p.reg_write(ADDR_CTRL, (sf << 4) | 1)
    return p


def locked_stream(p: MpwmPeripheral, n: int, periods: int = 1) -> np.ndarray:
    """Step past the lock latency to the next period boundary, then capture."""
    size = 1 << n
    warmup = LOCK_LATENCY_CYCLES
    warmup += (-warmup) % size  # advance to a period boundary
    pre = p.step(warmup)
    assert not np.any(pre[:LOCK_LATENCY_CYCLES])
    return p.step(periods * size)


def test_stream_equals_pure_generator():
    for n, sf, duty in ((12, 3, 100), (12, 0, 2048), (10, 5, 700), (8, 7, 255)):
        p = enabled_periph(n, sf, duty)
        stream = locked_stream(p, n, periods=2)
        wave = mpwm_wave(ModulatorConfig.mpwm(n, sf), duty).bits
        assert np.array_equal(stream, np.tile(wave, 2)), (n, sf, duty)


def test_stream_duty_exactness():
    p = enabled_periph(12, 3, 100)
    period = locked_stream(p, 12)
    assert int(period.sum()) == 100


def test_duty_write_latches_at_period_boundary():
    n, sf = 8, 2
    p = enabled_periph(n, sf, 37)
    locked_stream(p, n, periods=1)  # consume warmup + one full period
    half = p.step(128)
    p.reg_write(ADDR_DUTY, 200)  # mid-period write
    rest = p.step(128)
    old = mpwm_wave(ModulatorConfig.mpwm(n, sf), 37).bits
    assert np.array_equal(np.concatenate([half, rest]), old)
    new = p.step(256)
    assert np.array_equal(new, mpwm_wave(ModulatorConfig.mpwm(n, sf), 200).bits)


def test_duty_visible_before_enable():
    p = MpwmPeripheral()
    p.reg_write(ADDR_NBITS, 8)
    p.reg_write(ADDR_DUTY, 99)
    assert p.reg_read(ADDR_DUTY) == 99
    p.reg_write(ADDR_CTRL, 1)
    assert int(locked_stream(p, 8).sum()) == 99


def test_lock_latency_boundary():
    p = enabled_periph(12, 0, 10)
    p.step(LOCK_LATENCY_CYCLES - 1)
    assert p.reg_read(ADDR_STATUS) == 0
    p.step(1)
    assert p.reg_read(ADDR_STATUS) == 1


def test_output_low_until_locked():
    p = enabled_periph(12, 0, 4095)  # nearly always-high once running
    pre = p.step(LOCK_LATENCY_CYCLES)
    assert not np.any(pre)
    post = p.step(16)
    assert np.all(post == 1)


def test_step_disabled_emits_zeros():
    p = MpwmPeripheral()
    assert not np.any(p.step(500))
    with pytest.raises(ParameterError, match="cycles"):
        p.step(0)


def test_determinism():
    runs = []
    for _ in range(2):
        p = enabled_periph(10, 4, 321)
        runs.append(locked_stream(p, 10, periods=3))
    assert np.array_equal(runs[0], runs[1])


def test_reserved_bits_read_back_zero():
    p = MpwmPeripheral()
    p.reg_write(ADDR_CTRL, 0xFE)  # reserved bits set, EN clear
    assert p.reg_read(ADDR_CTRL) == 0xF0
    p.reg_write(ADDR_HRDUTY, 0x7F)
    assert p.reg_read(ADDR_HRDUTY) == 0xF
    assert p.reg_read(ADDR_HRDUTY) < (1 << FINE_BITS)


@pytest.mark.parametrize(
    "setup,addr,value,code",
    [
        (False, ADDR_STATUS, 1, FaultCode.READ_ONLY),
        (True, ADDR_NBITS, 10, FaultCode.CONFIG_LOCKED),
        (True, ADDR_CTRL, (5 << 4) | 1, FaultCode.CONFIG_LOCKED),
        (False, 0x20, 1, FaultCode.UNMAPPED_ADDRESS),
        (False, ADDR_NBITS, 3, FaultCode.BAD_VALUE),
        (False, ADDR_NBITS, 17, FaultCode.BAD_VALUE),
        (False, ADDR_CTRL, (9 << 4) | 1, FaultCode.BAD_VALUE),  # SF >= n=8
        (False, ADDR_DUTY, -1, FaultCode.BAD_VALUE),
    ],
)
def test_faults_are_distinct_and_atomic(setup, addr, value, code):
    p = MpwmPeripheral()
    p.reg_write(ADDR_NBITS, 8)
    p.reg_write(ADDR_DUTY, 40)
    if setup:
        p.reg_write(ADDR_CTRL, (2 << 4) | 1)
        p.step(17)
    before = p.snapshot()
    with pytest.raises(PeripheralFault) as err:
        p.reg_write(addr, value)
    assert err.value.code == code
    assert p.snapshot() == before


def test_read_unmapped_faults():
    p = MpwmPeripheral()
    with pytest.raises(PeripheralFault) as err:
        p.reg_read(0x44)
    assert err.value.code == FaultCode.UNMAPPED_ADDRESS


def test_run_script_matches_generator():
    n, sf, duty = 12, 3, 100
    size = 1 << n
    warmup = LOCK_LATENCY_CYCLES + ((-LOCK_LATENCY_CYCLES) % size)
    script = f"""
# configure and enable
write 0x04 {n}
write 0x08 {duty}
write 0x00 0x{(sf << 4) | 1:02X}
step {warmup}
step {size}
read 0x10
"""
    result = run_script(script)
    tail = result.bits[-size:]
    wave = mpwm_wave(ModulatorConfig.mpwm(n, sf), duty).bits
    assert np.array_equal(tail, wave)
    assert result.reads == [(ADDR_STATUS, 1)]
    assert result.final_registers["DUTY"] == duty


def test_run_script_empty():
    result = run_script("\n# nothing\n")
    assert result.bits.size == 0
    assert result.final_registers["NBITS"] == 12


def test_run_script_syntax_error_names_line():
    with pytest.raises(ParameterError, match="line 3"):
        run_script("write 0x04 8\nstep 4\nfrobnicate 1 2\n")


def test_run_script_fault_names_line():
    with pytest.raises(PeripheralFault, match="line 2") as err:
        run_script("write 0x04 8\nwrite 0x10 1\n")
    assert err.value.code == FaultCode.READ_ONLY


def test_vcd_and_csv_dumps():
    bits = np.array([0, 0, 1, 1, 0], dtype=np.uint8)
    vcd = trace_to_vcd(bits, clock_ns=10.0)
    assert "$timescale 1ns $end" in vcd
    assert "#20\n1!" in vcd
    assert "#40\n0!" in vcd
    csv = trace_to_csv(bits)
    lines = csv.splitlines()
    assert lines[0] == "cycle,out"
    assert lines[1:] == ["0,0", "1,0", "2,1", "3,1", "4,0"]
