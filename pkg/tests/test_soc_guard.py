"""SoC guard: taper arithmetic, band checks, and containment."""

import numpy as np
import pytest

from hesflex import (
    BatteryParams,
    BatteryState,
    GuardConfig,
    battery_step,
    check_band,
    containment_ratio,
    guard_power_cap,
    guard_step,
)

BATT = BatteryParams(p_max=5.0, e_cap=5.0, eta_inv=0.95)
CFG = GuardConfig(e_upper=0.6, e_lower=0.4, buffer=0.02)


def test_taper_halves_the_charge_near_the_upper_edge():
    """Hand check: (0.6 - 0.59) / 0.02 = 0.5, so a 5 MW charge request
    is capped at 2.5 MW."""
    assert guard_power_cap(CFG, BATT, 0.59, -5.0) == pytest.approx(-2.5, abs=1e-12)


def test_taper_halves_the_discharge_near_the_lower_edge():
    assert guard_power_cap(CFG, BATT, 0.41, 5.0) == pytest.approx(2.5, abs=1e-12)


def test_no_taper_mid_band():
    for p in (-5.0, -0.3, 0.0, 0.3, 5.0):
        assert guard_power_cap(CFG, BATT, 0.5, p) == p


def test_taper_is_direction_gated():
    # near the upper edge only charging is limited
    assert guard_power_cap(CFG, BATT, 0.59, 5.0) == 5.0
    # near the lower edge only discharging is limited
    assert guard_power_cap(CFG, BATT, 0.41, -5.0) == -5.0


def test_cap_is_zero_outside_the_band():
    assert guard_power_cap(CFG, BATT, 0.61, -5.0) == 0.0
    assert guard_power_cap(CFG, BATT, 0.39, 5.0) == 0.0


def test_cap_never_amplifies_small_requests():
    # a request below the cap passes through untouched
    assert guard_power_cap(CFG, BATT, 0.59, -1.0) == -1.0
    assert guard_power_cap(CFG, BATT, 0.41, 0.7) == 0.7


def test_guard_step_matches_battery_step():
    p, soc = guard_step(CFG, BATT, 0.59, -5.0, 2.0 / 3600.0)
    assert p == pytest.approx(-2.5, abs=1e-12)
    ref = battery_step(BATT, BatteryState(0.59), p, 0.0, 2.0 / 3600.0)
    assert soc == pytest.approx(ref.soc, abs=1e-15)


def test_guard_step_efficiency_override():
    p, soc = guard_step(CFG, BATT, 0.5, 5.0, 2.0 / 3600.0, eta_discharge=1.0)
    assert p == 5.0
    assert soc == pytest.approx(0.5 - (2.0 / 3600.0), abs=1e-15)


def test_containment_ratio_small_at_two_seconds():
    # worst one-step SoC move is far below the buffer at a 2 s cadence
    ratio = containment_ratio(CFG, BATT, 2.0 / 3600.0)
    expect = ((2.0 / 3600.0) / 5.0) * (5.0 / 0.95) / 0.02
    assert ratio == pytest.approx(expect, rel=1e-12)
    assert ratio < 1.0


def test_containment_ratio_flags_coarse_steps():
    assert containment_ratio(CFG, BATT, 0.25) > 1.0


def test_band_containment_under_random_abuse(rng):
    """Adversarial full-rating requests cannot push the SoC out of the
    band when the per-step move fits inside the buffer."""
    soc = 0.5
    lo, hi = 1.0, 0.0
    for _ in range(5000):
        p_req = float(rng.choice([-5.0, 5.0]))
        _, soc = guard_step(CFG, BATT, soc, p_req, 2.0 / 3600.0)
        lo, hi = min(lo, soc), max(hi, soc)
    assert CFG.e_lower <= lo and hi <= CFG.e_upper


def test_guard_config_validation():
    with pytest.raises(ValueError):
        GuardConfig(e_upper=0.4, e_lower=0.6, buffer=0.02)
    with pytest.raises(ValueError):
        GuardConfig(e_upper=0.6, e_lower=0.4, buffer=0.0)
    with pytest.raises(ValueError):
        GuardConfig(e_upper=0.6, e_lower=0.4, buffer=0.2)


def test_with_default_buffer():
    # the default buffer is a tenth of the band width
    cfg = GuardConfig.with_default_buffer(0.7, 0.3)
    assert (cfg.e_upper, cfg.e_lower) == (0.7, 0.3)
    assert cfg.buffer == pytest.approx(0.04, abs=1e-15)


def test_check_band_requires_band_inside_window():
    with pytest.raises(ValueError):
        check_band(GuardConfig(e_upper=0.95, e_lower=0.4, buffer=0.02), BATT)
    with pytest.raises(ValueError):
        check_band(GuardConfig(e_upper=0.6, e_lower=0.05, buffer=0.02), BATT)
    check_band(CFG, BATT)  # the reference band is fine
