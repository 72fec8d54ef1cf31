"""Physical models of the hybrid plant assets.

Sign conventions, grid perspective:

- PV generation and battery discharge inject power (MW >= 0).
- The controllable load consumes power (``p_cl`` in MW, >= 0).
- Battery charging power is negative, discharging power positive.
- Battery state of charge (SoC) is per-unit of the pack energy capacity.

Power is MW, energy MWh, duration hours unless a name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

_VOC_CURRENT_TOL_A = 1e-9  # bisection stop on |cell current|
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_SOC_SNAP = 1e-12  # float dust tolerated at the SoC bounds


class SocBoundsError(Exception):
    """Raised when a battery step would leave the SoC window.

    Carries the state clipped back to the nearest bound so callers that
    are allowed to saturate (the SoC guard and the simulation loop) can
    recover; plain callers should treat this as a failed step.
    """

    def __init__(self, soc_raw: float, clipped: "BatteryState"):
        super().__init__(
            f"battery step would move SoC to {soc_raw:.9f}, outside the "
            f"operating window (clipped to {clipped.soc:.9f})"
        )
        self.soc_raw = soc_raw
        self.clipped = clipped


@dataclass(frozen=True, slots=True)
class PvParams:
    """Aggregated single-diode PV plant.

    The plant is ``n_cell`` identical cells behind one inverter. Each
    cell follows the equivalent-circuit law

        i(v) = i_sc - i_0 * (exp(thermal_coeff * v) - 1) - v / r_p
        p(v) = i(v) * (v - i(v) * r_s)

    where ``v`` is the swept junction voltage and ``i_sc`` scales
    linearly with irradiance (``i_sc_stc`` at 1000 W/m2). Plant output
    is ``eta_pv * n_cell * p(v_mpp)``, clamped to [0, p_pv_rated].
    """

    i_sc_stc: float = 3.8
    i_0: float = 6e-10
    r_p: float = 6.6
    r_s: float = 0.005
    thermal_coeff: float = 38.9
    n_cell: float = 1.0
    eta_pv: float = 0.95
    p_pv_rated: float = 3.0

    def __post_init__(self):
        if self.i_sc_stc < 0:
            raise ValueError("i_sc_stc must be >= 0")
        if self.i_0 <= 0:
            raise ValueError("i_0 must be > 0")
        if self.r_p <= 0 or self.r_s < 0:
            raise ValueError("resistances must satisfy r_p > 0 and r_s >= 0")
        if self.thermal_coeff <= 0:
            raise ValueError("thermal_coeff must be > 0")
        if self.n_cell < 1.0:
            raise ValueError("n_cell must be >= 1")
        if not 0.0 < self.eta_pv <= 1.0:
            raise ValueError("eta_pv must lie in (0, 1]")
        if self.p_pv_rated <= 0:
            raise ValueError("p_pv_rated must be > 0")

    @classmethod
    def scaled_to_rating(cls, p_pv_rated: float, **kwargs) -> "PvParams":
        """Build params with ``n_cell`` sized so that clear-sky
        irradiance (1000 W/m2) produces exactly ``p_pv_rated`` MW."""
        base = cls(n_cell=1.0, p_pv_rated=p_pv_rated, **kwargs)
        p_cell_w = _cell_mpp_power(base, 1000.0)
        if p_cell_w <= 0.0:
            raise ValueError("cell parameters produce no power at 1000 W/m2")
        n = p_pv_rated * 1e6 / (base.eta_pv * p_cell_w)
        return replace(base, n_cell=n)


@dataclass(frozen=True, slots=True)
class BatteryParams:
    """Battery energy storage ratings and operating window."""

    p_max: float  # charge/discharge power rating, MW
    e_cap: float  # energy capacity, MWh
    eta_inv: float = 0.95  # inverter efficiency, applied per direction
    e_min: float = 0.1  # lower SoC bound, per-unit
    e_max: float = 0.9  # upper SoC bound, per-unit

    def __post_init__(self):
        if self.p_max <= 0:
            raise ValueError("p_max must be > 0")
        if self.e_cap <= 0:
            raise ValueError("e_cap must be > 0")
        if not 0.0 < self.eta_inv <= 1.0:
            raise ValueError("eta_inv must lie in (0, 1]")
        if not 0.0 <= self.e_min < self.e_max <= 1.0:
            raise ValueError("need 0 <= e_min < e_max <= 1")


@dataclass(frozen=True, slots=True)
class BatteryState:
    """Battery state of charge, per-unit of capacity."""

    soc: float


@dataclass(frozen=True, slots=True)
class LoadParams:
    """Controllable load rating."""

    p_max: float  # MW

    def __post_init__(self):
        if self.p_max < 0:
            raise ValueError("load p_max must be >= 0")


@dataclass(frozen=True, slots=True)
class AssetFleet:
    """One PV plant, one battery, one controllable load, one step size."""

    pv: PvParams
    battery: BatteryParams
    load: LoadParams
    dt: float  # simulation step, hours

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0 hours")


def default_fleet(dt: float = 2.0 / 3600.0) -> AssetFleet:
    """Reference fleet: 3 MW PV, 3 MW load, 5 MW / 5 MWh battery with
    0.95 inverter efficiency and a [0.1, 0.9] SoC window."""
    return AssetFleet(
        pv=PvParams.scaled_to_rating(3.0),
        battery=BatteryParams(p_max=5.0, e_cap=5.0),
        load=LoadParams(p_max=3.0),
        dt=dt,
    )


# ---------------------------------------------------------------------------
# PV equivalent circuit
# ---------------------------------------------------------------------------

def _cell_current(params: PvParams, i_sc: float, v: float) -> float:
    return i_sc - params.i_0 * math.expm1(params.thermal_coeff * v) - v / params.r_p


def _cell_power(params: PvParams, i_sc: float, v: float) -> float:
    i = _cell_current(params, i_sc, v)
    return i * (v - i * params.r_s)


def _open_circuit_voltage(params: PvParams, i_sc: float) -> float:
    """Root of the cell current, found by bisection to 1e-9 A."""
    if i_sc <= 0.0:
        return 0.0
    lo, hi = 0.0, 0.6
    for _ in range(80):
        if _cell_current(params, i_sc, hi) < 0.0:
            break
        lo = hi
        hi *= 2.0
    else:
        raise ValueError("open-circuit voltage bracket not found")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        cur = _cell_current(params, i_sc, mid)
        if abs(cur) <= _VOC_CURRENT_TOL_A or (hi - lo) < 1e-15:
            return mid
        if cur > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _cell_mpp_power(params: PvParams, irradiance: float) -> float:
    """Maximum power point of one cell, in watts.

    Golden-section search of the power curve over [0, v_oc]; the
    single-diode power curve is unimodal on that interval.
    """
    i_sc = params.i_sc_stc * irradiance / 1000.0
    if i_sc <= 0.0:
        return 0.0
    v_oc = _open_circuit_voltage(params, i_sc)
    if v_oc <= 0.0:
        return 0.0
    a, b = 0.0, v_oc
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _cell_power(params, i_sc, c)
    fd = _cell_power(params, i_sc, d)
    for _ in range(200):
        if (b - a) <= 1e-12 * max(1.0, v_oc):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _cell_power(params, i_sc, c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _cell_power(params, i_sc, d)
    best = max(fc, fd, _cell_power(params, i_sc, 0.5 * (a + b)))
    return max(best, 0.0)


def pv_power(params: PvParams, irradiance: float) -> float:
    """Plant output in MW at the cell maximum power point.

    Non-decreasing in irradiance and clamped to [0, p_pv_rated].
    """
    if irradiance < 0.0:
        raise ValueError("irradiance must be >= 0 W/m2")
    p_mw = params.eta_pv * params.n_cell * _cell_mpp_power(params, irradiance) * 1e-6
    if p_mw <= 0.0:
        return 0.0
    return min(p_mw, params.p_pv_rated)


def pv_power_series(params: PvParams, irradiance_values) -> "list[float]":
    """Vector convenience wrapper around :func:`pv_power`.

    Held (repeated) irradiance samples are common after zero-order-hold
    resampling, so results are memoized per distinct input value.
    """
    cache: dict[float, float] = {}
    out = []
    for g in irradiance_values:
        g = float(g)
        p = cache.get(g)
        if p is None:
            p = pv_power(params, g)
            cache[g] = p
        out.append(p)
    return out


def pv_power_interp(params: PvParams, irradiance_values, table_size: int = 1024):
    """Fast approximate power curve for long irradiance series.

    Tabulates :func:`pv_power` on a uniform irradiance grid spanning the
    inputs and interpolates linearly. The power curve is smooth and
    concave-ish in irradiance, so a 1024-point table is accurate to a
    fraction of a kilowatt; use :func:`pv_power` where exactness counts.
    """
    g = np.asarray(irradiance_values, dtype=float)
    if g.size == 0:
        return np.empty(0)
    if np.any(g < 0.0):
        raise ValueError("irradiance must be >= 0 W/m2")
    hi = float(g.max())
    if hi == 0.0:
        return np.zeros(g.shape)
    grid = np.linspace(0.0, hi, max(2, int(table_size)))
    table = np.array([pv_power(params, float(x)) for x in grid])
    return np.interp(g, grid, table)


# ---------------------------------------------------------------------------
# Battery
# ---------------------------------------------------------------------------

def battery_step(
    params: BatteryParams,
    state: BatteryState,
    p_charge: float,
    p_discharge: float,
    dt: float,
    *,
    eta_charge: float | None = None,
    eta_discharge: float | None = None,
) -> BatteryState:
    """Advance the SoC by one step.

    ``p_charge`` must lie in [-p_max, 0], ``p_discharge`` in [0, p_max],
    and at most one of them may be nonzero. The update is

        soc' = soc - (dt / e_cap) * (eta_c * p_charge + p_discharge / eta_d)

    so charging raises the SoC and discharging lowers it, both penalized
    by the inverter efficiency. Per-direction efficiencies default to
    ``params.eta_inv``. A step that would exit [e_min, e_max] raises
    :class:`SocBoundsError` carrying the clipped state.
    """
    eta_c = params.eta_inv if eta_charge is None else eta_charge
    eta_d = params.eta_inv if eta_discharge is None else eta_discharge
    if dt <= 0:
        raise ValueError("dt must be > 0 hours")
    if not (-params.p_max - 1e-9 <= p_charge <= 0.0):
        raise ValueError("p_charge must lie in [-p_max, 0] MW")
    if not (0.0 <= p_discharge <= params.p_max + 1e-9):
        raise ValueError("p_discharge must lie in [0, p_max] MW")
    if abs(p_charge) > 1e-12 and abs(p_discharge) > 1e-12:
        raise ValueError("simultaneous charge and discharge is not allowed")
    soc_next = state.soc - (dt / params.e_cap) * (eta_c * p_charge + p_discharge / eta_d)
    lo, hi = params.e_min, params.e_max
    if soc_next < lo - _SOC_SNAP or soc_next > hi + _SOC_SNAP:
        raise SocBoundsError(soc_next, BatteryState(min(max(soc_next, lo), hi)))
    return BatteryState(min(max(soc_next, lo), hi))


def load_feasible(params: LoadParams, p_cl: float) -> bool:
    """True when the load setpoint lies within [0, p_max]."""
    return 0.0 <= p_cl <= params.p_max
