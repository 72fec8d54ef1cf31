"""Rule-based allocation of a requested deviation to the fleet assets.

Given a scenario, the available PV power, and a deviation request ``dp``
inside the scenario envelope, the allocation rules split the implied net
power between the controllable load, the battery, and (for S4/S5) PV
curtailment such that the power balance

    p_hes = (p_pv - p_curtailed) - p_cl + p_batt

holds exactly with ``p_hes = p0 + dp``. Two closed-form rules exist: the
priority-load rule serves the load first and lets the battery take the
residual, and the green-load rule keeps the load fed from PV alone.
"""

from __future__ import annotations

from dataclasses import dataclass

from .assets import AssetFleet
from .flexibility import FlexEnvelope, Scenario, envelope

_BALANCE_TOL = 1e-9


class InfeasibleDispatchError(ValueError):
    """Requested deviation falls outside the scenario envelope."""

    def __init__(self, scenario: Scenario, dp: float, env: FlexEnvelope):
        super().__init__(
            f"dp = {dp:.9g} MW is outside the {scenario.value} envelope "
            f"[{env.dp_lo:.9g}, {env.dp_hi:.9g}] MW"
        )
        self.scenario = scenario
        self.dp = dp
        self.envelope = env


@dataclass(frozen=True, slots=True)
class DispatchRecord:
    """One executed step of a dispatch trajectory.

    ``dp_req`` is the deviation requested before any envelope clipping
    or battery saturation; the delivered deviation is ``p_hes - p0``.
    ``soc_after`` is the battery SoC once the step has been applied.
    """

    step: int
    p_hes: float
    p0: float
    dp_req: float
    p_pv: float
    p_cl: float
    p_batt: float
    p_curtailed: float
    soc_after: float


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def allocate_priority_load(
    fleet: AssetFleet, p_pv: float, p0: float, dp: float
) -> tuple[float, float]:
    """Load-first split of the target ``p0 + dp``.

    The load soaks up PV beyond the target, the battery covers whatever
    remains, both clamped to their ratings:

        p_cl   = clamp(p_pv - p0 - dp, 0, load.p_max)
        p_batt = clamp(p0 + dp - p_pv + p_cl, -batt.p_max, batt.p_max)
    """
    cl = fleet.load.p_max
    pb = fleet.battery.p_max
    p_cl = _clamp(p_pv - p0 - dp, 0.0, cl)
    p_batt = _clamp(p0 + dp - p_pv + p_cl, -pb, pb)
    return p_cl, p_batt


def allocate_green_load(fleet: AssetFleet, p_pv: float, dp: float) -> tuple[float, float]:
    """Sustainable-load split: the load consumes PV energy only.

    Valid when the load can absorb all available PV (p_pv <= load.p_max).
    With ``D = 2 * batt.p_max + p_pv``:

        p_cl   = clamp(p_pv * (batt.p_max + p_pv / 2 - dp) / D, 0, load.p_max)
        p_batt = clamp(batt.p_max * 2 * dp / D, -batt.p_max, batt.p_max)

    The degenerate fleet D = 0 idles both assets.
    """
    cl = fleet.load.p_max
    pb = fleet.battery.p_max
    den = 2.0 * pb + p_pv
    if den <= 0.0:
        return 0.0, 0.0
    p_cl = _clamp(p_pv * (pb + 0.5 * p_pv - dp) / den, 0.0, cl)
    p_batt = _clamp(pb * 2.0 * dp / den, -pb, pb)
    return p_cl, p_batt


def allocate(
    scenario: Scenario, fleet: AssetFleet, p_pv: float, dp: float
) -> tuple[float, float, float]:
    """Route a deviation request to the scenario's allocation rule.

    Returns ``(p_cl, p_batt, p_curtailed)``. Raises
    :class:`InfeasibleDispatchError` when ``dp`` is outside the envelope
    and ``ValueError`` for S2 with more PV than the load can absorb (the
    green-load rule has no consistent split there).
    """
    env = envelope(scenario, fleet, p_pv)
    if not env.contains(dp):
        raise InfeasibleDispatchError(scenario, dp, env)
    cl = fleet.load.p_max
    pb = fleet.battery.p_max
    if scenario is Scenario.S2:
        if p_pv > cl + 1e-9:
            raise ValueError(
                "green-load allocation requires p_pv <= load.p_max "
                f"(got p_pv = {p_pv:.9g}, load = {cl:.9g} MW)"
            )
        p_cl, p_batt = allocate_green_load(fleet, p_pv, dp)
        return p_cl, p_batt, 0.0
    if scenario is Scenario.S3:
        p_cl = min(p_pv, cl)
        p_batt = _clamp(dp - p_pv + p_cl, -pb, pb)
        return p_cl, p_batt, 0.0
    p_cl, p_batt = allocate_priority_load(fleet, p_pv, env.p0, dp)
    if scenario is Scenario.S1:
        return p_cl, p_batt, 0.0
    # S4/S5: load first, then battery, curtail the remaining surplus.
    surplus = (p_pv - p_cl + p_batt) - (env.p0 + dp)
    p_curt = _clamp(surplus, 0.0, p_pv)
    return p_cl, p_batt, p_curt


def delivered_deviation(records: list[DispatchRecord]) -> list[float]:
    """Delivered flexible power of each step, ``p_hes - p0``."""
    return [r.p_hes - r.p0 for r in records]


def validate_records(
    records: list[DispatchRecord],
    fleet: AssetFleet,
    *,
    scenario: Scenario | None = None,
    soc0: float | None = None,
    eta_charge: float | None = None,
    eta_discharge: float | None = None,
    tol: float = _BALANCE_TOL,
) -> None:
    """Audit a trajectory row by row; raises ValueError on the first violation.

    Checks the power balance residual, asset box constraints, the SoC
    window, and (when ``soc0`` is given) the SoC recursion under the
    fleet's efficiencies.
    """
    batt = fleet.battery
    cl = fleet.load.p_max
    eta_c = batt.eta_inv if eta_charge is None else eta_charge
    eta_d = batt.eta_inv if eta_discharge is None else eta_discharge
    soc_prev = soc0
    for r in records:
        residual = (r.p_pv - r.p_curtailed) - r.p_cl + r.p_batt - r.p_hes
        if abs(residual) > tol:
            raise ValueError(f"step {r.step}: power balance residual {residual:.3e} MW")
        if not (-tol <= r.p_cl <= cl + tol):
            raise ValueError(f"step {r.step}: load setpoint {r.p_cl:.9g} outside [0, {cl}]")
        if abs(r.p_batt) > batt.p_max + tol:
            raise ValueError(f"step {r.step}: battery power {r.p_batt:.9g} beyond rating")
        if r.p_curtailed < -tol or r.p_curtailed > r.p_pv + tol:
            raise ValueError(f"step {r.step}: curtailment {r.p_curtailed:.9g} outside [0, p_pv]")
        if scenario in (Scenario.S1, Scenario.S2, Scenario.S3) and r.p_curtailed > tol:
            raise ValueError(f"step {r.step}: curtailment not allowed in {scenario.value}")
        if not (batt.e_min - tol <= r.soc_after <= batt.e_max + tol):
            raise ValueError(f"step {r.step}: SoC {r.soc_after:.9g} outside the window")
        if soc_prev is not None:
            expect = soc_prev - (fleet.dt / batt.e_cap) * (
                eta_c * min(r.p_batt, 0.0) + max(r.p_batt, 0.0) / eta_d
            )
            if abs(expect - r.soc_after) > tol:
                raise ValueError(
                    f"step {r.step}: SoC recursion off by {expect - r.soc_after:.3e}"
                )
            soc_prev = r.soc_after
