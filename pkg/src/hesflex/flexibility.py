"""Real-time flexibility envelopes of the hybrid plant.

An envelope is the nominal net power ``p0`` plus the closed interval
[dp_lo, dp_hi] of deviations the fleet can deliver around it during one
step. Five operating modes are supported, differing in how the
controllable load is parked and whether PV may be curtailed:

- S1  load parked at half rating, no curtailment, maximum symmetric range
- S2  load fed from PV only (sustainable load), no curtailment
- S3  load matched to PV, battery provides the whole (smallest) range
- S4  load parked mid-range with curtailment allowed, widest symmetric range
- S5  one-sided pricing of the resources: full load + battery down, battery
      plus available PV up (asymmetric)

All powers are MW. ``p_pv`` is the currently available PV power.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .assets import AssetFleet


class Scenario(enum.Enum):
    """Operating mode selecting a nominal trajectory and envelope."""

    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"
    S5 = "S5"


@dataclass(frozen=True, slots=True)
class FlexEnvelope:
    """Nominal power and admissible deviation interval for one step."""

    p0: float
    dp_lo: float
    dp_hi: float

    def __post_init__(self):
        if not (self.dp_lo <= 0.0 <= self.dp_hi):
            raise ValueError("envelope must contain dp = 0")

    def contains(self, dp: float) -> bool:
        """Closed-interval membership test."""
        return self.dp_lo <= dp <= self.dp_hi

    @property
    def width(self) -> float:
        return self.dp_hi - self.dp_lo


def envelope(scenario: Scenario, fleet: AssetFleet, p_pv: float) -> FlexEnvelope:
    """Envelope of the fleet for one step at PV availability ``p_pv``."""
    if p_pv < 0.0:
        raise ValueError("p_pv must be >= 0 MW")
    pb = fleet.battery.p_max
    cl = fleet.load.p_max
    if scenario is Scenario.S1:
        half = pb + 0.5 * cl
        return FlexEnvelope(p_pv - 0.5 * cl, -half, half)
    if scenario is Scenario.S2:
        base = 0.5 * min(p_pv, cl)
        half = pb + base
        return FlexEnvelope(base, -half, half)
    if scenario is Scenario.S3:
        return FlexEnvelope(0.0, -pb, pb)
    if scenario is Scenario.S4:
        half = pb + 0.5 * (p_pv + cl)
        return FlexEnvelope(0.5 * (p_pv - cl), -half, half)
    if scenario is Scenario.S5:
        return FlexEnvelope(0.0, -(pb + cl), pb + p_pv)
    raise ValueError(f"unknown scenario: {scenario!r}")
