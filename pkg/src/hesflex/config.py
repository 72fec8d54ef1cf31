"""Run configuration: flat dotted-key files plus CLI overrides.

The file format is one ``key = value`` assignment per line, ``#`` for
comments. All problems in a file are reported together in a single
:class:`ConfigError` rather than one at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .assets import AssetFleet, BatteryParams, LoadParams, PvParams
from .flexibility import Scenario
from .soc_guard import GuardConfig

__all__ = [
    "RunConfig",
    "ConfigError",
    "parse_config_text",
    "load_config",
    "config_from_mapping",
    "build_fleet",
    "build_guard",
    "config_mapping",
]


class ConfigError(ValueError):
    """One or more bad keys/values; ``errors`` lists all of them."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs, with the reference plant as defaults."""

    scenario: str = "S1"
    capacity_mw: float = 6.5
    lambda_capacity: float = 10.0
    lambda_mileage: float = 1.0
    hours: float = 1.0
    dt_s: float = 2.0
    seed: int = 0
    bias: float = 0.0
    pv_rated_mw: float = 3.0
    irradiance_wm2: float = 1000.0
    batt_p_max_mw: float = 5.0
    batt_e_cap_mwh: float = 5.0
    eta_inv: float = 0.95
    soc_min: float = 0.1
    soc_max: float = 0.9
    soc0: float = 0.5
    load_max_mw: float = 3.0
    guard_enabled: bool = True
    guard_upper: float = 0.6
    guard_lower: float = 0.4
    guard_buffer: float = 0.02
    statistic: str = "p75"


def _to_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


# dotted config key -> (RunConfig field, converter)
_KEYS = {
    "scenario": ("scenario", str),
    "market.capacity_mw": ("capacity_mw", float),
    "market.lambda_capacity": ("lambda_capacity", float),
    "market.lambda_mileage": ("lambda_mileage", float),
    "market.statistic": ("statistic", str),
    "signal.hours": ("hours", float),
    "signal.dt_s": ("dt_s", float),
    "signal.seed": ("seed", int),
    "signal.bias": ("bias", float),
    "pv.rated_mw": ("pv_rated_mw", float),
    "pv.irradiance_wm2": ("irradiance_wm2", float),
    "battery.p_max_mw": ("batt_p_max_mw", float),
    "battery.e_cap_mwh": ("batt_e_cap_mwh", float),
    "battery.eta_inv": ("eta_inv", float),
    "battery.soc_min": ("soc_min", float),
    "battery.soc_max": ("soc_max", float),
    "battery.soc0": ("soc0", float),
    "load.p_max_mw": ("load_max_mw", float),
    "guard.enabled": ("guard_enabled", _to_bool),
    "guard.upper": ("guard_upper", float),
    "guard.lower": ("guard_lower", float),
    "guard.buffer": ("guard_buffer", float),
}

_FIELD_TO_KEY = {field: key for key, (field, _) in _KEYS.items()}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Split a config file into raw key/value strings."""
    raw: dict[str, str] = {}
    errors: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"{source}:{lineno}: expected 'key = value'")
            continue
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in raw:
            errors.append(f"{source}:{lineno}: duplicate key '{key}'")
            continue
        raw[key] = value.strip()
    if errors:
        raise ConfigError(errors)
    return raw


def config_from_mapping(mapping: dict[str, str], source: str = "<config>") -> RunConfig:
    """Convert raw strings into a validated RunConfig.

    Unknown keys, unparsable values, and out-of-range settings are all
    collected and raised together.
    """
    errors: list[str] = []
    values = {}
    for key, raw in mapping.items():
        spec = _KEYS.get(key)
        if spec is None:
            errors.append(f"{source}: unknown key '{key}'")
            continue
        field, conv = spec
        try:
            values[field] = conv(raw)
        except ValueError:
            errors.append(f"{source}: bad value for '{key}': {raw!r}")
    cfg = replace(RunConfig(), **values)
    errors.extend(f"{source}: {msg}" for msg in validate(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


def validate(cfg: RunConfig) -> list[str]:
    """Range checks; returns messages instead of raising."""
    out: list[str] = []
    if cfg.scenario not in Scenario.__members__:
        out.append(f"scenario must be one of {list(Scenario.__members__)}, got '{cfg.scenario}'")
    for name in ("capacity_mw", "hours", "dt_s", "pv_rated_mw", "batt_p_max_mw",
                 "batt_e_cap_mwh", "load_max_mw"):
        if getattr(cfg, name) <= 0:
            out.append(f"{_FIELD_TO_KEY[name]} must be > 0")
    for name in ("lambda_capacity", "lambda_mileage", "irradiance_wm2"):
        if getattr(cfg, name) < 0:
            out.append(f"{_FIELD_TO_KEY[name]} must be >= 0")
    if not 0.0 < cfg.eta_inv <= 1.0:
        out.append("battery.eta_inv must lie in (0, 1]")
    if not 0.0 <= cfg.soc_min < cfg.soc_max <= 1.0:
        out.append("need 0 <= battery.soc_min < battery.soc_max <= 1")
    elif not cfg.soc_min <= cfg.soc0 <= cfg.soc_max:
        out.append("battery.soc0 must lie inside [soc_min, soc_max]")
    if cfg.guard_enabled:
        if not cfg.soc_min <= cfg.guard_lower < cfg.guard_upper <= cfg.soc_max:
            out.append("guard band must sit inside the battery window")
        elif not 0.0 < cfg.guard_buffer <= 0.5 * (cfg.guard_upper - cfg.guard_lower):
            out.append("guard.buffer must lie in (0, half the band width]")
    if cfg.statistic not in ("mean", "p50", "p75", "p95"):
        out.append(f"market.statistic must be mean/p50/p75/p95, got '{cfg.statistic}'")
    if cfg.seed < 0:
        out.append("signal.seed must be >= 0")
    return out


def load_config(path) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    return config_from_mapping(parse_config_text(text, str(path)), str(path))


def build_fleet(cfg: RunConfig) -> AssetFleet:
    return AssetFleet(
        pv=PvParams.scaled_to_rating(cfg.pv_rated_mw),
        battery=BatteryParams(
            p_max=cfg.batt_p_max_mw,
            e_cap=cfg.batt_e_cap_mwh,
            eta_inv=cfg.eta_inv,
            e_min=cfg.soc_min,
            e_max=cfg.soc_max,
        ),
        load=LoadParams(p_max=cfg.load_max_mw),
        dt=cfg.dt_s / 3600.0,
    )


def build_guard(cfg: RunConfig) -> GuardConfig | None:
    if not cfg.guard_enabled:
        return None
    return GuardConfig(cfg.guard_upper, cfg.guard_lower, cfg.guard_buffer)


def config_mapping(cfg: RunConfig) -> dict[str, object]:
    """Dotted-key view of a config, for echoing into reports."""
    return {_FIELD_TO_KEY[f.name]: getattr(cfg, f.name) for f in fields(cfg)}
