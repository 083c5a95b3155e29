"""Home configuration: physical and economic constants plus validation.

All temperatures, the conductivity ``A`` and the discomfort weight share one
temperature unit (Celsius by default). Slots are unit length, so kW and kWh
are interchangeable everywhere.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import AssumptionViolated, RangeError


@dataclass(frozen=True)
class HomeConfig:
    """Constants of one smart home. Defaults reproduce the reference setup."""

    slot_hours: float = 1.0
    epsilon: float = 0.985
    eta: float = 1.0
    conductivity_a: float = 1.0 / 15.0
    e_max: float = 8.0
    t_min: float = 15.0
    t_max: float = 25.0
    t_out_min: float = 0.0
    t_out_max: float = 10.0
    t_ref_min: float = 22.5
    t_ref_max: float = 22.5
    b_min: float = 0.5
    b_max: float = 1.0
    s_min: float = 0.45
    s_max: float = 0.9
    gamma: float = 0.0
    g_min_ess: float = 5.0
    g_max_ess: float = 20.0
    u_cmax: float = 1.0
    u_dmax: float = 1.0
    v_max: float = 3.0
    x_max: float = 3.0
    a_max: float = 3.0
    r_tolerance: int = 5
    theta_pv: float = 0.2
    c_pv: float = 30.0
    sell_ratio: float = 0.9
    # initial conditions and labels
    t_init: float = 22.5
    g_init: float = 12.5
    currency: str = "RMB"

    @property
    def eta_over_a(self) -> float:
        return self.eta / self.conductivity_a

    def replace(self, **changes: Any) -> "HomeConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HomeConfig":
        """Build from a JSON-like mapping.

        Unknown keys are rejected. ``omega`` (thermal time constant, hours) may
        be given instead of ``epsilon``; then epsilon = exp(-slot_hours/omega).
        """
        known = {f.name for f in dataclasses.fields(cls)}
        data = dict(data)
        omega = data.pop("omega", None)
        unknown = sorted(set(data) - known)
        if unknown:
            raise RangeError(f"unknown config field(s): {', '.join(unknown)}")
        if omega is not None:
            if "epsilon" in data:
                raise RangeError("give either 'epsilon' or 'omega', not both")
            omega = float(omega)
            if omega <= 0:
                raise RangeError(f"omega must be positive, got {omega}")
            data["epsilon"] = math.exp(-float(data.get("slot_hours", 1.0)) / omega)
        kwargs: dict[str, Any] = {}
        for f in dataclasses.fields(cls):
            if f.name not in data:
                continue
            value = data[f.name]
            if f.name == "currency":
                kwargs[f.name] = str(value)
            elif f.name == "r_tolerance":
                if isinstance(value, bool) or int(value) != value:
                    raise RangeError(f"r_tolerance must be an integer, got {value!r}")
                kwargs[f.name] = int(value)
            else:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise RangeError(f"{f.name} must be a number, got {value!r}")
                kwargs[f.name] = float(value)
        return cls(**kwargs)


def load_config(path: str | Path) -> HomeConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RangeError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise RangeError(f"{path}: config must be a JSON object")
    return HomeConfig.from_dict(data)


def compute_psi(cfg: HomeConfig) -> float:
    """Worst-case one-slot temperature swing that the comfort band must exceed."""
    return (1.0 - cfg.epsilon) * (cfg.t_out_max - cfg.t_out_min + cfg.eta_over_a * cfg.e_max)


def _check_ranges(cfg: HomeConfig) -> None:
    if cfg.slot_hours != 1.0:
        raise RangeError("slot_hours must be 1 (power and energy are used interchangeably)")
    if not 0.0 < cfg.epsilon < 1.0:
        raise RangeError(f"epsilon must lie in (0, 1), got {cfg.epsilon}")
    if cfg.eta <= 0 or cfg.conductivity_a <= 0:
        raise RangeError("eta and conductivity_a must be positive")
    for name in ("e_max", "u_cmax", "u_dmax", "v_max", "x_max", "a_max",
                 "theta_pv", "c_pv", "gamma", "g_min_ess"):
        value = getattr(cfg, name)
        if not value >= 0:
            raise RangeError(f"{name} must be >= 0, got {value}")
    pairs = [("t_min", "t_max", True), ("t_out_min", "t_out_max", False),
             ("t_ref_min", "t_ref_max", False), ("g_min_ess", "g_max_ess", True),
             ("b_min", "b_max", False), ("s_min", "s_max", False)]
    for lo, hi, strict in pairs:
        a, b = getattr(cfg, lo), getattr(cfg, hi)
        if (a >= b) if strict else (a > b):
            op = "<" if strict else "<="
            raise RangeError(f"need {lo} {op} {hi}, got {a} and {b}")
    if cfg.s_min < 0:
        raise RangeError(f"s_min must be >= 0, got {cfg.s_min}")
    if cfg.b_max <= cfg.s_min:
        raise RangeError("b_max must exceed s_min")
    if cfg.a_max > cfg.v_max:
        raise RangeError("a_max cannot exceed v_max (one slot adds at most v_max)")
    if cfg.r_tolerance < 2:
        raise RangeError(f"r_tolerance must be >= 2, got {cfg.r_tolerance}")
    if not 0.0 < cfg.sell_ratio <= 1.0:
        raise RangeError(f"sell_ratio must lie in (0, 1], got {cfg.sell_ratio}")
    if not cfg.t_min <= cfg.t_init <= cfg.t_max:
        raise RangeError(f"t_init={cfg.t_init} outside comfort band")
    if not cfg.g_min_ess <= cfg.g_init <= cfg.g_max_ess:
        raise RangeError(f"g_init={cfg.g_init} outside ESS band")


def validate_config(cfg: HomeConfig) -> HomeConfig:
    """Check ranges and the three controllability assumptions.

    Returns ``cfg`` unchanged on success.
    """
    _check_ranges(cfg)
    if not cfg.t_out_max <= cfg.t_max:
        raise AssumptionViolated("17", cfg.t_out_max, cfg.t_max, "t_out_max <= t_max")
    heat = cfg.eta_over_a * cfg.e_max + cfg.t_out_min
    if not heat >= cfg.t_min:
        raise AssumptionViolated("18", heat, cfg.t_min, "(eta/A)e_max + t_out_min >= t_min")
    psi = compute_psi(cfg)
    band = cfg.t_max - cfg.t_min
    if not band > psi:
        raise AssumptionViolated("19", band, psi, "t_max - t_min > psi")
    return cfg
