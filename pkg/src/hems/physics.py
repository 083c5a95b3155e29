"""State-transition functions for PV, indoor temperature, ESS and EV queues."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import HomeConfig


@dataclass(frozen=True)
class SystemState:
    """Physical and queue state at the start of slot ``t``.

    ``q`` is the EV energy backlog, ``z`` the delay virtual queue and
    ``g_ess`` the stored ESS energy.
    """

    t: int
    temp: float
    q: float
    z: float
    g_ess: float

    def h(self, gamma_shift: float) -> float:
        """Temperature virtual queue H_t = T_t + Gamma."""
        return self.temp + gamma_shift

    def k(self, alpha_shift: float) -> float:
        """ESS virtual queue K_t = G_t + alpha."""
        return self.g_ess + alpha_shift


@dataclass(frozen=True)
class SlotObservation:
    """Exogenous inputs seen at the beginning of a slot.

    ``t_ref_next`` and ``occupied_next`` describe slot t+1.
    """

    price_buy: float
    price_sell: float
    t_out: float
    solar_rho: float
    ev_arrival: float
    t_ref_next: float
    occupied_next: int


@dataclass(frozen=True)
class EvRequest:
    """One charging request: start slot, completion slot, energy (kWh)."""

    start: int
    deadline: int
    energy: float

    def kappa(self, v_max: float) -> int:
        return math.floor(self.energy / v_max) if v_max > 0 else 0

    def tolerance(self, v_max: float) -> int:
        """Slots left for queueing once the whole demand has been submitted."""
        return self.deadline - self.start - self.kappa(v_max)


def pv_output(solar_rho: float, cfg: HomeConfig) -> float:
    """PV power in kW from irradiance in W/m^2."""
    return cfg.theta_pv * cfg.c_pv * solar_rho / 1000.0


def thermal_step(temp: float, t_out: float, e: float, cfg: HomeConfig) -> float:
    eps = cfg.epsilon
    return eps * temp + (1.0 - eps) * (t_out + cfg.eta_over_a * e)


def h_step(h: float, gamma_shift: float, t_out: float, e: float, cfg: HomeConfig) -> float:
    """Update of the shifted temperature queue, written in terms of H itself."""
    eps = cfg.epsilon
    return eps * h + (1.0 - eps) * (gamma_shift + t_out + cfg.eta_over_a * e)


def ess_step(g_ess: float, y: float) -> float:
    return g_ess + y


def k_step(k: float, y: float) -> float:
    return k + y


def ev_arrival(req: EvRequest, t: int, v_max: float) -> float:
    """Energy the request adds to the backlog during slot ``t``."""
    if req.energy <= 0 or v_max <= 0:
        return 0.0
    kappa = req.kappa(v_max)
    if req.start <= t < req.start + kappa:
        return v_max
    if t == req.start + kappa:
        return req.energy - kappa * v_max
    return 0.0


def energy_queue_step(q: float, x: float, a: float) -> float:
    # clamp guards against solver round-off when x is at its upper box
    return max(q - x, 0.0) + a


def delay_queue_step(z: float, q: float, x: float, xi: float) -> float:
    if q > x:
        return max(z - x + xi, 0.0)
    return 0.0


def grid_exchange(e: float, x: float, y: float, r: float) -> float:
    """Grid power; positive is purchase, negative is sale."""
    return e + x + y - r
