"""Closed-form controller parameters and the bounds they guarantee.

``derive_controller_params`` picks the tradeoff weight ``V``, the temperature
shift ``Gamma``, the ESS shift ``alpha`` and the delay-queue rate ``xi`` so
that the comfort band, the ESS band and the EV deadline all hold for every
slot (given observations inside the configured boxes).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .config import HomeConfig, compute_psi, validate_config
from .errors import InfeasibleParameters, RangeError

# relative slack for floating-point coincidence of interval endpoints
_SNAP_RTOL = 1e-9
# guards the ceiling in D^max against round-up at exact integers
_CEIL_GUARD = 1e-9


@dataclass(frozen=True)
class ControllerParams:
    v: float
    gamma_shift: float
    alpha_shift: float
    xi: float


@dataclass(frozen=True)
class PerformanceGap:
    omega_0: float
    omega_1: float
    omega_2: float
    omega_3: float
    upsilon: float
    theta: float
    gap_per_v: float


@dataclass(frozen=True)
class DerivedBounds:
    v1_max: float
    v2_max: float
    gamma_min: float
    gamma_max: float
    alpha_min: float
    alpha_max: float
    psi: float
    d: float
    f: float
    h: float
    m: float
    b_min_coeff: float
    c_max_coeff: float
    q_max: float
    z_max: float
    d_max: int
    theta: float
    upsilon: float
    omega_0: float
    omega_1: float
    omega_2: float
    omega_3: float

    def to_dict(self) -> dict:
        return asdict(self)


def _thermal_slope(cfg: HomeConfig) -> float:
    """eps*(1-eps)*eta/A: sensitivity of the temperature-queue term to e."""
    return cfg.epsilon * (1.0 - cfg.epsilon) * cfg.eta_over_a


def _discomfort_brackets(cfg: HomeConfig) -> tuple[float, float]:
    """Extremes of the bracketed factors of the per-slot HVAC thresholds.

    The per-slot HVAC thresholds are 2*V*gamma*pi*(1-eps)^2*(eta/A) times a bracket
    that depends on T_t, T_out, T_ref. The lowest bracket over the boxes
    (and pi in {0, 1}) is returned first, the highest second.
    """
    eps = cfg.epsilon
    low = cfg.t_out_min - (cfg.t_ref_max - eps * cfg.t_min) / (1.0 - eps)
    high = (cfg.t_out_max + cfg.eta_over_a * cfg.e_max
            - (cfg.t_ref_min - eps * cfg.t_max) / (1.0 - eps))
    # pi = 0 makes the threshold exactly zero, so zero is always attainable
    return min(0.0, low), max(0.0, high)


def _threshold_scale(cfg: HomeConfig) -> float:
    return 2.0 * cfg.gamma * (1.0 - cfg.epsilon) ** 2 * cfg.eta_over_a


def compute_performance_gap(cfg: HomeConfig, params: ControllerParams) -> PerformanceGap:
    eps = cfg.epsilon
    k = cfg.eta_over_a
    gam = params.gamma_shift
    omega_0 = ((1.0 - eps) ** 2 / 2.0) * max(
        (gam + cfg.t_out_min) ** 2, (gam + cfg.t_out_max + k * cfg.e_max) ** 2)
    omega_1 = (cfg.x_max ** 2 + cfg.a_max ** 2) / 2.0
    omega_2 = 0.5 * max(params.xi ** 2, cfg.x_max ** 2)
    omega_3 = max(cfg.u_cmax, cfg.u_dmax) ** 2 / 2.0
    upsilon = (eps * (1.0 - eps) * (cfg.t_max + gam)
               * (cfg.t_max + gam + (cfg.t_out_max - cfg.t_out_min)))
    theta = omega_0 + omega_1 + omega_2 + omega_3 + upsilon
    return PerformanceGap(omega_0, omega_1, omega_2, omega_3, upsilon, theta,
                          theta / params.v if params.v > 0 else math.inf)


def v_caps(cfg: HomeConfig) -> tuple[float, float]:
    """(V_1^max, V_2^max) for a validated config."""
    eps = cfg.epsilon
    k = cfg.eta_over_a
    spread = cfg.b_max - cfg.s_min
    d = cfg.t_max - cfg.t_min - (1.0 - eps) * (cfg.t_out_max + k * cfg.e_max - cfg.t_out_min)
    low, high = _discomfort_brackets(cfg)
    f = _threshold_scale(cfg) * (high - low)
    v1 = (1.0 - eps) * k * d / (spread + f)
    v2 = (cfg.g_max_ess - cfg.g_min_ess - (cfg.u_cmax + cfg.u_dmax)) / spread
    return v1, v2


def gamma_interval(cfg: HomeConfig, v: float) -> tuple[float, float]:
    """Raw (Gamma^min, Gamma^max) for weight ``v``; may be empty."""
    eps = cfg.epsilon
    k = cfg.eta_over_a
    low, high = _discomfort_brackets(cfg)
    scale = v * _threshold_scale(cfg)
    b_min, c_max = scale * low, scale * high
    h = (1.0 - eps) * (cfg.t_out_max + k * cfg.e_max) - cfg.t_max
    m = (1.0 - eps) * cfg.t_out_min - cfg.t_min
    slope = _thermal_slope(cfg)
    g_min = (v * cfg.s_min + b_min) / -slope + h / eps
    g_max = (v * cfg.b_max + c_max) / -slope + m / eps
    return g_min, g_max


def alpha_interval(cfg: HomeConfig, v: float) -> tuple[float, float]:
    """Raw (alpha^min, alpha^max) for weight ``v``; may be empty."""
    a_min = -v * cfg.s_min + cfg.u_cmax - cfg.g_max_ess
    a_max = -v * cfg.b_max - cfg.u_dmax - cfg.g_min_ess
    return a_min, a_max


def _snap(lo: float, hi: float, what: str) -> tuple[float, float]:
    if lo <= hi:
        return lo, hi
    if lo - hi <= _SNAP_RTOL * max(1.0, abs(lo), abs(hi)):
        return hi, hi
    raise InfeasibleParameters(f"{what} interval is empty: [{lo}, {hi}]")


def max_delay(v: float, b_max: float, a_max: float, xi: float) -> int:
    return math.ceil((2.0 * v * b_max + a_max + xi) / xi - _CEIL_GUARD)


def derive_controller_params(
    cfg: HomeConfig,
    v: float | None = None,
    gamma_shift: float | None = None,
    alpha_shift: float | None = None,
) -> tuple[ControllerParams, DerivedBounds]:
    """Derive (V, Gamma, alpha, xi) and every bound they imply.

    Defaults follow the reference settings: V = min(V_1^max, V_2^max),
    Gamma = Gamma^max, alpha = alpha^max and xi = (2 V B^max + v^max)/(R - 1).
    Overrides must stay inside the feasible ranges.
    """
    validate_config(cfg)
    eps = cfg.epsilon
    k = cfg.eta_over_a
    d = cfg.t_max - cfg.t_min - (1.0 - eps) * (cfg.t_out_max + k * cfg.e_max - cfg.t_out_min)
    if d <= 0:
        raise InfeasibleParameters(f"d = {d} <= 0; comfort band too narrow")
    v1, v2 = v_caps(cfg)
    if v2 <= 0:
        raise InfeasibleParameters(
            f"V_2^max = {v2} <= 0; ESS capacity range does not exceed u_cmax + u_dmax")
    cap = min(v1, v2)
    if v is None:
        v = cap
    elif not 0.0 < v <= cap:
        raise RangeError(f"V override {v} outside (0, {cap}]")

    g_lo, g_hi = _snap(*gamma_interval(cfg, v), "Gamma")
    a_lo, a_hi = _snap(*alpha_interval(cfg, v), "alpha")
    if gamma_shift is None:
        gamma_shift = g_hi
    elif not g_lo <= gamma_shift <= g_hi:
        raise RangeError(f"Gamma override {gamma_shift} outside [{g_lo}, {g_hi}]")
    if alpha_shift is None:
        alpha_shift = a_hi
    elif not a_lo <= alpha_shift <= a_hi:
        raise RangeError(f"alpha override {alpha_shift} outside [{a_lo}, {a_hi}]")

    xi = (2.0 * v * cfg.b_max + cfg.v_max) / (cfg.r_tolerance - 1)
    if cfg.x_max < max(cfg.a_max, xi):
        raise InfeasibleParameters(
            f"x_max = {cfg.x_max} < max(a_max, xi) = {max(cfg.a_max, xi)}")
    params = ControllerParams(v=v, gamma_shift=gamma_shift, alpha_shift=alpha_shift, xi=xi)

    low, high = _discomfort_brackets(cfg)
    scale = _threshold_scale(cfg)
    gap = compute_performance_gap(cfg, params)
    bounds = DerivedBounds(
        v1_max=v1,
        v2_max=v2,
        gamma_min=g_lo,
        gamma_max=g_hi,
        alpha_min=a_lo,
        alpha_max=a_hi,
        psi=compute_psi(cfg),
        d=d,
        f=scale * (high - low),
        h=(1.0 - eps) * (cfg.t_out_max + k * cfg.e_max) - cfg.t_max,
        m=(1.0 - eps) * cfg.t_out_min - cfg.t_min,
        b_min_coeff=v * scale * low + 0.0,  # normalise -0.0
        c_max_coeff=v * scale * high,
        q_max=v * cfg.b_max + cfg.a_max,
        z_max=v * cfg.b_max + xi,
        d_max=max_delay(v, cfg.b_max, cfg.a_max, xi),
        theta=gap.theta,
        upsilon=gap.upsilon,
        omega_0=gap.omega_0,
        omega_1=gap.omega_1,
        omega_2=gap.omega_2,
        omega_3=gap.omega_3,
    )
    return params, bounds
