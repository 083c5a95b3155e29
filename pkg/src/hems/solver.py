"""Exact solver for the per-slot drift-plus-penalty subproblem.

For fixed queue state the slot objective is

    K*y - (Q+Z)*x + eps(1-eps)H(Gamma + T_out + (eta/A) e)
        + V*(Phi1(g) + gamma*pi*(T_next(e) - T_ref)^2),   g = e + x + y - r

over the boxes of e, x and y. Phi1(g) = max(B g, S g) is convex and piecewise
linear, so the problem splits by the sign of g. With a linear price lam on the
grid power, every variable minimises its own term plus lam*v independently,
and each such best response is monotone in lam. The buy branch uses
lam = V*B, the sell branch lam = V*S, and when neither branch is consistent
with its sign assumption the optimum sits on g = 0 with lam in (V*S, V*B).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import HomeConfig
from .errors import NumericalFailure
from .params import ControllerParams
from .physics import SlotObservation, SystemState, pv_output

_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class P2Instance:
    """Everything one slot decision depends on, as flat scalars."""

    v: float
    price_buy: float
    price_sell: float
    h: float
    q: float
    z: float
    k: float
    temp: float
    gamma_shift: float
    t_out: float
    r: float
    t_ref_next: float
    occupied_next: int
    epsilon: float
    eta_over_a: float
    gamma: float
    e_max: float
    x_max: float
    u_cmax: float
    u_dmax: float
    b_max: float
    s_min: float

    @classmethod
    def from_state(cls, state: SystemState, obs: SlotObservation,
                   params: ControllerParams, cfg: HomeConfig) -> "P2Instance":
        return cls(
            v=params.v,
            price_buy=obs.price_buy,
            price_sell=obs.price_sell,
            h=state.h(params.gamma_shift),
            q=state.q,
            z=state.z,
            k=state.k(params.alpha_shift),
            temp=state.temp,
            gamma_shift=params.gamma_shift,
            t_out=obs.t_out,
            r=pv_output(obs.solar_rho, cfg),
            t_ref_next=obs.t_ref_next,
            occupied_next=obs.occupied_next,
            epsilon=cfg.epsilon,
            eta_over_a=cfg.eta_over_a,
            gamma=cfg.gamma,
            e_max=cfg.e_max,
            x_max=cfg.x_max,
            u_cmax=cfg.u_cmax,
            u_dmax=cfg.u_dmax,
            b_max=cfg.b_max,
            s_min=cfg.s_min,
        )

    @property
    def x_upper(self) -> float:
        return max(0.0, min(self.x_max, self.q))

    @property
    def thermal_slope(self) -> float:
        """eps*(1-eps)*eta/A."""
        return self.epsilon * (1.0 - self.epsilon) * self.eta_over_a


@dataclass(frozen=True)
class Decision:
    e: float
    x: float
    y: float
    g: float
    objective: float


def hvac_thresholds(inst: P2Instance) -> tuple[float, float]:
    """Marginal discomfort cost of HVAC power at e = 0 and at e = e_max."""
    eps = inst.epsilon
    scale = 2.0 * inst.v * inst.gamma * inst.occupied_next * (1.0 - eps) ** 2 * inst.eta_over_a
    coast = (inst.t_ref_next - eps * inst.temp) / (1.0 - eps)
    b_t = scale * (inst.t_out - coast)
    c_t = scale * (inst.t_out + inst.eta_over_a * inst.e_max - coast)
    return b_t, c_t


def p2_objective(inst: P2Instance, e, x, y):
    """Full slot objective (constant terms included); accepts numpy arrays.

    Uses the half-sum form of the energy cost so that it stays independent of
    the branch arithmetic inside ``solve_p2``.
    """
    eps = inst.epsilon
    g = e + x + y - inst.r
    b, s = inst.price_buy, inst.price_sell
    phi1 = (b - s) / 2.0 * np.abs(g) + (b + s) / 2.0 * g
    t_next = eps * inst.temp + (1.0 - eps) * (inst.t_out + inst.eta_over_a * e)
    phi2 = inst.gamma * inst.occupied_next * (t_next - inst.t_ref_next) ** 2
    return (inst.k * y - (inst.q + inst.z) * x
            + eps * (1.0 - eps) * inst.h * (inst.gamma_shift + inst.t_out + inst.eta_over_a * e)
            + inst.v * (phi1 + phi2))


class _Slot:
    """Precomputed coefficients for the best responses of one instance."""

    def __init__(self, inst: P2Instance):
        self.inst = inst
        eps = inst.epsilon
        c1 = (1.0 - eps) * inst.eta_over_a
        c0 = eps * inst.temp + (1.0 - eps) * inst.t_out - inst.t_ref_next
        w = inst.v * inst.gamma * inst.occupied_next
        # e-term: lin_e*e + quad_e*e^2 (+ const)
        self.quad_e = w * c1 * c1
        self.lin_e = inst.thermal_slope * inst.h + 2.0 * w * c1 * c0
        self.cost_x = -(inst.q + inst.z)
        self.cost_y = inst.k
        self.x_hi = inst.x_upper
        self.c0, self.c1, self.w = c0, c1, w

    def ranges(self, lam: float) -> list[tuple[float, float]]:
        """Argmin sets of (e, x, y) when grid power is priced at ``lam``."""
        inst = self.inst
        if self.quad_e > 0.0:
            e = -(self.lin_e + lam) / (2.0 * self.quad_e)
            e = min(max(e, 0.0), inst.e_max)
            e_rng = (e, e)
        else:
            e_rng = _linear_range(self.lin_e + lam, 0.0, inst.e_max)
        x_rng = _linear_range(self.cost_x + lam, 0.0, self.x_hi)
        y_rng = _linear_range(self.cost_y + lam, -inst.u_dmax, inst.u_cmax)
        return [e_rng, x_rng, y_rng]

    def breakpoints(self) -> list[float]:
        inst = self.inst
        pts = []
        if self.x_hi > 0.0:
            pts.append(-self.cost_x)
        if inst.u_cmax + inst.u_dmax > 0.0:
            pts.append(-self.cost_y)
        if self.quad_e == 0.0 and inst.e_max > 0.0:
            pts.append(-self.lin_e)
        return sorted(pts)

    def objective(self, e: float, x: float, y: float) -> float:
        inst = self.inst
        g = e + x + y - inst.r
        phi1 = inst.price_buy * g if g > 0.0 else inst.price_sell * g
        dev = self.c0 + self.c1 * e
        eps = inst.epsilon
        # decision-independent part, added back only for reporting
        const = eps * (1.0 - eps) * inst.h * (inst.gamma_shift + inst.t_out)
        varying = (self.cost_y * y + self.cost_x * x + inst.thermal_slope * inst.h * e
                   + inst.v * phi1 + self.w * dev * dev)
        return varying + const

    def decision(self, e: float, x: float, y: float) -> Decision:
        e, x, y = e + 0.0, x + 0.0, y + 0.0  # drop signed zeros from -u_dmax etc.
        g = e + x + y - self.inst.r
        return Decision(e=e, x=x, y=y, g=g, objective=self.objective(e, x, y))


def _linear_range(coef: float, lo: float, hi: float) -> tuple[float, float]:
    if coef > 0.0:
        return (lo, lo)
    if coef < 0.0:
        return (hi, hi)
    return (lo, hi)


def _pick(rngs: list[tuple[float, float]], target: float) -> tuple[float, float, float]:
    """Point of the box product whose coordinate sum is ``target``.

    Slack is taken up by x, then y, then e, so HVAC power stays as small as
    the tie allows. ``target`` must lie within the range of attainable sums.
    """
    vals = [lo for lo, _ in rngs]
    rem = target - sum(vals)
    for i in (1, 2, 0):
        lo, hi = rngs[i]
        if rem <= 0.0:
            break
        step = min(rem, hi - lo)
        # lo + (hi - lo) can round past hi
        vals[i] = min(lo + step, hi)
        rem -= step
    return vals[0], vals[1], vals[2]


def _sum_range(rngs: list[tuple[float, float]]) -> tuple[float, float]:
    return sum(lo for lo, _ in rngs), sum(hi for _, hi in rngs)


def _better(a: Decision, b: Decision) -> bool:
    """True when ``a`` should replace incumbent ``b``."""
    tol = _TIE_RTOL * (1.0 + abs(a.objective) + abs(b.objective))
    if a.objective < b.objective - tol:
        return True
    if a.objective > b.objective + tol:
        return False
    if abs(a.g) != abs(b.g):
        return abs(a.g) < abs(b.g)
    return a.e < b.e


def _balanced(slot: _Slot, lam_lo: float, lam_hi: float) -> Decision:
    """Optimum on g = 0, bracketed by lam_lo (sum > r) and lam_hi (sum < r)."""
    r = slot.inst.r
    tol = 1e-9 * max(1.0, abs(r))
    lo, hi = lam_lo, lam_hi
    for p in slot.breakpoints():
        if not lo < p < hi:
            continue
        rngs = slot.ranges(p)
        s_lo, s_hi = _sum_range(rngs)
        if s_lo - tol <= r <= s_hi + tol:
            return slot.decision(*_pick(rngs, min(max(r, s_lo), s_hi)))
        if s_lo > r:
            lo = p
        else:
            hi = p
    # Inside (lo, hi) the linear variables sit at fixed box ends and only the
    # HVAC response moves, continuously, so e absorbs the balance exactly.
    rngs = slot.ranges(0.5 * (lo + hi))
    x, y = rngs[1][0], rngs[2][0]
    e = min(max(r - x - y, 0.0), slot.inst.e_max)
    if abs(e + x + y - r) > tol:
        raise NumericalFailure(
            f"no balanced point in multiplier bracket [{lo}, {hi}] (r={r}, e={e}, x={x}, y={y})")
    return slot.decision(e, x, y)


def solve_p2(inst: P2Instance) -> Decision:
    """Global minimiser of the slot objective, ties broken deterministically."""
    slot = _Slot(inst)
    r = inst.r
    lam_buy = inst.v * inst.price_buy
    lam_sell = inst.v * inst.price_sell

    candidates: list[Decision] = []
    rngs = slot.ranges(lam_buy)
    s_lo, s_hi = _sum_range(rngs)
    if s_hi >= r:
        candidates.append(slot.decision(*_pick(rngs, max(s_lo, r))))
    if lam_sell != lam_buy:
        rngs = slot.ranges(lam_sell)
        s_lo, s_hi = _sum_range(rngs)
    if s_lo <= r:
        candidates.append(slot.decision(*_pick(rngs, min(s_hi, r))))
    if not candidates:
        return _balanced(slot, lam_sell, lam_buy)

    best = candidates[0]
    for cand in candidates[1:]:
        if _better(cand, best):
            best = cand
    return best


def oracle_p2(inst: P2Instance, grid_n: int, refine_rounds: int = 0) -> Decision:
    """Brute-force lattice search over (e, x, y); verification only.

    Each refinement round re-grids a box of one lattice step around the
    incumbent, clipped to the feasible boxes.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    full = [(0.0, inst.e_max), (0.0, inst.x_upper), (-inst.u_dmax, inst.u_cmax)]
    box = list(full)
    best_val = math.inf
    best = (0.0, 0.0, 0.0)
    for _ in range(refine_rounds + 1):
        axes = [np.linspace(lo, hi, grid_n) for lo, hi in box]
        ee, xx, yy = np.meshgrid(*axes, indexing="ij")
        vals = p2_objective(inst, ee, xx, yy)
        idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
        val = float(vals[idx])
        if val < best_val:
            best_val = val
            best = (float(ee[idx]), float(xx[idx]), float(yy[idx]))
        new_box = []
        for (lo, hi), (flo, fhi), centre in zip(box, full, best):
            step = (hi - lo) / (grid_n - 1)
            new_box.append((max(flo, centre - step), min(fhi, centre + step)))
        box = new_box
    e, x, y = best
    return Decision(e=e, x=x, y=y, g=e + x + y - inst.r, objective=best_val)


def random_instance(rng: np.random.Generator) -> P2Instance:
    """Random slot instance covering ties, empty boxes and both price regimes."""

    def maybe_zero(p: float, value: float) -> float:
        return 0.0 if rng.random() < p else value

    v = float(rng.uniform(0.05, 10.0))
    gamma = maybe_zero(0.4, float(rng.uniform(0.0, 0.2)))
    if rng.random() < 0.05:
        # near-zero weights make the HVAC response almost a step
        gamma = float(10.0 ** rng.uniform(-40.0, -6.0))
    b = float(rng.uniform(0.1, 1.5))
    s = b if rng.random() < 0.1 else float(rng.uniform(0.0, b))
    temp = float(rng.uniform(10.0, 30.0))
    gamma_shift = float(rng.uniform(-45.0, 5.0))
    q = maybe_zero(0.1, float(rng.uniform(0.0, 15.0)))
    z = maybe_zero(0.3, float(rng.uniform(0.0, 15.0)))
    k = float(rng.uniform(-30.0, 10.0))
    u = rng.random()
    if u < 0.05:
        # exact price ties on the linear variables
        q, z = v * b * 0.5, v * b * 0.5
        k = -v * s
    elif u < 0.1:
        k = -v * b
        q, z = v * s, 0.0
    return P2Instance(
        v=v,
        price_buy=b,
        price_sell=s,
        h=temp + gamma_shift,
        q=q,
        z=z,
        k=k,
        temp=temp,
        gamma_shift=gamma_shift,
        t_out=float(rng.uniform(-5.0, 15.0)),
        r=maybe_zero(0.2, float(rng.uniform(0.0, 8.0))),
        t_ref_next=float(rng.uniform(18.0, 26.0)),
        occupied_next=int(rng.random() < 0.7),
        epsilon=float(rng.uniform(0.8, 0.999)),
        eta_over_a=float(rng.uniform(1.0, 30.0)),
        gamma=gamma,
        e_max=maybe_zero(0.05, float(rng.uniform(0.0, 12.0))),
        x_max=maybe_zero(0.05, float(rng.uniform(0.0, 5.0))),
        u_cmax=maybe_zero(0.1, float(rng.uniform(0.0, 3.0))),
        u_dmax=maybe_zero(0.1, float(rng.uniform(0.0, 3.0))),
        b_max=b + maybe_zero(0.3, float(rng.uniform(0.0, 0.5))),
        s_min=s - maybe_zero(0.3, float(rng.uniform(0.0, s))),
    )
