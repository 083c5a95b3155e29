"""Online control loop for the proposed policy and the three baselines.

``proposed`` solves the slot subproblem with the derived parameters and then
applies the vacancy shortcut; ``b1`` tracks the comfort setpoint, ``b2``
pre-heats on a one-slot price lookahead, and ``b3`` is ``proposed`` with the
battery disabled. Baselines serve EV demand immediately and never use the ESS.
"""

from __future__ import annotations

import dataclasses
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import HomeConfig, validate_config
from .errors import BoundsError, InfeasibleInitialState, RangeError, TraceLengthMismatch
from .metrics import discomfort_cost, energy_cost
from .params import ControllerParams, DerivedBounds, derive_controller_params
from .physics import (
    EvRequest,
    SlotObservation,
    SystemState,
    delay_queue_step,
    energy_queue_step,
    ess_step,
    grid_exchange,
    pv_output,
    thermal_step,
)
from .solver import Decision, P2Instance, p2_objective, solve_p2
from .traces import TraceBundle, arrival_stream

POLICIES = ("proposed", "b1", "b2", "b3")
# backlog below this is treated as fully served when measuring delay
_DRAIN_ATOL = 1e-9


@dataclass(frozen=True)
class Policy:
    """A control policy bound to its effective config and parameters."""

    kind: str
    cfg: HomeConfig
    params: ControllerParams | None = None
    bounds: DerivedBounds | None = None


def make_policy(kind: str, cfg: HomeConfig, v: float | None = None,
                gamma_shift: float | None = None,
                alpha_shift: float | None = None) -> Policy:
    kind = kind.lower()
    if kind not in POLICIES:
        raise RangeError(f"unknown policy {kind!r}; choose from {', '.join(POLICIES)}")
    if kind == "b3":
        cfg = cfg.replace(u_cmax=0.0, u_dmax=0.0)
    if kind in ("proposed", "b3"):
        params, bounds = derive_controller_params(cfg, v=v, gamma_shift=gamma_shift,
                                                  alpha_shift=alpha_shift)
        return Policy(kind, cfg, params, bounds)
    validate_config(cfg)
    return Policy(kind, cfg)


@dataclass(frozen=True)
class SlotRecord:
    t: int
    decision: Decision
    state_after: SystemState
    phi1: float
    phi2: float
    lyapunov: float
    ev_delay_running: int
    occupied_next: int
    t_ref_next: float
    h: float
    k: float
    shortcut: bool


@dataclass
class SimulationRun:
    policy: str
    cfg: HomeConfig
    params: ControllerParams | None
    bounds: DerivedBounds | None
    initial_state: SystemState
    records: list[SlotRecord]
    final_state: SystemState
    # (arrival slot, delay in slots, censored) per EV arrival chunk
    ev_delays: list[tuple[int, int, bool]]

    @property
    def max_ev_delay(self) -> int:
        return max((d for _, d, _ in self.ev_delays), default=0)


def _record(t, decision, state, nxt, obs, cfg, params, shortcut) -> SlotRecord:
    if params is not None:
        h = nxt.h(params.gamma_shift)
        k = nxt.k(params.alpha_shift)
        lyap = 0.5 * (h * h + nxt.q * nxt.q + nxt.z * nxt.z + k * k)
    else:
        h = k = lyap = math.nan
    return SlotRecord(
        t=t,
        decision=decision,
        state_after=nxt,
        phi1=energy_cost(decision.g, obs.price_buy, obs.price_sell),
        phi2=discomfort_cost(nxt.temp, obs.t_ref_next, obs.occupied_next, cfg.gamma),
        lyapunov=lyap,
        ev_delay_running=0,
        occupied_next=obs.occupied_next,
        t_ref_next=obs.t_ref_next,
        h=h,
        k=k,
        shortcut=shortcut,
    )


def vacancy_shortcut(state: SystemState, obs: SlotObservation, cfg: HomeConfig) -> bool:
    """True when the home is empty next slot and coasting keeps T above T_min."""
    return obs.occupied_next == 0 and thermal_step(state.temp, obs.t_out, 0.0, cfg) >= cfg.t_min


def step_proposed(state: SystemState, obs: SlotObservation, params: ControllerParams,
                  cfg: HomeConfig) -> tuple[Decision, SystemState, SlotRecord]:
    inst = P2Instance.from_state(state, obs, params, cfg)
    decision = solve_p2(inst)
    shortcut = vacancy_shortcut(state, obs, cfg)
    if shortcut:
        g = decision.x + decision.y - inst.r
        decision = Decision(e=0.0, x=decision.x, y=decision.y, g=g,
                            objective=float(p2_objective(inst, 0.0, decision.x, decision.y)))
    nxt = SystemState(
        t=state.t + 1,
        temp=thermal_step(state.temp, obs.t_out, decision.e, cfg),
        q=energy_queue_step(state.q, decision.x, obs.ev_arrival),
        z=delay_queue_step(state.z, state.q, decision.x, params.xi),
        g_ess=ess_step(state.g_ess, decision.y),
    )
    return decision, nxt, _record(state.t, decision, state, nxt, obs, cfg, params, shortcut)


def _hvac_for_target(target: float, state: SystemState, t_out: float, cfg: HomeConfig) -> float:
    """HVAC power reaching ``target`` next slot, clipped to [0, e_max]."""
    eps = cfg.epsilon
    e = ((target - eps * state.temp) / (1.0 - eps) - t_out) / cfg.eta_over_a
    return min(max(e, 0.0), cfg.e_max)


def _baseline_step(state, obs, cfg, e):
    shortcut = vacancy_shortcut(state, obs, cfg)
    if shortcut:
        e = 0.0
    x = min(state.q, cfg.x_max)
    r = pv_output(obs.solar_rho, cfg)
    g = grid_exchange(e, x, 0.0, r)
    decision = Decision(e=e, x=x, y=0.0, g=g, objective=math.nan)
    nxt = SystemState(
        t=state.t + 1,
        temp=thermal_step(state.temp, obs.t_out, e, cfg),
        q=energy_queue_step(state.q, x, obs.ev_arrival),
        z=0.0,
        g_ess=state.g_ess,
    )
    return decision, nxt, _record(state.t, decision, state, nxt, obs, cfg, None, shortcut)


def step_b1(state: SystemState, obs: SlotObservation,
            cfg: HomeConfig) -> tuple[Decision, SystemState, SlotRecord]:
    e = _hvac_for_target(obs.t_ref_next, state, obs.t_out, cfg)
    return _baseline_step(state, obs, cfg, e)


def step_b2(state: SystemState, obs: SlotObservation, next_buy_price: float,
            cfg: HomeConfig) -> tuple[Decision, SystemState, SlotRecord]:
    if obs.price_buy < cfg.epsilon * next_buy_price:
        e = _hvac_for_target(cfg.t_max, state, obs.t_out, cfg)
    else:
        e = _hvac_for_target(cfg.t_min, state, obs.t_out, cfg)
    return _baseline_step(state, obs, cfg, e)


def _arrivals(ev, n_slots: int, cfg: HomeConfig) -> list[float]:
    if ev is None:
        return [0.0] * n_slots
    ev = list(ev)
    if ev and isinstance(ev[0], EvRequest):
        return arrival_stream(ev, n_slots, cfg.v_max).tolist()
    if len(ev) != n_slots:
        raise TraceLengthMismatch(f"arrival stream has {len(ev)} slots, trace has {n_slots}")
    return [float(a) for a in ev]


def run_simulation(
    traces: TraceBundle,
    ev: Sequence[EvRequest] | Sequence[float] | np.ndarray | None,
    cfg: HomeConfig,
    policy: str | Policy,
    *,
    t0: float | None = None,
    g0: float | None = None,
) -> SimulationRun:
    """Run one policy over the whole trace (decisions for slots 0..N-2).

    ``ev`` is either a list of requests or a per-slot arrival stream.
    """
    if isinstance(policy, str):
        policy = make_policy(policy, cfg)
    pcfg = policy.cfg
    n = traces.n_slots
    lengths = {len(a) for a in traces.columns().values()}
    if len(lengths) != 1:
        raise TraceLengthMismatch(f"trace columns have differing lengths {sorted(lengths)}")
    if n < 2:
        raise TraceLengthMismatch("trace needs at least two slots")
    arrivals = _arrivals(ev, n, pcfg)
    for t, a in enumerate(arrivals):
        if not -_DRAIN_ATOL <= a <= pcfg.a_max + _DRAIN_ATOL:
            raise BoundsError(t, "a", a, f"[0, {pcfg.a_max}]")

    t0 = pcfg.t_init if t0 is None else t0
    g0 = pcfg.g_init if g0 is None else g0
    if not pcfg.t_min <= t0 <= pcfg.t_max:
        raise InfeasibleInitialState(f"T_0={t0} outside [{pcfg.t_min}, {pcfg.t_max}]")
    if not pcfg.g_min_ess <= g0 <= pcfg.g_max_ess:
        raise InfeasibleInitialState(f"G_0={g0} outside [{pcfg.g_min_ess}, {pcfg.g_max_ess}]")

    t_out = traces.outdoor_temp.tolist()
    buy = traces.buy_price.tolist()
    sell = traces.sell_price.tolist()
    rho = traces.solar_rho.tolist()
    occ = [int(p) for p in traces.occupied]
    t_ref = traces.t_ref.tolist()

    state = SystemState(t=0, temp=t0, q=0.0, z=0.0, g_ess=g0)
    initial = state
    records: list[SlotRecord] = []
    fifo: deque[list] = deque()
    delays: list[tuple[int, int, bool]] = []
    running = 0
    for t in range(n - 1):
        obs = SlotObservation(price_buy=buy[t], price_sell=sell[t], t_out=t_out[t],
                              solar_rho=rho[t], ev_arrival=arrivals[t],
                              t_ref_next=t_ref[t + 1], occupied_next=occ[t + 1])
        if policy.kind in ("proposed", "b3"):
            decision, nxt, rec = step_proposed(state, obs, policy.params, pcfg)
        elif policy.kind == "b1":
            decision, nxt, rec = step_b1(state, obs, pcfg)
        else:
            next_buy = buy[t + 1]
            decision, nxt, rec = step_b2(state, obs, next_buy, pcfg)

        # FIFO service accounting for the EV backlog
        served = decision.x
        while fifo and served > 0.0:
            chunk = fifo[0]
            take = min(served, chunk[1])
            chunk[1] -= take
            served -= take
            if chunk[1] <= _DRAIN_ATOL:
                fifo.popleft()
                delays.append((chunk[0], t - chunk[0], False))
                running = max(running, t - chunk[0])
            else:
                break
        while fifo and fifo[0][1] <= _DRAIN_ATOL:
            chunk = fifo.popleft()
            delays.append((chunk[0], t - chunk[0], False))
            running = max(running, t - chunk[0])
        if arrivals[t] > 0.0:
            fifo.append([t, arrivals[t]])

        records.append(dataclasses.replace(rec, ev_delay_running=running))
        state = nxt

    last = n - 2
    for arrival_slot, _ in fifo:
        # still queued: true delay exceeds the slots already waited
        delays.append((arrival_slot, last - arrival_slot + 1, True))

    return SimulationRun(
        policy=policy.kind,
        cfg=pcfg,
        params=policy.params,
        bounds=policy.bounds,
        initial_state=initial,
        records=records,
        final_state=state,
        ev_delays=delays,
    )
