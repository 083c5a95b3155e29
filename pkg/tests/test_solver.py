import dataclasses

import numpy as np
import pytest

from hems.physics import SlotObservation, SystemState
from hems.solver import (
    P2Instance,
    hvac_thresholds,
    oracle_p2,
    p2_objective,
    random_instance,
    solve_p2,
)
from oracles import thresholds


def make_instance(cfg, params, *, temp=22.5, q=0.0, z=0.0, g_ess=12.5, gamma=None,
                  price_buy=1.0, price_sell=0.9, t_out=5.0, rho=0.0, occupied=1, t_ref=22.5):
    c = cfg if gamma is None else cfg.replace(gamma=gamma)
    state = SystemState(t=0, temp=temp, q=q, z=z, g_ess=g_ess)
    obs = SlotObservation(price_buy=price_buy, price_sell=price_sell, t_out=t_out,
                          solar_rho=rho, ev_arrival=0.0, t_ref_next=t_ref, occupied_next=occupied)
    return P2Instance.from_state(state, obs, params, c)


def check_feasible(inst, dec):
    assert 0.0 <= dec.e <= inst.e_max
    assert 0.0 <= dec.x <= inst.x_upper
    assert -inst.u_dmax <= dec.y <= inst.u_cmax
    assert dec.g == dec.e + dec.x + dec.y - inst.r


class TestThresholds:
    def test_zero_weight(self, cfg, params):
        assert hvac_thresholds(make_instance(cfg, params)) == (0.0, 0.0)

    def test_vacancy(self, cfg, params):
        inst = make_instance(cfg, params, gamma=0.01, occupied=0)
        assert hvac_thresholds(inst) == (0.0, 0.0)

    def test_worked_values(self, cfg, params):
        # (22.5 - 0.985*20)/0.015 = 186.667, scale 2*V*0.01*0.015^2*15
        inst = make_instance(cfg, params, gamma=0.01, temp=20.0, t_out=5.0)
        inst = dataclasses.replace(inst, v=3.29318)
        b_t, c_t = hvac_thresholds(inst)
        assert b_t == pytest.approx(-0.0403826, rel=1e-5)
        assert c_t == pytest.approx(-0.0137079, rel=1e-5)


class TestThresholdExamples:
    def test_large_backlog_served_fully(self, cfg, params):
        dec = solve_p2(make_instance(cfg, params, q=4.0, z=1.0))
        assert dec.x == 3.0

    def test_small_backlog_idle(self, cfg, params):
        dec = solve_p2(make_instance(cfg, params, q=0.5, z=0.5))
        assert dec.x == 0.0

    def test_warm_home_hvac_off(self, cfg, params):
        inst = make_instance(cfg, params, temp=24.0)
        pull = -inst.thermal_slope * inst.h
        assert pull == pytest.approx(1.34918, rel=1e-5)
        assert solve_p2(inst).e == 0.0

    def test_cold_home_hvac_full(self, cfg, params):
        inst = make_instance(cfg, params, temp=15.0)
        pull = -inst.thermal_slope * inst.h
        assert pull == pytest.approx(3.34381, rel=1e-5)
        assert solve_p2(inst).e == cfg.e_max

    def test_ess_discharges_when_full(self, cfg, params):
        # K > -V*S_min and prices flat: selling stored energy pays
        inst = make_instance(cfg, params, g_ess=19.0, price_sell=1.0, rho=0.0)
        dec = solve_p2(inst)
        assert dec.y == -cfg.u_dmax


class TestSolver:
    def test_degenerate_boxes(self, cfg, params):
        inst = dataclasses.replace(make_instance(cfg, params, rho=500.0), e_max=0.0,
                                   u_cmax=0.0, u_dmax=0.0)
        dec = solve_p2(inst)
        assert (dec.e, dec.x, dec.y) == (0.0, 0.0, 0.0)
        assert dec.g == -3.0

    def test_objective_reports_constant_term(self, cfg, params):
        inst = make_instance(cfg, params, temp=21.0, q=2.0, z=1.0, rho=300.0, gamma=0.02)
        dec = solve_p2(inst)
        assert dec.objective == pytest.approx(float(p2_objective(inst, dec.e, dec.x, dec.y)),
                                              rel=1e-12, abs=1e-12)

    def test_random_instances_feasible_and_threshold_consistent(self):
        rng = np.random.default_rng(11)
        for _ in range(2000):
            inst = random_instance(rng)
            dec = solve_p2(inst)
            check_feasible(inst, dec)
            assert thresholds.violations(inst, dec) == []

    def test_matches_refined_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            inst = random_instance(rng)
            got = solve_p2(inst)
            ref = oracle_p2(inst, 11, refine_rounds=12)
            assert got.objective <= ref.objective + 1e-6 * (1.0 + abs(ref.objective))

    def test_vanishing_discomfort_weight(self, cfg, params):
        # regression: the HVAC response is a near-step in the price multiplier
        inst = make_instance(cfg, params, temp=20.0, rho=400.0, gamma=5.5e-39)
        inst = dataclasses.replace(inst, price_sell=0.0, u_cmax=0.0, u_dmax=0.0)
        dec = solve_p2(inst)
        check_feasible(inst, dec)
        ref = oracle_p2(inst, 11, refine_rounds=12)
        assert dec.objective <= ref.objective + 1e-9 * (1 + abs(ref.objective))

    def test_deterministic(self):
        inst = random_instance(np.random.default_rng(3))
        assert solve_p2(inst) == solve_p2(inst)

    def test_oracle_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            oracle_p2(random_instance(np.random.default_rng(0)), 1)


class TestConvexCrossCheck:
    """Two-sided comparison with a general-purpose conic solver."""

    def test_against_cvxpy(self):
        cp = pytest.importorskip("cvxpy")
        rng = np.random.default_rng(21)
        checked = 0
        for _ in range(150):
            inst = random_instance(rng)
            e = cp.Variable()
            x = cp.Variable()
            y = cp.Variable()
            eps = inst.epsilon
            g = e + x + y - inst.r
            t_next = eps * inst.temp + (1 - eps) * (inst.t_out + inst.eta_over_a * e)
            obj = (inst.k * y - (inst.q + inst.z) * x
                   + eps * (1 - eps) * inst.h * (inst.gamma_shift + inst.t_out + inst.eta_over_a * e)
                   + inst.v * (cp.maximum(inst.price_buy * g, inst.price_sell * g)
                               + inst.gamma * inst.occupied_next * cp.square(t_next - inst.t_ref_next)))
            cons = [e >= 0, e <= inst.e_max, x >= 0, x <= inst.x_upper,
                    y >= -inst.u_dmax, y <= inst.u_cmax]
            prob = cp.Problem(cp.Minimize(obj), cons)
            try:
                prob.solve(solver="CLARABEL", tol_gap_abs=1e-11, tol_gap_rel=1e-11,
                           tol_feas=1e-11)
            except cp.SolverError:
                continue
            if prob.status != "optimal":
                continue
            got = solve_p2(inst).objective
            assert got <= prob.value + 1e-6 * (1 + abs(prob.value))
            assert got == pytest.approx(prob.value, rel=1e-6, abs=1e-6)
            checked += 1
        assert checked > 100
