"""Randomised-configuration properties of the derived parameters and the closed loop."""

from hypothesis import HealthCheck, assume, given, settings, strategies as st

from hems.config import HomeConfig, compute_psi, validate_config
from hems.controller import run_simulation
from hems.errors import InfeasibleParameters, ValidationError
from hems.params import alpha_interval, derive_controller_params, gamma_interval, v_caps
from hems.traces import generate_ev_requests, synthesize_trace


@st.composite
def configs(draw, gamma=None):
    k = draw(st.floats(5.0, 30.0))
    t_out_min = draw(st.floats(-5.0, 5.0))
    t_out_max = t_out_min + draw(st.floats(0.0, 15.0))
    t_min = draw(st.floats(10.0, 18.0))
    t_max = max(t_min + draw(st.floats(3.0, 15.0)), t_out_max)
    b_max = draw(st.floats(0.3, 2.0))
    b_min = b_max * draw(st.floats(0.5, 1.0))
    s_min = b_min * draw(st.floats(0.0, 0.95))
    g_min = draw(st.floats(0.0, 10.0))
    u_c, u_d = draw(st.floats(0.0, 3.0)), draw(st.floats(0.0, 3.0))
    g_max = g_min + u_c + u_d + draw(st.floats(0.5, 20.0))
    v_max = draw(st.floats(0.5, 5.0))
    t_ref = draw(st.floats(t_min, t_max))
    cfg = HomeConfig(
        epsilon=draw(st.floats(0.9, 0.999)),
        conductivity_a=1.0 / k,
        e_max=draw(st.floats(1.0, 15.0)),
        t_min=t_min, t_max=t_max, t_out_min=t_out_min, t_out_max=t_out_max,
        t_ref_min=t_ref, t_ref_max=t_ref,
        b_min=b_min, b_max=b_max,
        s_min=s_min, s_max=s_min,
        gamma=draw(st.floats(0.0, 0.2)) if gamma is None else gamma,
        g_min_ess=g_min, g_max_ess=g_max, u_cmax=u_c, u_dmax=u_d,
        v_max=v_max, a_max=v_max, x_max=draw(st.floats(v_max, 3.0 * v_max + 10.0)),
        r_tolerance=draw(st.integers(2, 12)),
        sell_ratio=s_min / b_min if s_min > 0 else 1.0,
        t_init=(t_min + t_max) / 2.0, g_init=(g_min + g_max) / 2.0,
    )
    try:
        validate_config(cfg)
    except ValidationError:
        assume(False)
    return cfg


def _rel_close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


class TestParameterEquivalences:
    @settings(max_examples=300)
    @given(configs(gamma=0.0), st.floats(0.01, 3.0))
    def test_gamma_interval_iff_v1(self, cfg, scale):
        v1, _ = v_caps(cfg)
        assume(v1 > 0)
        v = v1 * scale
        lo, hi = gamma_interval(cfg, v)
        assume(not _rel_close(v, v1, 1e-7))
        assert (v <= v1) == (lo <= hi)

    @settings(max_examples=300)
    @given(configs(), st.floats(0.01, 3.0))
    def test_alpha_interval_iff_v2(self, cfg, scale):
        _, v2 = v_caps(cfg)
        assume(v2 > 0)
        v = v2 * scale
        assume(not _rel_close(v, v2, 1e-7))
        lo, hi = alpha_interval(cfg, v)
        assert (v <= v2) == (lo <= hi)

    @settings(max_examples=300)
    @given(configs(), st.floats(0.01, 1.0))
    def test_v1_cap_keeps_gamma_interval_with_discomfort(self, cfg, scale):
        v1, _ = v_caps(cfg)
        assume(v1 > 0)
        lo, hi = gamma_interval(cfg, v1 * scale)
        assert lo <= hi + 1e-9 * max(1.0, abs(lo))


class TestDerivedBounds:
    @settings(max_examples=300)
    @given(configs())
    def test_delay_bound_within_tolerance(self, cfg):
        try:
            params, bounds = derive_controller_params(cfg)
        except InfeasibleParameters:
            assume(False)
        assert bounds.d_max <= cfg.r_tolerance
        assert bounds.gamma_min <= params.gamma_shift <= bounds.gamma_max
        assert bounds.alpha_min <= params.alpha_shift <= bounds.alpha_max

    @settings(max_examples=300)
    @given(configs())
    def test_psi_below_band(self, cfg):
        assert compute_psi(cfg) < cfg.t_max - cfg.t_min


class TestClosedLoop:
    @settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(configs(), st.integers(0, 10_000))
    def test_bounds_hold_under_random_configs(self, cfg, seed):
        try:
            params, bounds = derive_controller_params(cfg)
        except InfeasibleParameters:
            assume(False)
        trace, _ = synthesize_trace(cfg, days=3, seed=seed, price_jitter=True)
        span = 11
        hi = int(cfg.v_max * (span - cfg.r_tolerance))
        assume(hi >= 1)
        _, arr = generate_ev_requests(seed, 3, cfg, energy_range=(0, hi))
        run = run_simulation(trace, arr, cfg, "proposed")
        tol = 1e-9
        for r in run.records:
            s = r.state_after
            assert cfg.t_min - tol <= s.temp <= cfg.t_max + tol
            assert cfg.g_min_ess - tol <= s.g_ess <= cfg.g_max_ess + tol
            assert s.q <= bounds.q_max + tol
            assert s.z <= bounds.z_max + tol
        assert run.max_ev_delay <= bounds.d_max
