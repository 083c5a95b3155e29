"""``hems`` command line: simulate, sweep, check, oracle, gen-trace.

Exit status is 0 on success, 1 on invalid input and 2 on runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import HomeConfig, load_config
from .controller import POLICIES, make_policy, run_simulation
from .errors import HemsError, RangeError, ValidationError
from .metrics import emit, summarize, sweep_csv, sweep_row
from .params import derive_controller_params
from .solver import oracle_p2, random_instance, solve_p2
from .traces import (
    BUNDLED_SEED,
    bundled_trace,
    generate_ev_requests,
    load_ev_csv,
    load_trace_csv,
    synthesize_trace,
    write_ev_csv,
    write_trace_csv,
)

SWEEP_PARAMS = {"gamma": "gamma", "epsilon": "epsilon", "t_min": "t_min", "v": None}


class _Parser(argparse.ArgumentParser):
    # usage errors count as invalid input, not as a runtime failure
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _base_config(args) -> HomeConfig:
    cfg = load_config(args.config) if args.config else HomeConfig()
    overrides = {}
    for flag, field in (("gamma", "gamma"), ("epsilon", "epsilon"), ("t_min", "t_min")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    return cfg.replace(**overrides) if overrides else cfg


def _inputs(args, cfg: HomeConfig):
    """Trace bundle and EV arrival source for simulate/sweep."""
    trace = load_trace_csv(args.trace, cfg) if args.trace else bundled_trace(cfg)
    if args.ev:
        ev = load_ev_csv(args.ev)
    elif args.no_ev:
        ev = None
    else:
        days = max(1, trace.n_slots // 24)
        _, arrivals = generate_ev_requests(args.seed, days, cfg)
        ev = np.zeros(trace.n_slots)
        m = min(len(arrivals), trace.n_slots)
        ev[:m] = arrivals[:m]
    return trace, ev


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _base_config(args)
    trace, ev = _inputs(args, cfg)
    policy = make_policy(args.policy, cfg, v=args.v)
    run = run_simulation(trace, ev, cfg, policy)
    out = _out_dir(args.out)
    (out / "slots.csv").write_bytes(emit(run, "csv"))
    (out / "summary.json").write_bytes(emit(summarize(run), "json"))
    return 0


def _sweep_point(job):
    cfg_dict, param, value, policy, trace, ev = job
    cfg = HomeConfig.from_dict(cfg_dict)
    v = None
    if param == "v":
        v = value
    else:
        cfg = cfg.replace(**{SWEEP_PARAMS[param]: value})
    if param == "v" and policy in ("b1", "b2"):
        pol = make_policy(policy, cfg)
    else:
        pol = make_policy(policy, cfg, v=v)
    run = run_simulation(trace, ev, cfg, pol)
    return sweep_row(summarize(run), param, value)


def _workers() -> int:
    env = os.environ.get("HEMS_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise RangeError(f"HEMS_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise RangeError("HEMS_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def cmd_sweep(args) -> int:
    cfg = _base_config(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise RangeError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    if not values:
        raise RangeError("--values is empty")
    trace, ev = _inputs(args, cfg)
    jobs = [(cfg.to_dict(), args.param, value, policy, trace, ev)
            for value in values for policy in POLICIES]
    workers = min(_workers(), len(jobs))
    if workers == 1:
        rows = [_sweep_point(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    out = _out_dir(args.out)
    (out / "sweep.csv").write_text(sweep_csv(rows), encoding="utf-8")
    return 0


def cmd_check(args) -> int:
    cfg = _base_config(args)
    params, bounds = derive_controller_params(cfg, v=args.v)
    doc = {
        "params": {"V": params.v, "Gamma": params.gamma_shift,
                   "alpha": params.alpha_shift, "xi": params.xi},
        "bounds": bounds.to_dict(),
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_oracle(args) -> int:
    if args.samples < 1:
        raise RangeError("--samples must be >= 1")
    if args.grid < 2:
        raise RangeError("--grid must be >= 2")
    rng = np.random.default_rng(args.seed)
    worst = -np.inf
    violations = 0
    start = time.perf_counter()
    for _ in range(args.samples):
        inst = random_instance(rng)
        got = solve_p2(inst)
        ref = oracle_p2(inst, args.grid, args.refine)
        gap = got.objective - ref.objective
        worst = max(worst, gap)
        if gap > 1e-6 * (1.0 + abs(ref.objective)):
            violations += 1
    doc = {"samples": args.samples, "grid": args.grid, "refine": args.refine,
           "seed": args.seed, "max_gap": float(worst), "violations": violations,
           "seconds": round(time.perf_counter() - start, 3)}
    print(json.dumps(doc, indent=2))
    return 0 if violations == 0 else 2


def cmd_gen_trace(args) -> int:
    cfg = _base_config(args)
    if args.days < 1:
        raise RangeError("--days must be >= 1")
    bundle, _ = synthesize_trace(cfg, days=args.days, seed=args.seed,
                                 price_jitter=args.jitter)
    write_trace_csv(bundle, args.out)
    if args.ev_out:
        requests, _ = generate_ev_requests(args.seed, args.days, cfg)
        write_ev_csv(requests, args.ev_out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hems", description="Smart-home energy management simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, overrides=True):
        p.add_argument("--config", help="JSON config file (defaults built in)")
        if overrides:
            p.add_argument("--gamma", type=float, help="discomfort weight override")
            p.add_argument("--epsilon", type=float, help="thermal inertia override")
            p.add_argument("--t-min", dest="t_min", type=float, help="lower comfort bound override")

    def inputs(p):
        p.add_argument("--trace", help="trace CSV (default: bundled synthetic month)")
        p.add_argument("--ev", help="EV request CSV (columns s,c,E)")
        p.add_argument("--no-ev", action="store_true", help="run without EV demand")
        p.add_argument("--seed", type=int, default=BUNDLED_SEED,
                       help="seed for generated EV requests")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("simulate", help="run one policy over a trace")
    common(p)
    inputs(p)
    p.add_argument("--policy", choices=POLICIES, default="proposed")
    p.add_argument("--v", type=float, help="override V within (0, min(V1max, V2max)]")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep one parameter across all policies")
    common(p)
    inputs(p)
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="validate a config and print derived bounds")
    common(p)
    p.add_argument("--v", type=float, help="override V within (0, min(V1max, V2max)]")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("oracle", help="verify the slot solver against a grid search")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--grid", type=int, default=11)
    p.add_argument("--refine", type=int, default=12, help="zoom refinement rounds")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen-trace", help="write a synthetic trace CSV")
    common(p, overrides=False)
    p.add_argument("--days", type=int, default=31)
    p.add_argument("--seed", type=int, default=BUNDLED_SEED)
    p.add_argument("--jitter", action="store_true", help="jitter prices inside each tier")
    p.add_argument("--out", required=True, help="trace CSV path")
    p.add_argument("--ev-out", help="also write EV requests to this CSV")
    p.set_defaults(func=cmd_gen_trace)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"hems: invalid input: {exc}", file=sys.stderr)
        return 1
    except (HemsError, OSError, ArithmeticError) as exc:
        print(f"hems: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
