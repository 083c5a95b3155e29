"""Slot costs, run aggregates and report emission (JSON summary, CSV tables)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Iterable, Sequence

from .errors import EmptyRun

if TYPE_CHECKING:
    from .controller import SimulationRun, SlotRecord

SLOT_COLUMNS = ("t", "e", "x", "y", "g", "T", "Q", "Z", "G", "H", "K",
                "phi1", "phi2", "occupied_next")

SWEEP_COLUMNS = ("policy", "param", "value", "V", "Gamma", "alpha", "xi", "gamma",
                 "eps", "t_min", "energy", "discomfort", "total", "atd", "max_ev_delay",
                 "temp_lo", "temp_hi", "ess_lo", "ess_hi", "q_peak", "z_peak",
                 "theta_over_v")


def energy_cost(g: float, b: float, s: float) -> float:
    """Grid cost of exchanging ``g`` kW: buy at ``b`` when g > 0, sell at ``s`` otherwise."""
    return (b - s) / 2.0 * abs(g) + (b + s) / 2.0 * g


def energy_cost_branch(g: float, b: float, s: float) -> float:
    return b * g if g > 0.0 else s * g


def discomfort_cost(t_next: float, t_ref_next: float, occupied_next: int, gamma: float) -> float:
    return gamma * occupied_next * (t_next - t_ref_next) ** 2


def atd(records: Sequence["SlotRecord"]) -> float:
    """Average deviation from the setpoint over occupied slots.

    The denominator is (number of occupied slots - 1) by convention.
    """
    if not records:
        raise EmptyRun("atd of an empty run")
    n_on = sum(1 for rec in records if rec.occupied_next == 1)
    if n_on <= 1:
        return 0.0
    dev = sum(abs(rec.state_after.temp - rec.t_ref_next)
              for rec in records if rec.occupied_next == 1)
    return dev / (n_on - 1)


@dataclass(frozen=True)
class RunSummary:
    policy: str
    total_energy_cost: float
    total_discomfort_cost: float
    total_cost: float
    atd: float
    n_on: int
    max_ev_delay: int
    temp_range_observed: tuple[float, float]
    ess_range_observed: tuple[float, float]
    queue_peaks: tuple[float, float]
    params: dict[str, Any]
    theta_over_v: float | None
    bound_report: dict[str, Any] | None
    currency: str = "RMB"

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "policy": self.policy,
            "params": self.params,
            "totals": {
                "energy": self.total_energy_cost,
                "discomfort": self.total_discomfort_cost,
                "total": self.total_cost,
            },
            "atd": self.atd,
            "max_ev_delay": self.max_ev_delay,
            "temp_range": list(self.temp_range_observed),
            "ess_range": list(self.ess_range_observed),
            "queue_peaks": list(self.queue_peaks),
            "theta_over_v": self.theta_over_v,
            "currency": self.currency,
        }


def summarize(run: "SimulationRun") -> RunSummary:
    records = run.records
    if not records:
        raise EmptyRun("run has no slot records")
    energy = math.fsum(rec.phi1 for rec in records)
    discomfort = math.fsum(rec.phi2 for rec in records)
    temps = [run.initial_state.temp] + [rec.state_after.temp for rec in records]
    ess = [run.initial_state.g_ess] + [rec.state_after.g_ess for rec in records]
    qs = [rec.state_after.q for rec in records]
    zs = [rec.state_after.z for rec in records]
    cfg = run.cfg
    p = run.params
    params = {
        "V": p.v if p else None,
        "Gamma": p.gamma_shift if p else None,
        "alpha": p.alpha_shift if p else None,
        "xi": p.xi if p else None,
        "gamma": cfg.gamma,
        "eps": cfg.epsilon,
        "t_min": cfg.t_min,
    }
    theta_over_v = run.bounds.theta / p.v if (p and run.bounds) else None
    return RunSummary(
        policy=run.policy,
        total_energy_cost=energy,
        total_discomfort_cost=discomfort,
        total_cost=energy + discomfort,
        atd=atd(records),
        n_on=sum(1 for rec in records if rec.occupied_next == 1),
        max_ev_delay=run.max_ev_delay,
        temp_range_observed=(min(temps), max(temps)),
        ess_range_observed=(min(ess), max(ess)),
        queue_peaks=(max(qs), max(zs)),
        params=params,
        theta_over_v=theta_over_v,
        bound_report=run.bounds.to_dict() if run.bounds else None,
        currency=cfg.currency,
    )


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def slots_csv(run: "SimulationRun") -> str:
    """Per-slot table. State columns hold the state after the slot's decision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SLOT_COLUMNS)
    for rec in run.records:
        st = rec.state_after
        d = rec.decision
        writer.writerow([rec.t, _fmt(d.e), _fmt(d.x), _fmt(d.y), _fmt(d.g),
                         _fmt(st.temp), _fmt(st.q), _fmt(st.z), _fmt(st.g_ess),
                         _fmt(rec.h), _fmt(rec.k), _fmt(rec.phi1), _fmt(rec.phi2),
                         rec.occupied_next])
    return buf.getvalue()


def summary_json(summary: RunSummary) -> str:
    return json.dumps(summary.to_json_dict(), indent=2, sort_keys=False) + "\n"


def sweep_row(summary: RunSummary, param: str, value: float) -> dict[str, Any]:
    p = summary.params
    return {
        "policy": summary.policy, "param": param, "value": value,
        "V": p["V"], "Gamma": p["Gamma"], "alpha": p["alpha"], "xi": p["xi"],
        "gamma": p["gamma"], "eps": p["eps"], "t_min": p["t_min"],
        "energy": summary.total_energy_cost,
        "discomfort": summary.total_discomfort_cost,
        "total": summary.total_cost,
        "atd": summary.atd,
        "max_ev_delay": summary.max_ev_delay,
        "temp_lo": summary.temp_range_observed[0],
        "temp_hi": summary.temp_range_observed[1],
        "ess_lo": summary.ess_range_observed[0],
        "ess_hi": summary.ess_range_observed[1],
        "q_peak": summary.queue_peaks[0],
        "z_peak": summary.queue_peaks[1],
        "theta_over_v": summary.theta_over_v,
    }


def sweep_csv(rows: Iterable[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        out = []
        for col in SWEEP_COLUMNS:
            val = row[col]
            if val is None:
                out.append("")
            elif isinstance(val, float):
                out.append(_fmt(val))
            else:
                out.append(str(val))
        writer.writerow(out)
    return buf.getvalue()


def emit(obj: Any, fmt: str) -> bytes:
    """Serialise a run (``csv``) or a summary (``json``) to UTF-8 bytes."""
    if fmt == "csv":
        return slots_csv(obj).encode("utf-8")
    if fmt == "json":
        if not isinstance(obj, RunSummary):
            obj = summarize(obj)
        return summary_json(obj).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")

