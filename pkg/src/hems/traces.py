"""Exogenous time series: CSV ingestion, occupancy inference, EV requests and
a seeded synthetic trace generator shaped like a January heating month."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import HomeConfig
from .errors import BoundsError, MissingColumn, ParseError, WindowTooShort
from .physics import EvRequest, ev_arrival

REQUIRED_COLUMNS = ("t", "T_out", "B", "rho", "pi", "T_ref")
DEFAULT_STEP_THRESHOLD = 1800
BUNDLED_SEED = 2017
# off-peak tier position inside [b_min, b_max]; a narrow spread keeps
# price-shifting savings comparable to discomfort at moderate gamma
OFF_PEAK_FRACTION = 0.4
# slack for bound checks on values that went through decimal text
_BOUND_ATOL = 1e-12


@dataclass(frozen=True)
class TraceBundle:
    outdoor_temp: np.ndarray
    buy_price: np.ndarray
    sell_price: np.ndarray
    solar_rho: np.ndarray
    occupied: np.ndarray
    t_ref: np.ndarray

    @property
    def n_slots(self) -> int:
        return len(self.outdoor_temp)

    def columns(self) -> dict[str, np.ndarray]:
        return {"T_out": self.outdoor_temp, "B": self.buy_price, "S": self.sell_price,
                "rho": self.solar_rho, "pi": self.occupied, "T_ref": self.t_ref}


def _within(value: float, lo: float, hi: float) -> bool:
    return lo - _BOUND_ATOL <= value <= hi + _BOUND_ATOL


def validate_bundle(bundle: TraceBundle, cfg: HomeConfig) -> TraceBundle:
    n = bundle.n_slots
    cols = bundle.columns()
    for name, arr in cols.items():
        if len(arr) != n:
            raise ParseError(f"column {name} has {len(arr)} values, expected {n}")
    checks = [("T_out", cfg.t_out_min, cfg.t_out_max), ("B", cfg.b_min, cfg.b_max),
              ("S", cfg.s_min, cfg.s_max), ("T_ref", cfg.t_ref_min, cfg.t_ref_max),
              ("rho", 0.0, math.inf)]
    for name, lo, hi in checks:
        for t, value in enumerate(cols[name]):
            if not _within(float(value), lo, hi):
                raise BoundsError(t, name, float(value), f"[{lo}, {hi}]")
    for t, (b, s) in enumerate(zip(bundle.buy_price, bundle.sell_price)):
        if b < s:
            raise BoundsError(t, "S", float(s), f"(sell price above buy price {b})")
    for t, p in enumerate(bundle.occupied):
        if p not in (0, 1):
            raise BoundsError(t, "pi", float(p), "{0, 1}")
    return bundle


def load_trace_csv(path: str | Path, cfg: HomeConfig) -> TraceBundle:
    """Read ``t,T_out,B[,S],rho,pi,T_ref``; S defaults to sell_ratio * B."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file", line=1) from None
        header = [h.strip() for h in header]
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise MissingColumn(f"{path}: missing column", line=1, column=col)
        extra = set(header) - set(REQUIRED_COLUMNS) - {"S"}
        if extra:
            raise ParseError(f"{path}: unknown column(s) {sorted(extra)}", line=1)
        idx = {name: header.index(name) for name in header}
        has_sell = "S" in idx
        rows: dict[str, list[float]] = {name: [] for name in header}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: expected {len(header)} fields, got {len(row)}",
                                 line=lineno)
            for name, i in idx.items():
                try:
                    rows[name].append(float(row[i]))
                except ValueError:
                    raise ParseError(f"{path}: not a number: {row[i]!r}",
                                     line=lineno, column=name) from None
    if not rows["t"]:
        raise ParseError(f"{path}: no data rows", line=2)
    for expect, t in enumerate(rows["t"]):
        if t != expect:
            raise ParseError(f"{path}: slot index {t} out of sequence (expected {expect})",
                             line=expect + 2, column="t")
    for lineno, p in enumerate(rows["pi"], start=2):
        if p not in (0.0, 1.0):
            raise ParseError(f"{path}: occupancy must be 0 or 1, got {p}",
                             line=lineno, column="pi")
    buy = np.asarray(rows["B"], dtype=float)
    sell = np.asarray(rows["S"], dtype=float) if has_sell else cfg.sell_ratio * buy
    bundle = TraceBundle(
        outdoor_temp=np.asarray(rows["T_out"], dtype=float),
        buy_price=buy,
        sell_price=sell,
        solar_rho=np.asarray(rows["rho"], dtype=float),
        occupied=np.asarray(rows["pi"], dtype=int),
        t_ref=np.asarray(rows["T_ref"], dtype=float),
    )
    return validate_bundle(bundle, cfg)


def write_trace_csv(bundle: TraceBundle, path: str | Path, include_sell: bool = True) -> None:
    cols = ["t", "T_out", "B"] + (["S"] if include_sell else []) + ["rho", "pi", "T_ref"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for t in range(bundle.n_slots):
            row = [t, repr(float(bundle.outdoor_temp[t])), repr(float(bundle.buy_price[t]))]
            if include_sell:
                row.append(repr(float(bundle.sell_price[t])))
            row += [repr(float(bundle.solar_rho[t])), int(bundle.occupied[t]),
                    repr(float(bundle.t_ref[t]))]
            writer.writerow(row)


def occupancy_from_steps(steps: Sequence[int], threshold: int = DEFAULT_STEP_THRESHOLD) -> np.ndarray:
    """1 (home) unless the hour's step count is strictly above ``threshold``."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    arr = np.asarray(steps)
    if np.any(arr < 0):
        raise ValueError("step counts must be non-negative")
    return np.where(arr > threshold, 0, 1).astype(int)


def arrival_stream(requests: Sequence[EvRequest], n_slots: int, v_max: float) -> np.ndarray:
    out = np.zeros(n_slots)
    for req in requests:
        kappa = req.kappa(v_max)
        for t in range(req.start, min(req.start + kappa + 1, n_slots)):
            out[t] += ev_arrival(req, t, v_max)
    return out


def generate_ev_requests(
    seed: int,
    n_days: int,
    cfg: HomeConfig,
    window: tuple[int, int] = (19, 6),
    energy_range: tuple[int, int] = (4, 18),
) -> tuple[list[EvRequest], np.ndarray]:
    """One request per day, plugged in over ``window`` (hours, may wrap midnight).

    Energy is drawn uniformly from the integers in ``energy_range``. Returns
    the requests and the arrival stream over ``24 * n_days`` slots; arrivals
    falling past the horizon are dropped.
    """
    start_hour, end_hour = window
    span = end_hour - start_hour if end_hour > start_hour else end_hour + 24 - start_hour
    lo, hi = energy_range
    if lo < 0 or hi < lo:
        raise ValueError(f"bad energy range {energy_range}")
    kappa_hi = math.floor(hi / cfg.v_max)
    slack = span - kappa_hi
    if slack < 1:
        raise WindowTooShort(f"window of {span} slots leaves {slack} < 1 slot of queueing "
                             f"for E={hi}")
    if slack < cfg.r_tolerance:
        raise WindowTooShort(f"window leaves {slack} slots of queueing for E={hi}, "
                             f"below r_tolerance={cfg.r_tolerance}")
    rng = np.random.default_rng(seed)
    energies = rng.integers(lo, hi + 1, size=n_days)
    requests = [EvRequest(start=day * 24 + start_hour, deadline=day * 24 + start_hour + span,
                          energy=float(energy))
                for day, energy in enumerate(energies)]
    return requests, arrival_stream(requests, 24 * n_days, cfg.v_max)


def load_ev_csv(path: str | Path) -> list[EvRequest]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: empty file", line=1)
        for col in ("s", "c", "E"):
            if col not in reader.fieldnames:
                raise MissingColumn(f"{path}: missing column", line=1, column=col)
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(EvRequest(int(row["s"]), int(row["c"]), float(row["E"])))
            except (TypeError, ValueError):
                raise ParseError(f"{path}: malformed request row", line=lineno) from None
    return out


def write_ev_csv(requests: Sequence[EvRequest], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["s", "c", "E"])
        for req in requests:
            writer.writerow([req.start, req.deadline, repr(req.energy)])


def synthetic_steps(rng: np.random.Generator, n_slots: int, vacancy: bool = True) -> np.ndarray:
    """Hourly step counts: quiet nights, weekday office hours away from home."""
    steps = np.empty(n_slots, dtype=int)
    for t in range(n_slots):
        hod, day = t % 24, t // 24
        weekday = day % 7 < 5
        if hod >= 22 or hod < 7:
            steps[t] = rng.integers(0, 300)
            continue
        if not vacancy:
            steps[t] = rng.integers(100, 1500)
            continue
        if weekday and 8 <= hod < 18:
            away = rng.random() < 0.85
        else:
            away = rng.random() < 0.2
        steps[t] = rng.integers(2000, 6000) if away else rng.integers(100, 1500)
    return steps


def synthesize_trace(
    cfg: HomeConfig,
    days: int = 31,
    seed: int = BUNDLED_SEED,
    *,
    price_jitter: bool = False,
    vacancy: bool = True,
) -> tuple[TraceBundle, np.ndarray]:
    """Deterministic synthetic month; returns the bundle and its step counts.

    Outdoor temperature is a diurnal sinusoid with daily and hourly noise,
    clipped to the configured range. Prices follow a two-tier day/night
    pattern: peak at b_max, off-peak ``OFF_PEAK_FRACTION`` of the way up
    from b_min (or jittered inside each half of the price band).
    Irradiance is a clipped sine with a random daily cloud factor.
    """
    rng = np.random.default_rng(seed)
    n = 24 * days
    hod = np.arange(n) % 24

    lo, hi = cfg.t_out_min, cfg.t_out_max
    mid, span = (lo + hi) / 2.0, hi - lo
    daily = np.repeat(rng.normal(0.0, 0.1 * span, size=days), 24)
    t_out = mid + 0.4 * span * np.sin(2.0 * np.pi * (hod - 9) / 24.0) + daily
    t_out = np.clip(t_out + rng.normal(0.0, 0.05 * span, size=n), lo, hi)

    peak = (hod >= 8) & (hod < 22)
    if price_jitter:
        b_mid = (cfg.b_min + cfg.b_max) / 2.0
        buy = np.where(peak, rng.uniform(b_mid, cfg.b_max, size=n),
                       rng.uniform(cfg.b_min, b_mid, size=n))
    else:
        off_peak = cfg.b_min + OFF_PEAK_FRACTION * (cfg.b_max - cfg.b_min)
        buy = np.where(peak, cfg.b_max, off_peak)
    sell = np.minimum(np.clip(cfg.sell_ratio * buy, cfg.s_min, cfg.s_max), buy)

    cloud = np.repeat(rng.uniform(0.3, 1.0, size=days), 24)
    daylight = (hod >= 7) & (hod <= 17)
    rho = np.where(daylight, 700.0 * cloud * np.sin(np.pi * (hod - 7) / 10.0), 0.0)
    rho = np.maximum(rho, 0.0)

    steps = synthetic_steps(rng, n, vacancy=vacancy)
    occupied = occupancy_from_steps(steps)

    if price_jitter and cfg.t_ref_max > cfg.t_ref_min:
        t_ref = np.repeat(rng.uniform(cfg.t_ref_min, cfg.t_ref_max, size=days), 24)
    else:
        t_ref = np.full(n, (cfg.t_ref_min + cfg.t_ref_max) / 2.0)

    bundle = TraceBundle(outdoor_temp=t_out, buy_price=buy, sell_price=sell,
                         solar_rho=rho, occupied=occupied, t_ref=t_ref)
    return validate_bundle(bundle, cfg), steps


def bundled_trace(cfg: HomeConfig) -> TraceBundle:
    """The fixed 744-slot month used by the examples and acceptance checks."""
    return synthesize_trace(cfg, days=31, seed=BUNDLED_SEED)[0]
