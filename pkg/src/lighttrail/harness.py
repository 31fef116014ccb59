"""Exact oracle for small instances and the ring simulation study."""

from __future__ import annotations

import csv
import io
import time
import warnings
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields
from statistics import fmean
from typing import Iterable, Sequence

import numpy as np

from .core import (CAPACITY, InvalidArgument, LightTrail, LightTrailError,
                   PreconditionViolation, Schedule, Transmission, ceil_units,
                   link_congestion, validate_schedule)
from .online import POLICIES, run_online
from .traffic import LoadParams, gen_workload

CSV_VERSION = "lighttrail-results v1"
ORACLE_MAX_ITEMS = 10
ORACLE_MAX_NODES = 8


class SearchExhausted(LightTrailError, RuntimeError):
    """The oracle found no schedule within the wavelength budget."""


# ---------------------------------------------------------------------------
# exact oracle

@dataclass
class OracleResult:
    wavelengths: int
    schedule: Schedule


def brute_force_opt(instance: Iterable[Transmission], n: int,
                    max_wavelengths: int | None = None) -> OracleResult:
    """Fewest wavelengths for a non-splittable stationary instance.

    Tries ``w = ceil(c), ceil(c) + 1, ...``.  For each ``w`` a depth-first
    search places transmissions (longest first) into an existing trail, a
    new trail on a used wavelength, or the next unused wavelength; a trail is
    the hull of its members.  Dead states are memoised by their canonical
    shape: per wavelength, the sorted (lo, hi, load) of its trails.
    """
    items = sorted((t.normalized() for t in instance),
                   key=lambda t: (t.lo - t.hi, -t.bandwidth, t.lo, t.id))
    if len(items) > ORACLE_MAX_ITEMS or n > ORACLE_MAX_NODES:
        raise PreconditionViolation(
            f"oracle envelope is <= {ORACLE_MAX_ITEMS} transmissions on <= {ORACLE_MAX_NODES} nodes")
    if not items:
        return OracleResult(0, Schedule(n, []))
    limit = len(items) if max_wavelengths is None else max_wavelengths
    w = max(1, ceil_units(link_congestion(items, n).c))
    while w <= limit:
        found = _search(items, w)
        if found is not None:
            trails = [LightTrail(wi, lo, hi, {items[x].id: items[x].bandwidth for x in members})
                      for wi, groups in enumerate(found) for lo, hi, _, members in groups]
            return OracleResult(w, Schedule(n, trails))
        w += 1
    raise SearchExhausted(f"no schedule with at most {limit} wavelengths")


def _search(items: Sequence[Transmission], w: int):
    waves: list[list[list]] = []  # wavelength -> [lo, hi, load, members]
    dead: set = set()

    def shape(k):
        return k, tuple(sorted(tuple(sorted((g[0], g[1], g[2]) for g in wl)) for wl in waves))

    def clear(wl, lo, hi, skip=None):
        return all(g is skip or g[1] <= lo or hi <= g[0] for g in wl)

    def go(k):
        if k == len(items):
            return True
        key = shape(k)
        if key in dead:
            return False
        t = items[k]
        for wl in waves:
            for g in wl:
                lo, hi = min(g[0], t.lo), max(g[1], t.hi)
                if g[2] + t.bandwidth <= CAPACITY and clear(wl, lo, hi, g):
                    old = g[:]
                    g[0], g[1], g[2] = lo, hi, g[2] + t.bandwidth
                    g[3] = g[3] + [k]
                    if go(k + 1):
                        return True
                    g[:] = old
            if clear(wl, t.lo, t.hi):
                wl.append([t.lo, t.hi, t.bandwidth, [k]])
                if go(k + 1):
                    return True
                wl.pop()
        if len(waves) < w:
            waves.append([[t.lo, t.hi, t.bandwidth, [k]]])
            if go(k + 1):
                return True
            waves.pop()
        dead.add(key)
        return False

    return [[tuple(g) for g in wl] for wl in waves] if go(0) else None


def random_instance(n: int, m: int, rng: np.random.Generator,
                    bw_range: tuple[int, int] = (1, CAPACITY)) -> list[Transmission]:
    """``m`` transmissions with uniform endpoints and uniform micro-unit bandwidths."""
    out = []
    for tid in range(m):
        a, b = sorted(rng.choice(n, size=2, replace=False).tolist())
        out.append(Transmission(tid, a, b, int(rng.integers(bw_range[0], bw_range[1] + 1))))
    return out


# ---------------------------------------------------------------------------
# simulation study

STUDY_SCENARIOS = (("uniform", 0.01), ("uniform", 0.5), ("bimodal", 0.01), ("bimodal", 0.5))


@dataclass
class ExperimentConfig:
    ns: Sequence[int] = tuple(range(5, 21))
    policies: Sequence[str] = POLICIES
    scenarios: Sequence[tuple[str, float]] = STUDY_SCENARIOS
    alpha: float = 1.5
    lam: float = 0.01
    horizon: int = 100
    repetitions: int = 150
    seed: int = 0
    topology: str = "ring"
    timing: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise InvalidArgument("repetitions must be >= 1")
        if any(n < 3 for n in self.ns):
            raise InvalidArgument("ring sizes must be >= 3")
        for p in self.policies:
            if p not in POLICIES:
                raise InvalidArgument(f"unknown policy {p!r}")


@dataclass(frozen=True)
class ResultRow:
    n: int
    policy: str
    dest: str
    r_min: float
    alpha: float
    lam: float
    seed: int
    peak_wavelengths: int
    total_allocated: int
    congestion_ppm: int
    runtime_ms: float = 0.0


def run_seed(base: int, n: int, scenario: int, rep: int) -> int:
    """A 63-bit seed derived from the grid coordinates."""
    return int(np.random.SeedSequence([base, n, scenario, rep]).generate_state(1, np.uint64)[0] >> 1)


def run_experiment(config: ExperimentConfig, progress=None) -> list[ResultRow]:
    """Every policy sees the identical trace for a given (n, scenario, repetition)."""
    rows = []
    for n in config.ns:
        for si, (dest, r_min) in enumerate(config.scenarios):
            for rep in range(config.repetitions):
                seed = run_seed(config.seed, n, si, rep)
                params = LoadParams(config.lam, dest, r_min, config.alpha, config.horizon, seed)
                seq = gen_workload(n, params)
                for policy in config.policies:
                    start = time.perf_counter()
                    res = run_online(seq, policy, config.topology, n, check=False)
                    elapsed = (time.perf_counter() - start) * 1000 if config.timing else 0.0
                    rows.append(ResultRow(n, policy, dest, r_min, config.alpha, config.lam, seed,
                                          res.peak_wavelengths, res.total_allocated,
                                          res.congestion, round(elapsed, 3)))
            if progress:
                progress(n, dest, r_min)
    return sorted(rows, key=_row_order)


def _row_order(r: ResultRow):
    return (r.n, r.policy, r.dest, r.r_min, r.alpha, r.lam, r.seed)


@dataclass(frozen=True)
class SummaryRow:
    n: int
    policy: str
    dest: str
    r_min: float
    alpha: float
    lam: float
    runs: int
    mean_peak: float
    mean_congestion: float


def aggregate(rows: Iterable[ResultRow], expected: Iterable[tuple] = ()) -> list[SummaryRow]:
    """Mean peak wavelengths and mean congestion (in wavelengths) per grid cell.

    ``expected`` lists cells as ``(n, policy, dest, r_min, alpha, lam)``; any
    that received no rows are skipped with a warning.
    """
    cells: dict[tuple, list[ResultRow]] = defaultdict(list)
    for r in rows:
        cells[(r.n, r.policy, r.dest, r.r_min, r.alpha, r.lam)].append(r)
    for cell in expected:
        if cell not in cells:
            warnings.warn(f"no rows for cell {cell}; omitted", stacklevel=2)
    out = []
    for cell in sorted(cells):
        group = sorted(cells[cell], key=lambda r: r.seed)
        out.append(SummaryRow(*cell, len(group),
                              round(fmean(r.peak_wavelengths for r in group), 6),
                              round(fmean(r.congestion_ppm for r in group) / CAPACITY, 6)))
    return out


def _csv(records, columns) -> str:
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        d = asdict(rec)
        writer.writerow([d[c] for c in columns])
    return buf.getvalue()


def rows_csv(rows: Sequence[ResultRow], timing: bool = False) -> str:
    columns = [f.name for f in fields(ResultRow) if timing or f.name != "runtime_ms"]
    return _csv(rows, columns)


def summary_csv(summary: Sequence[SummaryRow]) -> str:
    return _csv(summary, [f.name for f in fields(SummaryRow)])


@dataclass
class OracleCheck:
    oracle: int
    scheduler: int
    congestion: int
    witness_ok: bool
    problems: list = field(default_factory=list)


def check_against_oracle(instance: list[Transmission], n: int, schedule: Schedule) -> OracleCheck:
    res = brute_force_opt(instance, n)
    report = validate_schedule(instance, res.schedule, "nonsplittable")
    return OracleCheck(res.wavelengths, schedule.wavelengths, link_congestion(instance, n).c,
                       report.ok, report.violations)
