"""Stochastic ring workloads.

Every idle node starts a transmission each step.  Durations are Poisson
(at least one step), bandwidths follow a Pareto law capped at one full
wavelength, and destinations come from one of four distance-based
distributions.  The generator is numpy's PCG64, seeded explicitly, so a
given ``(n, params)`` always yields the same trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (CAPACITY, Arrive, Depart, EventSequence, InvalidArgument,
                   Transmission, class_of, event_key)

DESTINATIONS = ("uniform", "uniformclass", "bimodal", "shortpreferred")


@dataclass(frozen=True)
class LoadParams:
    lam: float = 0.01
    dest: str = "uniform"
    r_min: float = 0.01
    alpha: float = 1.5
    horizon: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.lam <= 0:
            raise InvalidArgument("lambda must be positive")
        if self.dest not in DESTINATIONS:
            raise InvalidArgument(f"unknown destination distribution {self.dest!r}")
        if not 0 < self.r_min <= 1:
            raise InvalidArgument("r_min must lie in (0, 1]")
        if self.alpha <= 1:
            raise InvalidArgument("alpha must exceed 1")
        if self.horizon < 1:
            raise InvalidArgument("horizon must be >= 1")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_duration(lam: float, rng, size=None):
    """Poisson(lam) steps, never less than one."""
    if lam <= 0:
        raise InvalidArgument("lambda must be positive")
    d = np.maximum(_rng(rng).poisson(lam, size), 1)
    return int(d) if size is None else d


def _bandwidth_ppm(r_min: float, x):
    # x is a percentage of capacity; one percent is 10**4 micro-units
    floor_ppm = max(1, int(round(r_min * CAPACITY)))
    return np.clip(np.floor(x * (CAPACITY / 100)), floor_ppm, CAPACITY).astype(np.int64)


def sample_bandwidth(r_min: float, alpha: float, rng, size=None):
    """Pareto(scale = 100 r_min, shape = alpha) read as percent, capped at capacity."""
    if not 0 < r_min <= 1 or alpha <= 1:
        raise InvalidArgument("need 0 < r_min <= 1 and alpha > 1")
    x = 100 * r_min * (1 + _rng(rng).pareto(alpha, size))
    bw = _bandwidth_ppm(r_min, np.atleast_1d(x))
    return int(bw[0]) if size is None else bw


def _distance_classes(n: int) -> list[list[int]]:
    """Ring distances 1..n//2 grouped by class."""
    top = class_of(n // 2)
    groups: list[list[int]] = [[] for _ in range(top + 1)]
    for d in range(1, n // 2 + 1):
        groups[class_of(d)].append(d)
    return groups


@lru_cache(maxsize=None)
def destination_matrix(dist: str, n: int) -> np.ndarray:
    """``P[s, d]``: probability that a transmission from ``s`` targets ``d``."""
    if n < 3:
        raise InvalidArgument("destination distributions need n >= 3")
    if dist not in DESTINATIONS:
        raise InvalidArgument(f"unknown destination distribution {dist!r}")
    p = np.zeros((n, n))
    for s in range(n):
        if dist == "uniform":
            p[s] = 1.0 / (n - 1)
            p[s, s] = 0.0
        elif dist == "bimodal":
            near = {(s - 1) % n, (s + 1) % n}
            far = set(range(n)) - near - {s}
            modes = [m for m in (near, far) if m]
            for mode in modes:
                for d in mode:
                    p[s, d] += 1.0 / len(modes) / len(mode)
        else:
            groups = _distance_classes(n)
            if dist == "uniformclass":
                weights = [1.0] * len(groups)
            else:
                weights = [2.0 ** -(i + 1) for i in range(len(groups))]
            total = sum(weights)
            for w, dists in zip(weights, groups):
                nodes = {(s + d) % n for d in dists} | {(s - d) % n for d in dists}
                for d in nodes:
                    p[s, d] += w / total / len(nodes)
    p.setflags(write=False)
    return p


def _cumulative(dist: str, n: int) -> np.ndarray:
    cum = np.cumsum(destination_matrix(dist, n), axis=1)
    cum[:, -1] = 1.0
    return cum


def sample_destination(dist: str, src: int, n: int, rng, size=None):
    cum = _cumulative(dist, n)[src]
    u = _rng(rng).random(size)
    d = np.searchsorted(cum, u, side="right")
    return int(d) if size is None else d


def gen_workload(n: int, params: LoadParams, rng=None) -> EventSequence:
    """Arrivals and departures on an ``n``-node ring over ``params.horizon`` steps.

    A node busy until step ``t`` may start again at ``t``: departures sort
    before arrivals at equal times.  Departures past the horizon are kept.
    """
    if n < 3:
        raise InvalidArgument("workloads need n >= 3")
    rng = _rng(params.seed if rng is None else rng)
    cum = _cumulative(params.dest, n)
    free_at = np.zeros(n, dtype=np.int64)
    events: list = []
    tid = 0
    for t in range(params.horizon):
        srcs = np.flatnonzero(free_at <= t)
        if not len(srcs):
            continue
        k = len(srcs)
        dur = np.maximum(rng.poisson(params.lam, k), 1)
        bw = _bandwidth_ppm(params.r_min, 100 * params.r_min * (1 + rng.pareto(params.alpha, k)))
        u = rng.random(k)
        dst = (cum[srcs] <= u[:, None]).sum(axis=1)
        free_at[srcs] = t + dur
        for s, d, b, length in zip(srcs.tolist(), dst.tolist(), bw.tolist(), dur.tolist()):
            tr = Transmission(tid, s, d, b, t, t + length)
            events.append(Arrive(t, tr))
            events.append(Depart(t + length, tid))
            tid += 1
    events.sort(key=event_key)
    return EventSequence(n, events)
