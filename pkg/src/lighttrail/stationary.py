"""Offline scheduling of a fixed transmission set on a linear array.

Pipeline: split transmissions into length classes, cut each class into
subclasses of bounded congestion, pack each subclass into phase-aligned
trails, shrink the trails to what they carry, then color the trail
intervals so that every color becomes one wavelength.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .core import (CAPACITY, InvalidArgument, InvariantViolation, LightTrail,
                   PreconditionViolation, Schedule, Transmission, class_of,
                   first_fit_pack, geometry, interval_color, link_congestion)

MODES = ("splittable", "nonsplittable")


@dataclass
class SubclassPartition:
    class_index: int
    sets: list[list[Transmission]]
    # per set: congestion of the remaining pool T_j at each link, offset by ``lo``
    snapshots: list[list[int]]
    lo: int = 0

    @property
    def k(self) -> int:
        return len(self.sets)


@dataclass
class PooledTrail:
    lo: int
    hi: int
    class_index: int
    phase: int
    assigned: dict[int, int] = field(default_factory=dict)
    subclass: int = 0
    layer: int = 0

    @property
    def load(self) -> int:
        return sum(self.assigned.values())


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise InvalidArgument(f"unknown mode {mode!r}")


def partition_classes(transmissions: Iterable[Transmission]) -> dict[int, list[Transmission]]:
    classes: dict[int, list[Transmission]] = defaultdict(list)
    for t in transmissions:
        classes[class_of(t.length)].append(t.normalized())
    return dict(sorted(classes.items()))


def _satisfies_min(c_s: int, c_t: int) -> bool:
    # c_l(S) = c_l(T) when c_l(T) <= 1, else c_l(S) >= 1
    return c_s == c_t if c_t <= CAPACITY else c_s >= CAPACITY


def breakup(transmissions: Iterable[Transmission], class_index: int) -> SubclassPartition:
    """Cut one length class into subclasses of congestion below four units.

    Each round sweeps links left to right, greedily taking crossing
    transmissions (ascending id) until a unit of congestion is removed or the
    link is drained, then returns picks to the pool in reverse pick order
    while the per-link minimum condition still holds.
    """
    if class_index < 2:
        raise PreconditionViolation(f"breakup applies to classes >= 2, got {class_index}")
    pool = sorted((t.normalized() for t in transmissions), key=lambda t: t.id)
    if not pool:
        return SubclassPartition(class_index, [], [])
    lo = min(t.lo for t in pool)
    hi = max(t.hi for t in pool)
    width = hi - lo

    sets, snapshots = [], []
    while pool:
        c_t = [0] * width
        crossing: list[list[Transmission]] = [[] for _ in range(width)]
        for t in pool:
            for l in range(t.lo - lo, t.hi - lo):
                c_t[l] += t.bandwidth
                crossing[l].append(t)

        c_s = [0] * width
        picked: list[Transmission] = []
        taken: set[int] = set()
        for l in range(width):
            target = min(CAPACITY, c_t[l])
            for t in crossing[l]:
                if c_s[l] >= target:
                    break
                if t.id in taken:
                    continue
                taken.add(t.id)
                picked.append(t)
                for m in range(t.lo - lo, t.hi - lo):
                    c_s[m] += t.bandwidth

        for t in reversed(picked):
            span = range(t.lo - lo, t.hi - lo)
            if all(_satisfies_min(c_s[m] - t.bandwidth, c_t[m]) for m in span):
                taken.discard(t.id)
                for m in span:
                    c_s[m] -= t.bandwidth

        chosen = [t for t in picked if t.id in taken]
        if not chosen:
            raise InvariantViolation("breakup made no progress")
        sets.append(sorted(chosen, key=lambda t: t.id))
        snapshots.append(c_t)
        pool = [t for t in pool if t.id not in taken]
    return SubclassPartition(class_index, sets, snapshots, lo)


def _pack_group(items: list[Transmission], mode: str) -> list[dict[int, int]]:
    bins = first_fit_pack([t.bandwidth for t in items], mode)
    return [{items[idx].id: amt for idx, amt in b} for b in bins]


def schedule_subclass(subclass: Iterable[Transmission], class_index: int, n: int,
                      mode: str = "nonsplittable", subclass_index: int = 0) -> list[PooledTrail]:
    """Pack one subclass (congestion < 4) into phase-aligned trails.

    Transmissions sharing a trail-point go into parallel copies of the trail
    ``[x, x + 2**(i+1)]``; a new copy opens only when packing needs it.
    """
    _check_mode(mode)
    items = sorted((t.normalized() for t in subclass), key=lambda t: t.id)
    if not items:
        return []
    if link_congestion(items, n).c >= 4 * CAPACITY:
        raise PreconditionViolation("subclass congestion must be below 4 units")
    per_position = 4 if mode == "splittable" else 8

    groups: dict[tuple[int, int], list[Transmission]] = defaultdict(list)
    for t in items:
        g = geometry(t)
        if g.class_index != class_index:
            raise PreconditionViolation(f"transmission {t.id} is not class {class_index}")
        groups[(g.phase, g.trail_point)].append(t)

    pool = []
    layers_by_phase: dict[int, int] = defaultdict(int)
    span = 2 ** (class_index + 1)
    for (phase, x), members in sorted(groups.items()):
        bins = _pack_group(members, mode)
        if len(bins) > per_position:
            raise InvariantViolation(
                f"{len(bins)} trail copies at position {x} exceed {per_position}")
        layers_by_phase[phase] = max(layers_by_phase[phase], len(bins))
        for layer, assigned in enumerate(bins):
            pool.append(PooledTrail(x, min(x + span, n - 1), class_index, phase,
                                    assigned, subclass_index, layer))
    if sum(layers_by_phase.values()) > 4 * per_position:
        raise InvariantViolation("subclass used more trail layers than allowed")
    return pool


def schedule_low_classes(r0: Iterable[Transmission], r1: Iterable[Transmission],
                         mode: str = "nonsplittable") -> list[PooledTrail]:
    """Unit trails per link for length-1 traffic, length-2 trails for length-2 traffic."""
    _check_mode(mode)
    pool = []
    for class_index, group, length in ((0, r0, 1), (1, r1, 2)):
        by_start: dict[int, list[Transmission]] = defaultdict(list)
        for t in group:
            t = t.normalized()
            if t.length != length:
                raise PreconditionViolation(
                    f"transmission {t.id} has length {t.length}, expected {length}")
            by_start[t.lo].append(t)
        for x, members in sorted(by_start.items()):
            members.sort(key=lambda t: t.id)
            for layer, assigned in enumerate(_pack_group(members, mode)):
                pool.append(PooledTrail(x, x + length, class_index, x % 2 if class_index else 0,
                                        assigned, 0, layer))
    return pool


def trim_trails(pool: Iterable[PooledTrail], extents: dict[int, tuple[int, int]]) -> list[PooledTrail]:
    """Drop empty trails and shrink the rest to the hull of what they carry."""
    out = []
    for p in pool:
        if not p.assigned:
            continue
        lo = min(extents[tid][0] for tid in p.assigned)
        hi = max(extents[tid][1] for tid in p.assigned)
        out.append(PooledTrail(lo, hi, p.class_index, p.phase, dict(p.assigned),
                               p.subclass, p.layer))
    return out


def build_pool(instance: Iterable[Transmission], n: int, mode: str) -> list[PooledTrail]:
    """All trimmed trails for an instance, before wavelength assignment."""
    _check_mode(mode)
    items = [t.normalized() for t in instance]
    for t in items:
        if t.hi > n - 1:
            raise InvalidArgument(f"transmission {t.id} exceeds node {n - 1}")
    classes = partition_classes(items)
    pool = schedule_low_classes(classes.get(0, []), classes.get(1, []), mode)
    for i, members in classes.items():
        if i < 2:
            continue
        for j, subset in enumerate(breakup(members, i).sets):
            pool.extend(schedule_subclass(subset, i, n, mode, j))
    return trim_trails(pool, {t.id: (t.lo, t.hi) for t in items})


def _materialize(n: int, pool: list[PooledTrail]) -> Schedule:
    colors = interval_color([(p.lo, p.hi) for p in pool])
    trails = [LightTrail(c, p.lo, p.hi, dict(p.assigned)) for p, c in zip(pool, colors)]
    return Schedule(n, trails)


def schedule_stationary(instance: Iterable[Transmission], n: int,
                        mode: str = "nonsplittable") -> Schedule:
    """Schedule a stationary instance on ``n`` nodes with O(c + log n) wavelengths."""
    items = list(instance)
    schedule = _materialize(n, build_pool(items, n, mode))
    if mode == "splittable":
        # a non-split schedule is also a valid split one; keep whichever is smaller
        whole = _materialize(n, build_pool(items, n, "nonsplittable"))
        if whole.wavelengths < schedule.wavelengths:
            return whole
    return schedule


# ---------------------------------------------------------------------------
# the hierarchical instance

def pack_hierarchical_opt(instance: Iterable[Transmission]) -> Schedule:
    """Pack the hierarchical instance greedily, longest classes first.

    Full-span unit-bandwidth transmissions each take a wavelength.  Then each
    new wavelength is cut into trails the length of the longest remaining
    class, and whole classes are added (longest first) while every trail
    stays within capacity.
    """
    from .adversaries import gen_hierarchical

    items = [t.normalized() for t in instance]
    if not items:
        raise PreconditionViolation("empty instance")
    n = max(t.hi for t in items)
    if n < 1 or n & (n - 1):
        raise PreconditionViolation("not a hierarchical instance (span is not a power of two)")
    extra = [t for t in items if t.lo == 0 and t.hi == n and t.bandwidth == CAPACITY]
    extra_ids = {t.id for t in extra}
    base = [t for t in items if t.id not in extra_ids]
    if n < 2:
        raise PreconditionViolation("not a hierarchical instance (needs n >= 2)")
    expected = gen_hierarchical(n, 0)
    if sorted((t.lo, t.hi, t.bandwidth) for t in base) != \
            sorted((t.lo, t.hi, t.bandwidth) for t in expected):
        raise PreconditionViolation("not a hierarchical instance")

    trails = [LightTrail(w, 0, n, {t.id: t.bandwidth}) for w, t in enumerate(extra)]
    by_class: dict[int, list[Transmission]] = defaultdict(list)
    for t in base:
        by_class[class_of(t.length)].append(t)
    remaining = sorted(by_class, reverse=True)
    w = len(extra)
    while remaining:
        span = 2 ** remaining[0]
        chosen, load = [], 0
        for c in remaining:
            # one trail of length ``span`` holds span / 2**c transmissions of class c
            add = (span >> c) * by_class[c][0].bandwidth
            if chosen and load + add > CAPACITY:
                break
            chosen.append(c)
            load += add
        for q in range(n // span):
            lo, hi = q * span, (q + 1) * span
            assigned = {t.id: t.bandwidth for c in chosen for t in by_class[c]
                        if lo <= t.lo and t.hi <= hi}
            trails.append(LightTrail(w, lo, hi, assigned))
        remaining = remaining[len(chosen):]
        w += 1
    return Schedule(n + 1, trails)
