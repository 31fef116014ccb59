"""Lower-bound constructions and the reference schedules that certify them.

* :func:`gen_hierarchical` is a stationary instance of uniform congestion 1
  whose optimum needs about ``log n / 2`` wavelengths.
* :func:`gen_class_ladder` uses nested transmissions, one per class, that
  SeparateClass spreads over one wavelength each.
* :func:`gen_hill` and :func:`gen_allclass_killer` build a sequence that
  forces AllClass onto ``T(n) = log n + T(n / log n)`` wavelengths while one
  full-span trail would do.
* :func:`run_adaptive_adversary` watches any policy and keeps, per stage,
  transmissions that sit in distinct trails (a Hall-type matching), which
  forces ``k^2 / 2`` wavelengths against an offline ``2k - 1``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable

import networkx as nx

from .core import (CAPACITY, Arrive, ConstructionError, Depart, EventSequence,
                   InvalidArgument, InvariantViolation, LightTrail, Schedule,
                   Transmission, geometry, validate_schedule)
from .online import (AllClass, OnlineEngine, Policy, Trail, Wavelength,
                     array_trail, make_policy)


def _log2_exact(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise InvalidArgument(f"n must be a power of two, got {n}")
    return n.bit_length() - 1


# ---------------------------------------------------------------------------
# stationary: the hierarchical instance

def gen_hierarchical(n: int, extra_c: int = 0) -> list[Transmission]:
    """Every aligned interval ``[j 2^i, (j+1) 2^i]`` at bandwidth ``1/(log n + 1)``.

    Bandwidths are integer micro-units; the few units left over by the
    division go to the shortest classes so each link carries exactly one
    capacity.  ``extra_c`` full-span unit transmissions are appended.
    """
    levels = _log2_exact(n) + 1
    if extra_c < 0:
        raise InvalidArgument("extra_c must be >= 0")
    base, spare = divmod(CAPACITY, levels)
    out = []
    for i in range(levels):
        bw = base + (1 if i < spare else 0)
        span = 2 ** i
        for j in range(n // span):
            out.append(Transmission(len(out), j * span, (j + 1) * span, bw))
    for _ in range(extra_c):
        out.append(Transmission(len(out), 0, n, CAPACITY))
    return out


# ---------------------------------------------------------------------------
# SeparateClass: the class ladder

def gen_class_ladder(k: int) -> EventSequence:
    """Arrivals ``[0, 2^t]`` at times ``t = 0..k``, all leaving at ``k + 1``."""
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    bw = CAPACITY // (k + 1)
    events = [Arrive(t, Transmission(t, 0, 2 ** t, bw, arrival=t, departure=k + 1))
              for t in range(k + 1)]
    events += [Depart(k + 1, t) for t in range(k + 1)]
    return EventSequence(2 ** k + 1, events).sort()


def ladder_opt_schedule(seq: EventSequence) -> Schedule:
    """All ladder transmissions share one full-span trail."""
    items = seq.arrivals()
    hi = max(t.hi for t in items)
    return Schedule(seq.n, [LightTrail(0, 0, hi, {t.id: t.bandwidth for t in items})])


# ---------------------------------------------------------------------------
# AllClass: hills and the killer sequence

def _hill_member(c: int, x: int, q: int) -> tuple[int, int]:
    """A class-``c`` extent through link ``[x, x+1]`` inside ``[0, q]``.

    Lowest phase first, then the largest trail-point, then the longest extent.
    """
    best = None
    for length in range(2 ** (c - 1) + 1 if c else 1, 2 ** c + 1):
        for lo in range(max(0, x - length + 1), min(x, q - length) + 1):
            hi = lo + length
            if c >= 2:
                g = geometry((lo, hi))
                key = (g.phase, -g.trail_point, -length, -lo)
            else:
                key = (lo % 2 if c else 0, -lo, -length, -lo)
            if best is None or key < best[0]:
                best = (key, (lo, hi))
    if best is None:
        raise ConstructionError(f"no class-{c} transmission through link {x} fits in [0, {q}]")
    return best[1]


def gen_hill(h: int, x: int, k: int, q: int | None = None, bandwidth: int | None = None,
             first_id: int = 0) -> list[Transmission]:
    """``h`` overlapping transmissions through link ``[x, x+1]`` of classes ``k-1 .. k-h``."""
    q = 2 ** k if q is None else q
    if not 1 <= h <= k:
        raise InvalidArgument(f"hill height {h} must lie in 1..{k}")
    if not 0 <= x < q:
        raise InvalidArgument(f"link {x} outside [0, {q}]")
    bw = bandwidth if bandwidth is not None else max(1, CAPACITY // (q * q))
    out = []
    for step, c in enumerate(range(k - 1, k - h - 1, -1)):
        lo, hi = _hill_member(c, x, q)
        out.append(Transmission(first_id + step, lo, hi, bw))
    return out


def killer_stages(n: int) -> list[tuple[int, int, int]]:
    """``(q, k, unit)`` for each stage: ``k = floor(log2 q)``, stop once ``k < 2``."""
    stages, q, unit = [], n, 1
    while q >= 4:
        k = q.bit_length() - 1
        stages.append((q, k, unit))
        q, unit = q // k, unit * k
    return stages


def killer_wavelengths(n: int) -> int:
    """The recurrence ``T(n) = floor(log n) + T(floor(n / floor(log n)))`` with the cutoff above."""
    return sum(k for _, k, _ in killer_stages(n))


@dataclass
class KillerStage:
    index: int
    q: int
    k: int
    unit: int
    base: int
    pattern: dict[int, list[int]] = field(default_factory=dict)  # level -> pattern ids


@dataclass
class KillerSequence:
    events: EventSequence
    stages: list[KillerStage]
    predicted: int
    bandwidth: int


class _Builder:
    """Drives a private AllClass engine so each emitted arrival lands where intended."""

    def __init__(self, n: int):
        self.n = n
        self.engine = OnlineEngine(AllClass("array", n + 1))
        self.fiber = self.engine.fibers["line"]
        self.policy = self.engine.policy
        self.bw = max(1, CAPACITY // (n * n))
        self.events: list = []
        self.time = 0
        self.next_id = 0
        self.live: dict[int, Transmission] = {}

    def extent(self, lo, hi):
        return array_trail(lo, hi, self.n + 1)[2:]

    def mask(self, lo, hi):
        a, b = self.extent(lo, hi)
        return ((1 << (b - a)) - 1) << a

    def landing(self, lo, hi) -> tuple[str, int]:
        probe = Transmission(-1, lo, hi, self.bw)
        choice = self.policy.choose(self.fiber, self.policy.route(probe), self.bw)
        if isinstance(choice, Trail):
            return "join", choice.wavelength.index
        if isinstance(choice, Wavelength):
            return "carve", choice.index
        f = self.fiber
        return "new", (min(f.free) if f.free else f.next_index)

    def arrive(self, lo, hi) -> int:
        t = Transmission(self.next_id, lo, hi, self.bw, arrival=self.time)
        self.next_id += 1
        self.engine.arrive(t, self.time)
        self.events.append(Arrive(self.time, t))
        self.live[t.id] = t
        self.time += 1
        return t.id

    def depart(self, tid):
        self.engine.depart(tid, self.time)
        self.events.append(Depart(self.time, tid))
        del self.live[tid]
        self.time += 1

    def candidates(self, key):
        spans = [(lo, hi) for lo in range(self.n) for hi in range(lo + 1, self.n + 1)]
        return sorted(spans, key=key)


def gen_allclass_killer(n: int) -> KillerSequence:
    """Stack scaled copies of the staircase pattern against AllClass.

    Stage ``s`` works on ``q`` segments of ``unit`` links each.  With
    ``k = floor(log2 q)`` it places one pattern transmission per slot
    ``j k + i`` on wavelength ``base + i``; temporary blockers make every
    lower wavelength unusable for that slot and leave right after.  The left
    half is built under a guard hill on the last segment, the right half
    after the guard leaves.  The next stage uses ``q // k`` segments of
    ``unit * k`` links, each of which crosses every pattern wavelength so far.
    """
    if n < 4:
        raise InvalidArgument("killer sequence needs n >= 4")
    b = _Builder(n)
    stages: list[KillerStage] = []
    for index, (q, k, unit) in enumerate(killer_stages(n)):
        base = b.fiber.next_index
        stage = KillerStage(index, q, k, unit, base)
        stages.append(stage)
        m = q // k
        order = [(i, j) for i in reversed(range(k)) for j in range(m)]
        pattern = _pattern_spans(b, k, m, unit)
        left = [s for s in order if s[1] < m // 2]
        right = [s for s in order if s[1] >= m // 2]
        left_extents = {i: [b.extent(*pattern[(i, j)]) for j in range(m // 2)] for i in range(k)}
        all_left = {e for es in left_extents.values() for e in es}

        guard = []
        last = (unit * (q - 1), unit * q)
        for g in range(k - 1):
            guard.append(_place_guard(b, last, base + g, left_extents.get(g, []), all_left))
        _place_slots(b, stage, left, pattern)
        for tid in reversed(guard):
            b.depart(tid)
        _place_slots(b, stage, right, pattern)

    predicted = killer_wavelengths(n)
    if b.engine.total_allocated() != predicted:
        raise ConstructionError(
            f"AllClass allocated {b.engine.total_allocated()} wavelengths, expected {predicted}")
    return KillerSequence(EventSequence(n + 1, b.events), stages, predicted, b.bw)


def _overlaps(a, b) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def _place_guard(b: _Builder, segment, target, level_extents, forbidden) -> int:
    lo_s, hi_s = segment
    for lo, hi in b.candidates(lambda s: (-(s[1] - s[0]), s[0])):
        if not (lo <= lo_s and hi_s <= hi):
            continue
        ext = b.extent(lo, hi)
        if ext in forbidden or any(_overlaps(ext, e) for e in level_extents):
            continue
        how, w = b.landing(lo, hi)
        if how != "join" and w == target:
            return b.arrive(lo, hi)
    raise ConstructionError(f"no guard transmission lands on wavelength {target}")


def _pattern_spans(b: _Builder, k: int, m: int, unit: int) -> dict:
    """Pattern transmission per slot: inside its window, trail clear of its level-mates.

    With power-of-two units this is the whole window; otherwise a trail can
    outgrow the gap to the next same-level slot, so a shorter span is used.
    """
    live = {key for wl in b.fiber.order for key in wl.trails}
    spans = {}
    for i in range(k):
        windows = [(unit * (j * k + i), unit * (j * k + i + 1)) for j in range(m)]
        placed = []
        for j, (a, z) in enumerate(windows):
            later = windows[j + 1:]
            for lo, hi in sorted(((lo, hi) for lo in range(a, z) for hi in range(lo + 1, z + 1)),
                                 key=lambda s: (s[0] - s[1], s[0])):
                ext = b.extent(lo, hi)
                if ext in live or any(_overlaps(ext, e) for e in placed + later):
                    continue
                spans[(i, j)] = (lo, hi)
                placed.append(ext)
                break
            else:
                raise ConstructionError(f"no pattern transmission fits slot {(i, j)}")
    return spans


def _place_slots(b: _Builder, stage: KillerStage, slots, pattern) -> None:
    for i, j in slots:
        lo, hi = pattern[(i, j)]
        target = stage.base + i
        e_p = b.extent(lo, hi)
        m_p = b.mask(lo, hi)
        blockers = []
        while True:
            how, w = b.landing(lo, hi)
            if how != "join" and w == target:
                break
            if how == "join" or w > target:
                raise ConstructionError(f"pattern slot {(i, j)} cannot reach wavelength {target}")
            blockers.append(_place_blocker(b, w, e_p, m_p))
        stage.pattern.setdefault(i, []).append(b.arrive(lo, hi))
        for tid in reversed(blockers):
            b.depart(tid)


def _place_blocker(b: _Builder, target, e_p, m_p) -> int:
    # shortest first: short temporary trails disturb the least
    for lo, hi in b.candidates(lambda s: (s[1] - s[0], s[0])):
        if not b.mask(lo, hi) & m_p or b.extent(lo, hi) == e_p:
            continue
        how, w = b.landing(lo, hi)
        if how == "carve" and w == target:
            return b.arrive(lo, hi)
    raise ConstructionError(f"no blocker lands on wavelength {target}")


# ---------------------------------------------------------------------------
# the adaptive adversary

@dataclass
class BipartiteGraph:
    """Groups on the left, trails on the right, one edge per transmission."""

    left: list
    right: list
    edges: list[tuple[object, object, int]]  # (group, trail, transmission id)

    def degrees(self) -> tuple[dict, dict]:
        du: dict = defaultdict(int)
        dv: dict = defaultdict(int)
        for u, v, _ in self.edges:
            du[u] += 1
            dv[v] += 1
        return dict(du), dict(dv)

    def check_degrees(self, k: int) -> None:
        du, dv = self.degrees()
        if any(du.get(u, 0) != k for u in self.left):
            raise InvariantViolation("a group does not have exactly k edges")
        if any(d > k for d in dv.values()):
            raise InvariantViolation("a trail carries more than k stage transmissions")


def bipartite_match(g: BipartiteGraph) -> dict:
    """Maximum matching as ``{group: (trail, transmission id)}``."""
    graph = nx.Graph()
    left = [("u", u) for u in g.left]
    graph.add_nodes_from(left, bipartite=0)
    graph.add_nodes_from((("v", v) for v in g.right), bipartite=1)
    label = {}
    for u, v, tid in g.edges:
        graph.add_edge(("u", u), ("v", v))
        label.setdefault((u, v), tid)
    mate = nx.bipartite.hopcroft_karp_matching(graph, top_nodes=left)
    return {u: (mate[("u", u)][1], label[(u, mate[("u", u)][1])])
            for u in g.left if ("u", u) in mate}


@dataclass
class StageRecord:
    index: int
    intervals: list[tuple[int, int]]
    arrivals: list[Transmission]
    kept: list[int]
    departed: list[int]
    matching: dict
    graph: BipartiteGraph


@dataclass
class AdaptiveRun:
    events: EventSequence
    stages: list[StageRecord]
    k: int
    alg_peak: int
    alg_final: int
    placements: dict
    opt: "OptTrace"


def run_adaptive_adversary(policy: str | Callable[[int], Policy], n: int) -> AdaptiveRun:
    """Play the stage game on nodes ``0..n`` against ``policy`` (array topology).

    ``policy`` is a built-in name or a factory taking the node count.
    """
    k = _log2_exact(n)
    if k < 1:
        raise InvalidArgument("adaptive adversary needs n >= 2")
    pol = make_policy(policy, "array", n + 1) if isinstance(policy, str) else policy(n + 1)
    engine = OnlineEngine(pol)
    bw = CAPACITY // k
    events: list = []
    stages: list[StageRecord] = []
    next_id = 0
    for i in range(k):
        span = 2 ** i
        intervals = [(q * span, (q + 1) * span) for q in range(n // span)]
        arrivals, groups = [], []
        for qi, (lo, hi) in enumerate(intervals):
            batch = []
            for _ in range(k * k):
                t = Transmission(next_id, lo, hi, bw, arrival=2 * i)
                next_id += 1
                engine.arrive(t, 2 * i)
                events.append(Arrive(2 * i, t))
                batch.append(t)
            arrivals += batch
            # arbitrary grouping: consecutive blocks of k in arrival order
            groups += [((qi, g), batch[g * k:(g + 1) * k]) for g in range(k)]
        edges = [(u, engine.placement(t.id).trail, t.id) for u, members in groups for t in members]
        graph = BipartiteGraph([u for u, _ in groups], sorted({v for _, v, _ in edges}), edges)
        graph.check_degrees(k)
        matching = bipartite_match(graph)
        if len(matching) != len(graph.left):
            raise InvariantViolation(
                f"stage {i}: matching covers {len(matching)} of {len(graph.left)} groups")
        kept = sorted(tid for _, tid in matching.values())
        keep = set(kept)
        departed = [t.id for t in arrivals if t.id not in keep]
        for tid in departed:
            engine.depart(tid, 2 * i + 1)
            events.append(Depart(2 * i + 1, tid))
        stages.append(StageRecord(i, intervals, arrivals, kept, departed, matching, graph))

    res = engine.result()
    return AdaptiveRun(EventSequence(n + 1, events), stages, k, res.peak_wavelengths,
                       res.final_wavelengths, res.bindings, build_opt_stage_schedule(stages, n))


@dataclass
class OptTrace:
    """Offline schedule snapshots: after each stage's arrivals and after its departures."""

    snapshots: list[tuple[int, list[Transmission], Schedule]]

    @property
    def peak(self) -> int:
        return max((s.wavelengths for _, _, s in self.snapshots), default=0)

    def validate(self) -> list[str]:
        problems = []
        for time, active, schedule in self.snapshots:
            report = validate_schedule(active, schedule, "nonsplittable")
            problems += [f"t={time}: {v}" for v in report.violations]
        return problems


def build_opt_stage_schedule(stages: list[StageRecord], n: int) -> OptTrace:
    """One wavelength per stage for the kept set, ``k - 1`` transient ones for the rest."""
    snapshots = []
    kept_trails: list[LightTrail] = []
    kept_items: list[Transmission] = []
    for rec in stages:
        by_id = {t.id: t for t in rec.arrivals}
        w = rec.index
        per_interval: dict[tuple[int, int], list[Transmission]] = defaultdict(list)
        for tid in rec.kept:
            per_interval[(by_id[tid].lo, by_id[tid].hi)].append(by_id[tid])
        stage_kept = []
        for lo, hi in rec.intervals:
            members = per_interval.get((lo, hi), [])
            tr = LightTrail(w, lo, hi, {t.id: t.bandwidth for t in members})
            if tr.load > CAPACITY:
                raise InvariantViolation(f"stage {rec.index}: kept set overfills [{lo}, {hi}]")
            stage_kept.append(tr)
        k = len(rec.arrivals) // max(1, len(rec.intervals))
        k = max(1, round(k ** 0.5))
        transient: dict[tuple[int, int], list[Transmission]] = defaultdict(list)
        for tid in rec.departed:
            transient[(by_id[tid].lo, by_id[tid].hi)].append(by_id[tid])
        extra = []
        for lo, hi in rec.intervals:
            members = transient.get((lo, hi), [])
            for layer in range(k - 1):
                chunk = members[layer * k:(layer + 1) * k]
                if chunk:
                    extra.append(LightTrail(w + 1 + layer, lo, hi, {t.id: t.bandwidth for t in chunk}))
            if len(members) > k * (k - 1):
                raise InvariantViolation(f"stage {rec.index}: too many departing transmissions")
        active = kept_items + rec.arrivals
        snapshots.append((2 * rec.index, active,
                          Schedule(n + 1, kept_trails + stage_kept + extra)))
        kept_trails = kept_trails + stage_kept
        kept_items = kept_items + [by_id[tid] for tid in rec.kept]
        snapshots.append((2 * rec.index + 1, list(kept_items), Schedule(n + 1, list(kept_trails))))
    return OptTrace(snapshots)
