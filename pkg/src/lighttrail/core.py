"""Domain types and combinatorial kernels shared by every scheduler.

Bandwidths are integer micro-units of one wavelength's capacity, so all
capacity arithmetic is exact.  Nodes are integers; the link between node
``l`` and ``l + 1`` is link ``l``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

CAPACITY = 1_000_000


class LightTrailError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgument(LightTrailError, ValueError):
    pass


class NotApplicable(LightTrailError, ValueError):
    pass


class PreconditionViolation(LightTrailError, ValueError):
    pass


class MalformedSequence(LightTrailError, ValueError):
    pass


class ConstructionError(LightTrailError, RuntimeError):
    pass


class InvariantViolation(LightTrailError, RuntimeError):
    pass


def ppm(fraction: float) -> int:
    """Convert a fraction of capacity to micro-units (rounded)."""
    return int(round(fraction * CAPACITY))


def ceil_units(micro: int) -> int:
    """Number of whole wavelengths needed to carry ``micro`` micro-units."""
    return -(-micro // CAPACITY)


@dataclass(frozen=True)
class Transmission:
    id: int
    src: int
    dst: int
    bandwidth: int
    arrival: int | None = None
    departure: int | None = None

    def __post_init__(self):
        if self.src == self.dst:
            raise InvalidArgument(f"transmission {self.id}: src == dst == {self.src}")
        if not 0 < self.bandwidth <= CAPACITY:
            raise InvalidArgument(
                f"transmission {self.id}: bandwidth {self.bandwidth} outside (0, {CAPACITY}]")
        if (self.arrival is not None and self.departure is not None
                and self.arrival >= self.departure):
            raise InvalidArgument(f"transmission {self.id}: arrival >= departure")

    @property
    def lo(self) -> int:
        return min(self.src, self.dst)

    @property
    def hi(self) -> int:
        return max(self.src, self.dst)

    @property
    def length(self) -> int:
        return self.hi - self.lo

    def normalized(self) -> Transmission:
        """Undirected form with ``src < dst``."""
        if self.src < self.dst:
            return self
        return Transmission(self.id, self.dst, self.src, self.bandwidth,
                            self.arrival, self.departure)


class Interval(NamedTuple):
    """Closed node interval ``[lo, hi]`` on a linear array; covers links lo..hi-1."""

    lo: int
    hi: int

    @property
    def length(self) -> int:
        return self.hi - self.lo

    def contains(self, other: tuple[int, int]) -> bool:
        return self.lo <= other[0] and other[1] <= self.hi

    def overlaps(self, other: tuple[int, int]) -> bool:
        # sharing an endpoint node is not a conflict
        return self.lo < other[1] and other[0] < self.hi


@dataclass(frozen=True)
class Geometry:
    class_index: int
    anchor: int
    trail_point: int
    phase: int

    @property
    def trail(self) -> Interval:
        return Interval(self.trail_point, self.trail_point + 2 ** (self.class_index + 1))


def class_of(length: int) -> int:
    """Smallest ``i`` with ``2**(i-1) < length <= 2**i``."""
    if length < 1:
        raise InvalidArgument(f"length must be >= 1, got {length}")
    return (length - 1).bit_length()


def geometry(t: Transmission | tuple[int, int]) -> Geometry:
    """Anchor, trail-point and phase of a class >= 2 transmission."""
    lo, hi = (t.lo, t.hi) if isinstance(t, Transmission) else (min(t), max(t))
    i = class_of(hi - lo)
    if i < 2:
        raise NotApplicable(f"geometry undefined for class {i} (length {hi - lo})")
    step = 2 ** (i - 1)
    anchor = (lo // step + 1) * step
    assert lo < anchor < hi
    trail_point = anchor - step
    return Geometry(i, anchor, trail_point, (trail_point // step) % 4)


# ---------------------------------------------------------------------------
# congestion

@dataclass
class CongestionProfile:
    links: list[int]

    @property
    def c(self) -> int:
        return max(self.links, default=0)


def link_congestion(instance: Iterable[Transmission], n: int) -> CongestionProfile:
    """Per-link total bandwidth for an undirected instance on ``n`` nodes."""
    diff = [0] * (n + 1)
    for t in instance:
        if t.hi >= n or t.lo < 0:
            raise InvalidArgument(f"transmission {t.id} outside nodes 0..{n - 1}")
        diff[t.lo] += t.bandwidth
        diff[t.hi] -= t.bandwidth
    links, run = [], 0
    for l in range(max(n - 1, 0)):
        run += diff[l]
        links.append(run)
    return CongestionProfile(links)


@dataclass(frozen=True)
class Arrive:
    time: int
    transmission: Transmission

    @property
    def id(self) -> int:
        return self.transmission.id


@dataclass(frozen=True)
class Depart:
    time: int
    id: int


Event = Arrive | Depart


def event_key(ev: Event) -> tuple[int, int, int]:
    # departures first at equal times: activity intervals are [arrival, departure)
    return (ev.time, 0 if isinstance(ev, Depart) else 1, ev.id)


@dataclass
class EventSequence:
    n: int
    events: list[Event] = field(default_factory=list)

    def sort(self) -> EventSequence:
        self.events.sort(key=event_key)
        return self

    def check(self) -> None:
        """Raise MalformedSequence unless time-ordered with matched departures."""
        active: set[int] = set()
        seen: set[int] = set()
        last = None
        for ev in self.events:
            key = event_key(ev)
            if last is not None and key[:2] < last[:2]:
                raise MalformedSequence(f"event out of order at time {ev.time}")
            last = key
            if isinstance(ev, Arrive):
                if ev.id in seen:
                    raise MalformedSequence(f"transmission {ev.id} arrives twice")
                seen.add(ev.id)
                active.add(ev.id)
            else:
                if ev.id not in active:
                    raise MalformedSequence(f"departure of unknown or inactive id {ev.id}")
                active.remove(ev.id)

    def arrivals(self) -> list[Transmission]:
        return [ev.transmission for ev in self.events if isinstance(ev, Arrive)]


def dynamic_congestion(events: EventSequence, n: int | None = None) -> int:
    """Max over time and links of the active set's congestion (undirected array)."""
    n = events.n if n is None else n
    load = [0] * max(n - 1, 0)
    active: dict[int, Transmission] = {}
    best = 0
    for ev in events.events:
        if isinstance(ev, Arrive):
            t = ev.transmission
            active[t.id] = t
            for l in range(t.lo, t.hi):
                load[l] += t.bandwidth
                if load[l] > best:
                    best = load[l]
        else:
            t = active.pop(ev.id, None)
            if t is None:
                raise MalformedSequence(f"departure of unknown or inactive id {ev.id}")
            for l in range(t.lo, t.hi):
                load[l] -= t.bandwidth
    return best


# ---------------------------------------------------------------------------
# schedules

@dataclass
class LightTrail:
    wavelength: int
    lo: int
    hi: int
    assigned: dict[int, int] = field(default_factory=dict)
    label: tuple[int, int] | None = None

    @property
    def extent(self) -> Interval:
        return Interval(self.lo, self.hi)

    @property
    def load(self) -> int:
        return sum(self.assigned.values())


@dataclass
class Schedule:
    n: int
    trails: list[LightTrail] = field(default_factory=list)

    @property
    def wavelengths(self) -> int:
        return len({tr.wavelength for tr in self.trails})

    def by_wavelength(self) -> dict[int, list[LightTrail]]:
        out: dict[int, list[LightTrail]] = {}
        for tr in sorted(self.trails, key=lambda tr: (tr.wavelength, tr.lo, tr.hi)):
            out.setdefault(tr.wavelength, []).append(tr)
        return out

    def assignment(self) -> dict[int, list[tuple[LightTrail, int]]]:
        out: dict[int, list[tuple[LightTrail, int]]] = {}
        for tr in self.trails:
            for tid, amount in tr.assigned.items():
                out.setdefault(tid, []).append((tr, amount))
        return out


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_schedule(instance: Iterable[Transmission], schedule: Schedule,
                      mode: str = "nonsplittable") -> ValidationReport:
    if mode not in ("splittable", "nonsplittable"):
        raise InvalidArgument(f"unknown mode {mode!r}")
    report = ValidationReport()
    bad = report.violations
    by_id = {t.id: t.normalized() for t in instance}

    for tr in schedule.trails:
        where = f"trail w{tr.wavelength}[{tr.lo},{tr.hi}]"
        if not 0 <= tr.lo < tr.hi <= schedule.n - 1:
            bad.append(f"{where}: extent outside nodes 0..{schedule.n - 1}")
        if tr.load > CAPACITY:
            bad.append(f"{where}: capacity overflow {tr.load} > {CAPACITY}")
        for tid, amount in tr.assigned.items():
            t = by_id.get(tid)
            if t is None:
                bad.append(f"{where}: unknown transmission {tid}")
                continue
            if amount <= 0:
                bad.append(f"{where}: non-positive share {amount} for {tid}")
            if not (tr.lo <= t.lo and t.hi <= tr.hi):
                bad.append(f"{where}: transmission {tid} [{t.lo},{t.hi}] not contained")

    for w, trails in schedule.by_wavelength().items():
        for a, b in zip(trails, trails[1:]):
            if b.lo < a.hi:
                bad.append(f"wavelength {w}: trails [{a.lo},{a.hi}] and [{b.lo},{b.hi}] overlap")

    parts = schedule.assignment()
    for tid, t in by_id.items():
        shares = parts.get(tid)
        if not shares:
            bad.append(f"transmission {tid} unassigned")
            continue
        total = sum(a for _, a in shares)
        if mode == "nonsplittable" and len(shares) != 1:
            bad.append(f"transmission {tid} split across {len(shares)} trails")
        if total != t.bandwidth:
            bad.append(f"transmission {tid}: assigned {total} != bandwidth {t.bandwidth}")
    return report


# ---------------------------------------------------------------------------
# kernels

def first_fit_pack(items: Sequence[int], mode: str = "nonsplittable") -> list[list[tuple[int, int]]]:
    """Pack item sizes into unit bins.

    Returns one list per bin of ``(item_index, amount)`` pairs.  In splittable
    mode items fill bins in order and are split at bin boundaries, so the bin
    count is ``ceil(sum / CAPACITY)``.
    """
    for s in items:
        if not 0 < s <= CAPACITY:
            raise InvalidArgument(f"item size {s} outside (0, {CAPACITY}]")
    bins: list[list[tuple[int, int]]] = []
    if mode == "splittable":
        room = 0
        for idx, s in enumerate(items):
            while s:
                if room == 0:
                    bins.append([])
                    room = CAPACITY
                take = min(s, room)
                bins[-1].append((idx, take))
                room -= take
                s -= take
        return bins
    if mode != "nonsplittable":
        raise InvalidArgument(f"unknown mode {mode!r}")
    loads: list[int] = []
    for idx, s in enumerate(items):
        for b, used in enumerate(loads):
            if used + s <= CAPACITY:
                bins[b].append((idx, s))
                loads[b] += s
                break
        else:
            bins.append([(idx, s)])
            loads.append(s)
    return bins


def interval_color(intervals: Sequence[tuple[int, int]]) -> list[int]:
    """Optimal coloring of array intervals; sharing only an endpoint is allowed.

    Sweep by left endpoint (ties by input order), reusing the smallest freed
    color.  Uses exactly max-link-load colors.
    """
    order = sorted(range(len(intervals)), key=lambda i: (intervals[i][0], i))
    colors = [-1] * len(intervals)
    active: list[tuple[int, int]] = []  # (hi, color)
    free: list[int] = []
    used = 0
    for i in order:
        lo, hi = intervals[i]
        while active and active[0][0] <= lo:
            heapq.heappush(free, heapq.heappop(active)[1])
        if free:
            c = heapq.heappop(free)
        else:
            c = used
            used += 1
        colors[i] = c
        heapq.heappush(active, (hi, c))
    return colors


def max_link_load(intervals: Iterable[tuple[int, int]]) -> int:
    """Largest number of intervals sharing one link (point-load scan)."""
    deltas: dict[int, int] = {}
    for lo, hi in intervals:
        deltas[lo] = deltas.get(lo, 0) + 1
        deltas[hi] = deltas.get(hi, 0) - 1
    best = run = 0
    for x in sorted(deltas):
        run += deltas[x]
        best = max(best, run)
    return best
