"""Online assignment of arriving transmissions to light-trails.

Three policies share one engine:

``separate``
    every wavelength serves a single (class, phase) grid;
``all``
    wavelengths are unlabeled and trails of any class are carved from
    unused segments;
``baseline``
    one trail per wavelength spanning the whole array or ring.

An assigned transmission never moves.  A wavelength with no live trail is
released and its index becomes reusable (lowest index first); policies scan
live wavelengths in the order they were allocated.

On a ring each direction is a separate fiber with its own wavelengths; the
reported wavelength count at an instant is the larger of the two fibers.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple

from .core import (CAPACITY, Arrive, EventSequence, InvalidArgument,
                   InvariantViolation, MalformedSequence, Transmission,
                   ceil_units, class_of, geometry)

POLICIES = ("separate", "all", "baseline")
TOPOLOGIES = ("array", "ring")


# ---------------------------------------------------------------------------
# geometry

def ring_direction(s: int, d: int, n: int) -> str:
    """Shorter arc wins; an exact half-ring tie goes clockwise."""
    if s == d:
        raise InvalidArgument("ring_direction needs s != d")
    cw = (d - s) % n
    return "cw" if 2 * cw <= n else "ccw"


def ring_boundary(j: int, n: int, i: int) -> int:
    """floor(j * n / 2**i + 1/2) in integer arithmetic."""
    return (2 * j * n + 2 ** i) // 2 ** (i + 1)


class RingTrail(NamedTuple):
    class_index: int
    phase: int
    start: int
    length: int


@lru_cache(maxsize=None)
def ring_trails(n: int) -> tuple[RingTrail, ...]:
    """All class/phase trails of the simplified two-phase grid, finest class first."""
    top = n.bit_length() - 1  # largest i with 2**i <= n
    out = []
    for i in range(top, -1, -1):
        cuts = [ring_boundary(j, n, i) for j in range(2 ** i)] + [n]
        shift = (n + 2 ** i) // 2 ** (i + 1)  # round(n / 2**(i+1))
        for phase, offset in ((0, 0), (2, shift)):
            for a, b in zip(cuts, cuts[1:]):
                out.append(RingTrail(i, phase, (a + offset) % n, b - a))
    return tuple(out)


@lru_cache(maxsize=None)
def ring_geometry(start: int, length: int, n: int) -> RingTrail:
    """Finest class, then lowest phase, whose trail contains the clockwise arc."""
    if not 1 <= length <= n:
        raise InvalidArgument(f"arc length {length} outside 1..{n}")
    for tr in ring_trails(n):
        if (start - tr.start) % n + length <= tr.length:
            return tr
    raise InvariantViolation(f"no ring trail contains arc ({start}, {length})")


def array_trail(lo: int, hi: int, n: int) -> tuple[int, int, int, int]:
    """(class, phase, trail_lo, trail_hi) for an array transmission on ``n`` nodes.

    Classes 0 and 1 use their own extent (every-node and even/odd grids);
    larger classes use ``[x, x + 2**(i+1)]`` from the trail-point, cut at the
    last node.
    """
    i = class_of(hi - lo)
    if i == 0:
        return 0, 0, lo, hi
    if i == 1:
        return 1, lo % 2, lo, hi
    g = geometry((lo, hi))
    return i, g.phase, g.trail_point, min(g.trail_point + 2 ** (i + 1), n - 1)


def _span_mask(lo: int, hi: int) -> int:
    return ((1 << (hi - lo)) - 1) << lo


def _arc_mask(start: int, length: int, n: int) -> int:
    m = ((1 << length) - 1) << start
    full = (1 << n) - 1
    return (m | (m >> n)) & full


def _arc_links(start: int, length: int, n: int) -> list[int]:
    return [(start + k) % n for k in range(length)]


# ---------------------------------------------------------------------------
# engine state

class Trail:
    __slots__ = ("uid", "key", "mask", "load", "members", "wavelength")

    def __init__(self, uid, key, mask, wavelength):
        self.uid = uid
        self.key = key
        self.mask = mask
        self.load = 0
        self.members: dict[int, int] = {}
        self.wavelength = wavelength


class Wavelength:
    __slots__ = ("index", "trails", "used", "label")

    def __init__(self, index, label=None):
        self.index = index
        self.trails: dict = {}
        self.used = 0
        self.label = label


class Fiber:
    __slots__ = ("name", "order", "free", "next_index", "by_label", "links")

    def __init__(self, name, nlinks):
        self.name = name
        self.order: list[Wavelength] = []
        self.free: list[int] = []
        self.next_index = 0
        self.by_label: dict = {}
        self.links = [0] * nlinks

    def allocate(self, label=None) -> Wavelength:
        index = heapq.heappop(self.free) if self.free else self.next_index
        if index == self.next_index:
            self.next_index += 1
        wl = Wavelength(index, label)
        self.order.append(wl)
        if label is not None:
            self.by_label.setdefault(label, []).append(wl)
        return wl

    def release(self, wl: Wavelength) -> None:
        self.order.remove(wl)
        if wl.label is not None:
            group = self.by_label[wl.label]
            group.remove(wl)
            if not group:
                del self.by_label[wl.label]
            wl.label = None
        heapq.heappush(self.free, wl.index)


class Route(NamedTuple):
    fiber: str
    key: tuple
    mask: int
    label: tuple | None
    links: list


class Placement(NamedTuple):
    fiber: str
    wavelength: int
    trail: int
    extent: tuple


# ---------------------------------------------------------------------------
# policies

class Policy:
    name = "policy"

    def __init__(self, topology: str, n: int):
        if topology not in TOPOLOGIES:
            raise InvalidArgument(f"unknown topology {topology!r}")
        if n < 2:
            raise InvalidArgument("need at least 2 nodes")
        self.topology = topology
        self.n = n
        self.fibers = ("line",) if topology == "array" else ("cw", "ccw")
        self._cache: dict = {}

    def route(self, t: Transmission) -> Route:
        key = (t.src, t.dst)
        r = self._cache.get(key)
        if r is None:
            r = self._cache[key] = self._route(t.src, t.dst)
        return r

    def _route(self, s: int, d: int) -> Route:
        n = self.n
        if self.topology == "array":
            lo, hi = min(s, d), max(s, d)
            if hi >= n:
                raise InvalidArgument(f"node {hi} outside 0..{n - 1}")
            c, p, tlo, thi = self._array_trail(lo, hi)
            return Route("line", (tlo, thi), _span_mask(tlo, thi), (c, p),
                         list(range(lo, hi)))
        if max(s, d) >= n:
            raise InvalidArgument(f"node {max(s, d)} outside 0..{n - 1}")
        fiber = self._direction(s, d)
        start, length = (s, (d - s) % n) if fiber == "cw" else (d, (s - d) % n)
        tr = self._ring_trail(start, length)
        return Route(fiber, (tr.start, tr.length), _arc_mask(tr.start, tr.length, n),
                     (tr.class_index, tr.phase), _arc_links(start, length, n))

    def _array_trail(self, lo, hi):
        return array_trail(lo, hi, self.n)

    def _direction(self, s, d):
        return ring_direction(s, d, self.n)

    def _ring_trail(self, start, length):
        return ring_geometry(start, length, self.n)

    def choose(self, fiber: Fiber, route: Route, bandwidth: int):
        """Return a Trail to join, a Wavelength to carve on, or None for a new wavelength."""
        raise NotImplementedError


class SeparateClass(Policy):
    name = "separate"

    def choose(self, fiber, route, bandwidth):
        for wl in fiber.by_label.get(route.label, ()):
            tr = wl.trails.get(route.key)
            if tr is None:
                return wl
            if tr.load + bandwidth <= CAPACITY:
                return tr
        return None


class AllClass(Policy):
    name = "all"

    def choose(self, fiber, route, bandwidth):
        key = route.key
        for wl in fiber.order:
            tr = wl.trails.get(key)
            if tr is not None and tr.load + bandwidth <= CAPACITY:
                return tr
        mask = route.mask
        for wl in fiber.order:
            if not wl.used & mask:
                return wl
        return None


class Baseline(Policy):
    """Single OFF shutter at node 0; lower-to-higher traffic goes clockwise."""

    name = "baseline"

    def _array_trail(self, lo, hi):
        return 0, 0, 0, self.n - 1

    def _direction(self, s, d):
        return "cw" if s < d else "ccw"

    def _ring_trail(self, start, length):
        return RingTrail(0, 0, 0, self.n)

    def choose(self, fiber, route, bandwidth):
        key = route.key
        for wl in fiber.order:
            tr = wl.trails[key]
            if tr.load + bandwidth <= CAPACITY:
                return tr
        return None


_POLICY_TYPES = {cls.name: cls for cls in (SeparateClass, AllClass, Baseline)}


def make_policy(name: str, topology: str, n: int) -> Policy:
    try:
        return _POLICY_TYPES[name](topology, n)
    except KeyError:
        raise InvalidArgument(f"unknown policy {name!r}; choose from {POLICIES}") from None


# ---------------------------------------------------------------------------
# engine

@dataclass
class OnlineResult:
    policy: str
    topology: str
    n: int
    peak_wavelengths: int
    final_wavelengths: int
    total_allocated: int
    congestion: int
    trace: list = field(default_factory=list)
    bindings: dict = field(default_factory=dict)

    def line(self) -> str:
        return (f"{self.policy},{self.n},{self.topology},{self.peak_wavelengths},"
                f"{self.total_allocated},{self.congestion}")


class OnlineEngine:
    """Processes arrivals and departures one at a time for one policy."""

    def __init__(self, policy: str | Policy, topology: str = "array", n: int | None = None,
                 record: bool = False):
        if isinstance(policy, Policy):
            self.policy = policy
        else:
            if n is None:
                raise InvalidArgument("node count required")
            self.policy = make_policy(policy, topology, n)
        self.n = self.policy.n
        nlinks = self.n - 1 if self.policy.topology == "array" else self.n
        self.fibers = {name: Fiber(name, nlinks) for name in self.policy.fibers}
        self.record = record
        self.trace: list = []
        self.bindings: dict[int, Placement] = {}
        self._active: dict[int, tuple[Trail, Route, int]] = {}
        self._uid = 0
        self.peak = 0
        self.congestion = 0
        self._time = None

    # -- observers -------------------------------------------------------
    def in_use(self) -> int:
        return max(len(f.order) for f in self.fibers.values())

    def total_allocated(self) -> int:
        return max(f.next_index for f in self.fibers.values())

    def placement(self, tid: int) -> Placement:
        return self.bindings[tid]

    def snapshot(self) -> dict[str, list[tuple[int, tuple | None, list[tuple]]]]:
        """Per fiber, live wavelengths in allocation order with their trails."""
        out = {}
        for name, fiber in self.fibers.items():
            out[name] = [
                (wl.index, wl.label,
                 sorted((tr.key, tr.load, tuple(sorted(tr.members))) for tr in wl.trails.values()))
                for wl in fiber.order]
        return out

    def _tick(self, time):
        if time is None:
            return
        if self._time is not None and time < self._time:
            raise MalformedSequence(f"time went backwards: {time} < {self._time}")
        self._time = time

    # -- events ------------------------------------------------------------
    def arrive(self, t: Transmission, time: int | None = None) -> Placement:
        self._tick(time)
        if t.id in self._active:
            raise MalformedSequence(f"transmission {t.id} already active")
        route = self.policy.route(t)
        fiber = self.fibers[route.fiber]
        bw = t.bandwidth
        choice = self.policy.choose(fiber, route, bw)
        if isinstance(choice, Trail):
            tr = choice
        else:
            wl = choice if choice is not None else fiber.allocate(
                route.label if isinstance(self.policy, SeparateClass) else None)
            if wl.used & route.mask:
                raise InvariantViolation("carved trail overlaps a live trail")
            self._uid += 1
            tr = Trail(self._uid, route.key, route.mask, wl)
            wl.trails[route.key] = tr
            wl.used |= route.mask
        if tr.load + bw > CAPACITY:
            raise InvariantViolation(f"trail {tr.uid} over capacity")
        tr.load += bw
        tr.members[t.id] = bw
        self._active[t.id] = (tr, route, bw)
        place = Placement(route.fiber, tr.wavelength.index, tr.uid, route.key)
        self.bindings[t.id] = place

        links = fiber.links
        for l in route.links:
            links[l] += bw
            if links[l] > self.congestion:
                self.congestion = links[l]
        used = len(fiber.order)
        if used > self.peak:
            self.peak = used
        if self.record:
            self.trace.append((time, "arrive", t.id, route.fiber, place.wavelength, tr.uid, route.key))
        return place

    def depart(self, tid: int, time: int | None = None) -> None:
        self._tick(time)
        entry = self._active.pop(tid, None)
        if entry is None:
            raise MalformedSequence(f"departure of unknown or inactive id {tid}")
        tr, route, bw = entry
        if self.bindings[tid].trail != tr.uid or tid not in tr.members:
            raise InvariantViolation(f"transmission {tid} moved while active")
        del tr.members[tid]
        tr.load -= bw
        fiber = self.fibers[route.fiber]
        for l in route.links:
            fiber.links[l] -= bw
        wl = tr.wavelength
        if not tr.members:
            del wl.trails[tr.key]
            wl.used &= ~tr.mask
            if not wl.trails:
                fiber.release(wl)
        if self.record:
            self.trace.append((time, "depart", tid, route.fiber, wl.index, tr.uid, route.key))

    def result(self) -> OnlineResult:
        return OnlineResult(self.policy.name, self.policy.topology, self.n, self.peak,
                            self.in_use(), self.total_allocated(), self.congestion,
                            self.trace, dict(self.bindings))


def run_online(events: EventSequence, policy: str | Policy = "separate",
               topology: str = "array", n: int | None = None, record: bool = False,
               check: bool = True) -> OnlineResult:
    """Feed an event sequence through one policy and report wavelength usage."""
    if check:
        events.check()
    engine = OnlineEngine(policy, topology, events.n if n is None else n, record)
    arrive, depart = engine.arrive, engine.depart
    for ev in events.events:
        if type(ev) is Arrive:
            arrive(ev.transmission, ev.time)
        else:
            depart(ev.id, ev.time)
    res = engine.result()
    if res.peak_wavelengths < ceil_units(res.congestion):
        raise InvariantViolation("peak wavelengths below the congestion bound")
    return res


def replay(engine: OnlineEngine, events: Iterable) -> None:
    for ev in events:
        if isinstance(ev, Arrive):
            engine.arrive(ev.transmission, ev.time)
        else:
            engine.depart(ev.id, ev.time)
