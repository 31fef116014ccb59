"""Text formats for instances, event traces and schedules."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable, TextIO

from .core import (Arrive, Depart, EventSequence, InvalidArgument, Schedule,
                   Transmission, link_congestion)

_HEADER = re.compile(r"#\s*(stationary|trace)\s+n\s*=\s*(\d+)")


def _lines(source: str | Path | TextIO) -> list[str]:
    if hasattr(source, "read"):
        return source.read().splitlines()
    return Path(source).read_text().splitlines()


def read_instance(source) -> tuple[int, list[Transmission]]:
    """Parse ``# stationary n=<N>`` followed by ``id src dst bandwidth_ppm`` lines."""
    n = None
    out = []
    for lineno, raw in enumerate(_lines(source), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _HEADER.match(line)
            if m and m.group(1) == "stationary":
                n = int(m.group(2))
            continue
        fields = line.split()
        if len(fields) != 4:
            raise InvalidArgument(f"line {lineno}: expected 'id src dst bandwidth_ppm'")
        tid, s, d, bw = map(int, fields)
        out.append(Transmission(tid, s, d, bw).normalized())
    if n is None:
        raise InvalidArgument("missing '# stationary n=<N>' header")
    return n, out


def format_instance(n: int, instance: Iterable[Transmission]) -> str:
    lines = [f"# stationary n={n}"]
    lines += [f"{t.id} {t.src} {t.dst} {t.bandwidth}" for t in instance]
    return "\n".join(lines) + "\n"


def read_trace(source, n: int | None = None) -> EventSequence:
    """Parse ``arrive id src dst bandwidth_ppm t`` / ``depart id t`` lines."""
    header_n = None
    events = []
    max_node = 0
    for lineno, raw in enumerate(_lines(source), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _HEADER.match(line)
            if m and m.group(1) == "trace":
                header_n = int(m.group(2))
            continue
        fields = line.split()
        try:
            if fields[0] == "arrive" and len(fields) == 6:
                tid, s, d, bw, t = map(int, fields[1:])
                events.append(Arrive(t, Transmission(tid, s, d, bw, arrival=t)))
                max_node = max(max_node, s, d)
            elif fields[0] == "depart" and len(fields) == 3:
                events.append(Depart(int(fields[2]), int(fields[1])))
            else:
                raise ValueError
        except ValueError:
            raise InvalidArgument(f"line {lineno}: malformed event {line!r}") from None
    n = n if n is not None else header_n if header_n is not None else max_node + 1
    seq = EventSequence(n, events)
    seq.check()
    return seq


def format_trace(seq: EventSequence) -> str:
    lines = [f"# trace n={seq.n}"]
    for ev in seq.events:
        if isinstance(ev, Arrive):
            t = ev.transmission
            lines.append(f"arrive {t.id} {t.src} {t.dst} {t.bandwidth} {ev.time}")
        else:
            lines.append(f"depart {ev.id} {ev.time}")
    return "\n".join(lines) + "\n"


def format_schedule(schedule: Schedule, instance: Iterable[Transmission],
                    mode: str = "nonsplittable") -> str:
    lines = []
    for tr in sorted(schedule.trails, key=lambda tr: (tr.wavelength, tr.lo, tr.hi)):
        if mode == "splittable":
            ids = [f"{tid}:{amt}" for tid, amt in sorted(tr.assigned.items())]
        else:
            ids = [str(tid) for tid in sorted(tr.assigned)]
        lines.append(" ".join([str(tr.wavelength), str(tr.lo), str(tr.hi), *ids]))
    c = link_congestion(instance, schedule.n).c
    lines.append(f"wavelengths={schedule.wavelengths} congestion_ppm={c}")
    return "\n".join(lines) + "\n"
