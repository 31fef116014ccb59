import numpy as np
import pytest
from hypothesis import strategies as st

from lighttrail.core import CAPACITY, Transmission, ceil_units, link_congestion
from lighttrail.stationary import breakup


def fig1():
    """Three transmissions on three nodes whose optimum is two wavelengths."""
    return [Transmission(0, 0, 1, 600_000), Transmission(1, 1, 2, 600_000),
            Transmission(2, 0, 2, 400_000)]


@pytest.fixture
def fig1_instance():
    return fig1()


@st.composite
def instances(draw, max_nodes=12, max_items=12, min_bw=1):
    n = draw(st.integers(2, max_nodes))
    m = draw(st.integers(0, max_items))
    out = []
    for tid in range(m):
        a = draw(st.integers(0, n - 2))
        b = draw(st.integers(a + 1, n - 1))
        bw = draw(st.integers(min_bw, CAPACITY))
        out.append(Transmission(tid, a, b, bw))
    return n, out


def brute_links(instance, n):
    """Independent per-link load: count every transmission at every link it covers."""
    return [sum(t.bandwidth for t in instance if t.lo <= l < t.hi) for l in range(n - 1)]


def random_class_set(rng, n, i, m, bw_hi=CAPACITY):
    """``m`` random class-``i`` transmissions on ``n`` nodes."""
    lo_len, hi_len = 2 ** (i - 1) + 1, 2 ** i
    out = []
    for tid in range(m):
        length = int(rng.integers(lo_len, hi_len + 1))
        a = int(rng.integers(0, n - length))
        out.append(Transmission(tid, a, a + length, int(rng.integers(1, bw_hi + 1))))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def check_breakup(items, i):
    """Independent checks of a class partition against per-link scans."""
    part = breakup(items, i)
    n = max(t.hi for t in items) + 1
    whole = link_congestion(items, n).links
    assert sorted(t.id for s in part.sets for t in s) == sorted(t.id for t in items)
    assert part.k <= ceil_units(max(whole))
    remaining = list(items)
    for j, s in enumerate(part.sets, start=1):
        c_s = link_congestion(s, n).links
        c_t = link_congestion(remaining, n).links
        assert max(c_s) < 4 * CAPACITY
        for l in range(n - 1):
            if c_t[l] <= CAPACITY:
                assert c_s[l] == c_t[l]
            else:
                assert c_s[l] >= CAPACITY
        for t in s:
            for l in range(t.lo, t.hi):
                assert ceil_units(whole[l]) >= j
        snap = part.snapshots[j - 1]
        assert snap == c_t[part.lo:part.lo + len(snap)]
        ids = {t.id for t in s}
        remaining = [t for t in remaining if t.id not in ids]
    return part


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
