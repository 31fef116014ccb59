import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lighttrail.adversaries import gen_class_ladder
from lighttrail.core import (CAPACITY, InvalidArgument, PreconditionViolation, Transmission,
                             ceil_units, link_congestion, validate_schedule)
from lighttrail.harness import (CSV_VERSION, ExperimentConfig, ResultRow, SearchExhausted,
                                aggregate, brute_force_opt, check_against_oracle,
                                random_instance, rows_csv, run_experiment, summary_csv)
from lighttrail.stationary import schedule_stationary

from conftest import instances

T = Transmission


def wavelength_fits(items):
    """Overlapping transmissions on one wavelength must share a trail."""
    items = sorted(items, key=lambda t: t.lo)
    load, reach = 0, None
    for t in items:
        if reach is None or t.lo >= reach:
            load, reach = 0, t.hi
        load += t.bandwidth
        reach = max(reach, t.hi)
        if load > CAPACITY:
            return False
    return True


def exhaustive_opt(items):
    for w in range(1, len(items) + 1):
        for colors in itertools.product(range(w), repeat=len(items)):
            if all(wavelength_fits([t for t, c in zip(items, colors) if c == k]) for k in range(w)):
                return w
    return 0


class TestOracle:
    def test_fig1(self, fig1_instance):
        res = brute_force_opt(fig1_instance, 3)
        assert res.wavelengths == 2
        assert validate_schedule(fig1_instance, res.schedule).ok

    def test_single(self):
        assert brute_force_opt([T(0, 2, 5, 10)], 6).wavelengths == 1
        assert brute_force_opt([], 4).wavelengths == 0

    def test_ladder_snapshot(self):
        snap = gen_class_ladder(4).arrivals()
        # the 5 ladder members span 17 nodes; compress to the envelope
        squeezed = [T(t.id, 0, i + 1, t.bandwidth) for i, t in enumerate(snap)]
        res = brute_force_opt(squeezed, 6)
        assert sum(t.bandwidth for t in squeezed) == CAPACITY
        assert res.wavelengths == 1 and validate_schedule(squeezed, res.schedule).ok

    def test_envelope(self):
        with pytest.raises(PreconditionViolation):
            brute_force_opt([T(i, 0, 1, 1) for i in range(11)], 4)
        with pytest.raises(PreconditionViolation):
            brute_force_opt([T(0, 0, 1, 1)], 9)

    def test_budget(self):
        three = [T(i, 0, 2, CAPACITY) for i in range(3)]
        with pytest.raises(SearchExhausted):
            brute_force_opt(three, 3, max_wavelengths=2)
        assert brute_force_opt(three, 3, max_wavelengths=3).wavelengths == 3

    def test_hull_blocks_neighbour(self):
        # a and c fit together by load, but their hull would swallow b's links
        inst = [T(0, 0, 1, 600_000), T(1, 1, 2, 600_000), T(2, 2, 3, 300_000), T(3, 0, 3, 300_000)]
        assert brute_force_opt(inst, 4).wavelengths == exhaustive_opt(inst)

    @settings(max_examples=150, deadline=None)
    @given(instances(max_nodes=6, max_items=6, min_bw=100_000))
    def test_matches_exhaustive(self, case):
        n, inst = case
        res = brute_force_opt(inst, n)
        assert res.wavelengths == exhaustive_opt(inst)
        assert validate_schedule(inst, res.schedule).ok
        assert res.wavelengths >= ceil_units(link_congestion(inst, n).c)


def test_random_instance_and_check():
    rng = np.random.default_rng(0)
    inst = random_instance(6, 8, rng, (200_000, 800_000))
    assert len(inst) == 8 and all(200_000 <= t.bandwidth <= 800_000 for t in inst)
    chk = check_against_oracle(inst, 6, schedule_stationary(inst, 6))
    assert chk.witness_ok and chk.scheduler >= chk.oracle >= ceil_units(chk.congestion)


class TestExperiment:
    def test_single_rep_one_row_per_policy(self):
        rows = run_experiment(ExperimentConfig(ns=[6], scenarios=[("uniform", 0.5)], repetitions=1))
        assert sorted(r.policy for r in rows) == ["all", "baseline", "separate"]
        assert len({r.seed for r in rows}) == 1
        for r in rows:
            assert r.peak_wavelengths >= ceil_units(r.congestion_ppm)

    def test_deterministic(self):
        cfg = ExperimentConfig(ns=[5, 7], repetitions=3, horizon=20)
        a, b = run_experiment(cfg), run_experiment(cfg)
        assert a == b and len(a) == 2 * 4 * 3 * 3
        assert rows_csv(a) == rows_csv(b)

    def test_progress_callback(self):
        seen = []
        run_experiment(ExperimentConfig(ns=[5], repetitions=1, horizon=5), progress=lambda *a: seen.append(a))
        assert len(seen) == 4

    def test_policy_subset_sees_same_trace(self):
        cfg = dict(ns=[8], scenarios=[("bimodal", 0.5)], repetitions=2, horizon=30)
        full = run_experiment(ExperimentConfig(**cfg))
        only = run_experiment(ExperimentConfig(policies=["all"], **cfg))
        assert only == [r for r in full if r.policy == "all"]

    @pytest.mark.parametrize("kw", [dict(repetitions=0), dict(ns=[2]), dict(policies=["best"])])
    def test_invalid(self, kw):
        with pytest.raises(InvalidArgument):
            ExperimentConfig(**kw)


def _row(peak, seed=0, policy="all", n=5, cong=0):
    return ResultRow(n, policy, "uniform", 0.5, 1.5, 0.01, seed, peak, peak, cong)


class TestAggregate:
    def test_mean(self):
        (s,) = aggregate([_row(3, 0, cong=500_000), _row(5, 1, cong=1_500_000)])
        assert s.mean_peak == 4.0 and s.runs == 2 and s.mean_congestion == 1.0

    def test_missing_cell_warns(self):
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            out = aggregate([_row(3)], expected=[(5, "all", "uniform", 0.5, 1.5, 0.01),
                                                 (6, "all", "uniform", 0.5, 1.5, 0.01)])
        assert len(out) == 1 and len(w) == 1 and "omitted" in str(w[0].message)

    @settings(max_examples=40)
    @given(st.lists(st.tuples(st.integers(1, 20), st.integers(0, 99), st.sampled_from(["all", "separate"]),
                              st.integers(5, 7)), min_size=1, max_size=25).flatmap(
        lambda rows: st.tuples(st.just(rows), st.permutations(rows))))
    def test_permutation_invariant(self, pair):
        rows, perm = pair
        a = aggregate([_row(p, s, pol, n) for p, s, pol, n in rows])
        b = aggregate([_row(p, s, pol, n) for p, s, pol, n in perm])
        assert summary_csv(a) == summary_csv(b)


def test_csv_header_and_timing_column():
    rows = [_row(3)]
    text = rows_csv(rows)
    lines = text.splitlines()
    assert lines[0] == f"# {CSV_VERSION}"
    assert "runtime_ms" not in lines[1]
    assert "runtime_ms" in rows_csv(rows, timing=True).splitlines()[1]
    assert summary_csv(aggregate(rows)).splitlines()[1].startswith("n,policy,dest")
