"""Monte Carlo estimator tests: determinism, exact couplings, sampler agreement."""
import math

import numpy as np
import pytest

from rig import Metric, ModelParams, analytic, core, montecarlo
from rig.montecarlo import (
    NoCrossingError,
    SweepRow,
    TrialConfig,
    _enumerate_trial,
    _owned_windows,
    _owner_bounds,
    _probe_trial,
    crossing_point,
    er_equivalence_test,
    estimate,
    isolated_counts,
    shared_counts,
    sweep,
    sweep_shared,
)


def cfg(metric=Metric.CIRCLE, n=50, r=0.1, p=0.3, trials=200, seed=11):
    return TrialConfig(metric, n, ModelParams(r, p), trials, seed)


class TestEstimateDegenerate:
    def test_p_zero(self):
        row = estimate(cfg(p=0.0, trials=50))
        assert row.p_hat_no_isolated == 0.0
        assert row.mean_isolated == 50.0
        assert row.stderr == 0.0

    def test_complete_circle(self):
        row = estimate(cfg(r=0.6, p=1.0, trials=50))
        assert row.p_hat_no_isolated == 1.0
        assert row.mean_isolated == 0.0

    def test_stderr_formula(self):
        row = estimate(cfg(trials=400))
        p_hat = row.p_hat_no_isolated
        assert row.stderr == pytest.approx(math.sqrt(p_hat * (1 - p_hat) / 400))

    def test_analytic_columns(self):
        row_c = estimate(cfg(metric=Metric.CIRCLE, trials=20))
        assert row_c.analytic_expected_isolated == pytest.approx(
            50 * analytic.first_moment_circle(50, ModelParams(0.1, 0.3)))
        assert row_c.prob_upper is not None
        row_i = estimate(cfg(metric=Metric.INTERVAL, trials=20))
        assert row_i.prob_upper is None
        assert row_i.prob_lower is not None


class TestDeterminism:
    def test_estimate_bit_identical(self):
        a = estimate(cfg(trials=300))
        b = estimate(cfg(trials=300))
        assert a == b

    def test_sparse_bit_identical(self):
        c = cfg(n=400, trials=100)
        a = isolated_counts(c, path="sparse")
        b = isolated_counts(c, path="sparse")
        assert np.array_equal(a, b)

    def test_threads_do_not_change_result(self):
        c = cfg(n=300, trials=500)
        a = isolated_counts(c, path="sparse", threads=1)
        b = isolated_counts(c, path="sparse", threads=4)
        assert np.array_equal(a, b)
        d1 = isolated_counts(cfg(trials=500), path="dense", threads=1)
        d2 = isolated_counts(cfg(trials=500), path="dense", threads=3)
        assert np.array_equal(d1, d2)


class TestDensePathMatchesCore:
    def test_per_trial_equality(self):
        n, params = 30, ModelParams(0.12, 0.4)
        c = TrialConfig(Metric.CIRCLE, n, params, 60, 99)
        got = isolated_counts(c, path="dense")
        for t in (0, 7, 59):
            s = core.sample(n, params.p, 99, key=(0, t))
            assert got[t] == core.count_isolated(Metric.CIRCLE, s, params).count

    def test_interval_too(self):
        n, params = 25, ModelParams(0.2, 0.6)
        c = TrialConfig(Metric.INTERVAL, n, params, 40, 5)
        got = isolated_counts(c, path="dense")
        ref = [core.count_isolated(Metric.INTERVAL,
                                   core.sample(n, params.p, 5, key=(0, t)),
                                   params).count for t in range(40)]
        assert got.tolist() == ref


class TestSparsePath:
    def test_p_one_matches_core_exactly(self):
        # positions are the first draw in both samplers, so p=1 counts agree
        # realization by realization
        for metric, r in [(Metric.INTERVAL, 0.004), (Metric.CIRCLE, 0.004),
                          (Metric.CIRCLE, 0.8), (Metric.INTERVAL, 1.5)]:
            params = ModelParams(r, 1.0)
            c = TrialConfig(metric, 300, params, 25, 7)
            got = isolated_counts(c, path="sparse")
            ref = [core.count_isolated(metric,
                                       core.sample(300, 1.0, 7, key=(0, t)),
                                       params).count for t in range(25)]
            assert got.tolist() == ref

    def test_p_zero(self):
        c = TrialConfig(Metric.CIRCLE, 400, ModelParams(0.1, 0.0), 10, 1)
        assert np.all(isolated_counts(c, path="sparse") == 400)

    def test_owned_window_sizes_partition_pairs(self):
        rng = core.trial_stream(3, 0)
        for r, circle in [(0.07, True), (0.07, False), (0.3, True),
                          (0.6, True), (0.6, False), (1.1, False)]:
            x = np.sort(rng.random(157))
            w, _ = _owned_windows(x, r, circle)
            if (circle and r >= 0.5) or (not circle and r >= 1.0):
                assert int(w.sum()) == 157 * 156 // 2
            else:
                d = np.abs(x[:, None] - x[None, :])
                if circle:
                    d = np.minimum(d, 1.0 - d)
                pairs = int(np.count_nonzero(np.triu(d <= r, 1)))
                assert int(w.sum()) == pairs

    def test_owner_bounds_match_windows(self):
        # every owned edge must point at a partner whose owner run covers it
        rng = core.trial_stream(4, 0)
        for r, circle in [(0.05, True), (0.05, False), (0.4, True)]:
            n = 211
            x = np.sort(rng.random(n))
            w, cyclic = _owned_windows(x, r, circle)
            lo, hi = _owner_bounds(x, r, circle)
            v = (np.arange(n) - lo) + (n - hi)
            assert int(w.sum()) == int(v.sum())
            for i in range(n):
                for off in range(int(w[i])):
                    j = (i + 1 + off) % n if cyclic else i + 1 + off
                    in_main = lo[j] <= i < j
                    in_wrap = i >= hi[j]
                    assert in_main or in_wrap, (i, j, r, circle)

    def test_sparse_agrees_with_dense_distribution(self):
        n, params, trials = 300, ModelParams(0.05, 0.19), 6000
        c = TrialConfig(Metric.CIRCLE, n, params, trials, 5)
        sp = isolated_counts(c, path="sparse")
        dn = isolated_counts(c, path="dense")
        se = math.sqrt(sp.var(ddof=1) / trials + dn.var(ddof=1) / trials)
        assert abs(sp.mean() - dn.mean()) < 5 * se
        ei = n * analytic.first_moment_circle(n, params)
        assert abs(sp.mean() - ei) < 5 * math.sqrt(sp.var(ddof=1) / trials)

    def test_forced_probe_path_matches_analytics(self):
        # probe is normally picked only when candidates are rare; force it
        # on a config with common isolation to test its law sharply
        n, r, p, trials = 120, 0.15, 0.2, 12000
        params = ModelParams(r, p)
        counts = np.empty(trials, dtype=np.int64)
        for t in range(trials):
            g = core.trial_stream(5, 0, t)
            x = np.sort(g.random(n))
            w, _ = _owned_windows(x, r, True)
            lo, hi = _owner_bounds(x, r, True)
            counts[t] = _probe_trial(g, n, w, lo, hi, p)
        ei = n * analytic.first_moment_circle(n, params)
        se = math.sqrt(counts.var(ddof=1) / trials)
        assert abs(counts.mean() - ei) < 5 * se
        pair = analytic.pair_moment_circle_exact(n, params)
        ei2 = ei + n * (n - 1) * pair
        sq = counts.astype(float) ** 2
        assert abs(sq.mean() - ei2) < 5 * math.sqrt(sq.var(ddof=1) / trials)

    def test_forced_enumerate_on_saturated_geometry(self):
        # saturated circle is a pure Bernoulli graph; compare P{I=0} with
        # the exhaustive n=4 law
        from rig.oracle import exhaustive_small_er
        n, p, trials = 4, 0.5, 20000
        counts = np.empty(trials, dtype=np.int64)
        for t in range(trials):
            g = core.trial_stream(9, 0, t)
            x = np.sort(g.random(n))
            w, cyclic = _owned_windows(x, 0.9, True)
            counts[t] = _enumerate_trial(g, n, w, cyclic, p)
        reports = exhaustive_small_er(n, p, mc_trials=10, seed=0)
        exact_p0 = reports[2].closed_form
        p0 = float(np.mean(counts == 0))
        se = math.sqrt(exact_p0 * (1 - exact_p0) / trials)
        assert abs(p0 - exact_p0) < 5 * se


class TestSweep:
    def test_single_point_equals_estimate(self):
        base = cfg(trials=150)
        rows = sweep(base, "p", [0.3])
        assert rows == [estimate(base)]

    def test_row_per_grid_point(self):
        rows = sweep(cfg(trials=50), "r", [0.05, 0.1, 0.15])
        assert [row.r for row in rows] == [0.05, 0.1, 0.15]
        assert all(row.p == 0.3 for row in rows)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            sweep(cfg(), "r", [])

    def test_coupled_monotone_in_p(self):
        rows = sweep(cfg(n=80, r=0.1, trials=250), "p",
                     [0.05, 0.15, 0.25, 0.35, 0.45], coupled=True)
        p_hats = [row.p_hat_no_isolated for row in rows]
        assert p_hats == sorted(p_hats)

    def test_coupled_monotone_in_r(self):
        rows = sweep(cfg(n=80, p=0.4, trials=250), "r",
                     [0.02, 0.06, 0.1, 0.14, 0.18], coupled=True)
        p_hats = [row.p_hat_no_isolated for row in rows]
        assert p_hats == sorted(p_hats)


class TestShared:
    def test_two_rows_per_point_circle_first(self):
        rows = sweep_shared(40, ModelParams(0.0, 0.25), 60, 3, "r", [0.05, 0.1])
        assert [row.metric for row in rows] == [Metric.CIRCLE, Metric.INTERVAL,
                                                Metric.CIRCLE, Metric.INTERVAL]

    def test_circle_row_matches_plain_estimate(self):
        # shared realizations reuse the same per-trial streams as estimate
        rows = sweep_shared(40, ModelParams(0.0, 0.25), 80, 3, "r", [0.08])
        direct = estimate(TrialConfig(Metric.CIRCLE, 40, ModelParams(0.08, 0.25),
                                      80, 3))
        assert rows[0] == direct

    def test_exact_dominances(self):
        got = shared_counts(60, ModelParams(0.09, 0.35), 300, 8)
        assert np.all(got.interval >= got.circle)
        assert np.all(got.interval >= got.er)
        assert np.all(got.interval >= got.geo_interval)
        assert np.all(got.circle >= got.er)
        assert np.all(got.circle >= got.geo_circle)
        assert np.all(got.geo_interval >= got.geo_circle)

    def test_coupled_shared_monotone_both_metrics(self):
        rows = sweep_shared(60, ModelParams(0.1, 0.0), 200, 4, "p",
                            [0.1, 0.2, 0.3, 0.4], coupled=True)
        for metric in Metric:
            p_hats = [row.p_hat_no_isolated for row in rows
                      if row.metric is metric]
            assert p_hats == sorted(p_hats)


class TestCrossingPoint:
    def _row(self, r, p_hat):
        return SweepRow(Metric.CIRCLE, 100, r, 0.25, 1000, 1, p_hat, 0.01,
                        0.0, 0.0, None, None, None)

    def test_midpoint_interpolation(self):
        rows = [self._row(0.08, 0.1), self._row(0.10, 0.9)]
        assert crossing_point(rows, 0.5, "r") == pytest.approx(0.09)

    def test_first_upward_crossing_wins(self):
        rows = [self._row(0.05, 0.2), self._row(0.06, 0.6),
                self._row(0.07, 0.4), self._row(0.08, 0.8)]
        got = crossing_point(rows, 0.5, "r")
        assert got == pytest.approx(0.05 + 0.01 * (0.3 / 0.4))

    def test_no_crossing_raises(self):
        rows = [self._row(0.05, 0.8), self._row(0.06, 0.9)]
        with pytest.raises(NoCrossingError):
            crossing_point(rows, 0.5, "r")

    def test_unsorted_rejected(self):
        rows = [self._row(0.10, 0.1), self._row(0.08, 0.9)]
        with pytest.raises(ValueError):
            crossing_point(rows, 0.5, "r")


class TestErEquivalence:
    def test_all_true_arm(self):
        # intersect(ER(1), ER(x)) is distributed as ER(x)
        rep = er_equivalence_test(60, 1.0, 0.25, 4000, 3)
        assert abs(rep.z) < 4
        assert rep.passed

    def test_underpowered_flag(self):
        rep = er_equivalence_test(20, 0.5, 0.5, 1, 3)
        assert rep.underpowered

    def test_deterministic(self):
        a = er_equivalence_test(30, 0.4, 0.5, 500, 9)
        b = er_equivalence_test(30, 0.4, 0.5, 500, 9)
        assert a == b

    def test_matches_saturated_circle_estimate(self):
        # ER(p*p') and the saturated-circle intersection share the model law
        rep = er_equivalence_test(50, 0.45, 0.5, 6000, 21)
        row = estimate(TrialConfig(Metric.CIRCLE, 50, ModelParams(0.9, 0.225),
                                   6000, 22))
        se = math.sqrt(rep.p_hat_direct * (1 - rep.p_hat_direct) / 6000
                       + row.stderr ** 2)
        assert abs(rep.p_hat_direct - row.p_hat_no_isolated) < 5 * max(se, 1e-3)
