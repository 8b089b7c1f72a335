import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graph
from lexnet.generators import barabasi_albert, erdos_renyi
from lexnet.netstats import (
    DISASSORTATIVE,
    NEUTRAL,
    SCALE_FREE,
    TWO_REGIME,
    UNDEFINED,
    DegreeDistribution,
    PowerLawFit,
    StatsConfig,
    StatsError,
    TwoRegimeFit,
    aic,
    average_clustering,
    classify_assortativity,
    classify_degree_distribution,
    classify_small_world,
    degree_assortativity,
    degree_distribution,
    degree_plot_csv,
    er_baseline_cc,
    fit_power_law,
    fit_two_regime,
    log_binned,
    structure_report,
)
from oracles import assortativity_by_pearson, clustering_by_enumeration


def power_points(gamma, kmax=100):
    k = np.arange(1, kmax + 1, dtype=float)
    p = k ** -gamma
    return DegreeDistribution(k, p / p.sum())


def two_regime_points(g1=1.5, g2=3.0, kx=50, kmax=500):
    k = np.arange(1, kmax + 1, dtype=float)
    logp = np.where(k <= kx, -g1 * np.log(k), -g1 * np.log(kx) - g2 * (np.log(k) - np.log(kx)))
    p = np.exp(logp)
    return DegreeDistribution(k, p / p.sum())


def random_graph(seed, n=None, p=0.3):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 31))
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return n, edges


class TestDegreeDistribution:
    def test_examples(self, triangle, star, path3):
        d = degree_distribution(triangle)
        assert d.k.tolist() == [2] and d.p.tolist() == [1.0]
        d = degree_distribution(star)
        assert d.k.tolist() == [1, 3] and d.p.tolist() == [0.75, 0.25]
        d = degree_distribution(path3)
        assert d.k.tolist() == [1, 2]
        np.testing.assert_allclose(d.p, [2 / 3, 1 / 3])

    def test_isolated_reported_separately(self):
        d = degree_distribution(graph(5, [(0, 1)]))
        assert d.n_isolated == 3 and d.k.tolist() == [1]

    def test_all_isolated(self):
        with pytest.raises(StatsError):
            degree_distribution(graph(3, []))

    @pytest.mark.parametrize("seed", range(20))
    def test_sums_to_one(self, seed):
        n, edges = random_graph(seed)
        if not edges:
            return
        assert degree_distribution(graph(n, edges)).p.sum() == pytest.approx(1.0, abs=1e-9)

    def test_validation(self):
        with pytest.raises(StatsError):
            DegreeDistribution([1, 2], [0.5, 0.4])
        with pytest.raises(StatsError):
            DegreeDistribution([2, 1], [0.5, 0.5])
        with pytest.raises(StatsError):
            DegreeDistribution([0, 1], [0.5, 0.5])

    def test_log_binning_recovers_exponent(self):
        rng = np.random.default_rng(0)
        # discrete power law by inverse transform on a continuous Pareto
        deg = np.floor(rng.pareto(1.5, size=200_000) + 1).astype(int)
        k, c = np.unique(deg, return_counts=True)
        d = DegreeDistribution(k, c / c.sum())
        fit = fit_power_law(log_binned(d, 10))
        assert fit.gamma == pytest.approx(2.5, abs=0.15)


class TestAIC:
    def test_identity(self):
        assert aic(10.0, 10, 2) == pytest.approx(6.0)

    def test_doubling(self):
        assert aic(6.0, 20, 2) - aic(3.0, 20, 2) == pytest.approx(20 * math.log(2))

    def test_degenerate(self):
        with pytest.raises(StatsError, match="AIC undefined"):
            aic(0.0, 10, 2)
        with pytest.raises(StatsError):
            aic(1.0, 3, 2)


class TestFits:
    def test_power_law_recovery(self):
        for gamma in (2.0, 1.5):
            fit = fit_power_law(power_points(gamma))
            assert fit.gamma == pytest.approx(gamma, abs=1e-6)
            assert fit.ssr < 1e-12

    def test_flat(self):
        d = DegreeDistribution([1, 2, 4, 8], [0.25] * 4)
        fit = fit_power_law(d)
        assert fit.gamma == pytest.approx(0.0, abs=1e-12)

    def test_insufficient_points(self):
        with pytest.raises(StatsError, match="insufficient points"):
            fit_power_law(DegreeDistribution([1, 2], [0.5, 0.5]))
        with pytest.raises(StatsError, match="insufficient points"):
            fit_two_regime(power_points(2, kmax=6))

    def test_two_regime_recovery(self):
        fit = fit_two_regime(two_regime_points())
        assert fit.gamma1 == pytest.approx(1.5, abs=0.01)
        assert fit.gamma2 == pytest.approx(3.0, abs=0.01)
        assert 40 <= fit.breakpoint_k <= 62

    def test_two_regime_on_pure_power_law(self):
        d = power_points(2.0)
        two, one = fit_two_regime(d), fit_power_law(d)
        assert two.gamma1 == pytest.approx(2.0, abs=1e-6)
        assert two.gamma2 == pytest.approx(2.0, abs=1e-6)
        assert two.ssr == pytest.approx(one.ssr, abs=1e-12)
        assert one.aic < two.aic

    def test_breakpoint_leaves_three_points_each_side(self):
        rng = np.random.default_rng(1)
        k = np.arange(1, 8, dtype=float)
        p = rng.uniform(0.1, 1, size=7)
        fit = fit_two_regime(DegreeDistribution(k, p / p.sum()))
        assert 3 <= fit.breakpoint_k <= 4

    def test_continuity(self):
        fit = fit_two_regime(two_regime_points())
        eps = 1e-9
        lo, hi = fit.predict_log([fit.breakpoint_k * (1 - eps), fit.breakpoint_k * (1 + eps)])
        assert lo == pytest.approx(hi, abs=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(7, 40))
    def test_nesting_and_recomputable_ssr(self, seed, n):
        rng = np.random.default_rng(seed)
        k = np.unique(rng.integers(1, 1000, size=n)).astype(float)
        if len(k) < 7:
            return
        p = rng.uniform(0.01, 1, size=len(k))
        d = DegreeDistribution(k, p / p.sum())
        one, two = fit_power_law(d), fit_two_regime(d)
        assert two.ssr <= one.ssr + 1e-9
        assert one.residual_ssr(d) == pytest.approx(one.ssr, abs=1e-9)
        assert two.residual_ssr(d) == pytest.approx(two.ssr, abs=1e-9)

    def test_classification(self):
        d = power_points(2.0)
        assert classify_degree_distribution(fit_power_law(d), fit_two_regime(d)) == SCALE_FREE
        d = two_regime_points()
        assert classify_degree_distribution(fit_power_law(d), fit_two_regime(d)) == TWO_REGIME

    def test_classification_needs_both_aics(self):
        one = PowerLawFit(2, 0, 1.0, None, 3)
        two = TwoRegimeFit(2, 2, 3, 0, 1.0, -3.0, 10)
        with pytest.raises(StatsError):
            classify_degree_distribution(one, two)

    def test_exact_fits_tie_on_ssr(self):
        d = power_points(2.0)
        one, two = fit_power_law(d), fit_two_regime(d)
        assert two.aic - one.aic == pytest.approx(4.0)


class TestClustering:
    def test_examples(self, triangle, path3):
        assert average_clustering(triangle) == 1.0
        assert average_clustering(path3) == 0.0

    def test_square_with_diagonal(self):
        g = graph(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
        expected = clustering_by_enumeration(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
        assert expected == pytest.approx(5 / 6)
        assert average_clustering(g) == pytest.approx(expected, abs=1e-12)

    def test_low_degree_nodes_count_as_zero(self):
        g = graph(5, [(0, 1), (1, 2), (0, 2), (2, 3)])
        assert average_clustering(g) == pytest.approx((1 + 1 + 1 / 3 + 0 + 0) / 5)

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_enumeration(self, seed):
        n, edges = random_graph(seed)
        assert average_clustering(graph(n, edges)) == pytest.approx(clustering_by_enumeration(n, edges), abs=1e-9)

    def test_blocked_equals_unblocked(self):
        g = erdos_renyi(300, 0.05, 0)
        assert average_clustering(g, block=7) == pytest.approx(average_clustering(g), abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_relabeling_invariance(self, seed):
        n, edges = random_graph(seed, n=25)
        perm = np.random.default_rng(seed).permutation(n)
        relabeled = [(int(perm[a]), int(perm[b])) for a, b in edges]
        assert average_clustering(graph(n, edges)) == pytest.approx(average_clustering(graph(n, relabeled)), abs=1e-12)


class TestSmallWorld:
    def test_er_baseline(self):
        assert er_baseline_cc(24_035, 208_759) == pytest.approx(2 * 208_759 / (24_035 * 24_034), rel=1e-12)
        assert er_baseline_cc(24_035, 208_759) == pytest.approx(7.228e-4, rel=1e-3)
        assert er_baseline_cc(4, 6) == 1.0
        assert er_baseline_cc(10, 0) == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_er_baseline_is_density(self, seed):
        n, edges = random_graph(seed)
        g = graph(n, edges)
        assert er_baseline_cc(g.n_nodes, g.edge_count) == pytest.approx(len(edges) / (n * (n - 1) / 2))

    def test_classify(self):
        assert classify_small_world(0.60, er_baseline_cc(24_035, 208_759), 10)
        assert not classify_small_world(0.0, 0.0, 10)
        assert not classify_small_world(0.05, 0.04, 10)
        with pytest.raises(ValueError):
            classify_small_world(0.5, 0.1, 1.0)


class TestAssortativity:
    def test_star(self, star):
        assert degree_assortativity(star) == pytest.approx(-1.0)

    def test_cycle_undefined(self):
        c5 = graph(5, [(i, (i + 1) % 5) for i in range(5)])
        with pytest.raises(StatsError, match="assortativity undefined"):
            degree_assortativity(c5)

    def test_no_edges(self):
        with pytest.raises(StatsError):
            degree_assortativity(graph(3, []))

    def test_bridged_triangles(self):
        edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]
        deg = [2, 2, 3, 3, 2, 2]
        xs = [deg[a] for a, b in edges] + [deg[b] for a, b in edges]
        ys = [deg[b] for a, b in edges] + [deg[a] for a, b in edges]
        assert len(xs) == 14
        expected = statistics.correlation(xs, ys)
        assert degree_assortativity(graph(6, edges)) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_pearson(self, seed):
        n, edges = random_graph(seed)
        expected = assortativity_by_pearson(n, edges)
        g = graph(n, edges)
        if expected is None:
            with pytest.raises(StatsError):
                degree_assortativity(g)
        else:
            assert degree_assortativity(g) == pytest.approx(expected, abs=1e-9)

    def test_classify(self):
        assert classify_assortativity(-0.04, 0.05) == NEUTRAL
        assert classify_assortativity(-0.27, 0.05) == DISASSORTATIVE
        assert classify_assortativity(0.3) == "assortative"
        with pytest.raises(ValueError):
            classify_assortativity(0.1, 0.0)

    @given(st.floats(-1, 1), st.floats(1e-6, 1))
    def test_classify_total_and_deterministic(self, dac, band):
        label = classify_assortativity(dac, band)
        assert label == classify_assortativity(dac, band)
        assert label in ("assortative", "disassortative", "neutral")


class TestGenerators:
    def test_er_edge_count(self):
        g = erdos_renyi(2000, 0.01, 1)
        expected = 0.01 * 2000 * 1999 / 2
        assert abs(g.edge_count - expected) < 4 * math.sqrt(expected)
        g.check_invariants()

    def test_ba_shape(self):
        g = barabasi_albert(500, 3, 0)
        assert g.edge_count == 3 * (500 - 3)
        assert min(g.degrees()) >= 3
        g.check_invariants()


class TestReport:
    def test_triangle_degrades_gracefully(self, triangle):
        r = structure_report(triangle)
        assert r.cc == 1.0
        assert r.dac is None and r.assortativity_class == UNDEFINED
        assert r.degree_class == UNDEFINED
        assert "insufficient points" in r.errors["power_law"]
        assert r.to_dict()["assortativity_class"] == "undefined"

    def test_er_graph(self):
        r = structure_report(erdos_renyi(5000, 0.002, 0), StatsConfig())
        assert r.small_world is False
        assert r.assortativity_class == NEUTRAL
        assert 0.001 <= r.cc <= 0.004

    def test_all_isolated(self):
        r = structure_report(graph(4, []))
        assert r.n_isolated == 4 and "degree_distribution" in r.errors
        assert r.cc == 0.0 and r.small_world is False

    def test_log_bins_flag(self):
        r = structure_report(barabasi_albert(2000, 3, 0), StatsConfig(log_bins=True))
        assert r.power_law is not None and r.power_law.n_points < 40

    def test_plot_csv(self, star):
        d = degree_distribution(graph(8, [(0, i) for i in range(1, 5)] + [(5, 6), (6, 7), (5, 7), (4, 5)]))
        one = fit_power_law(d)
        text = degree_plot_csv(d, one, None)
        lines = text.splitlines()
        assert lines[0] == "k,p,power_fit,two_regime_fit"
        assert len(lines) == len(d) + 1
        k, p, pf, tf = lines[1].split(",")
        assert float(pf) == pytest.approx(math.exp(one.predict_log([float(k)])[0]))
        assert tf == ""
