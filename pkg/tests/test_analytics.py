import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmcascade.analytics import (
    crisis_map,
    density_grid,
    integrated_fraction,
    log_bin_edges,
    powerlaw_fit,
    topk_occurrence,
)


class TestDensity:
    def test_single_user(self):
        grid = density_grid([0], [0], cells=4)
        assert grid.cells[0, 0] == 1 and grid.cells.sum() == 1

    def test_diagonal(self, rng):
        order = rng.permutation(1000)
        grid = density_grid(order, order, cells=20)
        assert grid.cells.sum() == 1000
        assert np.count_nonzero(grid.cells - np.diag(np.diag(grid.cells))) == 0

    @pytest.mark.parametrize("cells", [4, 50])
    def test_random_counts(self, rng, cells):
        n = 10_000
        k, ks = rng.permutation(n), rng.permutation(n)
        grid = density_grid(k, ks, cells=cells)
        assert grid.cells.sum() == n
        # exact integer oracle: bin a is the largest a with K**C >= N**a
        powers = [n**a for a in range(cells)]

        def bin_of(rank):
            return max(a for a in range(cells) if rank**cells >= powers[a])

        ref = np.zeros((cells, cells), dtype=int)
        for kk, kks in zip(range(1, n + 1), np.argsort(ks)[k] + 1):
            ref[bin_of(kk), bin_of(int(kks))] += 1
        np.testing.assert_array_equal(grid.cells, ref)

    def test_first_and_last_bins(self):
        n = 1000
        order = np.arange(n)
        grid = density_grid(order, order[::-1], cells=10)
        assert grid.cells[0, -1] == 1  # K=1 has K*=N
        assert grid.cells[-1, 0] >= 1

    def test_edges_log_equidistant(self):
        edges = log_bin_edges(10**6, 200)
        assert edges[0] == 1 and edges[-1] == pytest.approx(1e6)
        steps = np.diff(np.log(edges))
        np.testing.assert_allclose(steps, steps[0], rtol=1e-9)
        assert np.all(steps > 0)

    def test_bad_cells(self):
        with pytest.raises(ValueError):
            density_grid([0, 1], [1, 0], cells=0)


class TestCrisis:
    def test_extremes(self, rng):
        n = 2000
        k, ks = rng.permutation(n), rng.permutation(n)
        full = crisis_map(k, ks, np.ones(n, bool), cells=30).cells
        none = crisis_map(k, ks, np.zeros(n, bool), cells=30).cells
        filled = ~np.isnan(full)
        assert np.all(full[filled] == 1) and np.all(none[filled] == -1)
        assert np.array_equal(filled, ~np.isnan(none))

    def test_half(self):
        # two users sharing every cell, one bankrupt each
        grid = crisis_map([0, 1], [0, 1], np.array([True, False]), cells=1)
        assert grid.cells[0, 0] == 0

    def test_empty_cells_flagged(self):
        grid = crisis_map([0, 1, 2], [0, 1, 2], np.array([True, False, True]), cells=5)
        assert np.isnan(grid.cells).sum() == 25 - np.count_nonzero(density_grid([0, 1, 2], [0, 1, 2], 5).cells)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 300), st.integers(0, 10_000))
    def test_range_and_complement(self, n, seed):
        rng = np.random.default_rng(seed)
        k, ks = rng.permutation(n), rng.permutation(n)
        bankrupt = rng.random(n) < 0.4
        a = crisis_map(k, ks, bankrupt, cells=7).cells
        b = crisis_map(k, ks, ~bankrupt, cells=7).cells
        filled = ~np.isnan(a)
        assert np.all(np.abs(a[filled]) <= 1)
        np.testing.assert_allclose(a[filled], -b[filled], atol=1e-15)


class TestIntegrated:
    def test_everyone(self):
        n = 50
        w = integrated_fraction(np.ones(n, bool), np.arange(n))
        np.testing.assert_array_equal(w, np.arange(1, n + 1) / n)

    def test_nobody(self):
        assert not integrated_fraction(np.zeros(10, bool), np.arange(10)).any()

    def test_recount(self, rng):
        n = 100
        bankrupt = rng.random(n) < 0.3
        order = rng.permutation(n)
        w = integrated_fraction(bankrupt, order)
        pos = np.empty(n, int)
        pos[order] = np.arange(1, n + 1)
        for kk in range(1, n + 1):
            assert w[kk - 1] == sum(1 for u in range(n) if bankrupt[u] and pos[u] <= kk) / n
        assert np.all(np.diff(w) >= 0)
        assert w[-1] == bankrupt.sum() / n


class TestFit:
    def test_exact_linear(self):
        n = 5.94557e6
        k = np.arange(1, 100_001)
        fit = powerlaw_fit(k, k / n, (10, 1e5))
        assert abs(fit.beta - 1) <= 1e-9
        assert abs(fit.mu / n - 1) <= 1e-6
        assert fit.points == 100_000 - 9

    def test_synthetic_exponent(self):
        k = np.logspace(0, 5, 100)
        w = 2e-3 * k**0.9
        fit = powerlaw_fit(k, w, (1, 1e5))
        assert abs(fit.beta - 0.9) <= 1e-6
        assert abs(fit.mu - 500) <= 1e-6 * 500
        assert fit.points == 100 and fit.stderr_beta < 1e-7

    def test_excludes_zeros_and_range(self):
        k = np.arange(1, 101, dtype=float)
        w = k / 100
        w[20:30] = 0
        fit = powerlaw_fit(k, w, (10, 50))
        assert fit.points == 41 - 10
        assert fit.beta == pytest.approx(1, abs=1e-12)
        np.testing.assert_allclose(fit.predict([10, 50]), [0.1, 0.5], rtol=1e-12)

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            powerlaw_fit([1, 2, 3], [0, 0.1, 0.2], (1, 3))

    def test_noisy_errors_positive(self, rng):
        k = np.arange(1, 1001, dtype=float)
        w = k**1.1 / 1e4 * np.exp(rng.normal(0, 0.05, k.size))
        fit = powerlaw_fit(k, w, (10, 1000))
        assert fit.stderr_beta > 0 and fit.stderr_mu > 0
        assert fit.beta == pytest.approx(1.1, abs=0.02)


class TestOccurrence:
    def test_single_slice_head(self):
        ranking = {"2013Q1": [f"u{k}" for k in range(50)]}
        table = topk_occurrence(ranking, k=10, m=5)
        assert table.users == ("u0", "u1", "u2", "u3", "u4")
        assert table.positions == ((1,), (2,), (3,), (4,), (5,))

    def test_always_first(self):
        rankings = {"a": ["x", "y"], "b": ["x", "z"], "c": ["x", "y"]}
        table = topk_occurrence(rankings, k=2, m=3)
        assert table.users[0] == "x" and table.positions[0] == (1, 1, 1)

    def test_enumeration(self):
        rankings = {
            "s1": ["a", "b", "c", "d"],
            "s2": ["c", "a", "e", "b"],
            "s3": ["e", "c", "f", "g"],
        }
        table = topk_occurrence(rankings, k=3, m=4)
        # c appears in all three top-3 lists, a and e in two, b in one
        counts = {}
        for lst in rankings.values():
            for pos, u in enumerate(lst[:3], 1):
                counts.setdefault(u, []).append(pos)
        expected = sorted(counts, key=lambda u: (-len(counts[u]), min(counts[u]), sum(counts[u]), u))[:4]
        assert list(table.users) == expected == ["c", "a", "e", "b"]
        assert table.positions[0] == (3, 1, 2)
        assert table.positions[3] == (2, None, None)

    def test_order_invariance(self):
        rankings = {"s1": ["a", "b", "c"], "s2": ["b", "c", "d"], "s3": ["d", "a", "b"]}
        reordered = {k: rankings[k] for k in ("s3", "s1", "s2")}
        t1, t2 = topk_occurrence(rankings, 3, 4), topk_occurrence(reordered, 3, 4)
        assert t1.users == t2.users and t1.counts == t2.counts
        for p1, p2 in zip(t1.positions, t2.positions):
            assert dict(zip(t1.labels, p1)) == dict(zip(t2.labels, p2))

    def test_bad_args(self):
        with pytest.raises(ValueError):
            topk_occurrence({"a": ["x"]}, k=0)
