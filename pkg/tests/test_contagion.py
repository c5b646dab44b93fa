import numpy as np
import pytest

from conftest import FOUR_NODE, graph_from_edges
from gmcascade.contagion import (
    TIE_TOL,
    ContagionState,
    balance,
    contagion_step,
    default_kappa_grid,
    fraction_at,
    kappa_sweep,
    run_contagion,
)
from gmcascade.google import rank_pair
from oracles import dense_cascade, dense_ranks, random_edges

# nodes A..E = 0..4
FIVE_NODE = (
    5,
    [(0, 1, 4.0), (1, 2, 2.0), (2, 0, 1.0), (2, 3, 3.0), (3, 0, 1.0), (4, 3, 2.0), (3, 4, 1.0), (1, 4, 1.0)],
)
# traced with the dense oracle (tests/oracles.py) and frozen
FIVE_NODE_TRACE_015 = [{3, 4}, {2, 3, 4}, {1, 2, 3, 4}, {0, 1, 2, 3, 4}]


def bankrupt_set(state):
    return set(np.nonzero(state.bankrupt)[0].tolist())


class TestBalance:
    def test_equal(self):
        assert balance(np.array([0.3]), np.array([0.3]))[0] == 0

    def test_three_to_one(self):
        assert balance(np.array([0.1]), np.array([0.3]))[0] == pytest.approx(0.5, abs=1e-15)

    def test_oracle_ranks(self, four_node):
        n, edges = FOUR_NODE
        p, ps = dense_ranks(n, edges)
        expected = [(ps[u] - p[u]) / (ps[u] + p[u]) for u in range(n)]
        rp, rps = rank_pair(four_node)
        np.testing.assert_allclose(balance(rp.probs, rps.probs), expected, atol=1e-10)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            balance(np.array([0.0, 1.0]), np.array([0.5, 0.5]))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            balance(np.ones(2), np.ones(3))


class TestStep:
    def test_kappa_one_never_bankrupts(self, four_node):
        s = contagion_step(four_node, ContagionState.initial(4, 1.0))
        assert s.new_counts == (0,) and s.history == (0.0,)

    def test_kappa_zero_first_step(self, four_node):
        s = contagion_step(four_node, ContagionState.initial(4, 0.0))
        p, ps = rank_pair(four_node)
        expected = set(np.nonzero(balance(p.probs, ps.probs) <= TIE_TOL)[0].tolist())
        assert bankrupt_set(s) == expected
        assert s.tau == 1

    def test_hand_trace(self):
        g = graph_from_edges(*FIVE_NODE)
        s = ContagionState.initial(5, 0.15)
        for expected in FIVE_NODE_TRACE_015[:2]:
            s = contagion_step(g, s)
            assert bankrupt_set(s) == expected
        assert list(s.bankrupt_tau) == [0, 0, 2, 1, 1]

    def test_oracle_agrees_with_frozen_trace(self):
        sets = dense_cascade(*FIVE_NODE, kappa=0.15, tau_max=4)
        assert [set(x) for x in sets] == FIVE_NODE_TRACE_015

    def test_fully_pruned_graph_is_legal(self):
        # everyone bankrupt: all ingoing edges removed, ranks uniform
        g = graph_from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
        state = ContagionState(0.5, np.array([1, 1, 1]), tau=1, history=(1.0,), new_counts=(3,))
        s = contagion_step(g, state)
        np.testing.assert_allclose(s.balances, 0, atol=1e-15)
        assert s.history == (1.0, 1.0)


class TestRun:
    def test_full_trace(self):
        s = run_contagion(graph_from_edges(*FIVE_NODE), 0.15, 10)
        assert s.tau == 5  # fourth step bankrupts the last user, fifth adds nobody
        assert s.history == (0.4, 0.6, 0.8, 1.0, 1.0)

    def test_early_exit(self):
        s = run_contagion(graph_from_edges(*FIVE_NODE), 0.3, 10)
        assert s.tau == 2 and bankrupt_set(s) == {4}
        assert s.history == (0.2, 0.2) and s.new_counts == (1, 0)
        assert fraction_at(s, 10) == 0.2

    def test_kappa_above_one(self, four_node):
        s = run_contagion(four_node, 1.5, 10)
        assert s.history == (0.0,)
        assert all(fraction_at(s, t) == 0 for t in range(1, 11))

    def test_bad_tau(self, four_node):
        with pytest.raises(ValueError):
            run_contagion(four_node, 0.1, 0)

    @pytest.mark.parametrize("seed", range(40))
    def test_random_against_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        edges = random_edges(rng, n)
        kappa = float(rng.choice([0.0, 0.05, 0.1, 0.2, 0.4]))
        g = graph_from_edges(n, edges)
        s = ContagionState.initial(n, kappa)
        expected = dense_cascade(n, edges, kappa, 4)
        previous = set()
        for t in range(4):
            s = contagion_step(g, s)
            got = bankrupt_set(s)
            assert got == set(expected[t])
            assert previous <= got
            previous = got


class TestSweep:
    def test_all_safe(self, four_node):
        sweep = kappa_sweep(four_node, [1.0], taus=[1, 3, 5, 10])
        assert np.all(sweep.fractions == 0)

    def test_zero_and_one(self, four_node):
        sweep = kappa_sweep(four_node, [0.0, 1.0], taus=[1])
        p, ps = rank_pair(four_node)
        assert sweep.fractions[0, 0] == np.mean(balance(p.probs, ps.probs) <= TIE_TOL)
        assert sweep.fractions[1, 0] == 0

    def test_monotone_tau_and_first_step_kappa(self):
        g = graph_from_edges(*FIVE_NODE)
        sweep = kappa_sweep(g, default_kappa_grid(0, 1, 0.05), taus=range(1, 11))
        assert np.all(np.diff(sweep.fractions, axis=1) >= 0)
        assert np.all(np.diff(sweep.fractions[:, 0]) <= 0)

    def test_threads_do_not_change_result(self):
        g = graph_from_edges(*FIVE_NODE)
        a = kappa_sweep(g, [0.0, 0.1, 0.2, 0.3], taus=[1, 2, 5], threads=1)
        b = kappa_sweep(g, [0.0, 0.1, 0.2, 0.3], taus=[1, 2, 5], threads=3)
        assert a.fractions.tobytes() == b.fractions.tobytes()

    def test_matches_single_runs(self):
        g = graph_from_edges(*FIVE_NODE)
        sweep = kappa_sweep(g, [0.1, 0.2], taus=[1, 3])
        for a, kappa in enumerate([0.1, 0.2]):
            s = run_contagion(g, kappa, 3)
            assert sweep.fractions[a, 1] == fraction_at(s, 3)

    def test_empty_grid(self, four_node):
        with pytest.raises(ValueError):
            kappa_sweep(four_node, [])


def test_default_grid():
    grid = default_kappa_grid()
    assert grid.size == 101 and grid[0] == 0.0 and grid[-1] == 1.0 and grid[15] == 0.15


def test_synthetic_plateau():
    from gmcascade.synth import SynthParams, synthetic_graph

    g = synthetic_graph(SynthParams(nodes=10_000, edges=50_000), seed=0)
    tiny = run_contagion(g, 1e-6, 10)
    small = run_contagion(g, 0.05, 10)
    assert fraction_at(small, 10) >= 0.95 * fraction_at(tiny, 10)
    assert np.all(np.diff(small.history) >= 0)
