import math

import numpy as np
import pytest

from kgscale.core import KgError, KnowledgeGraph
from kgscale.entropy import (
    EntropyMode,
    adjacency,
    compute_merw,
    dominant_eig,
    graph_search_entropy,
    merw_transition,
    relation_entropy_rate,
    relation_transition,
    stationary,
)

from conftest import dense_entropy_oracle, make_graph, random_multigraph


def ring3():
    return make_graph([(0, 0, 1), (1, 0, 2), (2, 0, 0)])


def complete_digraph(n=5):
    return make_graph([(i, 0, j) for i in range(n) for j in range(n) if i != j])


def path3():
    # undirected 3-path stored as two directed edges
    return make_graph([(0, 0, 1), (1, 0, 2)])


# -- adjacency ---------------------------------------------------------------

def test_adjacency_ring_directed():
    a, nodes = adjacency(ring3(), directed=True)
    assert a.shape == (3, 3)
    assert list(nodes) == [0, 1, 2]
    assert a.sum() == 3
    assert a[0, 1] == 1 and a[1, 2] == 1 and a[2, 0] == 1


def test_adjacency_parallel_edges_multiplicity():
    g = make_graph([(0, 0, 1), (0, 1, 1), (1, 0, 0)])
    a, _ = adjacency(g, directed=True)
    assert a[0, 1] == 2


def test_adjacency_symmetrized():
    a, _ = adjacency(path3(), directed=False)
    dense = a.toarray()
    assert np.array_equal(dense, dense.T)
    assert dense[0, 1] == 1 and dense[1, 0] == 1


def test_adjacency_restricts_to_largest_component():
    g = make_graph([(0, 0, 1), (1, 0, 0), (2, 0, 3)], n_entities=6)
    a, nodes = adjacency(g, directed=False)
    assert len(nodes) == 2
    assert a.shape == (2, 2)


def test_adjacency_directed_needs_scc_with_edges():
    g = make_graph([(0, 0, 1)])  # DAG: every SCC is a single node
    with pytest.raises(KgError):
        adjacency(g, directed=True)


def test_adjacency_empty_graph():
    with pytest.raises(KgError):
        adjacency(KnowledgeGraph(), directed=False)


# -- dominant_eig ------------------------------------------------------------

def test_perron_single_edge():
    g = make_graph([(0, 0, 1)])
    a, _ = adjacency(g, directed=False)
    lam, psi = dominant_eig(a)
    assert lam == pytest.approx(1.0, abs=1e-10)
    assert psi == pytest.approx(np.array([1, 1]) / math.sqrt(2), abs=1e-8)


def test_perron_complete_graph():
    a, _ = adjacency(complete_digraph(5), directed=True)
    lam, psi = dominant_eig(a)
    assert lam == pytest.approx(4.0, abs=1e-9)
    assert np.allclose(psi, np.full(5, 1 / math.sqrt(5)), atol=1e-8)


def test_perron_path3_matches_dense_solver():
    a, _ = adjacency(path3(), directed=False)
    lam, psi = dominant_eig(a)
    w, v = np.linalg.eigh(a.toarray())
    assert lam == pytest.approx(float(w[-1]), abs=1e-10)
    assert lam == pytest.approx(math.sqrt(2), abs=1e-10)
    expected = np.abs(v[:, -1])
    assert np.allclose(psi, expected, atol=1e-8)
    assert psi[1] == pytest.approx(psi[0] * math.sqrt(2), abs=1e-8)


def test_perron_converges_on_periodic_ring():
    a, _ = adjacency(ring3(), directed=True)
    lam, psi = dominant_eig(a)
    assert lam == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(psi, np.full(3, 1 / math.sqrt(3)), atol=1e-8)


def test_perron_residual_contract():
    for seed in range(20):
        g = random_multigraph(seed)
        a, _ = adjacency(g, directed=False)
        lam, psi = dominant_eig(a, tol=1e-10)
        res = np.linalg.norm(a @ psi - lam * psi)
        assert res <= 1e-9 * lam
        assert psi.min() > 0
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)


def test_non_convergence_raises():
    # path eigenvector has irrational entries, so a zero tolerance can never be met
    a, _ = adjacency(path3(), directed=False)
    with pytest.raises(KgError, match="did not converge"):
        dominant_eig(a, tol=0.0, max_iter=50)


# -- merw_transition / stationary --------------------------------------------

def test_transition_complete_graph_uniform():
    a, _ = adjacency(complete_digraph(5), directed=True)
    lam, psi = dominant_eig(a)
    s = merw_transition(a, lam, psi)
    dense = s.toarray()
    off = dense[~np.eye(5, dtype=bool)]
    assert np.allclose(off, 0.25, atol=1e-9)
    assert np.allclose(dense.sum(axis=1), 1.0, atol=1e-9)


def test_transition_path3():
    a, _ = adjacency(path3(), directed=False)
    lam, psi = dominant_eig(a)
    s = merw_transition(a, lam, psi).toarray()
    assert s[1] == pytest.approx([0.5, 0.0, 0.5], abs=1e-9)
    assert s[0] == pytest.approx([0.0, 1.0, 0.0], abs=1e-9)


def test_transition_ring_deterministic():
    a, _ = adjacency(ring3(), directed=True)
    lam, psi = dominant_eig(a)
    s = merw_transition(a, lam, psi).toarray()
    assert np.allclose(s, np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]]), atol=1e-9)


def test_stationary_uniform_cases():
    for g, directed, n in [(complete_digraph(5), True, 5), (ring3(), True, 3)]:
        a, _ = adjacency(g, directed=directed)
        lam, psi = dominant_eig(a)
        s = merw_transition(a, lam, psi)
        rho = stationary(s)
        assert np.allclose(rho, np.full(n, 1 / n), atol=1e-9)


def test_stationary_path3_quarter_half_quarter():
    a, _ = adjacency(path3(), directed=False)
    lam, psi = dominant_eig(a)
    s = merw_transition(a, lam, psi)
    rho = stationary(s)
    assert rho == pytest.approx([0.25, 0.5, 0.25], abs=1e-9)
    closed_form = psi**2 / (psi @ psi)
    assert np.allclose(rho, closed_form, atol=1e-9)


def test_stationary_is_left_fixed_point():
    for seed in range(20):
        g = random_multigraph(seed)
        state = compute_merw(g)
        rho = state.stationary_dist
        assert float(np.abs(state.transition.T @ rho - rho).sum()) < 1e-9
        assert rho.sum() == pytest.approx(1.0, abs=1e-9)
        assert rho.min() >= 0


# -- relation transition / entropy rate ---------------------------------------

def test_relation_transition_single_relation_directed():
    state = compute_merw(ring3(), EntropyMode(directed=True))
    sr = state.relation_transition.toarray()
    assert sr.shape == (3, 1)
    assert np.allclose(sr, 1.0, atol=1e-9)
    assert relation_entropy_rate(state.stationary_dist, state.relation_transition) == 0.0


def test_relation_transition_two_out_relations():
    g = make_graph([(0, 0, 1), (0, 1, 2), (1, 0, 0), (2, 0, 0)])
    state = compute_merw(g, EntropyMode(directed=True))
    sr = state.relation_transition.toarray()
    row0 = sr[list(state.nodes).index(0)]
    assert row0.tolist() == pytest.approx([0.5, 0.5], abs=1e-9)


def test_relation_transition_parallel_edges_split_mass():
    # i -> j twice under different relations: each gets half of S_ij
    g = make_graph([(0, 0, 1), (0, 1, 1), (1, 0, 0), (1, 1, 0)])
    state = compute_merw(g, EntropyMode(directed=True))
    sr = state.relation_transition.toarray()
    assert np.allclose(sr, 0.5, atol=1e-9)
    hr = relation_entropy_rate(state.stationary_dist, state.relation_transition)
    assert hr == pytest.approx(1.0, abs=1e-9)  # fair coin per step


def test_relation_entropy_rate_matches_direct_sum():
    for seed in range(30):
        g = random_multigraph(seed, max_nodes=10)
        state = compute_merw(g)
        hr = relation_entropy_rate(state.stationary_dist, state.relation_transition)
        dense = state.relation_transition.toarray()
        expect = 0.0
        for i in range(dense.shape[0]):
            nz = dense[i][dense[i] > 0]
            expect -= state.stationary_dist[i] * float(nz @ np.log2(nz))
        assert hr == pytest.approx(max(expect, 0.0), abs=1e-12)


def test_relation_entropy_rate_bounded():
    for seed in range(20):
        g = random_multigraph(seed)
        state = compute_merw(g)
        hr = relation_entropy_rate(state.stationary_dist, state.relation_transition)
        assert 0.0 <= hr <= math.log2(state.relation_transition.shape[1]) + 1e-12


# -- full pipeline -----------------------------------------------------------

def test_entropy_ring_directed_zero():
    rep = graph_search_entropy(ring3(), EntropyMode(directed=True))
    assert rep.entropy == 0.0
    assert rep.lam == pytest.approx(1.0, abs=1e-10)
    assert rep.coverage == 1.0


def test_entropy_ring_symmetrized_six_bits():
    # every node has two equiprobable moves with distinct (relation, direction)
    rep = graph_search_entropy(ring3(), EntropyMode(directed=False))
    assert rep.log_lambda == pytest.approx(1.0, abs=1e-9)
    assert rep.relation_entropy_rate == pytest.approx(1.0, abs=1e-9)
    assert rep.entropy == pytest.approx(6.0, abs=1e-9)


def test_entropy_complete_graph_ten_bits():
    rep = graph_search_entropy(complete_digraph(5), EntropyMode(directed=True))
    assert rep.entropy == pytest.approx(10.0, abs=1e-9)
    assert rep.relation_entropy_rate == pytest.approx(0.0, abs=1e-12)


def test_entropy_natural_log_mode():
    rep = graph_search_entropy(complete_digraph(5), EntropyMode(directed=True, natural_log=True))
    assert rep.entropy == pytest.approx(5 * math.log(4.0), abs=1e-9)


def test_oracle_equivalence_symmetrized_100_graphs():
    for seed in range(100):
        g = random_multigraph(seed)
        rep = graph_search_entropy(g)
        oracle = dense_entropy_oracle(g, directed=False)
        assert rep.n_entities_used == oracle["n_used"]
        assert rep.lam == pytest.approx(oracle["lambda"], rel=1e-8)
        rel = abs(rep.entropy - oracle["entropy"]) / max(abs(oracle["entropy"]), 1e-12)
        assert rel < 1e-8, f"seed {seed}"


def test_oracle_equivalence_directed_on_cyclic_graphs():
    for seed in range(30):
        rng = np.random.default_rng([seed, 9])
        n = int(rng.integers(4, 12))
        g = KnowledgeGraph()
        g.declare_relations(3)
        for i in range(n):  # ring guarantees a nontrivial SCC
            g.add(i, 0, (i + 1) % n)
        for _ in range(2 * n):
            g.add(int(rng.integers(n)), int(rng.integers(3)), int(rng.integers(n)))
        rep = graph_search_entropy(g, EntropyMode(directed=True))
        oracle = dense_entropy_oracle(g, directed=True)
        rel = abs(rep.entropy - oracle["entropy"]) / max(abs(oracle["entropy"]), 1e-12)
        assert rel < 1e-8, f"seed {seed}"


def test_disjoint_duplicate_components_same_entropy():
    # duplicating a graph as two disjoint copies: analyzing each separately
    # (the pipeline picks the largest component; sizes tie -> the first) must
    # give the same per-component entropy as the original
    g1 = ring3()
    rep1 = graph_search_entropy(g1)
    both = make_graph(
        [(0, 0, 1), (1, 0, 2), (2, 0, 0), (3, 0, 4), (4, 0, 5), (5, 0, 3)]
    )
    rep2 = graph_search_entropy(both)
    assert rep2.n_entities_used == 3
    assert rep2.entropy == pytest.approx(rep1.entropy, abs=1e-10)
    assert rep2.coverage == pytest.approx(0.5)


def test_deterministic_walk_zero_law():
    # one move per node in directed mode -> H = 0
    g = make_graph([(0, 0, 1), (1, 1, 2), (2, 0, 3), (3, 1, 0)])
    rep = graph_search_entropy(g, EntropyMode(directed=True))
    assert rep.entropy == pytest.approx(0.0, abs=1e-9)


def test_report_record_fields():
    rep = graph_search_entropy(ring3())
    rec = rep.to_record()
    for key in (
        "n_entities_used",
        "coverage",
        "lambda",
        "log2_lambda",
        "relation_entropy_rate_bits",
        "entropy_bits",
        "symmetrized",
        "inverse_relations",
        "log_base",
    ):
        assert key in rec
    assert rec["log_base"] == 2
    assert rep.stationary_closed_form_max_diff < 1e-9
    assert rep.stationary_fixed_point_gap < 1e-9
