"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's indexed/semi-naive/sparse
code paths: deduction is checked against naive full-rescan path enumeration
over plain triple sets, and the entropy pipeline against a dense
eigendecomposition built on numpy + networkx.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np
import pytest

from kgscale.core import KnowledgeGraph
from kgscale.rules import Rule


def make_graph(triples, n_entities=None, n_relations=None, labels=None):
    g = KnowledgeGraph()
    for i, (h, r, t) in enumerate(triples):
        g.add(h, r, t, labels[i] if labels else "unlabeled")
    if n_entities:
        g.declare_entities(n_entities)
    if n_relations:
        g.declare_relations(n_relations)
    return g


# ---------------------------------------------------------------------------
# deduction oracle: naive path enumeration over plain tuple sets
# ---------------------------------------------------------------------------

def brute_conclusions(triples: set[tuple], rule: Rule) -> set[tuple]:
    """All (e0, head, en) with a full body path, by naive join over tuples."""
    by_rel = defaultdict(list)
    for h, r, t in triples:
        by_rel[r].append((h, t))
    frontier = set(by_rel[rule.body[0]])
    for rel in rule.body[1:]:
        edges = by_rel[rel]
        frontier = {(e0, t) for (e0, u) in frontier for (h, t) in edges if h == u}
    return {(e0, rule.head, en) for (e0, en) in frontier}


def brute_closure(triples: set[tuple], rules) -> set[tuple]:
    cur = set(triples)
    while True:
        new = set()
        for rule in rules:
            new |= brute_conclusions(cur, rule)
        new -= cur
        if not new:
            return cur
        cur |= new


def brute_paths(triples: set[tuple], rule: Rule, e0: int, en: int) -> list[tuple]:
    """Every body path e0..en, enumerated exhaustively."""
    by_rel = defaultdict(list)
    for h, r, t in triples:
        by_rel[r].append((h, t))
    paths = [(e0,)]
    for rel in rule.body:
        nxt = []
        for p in paths:
            for h, t in by_rel[rel]:
                if h == p[-1]:
                    nxt.append(p + (t,))
        paths = nxt
    return [p for p in paths if p[-1] == en]


# ---------------------------------------------------------------------------
# entropy oracle: dense eigendecomposition pipeline (numpy + networkx)
# ---------------------------------------------------------------------------

def dense_entropy_oracle(g: KnowledgeGraph, directed: bool = False) -> dict:
    import networkx as nx

    n = g.n_entities
    n_rel = g.n_relations
    a = np.zeros((n, n))
    for t in g.triples():
        a[t.head, t.tail] += 1.0
    if not directed:
        a = a + a.T

    if directed:
        gx = nx.DiGraph()
        gx.add_nodes_from(range(n))
        gx.add_edges_from(zip(*np.nonzero(a)))
        comps = list(nx.strongly_connected_components(gx))
    else:
        gx = nx.Graph()
        gx.add_nodes_from(range(n))
        gx.add_edges_from(zip(*np.nonzero(a)))
        comps = list(nx.connected_components(gx))
    comp = max(comps, key=len)
    nodes = sorted(comp)
    sub = a[np.ix_(nodes, nodes)]
    assert sub.sum() > 0, "oracle: chosen component has no edges"

    w, v = np.linalg.eig(sub)
    k = int(np.argmax(w.real))
    lam = float(w[k].real)
    psi = np.abs(v[:, k].real)
    psi /= np.linalg.norm(psi)

    s = (sub / lam) * psi[None, :] / psi[:, None]
    w2, v2 = np.linalg.eig(s.T)
    k2 = int(np.argmin(np.abs(w2 - 1.0)))
    rho = np.abs(v2[:, k2].real)
    rho /= rho.sum()

    pos = {e: i for i, e in enumerate(nodes)}
    n_cols = n_rel if directed else 2 * n_rel
    sr = np.zeros((len(nodes), n_cols))
    for t in g.triples():
        if t.head not in pos or t.tail not in pos:
            continue
        i, j = pos[t.head], pos[t.tail]
        sr[i, t.relation] += s[i, j] / sub[i, j]
        if not directed:
            sr[j, t.relation + n_rel] += s[j, i] / sub[j, i]

    hr = 0.0
    for i in range(len(nodes)):
        row = sr[i]
        nz = row[row > 0]
        hr -= rho[i] * float(nz @ np.log2(nz))
    hr = max(hr, 0.0)
    return {
        "lambda": lam,
        "log2_lambda": math.log2(lam),
        "hr": hr,
        "entropy": len(nodes) * (math.log2(lam) + hr),
        "n_used": len(nodes),
    }


def random_multigraph(seed: int, max_nodes: int = 20, max_rel: int = 4) -> KnowledgeGraph:
    """Seeded random relation-typed multigraph (parallel edges allowed)."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, max_nodes + 1))
    n_rel = int(rng.integers(1, max_rel + 1))
    n_edges = int(rng.integers(n, 3 * n + 1))
    g = KnowledgeGraph()
    g.declare_entities(n)
    g.declare_relations(n_rel)
    for _ in range(n_edges):
        h = int(rng.integers(n))
        t = int(rng.integers(n))
        r = int(rng.integers(n_rel))
        g.add(h, r, t)
    if len(g) == 0:
        g.add(0, 0, 1)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
