"""Synthetic graph growth and subsampling.

Growth seeds the graph by instantiating each rule with fresh entities, then
adds one typed entity at a time, attaching edges by per-relation preferential
attachment, with forward chaining interleaved every ``closure_interval``
entities so deduced edges influence later attachment. Subsampling cuts the
closed pool down to the target triple count and deducible/atomic ratio while
reserving a held-out set whose deducibility from the train split is certified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import ATOMIC, DEDUCIBLE, KgError, KnowledgeGraph, Triple
from .deduction import close_in_place, closure, find_witness, is_deducible
from .rules import InfeasibleConfig, NodeTypeCatalog, RuleConfig, RuleSet


@dataclass(frozen=True)
class GraphConfig:
    n_triples: int
    n_entities: int
    n_relations: int
    n_rules: int
    gamma: float
    length_min: int = 2
    length_max: int = 4
    max_relations_per_node: int = 10
    closure_interval: int = 100
    # max edges attached per new entity; 0 = derive from target density
    max_new_edges: int = 0
    seed: int = 0
    # interpret gamma as deducible fraction d/(a+d) instead of the ratio d/a
    gamma_is_fraction: bool = False

    def validate(self) -> None:
        if min(self.n_triples, self.n_entities, self.n_relations, self.n_rules) <= 0:
            raise InfeasibleConfig("all counts must be positive")
        if self.gamma <= 0:
            raise InfeasibleConfig("gamma must be > 0")
        if self.gamma_is_fraction and self.gamma >= 1:
            raise InfeasibleConfig("fractional gamma must be < 1")
        if self.closure_interval < 1:
            raise InfeasibleConfig("closure_interval must be >= 1")
        if self.max_new_edges < 0:
            raise InfeasibleConfig("max_new_edges must be >= 0 (0 = auto)")
        self.rule_config().validate()

    def rule_config(self) -> RuleConfig:
        return RuleConfig(
            n_rules=self.n_rules,
            n_relations=self.n_relations,
            length_min=self.length_min,
            length_max=self.length_max,
            max_relations_per_node=self.max_relations_per_node,
            seed=self.seed,
        )

    def effective_max_new_edges(self) -> int:
        """Attachment budget per entity; sized so the atomic pool can cover
        the train quota even at small gamma when left on auto."""
        if self.max_new_edges > 0:
            return self.max_new_edges
        return max(4, math.ceil(2.2 * self.n_triples / self.n_entities))


@dataclass
class SplitGraph:
    train: KnowledgeGraph
    heldout: list[Triple]
    achieved_gamma: float


def build_seed_graph(rs: RuleSet) -> KnowledgeGraph:
    """Instantiate every rule with fresh entities: body triples atomic, the
    head conclusion deducible. Entity blocks are disjoint across rules."""
    if not rs.rules:
        raise KgError("cannot seed a graph from an empty rule set")
    g = KnowledgeGraph()
    g.declare_relations(rs.n_relations)
    base = 0
    for rule in rs.rules:
        n = len(rule.body)
        for i, rel in enumerate(rule.body):
            g.add(base + i, rel, base + i + 1, ATOMIC)
        g.add(base, rule.head, base + n, DEDUCIBLE)
        base += n + 1
    return g


def preferential_target(
    degrees: Mapping[int, Mapping[int, int]],
    rel: int,
    candidates: Sequence[int],
    rng: np.random.Generator,
) -> int:
    """Sample a candidate with probability proportional to its degree in
    ``rel`` plus one (add-one smoothing keeps zero-degree nodes reachable)."""
    if not candidates:
        raise KgError("preferential_target needs a nonempty candidate set")
    tally = degrees.get(rel, {})
    weights = np.fromiter((tally.get(c, 0) + 1 for c in candidates), dtype=float)
    cum = np.cumsum(weights)
    x = rng.random() * cum[-1]
    return candidates[int(np.searchsorted(cum, x, side="right"))]


class _DegreeView(Mapping[int, Mapping[int, int]]):
    """Read-only view of a graph's per-relation degree tallies."""

    def __init__(self, g: KnowledgeGraph):
        self._g = g

    def __getitem__(self, rel: int) -> Mapping[int, int]:
        return self._g.relation_degrees(rel)

    def get(self, rel: int, default=None):
        return self._g.relation_degrees(rel)

    def __iter__(self):
        return iter(range(self._g.n_relations))

    def __len__(self) -> int:
        return self._g.n_relations


def grow_graph(cfg: GraphConfig, rs: RuleSet, types: NodeTypeCatalog) -> KnowledgeGraph:
    """Grow to exactly cfg.n_entities entities; deterministic per seed.

    Each new entity gets a uniform node type and attaches 1..max_new_edges
    edges whose relations are drawn (with replacement) from the type's allowed
    sets, oriented by which side of the relation the type allows. Closure runs
    every ``closure_interval`` added entities and once at the end. Labels are
    by provenance (attachment = atomic, chaining = deducible); run
    :func:`kgscale.deduction.label_triples` afterwards for derivability-exact
    labels.
    """
    cfg.validate()
    if not rs.rules:
        raise KgError("grow_graph needs a nonempty rule set")
    if len(types) == 0:
        raise KgError("grow_graph needs a nonempty node-type catalog")
    for t in types.types:
        if not (t.incoming | t.outgoing):
            raise InfeasibleConfig(f"node type {t.type_id} allows no relations")

    rng = np.random.default_rng([cfg.seed, 1])
    g = build_seed_graph(rs)
    g.declare_relations(cfg.n_relations)
    if g.n_entities > cfg.n_entities:
        raise InfeasibleConfig(
            f"seed graph already has {g.n_entities} entities > target {cfg.n_entities}"
        )

    node_types: list[int] = []
    for k, rule in enumerate(rs.rules):
        for pos in range(len(rule.body) + 1):
            node_types.append(types.position_types[(k, pos)])
    assert len(node_types) == g.n_entities

    # entities that may receive (can_in) / emit (can_out) each relation
    can_in: dict[int, list[int]] = {r: [] for r in range(cfg.n_relations)}
    can_out: dict[int, list[int]] = {r: [] for r in range(cfg.n_relations)}

    def register(entity: int, type_id: int) -> None:
        t = types[type_id]
        for r in t.incoming:
            can_in[r].append(entity)
        for r in t.outgoing:
            can_out[r].append(entity)

    for e, tid in enumerate(node_types):
        register(e, tid)

    degrees = _DegreeView(g)
    close_in_place(g, rs, delta=None)
    m_max = cfg.effective_max_new_edges()
    pending: list[Triple] = []
    since_closure = 0

    while g.n_entities < cfg.n_entities:
        e = g.n_entities
        tid = -1
        options: list[tuple[str, int]] = []
        for _ in range(64):
            tid = int(rng.integers(len(types)))
            t = types[tid]
            options = [("out", r) for r in sorted(t.outgoing) if can_in[r]]
            options += [("in", r) for r in sorted(t.incoming) if can_out[r]]
            if options:
                break
        if not options:
            raise KgError("no node type can attach to the current graph")

        m = int(rng.integers(1, m_max + 1))
        placed = 0
        budget = 4 * m  # duplicate edges waste a draw; allow retries
        while placed < m and budget > 0:
            budget -= 1
            direction, rel = options[int(rng.integers(len(options)))]
            cands = can_in[rel] if direction == "out" else can_out[rel]
            other = preferential_target(degrees, rel, cands, rng)
            trip = (e, rel, other) if direction == "out" else (other, rel, e)
            if g.add(*trip, label=ATOMIC):
                pending.append(Triple(*trip))
                placed += 1
        if placed == 0:
            raise KgError(f"could not attach any edge for entity {e}")

        node_types.append(tid)
        register(e, tid)
        since_closure += 1
        if since_closure >= cfg.closure_interval:
            close_in_place(g, rs, delta=pending)
            pending.clear()
            since_closure = 0

    close_in_place(g, rs, delta=pending if pending else None)
    g.node_types = node_types
    return g


def check_type_consistency(
    g: KnowledgeGraph, types: NodeTypeCatalog, rs: RuleSet
) -> list[str]:
    """Full-rescan validation of every edge; returns human-readable violations.

    Atomic edges must be allowed by the endpoint node types from the catalog.
    Deducible edges are logical consequences rather than sampled attachments,
    so they are validated by re-deriving them: the body path of their rule
    must exist in the graph.
    """
    if g.node_types is None:
        return ["graph carries no node-type assignment"]
    violations: list[str] = []
    deducible_pairs: dict[int, set[tuple[int, int]]] = {}
    for rule in rs.rules:
        frontier: dict[int, set[int]] = {
            h: set(ts) for h, ts in g.forward_index(rule.body[0]).items()
        }
        for rel in rule.body[1:]:
            fwd = g.forward_index(rel)
            nxt: dict[int, set[int]] = {}
            for e0, us in frontier.items():
                acc: set[int] = set()
                for u in us:
                    acc.update(fwd.get(u, ()))
                if acc:
                    nxt[e0] = acc
            frontier = nxt
        deducible_pairs[rule.head] = {
            (e0, en) for e0, ens in frontier.items() for en in ens
        }
    for t in g.triples():
        if g.label(t) == DEDUCIBLE:
            pairs = deducible_pairs.get(t.relation, set())
            if (t.head, t.tail) not in pairs:
                violations.append(f"{t}: labeled deducible but no body path re-derives it")
            continue
        th = types[g.node_types[t.head]]
        tt = types[g.node_types[t.tail]]
        if t.relation not in th.outgoing:
            violations.append(f"{t}: relation not in head type outgoing set")
        if t.relation not in tt.incoming:
            violations.append(f"{t}: relation not in tail type incoming set")
    return violations


def _quotas(n_triples: int, gamma: float, gamma_is_fraction: bool) -> tuple[int, int]:
    """(atomic, deducible) train counts for the requested mix."""
    if gamma_is_fraction:
        d = round(n_triples * gamma)
    else:
        d = round(n_triples * gamma / (1.0 + gamma))
    d = min(max(d, 0), n_triples)
    return n_triples - d, d


def subsample(
    g: KnowledgeGraph,
    rs: RuleSet,
    n_triples: int,
    gamma: float,
    heldout_size: int,
    rng: np.random.Generator,
    gamma_is_fraction: bool = False,
) -> SplitGraph:
    """Cut a labeled closed graph to ``n_triples`` train triples at the
    requested deducible/atomic mix, plus ``heldout_size`` certified held-out
    deducible triples disjoint from train.

    Held-out witnesses are restricted to non-held-out triples, and every
    triple supporting a held-out witness is protected into the train split, so
    certification against the train closure cannot fail.
    """
    a_target, d_target = _quotas(n_triples, gamma, gamma_is_fraction)
    atomics = [t for t in g.triples() if g.label(t) == ATOMIC]
    deducibles = [t for t in g.triples() if g.label(t) == DEDUCIBLE]
    if len(deducibles) < d_target + heldout_size:
        raise KgError(
            f"deducible pool too small: have {len(deducibles)}, "
            f"need {d_target} train + {heldout_size} held-out"
        )
    if len(atomics) < a_target:
        raise KgError(f"atomic pool too small: have {len(atomics)}, need {a_target}")

    order = rng.permutation(len(deducibles))
    heldout: list[Triple] = []
    heldout_set: set[Triple] = set()
    protected: set[Triple] = set()
    for idx in order:
        if len(heldout) == heldout_size:
            break
        cand = deducibles[int(idx)]
        if cand in protected:
            continue
        rule = rs.rule_for(cand.relation)
        if rule is None:
            continue
        path = find_witness(g, rule, cand.head, cand.tail, banned=heldout_set | {cand})
        if path is None:
            continue
        heldout.append(cand)
        heldout_set.add(cand)
        for i, rel in enumerate(rule.body):
            protected.add(Triple(path[i], rel, path[i + 1]))
    if len(heldout) < heldout_size:
        raise KgError(
            f"only {len(heldout)} of {heldout_size} held-out triples could be "
            "certified with train-only witnesses"
        )

    prot_a = [t for t in atomics if t in protected]
    prot_d = [t for t in deducibles if t in protected and t not in heldout_set]
    if len(prot_a) > a_target or len(prot_d) > d_target:
        raise KgError(
            "held-out witness support exceeds the train quotas "
            f"(atomic {len(prot_a)}/{a_target}, deducible {len(prot_d)}/{d_target})"
        )

    free_a = [t for t in atomics if t not in protected]
    free_d = [t for t in deducibles if t not in protected and t not in heldout_set]
    pick_a = rng.permutation(len(free_a))[: a_target - len(prot_a)]
    pick_d = rng.permutation(len(free_d))[: d_target - len(prot_d)]
    chosen = set(prot_a) | set(prot_d)
    chosen.update(free_a[int(i)] for i in pick_a)
    chosen.update(free_d[int(i)] for i in pick_d)

    train = KnowledgeGraph()
    train.declare_entities(g.n_entities)
    train.declare_relations(g.n_relations)
    for t in g.triples():  # original order keeps the split deterministic
        if t in chosen:
            train.add(t.head, t.relation, t.tail, g.label(t))
    train.node_types = list(g.node_types) if g.node_types else None

    counts = train.label_counts()
    n_a, n_d = counts[ATOMIC], counts[DEDUCIBLE]
    achieved = (n_d / (n_a + n_d)) if gamma_is_fraction else (n_d / n_a if n_a else math.inf)
    if abs(achieved - gamma) > 0.05 * gamma:
        raise KgError(f"achieved gamma {achieved:.4f} outside 5% of requested {gamma}")

    closed_train = closure(train, rs)
    for h in heldout:
        if h in train:
            raise KgError(f"held-out triple {h} leaked into train")
        if is_deducible(h, train, rs, closed=closed_train) is None:
            raise KgError(f"held-out triple {h} failed certification against train")
    return SplitGraph(train=train, heldout=heldout, achieved_gamma=achieved)
