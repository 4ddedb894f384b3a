"""Acyclic conjunctive rule sampling and node-type derivation.

A rule ``head <- [r1, ..., rn]`` concludes (e0, head, en) from any path
e0 -r1-> e1 ... -rn-> en. Rule sets are sampled so the dependency graph
(head -> each body relation) is a DAG, which guarantees forward chaining
terminates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .core import KgError


class InfeasibleConfig(KgError):
    """Configuration cannot be satisfied."""


@dataclass(frozen=True)
class Rule:
    head: int
    body: tuple[int, ...]

    def __post_init__(self):
        if len(self.body) < 2:
            raise ValueError("rule body must have length >= 2")

    def relations(self) -> frozenset[int]:
        return frozenset((self.head, *self.body))


@dataclass
class RuleSet:
    rules: list[Rule]
    n_relations: int

    def __post_init__(self):
        heads = [r.head for r in self.rules]
        if len(set(heads)) != len(heads):
            raise ValueError("rules must have pairwise distinct head relations")
        self._by_head = {r.head: r for r in self.rules}

    @property
    def size(self) -> int:
        return len(self.rules)

    def rule_for(self, relation: int) -> Rule | None:
        return self._by_head.get(relation)

    def dependency_edges(self) -> set[tuple[int, int]]:
        """Edges head -> body relation over the relation ids."""
        return {(r.head, b) for r in self.rules for b in set(r.body)}

    def dependency_depth(self) -> int:
        """Longest chain of head -> body dependencies (0 for no rules)."""
        adj: dict[int, set[int]] = {}
        for r in self.rules:
            adj[r.head] = set(r.body)
        depth: dict[int, int] = {}

        def rec(rel: int) -> int:
            if rel in depth:
                return depth[rel]
            if rel not in adj:
                depth[rel] = 0
                return 0
            depth[rel] = 1 + max(rec(b) for b in adj[rel])
            return depth[rel]

        return max((rec(r.head) for r in self.rules), default=0)

    def to_record(self) -> dict:
        return {
            "n_relations": self.n_relations,
            "rules": [{"head": r.head, "body": list(r.body)} for r in self.rules],
        }

    @classmethod
    def from_record(cls, record: dict) -> "RuleSet":
        rules = [Rule(r["head"], tuple(r["body"])) for r in record["rules"]]
        return cls(rules, record["n_relations"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_record(), sort_keys=True, indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RuleSet":
        return cls.from_record(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class RuleConfig:
    n_rules: int
    n_relations: int
    length_min: int = 2
    length_max: int = 4
    max_relations_per_node: int = 10
    seed: int = 0

    def validate(self) -> None:
        if self.n_rules < 0:
            raise InfeasibleConfig("n_rules must be >= 0")
        if not 2 <= self.length_min <= self.length_max:
            raise InfeasibleConfig("need 2 <= length_min <= length_max")
        if self.n_relations < self.length_max + 1:
            raise InfeasibleConfig("need n_relations >= length_max + 1")
        if self.max_relations_per_node < 1:
            raise InfeasibleConfig("max_relations_per_node must be >= 1")
        # a head needs >= 2 later relations to build a repetition-free body
        if self.n_rules > max(0, self.n_relations - 2):
            raise InfeasibleConfig(
                f"cannot place {self.n_rules} acyclic rules with distinct heads "
                f"in {self.n_relations} relations"
            )


@dataclass(frozen=True)
class NodeType:
    """Allowed incoming/outgoing relation sets for one entity type."""

    type_id: int
    incoming: frozenset[int]
    outgoing: frozenset[int]
    provenance: str

    def relations(self) -> frozenset[int]:
        return self.incoming | self.outgoing


@dataclass
class NodeTypeCatalog:
    types: list[NodeType]
    # (rule index, entity position) -> type id, for seed-graph typing
    position_types: dict[tuple[int, int], int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.types)

    def __getitem__(self, type_id: int) -> NodeType:
        return self.types[type_id]

    def allows_in(self, type_id: int, relation: int) -> bool:
        return relation in self.types[type_id].incoming

    def allows_out(self, type_id: int, relation: int) -> bool:
        return relation in self.types[type_id].outgoing

    def relations_covered(self) -> set[int]:
        out: set[int] = set()
        for t in self.types:
            out |= t.incoming | t.outgoing
        return out


@dataclass
class AcyclicityReport:
    ok: bool
    cycles: list[list[int]]


def generate_rules(cfg: RuleConfig) -> RuleSet:
    """Sample cfg.n_rules acyclic rules, deterministic in cfg.seed.

    Acyclicity is constructive: relations are put in a random order and each
    rule's head must precede all of its body relations in that order, so the
    head -> body dependency graph is a sub-order of a total order. Heads are
    pairwise distinct; bodies are sampled with replacement but without
    immediate repetition.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(cfg.n_relations)
    if cfg.n_rules == 0:
        return RuleSet([], cfg.n_relations)
    # eligible head positions leave >= 2 successors in the order
    head_positions = rng.choice(cfg.n_relations - 2, size=cfg.n_rules, replace=False)
    rules = []
    for pos in sorted(int(p) for p in head_positions):
        head = int(order[pos])
        successors = order[pos + 1 :]
        n = int(rng.integers(cfg.length_min, cfg.length_max + 1))
        body: list[int] = []
        prev = -1
        for _ in range(n):
            pool = successors[successors != prev] if prev >= 0 else successors
            r = int(rng.choice(pool))
            body.append(r)
            prev = r
        rules.append(Rule(head, tuple(body)))
    return RuleSet(rules, cfg.n_relations)


def check_acyclic(rs: RuleSet) -> AcyclicityReport:
    """Validate the head -> body dependency graph; list any cycles found."""
    adj: dict[int, list[int]] = {r.head: sorted(set(r.body)) for r in rs.rules}
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[int, int] = {}
    stack: list[int] = []
    cycles: list[list[int]] = []
    seen_cycles: set[tuple[int, ...]] = set()

    def visit(u: int) -> None:
        color[u] = GRAY
        stack.append(u)
        for v in adj.get(u, ()):
            c = color.get(v, WHITE)
            if c == GRAY:
                cyc = stack[stack.index(v) :]
                key = tuple(sorted(cyc))
                if key not in seen_cycles:
                    seen_cycles.add(key)
                    cycles.append(list(cyc))
            elif c == WHITE:
                visit(v)
        stack.pop()
        color[u] = BLACK

    for node in sorted(adj):
        if color.get(node, WHITE) == WHITE:
            visit(node)
    return AcyclicityReport(ok=not cycles, cycles=cycles)


def _position_sets(rule: Rule, position: int) -> tuple[set[int], set[int]]:
    """(incoming, outgoing) relation sets for entity position ``position`` of a rule.

    Position 0 emits the first body relation and the head conclusion; the
    last position receives the last body relation and the head conclusion.
    """
    n = len(rule.body)
    if position == 0:
        return set(), {rule.body[0], rule.head}
    if position == n:
        return {rule.body[-1], rule.head}, set()
    return {rule.body[position - 1]}, {rule.body[position]}


def _edge_positions(rule: Rule, relation: int) -> tuple[int, int]:
    """First occurrence of ``relation`` as an edge in the rule: (src, dst) positions."""
    for i, r in enumerate(rule.body):
        if r == relation:
            return i, i + 1
    if relation == rule.head:
        return 0, len(rule.body)
    raise ValueError(f"relation {relation} does not occur in rule")


def derive_node_types(
    rs: RuleSet, max_relations_per_node: int, seed: int = 0
) -> NodeTypeCatalog:
    """Build the node-type catalog from rule positions.

    One type per entity position per rule; for each relation shared between a
    pair of rules, two additional types merging the source positions and the
    target positions of that relation's edges in the two rules. Types whose
    combined relation sets exceed ``max_relations_per_node`` are truncated by
    seed-deterministic sampling.
    """
    report = check_acyclic(rs)
    if not report.ok:
        raise KgError(f"rule set has dependency cycles: {report.cycles}")
    types: list[NodeType] = []
    catalog = NodeTypeCatalog(types)

    def push(inc: set[int], out: set[int], prov: str) -> int:
        tid = len(types)
        types.append(NodeType(tid, frozenset(inc), frozenset(out), prov))
        return tid

    for k, rule in enumerate(rs.rules):
        for pos in range(len(rule.body) + 1):
            inc, out = _position_sets(rule, pos)
            tid = push(inc, out, f"rule{k}:e{pos}")
            catalog.position_types[(k, pos)] = tid

    for (ka, ra), (kb, rb) in combinations(enumerate(rs.rules), 2):
        shared = ra.relations() & rb.relations()
        for rel in sorted(shared):
            sa, da = _edge_positions(ra, rel)
            sb, db = _edge_positions(rb, rel)
            in_sa, out_sa = _position_sets(ra, sa)
            in_sb, out_sb = _position_sets(rb, sb)
            push(in_sa | in_sb, out_sa | out_sb, f"shared:r{rel}:rule{ka}e{sa}+rule{kb}e{sb}")
            in_da, out_da = _position_sets(ra, da)
            in_db, out_db = _position_sets(rb, db)
            push(in_da | in_db, out_da | out_db, f"shared:r{rel}:rule{ka}e{da}+rule{kb}e{db}")

    # cap per-type relation counts (|in| + |out| <= M_r), deterministic per seed
    for i, t in enumerate(types):
        total = len(t.incoming) + len(t.outgoing)
        if total <= max_relations_per_node:
            continue
        tagged = [("in", r) for r in sorted(t.incoming)]
        tagged += [("out", r) for r in sorted(t.outgoing)]
        rng = np.random.default_rng([seed, i])
        keep_idx = rng.choice(len(tagged), size=max_relations_per_node, replace=False)
        keep = [tagged[j] for j in sorted(int(x) for x in keep_idx)]
        inc = frozenset(r for d, r in keep if d == "in")
        out = frozenset(r for d, r in keep if d == "out")
        types[i] = NodeType(t.type_id, inc, out, t.provenance)

    if rs.rules:
        used = set().union(*(r.relations() for r in rs.rules))
        missing = used - catalog.relations_covered()
        if missing:
            raise InfeasibleConfig(
                f"max_relations_per_node={max_relations_per_node} truncated relations "
                f"{sorted(missing)} out of every node type"
            )
    return catalog
