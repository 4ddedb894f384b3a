"""Forward chaining of conjunctive rules: fixpoint closure, witnesses, labeling.

The closure is evaluated semi-naively: each round only explores body paths
that touch at least one triple added in the previous round, which is
output-equivalent to rescanning the whole graph every round (property-tested
against that naive rescan).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .core import ATOMIC, DEDUCIBLE, KnowledgeGraph, Triple
from .rules import Rule, RuleSet, check_acyclic
from .core import KgError


@dataclass(frozen=True)
class Witness:
    """Entity path e0..en instantiating a rule body; certifies one conclusion."""

    rule: Rule
    path: tuple[int, ...]

    def __post_init__(self):
        if len(self.path) != len(self.rule.body) + 1:
            raise ValueError("witness path length must be rule body length + 1")

    def body_triples(self) -> list[Triple]:
        return [
            Triple(self.path[i], r, self.path[i + 1]) for i, r in enumerate(self.rule.body)
        ]

    def conclusion(self) -> Triple:
        return Triple(self.path[0], self.rule.head, self.path[-1])

    def verify(self, g: KnowledgeGraph) -> bool:
        return all(t in g for t in self.body_triples())


def apply_rule_once(g: KnowledgeGraph, rule: Rule) -> dict[Triple, Witness]:
    """All conclusions of one rule not already in g, each with its witness.

    When several body paths produce the same conclusion, the witness is the
    lexicographically smallest entity sequence (deterministic golden output).
    """
    # best[(e0, v)] = lex-min path e0..v over the body prefix processed so far
    first = rule.body[0]
    best: dict[tuple[int, int], tuple[int, ...]] = {}
    for h, ts in g.forward_index(first).items():
        for t in ts:
            key = (h, t)
            cand = (h, t)
            if key not in best or cand < best[key]:
                best[key] = cand
    for rel in rule.body[1:]:
        fwd = g.forward_index(rel)
        nxt: dict[tuple[int, int], tuple[int, ...]] = {}
        for (e0, u), path in best.items():
            for v in fwd.get(u, ()):
                key = (e0, v)
                cand = path + (v,)
                if key not in nxt or cand < nxt[key]:
                    nxt[key] = cand
        best = nxt
    out: dict[Triple, Witness] = {}
    for (e0, en), path in best.items():
        t = Triple(e0, rule.head, en)
        if t not in g:
            out[t] = Witness(rule, path)
    return out


def _left_reach(g: KnowledgeGraph, rels: tuple[int, ...], targets: set[int]) -> dict[int, set[int]]:
    """Map u in ``targets`` -> {e0 with a path e0 -rels-> u}.

    ``rels`` is walked backwards from ``targets`` using the reverse index.
    """
    # reach: node p -> subset of ``targets`` reachable from p via the processed suffix
    reach = {u: {u} for u in targets}
    for rel in reversed(rels):
        rev = g.reverse_index(rel)
        nxt: dict[int, set[int]] = {}
        for u, tgts in reach.items():
            for p in rev.get(u, ()):
                nxt.setdefault(p, set()).update(tgts)
        reach = nxt
    out: dict[int, set[int]] = {}
    for e0, tgts in reach.items():
        for u in tgts:
            out.setdefault(u, set()).add(e0)
    return out


def _right_reach(g: KnowledgeGraph, rels: tuple[int, ...], sources: set[int]) -> dict[int, set[int]]:
    """Map s in ``sources`` -> {en with a path s -rels-> en}."""
    reach = {s: {s} for s in sources}
    for rel in rels:
        fwd = g.forward_index(rel)
        nxt: dict[int, set[int]] = {}
        for s, frontier in reach.items():
            acc: set[int] = set()
            for u in frontier:
                acc.update(fwd.get(u, ()))
            if acc:
                nxt[s] = acc
        reach = nxt
    return reach


def _rule_conclusions_delta(
    g: KnowledgeGraph, rule: Rule, delta: set[Triple]
) -> set[Triple]:
    """Conclusions of ``rule`` over g from body paths using >= 1 triple of ``delta``."""
    out: set[Triple] = set()
    body = rule.body
    delta_by_rel: dict[int, list[Triple]] = {}
    for t in delta:
        delta_by_rel.setdefault(t.relation, []).append(t)
    for i, rel in enumerate(body):
        dts = delta_by_rel.get(rel)
        if not dts:
            continue
        # backward over body[:i] from the delta edges' heads
        lefts = _left_reach(g, body[:i], {t.head for t in dts})
        # forward over body[i+1:] from the delta edges' tails
        rights = _right_reach(g, body[i + 1 :], {t.tail for t in dts})
        for t in dts:
            starts = lefts.get(t.head)
            ends = rights.get(t.tail)
            if not starts or not ends:
                continue
            for e0 in starts:
                for en in ends:
                    out.add(Triple(e0, rule.head, en))
    return out


def close_in_place(
    g: KnowledgeGraph, rs: RuleSet, delta: Iterable[Triple] | None = None
) -> set[Triple]:
    """Run forward chaining to fixpoint, mutating g; returns the added triples.

    ``delta`` limits the first round to paths touching those triples (pass
    None to treat every triple as new, e.g. for a graph never closed before).
    Added triples are labeled deducible.
    """
    if not rs.rules:
        return set()
    frontier: set[Triple] = set(g.triples()) if delta is None else set(delta)
    added: set[Triple] = set()
    while frontier:
        new: set[Triple] = set()
        for rule in rs.rules:
            for t in _rule_conclusions_delta(g, rule, frontier):
                if t not in g:
                    new.add(t)
        for t in sorted(new):
            g.add(t.head, t.relation, t.tail, DEDUCIBLE)
        added |= new
        frontier = new
    return added


def closure(g: KnowledgeGraph, rs: RuleSet) -> KnowledgeGraph:
    """Fixpoint of forward chaining on a copy of g (g is left untouched)."""
    report = check_acyclic(rs)
    if not report.ok:
        raise KgError(f"rule set has dependency cycles: {report.cycles}")
    closed = g.copy()
    close_in_place(closed, rs, delta=None)
    return closed


def find_witness(
    g: KnowledgeGraph,
    rule: Rule,
    head_entity: int,
    tail_entity: int,
    banned: frozenset[Triple] | set[Triple] = frozenset(),
) -> tuple[int, ...] | None:
    """Lex-min body path from head_entity to tail_entity avoiding ``banned`` triples."""
    frontier: dict[int, tuple[int, ...]] = {head_entity: (head_entity,)}
    for rel in rule.body:
        fwd = g.forward_index(rel)
        nxt: dict[int, tuple[int, ...]] = {}
        for u, path in frontier.items():
            for v in fwd.get(u, ()):
                if banned and Triple(u, rel, v) in banned:
                    continue
                cand = path + (v,)
                if v not in nxt or cand < nxt[v]:
                    nxt[v] = cand
        frontier = nxt
        if not frontier:
            return None
    return frontier.get(tail_entity)


def is_deducible(
    t: Triple,
    train: KnowledgeGraph,
    rs: RuleSet,
    closed: KnowledgeGraph | None = None,
) -> Witness | None:
    """Witness for t against the closure of train, or None.

    Certification is multi-round: the witness body may use triples that are
    themselves deduced from train, because rules chain. Pass a precomputed
    ``closed`` graph when certifying many triples against the same train set.
    """
    rule = rs.rule_for(t.relation)
    if rule is None:
        return None
    if closed is None:
        closed = closure(train, rs)
    path = find_witness(closed, rule, t.head, t.tail)
    if path is None:
        return None
    return Witness(rule, path)


def _find_supported_witness(
    closed: KnowledgeGraph,
    g: KnowledgeGraph,
    rs: RuleSet,
    rule: Rule,
    head_entity: int,
    tail_entity: int,
    removed: Triple,
    memo: dict[Triple, bool],
) -> tuple[int, ...] | None:
    """Lex-min body path in ``closed`` whose edges are all derivable from g minus ``removed``.

    Edges present in g (other than ``removed``) support themselves; edges that
    exist only in the closure are checked recursively. The recursion descends
    the rule dependency DAG, so it terminates.
    """

    def supported(edge: Triple) -> bool:
        if edge == removed:
            return False
        if edge in g:
            return True
        if edge in memo:
            return memo[edge]
        rule_e = rs.rule_for(edge.relation)
        ok = False
        if rule_e is not None:
            ok = (
                _find_supported_witness(
                    closed, g, rs, rule_e, edge.head, edge.tail, removed, memo
                )
                is not None
            )
        memo[edge] = ok
        return ok

    frontier: dict[int, tuple[int, ...]] = {head_entity: (head_entity,)}
    for rel in rule.body:
        fwd = closed.forward_index(rel)
        nxt: dict[int, tuple[int, ...]] = {}
        for u, path in frontier.items():
            for v in fwd.get(u, ()):
                if not supported(Triple(u, rel, v)):
                    continue
                cand = path + (v,)
                if v not in nxt or cand < nxt[v]:
                    nxt[v] = cand
        frontier = nxt
        if not frontier:
            return None
    return frontier.get(tail_entity)


def label_triples(g: KnowledgeGraph, rs: RuleSet) -> KnowledgeGraph:
    """Relabel a copy of g: a triple is deducible iff it has a witness in the
    closure of g without that triple; everything else is atomic.

    On an already-closed graph this reduces to one conclusions pass per rule
    (a triple's relation never occurs in its own rule body, so excluding the
    triple cannot break its own witness).
    """
    closed = closure(g, rs)
    out = g.copy()
    if len(closed) == len(g):
        # closed graph: witness edges are all facts of g distinct from t
        pair_cache: dict[int, set[tuple[int, int]]] = {}
        for rule in rs.rules:
            pairs: set[tuple[int, int]] = set()
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
            for e0, ens in frontier.items():
                pairs.update((e0, en) for en in ens)
            pair_cache[rule.head] = pairs
        for t in out.triples():
            pairs = pair_cache.get(t.relation)
            deducible = pairs is not None and (t.head, t.tail) in pairs
            out.set_label(t, DEDUCIBLE if deducible else ATOMIC)
        return out

    for t in out.triples():
        rule = rs.rule_for(t.relation)
        if rule is None:
            out.set_label(t, ATOMIC)
            continue
        memo: dict[Triple, bool] = {}
        path = _find_supported_witness(closed, g, rs, rule, t.head, t.tail, t, memo)
        out.set_label(t, DEDUCIBLE if path is not None else ATOMIC)
    return out
