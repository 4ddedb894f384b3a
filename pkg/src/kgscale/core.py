"""Core knowledge-graph data model: triples, indices, TSV I/O, structural stats."""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

logger = logging.getLogger(__name__)

ATOMIC = "atomic"
DEDUCIBLE = "deducible"
UNLABELED = "unlabeled"

_LABELS = frozenset({ATOMIC, DEDUCIBLE, UNLABELED})


class KgError(Exception):
    """Base error for this package."""


class FormatError(KgError):
    """Malformed input file."""


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


class KnowledgeGraph:
    """Relation-typed directed multigraph of unique (head, relation, tail) triples.

    Construction is single-owner: build with :meth:`add`, then treat as
    read-only. Duplicate triples are rejected (the triple set is a set, not a
    multiset). Entity and relation ids are dense 0-based ints; optional
    human-readable names live in side tables so synthetic graphs (ids only)
    and imported graphs share one model.
    """

    def __init__(self, n_entities: int = 0, n_relations: int = 0):
        self._labels: dict[Triple, str] = {}
        self._n_entities = n_entities
        self._n_relations = n_relations
        # forward[r][h] -> [t, ...], reverse[r][t] -> [h, ...]
        self._forward: dict[int, dict[int, list[int]]] = defaultdict(dict)
        self._reverse: dict[int, dict[int, list[int]]] = defaultdict(dict)
        # per-relation total (in+out) degree, for preferential attachment
        self._rel_degree: dict[int, Counter] = defaultdict(Counter)
        self.entity_names: list[str] | None = None
        self.relation_names: list[str] | None = None
        # entity -> node-type id, set by the generator; None for imported graphs
        self.node_types: list[int] | None = None
        self.duplicates_dropped = 0

    # -- construction ------------------------------------------------------

    def add(self, head: int, relation: int, tail: int, label: str = UNLABELED) -> bool:
        """Add a triple; returns False (and changes nothing) if it already exists."""
        if label not in _LABELS:
            raise ValueError(f"unknown label {label!r}")
        t = Triple(head, relation, tail)
        if t in self._labels:
            return False
        self._labels[t] = label
        self._forward[relation].setdefault(head, []).append(tail)
        self._reverse[relation].setdefault(tail, []).append(head)
        deg = self._rel_degree[relation]
        deg[head] += 1
        deg[tail] += 1
        if head >= self._n_entities:
            self._n_entities = head + 1
        if tail >= self._n_entities:
            self._n_entities = tail + 1
        if relation >= self._n_relations:
            self._n_relations = relation + 1
        return True

    def declare_entities(self, n: int) -> None:
        """Widen the entity universe to at least n (entities may be isolated)."""
        self._n_entities = max(self._n_entities, n)

    def declare_relations(self, n: int) -> None:
        self._n_relations = max(self._n_relations, n)

    # -- queries -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, t: Triple) -> bool:
        return t in self._labels

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._labels)

    @property
    def n_entities(self) -> int:
        return self._n_entities

    @property
    def n_relations(self) -> int:
        return self._n_relations

    def triples(self) -> Iterator[Triple]:
        return iter(self._labels)

    def label(self, t: Triple) -> str:
        return self._labels[t]

    def set_label(self, t: Triple, label: str) -> None:
        if label not in _LABELS:
            raise ValueError(f"unknown label {label!r}")
        if t not in self._labels:
            raise KeyError(t)
        self._labels[t] = label

    def tails(self, head: int, relation: int) -> list[int]:
        return self._forward.get(relation, {}).get(head, [])

    def heads(self, tail: int, relation: int) -> list[int]:
        return self._reverse.get(relation, {}).get(tail, [])

    def forward_index(self, relation: int) -> dict[int, list[int]]:
        """head -> tails map for one relation (do not mutate)."""
        return self._forward.get(relation, {})

    def reverse_index(self, relation: int) -> dict[int, list[int]]:
        return self._reverse.get(relation, {})

    def relation_degree(self, relation: int, entity: int) -> int:
        return self._rel_degree.get(relation, Counter())[entity]

    def relation_degrees(self, relation: int) -> Counter:
        return self._rel_degree.get(relation, Counter())

    def relations_present(self) -> list[int]:
        return sorted(r for r, idx in self._forward.items() if idx)

    def label_counts(self) -> Counter:
        return Counter(self._labels.values())

    def copy(self) -> "KnowledgeGraph":
        g = KnowledgeGraph(self._n_entities, self._n_relations)
        for t, lab in self._labels.items():
            g.add(t.head, t.relation, t.tail, lab)
        g.declare_entities(self._n_entities)
        g.declare_relations(self._n_relations)
        g.entity_names = list(self.entity_names) if self.entity_names else None
        g.relation_names = list(self.relation_names) if self.relation_names else None
        g.node_types = list(self.node_types) if self.node_types else None
        return g

    def check_indices(self) -> None:
        """Assert forward/reverse indices and degree tallies match the triple set."""
        n_fwd = sum(len(ts) for idx in self._forward.values() for ts in idx.values())
        n_rev = sum(len(hs) for idx in self._reverse.values() for hs in idx.values())
        if n_fwd != len(self._labels) or n_rev != len(self._labels):
            raise AssertionError("index sizes diverge from triple count")
        for t in self._labels:
            if t.tail not in self.tails(t.head, t.relation):
                raise AssertionError(f"forward index missing {t}")
            if t.head not in self.heads(t.tail, t.relation):
                raise AssertionError(f"reverse index missing {t}")
        recomputed: dict[int, Counter] = defaultdict(Counter)
        for t in self._labels:
            recomputed[t.relation][t.head] += 1
            recomputed[t.relation][t.tail] += 1
        for r, deg in self._rel_degree.items():
            if +deg != +recomputed[r]:
                raise AssertionError(f"degree tally mismatch for relation {r}")


@dataclass
class GraphStats:
    """Structural statistics of a graph (node histograms cover all entities)."""

    degree_histogram: dict[int, int]
    out_relation_histogram: dict[int, int]
    relation_edge_counts: dict[int, int]
    component_sizes: list[int]

    def to_record(self) -> dict:
        return {
            "degree_histogram": {str(k): v for k, v in sorted(self.degree_histogram.items())},
            "out_relation_histogram": {
                str(k): v for k, v in sorted(self.out_relation_histogram.items())
            },
            "relation_edge_counts": {
                str(k): v for k, v in sorted(self.relation_edge_counts.items())
            },
            "component_sizes": self.component_sizes,
        }


def import_tsv(path: str | Path | Iterable[str | Path]) -> KnowledgeGraph:
    """Load head<TAB>relation<TAB>tail files, interning names in first-appearance order.

    Several paths (e.g. train/valid/test splits) merge into one graph.
    Duplicate lines are dropped and counted on ``duplicates_dropped``. Raises
    :class:`FormatError` for malformed lines (with line number) or empty input.
    """
    paths = [Path(path)] if isinstance(path, (str, Path)) else [Path(p) for p in path]
    entities: dict[str, int] = {}
    relations: dict[str, int] = {}
    g = KnowledgeGraph()
    n_lines = 0
    for p in paths:
        with p.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n").rstrip("\r")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 3 or any(not f for f in parts):
                    raise FormatError(f"{p}:{lineno}: expected 3 non-empty tab-separated fields")
                h, r, t = parts
                hid = entities.setdefault(h, len(entities))
                rid = relations.setdefault(r, len(relations))
                tid = entities.setdefault(t, len(entities))
                if not g.add(hid, rid, tid):
                    g.duplicates_dropped += 1
                n_lines += 1
    if n_lines == 0:
        raise FormatError(f"{paths}: no triples found")
    if g.duplicates_dropped:
        logger.warning("%s: dropped %d duplicate triples", paths, g.duplicates_dropped)
    g.entity_names = [name for name, _ in sorted(entities.items(), key=lambda kv: kv[1])]
    g.relation_names = [name for name, _ in sorted(relations.items(), key=lambda kv: kv[1])]
    return g


def export_tsv(g: KnowledgeGraph, path: str | Path) -> None:
    """Write triples as TSV; round-trips through :func:`import_tsv` up to id renaming.

    Labels are not part of the format (FB15K-237 compatibility).
    """
    path = Path(path)
    ent = g.entity_names or [f"e{i}" for i in range(g.n_entities)]
    rel = g.relation_names or [f"r{i}" for i in range(g.n_relations)]
    with path.open("w", encoding="utf-8") as fh:
        for t in g.triples():
            fh.write(f"{ent[t.head]}\t{rel[t.relation]}\t{ent[t.tail]}\n")


def graph_stats(g: KnowledgeGraph) -> GraphStats:
    """Degree and relation histograms plus undirected component sizes."""
    degree: Counter = Counter()
    out_rels: dict[int, set[int]] = defaultdict(set)
    rel_counts: Counter = Counter()
    for t in g.triples():
        degree[t.head] += 1
        degree[t.tail] += 1
        out_rels[t.head].add(t.relation)
        rel_counts[t.relation] += 1

    deg_hist: Counter = Counter()
    out_hist: Counter = Counter()
    for e in range(g.n_entities):
        deg_hist[degree[e]] += 1
        out_hist[len(out_rels.get(e, ()))] += 1

    # undirected components via union-find
    parent = list(range(g.n_entities))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t in g.triples():
        a, b = find(t.head), find(t.tail)
        if a != b:
            parent[a] = b
    comp_sizes: Counter = Counter(find(e) for e in range(g.n_entities))
    return GraphStats(
        degree_histogram=dict(deg_hist),
        out_relation_histogram=dict(out_hist),
        relation_edge_counts=dict(rel_counts),
        component_sizes=sorted(comp_sizes.values(), reverse=True),
    )
