"""Pretraining corpus and multiple-choice evaluation emission.

Entities and relations get fixed-width random base-36 ids so the corpus is
character-tokenizable without lexical leakage; the evaluation set poses each
held-out triple as a 10-option question with exactly one correct tail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import KgError, KnowledgeGraph, Triple
from .graphgen import SplitGraph

_B36 = "0123456789abcdefghijklmnopqrstuvwxyz"
ENTITY_ID_DIGITS = 5
RELATION_ID_DIGITS = 3

PAD_SYMBOL = "<pad>"
BOS_SYMBOL = "<bos>"
EOS_SYMBOL = "<eos>"
_ESCAPES = {" ": "\\s", "\n": "\\n", "\t": "\\t", "\\": "\\\\"}
_UNESCAPES = {v: k for k, v in _ESCAPES.items()}


def _b36(value: int, width: int) -> str:
    out = []
    for _ in range(width):
        value, digit = divmod(value, 36)
        out.append(_B36[digit])
    return "".join(reversed(out))


@dataclass
class IdMap:
    entity_ids: list[str]
    relation_ids: list[str]
    scheme: str
    seed: int

    def save(self, path: str | Path) -> None:
        rec = {
            "scheme": self.scheme,
            "seed": self.seed,
            "entity_ids": self.entity_ids,
            "relation_ids": self.relation_ids,
        }
        Path(path).write_text(json.dumps(rec, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "IdMap":
        rec = json.loads(Path(path).read_text())
        return cls(rec["entity_ids"], rec["relation_ids"], rec["scheme"], rec["seed"])


@dataclass
class EvalQuestion:
    head: int
    relation: int
    options: list[int]
    answer_index: int

    def correct_tail(self) -> int:
        return self.options[self.answer_index]


def _sample_unique(rng: np.random.Generator, space: int, count: int, width: int) -> list[str]:
    if count > space:
        raise KgError(f"id space exhausted: need {count} ids from {space}")
    seen: set[int] = set()
    out: list[str] = []
    while len(out) < count:
        v = int(rng.integers(space))
        if v in seen:
            continue
        seen.add(v)
        out.append(_b36(v, width))
    return out


def assign_ids(g: KnowledgeGraph, seed: int) -> IdMap:
    """Random collision-free ids: 'e' + 5 base-36 chars per entity,
    'r' + 3 per relation. Deterministic in the seed."""
    rng = np.random.default_rng([seed, 2])
    ents = _sample_unique(rng, 36**ENTITY_ID_DIGITS, g.n_entities, ENTITY_ID_DIGITS)
    rels = _sample_unique(rng, 36**RELATION_ID_DIGITS, g.n_relations, RELATION_ID_DIGITS)
    return IdMap(
        entity_ids=[f"e{v}" for v in ents],
        relation_ids=[f"r{v}" for v in rels],
        scheme=f"e+{ENTITY_ID_DIGITS}b36/r+{RELATION_ID_DIGITS}b36",
        seed=seed,
    )


def triple_line(t: Triple, ids: IdMap) -> str:
    return f"{ids.entity_ids[t.head]} {ids.relation_ids[t.relation]} {ids.entity_ids[t.tail]}"


def emit_training_corpus(
    sg: SplitGraph,
    ids: IdMap,
    path: str | Path,
    mode: str = "triple-id",
    templates: dict[int, str] | None = None,
    seed: int = 0,
) -> int:
    """Write one training example per train triple, shuffled per seed.

    ``triple-id`` mode writes '<head-id> <rel-id> <tail-id>' lines;
    ``template-sentence`` substitutes head/tail ids into a per-relation
    template containing X and Y placeholders. Returns the line count.
    """
    if mode not in ("triple-id", "template-sentence"):
        raise KgError(f"unknown corpus mode {mode!r}")
    lines: list[str] = []
    for t in sg.train.triples():
        if mode == "triple-id":
            lines.append(triple_line(t, ids))
        else:
            if templates is None or t.relation not in templates:
                raise KgError(f"no sentence template for relation {t.relation}")
            tpl = templates[t.relation]
            lines.append(
                tpl.replace("X", ids.entity_ids[t.head]).replace(
                    "Y", ids.entity_ids[t.tail]
                )
            )
    rng = np.random.default_rng([seed, 3])
    order = rng.permutation(len(lines))
    with Path(path).open("w", encoding="utf-8") as fh:
        for i in order:
            fh.write(lines[int(i)])
            fh.write("\n")
    return len(lines)


def build_eval_set(
    sg: SplitGraph,
    full_closure: KnowledgeGraph,
    m: int,
    rng: np.random.Generator,
    max_attempts: int = 200,
) -> tuple[list[EvalQuestion], list[Triple]]:
    """Build m 10-option questions from the held-out triples.

    Distractors are drawn uniformly from entities d with (head, relation, d)
    outside the full closure, so exactly one option is correct. Triples for
    which 9 valid distractors cannot be found within ``max_attempts`` draws
    are skipped and reported in the second return value.
    """
    if len(sg.heldout) < m:
        raise KgError(f"need {m} held-out triples, have {len(sg.heldout)}")
    n_entities = full_closure.n_entities
    master = int(rng.integers(2**31))
    questions: list[EvalQuestion] = []
    skipped: list[Triple] = []
    for qi, t in enumerate(sg.heldout):
        if len(questions) == m:
            break
        qrng = np.random.default_rng([master, qi])  # independent per-question substream
        valid_tails = set(full_closure.tails(t.head, t.relation))
        distractors: list[int] = []
        seen = {t.tail}
        attempts = 0
        while len(distractors) < 9 and attempts < max_attempts:
            attempts += 1
            d = int(qrng.integers(n_entities))
            if d in seen or d in valid_tails:
                continue
            seen.add(d)
            distractors.append(d)
        if len(distractors) < 9:
            skipped.append(t)
            continue
        answer_index = int(qrng.integers(10))
        options = distractors[:answer_index] + [t.tail] + distractors[answer_index:]
        questions.append(
            EvalQuestion(head=t.head, relation=t.relation, options=options, answer_index=answer_index)
        )
    if len(questions) < m:
        raise KgError(
            f"only {len(questions)} of {m} questions could be built "
            f"({len(skipped)} held-out triples had too few valid distractors)"
        )
    return questions, skipped


def validate_single_answer(
    questions: Iterable[EvalQuestion], full_closure: KnowledgeGraph
) -> list[int]:
    """Indices of questions whose option list does not contain exactly one
    tail present in the full closure (empty list = all valid)."""
    bad = []
    for i, q in enumerate(questions):
        valid = set(full_closure.tails(q.head, q.relation))
        hits = sum(1 for o in q.options if o in valid)
        if hits != 1 or Triple(q.head, q.relation, q.correct_tail()) not in full_closure:
            bad.append(i)
    return bad


def write_eval_set(questions: list[EvalQuestion], ids: IdMap, path: str | Path) -> None:
    """One JSON record per line: {head_id, relation_id, options, answer_index}."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for q in questions:
            rec = {
                "head_id": ids.entity_ids[q.head],
                "relation_id": ids.relation_ids[q.relation],
                "options": [ids.entity_ids[o] for o in q.options],
                "answer_index": q.answer_index,
            }
            fh.write(json.dumps(rec, sort_keys=True))
            fh.write("\n")


def build_vocab(corpus_path: str | Path) -> list[str]:
    """Sorted unique corpus characters preceded by the pad/bos/eos symbols."""
    chars: set[str] = set()
    with Path(corpus_path).open(encoding="utf-8") as fh:
        while True:
            chunk = fh.read(1 << 20)
            if not chunk:
                break
            chars.update(chunk)
    return [PAD_SYMBOL, BOS_SYMBOL, EOS_SYMBOL] + sorted(chars)


def write_vocab(vocab: list[str], path: str | Path) -> None:
    """One symbol per line (index = line number); whitespace chars escaped."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for sym in vocab:
            fh.write(_ESCAPES.get(sym, sym))
            fh.write("\n")


def read_vocab(path: str | Path) -> list[str]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            out.append(_UNESCAPES.get(line, line))
    return out
