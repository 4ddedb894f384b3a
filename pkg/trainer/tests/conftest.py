"""Shared helpers: tiny vocabs, synthetic eval files, tiny corpora."""

from __future__ import annotations

import json
import string
from pathlib import Path

import pytest

from kgtrainer.data import BOS_SYMBOL, EOS_SYMBOL, PAD_SYMBOL, CharTokenizer

B36 = string.digits + string.ascii_lowercase


def triple_vocab() -> list[str]:
    return [PAD_SYMBOL, BOS_SYMBOL, EOS_SYMBOL, " ", "e", "r"] + list(B36)


def write_vocab_file(path: Path, symbols: list[str]) -> Path:
    esc = {" ": "\\s", "\n": "\\n", "\t": "\\t", "\\": "\\\\"}
    path.write_text("".join(esc.get(s, s) + "\n" for s in symbols))
    return path


def random_entity_id(rng) -> str:
    return "e" + "".join(rng.choice(list(B36)) for _ in range(5))


def random_relation_id(rng) -> str:
    return "r" + "".join(rng.choice(list(B36)) for _ in range(3))


def synthetic_corpus(n_lines: int, seed: int = 0) -> list[str]:
    import random

    rng = random.Random(seed)
    ents = [random_entity_id(rng) for _ in range(max(8, n_lines // 4))]
    rels = [random_relation_id(rng) for _ in range(4)]
    return [
        f"{rng.choice(ents)} {rng.choice(rels)} {rng.choice(ents)}"
        for _ in range(n_lines)
    ]


def synthetic_eval_file(path: Path, n_questions: int, seed: int = 0) -> Path:
    import random

    rng = random.Random(seed)
    with path.open("w") as fh:
        for _ in range(n_questions):
            options = []
            while len(options) < 10:
                e = random_entity_id(rng)
                if e not in options:
                    options.append(e)
            rec = {
                "head_id": random_entity_id(rng),
                "relation_id": random_relation_id(rng),
                "options": options,
                "answer_index": rng.randrange(10),
            }
            fh.write(json.dumps(rec) + "\n")
    return path


@pytest.fixture
def tok():
    return CharTokenizer(triple_vocab())
