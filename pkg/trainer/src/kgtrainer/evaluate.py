"""Multiple-choice scoring: option probability is the summed log-probability
of its id characters conditioned on the serialized "head relation " prefix.

Scores are length-unnormalized (a raw conditional probability); the fixed
id widths make every option the same length anyway. Losses are in nats.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .data import CharTokenizer
from .sizes import TrainerError


def read_eval(path: str | Path) -> list[dict]:
    questions = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            missing = {"head_id", "relation_id", "options", "answer_index"} - set(rec)
            if missing:
                raise TrainerError(f"{path}:{lineno}: missing fields {sorted(missing)}")
            if len(rec["options"]) != 10:
                raise TrainerError(f"{path}:{lineno}: expected 10 options")
            questions.append(rec)
    if not questions:
        raise TrainerError(f"{path}: no questions")
    return questions


@torch.no_grad()
def score_options(model, tok: CharTokenizer, questions: list[dict],
                  device: str = "cpu", chunk: int = 512) -> np.ndarray:
    """(n_questions, 10) matrix of option log-probabilities."""
    rows: list[list[int]] = []
    option_starts: list[int] = []
    option_lens: list[int] = []
    for q in questions:
        prefix = f"{q['head_id']} {q['relation_id']} "
        prefix_ids = tok.encode_chars(prefix)
        for opt in q["options"]:
            opt_ids = tok.encode_chars(opt)
            rows.append([tok.bos_id, *prefix_ids, *opt_ids])
            option_starts.append(1 + len(prefix_ids))
            option_lens.append(len(opt_ids))

    model.eval()
    scores = np.empty(len(rows))
    width = max(len(r) for r in rows)
    for lo in range(0, len(rows), chunk):
        batch = rows[lo : lo + chunk]
        x = torch.full((len(batch), width), tok.pad_id, dtype=torch.long)
        for i, r in enumerate(batch):
            x[i, : len(r)] = torch.tensor(r, dtype=torch.long)
        x = x.to(device)
        logits = model(input_ids=x, attention_mask=(x != tok.pad_id).long()).logits
        logprobs = F.log_softmax(logits.double(), dim=-1)
        for i, r in enumerate(batch):
            start = option_starts[lo + i]
            total = 0.0
            for j in range(option_lens[lo + i]):
                pos = start + j
                total += float(logprobs[i, pos - 1, r[pos]])
            scores[lo + i] = total
    return scores.reshape(len(questions), 10)


def evaluate_mcq(model, tok: CharTokenizer, questions: list[dict],
                 device: str = "cpu", chunk: int = 512) -> tuple[float, float]:
    """(accuracy, mean negative log-probability of the correct tail)."""
    scores = score_options(model, tok, questions, device=device, chunk=chunk)
    answers = np.array([q["answer_index"] for q in questions])
    predicted = scores.argmax(axis=1)
    acc = float((predicted == answers).mean())
    loss = float(-scores[np.arange(len(questions)), answers].mean())
    return acc, loss
