"""Sweep model sizes over one corpus, emitting run-result records."""

from __future__ import annotations

import json
import logging
import statistics
from pathlib import Path

from .data import CharTokenizer, read_corpus, read_vocab
from .evaluate import evaluate_mcq, read_eval
from .model import build_model, count_params
from .sizes import ModelSizeSpec, TrainerError
from .train import TrainerConfig, train

logger = logging.getLogger(__name__)


def run_record(model_params: int, train_steps: int, train_loss: float,
               eval_loss: float, eval_acc: float, graph_id: str) -> dict:
    return {
        "model_params": model_params,
        "train_steps": train_steps,
        "train_loss": train_loss,
        "eval_loss": eval_loss,
        "eval_acc": eval_acc,
        "graph_id": graph_id,
    }


def sweep(sizes: list[ModelSizeSpec], cfg: TrainerConfig, corpus_path: str | Path,
          vocab_path: str | Path, eval_path: str | Path, graph_id: str,
          out_path: str | Path, device: str = "cpu") -> list[dict]:
    """Train each size from scratch and append one record per size.

    A failing size is logged and skipped; the sweep continues. An empty size
    list writes an empty file and succeeds.
    """
    out_path = Path(out_path)
    records: list[dict] = []
    if not sizes:
        out_path.write_text("")
        return records
    vocab = read_vocab(vocab_path)
    tok = CharTokenizer(vocab)
    lines = read_corpus(corpus_path)
    questions = read_eval(eval_path)
    with out_path.open("w", encoding="utf-8") as fh:
        for spec in sizes:
            try:
                model = build_model(spec, len(vocab), cfg.max_seq_len, seed=cfg.seed)
                curve = train(model, lines, tok, cfg, device=device)
                acc, loss = evaluate_mcq(model, tok, questions, device=device)
                tail = curve[-min(len(curve), 50):]
                rec = run_record(
                    model_params=count_params(model),
                    train_steps=cfg.total_steps,
                    train_loss=statistics.fmean(tail),
                    eval_loss=loss,
                    eval_acc=acc,
                    graph_id=graph_id,
                )
            except TrainerError as exc:
                logger.error("size %s failed: %s", spec.label, exc)
                continue
            records.append(rec)
            fh.write(json.dumps(rec) + "\n")
            fh.flush()
            logger.info(
                "size %s: train %.4f, eval %.4f, acc %.3f",
                spec.label, rec["train_loss"], rec["eval_loss"], rec["eval_acc"],
            )
    return records
