"""Secondary acceptance criteria.

Criterion 9 (metric fixture + chance band) always runs. Criterion 10 is the
full desk run (0.3M model, 2k steps on the smallest row-(f) corpus); it takes
tens of CPU-minutes, so it only runs with KGTRAINER_E2E=1. A short smoke
variant of the same path runs unconditionally. Both variants drive the
generator through the kgscale CLI, which must be installed alongside.
"""

import json
import math
import os
import shutil
import statistics
import subprocess
from pathlib import Path

import numpy as np
import pytest

from kgtrainer.data import CharTokenizer, read_corpus, read_vocab
from kgtrainer.evaluate import evaluate_mcq, read_eval
from kgtrainer.model import build_model, count_params
from kgtrainer.sizes import ModelSizeSpec, spec_for_label
from kgtrainer.train import TrainerConfig, train

from conftest import synthetic_eval_file, triple_vocab
from test_metrics import fixture_model_and_tok, fixture_questions

kgscale_available = shutil.which("kgscale") is not None
needs_kgscale = pytest.mark.skipif(
    not kgscale_available, reason="kgscale CLI not installed (pip install -e ..)"
)
full_e2e = pytest.mark.skipif(
    os.environ.get("KGTRAINER_E2E") != "1",
    reason="full 2k-step desk run; set KGTRAINER_E2E=1 (tens of CPU-minutes)",
)


def test_criterion_9_metric_fixture_and_chance_band(tmp_path):
    model, tok = fixture_model_and_tok()
    acc, loss = evaluate_mcq(model, tok, fixture_questions())
    assert abs(acc - 2 / 3) < 1e-10
    assert abs(loss - 15 * math.log(2)) < 1e-10

    fresh = build_model(spec_for_label("0.3M"), len(triple_vocab()), seed=123)
    questions = read_eval(synthetic_eval_file(tmp_path / "eval.jsonl", 1000, seed=9))
    acc_fresh, _ = evaluate_mcq(fresh, CharTokenizer(triple_vocab()), questions)
    assert 0.05 <= acc_fresh <= 0.16  # 99% binomial band around chance 0.1
    print(f"\nACCEPTANCE 9 PASS: fixture exact to 1e-10; fresh-init acc {acc_fresh:.3f}")


def _generate_emitted(tmp_path: Path, config: dict) -> Path:
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    gdir = tmp_path / "graph"
    edir = tmp_path / "emitted"
    for argv in (
        ["kgscale", "generate", "--config", str(cfg_path), "--out", str(gdir)],
        ["kgscale", "emit", "--split", str(gdir), "--out", str(edir)],
    ):
        proc = subprocess.run(argv, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    return edir


def _run_training(edir: Path, spec, cfg: TrainerConfig):
    vocab = read_vocab(edir / "vocab.txt")
    tok = CharTokenizer(vocab)
    lines = read_corpus(edir / "corpus.txt")
    questions = read_eval(edir / "eval.jsonl")
    model = build_model(spec, len(vocab), seed=cfg.seed)
    curve = train(model, lines, tok, cfg)
    acc, loss = evaluate_mcq(model, tok, questions)
    return model, curve, acc, loss


def _assert_fit_accepts_schema(tmp_path: Path, records: list[dict]):
    runs = tmp_path / "runs.jsonl"
    runs.write_text("".join(json.dumps(r) + "\n" for r in records))
    ent = tmp_path / "ent.json"
    ent.write_text(json.dumps({"graph_id": records[0]["graph_id"], "entropy_bits": 1000.0}))
    proc = subprocess.run(
        ["kgscale", "fit", "--results", str(runs), "--entropy", str(ent)],
        capture_output=True, text=True,
    )
    # one graph cannot support a 3-point fit, but the records must parse: any
    # failure has to be a sweep-shape precondition, never a schema error
    assert "missing field" not in proc.stderr
    if proc.returncode != 0:
        assert "interior" in proc.stderr or "distinct model sizes" in proc.stderr, proc.stderr


@needs_kgscale
def test_criterion_10_smoke_pipeline(tmp_path):
    config = {
        "n_triples": 400, "n_entities": 120, "n_relations": 10,
        "n_rules": 5, "gamma": 0.5, "seed": 31, "heldout_size": 40,
    }
    edir = _generate_emitted(tmp_path, config)
    tiny = ModelSizeSpec("tiny", 64, 128, 2, 2)
    cfg = TrainerConfig(total_steps=150, batch_size=32, learning_rate=3e-3, seed=0)
    model, curve, acc, loss = _run_training(edir, tiny, cfg)
    assert statistics.fmean(curve[-25:]) < statistics.fmean(curve[:25])
    assert 0.0 <= acc <= 1.0 and loss > 0
    records = [
        {
            "model_params": count_params(model), "train_steps": cfg.total_steps,
            "train_loss": statistics.fmean(curve[-25:]), "eval_loss": loss,
            "eval_acc": acc, "graph_id": "smoke",
        },
        {
            "model_params": count_params(model) * 2, "train_steps": cfg.total_steps,
            "train_loss": 1.0, "eval_loss": loss + 0.1, "eval_acc": acc,
            "graph_id": "smoke",
        },
    ]
    _assert_fit_accepts_schema(tmp_path, records)
    print(f"\nSECONDARY SMOKE PASS: loss {curve[0]:.2f}->{curve[-1]:.2f}, acc {acc:.3f}")


@needs_kgscale
@full_e2e
def test_criterion_10_desk_run_row_f(tmp_path):
    config = {
        "n_triples": 10_000, "n_entities": 1_000, "n_relations": 10,
        "n_rules": 5, "gamma": 0.5, "seed": 20250810, "heldout_size": 1_000,
    }
    edir = _generate_emitted(tmp_path, config)
    spec = spec_for_label("0.3M")
    # desk-scale overrides of the reference defaults (batch 1024, lr 1e-4)
    cfg = TrainerConfig(total_steps=2_000, batch_size=256, learning_rate=1e-3, seed=0)
    model, curve, acc, loss = _run_training(edir, spec, cfg)

    # smoothed train loss decreases monotonically quarter over quarter
    quarters = [statistics.fmean(chunk) for chunk in np.array_split(np.array(curve), 4)]
    assert all(a > b for a, b in zip(quarters, quarters[1:])), quarters
    assert acc >= 0.15, f"eval accuracy {acc:.3f} below 0.15"

    records = [
        {
            "model_params": count_params(model), "train_steps": cfg.total_steps,
            "train_loss": statistics.fmean(curve[-50:]), "eval_loss": loss,
            "eval_acc": acc, "graph_id": "row_f_smallest",
        },
        # synthetic companion size so locate_optimal can run over the sweep
        {
            "model_params": count_params(model) * 4, "train_steps": cfg.total_steps,
            "train_loss": 1.0, "eval_loss": loss + 0.2, "eval_acc": acc,
            "graph_id": "row_f_smallest",
        },
    ]
    _assert_fit_accepts_schema(tmp_path, records)
    print(
        f"\nACCEPTANCE 10 PASS: 0.3M/2k steps acc {acc:.3f} (>=0.15), "
        f"loss quarters {['%.3f' % q for q in quarters]}"
    )
