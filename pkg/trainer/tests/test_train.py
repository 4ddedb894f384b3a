import statistics

import pytest
import torch

from kgtrainer.model import build_model, count_params
from kgtrainer.sizes import ModelSizeSpec, TrainerError, spec_for_label
from kgtrainer.train import TrainerConfig, train

from conftest import synthetic_corpus, triple_vocab
from kgtrainer.data import CharTokenizer

TINY = ModelSizeSpec("tiny", 64, 128, 2, 1)


def tiny_setup(n_lines=40):
    tok = CharTokenizer(triple_vocab())
    lines = synthetic_corpus(n_lines, seed=1)
    model = build_model(TINY, len(tok), seed=0)
    return model, lines, tok


def test_build_model_param_count_within_2pct():
    for label in ("0.3M", "1.3M"):
        spec = spec_for_label(label)
        model = build_model(spec, vocab_size=41)
        total = count_params(model)
        assert abs(total - spec.block_params) / spec.block_params <= 0.02


def test_build_model_dimension_wiring():
    model = build_model(spec_for_label("0.3M"), vocab_size=41)
    cfg = model.config
    assert cfg.hidden_size == 128
    assert cfg.intermediate_size == 256
    assert cfg.num_attention_heads == 2
    assert cfg.num_hidden_layers == 2


def test_unknown_label_raises():
    with pytest.raises(TrainerError):
        spec_for_label("7B")


def test_training_reduces_loss():
    model, lines, tok = tiny_setup()
    cfg = TrainerConfig(total_steps=40, batch_size=16, learning_rate=3e-3, seed=0)
    curve = train(model, lines, tok, cfg)
    assert len(curve) == 40
    assert statistics.fmean(curve[-10:]) < statistics.fmean(curve[:10])


def test_zero_lr_is_noop():
    model, lines, tok = tiny_setup()
    before = [p.detach().clone() for p in model.parameters()]
    cfg = TrainerConfig(total_steps=10, batch_size=8, learning_rate=0.0, seed=0)
    curve = train(model, lines, tok, cfg)
    for p, b in zip(model.parameters(), before):
        assert torch.equal(p.detach(), b)
    assert len(curve) == 10


def test_identical_seeds_identical_curves():
    cfg = TrainerConfig(total_steps=12, batch_size=8, learning_rate=1e-3, seed=5)
    tok = CharTokenizer(triple_vocab())
    lines = synthetic_corpus(30, seed=2)
    c1 = train(build_model(TINY, len(tok), seed=5), lines, tok, cfg)
    c2 = train(build_model(TINY, len(tok), seed=5), lines, tok, cfg)
    assert c1 == pytest.approx(c2, rel=1e-6)


def test_divergence_aborts_with_diagnostics():
    model, lines, tok = tiny_setup()
    cfg = TrainerConfig(
        total_steps=400,
        batch_size=8,
        learning_rate=50.0,
        warmup_ratio=0.0,
        divergence_patience=5,
        seed=0,
    )
    with pytest.raises(TrainerError, match="divergence"):
        train(model, lines, tok, cfg)


def test_cosine_schedule_shape():
    from kgtrainer.train import _lr_lambda

    cfg = TrainerConfig(total_steps=100, warmup_ratio=0.2)
    fn = _lr_lambda(cfg)
    assert fn(0) == pytest.approx(1 / 20)
    assert fn(19) == pytest.approx(1.0)
    assert fn(99) < 0.01
    mid = fn(60)
    assert 0.0 < mid < 1.0
    cfg_const = TrainerConfig(total_steps=100, warmup_ratio=0.2, schedule="constant")
    assert _lr_lambda(cfg_const)(60) == 1.0


def test_paper_defaults():
    cfg = TrainerConfig(total_steps=10_000)
    assert cfg.batch_size == 1024
    assert cfg.learning_rate == 1e-4
    assert cfg.schedule == "cosine"
    assert cfg.warmup_ratio == 0.2
    assert cfg.weight_decay == 0.0
    assert cfg.max_seq_len == 128
    desk = cfg.desk_scale(batch_size=256, total_steps=2000)
    assert desk.batch_size == 256 and desk.total_steps == 2000
