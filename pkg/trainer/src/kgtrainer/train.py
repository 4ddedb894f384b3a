"""Next-token pretraining loop with cosine schedule and divergence guard."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import torch
import torch.nn.functional as F

from .data import CharTokenizer, CorpusBatcher
from .sizes import TrainerError


@dataclass(frozen=True)
class TrainerConfig:
    total_steps: int
    batch_size: int = 1024
    learning_rate: float = 1e-4
    schedule: str = "cosine"
    warmup_ratio: float = 0.2
    weight_decay: float = 0.0
    max_seq_len: int = 128
    seed: int = 0
    divergence_patience: int = 500
    log_every: int = 50

    def desk_scale(self, **overrides) -> "TrainerConfig":
        return replace(self, **overrides)


def _lr_lambda(cfg: TrainerConfig):
    warmup = max(1, int(cfg.warmup_ratio * cfg.total_steps))

    def fn(step: int) -> float:
        if step < warmup:
            return (step + 1) / warmup
        if cfg.schedule != "cosine":
            return 1.0
        progress = (step - warmup) / max(1, cfg.total_steps - warmup)
        return 0.5 * (1.0 + math.cos(math.pi * min(progress, 1.0)))

    return fn


def train(model, lines: list[str], tok: CharTokenizer, cfg: TrainerConfig,
          device: str = "cpu") -> list[float]:
    """Minimize next-token cross-entropy over the shuffled, repeated corpus.

    Returns the per-step loss curve. Aborts when the loss exceeds its initial
    value for ``divergence_patience`` consecutive steps.
    """
    torch.manual_seed(cfg.seed)
    model.to(device)
    model.train()
    opt = torch.optim.AdamW(
        model.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
    )
    sched = torch.optim.lr_scheduler.LambdaLR(opt, _lr_lambda(cfg))
    batcher = CorpusBatcher(lines, tok, cfg.batch_size, cfg.max_seq_len, cfg.seed)

    curve: list[float] = []
    initial = None
    above_initial = 0
    for step in range(cfg.total_steps):
        x, y = batcher.next_batch()
        x, y = x.to(device), y.to(device)
        logits = model(input_ids=x, attention_mask=(x != tok.pad_id).long()).logits
        loss = F.cross_entropy(
            logits.reshape(-1, logits.size(-1)), y.reshape(-1), ignore_index=-100
        )
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        sched.step()
        val = float(loss.detach())
        curve.append(val)
        if initial is None:
            initial = val
        diverged = math.isnan(val) or val > initial
        above_initial = above_initial + 1 if diverged else 0
        if above_initial >= cfg.divergence_patience:
            raise TrainerError(
                f"divergence: loss {val:.4f} above initial {initial:.4f} for "
                f"{cfg.divergence_patience} consecutive steps (step {step})"
            )
    return curve
