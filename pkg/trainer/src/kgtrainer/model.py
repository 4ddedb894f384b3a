"""Decoder-only transformer construction from a size spec."""

from __future__ import annotations

import torch
from transformers import LlamaConfig, LlamaForCausalLM

from .sizes import ModelSizeSpec, TrainerError


def build_model(spec: ModelSizeSpec, vocab_size: int, max_seq_len: int = 128,
                seed: int = 0) -> LlamaForCausalLM:
    """Llama-architecture causal LM with the spec's dimensions.

    Word embeddings are tied so the character-sized vocabulary stays a
    rounding error next to the block parameters; the count is validated to
    within 2% of the dimensions-derived block size.
    """
    torch.manual_seed(seed)
    cfg = LlamaConfig(
        vocab_size=vocab_size,
        hidden_size=spec.hidden_size,
        intermediate_size=spec.ffn_size,
        num_attention_heads=spec.n_heads,
        num_key_value_heads=spec.n_heads,
        num_hidden_layers=spec.n_layers,
        max_position_embeddings=max_seq_len,
        tie_word_embeddings=True,
    )
    model = LlamaForCausalLM(cfg)
    total = count_params(model)
    # blocks + tied embedding + final norm; any mismatch means miswired dims
    expected = spec.block_params + vocab_size * spec.hidden_size + spec.hidden_size
    if total != expected:
        raise TrainerError(
            f"{spec.label}: parameter count {total} != expected {expected} "
            f"(block {spec.block_params} + embeddings)"
        )
    return model


def count_params(model: torch.nn.Module) -> int:
    seen = set()
    total = 0
    for p in model.parameters():  # tied tensors counted once
        if id(p) not in seen:
            seen.add(id(p))
            total += p.numel()
    return total
