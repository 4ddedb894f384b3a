"""Model size table: Llama dimensions per size label.

Labels name the transformer-block parameter count (attention + MLP + norms,
embeddings excluded), which is what the dimensions pin down independent of
vocabulary size.
"""

from __future__ import annotations

from dataclasses import dataclass


class TrainerError(Exception):
    pass


@dataclass(frozen=True)
class ModelSizeSpec:
    label: str
    hidden_size: int
    ffn_size: int
    n_heads: int
    n_layers: int

    @property
    def block_params(self) -> int:
        """Attention (4h^2) + gated MLP (3*h*ffn) + two RMSNorm weights per layer."""
        h, f = self.hidden_size, self.ffn_size
        return self.n_layers * (4 * h * h + 3 * h * f + 2 * h)


SIZE_TABLE: tuple[ModelSizeSpec, ...] = (
    ModelSizeSpec("0.3M", 128, 256, 2, 2),
    ModelSizeSpec("0.7M", 128, 256, 2, 4),
    ModelSizeSpec("1.3M", 256, 512, 4, 2),
    ModelSizeSpec("2.6M", 256, 512, 4, 4),
    ModelSizeSpec("5.3M", 256, 512, 4, 8),
    ModelSizeSpec("10.5M", 512, 1024, 8, 4),
    ModelSizeSpec("21.0M", 512, 1024, 8, 8),
    ModelSizeSpec("42.0M", 512, 1024, 8, 16),
    ModelSizeSpec("83.9M", 1024, 2048, 16, 8),
    ModelSizeSpec("167.8M", 1024, 2048, 16, 16),
    ModelSizeSpec("335.6M", 1024, 2048, 16, 32),
    ModelSizeSpec("671.2M", 2048, 4096, 32, 16),
    ModelSizeSpec("1342.4M", 2048, 4096, 32, 32),
)

_BY_LABEL = {s.label: s for s in SIZE_TABLE}


def spec_for_label(label: str) -> ModelSizeSpec:
    try:
        return _BY_LABEL[label]
    except KeyError:
        raise TrainerError(
            f"unknown model size label {label!r}; known: {', '.join(_BY_LABEL)}"
        ) from None
