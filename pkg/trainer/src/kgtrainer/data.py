"""Vocab file parsing, character tokenization, and corpus batching."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .sizes import TrainerError

PAD_SYMBOL = "<pad>"
BOS_SYMBOL = "<bos>"
EOS_SYMBOL = "<eos>"
_UNESCAPES = {"\\s": " ", "\\n": "\n", "\\t": "\t", "\\\\": "\\"}


def read_vocab(path: str | Path) -> list[str]:
    """One symbol per line, index = line number; whitespace arrives escaped."""
    symbols = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            symbols.append(_UNESCAPES.get(line, line))
    if not symbols:
        raise TrainerError(f"{path}: empty vocab")
    return symbols


class CharTokenizer:
    """Character-level tokenizer over an explicit symbol list."""

    def __init__(self, symbols: list[str]):
        self.symbols = symbols
        self.index = {s: i for i, s in enumerate(symbols)}
        for special in (PAD_SYMBOL, BOS_SYMBOL, EOS_SYMBOL):
            if special not in self.index:
                raise TrainerError(f"vocab missing {special}")
        self.pad_id = self.index[PAD_SYMBOL]
        self.bos_id = self.index[BOS_SYMBOL]
        self.eos_id = self.index[EOS_SYMBOL]

    def __len__(self) -> int:
        return len(self.symbols)

    def encode_chars(self, text: str) -> list[int]:
        try:
            return [self.index[c] for c in text]
        except KeyError as exc:
            raise TrainerError(f"character {exc.args[0]!r} outside vocab") from None

    def encode_example(self, line: str) -> list[int]:
        return [self.bos_id, *self.encode_chars(line), self.eos_id]


def read_corpus(path: str | Path) -> list[str]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln]
    if not lines:
        raise TrainerError(f"{path}: empty corpus")
    return lines


class CorpusBatcher:
    """Cycles the corpus for as many epochs as training needs, reshuffling
    with a fresh seed each epoch; yields padded next-token batches."""

    def __init__(self, lines: list[str], tok: CharTokenizer, batch_size: int,
                 max_seq_len: int, seed: int):
        self.encoded = [tok.encode_example(ln)[:max_seq_len] for ln in lines]
        self.tok = tok
        self.batch_size = batch_size
        self.seed = seed
        self.epoch = 0
        self._cursor = 0
        self._order = self._epoch_order()

    def _epoch_order(self) -> np.ndarray:
        rng = np.random.default_rng([self.seed, self.epoch])
        return rng.permutation(len(self.encoded))

    def next_batch(self) -> tuple[torch.Tensor, torch.Tensor]:
        idx = []
        while len(idx) < self.batch_size:
            if self._cursor >= len(self._order):
                self.epoch += 1
                self._order = self._epoch_order()
                self._cursor = 0
            idx.append(int(self._order[self._cursor]))
            self._cursor += 1
        seqs = [self.encoded[i] for i in idx]
        width = max(len(s) for s in seqs)
        x = torch.full((len(seqs), width - 1), self.tok.pad_id, dtype=torch.long)
        y = torch.full((len(seqs), width - 1), -100, dtype=torch.long)
        for i, s in enumerate(seqs):
            t = torch.tensor(s, dtype=torch.long)
            x[i, : len(s) - 1] = t[:-1]
            y[i, : len(s) - 1] = t[1:]
        return x, y
