"""Minimal pretraining and multiple-choice evaluation for kgscale corpora."""

from .data import CharTokenizer, CorpusBatcher, read_corpus, read_vocab
from .evaluate import evaluate_mcq, read_eval, score_options
from .model import build_model, count_params
from .sizes import SIZE_TABLE, ModelSizeSpec, TrainerError, spec_for_label
from .sweep import run_record, sweep
from .train import TrainerConfig, train

__version__ = "0.1.0"
