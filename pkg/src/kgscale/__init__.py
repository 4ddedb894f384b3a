"""Synthetic knowledge-graph generation, graph search entropy, and scaling fits."""

from .core import (
    ATOMIC,
    DEDUCIBLE,
    UNLABELED,
    FormatError,
    GraphStats,
    KgError,
    KnowledgeGraph,
    Triple,
    export_tsv,
    graph_stats,
    import_tsv,
)
from .rules import (
    NodeType,
    NodeTypeCatalog,
    Rule,
    RuleConfig,
    RuleSet,
    check_acyclic,
    derive_node_types,
    generate_rules,
)
from .deduction import Witness, apply_rule_once, closure, is_deducible, label_triples
from .graphgen import (
    GraphConfig,
    SplitGraph,
    build_seed_graph,
    check_type_consistency,
    grow_graph,
    preferential_target,
    subsample,
)
from .corpus import (
    EvalQuestion,
    IdMap,
    assign_ids,
    build_eval_set,
    build_vocab,
    emit_training_corpus,
    validate_single_answer,
)
from .entropy import (
    EntropyMode,
    EntropyReport,
    MerwState,
    adjacency,
    compute_merw,
    dominant_eig,
    graph_search_entropy,
    merw_transition,
    relation_entropy_rate,
    relation_transition,
    stationary,
)
from .scaling import (
    OptimalPoint,
    RunResult,
    ScalingFit,
    bits_per_parameter,
    fit_scaling_law,
    locate_optimal,
    predict_optimal_size,
)

__version__ = "0.1.0"
