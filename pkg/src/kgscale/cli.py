"""Command-line pipeline: generate / emit / entropy / fit / predict / stats / import.

Every command is deterministic given its config (seed included); generate
writes a manifest with the config hash so any artifact can be reproduced.
Record files are JSON lines; configs are flat JSON key-value files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .core import KgError, KnowledgeGraph, Triple, export_tsv, graph_stats, import_tsv
from .deduction import label_triples
from .entropy import EntropyMode, graph_search_entropy
from .graphgen import GraphConfig, SplitGraph, grow_graph, subsample
from .rules import check_acyclic, derive_node_types, generate_rules
from .scaling import (
    RunResult,
    ScalingFit,
    bits_per_parameter,
    fit_scaling_law,
    locate_optimal,
    predict_optimal_size,
    read_results,
)

_CONFIG_KEYS = {
    "n_triples",
    "n_entities",
    "n_relations",
    "n_rules",
    "gamma",
    "length_min",
    "length_max",
    "max_relations_per_node",
    "closure_interval",
    "max_new_edges",
    "seed",
    "gamma_is_fraction",
    "heldout_size",
    "corpus_mode",
}


@contextmanager
def _stage(name: str):
    try:
        yield
    except KgError as exc:
        raise KgError(f"[{name}] {exc}") from exc


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def load_config(path: str | Path) -> tuple[GraphConfig, dict]:
    raw = json.loads(Path(path).read_text())
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise KgError(f"unknown config keys: {sorted(unknown)}")
    if "seed" not in raw:
        raise KgError("config must set an explicit seed")
    extras = {
        "heldout_size": int(raw.pop("heldout_size", 1000)),
        "corpus_mode": raw.pop("corpus_mode", "triple-id"),
    }
    cfg = GraphConfig(**raw)
    cfg.validate()
    return cfg, extras


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def cmd_generate(args) -> int:
    cfg, extras = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with _stage("rules"):
        rules = generate_rules(cfg.rule_config())
        report = check_acyclic(rules)
        if not report.ok:
            raise KgError(f"generated rule set has cycles: {report.cycles}")
        rules.save(out / "rules.json")
    with _stage("node-types"):
        types = derive_node_types(rules, cfg.max_relations_per_node, seed=cfg.seed)
    with _stage("grow"):
        g = grow_graph(cfg, rules, types)
    with _stage("label"):
        labeled = label_triples(g, rules)
        labeled.node_types = g.node_types
    with _stage("subsample"):
        rng = np.random.default_rng([cfg.seed, 5])
        split = subsample(
            labeled,
            rules,
            cfg.n_triples,
            cfg.gamma,
            extras["heldout_size"],
            rng,
            cfg.gamma_is_fraction,
        )
    with _stage("write"):
        export_tsv(labeled, out / "full.tsv")
        export_tsv(split.train, out / "train.tsv")
        heldout_graph = KnowledgeGraph()
        heldout_graph.declare_entities(labeled.n_entities)
        heldout_graph.declare_relations(labeled.n_relations)
        for t in split.heldout:
            heldout_graph.add(*t)
        export_tsv(heldout_graph, out / "heldout.tsv")
        cfg_dict = json.loads(Path(args.config).read_text())
        counts = split.train.label_counts()
        manifest = {
            "config": cfg_dict,
            "config_sha256": hashlib.sha256(
                _canonical_json(cfg_dict).encode()
            ).hexdigest(),
            "seed": cfg.seed,
            "achieved_gamma": split.achieved_gamma,
            "counts": {
                "n_entities": labeled.n_entities,
                "n_relations": labeled.n_relations,
                "full_triples": len(labeled),
                "train_triples": len(split.train),
                "train_atomic": counts["atomic"],
                "train_deducible": counts["deducible"],
                "heldout_triples": len(split.heldout),
            },
        }
        _write_json(out / "manifest.json", manifest)
    print(
        f"generated {len(split.train)} train / {len(split.heldout)} held-out triples "
        f"(gamma {split.achieved_gamma:.3f}) in {out}"
    )
    return 0


def _load_split(split_dir: Path) -> tuple[KnowledgeGraph, SplitGraph, dict]:
    """Rebuild the full graph and split on one consistent id space."""
    manifest = json.loads((split_dir / "manifest.json").read_text())
    full = import_tsv(split_dir / "full.tsv")
    ent_id = {name: i for i, name in enumerate(full.entity_names or [])}
    rel_id = {name: i for i, name in enumerate(full.relation_names or [])}

    def read_triples(path: Path) -> list[tuple[int, int, int]]:
        out = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            h, r, t = line.split("\t")
            out.append((ent_id[h], rel_id[r], ent_id[t]))
        return out

    train = KnowledgeGraph()
    train.declare_entities(full.n_entities)
    train.declare_relations(full.n_relations)
    for h, r, t in read_triples(split_dir / "train.tsv"):
        train.add(h, r, t)
    heldout = [Triple(h, r, t) for h, r, t in read_triples(split_dir / "heldout.tsv")]
    split = SplitGraph(
        train=train, heldout=heldout, achieved_gamma=manifest["achieved_gamma"]
    )
    return full, split, manifest


def cmd_emit(args) -> int:
    split_dir = Path(args.split)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with _stage("load-split"):
        full, split, manifest = _load_split(split_dir)
    seed = int(manifest["seed"])
    mode = args.mode or manifest["config"].get("corpus_mode", "triple-id")
    with _stage("ids"):
        ids = corpus_mod.assign_ids(full, seed)
        ids.save(out / "ids.json")
    templates = None
    if mode == "template-sentence":
        if not args.templates:
            raise KgError("[templates] template-sentence mode needs --templates FILE")
        raw = json.loads(Path(args.templates).read_text())
        rel_id = {name: i for i, name in enumerate(full.relation_names or [])}
        templates = {rel_id[k]: v for k, v in raw.items() if k in rel_id}
    with _stage("corpus"):
        n_lines = corpus_mod.emit_training_corpus(
            split, ids, out / "corpus.txt", mode=mode, templates=templates, seed=seed
        )
    with _stage("eval"):
        rng = np.random.default_rng([seed, 4])
        questions, skipped = corpus_mod.build_eval_set(
            split, full, len(split.heldout), rng
        )
        bad = corpus_mod.validate_single_answer(questions, full)
        if bad:
            raise KgError(f"single-answer validation failed for question(s) {bad[:5]}")
        corpus_mod.write_eval_set(questions, ids, out / "eval.jsonl")
    with _stage("vocab"):
        vocab = corpus_mod.build_vocab(out / "corpus.txt")
        corpus_mod.write_vocab(vocab, out / "vocab.txt")
    print(
        f"emitted {n_lines}-line corpus, {len(questions)} questions "
        f"({len(skipped)} skipped), vocab size {len(vocab)} in {out}"
    )
    return 0


def cmd_entropy(args) -> int:
    with _stage("load-graph"):
        g = import_tsv(args.graph)
    with _stage("entropy"):
        mode = EntropyMode(directed=args.directed, natural_log=args.natural_log)
        report = graph_search_entropy(g, mode)
    rec = report.to_record()
    rec["graph_id"] = args.graph_id or Path(args.graph).stem
    if args.out:
        _write_json(Path(args.out), rec)
    print(_canonical_json(rec))
    return 0


def _entropy_by_graph(paths: list[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for p in paths:
        rec = json.loads(Path(p).read_text())
        if "entropy_bits" not in rec:
            raise KgError(f"{p}: missing field 'entropy_bits' (natural-log report?)")
        out[rec.get("graph_id", Path(p).stem)] = float(rec["entropy_bits"])
    return out


def cmd_fit(args) -> int:
    with _stage("load-results"):
        results: list[RunResult] = []
        for p in args.results:
            results.extend(read_results(p))
    with _stage("load-entropy"):
        entropies = _entropy_by_graph(args.entropy)
    with _stage("fit"):
        points = []
        rows = []
        by_graph: dict[str, list[RunResult]] = {}
        for r in results:
            by_graph.setdefault(r.graph_id, []).append(r)
        for gid in sorted(by_graph):
            if gid not in entropies:
                raise KgError(f"no entropy report for graph_id {gid!r}")
            sweep = by_graph[gid]
            final_steps = max(r.train_steps for r in sweep)
            sweep = [r for r in sweep if r.train_steps == final_steps]
            point = locate_optimal(sweep, entropies[gid])
            points.append(point)
            rows.append((gid, entropies[gid], point.optimal_params, point.boundary_flag))
        fit = fit_scaling_law(points)
    rec = fit.to_record()
    rec["min_point_params"] = fit.min_point_params
    if args.out:
        _write_json(Path(args.out), rec)
    print(f"{'graph':24} {'entropy_bits':>14} {'optimal_params':>14} flag")
    for gid, ent, params, flag in rows:
        print(f"{gid:24} {ent:14.2f} {params:14d} {flag}")
    print(
        f"slope {fit.slope:.3f} params/bit, intercept {fit.intercept:.1f}, "
        f"R^2 {fit.r_squared:.3f}, bits/param {bits_per_parameter(fit):.5f}"
    )
    return 0


def _load_fit(path: str | Path) -> ScalingFit:
    rec = json.loads(Path(path).read_text())
    try:
        return ScalingFit(
            slope=float(rec["slope_params_per_bit"]),
            intercept=float(rec["intercept_params"]),
            r_squared=float(rec["r2"]),
            slope_ci95=(float(rec["slope_ci95_low"]), float(rec["slope_ci95_high"])),
            n_points=int(rec["n_points"]),
            min_point_params=int(rec.get("min_point_params", 1)),
        )
    except KeyError as exc:
        raise KgError(f"fit record missing field {exc.args[0]!r}") from exc


def cmd_predict(args) -> int:
    with _stage("load"):
        fit = _load_fit(args.fit)
        entropies = _entropy_by_graph([args.entropy])
    with _stage("predict"):
        (gid, bits), = entropies.items()
        pred = predict_optimal_size(fit, bits)
    rec = {"graph_id": gid, "entropy_bits": bits, "predicted_optimal_params": pred}
    if args.out:
        _write_json(Path(args.out), rec)
    print(_canonical_json(rec))
    return 0


def cmd_stats(args) -> int:
    with _stage("load-graph"):
        g = import_tsv(args.graph)
    with _stage("stats"):
        st = graph_stats(g)
    rec = st.to_record()
    rec["n_entities"] = g.n_entities
    rec["n_relations"] = g.n_relations
    rec["n_triples"] = len(g)
    if args.out:
        _write_json(Path(args.out), rec)
    else:
        print(_canonical_json(rec))
    return 0


def cmd_import(args) -> int:
    with _stage("import"):
        g = import_tsv(args.inputs)
    print(
        f"entities {g.n_entities}  relations {g.n_relations}  triples {len(g)}  "
        f"duplicates_dropped {g.duplicates_dropped}"
    )
    if args.out:
        with _stage("write"):
            export_tsv(g, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kgscale", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="rules + graph + split from a config file")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("emit", help="corpus + eval + vocab from a split directory")
    e.add_argument("--split", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--mode", choices=["triple-id", "template-sentence"])
    e.add_argument("--templates", help="JSON {relation name: template with X/Y}")
    e.set_defaults(func=cmd_emit)

    n = sub.add_parser("entropy", help="graph search entropy of a TSV graph")
    n.add_argument("--graph", required=True)
    n.add_argument("--out")
    n.add_argument("--graph-id")
    n.add_argument("--directed", action="store_true")
    n.add_argument("--natural-log", action="store_true")
    n.set_defaults(func=cmd_entropy)

    f = sub.add_parser("fit", help="fit optimal size vs entropy from run results")
    f.add_argument("--results", nargs="+", required=True)
    f.add_argument("--entropy", nargs="+", required=True)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("predict", help="predict optimal size from a fit and a report")
    r.add_argument("--fit", required=True)
    r.add_argument("--entropy", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_predict)

    s = sub.add_parser("stats", help="degree/relation statistics of a TSV graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    i = sub.add_parser("import", help="validate + merge TSV graphs, report counts")
    i.add_argument("inputs", nargs="+")
    i.add_argument("--out")
    i.set_defaults(func=cmd_import)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: [io] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
