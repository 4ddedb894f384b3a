"""kgtrainer command line: sweep sizes over one emitted corpus."""

from __future__ import annotations

import argparse
import logging
import sys

from .sizes import TrainerError, spec_for_label
from .sweep import sweep
from .train import TrainerConfig


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kgtrainer", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("sweep", help="train each size and write run records")
    s.add_argument("--corpus", required=True)
    s.add_argument("--vocab", required=True)
    s.add_argument("--eval", dest="eval_path", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--graph-id", required=True)
    s.add_argument("--sizes", nargs="+", default=["0.3M", "1.3M", "5.3M"],
                   help="size labels from the model table")
    s.add_argument("--steps", type=int, default=2000)
    s.add_argument("--batch-size", type=int, default=1024)
    s.add_argument("--lr", type=float, default=1e-4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--device", default="cpu")
    s.set_defaults(func=cmd_sweep)
    return p


def cmd_sweep(args) -> int:
    cfg = TrainerConfig(
        total_steps=args.steps,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
    )
    sizes = [spec_for_label(lbl) for lbl in args.sizes]
    records = sweep(
        sizes, cfg, args.corpus, args.vocab, args.eval_path,
        graph_id=args.graph_id, out_path=args.out, device=args.device,
    )
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
