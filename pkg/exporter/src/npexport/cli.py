"""Command line interface: npexport {vocab|embeddings|logits|contextual}.

Every subcommand takes --model (checkpoint directory or hub identifier)
and --out (destination directory, created if absent). The logits kind
needs --dataset and --template; contextual needs --layer. Exit codes:
0 success, 1 usage, 2 data, 3 model.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import ExportError, UsageError
from .export import export_contextual, export_embeddings, export_logits, export_vocab
from .modeling import load_bundle


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npexport",
        description="Export portable model artifacts for the zero-shot classification engine.",
    )
    sub = parser.add_subparsers(dest="command", metavar="{vocab,embeddings,logits,contextual}")
    for name, help_text in (
        ("vocab", "dump the tokenizer's id->token table"),
        ("embeddings", "dump the input token-embedding matrix"),
        ("logits", "score a dataset and dump mask-position logits"),
        ("contextual", "dump per-token contextual states at one layer"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--model", help="checkpoint directory or model identifier")
        cmd.add_argument("--out", help="output directory")
        cmd.add_argument(
            "--device",
            default=os.environ.get("NPEXPORT_DEVICE"),
            help="torch device for inference (default: CPU)",
        )
        if name == "logits":
            cmd.add_argument("--dataset", help="JSON Lines dataset to score")
            cmd.add_argument("--template", help="prompt template with one {mask}")
            cmd.add_argument("--batch-size", type=int, default=16)
        if name == "contextual":
            cmd.add_argument("--layer", type=int, help="encoder layer to read (0 = embeddings)")
            cmd.add_argument("--batch-size", type=int, default=64)
    return parser


def _require(args, name):
    value = getattr(args, name.replace("-", "_"), None)
    if value is None:
        raise UsageError(f"--{name} is required for this command")
    return value


def run(args) -> int:
    if not args.command:
        raise UsageError("a command is required: vocab, embeddings, logits or contextual")
    model_id = _require(args, "model")
    out_dir = _require(args, "out")
    os.makedirs(out_dir, exist_ok=True)
    bundle = load_bundle(model_id, device=args.device)
    if args.command == "vocab":
        export_vocab(bundle, out_dir)
    elif args.command == "embeddings":
        export_embeddings(bundle, out_dir)
    elif args.command == "logits":
        export_logits(
            bundle,
            _require(args, "dataset"),
            _require(args, "template"),
            out_dir,
            batch_size=args.batch_size,
        )
    elif args.command == "contextual":
        export_contextual(bundle, _require(args, "layer"), out_dir, batch_size=args.batch_size)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("NPEXPORT_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ExportError as exc:
        print(f"npexport: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
