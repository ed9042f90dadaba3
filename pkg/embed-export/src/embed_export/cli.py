"""Command-line exporters producing the binary embedding files.

Exit codes: 0 success, 1 for IO, format, or alignment errors, 2 for usage
errors (argparse).
"""

from __future__ import annotations

import argparse
import logging
import sys

from embed_export.contextual import ExportJob, export_contextual
from embed_export.vectors import export_static


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="export word-aligned embedding files for probing")
    subparsers = parser.add_subparsers(dest="command", required=True)

    contextual = subparsers.add_parser(
        "export-contextual",
        help="run a pretrained encoder over a treebank, one vector per token")
    contextual.add_argument("--model", required=True,
                            help="pretrained model name or local path")
    contextual.add_argument("--treebank", required=True, help="CoNLL-U file")
    contextual.add_argument("--out", required=True, help="output .ppctx path")
    contextual.add_argument("--layer", type=int, default=-1,
                            help="hidden-state index (-1 = final layer)")
    contextual.add_argument("--batch-size", type=int, default=16)

    static = subparsers.add_parser(
        "export-static",
        help="subset a .vec word-vector file to a treebank's vocabulary")
    static.add_argument("--vectors", required=True, help=".vec text file")
    static.add_argument("--treebank", required=True, help="CoNLL-U file")
    static.add_argument("--out", required=True, help="output .ppemb path")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export-contextual":
            job = ExportJob(model=args.model, treebank=args.treebank,
                            out=args.out, layer=args.layer,
                            batch_size=args.batch_size)
            matrices = export_contextual(job)
            print(f"wrote {len(matrices)} sentences "
                  f"(dim {matrices[0].shape[1]}) to {args.out}")
        else:
            words, matrix = export_static(args.vectors, args.treebank,
                                          args.out)
            print(f"wrote {len(words)} words "
                  f"(dim {matrix.shape[1]}) to {args.out}")
    except (OSError, ValueError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
