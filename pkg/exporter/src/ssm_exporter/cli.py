"""Command-line entry points.

  export  convert a checkpoint into an engine weight bundle
  dump    record the torch model's block outputs for a feature file

Exit status: 0 on success, 2 for usage, file, or format problems.
"""

from __future__ import annotations

import argparse
import sys

from .dump import dump_activations
from .errors import ExportError
from .export import export_bundle


def _cmd_export(args) -> int:
    export_bundle(args.ckpt, args.manifest, args.out)
    return 0


def _cmd_dump(args) -> int:
    dump_activations(args.ckpt, args.features, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssm-export",
        description="checkpoint conversion and golden-activation dumps",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("export", help="write an engine weight bundle")
    p.add_argument("--ckpt", required=True, help="trained checkpoint (.pt)")
    p.add_argument("--manifest", required=True, help="name-mapping JSON")
    p.add_argument("--out", required=True, help="bundle output path")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("dump", help="write block outputs plus predicted labels")
    p.add_argument("--ckpt", required=True, help="trained checkpoint (.pt)")
    p.add_argument("--features", required=True, help="input feature file")
    p.add_argument("--out", required=True, help="dump output path")
    p.set_defaults(func=_cmd_dump)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ExportError, OSError, ValueError) as exc:
        print(f"ssm-export: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
