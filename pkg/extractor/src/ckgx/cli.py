"""Command line for the extractor: ``ckgx --entities in.tsv --out out.ckgf``."""

import argparse
import sys

from .errors import ExtractorError
from .extract import MODES, extract


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ckgx",
                description="Extract fixed entity features into a CKGF file.")
    p.add_argument("--entities", required=True, help="entity table TSV (id, text)")
    p.add_argument("--out", required=True, help="output CKGF path")
    p.add_argument("--mode", choices=list(MODES), default="both",
                   help="feature source (default: %(default)s)")
    p.add_argument("--contextual-model", default="bert-base-uncased",
                   help="pretrained transformer id or local path "
                        "(default: %(default)s)")
    p.add_argument("--vectors", help="word2vec-text .vec file for the static part")
    p.add_argument("--batch-size", type=int, default=32,
                   help="texts per forward pass (default: %(default)s)")
    p.add_argument("--no-lowercase", action="store_true",
                   help="keep case when looking up static word vectors")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        info = extract(args.entities, args.out, mode=args.mode,
                       contextual_model=args.contextual_model,
                       vectors_path=args.vectors, batch_size=args.batch_size,
                       lowercase=not args.no_lowercase)
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    for key, value in info.items():
        print(f"{key}\t{value}")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
