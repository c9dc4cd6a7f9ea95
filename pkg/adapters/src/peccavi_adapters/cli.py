"""Command line front end: ``peccavi-adapters paraphrase|saliency``.

Each invocation is a standalone process that reads one image and writes
interchange files; there is no daemon state.  Backend/model selection is
environment-driven (see common.py for the variable names).
"""

from __future__ import annotations

import argparse
import sys

from .common import AdapterError
from .paraphrase import BACKENDS, ParaphraseRequest, generate_paraphrases
from .saliency import METHODS, neural_saliency


def _cmd_paraphrase(args: argparse.Namespace) -> int:
    req = ParaphraseRequest(image_path=args.input, strength=args.strength,
                            guidance_scale=args.guidance, count=args.count,
                            seed=args.seed, caption=args.caption)
    manifest = generate_paraphrases(req, args.out_dir, backend=args.backend)
    print(manifest)
    return 0


def _cmd_saliency(args: argparse.Namespace) -> int:
    png_path, sidecar_path = neural_saliency(args.input, method=args.method,
                                             out_dir=args.out_dir)
    print(png_path)
    print(sidecar_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peccavi-adapters",
        description="Generate visual paraphrases and saliency maps as "
                    "interchange files for the peccavi watermarking pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("paraphrase", help="write K paraphrased variants + manifest")
    p.add_argument("-i", "--input", required=True, help="source image (PNG/JPEG)")
    p.add_argument("-o", "--out-dir", required=True, help="directory for variants + manifest")
    p.add_argument("-n", "--count", type=int, default=5, help="number of variants")
    p.add_argument("-s", "--strength", type=float, default=0.15,
                   help="paraphrase strength in (0, 1)")
    p.add_argument("--guidance", type=float, default=7.5, help="guidance scale")
    p.add_argument("--seed", type=int, default=0, help="base seed; variant i uses seed+i")
    p.add_argument("--backend", choices=BACKENDS, default=None,
                   help="generation backend (default: $PECCAVI_PARAPHRASE_BACKEND "
                        "or procedural)")
    p.add_argument("--caption", default=None,
                   help="conditioning caption; default: auto-caption if a "
                        "captioner is configured")
    p.set_defaults(func=_cmd_paraphrase)

    p = sub.add_parser("saliency", help="write a .sal.png/.sal.json pair")
    p.add_argument("-i", "--input", required=True, help="source image (PNG/JPEG)")
    p.add_argument("-o", "--out-dir", default=None,
                   help="output directory (default: next to the image)")
    p.add_argument("--method", choices=METHODS, default="xrai")
    p.set_defaults(func=_cmd_saliency)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
