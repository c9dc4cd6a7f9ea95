"""Command-line interface: embed, detect, calibrate, nmp, attack, eval."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .attacks_bench import AttackSpec, apply_attack, standard_attacks, run_benchmark
from .errors import PeccaviError
from .imagecore import load_image, save_png
from .nmp import NmpConfig, add_random_patch, compute_nmps
from .pipeline import PipelineConfig, build_paraphrase_set, watermark_image
from .watermark import WatermarkKey, calibrate, detect, new_key

_WDP_PASS = 0.9


def _load_key(path: str) -> WatermarkKey:
    if not Path(path).is_file():
        raise PeccaviError(f"key file not found: {path} (create one with `peccavi calibrate`)")
    return WatermarkKey.load(path)


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        saliency_mode=getattr(args, "saliency", "spectral"),
        paraphrase_dir=Path(args.paraphrase_dir) if getattr(args, "paraphrase_dir", None) else None,
        burnish=bool(getattr(args, "burnish", False)),
        max_nmps=getattr(args, "top", None),
    )


def _cmd_embed(args) -> int:
    key = _load_key(args.key)
    image = load_image(args.input)
    result = watermark_image(image, key, _pipeline_config(args), image_path=args.input)
    save_png(result.image, args.output)

    manifest = {
        "input": str(args.input),
        "output": str(args.output),
        "nmps": json.loads(result.nmps.to_json()),
        "enhancement": {
            "gamma": result.gamma,
            "ssim_after": result.ssim,
            "psnr_after": result.psnr,
            "warning": result.enhance_warning,
            "wdp_after": result.wdp,
        },
        "burnish": None
        if result.burnish is None
        else {
            "saliency_iou": result.burnish.saliency_iou,
            "wdp": result.burnish.wdp,
            "accepted": result.burnish.accepted,
        },
    }
    manifest_path = Path(args.output).with_suffix("").as_posix() + ".manifest.json"
    Path(manifest_path).write_text(json.dumps(manifest, sort_keys=True, indent=2))

    print(f"embedded {len(result.nmps.nmps)} sites -> {args.output}")
    print(f"gamma={result.gamma:.6f} psnr={result.psnr:.2f}dB ssim={result.ssim:.4f}")
    if result.wdp is not None:
        print(f"wdp={result.wdp:.4f}")
    return 0


def _cmd_detect(args) -> int:
    key = _load_key(args.key)
    image = load_image(args.input)
    report = detect(image, key, collect_scores=bool(args.verbose))
    if args.verbose:
        print(report.to_json())
    else:
        print(f"wdp={report.wdp:.6f} best_score={report.best_score:.6f}")
    return 0 if report.wdp >= _WDP_PASS else 2


def _cmd_calibrate(args) -> int:
    if Path(args.key).is_file():
        key = WatermarkKey.load(args.key)
    else:
        key = new_key(seed=args.seed)
        print(f"created new key with seed {key.seed}")
    corpus_dir = Path(args.corpus)
    paths = sorted(p for p in corpus_dir.glob("*.png") if not p.name.endswith(".sal.png"))
    images = [load_image(p) for p in paths]
    key = calibrate(key, images)
    key.save(args.key)
    stats = key.calibration
    print(
        f"calibrated on {stats.sample_count} images: "
        f"mu0={stats.mu0:.6f} sigma0={stats.sigma0:.6f} -> {args.key}"
    )
    return 0


def _cmd_nmp(args) -> int:
    key = _load_key(args.key) if args.key else new_key(seed=args.seed)
    image = load_image(args.input)
    config = _pipeline_config(args)
    pset, regions = build_paraphrase_set(image, key, config, image_path=args.input)
    nmps = compute_nmps(
        pset,
        regions,
        NmpConfig(seed=key.seed, channel_offset=key.channel_rotation_offset,
                  max_nmps=config.max_nmps),
    )
    if not args.no_random_patch:
        nmps = add_random_patch(nmps, seed=key.seed, channel_offset=key.channel_rotation_offset)
    nmps.save(args.output)
    print(f"{len(nmps.nmps)} sites -> {args.output}")
    return 0


def _cmd_attack(args) -> int:
    image = load_image(args.input)
    if args.kind == "brightness":
        spec = AttackSpec.brightness(args.factor)
    elif args.kind == "gaussian":
        spec = AttackSpec.gaussian_noise(args.sigma, seed=args.seed)
    elif args.kind == "jpeg":
        spec = AttackSpec.jpeg(args.quality)
    elif args.kind == "paraphrase":
        spec = AttackSpec.surrogate_paraphrase(args.strength, seed=args.seed)
    else:
        if not args.manifest:
            raise PeccaviError("--manifest is required for the external attack")
        spec = AttackSpec.external_paraphrase(args.manifest, index=args.index)
    save_png(apply_attack(image, spec), args.output)
    print(f"{spec.label} -> {args.output}")
    return 0


def _cmd_eval(args) -> int:
    key = _load_key(args.key)
    if args.attacks == "standard":
        attacks = standard_attacks()
    elif args.attacks == "classical":
        attacks = standard_attacks(include_paraphrase=False)
    else:
        raise PeccaviError(f"unknown attack suite {args.attacks!r}")
    config = _pipeline_config(args)
    report = run_benchmark(args.corpus, key, attacks, config)
    report.save_csv(args.report)
    if args.json:
        report.save_json(args.json)
    print(f"{len(report.rows)} images evaluated, {len(report.errors)} failed -> {args.report}")
    for label in report.columns[1:]:
        print(f"  mean {label} = {report.aggregates[label]:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peccavi",
        description="Saliency-guided ring watermarking with calibrated detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="watermark an image")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--paraphrase-dir", default=None)
    p.add_argument("--saliency", choices=("spectral", "external"), default="spectral")
    p.add_argument("--burnish", action="store_true")
    p.add_argument("--top", type=int, default=None, help="cap on NMP count")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("detect", help="scan an image for the key's watermark")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("calibrate", help="fit null statistics on a clean corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--seed", type=int, default=None, help="seed when creating a new key")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("nmp", help="compute watermark sites without embedding")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--key", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paraphrase-dir", default=None)
    p.add_argument("--saliency", choices=("spectral", "external"), default="spectral")
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--no-random-patch", action="store_true")
    p.set_defaults(func=_cmd_nmp)

    p = sub.add_parser("attack", help="apply one attack to an image")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--kind", required=True,
                   choices=("brightness", "gaussian", "jpeg", "paraphrase", "external"))
    p.add_argument("--factor", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--quality", type=int, default=50)
    p.add_argument("--strength", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--manifest", default=None)
    p.add_argument("--index", type=int, default=0)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("eval", help="run the robustness benchmark on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--attacks", default="standard", help="'standard' (full suite) or 'classical'")
    p.add_argument("--report", required=True, help="CSV output path")
    p.add_argument("--json", default=None, help="optional JSON output path")
    p.add_argument("--paraphrase-dir", default=None)
    p.add_argument("--saliency", choices=("spectral", "external"), default="spectral")
    p.add_argument("--burnish", action="store_true")
    p.add_argument("--top", type=int, default=None)
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PeccaviError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
