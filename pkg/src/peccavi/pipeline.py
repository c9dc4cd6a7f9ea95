"""End-to-end embedding pipeline shared by the CLI and the benchmark harness.

One call takes an original image through paraphrase-variant generation,
NMP selection, ring embedding, adaptive enhancement, and optional burnishing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .enhance_burnish import (
    BurnishConfig,
    BurnishResult,
    EnhancementConfig,
    adaptive_enhance,
    noisy_burnish,
)
from .imagecore import ImageBuffer, QualityScore, load_image, resize_image
from .nmp import NmpConfig, NmpSet, ParaphraseSet, add_random_patch, compute_nmps
from .saliency import (
    Region,
    SaliencyMap,
    extract_regions,
    load_external_saliency,
    spectral_residual_saliency,
)
from .watermark import WatermarkKey, detect, embed


def derive_seed(*parts) -> int:
    """Stable 64-bit sub-seed from arbitrary labeled parts."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def saliency_path_for(image_path: str | Path) -> Path:
    p = Path(image_path)
    return p.with_name(p.stem + ".sal.png")


def manifest_path_for(image_path: str | Path, paraphrase_dir: str | Path | None = None) -> Path:
    p = Path(image_path)
    base = Path(paraphrase_dir) if paraphrase_dir is not None else p.parent
    return base / (p.stem + ".para.json")


@dataclass(frozen=True)
class PipelineConfig:
    saliency_mode: str = "spectral"  # "spectral" or "external"
    max_regions: int = 5
    variant_count: int = 5
    variant_strength: float = 0.15
    use_manifests: bool = True
    paraphrase_dir: Path | None = None
    random_patch: bool = True
    max_nmps: int | None = None
    grid_size: int = 8
    burnish: bool = False
    enhancement: EnhancementConfig = field(default_factory=EnhancementConfig)
    burnish_config: BurnishConfig = field(default_factory=BurnishConfig)

    def __post_init__(self):
        if self.saliency_mode not in ("spectral", "external"):
            raise ValueError(f"unknown saliency mode {self.saliency_mode!r}")


@dataclass(frozen=True)
class PipelineResult:
    image: ImageBuffer  # final output (enhanced, possibly burnished)
    raw: ImageBuffer  # straight out of embed()
    nmps: NmpSet
    gamma: float
    ssim: float
    psnr: float
    enhance_warning: bool
    best_score: float | None  # None when the key is uncalibrated
    wdp: float | None
    burnish: BurnishResult | None = None


def _saliency_for(
    image: ImageBuffer, path: Path | None, config: PipelineConfig, required: bool
) -> SaliencyMap:
    """Pick the configured saliency source for one image.

    External mode insists on a sidecar for the original image but lets
    variants fall back to the spectral residual when no map exists for them.
    """
    if config.saliency_mode == "external":
        if path is not None:
            sal = saliency_path_for(path)
            if sal.is_file():
                return load_external_saliency(sal, (image.width, image.height))
        if required:
            where = saliency_path_for(path) if path is not None else "<no image path>"
            raise FileNotFoundError(
                f"external saliency requested but no map found at {where}"
            )
    return spectral_residual_saliency(image)


def build_paraphrase_set(
    image: ImageBuffer,
    key: WatermarkKey,
    config: PipelineConfig,
    image_path: str | Path | None = None,
) -> tuple[ParaphraseSet, list[Region]]:
    """Assemble the K variants (external manifest if present, else surrogate)
    and extract regions for the original and every variant.
    """
    from .attacks_bench import load_paraphrase_manifest, surrogate_paraphrase

    stem = Path(image_path).stem if image_path is not None else "image"
    variants: list[tuple[ImageBuffer, Path | None]] = []

    manifest = None
    if config.use_manifests and image_path is not None:
        candidate = manifest_path_for(image_path, config.paraphrase_dir)
        if candidate.is_file():
            manifest = load_paraphrase_manifest(candidate)
    if manifest is not None:
        for p in manifest.paths:
            variant = resize_image(load_image(p), image.width, image.height)
            variants.append((variant, p))
    else:
        for i in range(config.variant_count):
            seed = derive_seed(key.seed, stem, "variant", i)
            variants.append((surrogate_paraphrase(image, config.variant_strength, seed), None))

    original_regions = extract_regions(
        _saliency_for(image, Path(image_path) if image_path else None, config, required=True),
        config.max_regions,
    )
    variant_regions = [
        extract_regions(_saliency_for(v, p, config, required=False), config.max_regions)
        for v, p in variants
    ]
    pset = ParaphraseSet(
        original=image,
        variants=tuple(v for v, _ in variants),
        variant_regions=tuple(tuple(r) for r in variant_regions),
    )
    return pset, original_regions


def watermark_image(
    image: ImageBuffer,
    key: WatermarkKey,
    config: PipelineConfig | None = None,
    image_path: str | Path | None = None,
) -> PipelineResult:
    """Full pipeline: variants → NMPs → embed → enhance → (burnish) → verify."""
    config = config or PipelineConfig()
    pset, regions = build_paraphrase_set(image, key, config, image_path=image_path)
    nmp_cfg = NmpConfig(
        grid_size=config.grid_size,
        seed=key.seed,
        channel_offset=key.channel_rotation_offset,
        max_nmps=config.max_nmps,
    )
    nmps = compute_nmps(pset, regions, nmp_cfg)
    if config.random_patch:
        nmps = add_random_patch(nmps, seed=key.seed, channel_offset=key.channel_rotation_offset)

    raw = embed(image, nmps, key)
    enhanced = adaptive_enhance(image, raw, config.enhancement)
    final = enhanced.image
    burnish_result = None
    if config.burnish:
        burnish_result = noisy_burnish(final, key, config.burnish_config)
        final = burnish_result.image

    quality = QualityScore.compute(image, final)
    best_score = None
    wdp = None
    if key.calibration is not None:
        report = detect(final, key)
        best_score = report.best_score
        wdp = report.wdp

    return PipelineResult(
        image=final,
        raw=raw,
        nmps=nmps,
        gamma=enhanced.gamma,
        ssim=quality.ssim,
        psnr=quality.psnr,
        enhance_warning=enhanced.warning,
        best_score=best_score,
        wdp=wdp,
        burnish=burnish_result,
    )
