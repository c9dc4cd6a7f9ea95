"""Saliency-guided, paraphrase-robust image watermarking in the Fourier domain."""

from .attacks_bench import (
    AttackSpec,
    BenchReport,
    ParaphraseManifest,
    apply_attack,
    load_paraphrase_manifest,
    standard_attacks,
    run_benchmark,
    successive_paraphrase_curve,
    surrogate_paraphrase,
    write_paraphrase_manifest,
)
from .enhance_burnish import (
    BurnishConfig,
    BurnishResult,
    EnhancementConfig,
    EnhanceResult,
    adaptive_enhance,
    noisy_burnish,
)
from .errors import (
    CalibrationError,
    ChannelError,
    DimensionMismatch,
    EmptyRegionError,
    ManifestError,
    PeccaviError,
    SidecarError,
    SpectrumSymmetryError,
)
from .imagecore import (
    CHANNEL_CB,
    CHANNEL_CR,
    CHANNEL_Y,
    CHANNEL_Y_HIGHPASS,
    NUM_CHANNELS,
    ImageBuffer,
    QualityScore,
    Spectrum,
    conjugate_mirror,
    extract_channel,
    forward_spectrum,
    insert_channel,
    inverse_spectrum,
    jpeg_roundtrip,
    load_image,
    psnr,
    resize_image,
    save_png,
    ssim,
    symmetrize,
)
from .nmp import (
    Nmp,
    NmpConfig,
    NmpSet,
    ParaphraseSet,
    add_random_patch,
    compute_nmps,
    iou,
    nms,
    stability_score,
    strength_for_matches,
    union_box_iou,
)
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    build_paraphrase_set,
    derive_seed,
    manifest_path_for,
    saliency_path_for,
    watermark_image,
)
from .saliency import (
    Region,
    SaliencyMap,
    extract_regions,
    load_external_saliency,
    save_saliency,
    spectral_residual_saliency,
)
from .watermark import (
    DetectionReport,
    NullStats,
    RingSpec,
    WatermarkKey,
    calibrate,
    detect,
    embed,
    make_ring_pattern,
    new_key,
    scan,
    score_patch,
    wdp_from_score,
)

__version__ = "0.1.0"

__all__ = [
    "AttackSpec",
    "BenchReport",
    "BurnishConfig",
    "BurnishResult",
    "CalibrationError",
    "ChannelError",
    "CHANNEL_CB",
    "CHANNEL_CR",
    "CHANNEL_Y",
    "CHANNEL_Y_HIGHPASS",
    "DetectionReport",
    "DimensionMismatch",
    "EmptyRegionError",
    "EnhancementConfig",
    "EnhanceResult",
    "ImageBuffer",
    "ManifestError",
    "Nmp",
    "NmpConfig",
    "NmpSet",
    "NullStats",
    "NUM_CHANNELS",
    "ParaphraseManifest",
    "ParaphraseSet",
    "PeccaviError",
    "PipelineConfig",
    "PipelineResult",
    "QualityScore",
    "Region",
    "RingSpec",
    "SaliencyMap",
    "SidecarError",
    "Spectrum",
    "SpectrumSymmetryError",
    "WatermarkKey",
    "adaptive_enhance",
    "add_random_patch",
    "apply_attack",
    "build_paraphrase_set",
    "calibrate",
    "compute_nmps",
    "conjugate_mirror",
    "derive_seed",
    "detect",
    "embed",
    "extract_channel",
    "extract_regions",
    "forward_spectrum",
    "insert_channel",
    "inverse_spectrum",
    "iou",
    "jpeg_roundtrip",
    "load_external_saliency",
    "load_image",
    "load_paraphrase_manifest",
    "make_ring_pattern",
    "manifest_path_for",
    "new_key",
    "nms",
    "noisy_burnish",
    "standard_attacks",
    "psnr",
    "resize_image",
    "run_benchmark",
    "saliency_path_for",
    "save_png",
    "save_saliency",
    "scan",
    "score_patch",
    "spectral_residual_saliency",
    "ssim",
    "stability_score",
    "strength_for_matches",
    "successive_paraphrase_curve",
    "surrogate_paraphrase",
    "symmetrize",
    "union_box_iou",
    "wdp_from_score",
    "watermark_image",
    "write_paraphrase_manifest",
]
