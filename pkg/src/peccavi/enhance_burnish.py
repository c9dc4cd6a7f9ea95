"""Post-embedding quality restoration and saliency-disrupting burnishing.

Adaptive enhancement blends the watermarked image back toward the original,
x̄ = x̂ + γ(x₀ - x̂), choosing the smallest γ on a fixed grid whose SSIM clears
the floor s*.  Noisy burnishing then searches for a small high-frequency
perturbation that moves the image's salient regions (so saliency-guided
attackers aim at the wrong places) without hurting detection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError
from .imagecore import ImageBuffer, ssim
from .nmp import union_box_iou
from .saliency import SaliencyMap, extract_regions, spectral_residual_saliency
from .watermark import WatermarkKey, detect


@dataclass(frozen=True)
class EnhancementConfig:
    s_star: float = 0.92
    gamma_resolution: float = 1.0 / 64.0
    max_iter: int = 8

    def __post_init__(self):
        if not 0.0 < self.s_star <= 1.0:
            raise ValueError("s_star must lie in (0, 1]")
        if not 0.0 < self.gamma_resolution < 1.0:
            raise ValueError("gamma_resolution must lie in (0, 1)")

    @property
    def grid_steps(self) -> int:
        return int(round(1.0 / self.gamma_resolution))


@dataclass(frozen=True)
class EnhanceResult:
    image: ImageBuffer
    gamma: float
    ssim_value: float
    warning: bool = False  # set when even the largest grid γ misses the floor


def _blend(original: ImageBuffer, watermarked: ImageBuffer, gamma: float) -> ImageBuffer:
    return ImageBuffer(watermarked.data + gamma * (original.data - watermarked.data))


def adaptive_enhance(
    original: ImageBuffer, watermarked: ImageBuffer, config: EnhancementConfig | None = None
) -> EnhanceResult:
    """Smallest grid γ with SSIM(blend, original) ≥ s*.

    Uses binary search after probing that SSIM is monotone in γ; falls back to
    a full grid sweep when the probe fails.  If no grid point reaches the
    floor, the largest γ is returned with a warning.
    """
    config = config or EnhancementConfig()
    steps = config.grid_steps
    cache: dict[int, float] = {}

    def f(k: int) -> float:
        if k not in cache:
            cache[k] = ssim(original, _blend(original, watermarked, k / steps))
        return cache[k]

    if f(0) >= config.s_star:
        return EnhanceResult(image=watermarked, gamma=0.0, ssim_value=f(0))

    monotone = f(0) <= f(steps // 2) + 1e-9 <= 1.0 + 1e-9
    if not monotone:
        for k in range(steps):
            if f(k) >= config.s_star:
                return EnhanceResult(
                    image=_blend(original, watermarked, k / steps),
                    gamma=k / steps,
                    ssim_value=f(k),
                )
        k = steps - 1
        return EnhanceResult(
            image=_blend(original, watermarked, k / steps),
            gamma=k / steps,
            ssim_value=f(k),
            warning=True,
        )

    if f(steps - 1) < config.s_star:
        k = steps - 1
        return EnhanceResult(
            image=_blend(original, watermarked, k / steps),
            gamma=k / steps,
            ssim_value=f(k),
            warning=True,
        )

    lo, hi = 1, steps - 1
    iterations = 0
    while lo < hi and iterations < max(config.max_iter, 1):
        mid = (lo + hi) // 2
        if f(mid) >= config.s_star:
            hi = mid
        else:
            lo = mid + 1
        iterations += 1
    gamma = lo / steps
    return EnhanceResult(image=_blend(original, watermarked, gamma), gamma=gamma, ssim_value=f(lo))


# ---------------------------------------------------------------------------
# noisy burnishing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BurnishConfig:
    epsilon: float = 8.0 / 255.0
    iterations: int = 200
    wdp_floor: float = 0.9
    trial_seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")


@dataclass(frozen=True)
class BurnishResult:
    image: ImageBuffer
    saliency_iou: float  # IoU of top-3 salient boxes before vs after
    wdp: float
    accepted: int


def _highfreq_mask(height: int, width: int) -> np.ndarray:
    """True where a perturbation spectrum may keep energy (unshifted layout)."""
    fy = np.fft.fftfreq(height)[:, None]  # cycles/sample, Nyquist at 0.5
    fx = np.fft.fftfreq(width)[None, :]
    radius = np.hypot(fy, fx) / 0.5  # 1.0 = Nyquist
    return radius >= 0.1


def noisy_burnish(
    watermarked: ImageBuffer,
    key: WatermarkKey,
    config: BurnishConfig | None = None,
    saliency_fn=None,
) -> BurnishResult:
    """Seeded random search for a saliency-divergent, detection-safe perturbation.

    Proposals are uniform ±ε noise with the lowest 10% of the spectrum removed
    (the ring carriers live above that band), clipped back to ±ε.  A proposal
    is kept only if it moves the top-3 salient boxes more than the best one so
    far while detection stays at or above wdp_floor.  With no acceptable
    proposal the input comes back unchanged.
    """
    config = config or BurnishConfig()
    if key.calibration is None:
        raise CalibrationError("noisy burnishing needs a calibrated key for its WDP floor")
    fn = saliency_fn or spectral_residual_saliency

    base_report = detect(watermarked, key)
    if config.iterations == 0:
        return BurnishResult(
            image=watermarked, saliency_iou=1.0, wdp=base_report.wdp, accepted=0
        )

    h, w = watermarked.height, watermarked.width
    base_regions = extract_regions(fn(watermarked), 3)
    keep = _highfreq_mask(h, w)
    rng = np.random.default_rng(
        np.random.SeedSequence([config.trial_seed & 0xFFFFFFFFFFFFFFFF, 0x4E])
    )

    best_image = watermarked
    best_obj = 0.0
    best_wdp = base_report.wdp
    accepted = 0
    for _ in range(config.iterations):
        delta = rng.uniform(-config.epsilon, config.epsilon, size=watermarked.data.shape)
        spectrum = np.fft.fft2(delta, axes=(0, 1))
        spectrum[~keep] = 0.0
        delta = np.clip(
            np.fft.ifft2(spectrum, axes=(0, 1)).real, -config.epsilon, config.epsilon
        )
        candidate = ImageBuffer(watermarked.data + delta)
        regions = extract_regions(fn(candidate), 3)
        objective = 1.0 - union_box_iou(base_regions, regions, w, h)
        if objective <= best_obj:
            continue
        report = detect(candidate, key)
        if report.wdp >= config.wdp_floor:
            best_image = candidate
            best_obj = objective
            best_wdp = report.wdp
            accepted += 1

    return BurnishResult(
        image=best_image, saliency_iou=1.0 - best_obj, wdp=best_wdp, accepted=accepted
    )
