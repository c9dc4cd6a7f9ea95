"""Visual paraphrase generation.

Produces K re-renderings of an input image at a chosen strength and writes
them next to a ``<stem>.para.json`` manifest that the watermarking pipeline
consumes.  Two backends:

``diffusers``
    Real img2img diffusion through the ``diffusers`` library.  Pick the
    model with PECCAVI_DIFFUSION_MODEL (hub id or local path); optional
    device via PECCAVI_DEVICE.  Each variant is seeded individually so runs
    are repeatable where the scheduler supports it.

``procedural``
    A model-free stand-in: seeded elastic warp + blur + photometric jitter
    + noise, all scaled by the strength parameter.  Useful offline and for
    integration tests; it is honest about what it is -- the manifest
    records ``generator: "procedural"``.

Strength semantics follow img2img convention: higher s strays further from
the source, so mean SSIM-to-original decreases as s grows.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter, map_coordinates

from .common import (
    ENV_BACKEND,
    ENV_DEVICE,
    ENV_DIFFUSION_MODEL,
    PARA_MANIFEST_VERSION,
    AdapterError,
    load_image,
    resolve_caption,
    save_image,
    write_json,
)

# Procedural recipe constants.  Chosen so s=0.2 visibly re-renders texture
# (SSIM to source roughly 0.5-0.7) while s<=0.1 stays close; all effects
# scale linearly with s.
WARP_RMS_PER_S = 4.0     # px of RMS displacement per unit strength
WARP_SMOOTH_SIGMA = 14.0  # px; smoothness of the displacement field
BLUR_SIGMA_PER_S = 2.5
NOISE_SIGMA_PER_S = 0.1
GAIN_JITTER_PER_S = 0.1
BIAS_JITTER_PER_S = 0.05

BACKENDS = ("procedural", "diffusers")


@dataclass(frozen=True)
class ParaphraseRequest:
    """What to paraphrase and how hard.

    caption=None means "auto": use the captioner named by
    PECCAVI_CAPTION_CMD if configured, otherwise run caption-free.
    """

    image_path: str | Path
    strength: float = 0.15
    guidance_scale: float = 7.5
    count: int = 5
    seed: int = 0
    caption: str | None = None

    def validate(self) -> None:
        if not (0.0 < float(self.strength) < 1.0):
            raise AdapterError(f"strength must be in (0, 1), got {self.strength}")
        if int(self.count) < 1:
            raise AdapterError(f"count must be >= 1, got {self.count}")
        if float(self.guidance_scale) < 0.0:
            raise AdapterError(f"guidance_scale must be >= 0, got {self.guidance_scale}")


def resolve_backend(name: str | None = None) -> str:
    """Explicit argument wins, then PECCAVI_PARAPHRASE_BACKEND, then procedural."""
    chosen = name or os.environ.get(ENV_BACKEND) or "procedural"
    if chosen not in BACKENDS:
        raise AdapterError(
            f"unknown paraphrase backend '{chosen}'; known backends: {', '.join(BACKENDS)}")
    return chosen


def _procedural_variant(image: np.ndarray, strength: float, seed: int) -> np.ndarray:
    """One blur+warp+jitter+noise re-rendering, fully determined by seed."""
    rng = np.random.default_rng(np.random.SeedSequence([0x50415241, int(seed)]))
    h, w = image.shape[:2]
    planes = image[:, :, None] if image.ndim == 2 else image

    # Smooth random displacement field, normalised to the target RMS.
    amp = WARP_RMS_PER_S * strength
    dy = gaussian_filter(rng.standard_normal((h, w)), WARP_SMOOTH_SIGMA)
    dx = gaussian_filter(rng.standard_normal((h, w)), WARP_SMOOTH_SIGMA)
    for d in (dy, dx):
        rms = float(np.sqrt(np.mean(d * d)))
        if rms > 0:
            d *= amp / rms
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    coords = np.stack([yy + dy, xx + dx])

    out = np.empty_like(planes, dtype=np.float64)
    sigma_b = BLUR_SIGMA_PER_S * strength
    for c in range(planes.shape[2]):
        warped = map_coordinates(planes[:, :, c].astype(np.float64), coords,
                                 order=1, mode="reflect")
        out[:, :, c] = gaussian_filter(warped, sigma_b) if sigma_b > 0 else warped

    gain = 1.0 + GAIN_JITTER_PER_S * strength * rng.uniform(-1.0, 1.0)
    bias = BIAS_JITTER_PER_S * strength * rng.uniform(-1.0, 1.0)
    out = out * gain + bias
    out += rng.normal(0.0, NOISE_SIGMA_PER_S * strength, size=out.shape)
    out = np.clip(out, 0.0, 1.0)
    return out[:, :, 0] if image.ndim == 2 else out


def _generate_procedural(image: np.ndarray, req: ParaphraseRequest,
                         seeds: list[int]) -> list[np.ndarray]:
    return [_procedural_variant(image, float(req.strength), s) for s in seeds]


def _generate_diffusers(image: np.ndarray, req: ParaphraseRequest,
                        seeds: list[int]) -> list[np.ndarray]:
    model = os.environ.get(ENV_DIFFUSION_MODEL)
    if not model:
        raise AdapterError(
            "diffusers backend is not configured: set "
            f"{ENV_DIFFUSION_MODEL} to a local path or hub id of an "
            "img2img-capable diffusion model")
    try:
        import torch
        from diffusers import AutoPipelineForImage2Image
    except ImportError as exc:
        raise AdapterError(
            "diffusers backend needs the optional neural dependencies; "
            "install with: pip install 'peccavi-adapters[neural]'") from exc

    device = os.environ.get(ENV_DEVICE, "cpu")
    pipe = AutoPipelineForImage2Image.from_pretrained(model)
    pipe = pipe.to(device)
    pipe.set_progress_bar_config(disable=True)

    h, w = image.shape[:2]
    src8 = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    source = Image.fromarray(src8, mode="L" if image.ndim == 2 else "RGB").convert("RGB")
    prompt = req.caption or ""

    variants = []
    for s in seeds:
        gen = torch.Generator(device=device).manual_seed(int(s) & 0x7FFFFFFFFFFFFFFF)
        result = pipe(prompt=prompt, image=source, strength=float(req.strength),
                      guidance_scale=float(req.guidance_scale), generator=gen)
        out = result.images[0]
        if out.size != (w, h):
            out = out.resize((w, h), Image.LANCZOS)
        arr = np.asarray(out, dtype=np.float32) / 255.0
        if image.ndim == 2:
            arr = arr.mean(axis=2)
        variants.append(arr.astype(np.float64))
    return variants


_GENERATORS = {
    "procedural": _generate_procedural,
    "diffusers": _generate_diffusers,
}


def generate_paraphrases(req: ParaphraseRequest, out_dir: str | Path,
                         backend: str | None = None) -> Path:
    """Generate req.count variants and write the manifest; returns its path.

    Variant PNGs land in out_dir as ``<stem>_paraNN.png``; the manifest is
    ``<stem>.para.json`` with paths relative to its own directory, so the
    whole set can be moved as a unit.
    """
    req.validate()
    image_path = Path(req.image_path)
    if not image_path.is_file():
        raise AdapterError(f"input image not found: {image_path}")
    chosen = resolve_backend(backend)

    image = load_image(image_path)
    caption = resolve_caption(image_path, req.caption)
    seeds = [int(req.seed) + i for i in range(int(req.count))]
    effective = ParaphraseRequest(image_path=req.image_path, strength=req.strength,
                                  guidance_scale=req.guidance_scale, count=req.count,
                                  seed=req.seed, caption=caption)
    variants = _GENERATORS[chosen](image, effective, seeds)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = image_path.stem
    names = []
    for i, arr in enumerate(variants):
        name = f"{stem}_para{i:02d}.png"
        save_image(arr, out / name)
        names.append(name)

    generator = chosen if chosen != "diffusers" else f"diffusers:{os.environ.get(ENV_DIFFUSION_MODEL)}"
    manifest = {
        "version": PARA_MANIFEST_VERSION,
        "generator": generator,
        "strength": float(req.strength),
        "guidance": float(req.guidance_scale),
        "seeds": seeds,
        "paths": names,
        "caption": caption,
    }
    manifest_path = out / f"{stem}.para.json"
    write_json(manifest, manifest_path)
    return manifest_path
