"""Saliency map computation, salient-region extraction, and external map loading.

The built-in provider is the classic spectral-residual method computed on a
64×64 luma plane.  External providers (e.g. neural ones) hand maps over as a
16-bit grayscale PNG plus a JSON sidecar, so this module never has to know how
they were produced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter, label, uniform_filter

from .errors import DimensionMismatch, SidecarError
from .imagecore import ImageBuffer, load_gray16_png, luma, resize_plane, save_gray16_png

_WORK_SIZE = 64  # analysis resolution for the spectral residual
_MIN_REGION_SIDE = 8
SIDECAR_VERSION = 1


@dataclass(frozen=True)
class SaliencyMap:
    """Per-pixel saliency in [0, 1]; max value is 1 unless the map is all zero."""

    values: np.ndarray
    source: str = "spectral_residual"

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise DimensionMismatch(f"saliency map must be 2-D and non-empty, got {arr.shape}")
        arr = np.clip(arr, 0.0, 1.0)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Region:
    """Axis-aligned box in integer pixels with a saliency score; sides ≥ 8."""

    x: int
    y: int
    w: int
    h: int
    score: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if int(v) != v:
                raise ValueError(f"region {name} must be integral, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.w < _MIN_REGION_SIDE or self.h < _MIN_REGION_SIDE:
            raise ValueError(f"region sides must be ≥ {_MIN_REGION_SIDE}, got {self.w}×{self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError("region origin must be non-negative")

    @property
    def area(self) -> int:
        return self.w * self.h


def _border_taper(size: int, ramp: int = 6) -> np.ndarray:
    """Raised-cosine ramp from 0 at the edges to 1 in the interior."""
    w = np.ones(size)
    t = 0.5 - 0.5 * np.cos(np.pi * (np.arange(ramp) + 0.5) / ramp)
    w[:ramp] = t
    w[size - ramp :] = t[::-1]
    return w


def spectral_residual_saliency(image: ImageBuffer) -> SaliencyMap:
    """Spectral-residual saliency: log-magnitude minus its local mean, squared
    inverse transform, σ=2.5 Gaussian blur, upsampled and normalized to max 1.

    Borders of the analysis map are tapered before normalization: the FFT
    treats the image as periodic, so non-matching opposite edges would
    otherwise light up as phantom salient bands.  Constant images produce an
    identically-zero map.
    """
    y = luma(image)
    if float(y.max() - y.min()) < 1e-12:
        return SaliencyMap(np.zeros_like(y), source="spectral_residual")

    small = resize_plane(y, _WORK_SIZE, _WORK_SIZE)
    spectrum = np.fft.fft2(small)
    log_amp = np.log(np.abs(spectrum) + 1e-12)
    phase = np.angle(spectrum)
    residual = log_amp - uniform_filter(log_amp, size=3, mode="reflect")
    recon = np.fft.ifft2(np.exp(residual + 1j * phase))
    sal = np.abs(recon) ** 2
    sal = gaussian_filter(sal, sigma=2.5, mode="reflect")
    taper = _border_taper(_WORK_SIZE)
    sal *= taper[:, None] * taper[None, :]
    sal = resize_plane(sal, image.height, image.width)

    sal -= sal.min()
    peak = sal.max()
    if peak > 0:
        sal /= peak
    else:
        sal = np.zeros_like(sal)
    return SaliencyMap(sal, source="spectral_residual")


def _otsu_threshold(values: np.ndarray, bins: int = 256) -> float:
    """Threshold maximizing between-class variance over a fixed histogram."""
    hist, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    hist = hist.astype(np.float64)
    total = hist.sum()
    if total == 0:
        return 1.0
    p = hist / total
    centers = (edges[:-1] + edges[1:]) * 0.5
    w0 = np.cumsum(p)
    m_cum = np.cumsum(p * centers)
    m_total = m_cum[-1]
    w1 = 1.0 - w0
    valid = (w0 > 0) & (w1 > 0)
    if not np.any(valid):
        return float(values.max())
    between = np.where(valid, (m_total * w0 - m_cum) ** 2 / np.where(valid, w0 * w1, 1.0), -1.0)
    k = int(np.argmax(between))
    return float(edges[k + 1])


def _expand_box(x0: int, y0: int, x1: int, y1: int, width: int, height: int):
    """Grow a box to the minimum side, then slide it back inside the image."""
    w = x1 - x0
    h = y1 - y0
    if w < _MIN_REGION_SIDE:
        grow = _MIN_REGION_SIDE - w
        x0 -= grow // 2
        w = _MIN_REGION_SIDE
    if h < _MIN_REGION_SIDE:
        grow = _MIN_REGION_SIDE - h
        y0 -= grow // 2
        h = _MIN_REGION_SIDE
    w = min(w, width)
    h = min(h, height)
    x0 = min(max(x0, 0), width - w)
    y0 = min(max(y0, 0), height - h)
    return x0, y0, w, h


def extract_regions(smap: SaliencyMap, max_regions: int) -> list[Region]:
    """Salient regions: Otsu-thresholded 8-connected components, the
    `max_regions` largest by area, scored by mean saliency inside the box and
    returned in descending score order.
    """
    if max_regions < 1:
        return []
    vals = smap.values
    if vals.max() <= 0.0 or min(vals.shape) < _MIN_REGION_SIDE:
        return []
    t = _otsu_threshold(vals)
    mask = vals > t
    if not mask.any():
        return []
    labels, count = label(mask, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return []
    areas = np.bincount(labels.ravel())[1:]  # skip background
    order = np.argsort(-areas, kind="stable")[:max_regions]

    regions = []
    for idx in order:
        lab = int(idx) + 1
        ys, xs = np.nonzero(labels == lab)
        x0, y0, x1, y1 = xs.min(), ys.min(), xs.max() + 1, ys.max() + 1
        x0, y0, w, h = _expand_box(int(x0), int(y0), int(x1), int(y1), smap.width, smap.height)
        score = float(vals[y0 : y0 + h, x0 : x0 + w].mean())
        regions.append(Region(x=x0, y=y0, w=w, h=h, score=score))

    regions.sort(key=lambda r: (-r.score, r.y, r.x))
    return regions


# ---------------------------------------------------------------------------
# external map interchange (.sal.png + .sal.json)
# ---------------------------------------------------------------------------


def sidecar_path(png_path: str | Path) -> Path:
    p = Path(png_path)
    return p.with_suffix(".json")  # foo.sal.png -> foo.sal.json


def save_saliency(smap: SaliencyMap, png_path: str | Path) -> None:
    """Write a map as 16-bit grayscale PNG plus JSON sidecar."""
    png_path = Path(png_path)
    save_gray16_png(smap.values, png_path)
    meta = {"w": smap.width, "h": smap.height, "source": smap.source, "version": SIDECAR_VERSION}
    sidecar_path(png_path).write_text(json.dumps(meta, sort_keys=True))


def load_external_saliency(
    png_path: str | Path, expected_size: tuple[int, int] | None = None
) -> SaliencyMap:
    """Load an externally produced map, validating its sidecar.

    `expected_size` is (width, height) of the image the map must describe.
    Raises FileNotFoundError for missing files, SidecarError for malformed
    metadata, and DimensionMismatch when dimensions disagree.
    """
    png_path = Path(png_path)
    if not png_path.is_file():
        raise FileNotFoundError(f"saliency map not found: {png_path}")
    side = sidecar_path(png_path)
    if not side.is_file():
        raise FileNotFoundError(f"saliency sidecar not found: {side}")
    try:
        meta = json.loads(side.read_text())
    except json.JSONDecodeError as exc:
        raise SidecarError(f"sidecar {side} is not valid JSON: {exc}") from exc
    if not isinstance(meta, dict):
        raise SidecarError(f"sidecar {side} must hold a JSON object")
    for key in ("w", "h", "source", "version"):
        if key not in meta:
            raise SidecarError(f"sidecar {side} missing required key {key!r}")
    if meta["version"] != SIDECAR_VERSION:
        raise SidecarError(f"sidecar {side} has unsupported version {meta['version']!r}")
    if not isinstance(meta["w"], int) or not isinstance(meta["h"], int):
        raise SidecarError(f"sidecar {side} dimensions must be integers")

    values = load_gray16_png(png_path)
    h, w = values.shape
    if (meta["w"], meta["h"]) != (w, h):
        raise DimensionMismatch(
            f"sidecar declares {meta['w']}×{meta['h']} but PNG is {w}×{h}"
        )
    if expected_size is not None and (w, h) != tuple(expected_size):
        raise DimensionMismatch(
            f"saliency map is {w}×{h} but the image is {expected_size[0]}×{expected_size[1]}"
        )
    peak = values.max()
    if peak > 0:  # undo 16-bit quantization drift so map invariants hold
        values = values / peak
    return SaliencyMap(values, source=str(meta["source"]))
