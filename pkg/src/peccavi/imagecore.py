"""Image container, logical channel space, spectral transforms, and quality metrics.

Images are float64 arrays shaped (H, W, C) with samples in [0, 1].  Spectra are
center-shifted 2-D Fourier transforms (DC at the center bin) over square planes.
Watermark carriers live in a 4-channel logical space: luma, blue-difference,
red-difference, and a luma high-pass residual.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d, uniform_filter

from .errors import ChannelError, DimensionMismatch, SpectrumSymmetryError

# ---------------------------------------------------------------------------
# logical carrier channels
# ---------------------------------------------------------------------------

CHANNEL_Y = 0
CHANNEL_CB = 1
CHANNEL_CR = 2
CHANNEL_Y_HIGHPASS = 3
NUM_CHANNELS = 4
LUMA_CHANNELS = (CHANNEL_Y, CHANNEL_Y_HIGHPASS)
CHANNEL_NAMES = {
    CHANNEL_Y: "Y",
    CHANNEL_CB: "Cb",
    CHANNEL_CR: "Cr",
    CHANNEL_Y_HIGHPASS: "Y-highpass",
}

_HIGHPASS_BOX = 5  # box-blur size defining the high-pass residual carrier

# SSIM constants (Wang et al. defaults)
_SSIM_WIN = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ImageBuffer:
    """Immutable H×W×C float64 image with samples clamped to [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise DimensionMismatch(f"expected (H, W, 1|3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatch("image must have at least one pixel")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image samples must be finite")
        arr = np.clip(arr, 0.0, 1.0)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def plane(self, index: int) -> np.ndarray:
        """Raw color plane (a copy), not a logical watermark channel."""
        if not 0 <= index < self.channels:
            raise ChannelError(f"plane {index} out of range for {self.channels}-channel image")
        return np.array(self.data[:, :, index])

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.rint(self.data * 255.0), 0, 255).astype(np.uint8)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageBuffer":
        return cls(np.asarray(arr, dtype=np.float64))


@dataclass(frozen=True)
class Spectrum:
    """Center-shifted complex 2-D spectrum of a square S×S plane."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise DimensionMismatch(f"spectrum must be square and non-empty, got {arr.shape}")
        object.__setattr__(self, "coeffs", arr)

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]


@dataclass(frozen=True)
class QualityScore:
    """PSNR (dB) / SSIM pair for a processed image against its reference."""

    psnr: float
    ssim: float
    ssim_reduced_window: bool = False

    @classmethod
    def compute(cls, reference: ImageBuffer, candidate: ImageBuffer) -> "QualityScore":
        value, reduced = _ssim_with_flag(reference, candidate)
        return cls(psnr=psnr(reference, candidate), ssim=value, ssim_reduced_window=reduced)


# ---------------------------------------------------------------------------
# spectral transforms
# ---------------------------------------------------------------------------


def forward_spectrum(plane: np.ndarray, size: int | None = None) -> Spectrum:
    """FFT of a square plane, shifted so DC sits at the center bin.

    `size` is an optional guard asserting the expected transform size.
    """
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionMismatch(f"forward_spectrum needs a non-empty square plane, got {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise DimensionMismatch(f"expected {size}×{size} plane, got {arr.shape}")
    return Spectrum(np.fft.fftshift(np.fft.fft2(arr)))


def conjugate_mirror(coeffs: np.ndarray) -> np.ndarray:
    """Values at the negated-frequency positions of a center-shifted spectrum."""
    s = coeffs.shape[0]
    mirrored = np.flip(coeffs, axis=(0, 1))
    if s % 2 == 0:
        mirrored = np.roll(mirrored, shift=(1, 1), axis=(0, 1))
    return mirrored


def symmetrize(spectrum: Spectrum) -> Spectrum:
    """Project onto the conjugate-symmetric subspace (real-valued inverse)."""
    c = spectrum.coeffs
    return Spectrum((c + np.conj(conjugate_mirror(c))) * 0.5)


def symmetry_residual(spectrum: Spectrum) -> float:
    """Relative L2 distance from conjugate symmetry; 0 means exactly symmetric."""
    c = spectrum.coeffs
    scale = np.linalg.norm(c)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(c - np.conj(conjugate_mirror(c))) / scale)


def inverse_spectrum(spectrum: Spectrum, tol: float = 1e-6) -> np.ndarray:
    """Inverse transform back to a real plane; rejects asymmetric spectra."""
    if symmetry_residual(spectrum) > tol:
        raise SpectrumSymmetryError(
            "spectrum is not conjugate-symmetric; apply symmetrize() before inverting"
        )
    plane = np.fft.ifft2(np.fft.ifftshift(spectrum.coeffs))
    return np.ascontiguousarray(plane.real)


# ---------------------------------------------------------------------------
# quality metrics
# ---------------------------------------------------------------------------


def psnr(reference: ImageBuffer, candidate: ImageBuffer) -> float:
    """Peak signal-to-noise ratio in dB over a [0, 1] data range.

    Identical images return math.inf.
    """
    if reference.data.shape != candidate.data.shape:
        raise DimensionMismatch(
            f"psnr shape mismatch: {reference.data.shape} vs {candidate.data.shape}"
        )
    mse = float(np.mean((reference.data - candidate.data) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_kernel1d(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    phi = np.exp(-0.5 * (x / sigma) ** 2)
    return phi / phi.sum()


def _ssim_plane(a: np.ndarray, b: np.ndarray, win: int) -> float:
    """Gaussian-weighted SSIM of one plane; statistics use population weighting."""
    pad = (win - 1) // 2
    kernel = _gaussian_kernel1d(_SSIM_SIGMA, pad) if pad > 0 else np.ones(1)

    def filt(x: np.ndarray) -> np.ndarray:
        y = correlate1d(x, kernel, axis=0, mode="nearest")
        y = correlate1d(y, kernel, axis=1, mode="nearest")
        if pad > 0:
            y = y[pad:-pad, pad:-pad]
        return y

    ux, uy = filt(a), filt(b)
    uxx, uyy, uxy = filt(a * a), filt(b * b), filt(a * b)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy

    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    num = (2.0 * ux * uy + c1) * (2.0 * vxy + c2)
    den = (ux * ux + uy * uy + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def _ssim_with_flag(reference: ImageBuffer, candidate: ImageBuffer) -> tuple[float, bool]:
    if reference.data.shape != candidate.data.shape:
        raise DimensionMismatch(
            f"ssim shape mismatch: {reference.data.shape} vs {candidate.data.shape}"
        )
    side = min(reference.height, reference.width)
    reduced = side < _SSIM_WIN
    win = _SSIM_WIN if not reduced else max(1, side - (side + 1) % 2)
    values = [
        _ssim_plane(reference.data[:, :, c], candidate.data[:, :, c], win)
        for c in range(reference.channels)
    ]
    return float(np.mean(values)), reduced


def ssim(reference: ImageBuffer, candidate: ImageBuffer) -> float:
    """Mean SSIM over channels: 11×11 Gaussian window, σ=1.5, K1=0.01, K2=0.03.

    Images smaller than the window fall back to a reduced window (flag available
    via QualityScore.compute).
    """
    return _ssim_with_flag(reference, candidate)[0]


# ---------------------------------------------------------------------------
# color / logical channel space
# ---------------------------------------------------------------------------

# BT.601 luma weights; difference channels scaled and offset into [0, 1].
_YR, _YG, _YB = 0.299, 0.587, 0.114
_CB_SCALE = 1.772
_CR_SCALE = 1.402


def rgb_to_ycbcr(arr: np.ndarray) -> np.ndarray:
    r, g, b = arr[:, :, 0], arr[:, :, 1], arr[:, :, 2]
    y = _YR * r + _YG * g + _YB * b
    cb = 0.5 + (b - y) / _CB_SCALE
    cr = 0.5 + (r - y) / _CR_SCALE
    return np.stack([y, cb, cr], axis=2)


def ycbcr_to_rgb(arr: np.ndarray) -> np.ndarray:
    y, cb, cr = arr[:, :, 0], arr[:, :, 1], arr[:, :, 2]
    r = y + _CR_SCALE * (cr - 0.5)
    b = y + _CB_SCALE * (cb - 0.5)
    g = (y - _YR * r - _YB * b) / _YG
    return np.stack([r, g, b], axis=2)


def luma(image: ImageBuffer) -> np.ndarray:
    """Luma plane of an image (the plane itself for grayscale input)."""
    if image.channels == 1:
        return np.array(image.data[:, :, 0])
    arr = image.data
    return _YR * arr[:, :, 0] + _YG * arr[:, :, 1] + _YB * arr[:, :, 2]


def _highpass(y: np.ndarray) -> np.ndarray:
    """High-pass residual of a luma plane, offset-scaled into [0, 1]."""
    return 0.5 + (y - uniform_filter(y, size=_HIGHPASS_BOX, mode="reflect")) * 0.5


def valid_channels(image: ImageBuffer) -> tuple[int, ...]:
    if image.channels == 1:
        return LUMA_CHANNELS
    return (CHANNEL_Y, CHANNEL_CB, CHANNEL_CR, CHANNEL_Y_HIGHPASS)


def extract_channel(image: ImageBuffer, channel_id: int) -> np.ndarray:
    """One logical channel as an (H, W) float64 plane in [0, 1]."""
    if channel_id not in valid_channels(image):
        raise ChannelError(
            f"channel {channel_id} not available for a {image.channels}-channel image"
        )
    if image.channels == 1:
        y = np.array(image.data[:, :, 0])
        return y if channel_id == CHANNEL_Y else _highpass(y)
    ycc = rgb_to_ycbcr(image.data)
    if channel_id == CHANNEL_Y:
        return np.array(ycc[:, :, 0])
    if channel_id == CHANNEL_CB:
        return np.array(ycc[:, :, 1])
    if channel_id == CHANNEL_CR:
        return np.array(ycc[:, :, 2])
    return _highpass(ycc[:, :, 0])


def insert_channel(image: ImageBuffer, channel_id: int, plane: np.ndarray) -> ImageBuffer:
    """Rebuild the image with one logical channel replaced.

    insert_channel(image, c, extract_channel(image, c)) reproduces the image
    up to floating-point noise; outputs are clamped to [0, 1].
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.shape != (image.height, image.width):
        raise DimensionMismatch(
            f"plane shape {plane.shape} does not match image {image.height}×{image.width}"
        )
    if channel_id not in valid_channels(image):
        raise ChannelError(
            f"channel {channel_id} not available for a {image.channels}-channel image"
        )
    if image.channels == 1:
        y = image.data[:, :, 0]
        if channel_id == CHANNEL_Y:
            new_y = plane
        else:
            base = uniform_filter(np.array(y), size=_HIGHPASS_BOX, mode="reflect")
            new_y = base + (plane - 0.5) * 2.0
        return ImageBuffer(new_y[:, :, None])

    ycc = rgb_to_ycbcr(image.data)
    if channel_id == CHANNEL_Y:
        ycc[:, :, 0] = plane
    elif channel_id == CHANNEL_CB:
        ycc[:, :, 1] = plane
    elif channel_id == CHANNEL_CR:
        ycc[:, :, 2] = plane
    else:
        base = uniform_filter(np.array(ycc[:, :, 0]), size=_HIGHPASS_BOX, mode="reflect")
        ycc[:, :, 0] = base + (plane - 0.5) * 2.0
    return ImageBuffer(ycbcr_to_rgb(ycc))


# ---------------------------------------------------------------------------
# resampling
# ---------------------------------------------------------------------------


def resize_plane(plane: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resample of a 2-D plane to height×width."""
    src = np.ascontiguousarray(plane, dtype=np.float64)
    if src.shape == (height, width):
        return np.array(src)
    return cv2.resize(src, (width, height), interpolation=cv2.INTER_LINEAR)


def resize_image(image: ImageBuffer, width: int, height: int) -> ImageBuffer:
    if (image.width, image.height) == (width, height):
        return image
    src = np.ascontiguousarray(image.data)
    out = cv2.resize(src, (width, height), interpolation=cv2.INTER_LINEAR)
    if out.ndim == 2:
        out = out[:, :, None]
    return ImageBuffer(out)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------


def load_image(path: str | Path) -> ImageBuffer:
    """Load a PNG/JPEG file to a float image; 16-bit grayscale is supported."""
    with Image.open(path) as im:
        if im.mode in ("I", "I;16", "I;16B"):
            arr = np.asarray(im, dtype=np.float64) / 65535.0
            return ImageBuffer(arr[:, :, None])
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.float64) / 255.0
            return ImageBuffer(arr[:, :, None])
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float64) / 255.0
        return ImageBuffer(arr)


def save_png(image: ImageBuffer, path: str | Path) -> None:
    """Write an 8-bit PNG (lossless for 8-bit data)."""
    arr = image.to_uint8()
    if image.channels == 1:
        Image.fromarray(arr[:, :, 0], mode="L").save(path, format="PNG")
    else:
        Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def save_gray16_png(plane: np.ndarray, path: str | Path) -> None:
    """Write a [0, 1] plane as a 16-bit grayscale PNG."""
    arr = np.clip(np.rint(np.asarray(plane, dtype=np.float64) * 65535.0), 0, 65535)
    Image.fromarray(arr.astype(np.uint16)).save(path, format="PNG")


def load_gray16_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("I", "I;16", "I;16B"):
            im = im.convert("I;16")
        return np.asarray(im, dtype=np.float64) / 65535.0


def jpeg_roundtrip(image: ImageBuffer, quality: int) -> ImageBuffer:
    """Encode through a real JPEG codec at the given quality and decode back."""
    arr = image.to_uint8()
    mode = "L" if image.channels == 1 else "RGB"
    pil = Image.fromarray(arr[:, :, 0] if mode == "L" else arr, mode=mode)
    buf = io.BytesIO()
    pil.save(buf, format="JPEG", quality=int(quality))
    buf.seek(0)
    with Image.open(buf) as decoded:
        out = np.asarray(decoded.convert(mode), dtype=np.float64) / 255.0
    if out.ndim == 2:
        out = out[:, :, None]
    return ImageBuffer(out)


def save_jpeg(image: ImageBuffer, path: str | Path, quality: int) -> None:
    arr = image.to_uint8()
    mode = "L" if image.channels == 1 else "RGB"
    pil = Image.fromarray(arr[:, :, 0] if mode == "L" else arr, mode=mode)
    pil.save(path, format="JPEG", quality=int(quality))
