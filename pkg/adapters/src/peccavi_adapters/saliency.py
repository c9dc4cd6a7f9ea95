"""Saliency map generation emitting the 16-bit PNG + JSON sidecar interchange.

Methods:

``xrai`` / ``msinet``
    Neural saliency through a TorchScript module named by PECCAVI_XRAI_MODEL
    or PECCAVI_MSINET_MODEL.  The module must accept a (1, 3, H, W) float
    tensor in [0, 1] and return a single-channel map; fixed-resolution
    models are fine -- the output is resampled back to image dims.

``gradmag``
    Model-free fallback: smoothed gradient magnitude of the luma plane.
    Crude next to a trained model but self-contained, which keeps the
    interchange path testable on machines with no weights installed.

Every method ends the same way: values normalised to [0, 1] with peak 1
(when non-constant), written as ``<stem>.sal.png`` plus ``<stem>.sal.json``
carrying {w, h, source, version}.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter, sobel, zoom

from .common import (
    ENV_DEVICE,
    ENV_MSINET_MODEL,
    ENV_XRAI_MODEL,
    SAL_SIDECAR_VERSION,
    AdapterError,
    load_image,
    save_gray16,
    write_json,
)

TORCHSCRIPT_METHODS = {
    "xrai": ENV_XRAI_MODEL,
    "msinet": ENV_MSINET_MODEL,
}
METHODS = ("xrai", "msinet", "gradmag")


def _normalize(sal: np.ndarray) -> np.ndarray:
    sal = np.asarray(sal, dtype=np.float64)
    sal = sal - float(sal.min())
    peak = float(sal.max())
    if peak > 0:
        sal = sal / peak
    return sal


def _gradmag_map(image: np.ndarray) -> np.ndarray:
    if image.ndim == 3:
        luma = image @ np.array([0.299, 0.587, 0.114], dtype=np.float64)
    else:
        luma = image.astype(np.float64)
    smooth = gaussian_filter(luma, 2.0)
    gx = sobel(smooth, axis=1)
    gy = sobel(smooth, axis=0)
    mag = gaussian_filter(np.hypot(gx, gy), 6.0)
    return _normalize(mag)


def _torchscript_map(image: np.ndarray, method: str) -> np.ndarray:
    env_var = TORCHSCRIPT_METHODS[method]
    configured = os.environ.get(env_var)
    if not configured:
        raise AdapterError(
            f"saliency method '{method}' is not configured: set {env_var} "
            "to a TorchScript model file")
    model_path = Path(configured)
    if not model_path.is_file():
        raise AdapterError(f"{env_var} points at {model_path}, which does not exist")
    try:
        import torch
    except ImportError as exc:
        raise AdapterError(
            "neural saliency needs the optional neural dependencies; "
            "install with: pip install 'peccavi-adapters[neural]'") from exc

    device = os.environ.get(ENV_DEVICE, "cpu")
    model = torch.jit.load(str(model_path), map_location=device)
    model.eval()

    rgb = image if image.ndim == 3 else np.repeat(image[:, :, None], 3, axis=2)
    tensor = torch.from_numpy(
        np.ascontiguousarray(rgb.transpose(2, 0, 1), dtype=np.float32))[None].to(device)
    with torch.no_grad():
        out = model(tensor)
    if isinstance(out, (list, tuple)):
        out = out[0]
    sal = np.squeeze(out.detach().float().cpu().numpy())
    if sal.ndim != 2:
        raise AdapterError(
            f"model from {env_var} returned shape {sal.shape}; expected a "
            "single-channel map")
    h, w = image.shape[:2]
    if sal.shape != (h, w):
        sal = zoom(sal, (h / sal.shape[0], w / sal.shape[1]), order=1)
        sal = sal[:h, :w]
    return _normalize(sal)


def compute_saliency(image: np.ndarray, method: str) -> np.ndarray:
    """Saliency map for an in-memory image, [0, 1], same height/width."""
    if method in TORCHSCRIPT_METHODS:
        return _torchscript_map(image, method)
    if method == "gradmag":
        return _gradmag_map(image)
    raise AdapterError(
        f"unknown saliency method '{method}'; known methods: {', '.join(METHODS)}")


def neural_saliency(image_path: str | Path, method: str = "xrai",
                    out_dir: str | Path | None = None) -> tuple[Path, Path]:
    """Compute saliency for an image file and write the interchange pair.

    Returns (sal_png_path, sidecar_path).  out_dir defaults to the image's
    own directory, which is where the watermarking pipeline looks for
    external saliency.
    """
    image_path = Path(image_path)
    if not image_path.is_file():
        raise AdapterError(f"input image not found: {image_path}")
    image = load_image(image_path)
    sal = compute_saliency(image, method)

    out = Path(out_dir) if out_dir is not None else image_path.parent
    out.mkdir(parents=True, exist_ok=True)
    png_path = out / f"{image_path.stem}.sal.png"
    sidecar_path = out / f"{image_path.stem}.sal.json"
    save_gray16(sal, png_path)
    h, w = sal.shape
    write_json({"w": int(w), "h": int(h), "source": method,
                "version": SAL_SIDECAR_VERSION}, sidecar_path)
    return png_path, sidecar_path
