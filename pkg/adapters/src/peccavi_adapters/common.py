"""Shared plumbing for the adapter package: errors, env contract, image IO.

The adapters talk to the watermarking pipeline only through files, so the
helpers here pin down the interchange conventions once:

* 8-bit PNG in, float32 in [0, 1] out (and back) for working images;
* 16-bit grayscale PNG for saliency maps, code = round(value * 65535);
* small JSON sidecars/manifests written with sorted keys and a version field.

Model and backend selection is environment-driven; the env var names below
are the public contract and every "not configured" error spells out which
variable to set.
"""

from __future__ import annotations

import json
import os
import shlex
import subprocess
from pathlib import Path

import numpy as np
from PIL import Image

ENV_BACKEND = "PECCAVI_PARAPHRASE_BACKEND"
ENV_DIFFUSION_MODEL = "PECCAVI_DIFFUSION_MODEL"
ENV_XRAI_MODEL = "PECCAVI_XRAI_MODEL"
ENV_MSINET_MODEL = "PECCAVI_MSINET_MODEL"
ENV_CAPTION_CMD = "PECCAVI_CAPTION_CMD"
ENV_DEVICE = "PECCAVI_DEVICE"

SAL_SIDECAR_VERSION = 1
PARA_MANIFEST_VERSION = 1


class AdapterError(RuntimeError):
    """Raised when a backend or model is unavailable or a request is invalid."""


def load_image(path: str | Path) -> np.ndarray:
    """Load a PNG/JPEG as float32 in [0, 1], shape (H, W) or (H, W, 3)."""
    img = Image.open(path)
    if img.mode in ("L", "I;16", "I"):
        img = img.convert("L")
    elif img.mode != "RGB":
        img = img.convert("RGB")
    arr = np.asarray(img, dtype=np.float32) / 255.0
    return arr


def save_image(arr: np.ndarray, path: str | Path) -> None:
    """Save a float [0, 1] array as an 8-bit PNG."""
    a = np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0)
    q = np.rint(a * 255.0).astype(np.uint8)
    mode = "L" if q.ndim == 2 else "RGB"
    Image.fromarray(q, mode=mode).save(path)


def save_gray16(plane: np.ndarray, path: str | Path) -> None:
    """Write a [0, 1] plane as 16-bit grayscale PNG (code = round(v * 65535))."""
    a = np.clip(np.asarray(plane, dtype=np.float64), 0.0, 1.0)
    q = np.rint(a * 65535.0).astype(np.uint16)
    Image.fromarray(q).save(path, format="PNG")


def write_json(payload: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def resolve_caption(image_path: str | Path, caption: str | None) -> str | None:
    """Return the caption to record: the explicit one, or the output of the
    configured captioner command, or None.

    The captioner is any executable named by PECCAVI_CAPTION_CMD; it is run
    with the image path appended and its stdout (stripped) becomes the
    caption.  A missing or failing captioner is not an error -- captions are
    provenance, not a requirement.
    """
    if caption is not None:
        return caption
    cmd = os.environ.get(ENV_CAPTION_CMD)
    if not cmd:
        return None
    argv = shlex.split(cmd) + [str(image_path)]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=120)
    except (OSError, subprocess.TimeoutExpired):
        return None
    if proc.returncode != 0:
        return None
    text = proc.stdout.strip()
    return text or None
