"""Shared fixtures for the adapter tests.

Sample images are synthesised here with numpy + PIL only, so the adapter
tests stay independent of the watermarking package's own test helpers.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image


def textured_rgb(seed: int, size: int = 256) -> np.ndarray:
    """A smooth but feature-rich RGB test image in [0, 1]."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1.0)
    r = 0.35 + 0.35 * np.sin(2 * np.pi * (2.5 * xx + rng.uniform(0, 1))) * np.cos(2 * np.pi * 1.5 * yy)
    g = 0.5 * xx + 0.3 * yy + 0.1 * np.sin(2 * np.pi * 4 * xx * yy)
    b = 0.6 - 0.3 * yy + 0.2 * np.cos(2 * np.pi * 3 * (xx - 0.5) ** 2)
    img = np.stack([r, g, b], axis=2)
    grid = np.mgrid[0:size, 0:size]
    for _ in range(3):
        cy, cx = rng.uniform(0.15 * size, 0.85 * size, size=2)
        rad = rng.uniform(size / 14, size / 6)
        d2 = (grid[0] - cy) ** 2 + (grid[1] - cx) ** 2
        img += rng.uniform(-0.25, 0.35) * np.exp(-d2 / (2 * rad * rad))[:, :, None]
    img += 0.015 * rng.standard_normal(img.shape)
    return np.clip(img, 0.0, 1.0)


def write_png(arr: np.ndarray, path: Path) -> Path:
    q = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    mode = "L" if q.ndim == 2 else "RGB"
    Image.fromarray(q, mode=mode).save(path)
    return path


def write_clean_corpus(directory: Path, n: int = 50, size: int = 64) -> Path:
    """Small grayscale corpus for calibrating a detection key."""
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(n):
        rng = np.random.default_rng(8800 + i)
        yy, xx = np.mgrid[0:size, 0:size] / (size - 1.0)
        g = 0.25 + 0.5 * xx * rng.uniform(0.5, 1.0) + 0.2 * np.sin(2 * np.pi * yy * rng.uniform(1, 3))
        g = np.clip(g + 0.03 * rng.standard_normal(g.shape), 0.0, 1.0)
        write_png(g, directory / f"clean{i:02d}.png")
    return directory


@pytest.fixture()
def sample_png(tmp_path) -> Path:
    return write_png(textured_rgb(401), tmp_path / "sample.png")
