"""Shared synthetic corpora and a session-calibrated key.

Fixture images are 256x256 RGB in four texture tiers:
  A  smooth gradients + gaussian blobs (easy content)
  B  A plus a mid-frequency sinusoidal texture
  C  A plus a fine checkered texture and stronger noise
  F  near-flat gradient with one soft blob (fragile content)
"""

import numpy as np
import pytest

from peccavi import ImageBuffer, calibrate, new_key

KEY_SEED = 424242
FIXTURE_TIERS = ["A"] * 7 + ["B"] * 6 + ["C"] * 4 + ["F"] * 3
FIXTURE_BASE_SEED = 3000
CLEAN_BASE_SEED = 9000


def synth_image(seed: int, tier: str, size: int = 256) -> ImageBuffer:
    r = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1.0)

    if tier == "F":
        a, b = r.uniform(0.3, 0.6, 2)
        base = np.stack(
            [a + 0.25 * yy, b + 0.2 * xx, 0.5 + 0.05 * (xx + yy)], axis=-1
        )
        cy, cx = r.uniform(0.3, 0.7, 2)
        base += (0.08 * np.exp(-(((yy - cy) * 5) ** 2 + ((xx - cx) * 5) ** 2)))[..., None]
        return ImageBuffer.from_array(np.clip(base + r.normal(0, 0.004, base.shape), 0, 1))

    f1, f2 = r.uniform(2, 9, 2)
    base = np.stack(
        [
            0.25 + 0.45 * np.abs(np.sin(f1 * yy + r.uniform(0, 3))),
            0.35 + 0.35 * np.abs(np.cos(f2 * xx + r.uniform(0, 3))),
            0.3 + 0.3 * (xx * yy),
        ],
        axis=-1,
    )
    for _ in range(3):
        cy, cx = r.uniform(0.2, 0.8, 2)
        sharp, amp = r.uniform(4, 12), r.uniform(0.1, 0.25)
        base += (amp * np.exp(-(((yy - cy) * sharp) ** 2 + ((xx - cx) * sharp) ** 2)))[..., None]

    if tier == "A":
        noise = 0.01
    elif tier == "B":
        fy, fx = r.uniform(15, 35, 2)
        base += (0.06 * np.sin(2 * np.pi * (fy * yy + fx * xx)))[..., None]
        noise = 0.02
    elif tier == "C":
        fy, fx = r.uniform(35, 70, 2)
        base += (0.09 * np.sign(np.sin(2 * np.pi * fy * yy) * np.sin(2 * np.pi * fx * xx)))[
            ..., None
        ]
        noise = 0.04
    else:
        raise ValueError(f"unknown tier {tier!r}")
    return ImageBuffer.from_array(np.clip(base + r.normal(0, noise, base.shape), 0, 1))


def tiny_corpus_images(n: int = 50, seed0: int = 7000) -> list[ImageBuffer]:
    """Small 64x64 images for fast calibration paths."""
    images = []
    for i in range(n):
        rng = np.random.default_rng(seed0 + i)
        g = np.linspace(0.25, 0.75, 64)
        base = g[None, :, None] * np.ones((64, 1, 3))
        base += 0.15 * np.sin(np.linspace(0, rng.uniform(4, 9), 64))[:, None, None]
        base += rng.normal(0, 0.03, (64, 64, 3))
        images.append(ImageBuffer.from_array(np.clip(base, 0, 1)))
    return images


def build_fixture_corpus(n: int = 20) -> list[ImageBuffer]:
    tiers = FIXTURE_TIERS
    return [synth_image(FIXTURE_BASE_SEED + i, tiers[i % len(tiers)]) for i in range(n)]


def build_clean_corpus(n: int = 50) -> list[ImageBuffer]:
    tiers = FIXTURE_TIERS
    return [synth_image(CLEAN_BASE_SEED + i, tiers[i % len(tiers)]) for i in range(n)]


@pytest.fixture(scope="session")
def fixture_corpus():
    return build_fixture_corpus()


@pytest.fixture(scope="session")
def clean_corpus():
    return build_clean_corpus()


@pytest.fixture(scope="session")
def calibrated_key(clean_corpus):
    return calibrate(new_key(seed=KEY_SEED), clean_corpus)


@pytest.fixture(scope="session")
def uncalibrated_key():
    return new_key(seed=KEY_SEED)
