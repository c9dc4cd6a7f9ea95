"""Non-melting-point selection: regions that stay salient across paraphrases.

A region's match count n over the K paraphrased variants drives its watermark
strength, W = max(0.1, 1 - 0.25*(n-1)), so rarely-recurring regions get the
strongest marks.  Survivors of non-maximum suppression are snapped outward to
a patch grid and squared up so the detector's square scan windows line up with
them; one extra randomly placed decoy patch hardens the set against
saliency-guided removal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyRegionError, PeccaviError
from .imagecore import ImageBuffer, LUMA_CHANNELS, NUM_CHANNELS
from .saliency import Region

NMP_SCHEMA_VERSION = 1
STRENGTH_LEVELS = (1.0, 0.75, 0.5, 0.25, 0.1)
_MAX_NMP_SIDE = 96  # largest square side the detector scans at native scale
_RANDOM_PATCH_ATTEMPTS = 1000


def strength_for_matches(n: int) -> float:
    """Watermark strength for a region matched in n of the K variants."""
    if n < 1:
        raise ValueError(f"match count must be ≥ 1, got {n}")
    return max(0.1, 1.0 - 0.25 * (n - 1))


def stability_score(n: int, k: int) -> float:
    """1 - n/K; lower values mean the region recurs more consistently."""
    if k < 1:
        raise ValueError("variant count K must be ≥ 1")
    return 1.0 - n / k


# ---------------------------------------------------------------------------
# box geometry
# ---------------------------------------------------------------------------


def _box(r) -> tuple[int, int, int, int]:
    if isinstance(r, tuple):
        return r[:4]
    return (r.x, r.y, r.w, r.h)


def iou(a, b) -> float:
    """Intersection-over-union of two boxes carrying x, y, w, h."""
    ax, ay, aw, ah = _box(a)
    bx, by, bw, bh = _box(b)
    ix = max(0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    if inter == 0:
        return 0.0
    union = aw * ah + bw * bh - inter
    return inter / union


def nms(regions: list[Region], threshold: float = 0.5) -> list[Region]:
    """Greedy non-maximum suppression.

    Regions are visited by descending score (ties by smaller (y, x)); one is
    kept iff its IoU with every already-kept region is ≤ threshold.
    """
    ordered = sorted(regions, key=lambda r: (-r.score, r.y, r.x))
    kept: list[Region] = []
    for r in ordered:
        if all(iou(r, k) <= threshold for k in kept):
            kept.append(r)
    return kept


def union_box_iou(
    regions_a: list, regions_b: list, width: int, height: int
) -> float:
    """IoU of the pixel unions covered by two region lists."""
    if not regions_a and not regions_b:
        return 1.0
    mask_a = np.zeros((height, width), dtype=bool)
    mask_b = np.zeros((height, width), dtype=bool)
    for r, m in ((regions_a, mask_a), (regions_b, mask_b)):
        for box in r:
            x, y, w, h = _box(box)
            m[max(0, y) : y + h, max(0, x) : x + w] = True
    union = np.logical_or(mask_a, mask_b).sum()
    if union == 0:
        return 1.0
    inter = np.logical_and(mask_a, mask_b).sum()
    return float(inter / union)


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParaphraseSet:
    """An original image with its K paraphrased variants and their regions."""

    original: ImageBuffer
    variants: tuple[ImageBuffer, ...]
    variant_regions: tuple[tuple[Region, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(self.variants))
        object.__setattr__(
            self, "variant_regions", tuple(tuple(v) for v in self.variant_regions)
        )
        if len(self.variants) < 1:
            raise ValueError("a paraphrase set needs at least one variant")
        if len(self.variant_regions) != len(self.variants):
            raise DimensionMismatch("variant_regions must align 1:1 with variants")
        dims = (self.original.height, self.original.width)
        for v in self.variants:
            if (v.height, v.width) != dims:
                raise DimensionMismatch("variant dimensions must match the original")

    @property
    def k(self) -> int:
        return len(self.variants)


@dataclass(frozen=True)
class Nmp:
    """A watermark site: grid-aligned square box with strength and channel."""

    x: int
    y: int
    w: int
    h: int
    n: int
    stability: float
    strength: float
    channel: int
    is_random_patch: bool = False

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError("NMP box must be non-empty")
        if not 0 <= self.channel < NUM_CHANNELS:
            raise ValueError(f"channel must be in [0, {NUM_CHANNELS}), got {self.channel}")
        if not 0.1 <= self.strength <= 1.0:
            raise ValueError(f"strength must lie in [0.1, 1.0], got {self.strength}")


@dataclass(frozen=True)
class NmpSet:
    """NMPs for one image, plus the grid/seed needed to reproduce them."""

    nmps: tuple[Nmp, ...]
    width: int
    height: int
    grid_size: int
    seed: int
    warning: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "nmps", tuple(self.nmps))
        if len(self.nmps) < 1:
            raise EmptyRegionError("an NMP set always contains at least one entry")

    def to_json(self) -> str:
        payload = {
            "version": NMP_SCHEMA_VERSION,
            "width": self.width,
            "height": self.height,
            "grid_size": self.grid_size,
            "seed": self.seed,
            "warning": self.warning,
            "nmps": [
                {
                    "x": n.x,
                    "y": n.y,
                    "w": n.w,
                    "h": n.h,
                    "n": n.n,
                    "stability": n.stability,
                    "strength": n.strength,
                    "channel": n.channel,
                    "is_random": n.is_random_patch,
                }
                for n in self.nmps
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "NmpSet":
        data = json.loads(text)
        if data.get("version") != NMP_SCHEMA_VERSION:
            raise PeccaviError(f"unsupported NMP schema version: {data.get('version')!r}")
        nmps = tuple(
            Nmp(
                x=e["x"],
                y=e["y"],
                w=e["w"],
                h=e["h"],
                n=e["n"],
                stability=e["stability"],
                strength=e["strength"],
                channel=e["channel"],
                is_random_patch=e["is_random"],
            )
            for e in data["nmps"]
        )
        return cls(
            nmps=nmps,
            width=data["width"],
            height=data["height"],
            grid_size=data["grid_size"],
            seed=data["seed"],
            warning=data.get("warning"),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "NmpSet":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class NmpConfig:
    """Knobs for NMP selection."""

    iou_match: float = 0.5
    nms_threshold: float = 0.5
    max_nmps: int | None = None
    grid_size: int = 8
    seed: int = 0
    channel_offset: int = 0


# ---------------------------------------------------------------------------
# grid snapping
# ---------------------------------------------------------------------------


def _grid_boundaries(dim: int, cells: int) -> list[int]:
    return [(i * dim) // cells for i in range(cells + 1)]


def _fit_axis(i0: int, i1: int, side: int, cells: int) -> tuple[int, int]:
    span = i1 - i0
    if span < side:
        i0 -= (side - span) // 2
    elif span > side:
        i0 += (span - side) // 2
    i0 = min(max(i0, 0), cells - side)
    return i0, i0 + side


def _snap_square(
    x: int, y: int, w: int, h: int, width: int, height: int, grid: int
) -> tuple[int, int, int, int]:
    """Snap a box outward to grid cells, then square it up.

    The square side is capped so the box stays within the detector's largest
    native scan scale.
    """
    bx = _grid_boundaries(width, grid)
    by = _grid_boundaries(height, grid)
    i0 = max(0, int(np.searchsorted(bx, x, side="right")) - 1)
    i1 = min(grid, int(np.searchsorted(bx, min(x + w, width), side="left")))
    j0 = max(0, int(np.searchsorted(by, y, side="right")) - 1)
    j1 = min(grid, int(np.searchsorted(by, min(y + h, height), side="left")))
    i1 = max(i1, i0 + 1)
    j1 = max(j1, j0 + 1)

    cell_w = width / grid
    cell_h = height / grid
    cap = max(1, min(int(_MAX_NMP_SIDE // cell_w), int(_MAX_NMP_SIDE // cell_h), grid))
    side = min(max(i1 - i0, j1 - j0), cap)
    i0, i1 = _fit_axis(i0, i1, side, grid)
    j0, j1 = _fit_axis(j0, j1, side, grid)
    return bx[i0], by[j0], bx[i1] - bx[i0], by[j1] - by[j0]


def _channel_order(seed: int) -> list[int]:
    """Key-seeded channel rotation; rotated so a luma-family channel leads."""
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0x43]))
    perm = [int(c) for c in rng.permutation(NUM_CHANNELS)]
    first_luma = next(i for i, c in enumerate(perm) if c in LUMA_CHANNELS)
    return perm[first_luma:] + perm[:first_luma]


# ---------------------------------------------------------------------------
# NMP computation
# ---------------------------------------------------------------------------


def compute_nmps(
    pset: ParaphraseSet, original_regions: list[Region], config: NmpConfig
) -> NmpSet:
    """Select watermark sites from regions that recur across variants.

    Every original region is matched (IoU ≥ iou_match) against each variant's
    regions; a variant contributes at most one match.  Regions matched at least
    once survive to NMS, are snapped to the grid, and get strength/stability
    from their match count.  When nothing recurs, a central default box is
    used instead.
    """
    k = pset.k
    width, height = pset.original.width, pset.original.height

    matched: list[tuple[Region, int]] = []
    for region in original_regions:
        n = sum(
            1
            for regions in pset.variant_regions
            if any(iou(region, q) >= config.iou_match for q in regions)
        )
        if n >= 1:
            matched.append((region, n))

    entries: list[tuple[int, int, int, int, int]] = []  # x, y, w, h, n
    if matched:
        counts = {(_box(r)): n for r, n in matched}
        survivors = nms([r for r, _ in matched], config.nms_threshold)
        if config.max_nmps is not None:
            survivors = survivors[: config.max_nmps]
        for r in survivors:
            x, y, w, h = _snap_square(r.x, r.y, r.w, r.h, width, height, config.grid_size)
            entries.append((x, y, w, h, counts[_box(r)]))
    else:
        side = int(round(0.5 * math.sqrt(width * height)))
        side = min(side, width, height)
        x0 = (width - side) // 2
        y0 = (height - side) // 2
        x, y, w, h = _snap_square(x0, y0, side, side, width, height, config.grid_size)
        entries.append((x, y, w, h, 1))

    # snapping can re-introduce overlap; drop later boxes that now collide
    kept: list[tuple[int, int, int, int, int]] = []
    for e in entries:
        if all(iou(e[:4], p[:4]) <= config.nms_threshold for p in kept):
            kept.append(e)

    order = _channel_order(config.seed)
    nmps = tuple(
        Nmp(
            x=x,
            y=y,
            w=w,
            h=h,
            n=n,
            stability=stability_score(n, k),
            strength=strength_for_matches(n),
            channel=order[(idx + config.channel_offset) % NUM_CHANNELS],
        )
        for idx, (x, y, w, h, n) in enumerate(kept)
    )
    return NmpSet(
        nmps=nmps,
        width=width,
        height=height,
        grid_size=config.grid_size,
        seed=config.seed,
    )


def add_random_patch(nmp_set: NmpSet, seed: int, channel_offset: int = 0) -> NmpSet:
    """Append one decoy patch: smallest NMP's shape at a random free spot.

    Placement candidates come from a seeded generator restricted to grid
    boundaries; after 1000 failed attempts the set is returned unchanged with
    a warning recorded.
    """
    if any(n.is_random_patch for n in nmp_set.nmps):
        raise PeccaviError("NMP set already carries a random patch")

    template = min(nmp_set.nmps, key=lambda n: (n.w * n.h, n.y, n.x))
    w, h = template.w, template.h
    bx = [b for b in _grid_boundaries(nmp_set.width, nmp_set.grid_size) if b + w <= nmp_set.width]
    by = [b for b in _grid_boundaries(nmp_set.height, nmp_set.grid_size) if b + h <= nmp_set.height]

    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0x52]))
    placed = None
    if bx and by:
        for _ in range(_RANDOM_PATCH_ATTEMPTS):
            x = bx[int(rng.integers(len(bx)))]
            y = by[int(rng.integers(len(by)))]
            if all(iou((x, y, w, h), n) == 0.0 for n in nmp_set.nmps):
                placed = (x, y)
                break

    if placed is None:
        return replace(nmp_set, warning="no non-overlapping spot for a random patch")

    order = _channel_order(nmp_set.seed)
    channel = order[(len(nmp_set.nmps) + channel_offset) % NUM_CHANNELS]
    patch = Nmp(
        x=placed[0],
        y=placed[1],
        w=w,
        h=h,
        n=0,
        stability=0.0,
        strength=1.0,
        channel=channel,
        is_random_patch=True,
    )
    return replace(nmp_set, nmps=nmp_set.nmps + (patch,))
