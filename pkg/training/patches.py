"""Training patches: reference region + target block cut from luma images.

Training only uses fully interior positions, so no padding is ever
involved here; padded reference gathering lives in the evaluation harness.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from prediction.errors import RegionError
from prediction.heatmap import layout_offsets
from prediction.types import BlockSpec, REF_LINES, as_ref_vector
from training.images import LumaImage

logger = logging.getLogger(__name__)


@dataclass
class PatchSample:
    """One training example: references r (length m) and target block (length n)."""
    r: np.ndarray
    target: np.ndarray
    source: Optional[Tuple[int, int, int]] = None   # (image index, x, y)


def _valid_extent(size: int, N: int) -> int:
    """Number of valid top-left coordinates along one axis."""
    return max(0, size - N - REF_LINES + 1)


def valid_position_count(img: LumaImage, spec: BlockSpec) -> int:
    return _valid_extent(img.width, spec.N) * _valid_extent(img.height, spec.N)


def extract_patch(img: LumaImage, x: int, y: int, spec: BlockSpec) -> PatchSample:
    """Cut the block at column x, row y and its 4-line reference region.

    Raises RegionError unless the whole region lies inside the image.
    """
    N = spec.N
    if x < REF_LINES or y < REF_LINES or x + N > img.width or y + N > img.height:
        raise RegionError(f"Patch at (x={x}, y={y}) with N={N} needs x, y >= {REF_LINES} and "
                          f"x+N <= {img.width}, y+N <= {img.height}")
    dy, dx = layout_offsets(spec)
    r = as_ref_vector(img.samples[y + dy, x + dx] / 255.0, spec)
    target = img.samples[y:y + N, x:x + N].astype(np.float64).ravel() / 255.0
    return PatchSample(r=r, target=target)


def sample_dataset(images: Sequence[LumaImage], count: int, spec: BlockSpec,
                   seed: int) -> List[PatchSample]:
    """Draw `count` patches uniformly over all valid (image, x, y) triples."""
    if count < 0:
        raise ValueError(f"Invalid patch count: {count} (must be >= 0)")
    if count == 0:
        return []
    per_image = np.array([valid_position_count(img, spec) for img in images], dtype=np.int64)
    total = int(per_image.sum())
    if total == 0:
        raise ValueError(f"No valid {spec.N}x{spec.N} patch positions in {len(images)} images")
    for i in np.flatnonzero(per_image == 0):
        logger.debug("Image %d (%s) too small for N=%d, skipped", i, images[i].name, spec.N)

    offsets = np.concatenate([[0], np.cumsum(per_image)])
    rng = np.random.default_rng(seed)
    flat = rng.integers(0, total, size=count)

    samples = []
    for idx in flat:
        i = int(np.searchsorted(offsets, idx, side='right') - 1)
        local = int(idx - offsets[i])
        cols = _valid_extent(images[i].width, spec.N)
        x = REF_LINES + local % cols
        y = REF_LINES + local // cols
        patch = extract_patch(images[i], x, y, spec)
        patch.source = (i, x, y)
        samples.append(patch)
    logger.info("Sampled %d patches (N=%d) from %d images", count, spec.N, len(images))
    return samples


def stack_dataset(samples: Sequence[PatchSample]) -> Tuple[np.ndarray, np.ndarray]:
    """Stack samples into (R: B x m, T: B x n) float64 arrays."""
    if not samples:
        raise ValueError("Dataset is empty")
    R = np.stack([s.r for s in samples]).astype(np.float64)
    T = np.stack([s.target for s in samples]).astype(np.float64)
    return R, T
