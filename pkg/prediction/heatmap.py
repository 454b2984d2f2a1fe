"""Reference-layout views of predictor rows.

A predictor row holds one coefficient per reference sample. The flattened
reference vector is ordered corner (4x4), top (4xN), left (Nx4), each
row-major; `layout_positions` gives the image offset of every entry
relative to the block's top-left sample, and the heatmap views are built
from that single table.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from prediction.errors import DimensionError
from prediction.types import BlockSpec, REF_LINES


def layout_positions(spec: BlockSpec) -> List[Tuple[str, int, int, int, int]]:
    """(region, region_row, region_col, dy, dx) for every reference index.

    dy/dx are offsets from the block's top-left sample, so the reference
    sample of index i sits at image position (y + dy, x + dx).
    """
    L, N = REF_LINES, spec.N
    out = []
    for row in range(L):
        for col in range(L):
            out.append(('corner', row, col, row - L, col - L))
    for row in range(L):
        for col in range(N):
            out.append(('top', row, col, row - L, col))
    for row in range(N):
        for col in range(L):
            out.append(('left', row, col, row, col - L))
    return out


def layout_offsets(spec: BlockSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Arrays (dy, dx) of length m, in reference-vector order."""
    pos = layout_positions(spec)
    return (np.array([p[3] for p in pos], dtype=int),
            np.array([p[4] for p in pos], dtype=int))


@dataclass
class HeatmapGrid:
    """Coefficients of one prediction sample, laid out over the references."""
    spec: BlockSpec
    target: Tuple[int, int]                 # (row, col) inside the N x N block
    corner: np.ndarray                      # 4 x 4
    top: np.ndarray                         # 4 x N
    left: np.ndarray                        # N x 4
    vmin: float
    vmax: float


def predictor_heatmap(row, spec: BlockSpec, target: Tuple[int, int]) -> HeatmapGrid:
    row = np.asarray(row, dtype=np.float64)
    if row.shape != (spec.m,):
        raise DimensionError(f"Predictor row has shape {row.shape}, expected ({spec.m},)")
    tr, tc = target
    if not (0 <= tr < spec.N and 0 <= tc < spec.N):
        raise DimensionError(f"Target sample {target} outside the {spec.N}x{spec.N} block")
    L, N = REF_LINES, spec.N
    c_end = L * L
    t_end = c_end + L * N
    return HeatmapGrid(
        spec=spec,
        target=(int(tr), int(tc)),
        corner=row[:c_end].reshape(L, L).copy(),
        top=row[c_end:t_end].reshape(L, N).copy(),
        left=row[t_end:].reshape(N, L).copy(),
        vmin=float(row.min()),
        vmax=float(row.max()),
    )


def flatten_heatmap(grid: HeatmapGrid) -> np.ndarray:
    return np.concatenate([grid.corner.ravel(), grid.top.ravel(), grid.left.ravel()])


def heatmap_canvas(grid: HeatmapGrid, scale: float) -> np.ndarray:
    """Render a grid as a (4+N) x (4+N) 8-bit image.

    128 is a zero coefficient; +scale maps to 255 and -scale to 1. The block
    area itself is left at 128. scale <= 0 (see `matrix_scale`) renders
    flat mid-gray.
    """
    L, N = REF_LINES, grid.spec.N
    values = np.zeros((L + N, L + N))
    values[:L, :L] = grid.corner
    values[:L, L:] = grid.top
    values[L:, :L] = grid.left
    if scale <= 0:
        return np.full((L + N, L + N), 128, dtype=np.uint8)
    img = np.rint(128.0 + 127.0 * values / scale)
    img[L:, L:] = 128
    return np.clip(img, 0, 255).astype(np.uint8)


def matrix_scale(M) -> float:
    """Color scale for a predictor matrix: max |coefficient|, or 0 when the
    matrix carries no variation to show."""
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0 or M.max() == M.min():
        return 0.0
    return float(np.max(np.abs(M)))
