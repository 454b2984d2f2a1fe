"""Conventional intra modes: planar, DC and 33 angular directions.

HEVC-style construction on the single reference line returned by
`gather_one_line`, in real arithmetic and without reference smoothing or
boundary filters. Every mode is a linear map of the line, so each one is
stored as an n x (4N+1) matrix built once per block size.

Mode numbering:
    0      planar
    1      DC
    2-17   horizontal-like angular (10 = pure horizontal)
    18-34  vertical-like angular (26 = pure vertical)
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List

import numpy as np

from prediction.errors import DimensionError, ModeIndexError
from prediction.types import BlockSpec

PLANAR = 0
DC = 1
NUM_MODES = 35

# Displacement per row/column in 1/32 sample, modes 2..34
INTRA_PRED_ANGLE = [
    32, 26, 21, 17, 13, 9, 5, 2, 0,          # modes 2-10
    -2, -5, -9, -13, -17, -21, -26,          # modes 11-17
    -32, -26, -21, -17, -13, -9, -5, -2,     # modes 18-25
    0, 2, 5, 9, 13, 17, 21, 26, 32,          # modes 26-34
]

# round(256 * 32 / angle) for the negative angles
INV_ANGLE = {
    -2: -4096, -5: -1638, -9: -910, -13: -630,
    -17: -482, -21: -390, -26: -315, -32: -256,
}


@dataclass(frozen=True)
class ConventionalModeSet:
    """The S conventional modes in the candidate pool: planar, DC, then angular."""
    S: int = NUM_MODES

    def __post_init__(self):
        if not 2 <= self.S <= NUM_MODES:
            raise ValueError(f"Invalid conventional mode count: S={self.S} (must be 2..{NUM_MODES})")

    @property
    def modes(self) -> List[int]:
        return list(range(self.S))


def _corner(N: int) -> int:
    return 2 * N


def _left(N: int, j: int) -> int:
    """Line index of the left-column sample at row offset j (-1 = corner)."""
    return _corner(N) if j < 0 else 2 * N - 1 - j


def _top(N: int, i: int) -> int:
    """Line index of the top-row sample at column offset i (-1 = corner)."""
    return _corner(N) if i < 0 else 2 * N + 1 + i


def _angular_ref_index(N: int, mode: int, i: int) -> int:
    """Line index of projected reference ref[i] for an angular mode."""
    angle = INTRA_PRED_ANGLE[mode - 2]
    vertical = mode >= 18
    main, side = (_top, _left) if vertical else (_left, _top)
    if i >= 0:
        return main(N, i - 1)
    # negative side: project the perpendicular reference onto the main one
    return side(N, -1 + ((i * INV_ANGLE[angle] + 128) >> 8))


def _mode_matrix(N: int, mode: int) -> np.ndarray:
    n, width = N * N, 4 * N + 1
    M = np.zeros((n, width))
    if mode == PLANAR:
        top_right, bottom_left = _top(N, N), _left(N, N)
        for y in range(N):
            for x in range(N):
                row = M[y * N + x]
                row[_left(N, y)] += N - 1 - x
                row[top_right] += x + 1
                row[_top(N, x)] += N - 1 - y
                row[bottom_left] += y + 1
        return M / (2 * N)
    if mode == DC:
        for i in range(N):
            M[:, _top(N, i)] = 1.0
            M[:, _left(N, i)] = 1.0
        return M / (2 * N)

    angle = INTRA_PRED_ANGLE[mode - 2]
    vertical = mode >= 18
    for y in range(N):
        for x in range(N):
            # distance from the main reference, and position along it
            dist, pos = (y, x) if vertical else (x, y)
            proj = (dist + 1) * angle
            idx, frac = proj >> 5, proj & 31
            row = M[y * N + x]
            row[_angular_ref_index(N, mode, pos + idx + 1)] += (32 - frac) / 32.0
            if frac:
                row[_angular_ref_index(N, mode, pos + idx + 2)] += frac / 32.0
    return M


@lru_cache(maxsize=None)
def conventional_matrices(N: int) -> np.ndarray:
    """All 35 mode matrices for block size N, shape 35 x n x (4N+1)."""
    mats = np.stack([_mode_matrix(N, mode) for mode in range(NUM_MODES)])
    mats.setflags(write=False)
    return mats


def conventional_predict(line, mode: int, spec: BlockSpec) -> np.ndarray:
    """Prediction block (length n) of one conventional mode."""
    line = np.asarray(line, dtype=np.float64)
    if line.shape != (4 * spec.N + 1,):
        raise DimensionError(f"Reference line has shape {line.shape}, expected ({4 * spec.N + 1},)")
    if not 0 <= mode < NUM_MODES:
        raise ModeIndexError(f"Conventional mode {mode} out of range (0..{NUM_MODES - 1})")
    return conventional_matrices(spec.N)[mode] @ line


def conventional_predict_all(line, spec: BlockSpec, mode_set: ConventionalModeSet) -> np.ndarray:
    """Predictions of every mode in the set, shape S x n."""
    line = np.asarray(line, dtype=np.float64)
    if line.shape != (4 * spec.N + 1,):
        raise DimensionError(f"Reference line has shape {line.shape}, expected ({4 * spec.N + 1},)")
    return conventional_matrices(spec.N)[:mode_set.S] @ line
