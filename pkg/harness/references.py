"""Reference sample gathering with border substitution.

References come from the original picture (no reconstruction loop), so a
sample is unavailable only when it falls outside the image. Unavailable
samples are substituted along a scan that runs up the left column
(bottom to top) and then along the top row (left to right): a leading
unavailable run copies the first available sample of the scan, every later
unavailable sample copies its predecessor.
"""

from typing import List, Tuple

import numpy as np

from prediction.errors import RegionError
from prediction.heatmap import layout_offsets, layout_positions
from prediction.types import BlockSpec, REF_LINES, as_ref_vector
from training.images import LumaImage

MID_GRAY = 0.5


def _check_block(img: LumaImage, x: int, y: int, spec: BlockSpec):
    if x < 0 or y < 0 or x + spec.N > img.width or y + spec.N > img.height:
        raise RegionError(f"Block at (x={x}, y={y}) with N={spec.N} lies outside the "
                          f"{img.width}x{img.height} image")


def _read(plane: np.ndarray, coords: List[Tuple[int, int]]) -> Tuple[np.ndarray, np.ndarray]:
    """Normalized values and availability of 8-bit samples at (row, col)
    coordinates; missing samples read as 0."""
    h, w = plane.shape
    rows = np.array([c[0] for c in coords], dtype=int)
    cols = np.array([c[1] for c in coords], dtype=int)
    avail = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    values = np.zeros(len(coords))
    values[avail] = plane[rows[avail], cols[avail]] / 255.0
    return values, avail


def substitute(values: np.ndarray, avail: np.ndarray, fallback: float = MID_GRAY) -> np.ndarray:
    """Fill unavailable entries of one scan by nearest-available replication."""
    out = np.array(values, dtype=np.float64)
    if not np.any(avail):
        out[:] = fallback
        return out
    first = int(np.argmax(avail))
    out[:first] = out[first]
    for i in range(first + 1, len(out)):
        if not avail[i]:
            out[i] = out[i - 1]
    return out


def line_scan(x: int, y: int, N: int, d: int) -> List[Tuple[int, int]]:
    """(row, col) of reference line d (1 = adjacent): left column bottom to top
    including the corner, then the top row left to right."""
    left = [(row, x - d) for row in range(y + N - 1, y - d - 1, -1)]
    top = [(y - d, col) for col in range(x - d + 1, x + N)]
    return left + top


def gather_references(img: LumaImage, x: int, y: int, spec: BlockSpec) -> np.ndarray:
    """The m learned-mode references of the block at (x, y), canonical order.

    Each of the four reference lines is substituted on its own. A line with
    no sample inside the image repeats the first substituted sample of the
    nearest inner line; with nothing available at all every sample is 0.5.
    """
    _check_block(img, x, y, spec)
    plane = img.samples
    N = spec.N
    if x >= REF_LINES and y >= REF_LINES:
        dy, dx = layout_offsets(spec)
        return as_ref_vector(plane[y + dy, x + dx] / 255.0, spec)

    filled = {}
    previous = None
    for d in range(1, REF_LINES + 1):
        coords = line_scan(x, y, N, d)
        values, avail = _read(plane, coords)
        if np.any(avail):
            line = substitute(values, avail)
        else:
            # an empty line implies every outer line is empty too
            line = np.full(len(coords), MID_GRAY if previous is None else previous[0])
        filled.update(zip(coords, line))
        previous = line

    r = np.empty(spec.m)
    for i, (_, _, _, dy, dx) in enumerate(layout_positions(spec)):
        r[i] = filled[(y + dy, x + dx)]
    return as_ref_vector(r, spec)


def gather_one_line(img: LumaImage, x: int, y: int, spec: BlockSpec) -> np.ndarray:
    """Conventional-mode references, length 4N + 1.

    Index 0..2N-1 run up the left column from row y+2N-1 to row y, index 2N
    is the corner (x-1, y-1), index 2N+1..4N run along the top row from
    column x to x+2N-1.
    """
    _check_block(img, x, y, spec)
    N = spec.N
    coords = [(row, x - 1) for row in range(y + 2 * N - 1, y - 1, -1)]
    coords.append((y - 1, x - 1))
    coords += [(y - 1, col) for col in range(x, x + 2 * N)]
    values, avail = _read(img.samples, coords)
    return substitute(values, avail)


def split_line(line: np.ndarray, N: int) -> Tuple[float, np.ndarray, np.ndarray]:
    """(corner, top[0..2N-1], left[0..2N-1]) from a `gather_one_line` array;
    left[i] is the sample at row y + i."""
    line = np.asarray(line, dtype=np.float64)
    left = line[:2 * N][::-1]
    return float(line[2 * N]), line[2 * N + 1:], left
