"""Encoder-side mode decision by distortion.

Costs are measured in 8-bit sample units, so an SSE of 1.0 is one squared
code value.
"""

from dataclasses import dataclass, asdict
from typing import Optional, Sequence, Tuple

import numpy as np

from prediction.errors import DimensionError
from prediction.layers import clip_block

METRICS = ("sse", "satd")
FAMILIES = ("conventional", "learned")

_H4 = np.array([
    [1, 1, 1, 1],
    [1, -1, 1, -1],
    [1, 1, -1, -1],
    [1, -1, -1, 1],
], dtype=np.float64)


@dataclass
class ModeDecision:
    x: int
    y: int
    family: str
    mode: int
    cost: float
    pool: Optional[str] = None          # learned-model kind of the candidate pool, None if conventional only

    def to_dict(self) -> dict:
        return asdict(self)


def sse(pred: np.ndarray, target: np.ndarray) -> float:
    d = 255.0 * (pred - target)
    return float(np.sum(d * d))


def satd(pred: np.ndarray, target: np.ndarray) -> float:
    """Sum of absolute 4x4 Hadamard coefficients of the residual, halved."""
    n = pred.shape[-1]
    N = int(round(np.sqrt(n)))
    d = (255.0 * (pred - target)).reshape(N, N)
    total = 0.0
    for by in range(0, N, 4):
        for bx in range(0, N, 4):
            t = _H4 @ d[by:by + 4, bx:bx + 4] @ _H4.T
            total += float(np.sum(np.abs(t)))
    return total / 2.0


_COST = {'sse': sse, 'satd': satd}


def candidate_costs(candidates, target, metric: str = "sse") -> np.ndarray:
    """Cost of every candidate (rows of a C x n array) after clipping."""
    if metric not in _COST:
        raise ValueError(f"Invalid metric: '{metric}' (must be one of {METRICS})")
    P = clip_block(np.atleast_2d(np.asarray(candidates, dtype=np.float64)))
    t = np.asarray(target, dtype=np.float64)
    if P.shape[1] != t.shape[0]:
        raise DimensionError(f"Candidates have {P.shape[1]} samples, target has {t.shape[0]}")
    if metric == "sse":
        d = 255.0 * (P - t[None, :])
        return np.sum(d * d, axis=1)
    return np.array([satd(p, t) for p in P])


Candidate = Tuple[str, int, np.ndarray]


def select_mode(candidates: Sequence[Candidate], target, metric: str = "sse",
                x: int = 0, y: int = 0, pool: Optional[str] = None) -> ModeDecision:
    """Pick the cheapest of the (family, k, block) candidates.

    Blocks are clipped before costing and the earliest candidate wins ties,
    so listing conventional modes first keeps them on equal cost.
    """
    if len(candidates) == 0:
        raise ValueError("No candidate predictions to choose from")
    for family, _, _ in candidates:
        if family not in FAMILIES:
            raise ValueError(f"Invalid family: '{family}' (must be one of {FAMILIES})")
    costs = candidate_costs([block for _, _, block in candidates], target, metric)
    best = int(np.argmin(costs))
    family, k, _ = candidates[best]
    return ModeDecision(x=x, y=y, family=family, mode=int(k), cost=float(costs[best]), pool=pool)
