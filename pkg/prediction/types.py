"""Data types for block geometry and the three predictor families.

These dataclasses are the contract between training, collapse, evaluation
and persistence. Arrays are float64, row-major, and frozen (read-only)
once a model is constructed.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from prediction.errors import DimensionError

SUPPORTED_SIZES = (4, 8, 16)
REF_LINES = 4                               # reference lines above / left of the block

MODEL_KINDS = ("nn", "linear_no_intercept", "linear_with_intercept")


def _frozen(a, shape: Tuple[int, ...], name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.shape != shape:
        raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coefficients")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BlockSpec:
    """Square block geometry.

    N is the block side, n = N^2 prediction samples, m = 8(N + 2) reference
    samples (4 lines above, 4 lines left, 4x4 corner), q = 4(N + 1) hidden
    units of the reduced layer.
    """
    N: int

    def __post_init__(self):
        if self.N not in SUPPORTED_SIZES:
            raise ValueError(f"Invalid block size N={self.N} (must be one of {{4, 8, 16}})")

    @property
    def n(self) -> int:
        return self.N * self.N

    @property
    def m(self) -> int:
        return 8 * (self.N + 2)

    @property
    def q(self) -> int:
        return 4 * (self.N + 1)

    def to_dict(self) -> Dict[str, int]:
        return {'N': self.N, 'n': self.n, 'm': self.m, 'q': self.q}


def as_ref_vector(r, spec: BlockSpec) -> np.ndarray:
    """Validate and return a reference vector (length m, samples in [0, 1])."""
    arr = np.asarray(r, dtype=np.float64)
    if arr.shape != (spec.m,):
        raise DimensionError(f"Reference vector has shape {arr.shape}, expected ({spec.m},)")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("Reference samples must lie in [0, 1]")
    return arr


@dataclass(frozen=True, eq=False)
class NNModel:
    """Four-layer network: shared layers 1-3 and one output head per mode."""
    spec: BlockSpec
    W1: np.ndarray                          # m x m
    b1: np.ndarray                          # m
    W2: np.ndarray                          # m x m
    b2: np.ndarray                          # m
    W3: np.ndarray                          # q x m
    b3: np.ndarray                          # q
    W4: np.ndarray                          # K x n x q
    b4: np.ndarray                          # K x n

    kind = "nn"

    def __post_init__(self):
        s = self.spec
        W4 = np.asarray(self.W4)
        if W4.ndim != 3 or W4.shape[0] < 1:
            raise DimensionError(f"W4 must be K x n x q with K >= 1, got shape {W4.shape}")
        K = W4.shape[0]
        for name, shape in (('W1', (s.m, s.m)), ('b1', (s.m,)),
                            ('W2', (s.m, s.m)), ('b2', (s.m,)),
                            ('W3', (s.q, s.m)), ('b3', (s.q,)),
                            ('W4', (K, s.n, s.q)), ('b4', (K, s.n))):
            object.__setattr__(self, name, _frozen(getattr(self, name), shape, name))

    @property
    def K(self) -> int:
        return self.W4.shape[0]

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name)
                for name in ('W1', 'b1', 'W2', 'b2', 'W3', 'b3', 'W4', 'b4')}

    @classmethod
    def zeros(cls, spec: BlockSpec, K: int) -> "NNModel":
        s = spec
        return cls(spec, np.zeros((s.m, s.m)), np.zeros(s.m), np.zeros((s.m, s.m)), np.zeros(s.m),
                   np.zeros((s.q, s.m)), np.zeros(s.q), np.zeros((K, s.n, s.q)), np.zeros((K, s.n)))


@dataclass(frozen=True, eq=False)
class LinearNoIntercept:
    """Per-mode row-normalized matrices A[k] (n x m); prediction is A[k] r."""
    spec: BlockSpec
    A: np.ndarray                           # K x n x m
    degenerate_rows: Dict[int, List[int]] = field(default_factory=dict, compare=False)

    kind = "linear_no_intercept"
    ROW_SUM_TOLERANCE = 1e-9

    def __post_init__(self):
        A = np.asarray(self.A)
        if A.ndim != 3 or A.shape[0] < 1:
            raise DimensionError(f"A must be K x n x m with K >= 1, got shape {A.shape}")
        object.__setattr__(self, 'A', _frozen(A, (A.shape[0], self.spec.n, self.spec.m), 'A'))
        deviation = np.abs(self.A.sum(axis=2) - 1.0)
        if not np.all(deviation <= self.ROW_SUM_TOLERANCE):
            worst = float(np.max(deviation))
            raise ValueError(f"Rows of A must sum to 1 (worst deviation {worst:.3g})")

    @property
    def K(self) -> int:
        return self.A.shape[0]

    def arrays(self) -> Dict[str, np.ndarray]:
        return {'A': self.A}


@dataclass(frozen=True, eq=False)
class LinearWithIntercept:
    """Per-mode affine predictors; prediction is Gamma[k] r + beta[k]."""
    spec: BlockSpec
    Gamma: np.ndarray                       # K x n x m
    beta: np.ndarray                        # K x n

    kind = "linear_with_intercept"

    def __post_init__(self):
        G = np.asarray(self.Gamma)
        if G.ndim != 3 or G.shape[0] < 1:
            raise DimensionError(f"Gamma must be K x n x m with K >= 1, got shape {G.shape}")
        K = G.shape[0]
        object.__setattr__(self, 'Gamma', _frozen(G, (K, self.spec.n, self.spec.m), 'Gamma'))
        object.__setattr__(self, 'beta', _frozen(self.beta, (K, self.spec.n), 'beta'))

    @property
    def K(self) -> int:
        return self.Gamma.shape[0]

    def arrays(self) -> Dict[str, np.ndarray]:
        return {'Gamma': self.Gamma, 'beta': self.beta}
