"""Analytic simplification of a trained network into linear predictors.

Dropping the activations turns every mode into an affine map of the
references: a master matrix W4[k] W3 W2 W1 plus an intercept obtained by
pushing the biases through the same chain. The no-intercept family keeps
only the master matrix, normalized row-wise so each prediction sample is a
weighted average of reference samples.
"""

import logging
from typing import Dict, List, Tuple

import numpy as np

from prediction.errors import ModeIndexError
from prediction.types import NNModel, LinearNoIntercept, LinearWithIntercept

logger = logging.getLogger(__name__)

DEGENERATE_ROW_SUM = 1e-8
ROW_SUM_ACCURACY = LinearNoIntercept.ROW_SUM_TOLERANCE


def _check_mode(model: NNModel, k: int):
    if not 0 <= k < model.K:
        raise ModeIndexError(f"Mode {k} out of range (model has K={model.K} modes)")


def master_matrix(model: NNModel, k: int) -> np.ndarray:
    """Gamma[k] = W4[k] W3 W2 W1 (n x m), evaluated left to right."""
    _check_mode(model, k)
    return ((model.W4[k] @ model.W3) @ model.W2) @ model.W1


def master_matrix_alternate(model: NNModel, k: int) -> np.ndarray:
    """Same product associated right to left; used to check order independence."""
    _check_mode(model, k)
    return model.W4[k] @ (model.W3 @ (model.W2 @ model.W1))


def normalize_rows(Gamma: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """Divide each row by its signed sum.

    A row is degenerate when its sum is within 1e-8 of zero relative to
    max(1, its L1 norm), or when the divided row still misses a sum of 1 by
    more than 1e-9. Degenerate rows are replaced by the uniform row 1/m and
    their indices returned.
    """
    Gamma = np.asarray(Gamma, dtype=np.float64)
    m = Gamma.shape[1]
    sums = Gamma.sum(axis=1)
    scale = np.maximum(1.0, np.abs(Gamma).sum(axis=1))
    degenerate = np.abs(sums) < DEGENERATE_ROW_SUM * scale
    safe = np.where(degenerate, 1.0, sums)
    A = Gamma / safe[:, None]
    degenerate |= ~(np.abs(A.sum(axis=1) - 1.0) <= ROW_SUM_ACCURACY)
    A[degenerate] = 1.0 / m
    return A, [int(i) for i in np.flatnonzero(degenerate)]


def intercept(model: NNModel, k: int) -> np.ndarray:
    """beta[k] = W4[k] (W3 (W2 b1 + b2) + b3) + b4[k]."""
    _check_mode(model, k)
    inner = model.W3 @ (model.W2 @ model.b1 + model.b2) + model.b3
    return model.W4[k] @ inner + model.b4[k]


def collapse_no_intercept(model: NNModel) -> LinearNoIntercept:
    """Row-normalized master matrices for every mode."""
    mats = []
    report: Dict[int, List[int]] = {}
    for k in range(model.K):
        A, degenerate = normalize_rows(master_matrix(model, k))
        if degenerate:
            report[k] = degenerate
            logger.warning("Mode %d: %d of %d rows have a near-zero sum, using uniform rows",
                           k, len(degenerate), A.shape[0])
        mats.append(A)
    return LinearNoIntercept(model.spec, np.stack(mats), degenerate_rows=report)


def collapse_with_intercept(model: NNModel) -> LinearWithIntercept:
    """Raw master matrices plus intercepts; exact for the linearized network."""
    Gamma = np.stack([master_matrix(model, k) for k in range(model.K)])
    beta = np.stack([intercept(model, k) for k in range(model.K)])
    return LinearWithIntercept(model.spec, Gamma, beta)


def row_sum_audit(model: LinearNoIntercept) -> float:
    """Largest deviation of any row sum of A from 1."""
    return float(np.max(np.abs(model.A.sum(axis=2) - 1.0)))
