"""Forward passes for the network and both simplified predictor families.

All passes are pure functions of immutable models. Nothing here clips;
`clip_block` is applied only where a final prediction is produced.
"""

from typing import List, Mapping, Tuple, Union

import numpy as np

from prediction.errors import DimensionError, ModeIndexError
from prediction.opcount import matvec
from prediction.types import NNModel, LinearNoIntercept, LinearWithIntercept

Model = Union[NNModel, LinearNoIntercept, LinearWithIntercept]


def elu(x):
    """Exponential linear unit with unit scale: x for x > 0, else e^x - 1."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))
    return float(out) if out.ndim == 0 else out


def elu_grad(x: np.ndarray) -> np.ndarray:
    """Derivative of `elu`: 1 for x > 0, else e^x."""
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def _check_mode(model: Model, k: int):
    if not 0 <= k < model.K:
        raise ModeIndexError(f"Mode {k} out of range (model has K={model.K} modes, 0..{model.K - 1})")


def _check_ref(model: Model, r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (model.spec.m,):
        raise DimensionError(f"Reference vector has shape {r.shape}, expected ({model.spec.m},)")
    return r


def _hidden(model: NNModel, r: np.ndarray, activation) -> np.ndarray:
    t1 = activation(matvec(model.W1, r, "W1") + model.b1)
    t2 = activation(matvec(model.W2, t1, "W2") + model.b2)
    return activation(matvec(model.W3, t2, "W3") + model.b3)


def nn_forward(model: NNModel, r, k: int) -> np.ndarray:
    """Prediction of mode k: the layer-4 head has no activation."""
    _check_mode(model, k)
    t3 = _hidden(model, _check_ref(model, r), elu)
    return matvec(model.W4[k], t3, "W4") + model.b4[k]


def nn_forward_linearized(model: NNModel, r, k: int) -> np.ndarray:
    """`nn_forward` with every activation replaced by the identity."""
    _check_mode(model, k)
    t3 = _hidden(model, _check_ref(model, r), lambda z: z)
    return matvec(model.W4[k], t3, "W4") + model.b4[k]


def linear_forward(model: LinearNoIntercept, r, k: int) -> np.ndarray:
    _check_mode(model, k)
    return matvec(model.A[k], _check_ref(model, r), "A")


def affine_forward(model: LinearWithIntercept, r, k: int) -> np.ndarray:
    _check_mode(model, k)
    return matvec(model.Gamma[k], _check_ref(model, r), "Gamma") + model.beta[k]


def clip_block(p) -> np.ndarray:
    """Clamp every sample to the valid [0, 1] range."""
    return np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)


_FORWARD = {
    'nn': nn_forward,
    'linear_no_intercept': linear_forward,
    'linear_with_intercept': affine_forward,
}


def predict(model: Model, r, k: int) -> np.ndarray:
    """Unclipped prediction of mode k for any predictor family."""
    return _FORWARD[model.kind](model, r, k)


def predict_all(model: Model, r) -> np.ndarray:
    """All K mode predictions for one reference vector, shape K x n."""
    return predict_batch(model, _check_ref(model, r)[None, :])[0]


# ── Batched passes ───────────────────────────────────────────────

def _check_batch(model: Model, R) -> np.ndarray:
    R = np.atleast_2d(np.asarray(R, dtype=np.float64))
    if R.ndim != 2 or R.shape[1] != model.spec.m:
        raise DimensionError(f"Reference batch has shape {R.shape}, expected (B, {model.spec.m})")
    return R


def nn_layers_batch(params: Mapping[str, np.ndarray], R: np.ndarray
                    ) -> Tuple[List[np.ndarray], List[np.ndarray], np.ndarray]:
    """Hidden pre-activations, hidden activations and every mode's output (B x K x n).

    `params` holds W1..b4 as in `NNModel.arrays()` or the trainer's working copies.
    """
    Z: List[np.ndarray] = []
    A: List[np.ndarray] = []
    t = R
    for w, b in (('W1', 'b1'), ('W2', 'b2'), ('W3', 'b3')):
        z = t @ params[w].T + params[b]
        t = elu(z)
        Z.append(z)
        A.append(t)
    P = np.einsum('bq,knq->bkn', t, params['W4']) + params['b4'][None, :, :]
    return Z, A, P


def affine_batch(Gamma: np.ndarray, beta: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Gamma[k] r + beta[k] for every reference row and mode, B x K x n."""
    return np.einsum('bm,knm->bkn', R, Gamma) + beta[None, :, :]


def nn_forward_batch(model: NNModel, R) -> np.ndarray:
    """Predictions of every mode for a batch of references, shape B x K x n."""
    return nn_layers_batch(model.arrays(), _check_batch(model, R))[2]


def linear_forward_batch(model: LinearNoIntercept, R) -> np.ndarray:
    return np.einsum('bm,knm->bkn', _check_batch(model, R), model.A)


def affine_forward_batch(model: LinearWithIntercept, R) -> np.ndarray:
    return affine_batch(model.Gamma, model.beta, _check_batch(model, R))


_FORWARD_BATCH = {
    'nn': nn_forward_batch,
    'linear_no_intercept': linear_forward_batch,
    'linear_with_intercept': affine_forward_batch,
}


def predict_batch(model: Model, R) -> np.ndarray:
    """Unclipped predictions of all K modes for a batch of references."""
    return _FORWARD_BATCH[model.kind](model, R)
