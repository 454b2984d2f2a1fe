"""Gradient-descent training of the learned intra modes.

All K modes are fitted jointly with a hard-min loss: every training block
is charged the squared error of the mode that predicts it best, and only
that mode's output head (plus, for the network, the shared layers) receives
gradient. Modes therefore specialize on the blocks they win.

Two trainers share one loop:
    train_nn:     the four-layer network (shared layers 1-3, K heads)
    train_linear: per-mode affine predictors Gamma[k] r + beta[k], fitted directly
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from prediction.collapse import collapse_with_intercept
from prediction.errors import DimensionError, TrainingDivergedError
from prediction.layers import affine_batch, elu_grad, nn_layers_batch
from prediction.types import BlockSpec, NNModel, LinearWithIntercept
from training.optim import make_optimizer
from training.patches import PatchSample, stack_dataset

logger = logging.getLogger(__name__)

INIT_SCHEMES = ("fan_in_uniform", "from_nn")

Params = Dict[str, np.ndarray]
TraceRow = Tuple[int, int, float, float]            # step, epoch, loss, lr


@dataclass
class TrainConfig:
    """Training hyper-parameters. Defaults are desk-scale, not the full K = 35 setup."""
    seed: int = 0
    learning_rate: float = 1e-3
    batch_size: int = 256
    steps: int = 2000
    optimizer: str = "adam"                 # adam | sgd
    K: int = 8
    init: str = "fan_in_uniform"            # fan_in_uniform | from_nn
    log_every: int = 100                    # steps between progress lines (0 = quiet)
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"Invalid learning rate: {self.learning_rate} (must be positive)")
        if self.batch_size < 1:
            raise ValueError(f"Invalid batch size: {self.batch_size} (must be >= 1)")
        if self.steps < 1:
            raise ValueError(f"Invalid step count: {self.steps} (must be >= 1)")
        if self.K < 1:
            raise ValueError(f"Invalid mode count: K={self.K} (must be >= 1)")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"Invalid optimizer: '{self.optimizer}' (must be 'adam' or 'sgd')")
        if self.init not in INIT_SCHEMES:
            raise ValueError(f"Invalid init scheme: '{self.init}' (must be one of {INIT_SCHEMES})")


@dataclass
class TrainResult:
    model: Union[NNModel, LinearWithIntercept]
    loss_trace: List[TraceRow] = field(default_factory=list)

    def epoch_means(self) -> List[float]:
        """Mean batch loss of every epoch in the trace."""
        sums: Dict[int, List[float]] = {}
        for _, epoch, loss, _ in self.loss_trace:
            sums.setdefault(epoch, []).append(loss)
        return [float(np.mean(sums[e])) for e in sorted(sums)]


# ── Loss ─────────────────────────────────────────────────────────

def min_mode_loss(predictions, target) -> Tuple[float, int]:
    """Smallest per-mode mean squared error and the mode achieving it.

    Ties go to the lowest mode index.
    """
    P = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    t = np.asarray(target, dtype=np.float64)
    if P.shape[1] != t.shape[0]:
        raise DimensionError(f"Predictions have {P.shape[1]} samples, target has {t.shape[0]}")
    mse = np.mean((P - t[None, :]) ** 2, axis=1)
    best = int(np.argmin(mse))
    return float(mse[best]), best


def batch_mode_errors(P: np.ndarray, T: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residuals (B x K x n), per-mode MSE (B x K) and winning mode per block."""
    E = P - T[:, None, :]
    mse = np.mean(E * E, axis=2)
    return E, mse, np.argmin(mse, axis=1)


def _winner_residual_grad(E: np.ndarray, winners: np.ndarray) -> np.ndarray:
    """d(mean of winner MSEs) / d(winner prediction), shape B x n."""
    B, _, n = E.shape
    return (2.0 / (B * n)) * E[np.arange(B), winners]


# ── Network gradients ────────────────────────────────────────────

def nn_loss_and_grads(params: Params, R: np.ndarray, T: np.ndarray,
                      with_grads: bool = True) -> Tuple[float, Optional[Params]]:
    """Hard-min loss of the network on a batch and its analytic gradients."""
    W2, W3, W4, b4 = params['W2'], params['W3'], params['W4'], params['b4']
    (Z1, Z2, Z3), (A1, A2, A3), P = nn_layers_batch(params, R)

    E, mse, winners = batch_mode_errors(P, T)
    loss = float(np.mean(mse[np.arange(len(winners)), winners]))
    if not with_grads:
        return loss, None

    dP = _winner_residual_grad(E, winners)
    dW4 = np.zeros_like(W4)
    db4 = np.zeros_like(b4)
    dA3 = np.zeros_like(A3)
    for k in range(W4.shape[0]):
        mask = winners == k
        if not np.any(mask):
            continue
        dW4[k] = dP[mask].T @ A3[mask]
        db4[k] = dP[mask].sum(axis=0)
        dA3[mask] = dP[mask] @ W4[k]

    dZ3 = dA3 * elu_grad(Z3)
    dA2 = dZ3 @ W3
    dZ2 = dA2 * elu_grad(Z2)
    dA1 = dZ2 @ W2
    dZ1 = dA1 * elu_grad(Z1)

    grads = {
        'W1': dZ1.T @ R, 'b1': dZ1.sum(axis=0),
        'W2': dZ2.T @ A1, 'b2': dZ2.sum(axis=0),
        'W3': dZ3.T @ A2, 'b3': dZ3.sum(axis=0),
        'W4': dW4, 'b4': db4,
    }
    return loss, grads


def linear_loss_and_grads(params: Params, R: np.ndarray, T: np.ndarray,
                          with_grads: bool = True) -> Tuple[float, Optional[Params]]:
    """Hard-min loss of the affine predictors on a batch and its gradients."""
    Gamma, beta = params['Gamma'], params['beta']
    P = affine_batch(Gamma, beta, R)

    E, mse, winners = batch_mode_errors(P, T)
    loss = float(np.mean(mse[np.arange(len(winners)), winners]))
    if not with_grads:
        return loss, None

    dP = _winner_residual_grad(E, winners)
    dGamma = np.zeros_like(Gamma)
    dbeta = np.zeros_like(beta)
    for k in range(Gamma.shape[0]):
        mask = winners == k
        if not np.any(mask):
            continue
        dGamma[k] = dP[mask].T @ R[mask]
        dbeta[k] = dP[mask].sum(axis=0)
    return loss, {'Gamma': dGamma, 'beta': dbeta}


# ── Initialization ───────────────────────────────────────────────

def _fan_in_uniform(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    limit = 1.0 / math.sqrt(shape[-1])
    return rng.uniform(-limit, limit, size=shape)


def mode_levels(K: int, n: int) -> np.ndarray:
    """Initial output biases: mode k starts as the flat block at gray level (k + 0.5) / K."""
    return np.repeat(((np.arange(K) + 0.5) / K)[:, None], n, axis=1)


def init_nn_params(spec: BlockSpec, K: int, rng: np.random.Generator) -> Params:
    s = spec
    return {
        'W1': _fan_in_uniform(rng, (s.m, s.m)), 'b1': np.zeros(s.m),
        'W2': _fan_in_uniform(rng, (s.m, s.m)), 'b2': np.zeros(s.m),
        'W3': _fan_in_uniform(rng, (s.q, s.m)), 'b3': np.zeros(s.q),
        'W4': _fan_in_uniform(rng, (K, s.n, s.q)), 'b4': mode_levels(K, s.n),
    }


def init_linear_params(spec: BlockSpec, K: int, rng: np.random.Generator) -> Params:
    return {
        'Gamma': _fan_in_uniform(rng, (K, spec.n, spec.m)),
        'beta': mode_levels(K, spec.n),
    }


def _check_warm_start(model, spec: BlockSpec, K: int):
    if model.spec != spec:
        raise DimensionError(f"Initial model is for N={model.spec.N}, training N={spec.N}")
    if model.K != K:
        raise DimensionError(f"Initial model has K={model.K} modes, config asks for K={K}")


# ── Training loop ────────────────────────────────────────────────

def _fit(params: Params, loss_and_grads: Callable, R: np.ndarray, T: np.ndarray,
         config: TrainConfig, rng: np.random.Generator, label: str) -> List[TraceRow]:
    optimizer = make_optimizer(config.optimizer, config.learning_rate,
                               config.adam_beta1, config.adam_beta2, config.adam_eps)
    count = R.shape[0]
    batch = min(config.batch_size, count)
    steps_per_epoch = math.ceil(count / batch)

    trace: List[TraceRow] = []
    last_finite = float('nan')
    order = None
    for step in range(config.steps):
        epoch, j = divmod(step, steps_per_epoch)
        if j == 0:
            order = rng.permutation(count)
        idx = order[j * batch:(j + 1) * batch]

        loss, grads = loss_and_grads(params, R[idx], T[idx])
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            logger.error("%s diverged at step %d (epoch %d)", label, step, epoch)
            raise TrainingDivergedError(step, last_finite)
        last_finite = loss
        optimizer.step(params, grads)
        trace.append((step, epoch, loss, config.learning_rate))

        if config.log_every and (step % config.log_every == 0 or step == config.steps - 1):
            logger.info("%s step %d/%d epoch %d loss %.6g", label, step + 1, config.steps, epoch, loss)
    return trace


def train_nn(dataset: Sequence[PatchSample], spec: BlockSpec, config: TrainConfig,
             init_model: Optional[NNModel] = None) -> TrainResult:
    """Fit the K-mode network on a patch dataset.

    With `init_model` the weights start from that network instead of the
    seeded fan-in initialization.
    """
    if not dataset:
        raise ValueError("Training dataset is empty")
    R, T = stack_dataset(dataset)
    if R.shape[1] != spec.m or T.shape[1] != spec.n:
        raise DimensionError(f"Dataset patches do not match N={spec.N} (m={spec.m}, n={spec.n})")

    rng = np.random.default_rng(config.seed)
    if init_model is not None:
        _check_warm_start(init_model, spec, config.K)
        params = {name: np.array(a) for name, a in init_model.arrays().items()}
    else:
        params = init_nn_params(spec, config.K, rng)

    logger.info("Training network N=%d K=%d on %d patches (%s, lr=%g, batch=%d, steps=%d)",
                spec.N, config.K, len(dataset), config.optimizer, config.learning_rate,
                config.batch_size, config.steps)
    trace = _fit(params, nn_loss_and_grads, R, T, config, rng, "nn")
    return TrainResult(NNModel(spec, **params), trace)


def train_linear(dataset: Sequence[PatchSample], spec: BlockSpec, config: TrainConfig,
                 init_model: Optional[Union[NNModel, LinearWithIntercept]] = None) -> TrainResult:
    """Fit K affine predictors (Gamma[k], beta[k]) directly.

    `config.init == "from_nn"` starts from the collapse of `init_model`
    (a trained network); a LinearWithIntercept `init_model` is used as is.
    """
    if not dataset:
        raise ValueError("Training dataset is empty")
    R, T = stack_dataset(dataset)
    if R.shape[1] != spec.m or T.shape[1] != spec.n:
        raise DimensionError(f"Dataset patches do not match N={spec.N} (m={spec.m}, n={spec.n})")

    rng = np.random.default_rng(config.seed)
    if config.init == "from_nn" and not isinstance(init_model, NNModel):
        raise ValueError("init='from_nn' needs a trained network as init_model")
    if isinstance(init_model, NNModel):
        _check_warm_start(init_model, spec, config.K)
        start = collapse_with_intercept(init_model)
        params = {'Gamma': np.array(start.Gamma), 'beta': np.array(start.beta)}
    elif init_model is not None:
        _check_warm_start(init_model, spec, config.K)
        params = {'Gamma': np.array(init_model.Gamma), 'beta': np.array(init_model.beta)}
    else:
        params = init_linear_params(spec, config.K, rng)

    logger.info("Training affine predictors N=%d K=%d on %d patches (%s, lr=%g, batch=%d, steps=%d)",
                spec.N, config.K, len(dataset), config.optimizer, config.learning_rate,
                config.batch_size, config.steps)
    trace = _fit(params, linear_loss_and_grads, R, T, config, rng, "linear")
    return TrainResult(LinearWithIntercept(spec, params['Gamma'], params['beta']), trace)
