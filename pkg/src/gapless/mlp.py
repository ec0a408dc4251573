"""Two-layer feed-forward network with tanh hidden units and linear output,
trained by scaled conjugate gradient on a sum-of-squares loss.

With output_dim == input_dim and a bottleneck hidden layer the same network
serves as the autoencoder used by the imputation baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_float_matrix, check_n_features
from .exceptions import DivergenceError, InvalidInputError, ModelFormatError

__all__ = [
    "MlpNetwork",
    "MlpGradient",
    "TrainConfig",
    "init_network",
    "forward",
    "loss",
    "gradient",
    "train_scg",
    "MlpRegressor",
]


@dataclass
class MlpNetwork:
    """Weights of an input -> tanh hidden -> linear output network."""

    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (output, hidden)
    b2: np.ndarray  # (output,)

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        h, d = self.w1.shape
        o = self.w2.shape[0]
        if self.b1.shape != (h,) or self.w2.shape != (o, h) or self.b2.shape != (o,):
            raise InvalidInputError("inconsistent layer shapes")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    @property
    def n_params(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [self.w1.ravel(), self.b1, self.w2.ravel(), self.b2]
        )

    def with_flat(self, flat: np.ndarray) -> "MlpNetwork":
        h, d, o = self.hidden_dim, self.input_dim, self.output_dim
        if flat.shape != (self.n_params,):
            raise InvalidInputError("flat parameter vector has wrong length")
        i = 0
        w1 = flat[i : i + h * d].reshape(h, d); i += h * d
        b1 = flat[i : i + h]; i += h
        w2 = flat[i : i + o * h].reshape(o, h); i += o * h
        b2 = flat[i : i + o]
        return MlpNetwork(w1.copy(), b1.copy(), w2.copy(), b2.copy())

    def to_doc(self) -> dict:
        return {
            "kind": "mlp",
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "output_dim": self.output_dim,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
        }

    @staticmethod
    def from_doc(doc: dict) -> "MlpNetwork":
        if doc.get("kind") != "mlp":
            raise ModelFormatError("not an mlp document")
        net = MlpNetwork(
            np.array(doc["w1"], dtype=np.float64),
            np.array(doc["b1"], dtype=np.float64),
            np.array(doc["w2"], dtype=np.float64),
            np.array(doc["b2"], dtype=np.float64),
        )
        dims = (doc["input_dim"], doc["hidden_dim"], doc["output_dim"])
        if dims != (net.input_dim, net.hidden_dim, net.output_dim):
            raise ModelFormatError("declared dims do not match weight shapes")
        return net


@dataclass
class MlpGradient:
    """Loss gradient laid out like the network parameters."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2.ravel(), self.b2])


@dataclass(frozen=True)
class TrainConfig:
    max_cycles: int = 1200
    grad_tolerance: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.max_cycles < 1:
            raise InvalidInputError("max_cycles must be >= 1")
        if self.grad_tolerance <= 0:
            raise InvalidInputError("grad_tolerance must be positive")


def init_network(input_dim: int, hidden_dim: int, output_dim: int, seed: int) -> MlpNetwork:
    """Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer."""
    if min(input_dim, hidden_dim, output_dim) < 1:
        raise InvalidInputError("all layer sizes must be positive")
    rng = np.random.default_rng(seed)
    r1 = 1.0 / np.sqrt(input_dim)
    r2 = 1.0 / np.sqrt(hidden_dim)
    return MlpNetwork(
        rng.uniform(-r1, r1, size=(hidden_dim, input_dim)),
        rng.uniform(-r1, r1, size=hidden_dim),
        rng.uniform(-r2, r2, size=(output_dim, hidden_dim)),
        rng.uniform(-r2, r2, size=output_dim),
    )


def forward(net: MlpNetwork, x) -> np.ndarray:
    """Evaluate the network; accepts a single vector or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    check_n_features(X, net.input_dim, "input")
    H = np.tanh(X @ net.w1.T + net.b1)
    Y = H @ net.w2.T + net.b2
    return Y[0] if single else Y


def _as_batch(net: MlpNetwork, inputs, targets) -> tuple[np.ndarray, np.ndarray]:
    X = as_float_matrix(inputs, "inputs")
    T = as_float_matrix(targets, "targets")
    if X.shape[0] != T.shape[0]:
        raise InvalidInputError("inputs and targets must have equal length")
    check_n_features(X, net.input_dim, "inputs")
    check_n_features(T, net.output_dim, "targets")
    return X, T


def loss(net: MlpNetwork, inputs, targets) -> float:
    """Sum of squared errors over all instances and output components."""
    X, T = _as_batch(net, inputs, targets)
    R = forward(net, X) - T
    return float(np.sum(R * R))


def gradient(net: MlpNetwork, inputs, targets) -> MlpGradient:
    """Exact analytic gradient of the sum-of-squares loss (backpropagation)."""
    X, T = _as_batch(net, inputs, targets)
    A = X @ net.w1.T + net.b1
    H = np.tanh(A)
    Y = H @ net.w2.T + net.b2
    dY = 2.0 * (Y - T)                    # (B, out)
    g_w2 = dY.T @ H
    g_b2 = dY.sum(axis=0)
    dA = (dY @ net.w2) * (1.0 - H * H)    # (B, hidden)
    g_w1 = dA.T @ X
    g_b1 = dA.sum(axis=0)
    return MlpGradient(g_w1, g_b1, g_w2, g_b2)


def train_scg(
    net: MlpNetwork, inputs, targets, config: TrainConfig = TrainConfig()
) -> tuple[MlpNetwork, list[float]]:
    """Scaled conjugate gradient: conjugate directions with an adaptive
    Hessian-damping scalar and no line search.

    Returns the trained network and the loss trace at accepted steps
    (index 0 is the initial loss); the trace is non-increasing.
    Raises DivergenceError if the loss at the current point is non-finite.
    """
    X, T = _as_batch(net, inputs, targets)
    if X.shape[0] == 0:
        raise InvalidInputError("training data must be non-empty")

    def f(w: np.ndarray) -> float:
        return loss(net.with_flat(w), X, T)

    def df(w: np.ndarray) -> np.ndarray:
        return gradient(net.with_flat(w), X, T).flatten()

    sigma0 = 1e-4
    lam = 1e-6
    lam_bar = 0.0

    w = net.flatten()
    n = w.shape[0]
    e_now = f(w)
    if not np.isfinite(e_now):
        raise DivergenceError(0)
    trace = [e_now]
    r = -df(w)
    p = r.copy()
    success = True
    delta = 0.0
    p_norm2 = 0.0

    for k in range(1, config.max_cycles + 1):
        if np.linalg.norm(r) < config.grad_tolerance:
            break
        if success:
            p_norm2 = float(p @ p)
            if p_norm2 == 0.0:
                break
            sigma = sigma0 / np.sqrt(p_norm2)
            s = (df(w + sigma * p) - (-r)) / sigma
            delta = float(p @ s)
        delta += (lam - lam_bar) * p_norm2
        if delta <= 0.0:
            # force the local curvature estimate positive definite
            lam_bar = 2.0 * (lam - delta / p_norm2)
            delta = -delta + lam * p_norm2
            lam = lam_bar
        mu = float(p @ r)
        if not np.isfinite(delta) or delta == 0.0 or not np.isfinite(mu):
            # overflow in the curvature probe: damp harder and restart along
            # the steepest descent direction
            lam = max(lam * 4.0, 1e-6)
            lam_bar = 0.0
            p = r.copy()
            success = True
            continue
        alpha = mu / delta
        e_trial = f(w + alpha * p)
        comparison = 2.0 * delta * (e_now - e_trial) / (mu * mu)
        if np.isfinite(comparison) and comparison >= 0.0:
            w = w + alpha * p
            r_new = -df(w)
            e_now = e_trial
            if not np.isfinite(e_now):
                raise DivergenceError(k)
            trace.append(e_now)
            lam_bar = 0.0
            success = True
            if k % n == 0:
                p = r_new.copy()  # periodic restart along steepest descent
            else:
                beta = float(r_new @ r_new - r_new @ r) / mu
                p = r_new + beta * p
            r = r_new
            if comparison >= 0.75:
                lam *= 0.25
        else:
            lam_bar = lam
            success = False
        if not np.isfinite(comparison) or comparison < 0.25:
            lam += delta * (1.0 - (comparison if np.isfinite(comparison) else 0.0)) / p_norm2
        if lam > 1e100:
            break

    return net.with_flat(w), trace


class MlpRegressor(BaseEstimator, RegressorMixin):
    """scikit-learn style wrapper around the SCG-trained network.

    Inputs are expected pre-scaled (the ensemble feeds [0, 1] data); targets
    are used as given.
    """

    def __init__(self, hidden_dim=5, max_cycles=1200, grad_tolerance=1e-7, seed=0):
        self.hidden_dim = hidden_dim
        self.max_cycles = max_cycles
        self.grad_tolerance = grad_tolerance
        self.seed = seed

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = np.asarray(y, dtype=np.float64)
        Y = y.reshape(-1, 1) if y.ndim == 1 else y
        if X.shape[0] != Y.shape[0]:
            raise InvalidInputError("X and y must have equal length")
        self._single_output = y.ndim == 1
        net = init_network(X.shape[1], self.hidden_dim, Y.shape[1], self.seed)
        self.network_, self.loss_trace_ = train_scg(
            net, X, Y, TrainConfig(self.max_cycles, self.grad_tolerance, self.seed)
        )
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "network_")
        X = as_float_matrix(X, "X")
        check_n_features(X, self.n_features_in_)
        Y = forward(self.network_, X)
        return Y[:, 0] if self._single_output else Y
