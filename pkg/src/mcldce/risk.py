"""Mean-squared risks for a linear classifier and the solvers that minimize them.

The squared loss of a one-hot target splits into a label-free quadratic term
and a term that touches the labels only through the d x c centroid:

    1 + mean_i ||W^T x_i||^2 - 2 trace(W^T centroid)

Swapping the clean centroid for a noise-corrected one gives the corrected
objective; the solvers below only ever see ``features`` and a centroid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .centroid import CorrectionMode
from .data import Dataset, check_seed
from .errors import DivergenceError, FormatError, SingularSystemError, ValidationError

DEFAULT_LAMBDA = 1e-3


class Trainer(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    ITERATIVE = "iterative"


class Optimizer(str, enum.Enum):
    ADAM = "adam"
    MOMENTUM = "momentum"


@dataclass(frozen=True)
class RiskConfig:
    lam: float = DEFAULT_LAMBDA
    mode: CorrectionMode = CorrectionMode.PAPER_M
    trainer: Trainer = Trainer.CLOSED_FORM
    step_size: float = 0.001
    smoothing: float = 0.9  # Adam beta1, or the heavy-ball coefficient
    epochs: int = 200
    batch_size: int = 128
    decay_start: int = 80
    optimizer: Optimizer = Optimizer.ADAM
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", CorrectionMode(self.mode))
        object.__setattr__(self, "trainer", Trainer(self.trainer))
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValidationError(f"lambda must be >= 0, got {self.lam}")
        if not self.step_size > 0:
            raise ValidationError(f"step size must be > 0, got {self.step_size}")
        if not 0 <= self.smoothing < 1:
            raise ValidationError(f"smoothing must lie in [0, 1), got {self.smoothing}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch size must be >= 1")
        if self.decay_start < 0:
            raise ValidationError("decay start epoch must be >= 0")
        check_seed(self.seed)


@dataclass(frozen=True)
class LinearModel:
    W: np.ndarray
    lam: float = DEFAULT_LAMBDA
    mode: str = "none"
    history: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        if W.ndim != 2:
            raise ValidationError(f"weights must be a d x c matrix, got shape {W.shape}")
        if not np.isfinite(W).all():
            raise ValidationError("weights contain non-finite values")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def c(self) -> int:
        return self.W.shape[1]

    def scores(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.W


def _check_shapes(W, features, centroid=None):
    W = np.asarray(W, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != W.shape[0]:
        raise ValidationError(f"features {features.shape} do not match weights {W.shape}")
    if centroid is not None:
        centroid = np.asarray(centroid, dtype=np.float64)
        if centroid.shape != W.shape:
            raise ValidationError(f"centroid {centroid.shape} does not match weights {W.shape}")
    return W, features, centroid


def _weights(model) -> np.ndarray:
    return model.W if isinstance(model, LinearModel) else np.asarray(model, dtype=np.float64)


def naive_mse_risk(model, ds: Dataset) -> float:
    """Plain ``(1/n) sum_i ||y_i - W^T x_i||^2`` against the dataset's own labels."""
    W, X, _ = _check_shapes(_weights(model), ds.features)
    if W.shape[1] != ds.c:
        raise ValidationError(f"weights have {W.shape[1]} columns but dataset has {ds.c} classes")
    resid = ds.labels - X @ W
    return float(np.mean(np.sum(resid * resid, axis=1)))


def decomposed_risk(model, features, centroid) -> float:
    W, X, mu = _check_shapes(_weights(model), features, centroid)
    out = X @ W
    return float(1.0 + np.mean(np.sum(out * out, axis=1)) - 2.0 * np.sum(W * mu))


def objective(model, features, centroid, lam: float) -> float:
    W = _weights(model)
    return decomposed_risk(W, features, centroid) + lam * float(np.sum(W * W))


def second_moment(features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    return X.T @ X / X.shape[0]


def risk_gradient(model, features, centroid, lam: float) -> np.ndarray:
    """Gradient of ``decomposed_risk + lam * ||W||_F^2`` with respect to W."""
    W, X, mu = _check_shapes(_weights(model), features, centroid)
    return 2.0 * second_moment(X) @ W - 2.0 * mu + 2.0 * lam * W


def closed_form_solve(features, centroid, lam: float = DEFAULT_LAMBDA, mode="none") -> LinearModel:
    """Exact minimizer ``W = (C + lam I)^{-1} centroid`` with ``C = X^T X / n``."""
    X = np.asarray(features, dtype=np.float64)
    mu = np.asarray(centroid, dtype=np.float64)
    if X.ndim != 2 or mu.ndim != 2 or mu.shape[0] != X.shape[1]:
        raise ValidationError(f"centroid {mu.shape} does not match features {X.shape}")
    if lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam}")
    A = second_moment(X) + lam * np.eye(X.shape[1])
    if lam == 0 and np.linalg.matrix_rank(A) < A.shape[0]:
        raise SingularSystemError("feature second moment is singular; use lambda > 0")
    try:
        W = np.linalg.solve(A, mu)
    except np.linalg.LinAlgError:
        raise SingularSystemError("feature second moment is singular; use lambda > 0") from None
    return LinearModel(W, lam, str(CorrectionMode(mode).value))


def step_size_at(config: RiskConfig, epoch: int) -> float:
    """Constant until ``decay_start``, then linear decay reaching zero after the last epoch."""
    if epoch < config.decay_start or config.epochs <= config.decay_start:
        return config.step_size
    return config.step_size * (config.epochs - epoch) / (config.epochs - config.decay_start)


def iterative_train(features, centroid, config: RiskConfig = RiskConfig(), init=None) -> LinearModel:
    """Mini-batch training of the centroid objective from ``init`` (zeros by default).

    Each batch uses its own feature second moment with the fixed full-data
    centroid. The objective on the full data is recorded once per epoch in
    ``history``.
    """
    X = np.asarray(features, dtype=np.float64)
    mu = np.asarray(centroid, dtype=np.float64)
    if X.ndim != 2 or mu.ndim != 2 or mu.shape[0] != X.shape[1]:
        raise ValidationError(f"centroid {mu.shape} does not match features {X.shape}")
    n, d = X.shape
    W = np.zeros_like(mu) if init is None else np.array(init, dtype=np.float64)
    if W.shape != mu.shape:
        raise ValidationError(f"initial weights {W.shape} do not match centroid {mu.shape}")

    lam, beta = config.lam, config.smoothing
    beta2, eps = 0.999, 1e-8
    m = np.zeros_like(W)
    v = np.zeros_like(W)
    C = second_moment(X)
    rng = np.random.default_rng(config.seed)
    history = []
    t = 0
    for epoch in range(config.epochs):
        eta = step_size_at(config, epoch)
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            xb = X[order[start:start + config.batch_size]]
            g = 2.0 * (xb.T @ (xb @ W)) / xb.shape[0] - 2.0 * mu + 2.0 * lam * W
            t += 1
            if config.optimizer is Optimizer.ADAM:
                m = beta * m + (1 - beta) * g
                v = beta2 * v + (1 - beta2) * g * g
                W = W - eta * (m / (1 - beta**t)) / (np.sqrt(v / (1 - beta2**t)) + eps)
            else:
                m = beta * m + g
                W = W - eta * m
        # full objective from C, avoiding another pass over X
        with np.errstate(over="ignore", invalid="ignore"):
            value = (1.0 + float(np.sum(W * (C @ W))) - 2.0 * float(np.sum(W * mu))
                     + lam * float(np.sum(W * W)))
        if not (math.isfinite(value) and np.isfinite(W).all()):
            raise DivergenceError(epoch)
        history.append(value)
    return LinearModel(W, lam, config.mode.value, tuple(history))


def train(features, centroid, config: RiskConfig) -> LinearModel:
    if config.trainer is Trainer.CLOSED_FORM:
        return closed_form_solve(features, centroid, config.lam, config.mode)
    return iterative_train(features, centroid, config)


def predict(model, x) -> np.ndarray | int:
    """Arg-max class of ``W^T x``; ties go to the lowest class index.

    Accepts one feature vector (returns an int) or a batch of rows.
    """
    W = _weights(model)
    x = np.asarray(x, dtype=np.float64)
    scores = x @ W
    if scores.ndim == 1:
        return int(np.argmax(scores))
    return np.argmax(scores, axis=1)


def save_model_csv(model: LinearModel, path) -> None:
    with open(path, "w") as f:
        f.write(f"# d={model.d},c={model.c},lambda={model.lam!r},mode={model.mode}\n")
        for row in model.W:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def load_model_csv(path) -> LinearModel:
    with open(path) as f:
        header = f.readline()
        if not header.startswith("# "):
            raise FormatError(f"{path}: missing model header line")
        meta = dict(kv.split("=", 1) for kv in header[2:].strip().split(","))
        rows = [line.strip() for line in f if line.strip()]
    W = np.array([[float(v) for v in r.split(",")] for r in rows])
    if W.shape != (int(meta["d"]), int(meta["c"])):
        raise FormatError(f"{path}: header says {meta['d']}x{meta['c']}, body is {W.shape}")
    return LinearModel(W, float(meta["lambda"]), meta["mode"])
