"""Objectives, datasets and stochastic gradient oracles."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, InvalidVectorError
from .geometry import as_vector

DSB1_MAGIC = b"DSB1"
_HEADER = struct.Struct("<4sIII")

# noise draws are truncated at +-TRUNCATION standard deviations
TRUNCATION = 6.0


@dataclass
class Dataset:
    features: np.ndarray  # (n_samples, n_features) float64 holding float32-exact values
    labels: np.ndarray  # (n_samples,) int64
    n_classes: int

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must have one entry per sample")
        if not np.all(np.isfinite(self.features)):
            raise InvalidVectorError("dataset features contain non-finite values")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError(f"labels must lie in [0, {self.n_classes})")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.n_classes)

    def split(self, train_fraction: float = 0.8, seed: int = 0) -> tuple["Dataset", "Dataset"]:
        """Seeded shuffle, then the first ``train_fraction`` goes to train."""
        order = np.random.default_rng(seed).permutation(self.n_samples)
        k = int(round(train_fraction * self.n_samples))
        return self.subset(np.sort(order[:k])), self.subset(np.sort(order[k:]))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.n_classes == other.n_classes
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels))


def save_dataset(ds: Dataset, path) -> None:
    """Write ``ds`` in the DSB1 little-endian binary format."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DSB1_MAGIC, ds.n_samples, ds.n_features, ds.n_classes))
        fh.write(ds.features.astype("<f4").tobytes(order="C"))
        fh.write(ds.labels.astype("<u4").tobytes())


def load_dataset(path) -> Dataset:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated file (header needs {_HEADER.size} bytes, got {len(raw)})")
    magic, n, d, k = _HEADER.unpack_from(raw)
    if magic != DSB1_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {DSB1_MAGIC!r}")
    need = _HEADER.size + 4 * n * d + 4 * n
    if len(raw) < need:
        raise ValueError(f"{path}: truncated file ({len(raw)} bytes, expected {need})")
    if len(raw) > need:
        raise ValueError(f"{path}: {len(raw) - need} trailing bytes after labels")
    off = _HEADER.size
    feats = np.frombuffer(raw, dtype="<f4", count=n * d, offset=off).reshape(n, d)
    labels = np.frombuffer(raw, dtype="<u4", count=n, offset=off + 4 * n * d)
    if n and labels.max() >= k:
        bad = int(np.flatnonzero(labels >= k)[0])
        raise ValueError(f"{path}: label {labels[bad]} at sample {bad} out of range for {k} classes")
    return Dataset(feats.astype(np.float64), labels.astype(np.int64), int(k))


def generate_synthetic(kind: str, n: int, seed: int, n_features: int = 2,
                       separation: float = 4.0, noise: float = 0.1) -> Dataset:
    """Deterministic two-class toy data; exactly n // 2 samples in class 0.

    two-gaussians: unit-variance clouds centred at -+ (separation / 2) / sqrt(d) * 1.
    two-moons:     interleaving half circles in 2-D (``n_features`` ignored).
    Features are rounded to float32 so the DSB1 round trip is exact.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    n0 = n // 2
    labels = np.concatenate([np.zeros(n0, np.int64), np.ones(n - n0, np.int64)])
    if kind == "two-gaussians":
        centre = np.full(n_features, 0.5 * separation / math.sqrt(n_features))
        x = rng.standard_normal((n, n_features))
        x += np.where(labels[:, None] == 1, centre, -centre)
    elif kind == "two-moons":
        angle = rng.uniform(0.0, math.pi, n)
        x = np.empty((n, 2))
        x[:n0, 0], x[:n0, 1] = np.cos(angle[:n0]), np.sin(angle[:n0])
        x[n0:, 0], x[n0:, 1] = 1.0 - np.cos(angle[n0:]), 0.5 - np.sin(angle[n0:])
        x += noise * rng.standard_normal((n, 2))
    else:
        raise ValueError(f"unknown synthetic dataset kind {kind!r}")
    order = rng.permutation(n)
    x = x[order].astype(np.float32).astype(np.float64)
    return Dataset(x, labels[order], 2)


class Problem:
    """Objective with exact value and gradient.

    Subclasses that are sums over samples also implement ``grad_batch``.
    """

    name = "problem"
    f_star_hint: Optional[float] = None

    def __init__(self, dim: int, theta0):
        self.dim = int(dim)
        self.theta0 = as_vector(theta0, "theta0")
        if self.theta0.size != self.dim:
            raise DimensionMismatchError("theta0 has the wrong dimension")

    def value(self, theta) -> float:
        raise NotImplementedError

    def grad(self, theta) -> np.ndarray:
        raise NotImplementedError

    @property
    def n_samples(self) -> Optional[int]:
        return None

    def grad_batch(self, theta, idx) -> np.ndarray:
        raise NotImplementedError(f"{self.name} is not a finite-sum problem")

    def _theta(self, theta) -> np.ndarray:
        theta = as_vector(theta, "theta")
        if theta.size != self.dim:
            raise DimensionMismatchError(f"expected dim {self.dim}, got {theta.size}")
        return theta

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} dim={self.dim}>"


class FunctionProblem(Problem):
    """Wrap plain callables; mostly for tests."""

    def __init__(self, value: Callable, grad: Callable, theta0, name: str = "function",
                 f_star_hint: Optional[float] = None):
        theta0 = as_vector(theta0, "theta0")
        super().__init__(theta0.size, theta0)
        self._value, self._grad = value, grad
        self.name = name
        self.f_star_hint = f_star_hint

    def value(self, theta):
        return float(self._value(self._theta(theta)))

    def grad(self, theta):
        return as_vector(self._grad(self._theta(theta)), "grad")


class QuadraticProblem(Problem):
    """f(theta) = 1/2 sum a_i theta_i^2 - sum b_i theta_i."""

    name = "quadratic"

    def __init__(self, diag_a, b, theta0=None):
        self.a = as_vector(diag_a, "diag_a")
        self.b = as_vector(b, "b")
        if np.any(self.a <= 0):
            raise ValueError("quadratic curvature entries must all be > 0")
        if self.a.shape != self.b.shape:
            raise DimensionMismatchError("diag_a and b must have the same length")
        super().__init__(self.a.size, np.zeros(self.a.size) if theta0 is None else theta0)
        self.theta_star = self.b / self.a
        self.f_star_hint = float(-0.5 * np.sum(self.b ** 2 / self.a))

    @property
    def majorization(self) -> np.ndarray:
        """Per-coordinate curvature vector L (the Hessian diagonal)."""
        return self.a.copy()

    def value(self, theta):
        theta = self._theta(theta)
        return float(0.5 * np.dot(self.a * theta, theta) - np.dot(self.b, theta))

    def grad(self, theta):
        return self.a * self._theta(theta) - self.b


def quadratic_problem(diag_a, b, theta0=None) -> QuadraticProblem:
    return QuadraticProblem(diag_a, b, theta0)


def random_quadratic(dim: int, seed: int, cond: float = 100.0) -> QuadraticProblem:
    """Diagonal quadratic with log-uniform curvatures in [1, cond] and a random start."""
    rng = np.random.default_rng(seed)
    a = np.exp(rng.uniform(0.0, math.log(cond), dim))
    b = rng.standard_normal(dim)
    return QuadraticProblem(a, b, theta0=rng.standard_normal(dim))


class RosenbrockProblem(Problem):
    """Sum over consecutive pairs of 100 (y - x^2)^2 + (1 - x)^2."""

    name = "rosenbrock"
    f_star_hint = 0.0

    def __init__(self, dim: int = 2, theta0=None):
        if dim < 2 or dim % 2:
            raise ValueError(f"rosenbrock needs an even dimension >= 2, got {dim}")
        if theta0 is None:
            theta0 = np.tile([-1.2, 1.0], dim // 2)
        super().__init__(dim, theta0)

    def value(self, theta):
        theta = self._theta(theta)
        x, y = theta[0::2], theta[1::2]
        return float(np.sum(100.0 * (y - x * x) ** 2 + (1.0 - x) ** 2))

    def grad(self, theta):
        theta = self._theta(theta)
        x, y = theta[0::2], theta[1::2]
        r = y - x * x
        g = np.empty_like(theta)
        g[0::2] = -400.0 * x * r - 2.0 * (1.0 - x)
        g[1::2] = 200.0 * r
        return g


def rosenbrock_problem(dim: int = 2) -> RosenbrockProblem:
    return RosenbrockProblem(dim)


def _log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticProblem(Problem):
    """Mean binary cross-entropy plus (l2_reg / 2) ||theta||^2, no intercept."""

    name = "logistic"
    f_star_hint = None

    def __init__(self, data: Dataset, l2_reg: float = 0.0, theta0=None):
        if data.n_classes != 2:
            raise ValueError(f"logistic regression needs 2 classes, got {data.n_classes}")
        if l2_reg < 0:
            raise ValueError("l2_reg must be >= 0")
        self.data = data
        self.l2_reg = float(l2_reg)
        self._y = data.labels.astype(np.float64)
        super().__init__(data.n_features, np.zeros(data.n_features) if theta0 is None else theta0)

    @property
    def n_samples(self):
        return self.data.n_samples

    def _loss(self, theta, X, y):
        z = X @ theta
        return float(-np.mean(y * _log_sigmoid(z) + (1 - y) * _log_sigmoid(-z))
                     + 0.5 * self.l2_reg * np.dot(theta, theta))

    def _grad(self, theta, X, y):
        r = _sigmoid(X @ theta) - y
        return X.T @ r / len(y) + self.l2_reg * theta

    def value(self, theta):
        return self._loss(self._theta(theta), self.data.features, self._y)

    def grad(self, theta):
        return self._grad(self._theta(theta), self.data.features, self._y)

    def grad_batch(self, theta, idx):
        idx = np.asarray(idx)
        return self._grad(self._theta(theta), self.data.features[idx], self._y[idx])

    def per_sample_grads(self, theta) -> np.ndarray:
        theta = self._theta(theta)
        r = _sigmoid(self.data.features @ theta) - self._y
        return r[:, None] * self.data.features + self.l2_reg * theta

    def predict(self, theta, data: Optional[Dataset] = None) -> np.ndarray:
        data = self.data if data is None else data
        return (data.features @ self._theta(theta) >= 0).astype(np.int64)

    def accuracy(self, theta, data: Optional[Dataset] = None) -> float:
        data = self.data if data is None else data
        return float(np.mean(self.predict(theta, data) == data.labels))


def logistic_problem(data: Dataset, l2_reg: float = 0.0) -> LogisticProblem:
    return LogisticProblem(data, l2_reg)


class MLPProblem(Problem):
    """One hidden tanh layer, softmax cross-entropy.

    Flat parameter layout: W1 (hidden x n_features, row-major), b1, W2
    (n_classes x hidden, row-major), b2.
    """

    name = "mlp"

    def __init__(self, data: Dataset, hidden: int, activation: str = "tanh",
                 init_seed: int = 0, init_scale: Optional[float] = None):
        if hidden < 1:
            raise ValueError("hidden must be >= 1")
        if activation != "tanh":
            raise ValueError(f"unsupported activation {activation!r}; only 'tanh' is available")
        self.data = data
        self.hidden = int(hidden)
        d, h, k = data.n_features, self.hidden, data.n_classes
        self.shapes = [(h, d), (h,), (k, h), (k,)]
        sizes = [int(np.prod(s)) for s in self.shapes]
        self._offsets = np.cumsum([0] + sizes)
        dim = int(self._offsets[-1])
        rng = np.random.default_rng(init_seed)
        theta0 = np.zeros(dim)
        s1 = init_scale if init_scale is not None else 1.0 / math.sqrt(d)
        s2 = init_scale if init_scale is not None else 1.0 / math.sqrt(h)
        theta0[self._offsets[0]:self._offsets[1]] = s1 * rng.standard_normal(sizes[0])
        theta0[self._offsets[2]:self._offsets[3]] = s2 * rng.standard_normal(sizes[2])
        super().__init__(dim, theta0)
        self._onehot = np.eye(k)[data.labels]

    @property
    def n_samples(self):
        return self.data.n_samples

    def unpack(self, theta):
        o = self._offsets
        return tuple(theta[o[i]:o[i + 1]].reshape(s) for i, s in enumerate(self.shapes))

    def _check_data(self, X):
        if X.shape[1] != self.data.n_features:
            raise DimensionMismatchError(
                f"data has {X.shape[1]} features, network expects {self.data.n_features}")

    def _forward(self, theta, X):
        W1, b1, W2, b2 = self.unpack(theta)
        h = np.tanh(X @ W1.T + b1)
        logits = h @ W2.T + b2
        logits = logits - logits.max(axis=1, keepdims=True)
        logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        return h, logp

    def _loss_grad(self, theta, X, Y, need_grad=True):
        self._check_data(X)
        W1, b1, W2, b2 = self.unpack(theta)
        h, logp = self._forward(theta, X)
        n = X.shape[0]
        loss = float(-np.sum(Y * logp) / n)
        if not need_grad:
            return loss, None
        dlogits = (np.exp(logp) - Y) / n
        dW2 = dlogits.T @ h
        db2 = dlogits.sum(axis=0)
        dh = dlogits @ W2
        dpre = dh * (1.0 - h * h)
        dW1 = dpre.T @ X
        db1 = dpre.sum(axis=0)
        return loss, np.concatenate([dW1.ravel(), db1, dW2.ravel(), db2])

    def value(self, theta):
        return self._loss_grad(self._theta(theta), self.data.features, self._onehot, False)[0]

    def grad(self, theta):
        return self._loss_grad(self._theta(theta), self.data.features, self._onehot)[1]

    def grad_batch(self, theta, idx):
        idx = np.asarray(idx)
        return self._loss_grad(self._theta(theta), self.data.features[idx], self._onehot[idx])[1]

    def predict(self, theta, data: Optional[Dataset] = None) -> np.ndarray:
        data = self.data if data is None else data
        self._check_data(data.features)
        return np.argmax(self._forward(self._theta(theta), data.features)[1], axis=1)

    def accuracy(self, theta, data: Optional[Dataset] = None) -> float:
        data = self.data if data is None else data
        return float(np.mean(self.predict(theta, data) == data.labels))


def mlp_problem(data: Dataset, hidden: int, activation: str = "tanh", init_seed: int = 0) -> MLPProblem:
    return MLPProblem(data, hidden, activation, init_seed)


BatchSize = Union[int, str, Sequence[int], Callable[[int], int]]


@dataclass
class StochasticOracle:
    """Gradient noise model.

    ``mode="additive"`` adds the mean of ``n_t`` i.i.d. truncated-Gaussian
    vectors with per-coordinate standard deviation ``sigma`` to the exact
    gradient. ``mode="minibatch"`` averages per-sample gradients over a batch
    drawn without replacement.

    ``batch_size`` is an int, a per-iteration sequence or callable, or the
    string ``"T"`` meaning n_t = ``horizon`` for every t.
    """

    mode: str = "additive"
    batch_size: BatchSize = 1
    sigma: Union[float, np.ndarray] = 0.0
    seed: int = 0
    horizon: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("additive", "minibatch"):
            raise ValueError(f"unknown oracle mode {self.mode!r}")
        sig = np.asarray(self.sigma, dtype=np.float64)
        if np.any(sig < 0) or not np.all(np.isfinite(sig)):
            raise ValueError("sigma entries must be finite and >= 0")
        self.sigma = sig

    def batch_at(self, t: int) -> int:
        bs = self.batch_size
        if isinstance(bs, str):
            if bs != "T":
                raise ValueError(f"unknown batch size schedule {bs!r}")
            if self.horizon is None:
                raise ValueError("batch_size='T' needs the oracle horizon to be set")
            n = self.horizon
        elif callable(bs):
            n = bs(t)
        elif isinstance(bs, (int, np.integer)):
            n = bs
        else:
            n = bs[t]
        n = int(n)
        if n < 1:
            raise ValueError(f"batch size must be >= 1, got {n}")
        return n

    def sigma_vector(self, dim: int) -> np.ndarray:
        return np.broadcast_to(self.sigma, (dim,)).astype(np.float64)

    def with_seed(self, seed: int) -> "StochasticOracle":
        return replace(self, seed=seed)

    def rng(self, t: int) -> np.random.Generator:
        return np.random.default_rng([int(self.seed) & 0xFFFFFFFFFFFFFFFF, int(t)])


_TRUNC_VAR = None


def truncated_normal_variance(c: float = TRUNCATION) -> float:
    """Variance of a standard normal conditioned on |x| <= c."""
    phi = math.exp(-0.5 * c * c) / math.sqrt(2.0 * math.pi)
    mass = math.erf(c / math.sqrt(2.0))
    return 1.0 - 2.0 * c * phi / mass


def truncated_normal(rng: np.random.Generator, shape, c: float = TRUNCATION) -> np.ndarray:
    """Standard-normal draws restricted to [-c, c] by resampling."""
    x = rng.standard_normal(shape)
    bad = np.abs(x) > c
    while bad.any():
        x[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(x) > c
    return x


def noise_scale() -> float:
    """Multiplier making truncated draws have unit variance."""
    global _TRUNC_VAR
    if _TRUNC_VAR is None:
        _TRUNC_VAR = truncated_normal_variance()
    return 1.0 / math.sqrt(_TRUNC_VAR)


def noise_bound(sigma) -> np.ndarray:
    """Almost-sure bound on |g_tilde_i - g_i| in additive mode."""
    return TRUNCATION * noise_scale() * np.asarray(sigma, dtype=np.float64)


def stochastic_gradient(problem: Problem, theta, oracle: StochasticOracle, t: int) -> np.ndarray:
    """Draw g_tilde_t at ``theta``; deterministic in (oracle.seed, t)."""
    n = oracle.batch_at(t)
    rng = oracle.rng(t)
    if oracle.mode == "minibatch":
        total = problem.n_samples
        if total is None:
            raise ValueError(f"{problem.name} has no samples; minibatch mode needs a dataset problem")
        if n > total:
            raise ValueError(f"batch size {n} exceeds dataset size {total}")
        idx = np.sort(rng.choice(total, size=n, replace=False))
        return problem.grad_batch(theta, idx)
    g = problem.grad(theta)
    sigma = oracle.sigma_vector(g.size)
    if not sigma.any():
        return g
    xi = truncated_normal(rng, (n, g.size)).mean(axis=0)
    return g + noise_scale() * sigma * xi


def fd_gradient(problem: Problem, theta, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient (f(x + h e_i) - f(x - h e_i)) / 2h."""
    if not h > 0:
        raise ValueError("h must be > 0")
    theta = as_vector(theta, "theta")
    out = np.empty_like(theta)
    x = theta.copy()
    for i in range(theta.size):
        x[i] = theta[i] + h
        fp = problem.value(x)
        x[i] = theta[i] - h
        fm = problem.value(x)
        x[i] = theta[i]
        out[i] = (fp - fm) / (2.0 * h)
    return out


def gradient_check(problem: Problem, n_points: int = 20, seed: int = 0, h: float = 1e-5,
                   radius: float = 1.0) -> float:
    """Worst max_i |grad_i - fd_i| / (1 + |grad_i|) over random points near theta0."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        theta = problem.theta0 + radius * rng.uniform(-1.0, 1.0, problem.dim)
        g = problem.grad(theta)
        fd = fd_gradient(problem, theta, h)
        worst = max(worst, float(np.max(np.abs(g - fd) / (1.0 + np.abs(g)))))
    return worst
