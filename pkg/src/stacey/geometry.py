"""Coordinate-wise lp geometry.

Everything here is a pure function of its arguments. Vectors are flat float64
numpy arrays; ``p`` may be given as a number, the string ``"inf"`` or a
:class:`PNorm`. ``math.inf`` is the sentinel for p = infinity and selects
dedicated code paths (sign maps, l1 duals) instead of large-exponent powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidVectorError, UnsupportedExponentError

INF = math.inf

# magnitudes below this are treated as exact zeros before taking powers
UNDERFLOW_FLOOR = 1e-300


@dataclass(frozen=True)
class PNorm:
    """Exponent p in [2, inf]."""

    p: float

    def __post_init__(self):
        p = self.p
        if isinstance(p, str):
            if p.strip().lower() not in ("inf", "infinity", "+inf"):
                raise UnsupportedExponentError(f"cannot parse exponent {p!r}")
            p = INF
        p = float(p)
        if math.isnan(p) or p < 2:
            raise UnsupportedExponentError(f"p must lie in [2, inf], got {p}")
        object.__setattr__(self, "p", p)

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.p)

    @property
    def dual(self) -> float:
        return dual_exponent(self)

    @property
    def scale_exponent(self) -> float:
        """(p-2)/(p-1); 1 in the p = inf limit."""
        if self.is_inf:
            return 1.0
        return (self.p - 2.0) / (self.p - 1.0)

    def __float__(self):
        return self.p

    def __str__(self):
        return "inf" if self.is_inf else f"{self.p:g}"


PLike = Union[PNorm, float, int, str]


def as_pnorm(p: PLike) -> PNorm:
    return p if isinstance(p, PNorm) else PNorm(p)


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Return ``v`` as a 1-D float64 array, rejecting non-finite entries."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidVectorError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise InvalidVectorError(f"{name} has non-finite entry at index {bad}: {arr[bad]}")
    return arr


def _abs_pow(x: np.ndarray, a: float) -> np.ndarray:
    """|x|**a with |x| < UNDERFLOW_FLOOR mapped to 0 (a > 0 assumed)."""
    ax = np.abs(x)
    out = np.zeros_like(ax)
    live = ax >= UNDERFLOW_FLOOR
    out[live] = np.power(ax[live], a)
    return out


def dual_exponent(p: PLike) -> float:
    p = as_pnorm(p)
    if p.is_inf:
        return 1.0
    if p.p == 2.0:
        return 2.0
    return p.p / (p.p - 1.0)


def lp_norm(v, q) -> float:
    """(sum |v_i|^q)^(1/q) for q >= 1, max |v_i| for q = inf.

    The largest magnitude is factored out first so that large q does not
    overflow.
    """
    v = as_vector(v)
    q = math.inf if isinstance(q, str) else float(q)
    if math.isnan(q) or q < 1:
        raise UnsupportedExponentError(f"norm exponent must be >= 1, got {q}")
    a = np.abs(v)
    vmax = float(a.max()) if a.size else 0.0
    if math.isinf(q):
        return vmax
    if vmax == 0.0:
        return 0.0
    if q == 1.0:
        return float(a.sum())
    if q == 2.0:
        r = a / vmax
        return vmax * math.sqrt(float(np.dot(r, r)))
    r = a / vmax
    return vmax * float(np.sum(np.power(r, q))) ** (1.0 / q)


def sign(x) -> np.ndarray:
    """Coordinate sign with sgn(0) = 0."""
    return np.sign(as_vector(x))


def scale_map(x, p: PLike) -> np.ndarray:
    """Steepest-descent scaling s_i(x) = sgn(x_i) |x_i|^(1/(p-1)).

    s(0) = 0 for every p. At p = 2 this is the identity, at p = inf the sign.
    """
    x = as_vector(x, "x")
    p = as_pnorm(p)
    if p.is_inf:
        return np.sign(x)
    if p.p == 2.0:
        return x.copy()
    return np.sign(x) * _abs_pow(x, 1.0 / (p.p - 1.0))


def scale_map_eps(x, p: PLike, eps: float) -> np.ndarray:
    """Regularised scaling x_i / (|x_i|^((p-2)/(p-1)) + eps).

    A coordinate with x_i = 0 maps to 0 even when eps = 0.
    """
    x = as_vector(x, "x")
    p = as_pnorm(p)
    eps = float(eps)
    if eps < 0 or not math.isfinite(eps):
        raise ValueError(f"eps must be finite and >= 0, got {eps}")
    if p.p == 2.0:
        # |x|^0 = 1 everywhere, including at 0
        return x / (1.0 + eps)
    if p.is_inf:
        denom = np.abs(x) + eps
    else:
        denom = _abs_pow(x, p.scale_exponent) + eps
    out = np.zeros_like(x)
    live = (x != 0.0) & (denom > 0.0)
    out[live] = x[live] / denom[live]
    return out


def mirror_grad(z, p: PLike) -> np.ndarray:
    """Gradient of (1/p)||z||_p^p, i.e. |z_i|^(p-2) z_i. Finite p only."""
    z = as_vector(z, "z")
    p = as_pnorm(p)
    if p.is_inf:
        raise UnsupportedExponentError("mirror_grad requires a finite exponent p")
    if p.p == 2.0:
        return z.copy()
    return np.sign(z) * _abs_pow(z, p.p - 1.0)


def stationarity_measure(g, p: PLike) -> float:
    """||g||_{p*}^{p*} = sum |g_i|^(p/(p-1)); the l1 norm at p = inf."""
    g = as_vector(g, "g")
    p = as_pnorm(p)
    if p.is_inf:
        return float(np.abs(g).sum())
    if p.p == 2.0:
        return float(np.dot(g, g))
    return float(np.sum(_abs_pow(g, dual_exponent(p))))
