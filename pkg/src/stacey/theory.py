"""Convergence-bound arithmetic and empirical estimators of its constants.

The bound for stochastic lp descent after T steps with batch sizes n_t is

    mean_t E ||g_t||_{p*}^{p*} <= (f0 - f*) / (eta T) + L eta G^(2/(p-1)) / 2
                                  + mean_t (2p-1)/(p-1) G^(1/(p-1)) ||sigma||_1 / sqrt(n_t)

Estimators here only ever return empirical envelopes: ``estimate_Lp`` is a
lower bound on the true smoothness constant over the sampled region and
``estimate_G`` is a sampled maximum inflated by a safety factor.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .geometry import PLike, as_pnorm, as_vector, dual_exponent, lp_norm
from .problems import Problem, StochasticOracle, stochastic_gradient


def _coefficients(p):
    """(G exponent in the L term, noise prefactor, G exponent in the noise term)."""
    p = as_pnorm(p)
    if p.is_inf:
        return 0.0, 2.0, 0.0
    q = p.p
    return 2.0 / (q - 1.0), (2.0 * q - 1.0) / (q - 1.0), 1.0 / (q - 1.0)


def _batch_sizes(n_schedule, T: int) -> np.ndarray:
    if callable(n_schedule):
        n = np.array([n_schedule(t) for t in range(T)], dtype=np.float64)
    elif np.ndim(n_schedule) == 0:
        n = np.full(T, float(n_schedule))
    else:
        n = np.asarray(n_schedule, dtype=np.float64)
        if n.size != T:
            raise ValueError(f"batch schedule has {n.size} entries, expected T={T}")
    if np.any(n < 1):
        raise ValueError("batch sizes must be >= 1")
    return n


def theorem1_bound(f0: float, f_star: float, L: float, G: float, sigma_l1: float,
                   eta: float, T: int, p: PLike,
                   n_schedule: Union[int, Sequence[int], Callable[[int], int]] = 1) -> float:
    """Right-hand side of the general (untuned) stationarity bound."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if not eta > 0:
        raise ValueError("eta must be > 0")
    if f0 < f_star:
        raise ValueError(f"f0={f0} is below f_star={f_star}")
    if min(L, G, sigma_l1) < 0:
        raise ValueError("L, G and sigma_l1 must be >= 0")
    a, c, b = _coefficients(p)
    n = _batch_sizes(n_schedule, T)
    opt_term = (f0 - f_star) / (eta * T)
    smooth_term = L * eta * G ** a / 2.0
    noise_term = float(np.mean(c * G ** b * sigma_l1 / np.sqrt(n)))
    return opt_term + smooth_term + noise_term


def tuned_eta(L: float, G: float, T: int, p: PLike) -> float:
    """eta = 1 / (L^(1/2) G^(1/(p-1)) T^(1/2))."""
    if not (L > 0 and G > 0):
        raise ValueError("tuned step size needs L > 0 and G > 0")
    if T < 1:
        raise ValueError("T must be >= 1")
    _, _, b = _coefficients(p)
    return 1.0 / (math.sqrt(L) * G ** b * math.sqrt(T))


def theorem1_tuned_bound(f0: float, f_star: float, L: float, G: float, sigma_l1: float,
                         T: int, p: PLike) -> float:
    """Bound with tuned eta and n_t = T, written in terms of N = T^2 queries."""
    if not (L > 0 and G > 0):
        raise ValueError("tuned bound needs L > 0 and G > 0")
    if T < 1:
        raise ValueError("T must be >= 1")
    _, c, b = _coefficients(p)
    N = float(T) ** 2
    gb = G ** b
    return N ** -0.25 * (math.sqrt(L) * gb * (f0 - f_star + 0.5) + c * gb * sigma_l1)


@dataclass(frozen=True)
class Region:
    """Axis-aligned box ``centre +- radius`` or Euclidean ball around ``centre``."""

    centre: np.ndarray
    radius: Union[float, np.ndarray]
    shape: str = "box"

    def __post_init__(self):
        object.__setattr__(self, "centre", as_vector(self.centre, "centre"))
        r = np.broadcast_to(np.asarray(self.radius, dtype=np.float64), self.centre.shape)
        if self.shape not in ("box", "ball"):
            raise ValueError(f"unknown region shape {self.shape!r}")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ValueError("degenerate region: every radius must be finite and > 0")
        if self.shape == "ball" and np.ptp(r) != 0:
            raise ValueError("a ball needs a scalar radius")
        object.__setattr__(self, "radius", np.array(r))

    @classmethod
    def bounding_box(cls, points, pad: float = 1e-3) -> "Region":
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return cls(0.5 * (lo + hi), 0.5 * (hi - lo) + pad)

    @property
    def dim(self) -> int:
        return self.centre.size

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.shape == "box":
            u = rng.uniform(-1.0, 1.0, (n, self.dim))
            return self.centre + u * self.radius
        d = self.dim
        x = rng.standard_normal((n, d))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        r = rng.uniform(0.0, 1.0, n) ** (1.0 / d)
        return self.centre + (self.radius[0] * r)[:, None] * x


@dataclass
class SmoothnessEstimate:
    p: float
    L_hat: float
    n_pairs: int
    max_ratio_pair: Optional[tuple]

    def is_lower_bound(self) -> bool:
        return True


def estimate_Lp(problem: Problem, p: PLike, region: Region, n_pairs: int = 1000,
                seed: int = 0) -> SmoothnessEstimate:
    """Max of ||grad(x) - grad(y)||_{p*} / ||x - y||_p over random pairs in ``region``.

    This is a lower bound on the region's smoothness constant. Pairs are drawn
    sequentially, so a larger ``n_pairs`` with the same seed extends the sample.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    p = as_pnorm(p)
    q = dual_exponent(p)
    rng = np.random.default_rng(seed)
    best, arg = 0.0, None
    for _ in range(n_pairs):
        x, y = region.sample(rng, 2)
        dx = lp_norm(x - y, p.p)
        if dx == 0.0:
            continue
        ratio = lp_norm(problem.grad(x) - problem.grad(y), q) / dx
        if ratio > best or arg is None:
            best, arg = ratio, (x, y)
    return SmoothnessEstimate(p=p.p, L_hat=best, n_pairs=n_pairs, max_ratio_pair=arg)


def estimate_G(problem: Problem, oracle: StochasticOracle, p: PLike, n_samples: int,
               region: Region, seed: int = 0, safety: float = 1.1, t: int = 0) -> float:
    """Sampled max of ||g_tilde||_{p*} over ``region``, times ``safety``.

    Each sample draws a fresh point and a fresh oracle realisation at batch
    index ``t`` from a stream owned by this estimator.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    q = dual_exponent(p)
    rng = np.random.default_rng(seed)
    draws = oracle.with_seed(int(rng.integers(2**63)))
    best = 0.0
    for k in range(n_samples):
        theta = region.sample(rng, 1)[0]
        # vary the noise stream per sample, keep n_t fixed at batch_at(t)
        g = stochastic_gradient(problem, theta, draws.with_seed(draws.seed + k), t)
        best = max(best, lp_norm(g, q))
    return safety * best


def majorization_to_lp(L_vec, p: PLike) -> float:
    """lp smoothness constant ||L||_{p/(p-2)} implied by l2 majorization with vector L.

    p = 2 takes the exponent-to-infinity limit (max_i L_i); p = inf gives ||L||_1.
    """
    L_vec = as_vector(L_vec, "L_vec")
    if np.any(L_vec < 0):
        raise ValueError("majorization entries must be >= 0")
    p = as_pnorm(p)
    if p.is_inf:
        return lp_norm(L_vec, 1.0)
    if p.p == 2.0:
        return lp_norm(L_vec, math.inf)
    return lp_norm(L_vec, p.p / (p.p - 2.0))


@dataclass
class BoundReport:
    bound_general: float
    bound_tuned: Optional[float]
    empirical_mean_stationarity: float
    constants_used: dict
    satisfied: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _stationarity_series(record, T: int) -> np.ndarray:
    rows = record.rows if hasattr(record, "rows") else record
    vals = {}
    for row in rows:
        if "stationarity" not in row:
            raise KeyError("record has no stationarity channel")
        if row.get("diverged"):
            raise ValueError("cannot verify a diverged run")
        t = int(row["t"])
        if t < T:
            vals[t] = float(row["stationarity"])
    if len(vals) != T:
        missing = sorted(set(range(T)) - set(vals))[:5]
        raise ValueError(f"stationarity missing for t in {missing}...; log every iteration")
    return np.array([vals[t] for t in range(T)])


def verify_run(records, *, f0: float, f_star: float, L: float, G: float, sigma_l1: float,
               eta: float, T: int, p: PLike, n_t=1, slack: float = 0.0) -> BoundReport:
    """Compare the seed-averaged mean stationarity of ``records`` to the bound.

    ``records`` is one RunRecord (or row list) or a list of them, one per seed.
    Only rows with t < T count, matching the bound's sum over t = 0..T-1.
    """
    if T < 1:
        raise ValueError("T must be >= 1 (empty record)")
    if hasattr(records, "rows") or (records and isinstance(records[0], dict)):
        records = [records]
    if not records:
        raise ValueError("no records to verify")
    per_seed = [float(np.mean(_stationarity_series(r, T))) for r in records]
    empirical = float(np.mean(per_seed))
    general = theorem1_bound(f0, f_star, L, G, sigma_l1, eta, T, p, n_t)
    tuned = None
    if L > 0 and G > 0:
        tuned = theorem1_tuned_bound(f0, f_star, L, G, sigma_l1, T, p)
    n_const = n_t if np.ndim(n_t) == 0 and not callable(n_t) else None
    consts = dict(L=L, G=G, sigma_l1=sigma_l1, f0=f0, f_star=f_star, eta=eta, T=T, n_t=n_const)
    return BoundReport(
        bound_general=general,
        bound_tuned=tuned,
        empirical_mean_stationarity=empirical,
        constants_used=consts,
        satisfied=bool(empirical <= general * (1.0 + slack)),
    )
