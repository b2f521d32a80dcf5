"""Optimizer steppers.

Every stepper has the signature ``step(theta, g_tilde, hp, state) -> theta_next``.
``state`` is mutated in place (buffers and the step counter); ``theta`` is not.

Implemented methods:

* ``lp_descent``   stochastic lp steepest descent, theta - eta_t s(g)
* ``stacey_p2``    lp steepest-descent step linearly coupled with a Euclidean
                   dual step
* ``stacey_pp``    same coupling with the (1/p)||.||_p^p mirror step
* ``sgd_momentum``, ``adam``, ``adamw``, ``lion`` baselines
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict

import numpy as np

from .errors import DimensionMismatchError, DivergenceError, UnsupportedExponentError
from .geometry import PNorm, as_pnorm, as_vector, mirror_grad, scale_map, scale_map_eps, sign
from .schedules import Schedule

DIVERGENCE_THRESHOLD = 1e12


@dataclass(frozen=True)
class HyperParams:
    p: PNorm = field(default_factory=lambda: PNorm(2))
    eta: float = 0.1
    alpha: float = 0.1
    tau: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    lam: float = 0.0
    eps: float = 1e-8
    schedule: Schedule = field(default_factory=Schedule)

    def __post_init__(self):
        object.__setattr__(self, "p", as_pnorm(self.p))
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {b}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")

    def eta_at(self, t: int) -> float:
        return self.schedule(t) * self.eta

    def replace(self, **changes) -> "HyperParams":
        return replace(self, **changes)


@dataclass
class OptimizerState:
    m: np.ndarray
    z: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, dim: int) -> "OptimizerState":
        return cls(m=np.zeros(dim), z=np.zeros(dim), v=np.zeros(dim))

    def copy(self) -> "OptimizerState":
        return OptimizerState(self.m.copy(), self.z.copy(), self.v.copy(), self.step)


def init_state(theta0, strict_init: bool = False) -> OptimizerState:
    """Fresh state for ``theta0``: z0 = theta0 (or 0 under strict init), m0 = v0 = 0."""
    theta0 = as_vector(theta0, "theta0")
    state = OptimizerState.zeros(theta0.size)
    if not strict_init:
        state.z = theta0.copy()
    return state


def _check(theta, g_tilde, state):
    theta = as_vector(theta, "theta")
    g = as_vector(g_tilde, "g_tilde")
    if g.shape != theta.shape:
        raise DimensionMismatchError(f"gradient dim {g.size} != parameter dim {theta.size}")
    for name in ("m", "z", "v"):
        buf = getattr(state, name)
        if buf.shape != theta.shape:
            raise DimensionMismatchError(f"state.{name} dim {buf.size} != parameter dim {theta.size}")
    return theta, g


def _guard(theta_new: np.ndarray, step: int) -> np.ndarray:
    bad = ~np.isfinite(theta_new) | (np.abs(theta_new) > DIVERGENCE_THRESHOLD)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DivergenceError(i, theta_new[i], step=step)
    return theta_new


def lp_descent_step(theta, g_tilde, hp: HyperParams, state: OptimizerState) -> np.ndarray:
    theta, g = _check(theta, g_tilde, state)
    t = state.step
    out = _guard(theta - hp.eta_at(t) * scale_map(g, hp.p), t)
    state.step += 1
    return out


def _stacey_step(theta, g_tilde, hp, state, dual_update):
    theta, g = _check(theta, g_tilde, state)
    t = state.step
    eta_t = hp.eta_at(t)
    c = hp.beta1 * state.m + (1.0 - hp.beta1) * g
    y = theta - eta_t * scale_map_eps(c, hp.p, hp.eps)
    z = dual_update(state.z, c)
    out = hp.tau * z + (1.0 - hp.tau) * y - eta_t * hp.lam * theta
    out = _guard(out, t)
    state.z = z
    state.m = hp.beta2 * state.m + (1.0 - hp.beta2) * g
    state.step += 1
    return out


def stacey_p2_step(theta, g_tilde, hp: HyperParams, state: OptimizerState) -> np.ndarray:
    return _stacey_step(theta, g_tilde, hp, state, lambda z, c: z - hp.alpha * c)


def stacey_pp_step(theta, g_tilde, hp: HyperParams, state: OptimizerState) -> np.ndarray:
    if hp.p.is_inf:
        raise UnsupportedExponentError("stacey_pp needs a finite p for its mirror map")

    def dual_update(z, c):
        return scale_map_eps(mirror_grad(z, hp.p) - hp.alpha * c, hp.p, hp.eps)

    return _stacey_step(theta, g_tilde, hp, state, dual_update)


def sgd_momentum_step(theta, g_tilde, hp: HyperParams, state: OptimizerState) -> np.ndarray:
    """Heavy-ball SGD, buf <- beta1 buf + g (+ lam theta, coupled decay)."""
    theta, g = _check(theta, g_tilde, state)
    t = state.step
    if hp.lam:
        g = g + hp.lam * theta
    if hp.beta1:
        buf = hp.beta1 * state.m + g
    else:
        buf = g
    out = _guard(theta - hp.eta_at(t) * buf, t)
    state.m = buf
    state.step += 1
    return out


def _adam_core(theta, g, hp, state):
    t = state.step
    m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
    v = hp.beta2 * state.v + (1.0 - hp.beta2) * g * g
    m_hat = m / (1.0 - hp.beta1 ** (t + 1))
    v_hat = v / (1.0 - hp.beta2 ** (t + 1))
    return m, v, m_hat / (np.sqrt(v_hat) + hp.eps)


def adam_step(theta, g_tilde, hp: HyperParams, state: OptimizerState) -> np.ndarray:
    """Adam with L2 regularisation folded into the gradient."""
    theta, g = _check(theta, g_tilde, state)
    t = state.step
    if hp.lam:
        g = g + hp.lam * theta
    m, v, direction = _adam_core(theta, g, hp, state)
    out = _guard(theta - hp.eta_at(t) * direction, t)
    state.m, state.v = m, v
    state.step += 1
    return out


def adamw_step(theta, g_tilde, hp: HyperParams, state: OptimizerState) -> np.ndarray:
    theta, g = _check(theta, g_tilde, state)
    t = state.step
    eta_t = hp.eta_at(t)
    m, v, direction = _adam_core(theta, g, hp, state)
    out = _guard(theta - eta_t * direction - eta_t * hp.lam * theta, t)
    state.m, state.v = m, v
    state.step += 1
    return out


def lion_step(theta, g_tilde, hp: HyperParams, state: OptimizerState) -> np.ndarray:
    theta, g = _check(theta, g_tilde, state)
    t = state.step
    eta_t = hp.eta_at(t)
    c = hp.beta1 * state.m + (1.0 - hp.beta1) * g
    out = _guard(theta - eta_t * np.sign(c) - eta_t * hp.lam * theta, t)
    state.m = hp.beta2 * state.m + (1.0 - hp.beta2) * g
    state.step += 1
    return out


Stepper = Callable[[np.ndarray, np.ndarray, HyperParams, OptimizerState], np.ndarray]

STEPPERS: Dict[str, Stepper] = {
    "lp_descent": lp_descent_step,
    "stacey_p2": stacey_p2_step,
    "stacey_pp": stacey_pp_step,
    "sgd_momentum": sgd_momentum_step,
    "adam": adam_step,
    "adamw": adamw_step,
    "lion": lion_step,
}


def get_stepper(name: str) -> Stepper:
    try:
        return STEPPERS[name]
    except KeyError:
        raise KeyError(f"unknown optimizer {name!r}; known: {sorted(STEPPERS)}") from None


def first_step_closed_form(method: str, g0, hp: HyperParams) -> np.ndarray:
    """theta_1 from theta_0 = z_0 = m_0 = 0, written out directly.

    lion:      -eta sgn((1 - beta1) g0)
    stacey_p2: -(1 - tau) eta s_eps((1 - beta1) g0) - tau alpha (1 - beta1) g0
    """
    g0 = as_vector(g0, "g0")
    eta = hp.eta_at(0)
    c = (1.0 - hp.beta1) * g0
    if method == "lion":
        return -eta * sign(c)
    if method == "stacey_p2":
        return -(1.0 - hp.tau) * eta * scale_map_eps(c, hp.p, hp.eps) - hp.tau * hp.alpha * c
    raise ValueError(f"no closed form for method {method!r}")


class Optimizer:
    """Convenience wrapper holding a stepper, hyperparameters and state."""

    def __init__(self, name: str, hp: HyperParams, theta0, strict_init: bool = False):
        self.name = name
        self.hp = hp
        self._step = get_stepper(name)
        if name == "stacey_pp" and hp.p.is_inf:
            raise UnsupportedExponentError("stacey_pp needs a finite p for its mirror map")
        self.state = init_state(theta0, strict_init)

    def step(self, theta, g_tilde) -> np.ndarray:
        return self._step(theta, g_tilde, self.hp, self.state)

    @property
    def t(self) -> int:
        return self.state.step

    def __repr__(self):
        return f"Optimizer({self.name!r}, p={self.hp.p}, eta={self.hp.eta}, t={self.t})"
