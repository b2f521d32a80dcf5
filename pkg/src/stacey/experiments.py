"""Desk-scale experiments used by the verification suites."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import PNorm, lp_norm, dual_exponent
from .harness.runner import run_trajectory
from .optimizers import HyperParams
from .presets import load_preset
from .problems import (
    LogisticProblem,
    MLPProblem,
    StochasticOracle,
    generate_synthetic,
    noise_bound,
)
from .theory import BoundReport, Region, estimate_G, estimate_Lp, tuned_eta, verify_run

log = logging.getLogger(__name__)


def logistic_certified_L(problem: LogisticProblem, p) -> float:
    """Analytic upper bound on the lp smoothness constant of ``problem``.

    The Hessian is X^T D X / n + l2 I with D <= 1/4, so
    ||H v||_{p*} <= (1/4n) sum_k ||x_k||_{p*}^2 ||v||_p + l2 d^(1/p* - 1/p) ||v||_p.
    """
    p = PNorm(p)
    q = dual_exponent(p)
    X = problem.data.features
    rows = sum(lp_norm(x, q) ** 2 for x in X) / (4.0 * X.shape[0])
    d = X.shape[1]
    inv_p = 0.0 if p.is_inf else 1.0 / p.p
    return rows + problem.l2_reg * d ** (1.0 / q - inv_p)


def logistic_certified_G(problem: LogisticProblem, sigma, p, radius: float) -> float:
    """Upper bound on ||g_tilde||_{p*} for ||theta||_inf <= radius.

    Per-sample gradients are bounded by ||x_k||_{p*} (residual in [-1, 1]);
    the ridge term and truncated noise add at most their own dual norms.
    """
    q = dual_exponent(PNorm(p))
    X = problem.data.features
    data_term = max(lp_norm(x, q) for x in X)
    ridge = problem.l2_reg * lp_norm(np.full(X.shape[1], radius), q)
    return data_term + ridge + lp_norm(noise_bound(sigma), q)


@dataclass
class Theorem1Result:
    p: float
    eta: float
    L_hat: float
    G_hat: float
    report: BoundReport
    certified_report: BoundReport
    region_radius: float
    in_region: bool
    per_seed: list = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return self.report.satisfied and self.certified_report.satisfied


def theorem1_logistic(p, seeds=range(10), T: int = 100, d: int = 20, n: int = 500,
                      data_seed: int = 0, l2_reg: float = 0.0, radius: float = None,
                      n_pairs: int = 2000, n_g: int = 500) -> Theorem1Result:
    """Stochastic lp descent on synthetic logistic regression against the bound.

    Noise is additive truncated Gaussian with sigma_i spread over [0.05, 0.5],
    batch n_t = T, and eta tuned from estimated L and G over a box around
    theta_0 = 0. After the runs, the box is enlarged to contain every
    iterate and the constants are re-estimated before the comparison, so
    the estimators cover the region the trajectories visited. A second report
    uses analytic (certified) upper bounds on L and G with the same eta.
    """
    p = PNorm(p)
    data = generate_synthetic("two-gaussians", n, data_seed, n_features=d)
    problem = LogisticProblem(data, l2_reg)
    sigma = np.linspace(0.05, 0.5, d)
    oracle = StochasticOracle(mode="additive", batch_size="T", sigma=sigma, horizon=T)

    if radius is None:
        # lp descent moves each coordinate at most eta G^(1/(p-1)) per step,
        # so sqrt(T / L) bounds the travel; start with that box
        radius = max(1.0, float(np.sqrt(T / logistic_certified_L(problem, p))))
    region = Region(problem.theta0, radius)
    L_hat = estimate_Lp(problem, p, region, n_pairs, seed=1).L_hat
    G_hat = estimate_G(problem, oracle, p, n_g, region, seed=2)
    eta = tuned_eta(L_hat, G_hat, T, p)
    hp = HyperParams(p=p, eta=eta)

    records = [run_trajectory(problem, "lp_descent", hp, oracle.with_seed(s), T, log_every=1)
               for s in seeds]
    # envelope of every visited iterate, not only the endpoints
    reach = max(float(np.max(np.abs(np.concatenate([r.meta["theta_lo"], r.meta["theta_hi"]])
                                    - np.tile(problem.theta0, 2)))) for r in records)
    in_region = reach <= radius
    if not in_region:
        log.info("trajectory left the estimation box (%.3g > %.3g); re-estimating", reach, radius)
        region = Region(problem.theta0, max(reach, radius) * 1.05)
        L_hat = max(L_hat, estimate_Lp(problem, p, region, n_pairs, seed=1).L_hat)
        G_hat = max(G_hat, estimate_G(problem, oracle, p, n_g, region, seed=2))

    f0 = problem.value(problem.theta0)
    common = dict(f0=f0, f_star=0.0, sigma_l1=float(sigma.sum()), eta=eta, T=T, p=p, n_t=T)
    report = verify_run(records, L=L_hat, G=G_hat, **common)
    L_cert = logistic_certified_L(problem, p)
    G_cert = logistic_certified_G(problem, sigma, p, float(np.max(region.radius)))
    certified = verify_run(records, L=L_cert, G=G_cert, **common)
    per_seed = [float(np.mean(r.channel("stationarity")[:T])) for r in records]
    return Theorem1Result(p.p, eta, L_hat, G_hat, report, certified, float(np.max(region.radius)),
                          in_region, per_seed)


MLP_TASK = dict(n=1000, data_seed=0, hidden=8, batch=128, T=2000, n_features=2, separation=4.0)


def mlp_comparison(seeds=(0, 1, 2), T: int = MLP_TASK["T"], methods=("cifar-stacey-pp", "cifar-sgd", "cifar-adam"),
                   n: int = MLP_TASK["n"], data_seed: int = MLP_TASK["data_seed"]) -> dict:
    """Train the two-Gaussian MLP with each CIFAR preset; return records per preset."""
    data = generate_synthetic("two-gaussians", n, data_seed, n_features=MLP_TASK["n_features"],
                              separation=MLP_TASK["separation"])
    train, test = data.split(0.8, data_seed)
    out = {}
    for preset in methods:
        name, hp = load_preset(preset, total_steps=T)
        recs = []
        for s in seeds:
            problem = MLPProblem(train, MLP_TASK["hidden"], init_seed=s)
            oracle = StochasticOracle(mode="minibatch", batch_size=MLP_TASK["batch"], seed=s)
            meta = {"run_id": preset, "seed": s, "optimizer": name, "p": str(hp.p)}
            recs.append(run_trajectory(problem, name, hp, oracle, T, log_every=1,
                                       test_data=test, meta=meta))
        out[preset] = recs
    return out


def final_loss(records) -> float:
    return float(np.mean([r.channel("loss")[-1] for r in records]))
