"""Named verification suites for ``stacey verify``.

Each suite returns a list of check dicts ``{"name", "passed", "detail"}``.
"""

from __future__ import annotations

import numpy as np

from ..geometry import mirror_grad, scale_map
from ..optimizers import (
    HyperParams,
    OptimizerState,
    first_step_closed_form,
    init_state,
    lion_step,
    lp_descent_step,
    sgd_momentum_step,
    stacey_p2_step,
    stacey_pp_step,
)
from ..problems import (
    LogisticProblem,
    MLPProblem,
    QuadraticProblem,
    RosenbrockProblem,
    generate_synthetic,
    gradient_check,
    random_quadratic,
)

MIRROR_PS = (2, 2.5, 3, 4, 8, 16)
THEOREM1_PS = (2.5, 3, 4)


def _check(name, passed, **detail):
    return {"name": name, "passed": bool(passed), "detail": detail}


def _trajectories(step_a, step_b, hp_a, hp_b, problem, T, seed):
    """Run two steppers on the same noisy gradients; return max coordinate gap per step."""
    rng = np.random.default_rng(seed)
    ta = tb = problem.theta0.copy()
    sa, sb = init_state(ta), init_state(tb)
    gaps = []
    for _ in range(T):
        noise = 0.1 * rng.standard_normal(problem.dim)
        ta = step_a(ta, problem.grad(ta) + noise, hp_a, sa)
        tb = step_b(tb, problem.grad(tb) + noise, hp_b, sb)
        gaps.append(float(np.max(np.abs(ta - tb))))
    return gaps


def reductions(seed: int = 0) -> list:
    q = random_quadratic(50, seed)
    hp2 = HyperParams(p=2, eta=0.01)
    sgd = HyperParams(p=2, eta=0.01, beta1=0.0)
    gaps = _trajectories(lp_descent_step, sgd_momentum_step, hp2, sgd, q, 100, seed)
    out = [_check("lp_descent(p=2) == sgd(beta=0)", max(gaps) <= 1e-12, max_gap=max(gaps))]

    hp_inf = HyperParams(p="inf", eta=0.01)
    rng = np.random.default_rng(seed)
    theta, state = q.theta0.copy(), init_state(q.theta0)
    exact = True
    for _ in range(100):
        g = q.grad(theta) + 0.1 * rng.standard_normal(q.dim)
        new = lp_descent_step(theta, g, hp_inf, state)
        update = hp_inf.eta * scale_map(g, "inf")
        mags = np.abs(update[update != 0])
        exact &= bool(np.all(mags == hp_inf.eta))
        # signSGD reference, written independently of scale_map
        exact &= bool(np.array_equal(new, theta - hp_inf.eta * np.sign(g)))
        theta = new
    out.append(_check("lp_descent(p=inf) == signSGD", exact))

    base = dict(p=2, eta=0.01, alpha=0.05, tau=0.3, beta1=0.9, beta2=0.99, lam=1e-3, eps=0.0)
    hp = HyperParams(**base)
    gaps = _trajectories(stacey_p2_step, stacey_pp_step, hp, hp, q, 100, seed)
    out.append(_check("stacey_pp(p=2) == stacey_p2(p=2)", max(gaps) <= 1e-12, max_gap=max(gaps)))
    return out


def mirror(n_vectors: int = 1000, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for p in MIRROR_PS:
        worst = 0.0
        for _ in range(n_vectors):
            mag = np.exp(rng.uniform(np.log(1e-6), np.log(1e3), 8))
            z = mag * rng.choice([-1.0, 1.0], 8)
            back = scale_map(mirror_grad(z, p), p)
            worst = max(worst, float(np.max(np.abs(back - z) / np.abs(z))))
        out.append(_check(f"scale_map(mirror_grad(z)) == z, p={p}", worst <= 1e-9, max_rel_err=worst))
    return out


def gradient_problems(seed: int = 0) -> dict:
    data = generate_synthetic("two-gaussians", 60, seed, n_features=4)
    multi = generate_synthetic("two-moons", 60, seed)
    return {
        "quadratic": QuadraticProblem([1.0, 10.0, 100.0], [1.0, -2.0, 0.5]),
        "random_quadratic": random_quadratic(12, seed),
        "rosenbrock": RosenbrockProblem(6),
        "logistic": LogisticProblem(data, l2_reg=0.01),
        "mlp": MLPProblem(multi, hidden=5, init_seed=seed),
    }


def gradients(seed: int = 0) -> list:
    out = []
    for name, problem in gradient_problems(seed).items():
        # rosenbrock's fourth-order terms need a tighter box for central differences
        radius = 0.5 if name == "rosenbrock" else 1.0
        err = gradient_check(problem, n_points=20, seed=seed, h=1e-5, radius=radius)
        out.append(_check(f"finite differences: {name}", err < 1e-5, max_rel_err=err))
    return out


def firststep(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    g0 = rng.standard_normal(10)
    out = []
    hp = HyperParams(p=3, eta=0.1, alpha=0.05, tau=0.5, beta1=0.9, beta2=0.99, eps=1e-8)
    for name, stepper in (("lion", lion_step), ("stacey_p2", stacey_p2_step)):
        state = OptimizerState.zeros(10)
        got = stepper(np.zeros(10), g0, hp, state)
        want = first_step_closed_form(name, g0, hp)
        err = float(np.max(np.abs(got - want)))
        out.append(_check(f"first iterate matches closed form: {name}", err <= 1e-12, max_err=err))
    gap = float(np.max(np.abs(first_step_closed_form("stacey_p2", g0, hp)
                              - first_step_closed_form("lion", g0, hp))))
    out.append(_check("stacey_p2 and lion first iterates differ (tau=0.5)", gap > 1e-6, linf_gap=gap))
    return out


def theorem1(seeds=range(10)) -> tuple[list, list]:
    from ..experiments import theorem1_logistic

    checks, reports = [], []
    for p in THEOREM1_PS:
        res = theorem1_logistic(p, seeds=seeds)
        rep = res.report
        checks.append(_check(f"stationarity bound holds, p={p}", res.satisfied,
                             empirical=rep.empirical_mean_stationarity, bound=rep.bound_general,
                             certified_bound=res.certified_report.bound_general,
                             eta=res.eta, L_hat=res.L_hat, G_hat=res.G_hat))
        reports.append({"p": p, **rep.to_dict()})
    return checks, reports


SUITES = ("reductions", "mirror", "gradients", "theorem1", "firststep")


def run_suite(name: str) -> dict:
    """Run one suite (or ``all``) and return the JSON-ready verdict."""
    names = SUITES if name == "all" else (name,)
    for n in names:
        if n not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    checks, reports = [], []
    for n in names:
        if n == "theorem1":
            c, r = theorem1()
            reports.extend(r)
        else:
            c = {"reductions": reductions, "mirror": mirror, "gradients": gradients,
                 "firststep": firststep}[n]()
        for item in c:
            item["suite"] = n
        checks.extend(c)
    verdict = {"suite": name, "passed": all(c["passed"] for c in checks), "checks": checks}
    if reports:
        verdict["bound_reports"] = reports
    return verdict
