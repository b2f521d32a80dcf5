import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stacey.geometry import INF, lp_norm
from stacey.harness.runner import run_trajectory
from stacey.optimizers import HyperParams
from stacey.problems import (
    FunctionProblem,
    QuadraticProblem,
    StochasticOracle,
    quadratic_problem,
    random_quadratic,
)
from stacey.theory import (
    BoundReport,
    Region,
    estimate_G,
    estimate_Lp,
    majorization_to_lp,
    theorem1_bound,
    theorem1_tuned_bound,
    tuned_eta,
    verify_run,
)

pos = st.floats(0.0, 100.0)


def test_bound_examples():
    assert theorem1_bound(1, 0, 0, 5, 0, 0.1, 10, 3) == pytest.approx(1.0, rel=1e-15)
    assert theorem1_bound(1, 0, 1, 1, 0, 0.1, 10, 3) == pytest.approx(1.05, rel=1e-15)


def test_bound_p_inf_limit():
    got = theorem1_bound(2.0, 0.5, 3.0, 7.0, 1.5, 0.01, 50, INF, n_schedule=4)
    want = 1.5 / (0.01 * 50) + 3.0 * 0.01 / 2 + 2 * 1.5 / 2
    assert got == pytest.approx(want, rel=1e-14)
    # large finite p approaches the limit
    near = theorem1_bound(2.0, 0.5, 3.0, 7.0, 1.5, 0.01, 50, 1e7, n_schedule=4)
    assert near == pytest.approx(want, rel=1e-5)


def test_bound_averages_batch_schedule():
    sched = [1, 4, 16, 64]
    got = theorem1_bound(1, 0, 0, 1, 1.0, 1.0, 4, 3, n_schedule=sched)
    want = 1 / 4 + np.mean([2.5 / math.sqrt(n) for n in sched])
    assert got == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("kw", [dict(T=0), dict(eta=0.0), dict(eta=-1.0), dict(f0=-1.0)])
def test_bound_errors(kw):
    args = dict(f0=1.0, f_star=0.0, L=1.0, G=1.0, sigma_l1=0.0, eta=0.1, T=10, p=3)
    args.update(kw)
    with pytest.raises(ValueError):
        theorem1_bound(**args)


def test_tuned_examples():
    # N = T^2 queries: N = 100 is T = 10
    assert theorem1_tuned_bound(0.5, 0.0, 1, 1, 0, 10, 3) == pytest.approx(0.31622777, abs=1e-8)
    assert theorem1_tuned_bound(0.5, 0.0, 1, 1, 0, 100, 3) == pytest.approx(0.1, rel=1e-14)
    a = theorem1_tuned_bound(0.5, 0.0, 2, 3, 0, 100, 3)
    assert theorem1_tuned_bound(0.5, 0.0, 2, 3, 0, 400, 3) == pytest.approx(a / 2, rel=1e-12)
    one = theorem1_tuned_bound(0.7, 0.0, 2.0, 1.0, 0.3, 25, 3)
    sixteen = theorem1_tuned_bound(0.7, 0.0, 2.0, 16.0, 0.3, 25, 3)
    assert sixteen == pytest.approx(4 * one, rel=1e-14)
    with pytest.raises(ValueError):
        theorem1_tuned_bound(1, 0, 0, 1, 0, 10, 3)
    with pytest.raises(ValueError):
        theorem1_tuned_bound(1, 0, 1, 0, 0, 10, 3)


@settings(max_examples=100, deadline=None)
@given(T=st.integers(1, 10_000), L=st.floats(0.01, 100), G=st.floats(0.01, 100),
       s=pos, gap=pos, p=st.sampled_from([2, 2.5, 3, 4, 8, INF]))
def test_tuned_is_general_at_tuned_eta(T, L, G, s, gap, p):
    # plugging the tuned step and n_t = T into the general bound gives the tuned bound
    eta = tuned_eta(L, G, T, p)
    general = theorem1_bound(gap, 0.0, L, G, s, eta, T, p, n_schedule=T)
    assert general == pytest.approx(theorem1_tuned_bound(gap, 0.0, L, G, s, T, p), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(T=st.integers(1, 10_000), L=st.floats(0.01, 100), G=st.floats(0.01, 100), s=pos,
       p=st.sampled_from([2.5, 3, 4, INF]))
def test_tuned_scaling(T, L, G, s, p):
    a = theorem1_tuned_bound(1.0, 0.0, L, G, s, T, p)
    b = theorem1_tuned_bound(1.0, 0.0, L, G, s, 2 * T, p)
    assert b == pytest.approx(a / math.sqrt(2), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(f0=pos, L=pos, G=st.floats(0.0, 100.0), s=pos, eta=st.floats(1e-4, 10),
       T=st.integers(1, 1000), n=st.integers(1, 100), bump=st.floats(0.0, 10.0),
       which=st.sampled_from(["f0", "L", "G", "sigma_l1", "T", "n_schedule"]),
       p=st.sampled_from([2, 3, 4, 8, INF]))
def test_bound_monotone(f0, L, G, s, eta, T, n, bump, which, p):
    base = dict(f0=f0, f_star=0.0, L=L, G=G, sigma_l1=s, eta=eta, T=T, p=p, n_schedule=n)
    b0 = theorem1_bound(**base)
    moved = dict(base)
    if which in ("T", "n_schedule"):
        moved[which] = base[which] + int(bump) + 1
        assert theorem1_bound(**moved) <= b0 * (1 + 1e-12)
    else:
        moved[which] = base[which] + bump
        assert theorem1_bound(**moved) >= b0 * (1 - 1e-12)


def test_majorization_examples():
    assert majorization_to_lp([1, 1, 1, 1], 4) == 2.0
    for p in (2.5, 3, 4, 8, INF):
        assert majorization_to_lp([5, 0, 0], p) == 5.0
    assert majorization_to_lp([1, 100], 4) == pytest.approx(math.sqrt(1 + 1e4), rel=1e-14)
    assert majorization_to_lp([1, 100], 4) == pytest.approx(100.005, abs=1e-3)
    assert majorization_to_lp([1, 2, 3], 2) == 3.0
    assert majorization_to_lp([1, 2, 3], INF) == 6.0
    with pytest.raises(ValueError):
        majorization_to_lp([-1.0, 1.0], 3)


@settings(max_examples=100, deadline=None)
@given(L=st.lists(st.one_of(st.just(0.0), st.floats(1e-3, 1e3)), min_size=1, max_size=8),
       p=st.floats(2.01, 50.0))
def test_majorization_dominates_max(L, p):
    L = np.array(L)
    val = majorization_to_lp(L, p)
    assert val >= L.max() * (1 - 1e-12)
    r = p / (p - 2.0)
    srt = np.sort(L)
    # strictness is only visible in float64 when the runner-up is not negligible
    if np.count_nonzero(L) >= 2 and (srt[-2] / srt[-1]) ** r > 1e-10:
        assert val > L.max()
    elif np.count_nonzero(L) == 1:
        assert val == pytest.approx(L.max(), rel=1e-14)


@pytest.mark.parametrize("p", [2.5, 3, 4, 8])
@pytest.mark.parametrize("seed", [0, 1])
def test_majorization_upper_bounds_estimate(p, seed):
    q = random_quadratic(6, seed, cond=50)
    for radius in (0.1, 1.0, 10.0):
        est = estimate_Lp(q, p, Region(q.theta0, radius), n_pairs=500, seed=seed)
        assert est.L_hat <= majorization_to_lp(q.majorization, p) * (1 + 1e-12)


def test_estimate_Lp_isotropic_p2_exact():
    q = quadratic_problem([3.0, 3.0, 3.0], [0.0, 1.0, 0.0])
    est = estimate_Lp(q, 2, Region(np.zeros(3), 1.0), n_pairs=100)
    assert est.L_hat == pytest.approx(3.0, rel=1e-12)
    x, y = est.max_ratio_pair
    assert lp_norm(q.grad(x) - q.grad(y), 2) / lp_norm(x - y, 2) == pytest.approx(3.0, rel=1e-12)


def test_estimate_Lp_linear_is_zero():
    lin = FunctionProblem(lambda th: float(np.dot([1.0, -2.0], th)),
                          lambda th: np.array([1.0, -2.0]), [0.0, 0.0])
    assert estimate_Lp(lin, 3, Region(np.zeros(2), 1.0), n_pairs=50).L_hat == 0.0


def test_estimate_Lp_running_max():
    q = random_quadratic(5, 2)
    region = Region(q.theta0, 1.0, shape="ball")
    vals = [estimate_Lp(q, 3, region, n_pairs=n, seed=4).L_hat for n in (1, 10, 100, 400)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_region_errors():
    with pytest.raises(ValueError):
        Region(np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        Region(np.zeros(2), [1.0, 2.0], shape="ball")
    with pytest.raises(ValueError):
        estimate_Lp(random_quadratic(2, 0), 3, Region(np.zeros(2), 1.0), n_pairs=0)


def test_region_samples_inside():
    rng = np.random.default_rng(0)
    box = Region([1.0, -1.0], [0.5, 2.0])
    pts = box.sample(rng, 1000)
    assert np.all(np.abs(pts - box.centre) <= box.radius)
    ball = Region([0.0, 0.0, 0.0], 2.0, shape="ball")
    assert np.all(np.linalg.norm(ball.sample(rng, 1000), axis=1) <= 2.0)


def test_estimate_G_examples():
    q = quadratic_problem([1.0], [0.0])
    oracle = StochasticOracle(sigma=0.0)
    G = estimate_G(q, oracle, 2, 2000, Region([0.0], 2.0))
    assert 2.0 * 0.99 <= G <= 2.2
    zero = FunctionProblem(lambda th: 0.0, lambda th: np.zeros_like(th), [0.0, 0.0])
    assert estimate_G(zero, oracle, 3, 10, Region(np.zeros(2), 1.0), safety=1.0) == 0.0


def test_estimate_G_grows_with_region():
    q = random_quadratic(4, 0)
    oracle = StochasticOracle(sigma=0.1)
    small = estimate_G(q, oracle, 3, 200, Region(q.theta0, 0.5), seed=1)
    large = estimate_G(q, oracle, 3, 200, Region(q.theta0, 2.0), seed=1)
    assert large >= small


def _lp_run(problem, eta, T, p=3, seed=0, sigma=0.0):
    hp = HyperParams(p=p, eta=eta)
    oracle = StochasticOracle(sigma=sigma, seed=seed, batch_size="T", horizon=T)
    return run_trajectory(problem, "lp_descent", hp, oracle, T)


def _quadratic_constants(q, p, T):
    L = majorization_to_lp(q.majorization, p)
    region = Region(q.theta0, np.abs(q.theta0 - q.theta_star) + 1.0)
    G = estimate_G(q, StochasticOracle(), p, 2000, region)
    return L, G


def test_verify_run_noiseless_quadratic():
    q = QuadraticProblem([1.0, 4.0, 10.0], [1.0, 0.0, -2.0], theta0=[2.0, -1.0, 0.5])
    p, T = 3, 200
    L, G = _quadratic_constants(q, p, T)
    eta = tuned_eta(L, G, T, p)
    rec = _lp_run(q, eta, T, p)
    common = dict(f0=q.value(q.theta0), f_star=q.f_star_hint, sigma_l1=0.0, eta=eta, T=T, p=p, n_t=T)
    rep = verify_run(rec, L=L, G=G, **common)
    assert rep.satisfied
    assert rep.empirical_mean_stationarity == pytest.approx(np.mean(rec.channel("stationarity")[:T]))
    assert verify_run(rec, L=10 * L, G=10 * G, **common).satisfied


def test_verify_run_seed_average():
    q = random_quadratic(4, 3)
    T = 30
    recs = [_lp_run(q, 0.01, T, seed=s, sigma=0.5) for s in range(3)]
    rep = verify_run(recs, f0=q.value(q.theta0), f_star=q.f_star_hint, L=100.0, G=50.0,
                     sigma_l1=2.0, eta=0.01, T=T, p=3, n_t=T)
    per = [np.mean(r.channel("stationarity")[:T]) for r in recs]
    assert rep.empirical_mean_stationarity == pytest.approx(np.mean(per), rel=1e-14)


def test_verify_run_errors():
    q = random_quadratic(3, 0)
    rec = _lp_run(q, 0.01, 5)
    kw = dict(f0=1.0, f_star=0.0, L=1.0, G=1.0, sigma_l1=0.0, eta=0.01, p=3)
    with pytest.raises(ValueError):
        verify_run(rec, T=0, **kw)
    with pytest.raises(KeyError):
        verify_run([{"t": 0, "loss": 1.0}], T=1, **kw)
    with pytest.raises(ValueError):
        verify_run(rec, T=50, **kw)


def test_bound_report_json_fields():
    q = random_quadratic(3, 0)
    rec = _lp_run(q, 0.01, 10)
    rep = verify_run(rec, f0=q.value(q.theta0), f_star=q.f_star_hint, L=100.0, G=10.0,
                     sigma_l1=0.0, eta=0.01, T=10, p=3, n_t=1)
    assert isinstance(rep, BoundReport)
    doc = json.loads(rep.to_json())
    assert set(doc) == {"bound_general", "bound_tuned", "empirical_mean_stationarity",
                        "constants_used", "satisfied"}
    assert set(doc["constants_used"]) == {"L", "G", "sigma_l1", "f0", "f_star", "eta", "T", "n_t"}
    assert doc["satisfied"] == (doc["empirical_mean_stationarity"] <= doc["bound_general"])
