import numpy as np
import pytest

from pairlik.baselines import _cox_quantities, fit_cox, fit_pdr4, s4
from pairlik.dataset import Dataset
from pairlik.errors import SampleCapError
from pairlik.sphere import angles_to_beta

from conftest import random_dataset, random_unit


def s4_naive(data, beta):
    """Direct 4-index enumeration over distinct quadruples."""
    n = data.n
    proj = data.x @ np.asarray(beta, float)
    v = proj[:, None] - proj[None, :]
    b = (data.y[:, None] > data.y[None, :]).astype(float)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            for k in range(n):
                if k in (i, j):
                    continue
                for l in range(n):
                    if l in (i, j, k):
                        continue
                    if v[i, j] > v[k, l]:
                        total += b[i, j] - b[k, l]
    return total


def test_s4_concordant_quadruples():
    # y strictly increasing in x' beta and all projections distinct
    x = np.array([[0.0], [1.0], [2.5], [4.0]])
    data = Dataset(x, np.array([1.0, 2.0, 3.0, 4.0]))
    beta = np.array([1.0])
    assert s4(data, beta) == s4_naive(data, beta)
    assert s4(data, beta) > 0


@pytest.mark.parametrize("seed", range(6))
def test_s4_matches_naive_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 12))
    x = rng.standard_normal((n, 2))
    y = rng.standard_normal(n)
    if seed % 2:
        y[0] = y[1]       # response tie
        x[2] = x[3]       # projection tie
    data = Dataset(x, y)
    beta = random_unit(seed + 9, 2)
    assert abs(s4(data, beta) - s4_naive(data, beta)) < 1e-9


def test_s4_scale_invariance():
    data = random_dataset(3, n=8, p=2)
    beta = random_unit(4, 2)
    assert s4(data, beta) == s4(data, 3.7 * beta)


def test_s4_rank_invariance():
    data = random_dataset(5, n=8, p=2)
    beta = random_unit(6, 2)
    assert s4(data, beta) == s4(Dataset(data.x, np.exp(data.y)), beta)


def test_s4_refuses_large_n():
    data = random_dataset(7, n=12, p=2)
    with pytest.raises(SampleCapError):
        s4(data, np.array([1.0, 0.0]), n_cap=10)
    with pytest.raises(SampleCapError):
        fit_pdr4(data, n_cap=10)


def test_fit_pdr4_matches_grid_oracle():
    rng = np.random.default_rng(31)
    n = 30
    x = rng.standard_normal((n, 2))
    beta0 = np.array([1.0, 1.0]) / np.sqrt(2)
    y = x @ beta0 + 0.5 * rng.logistic(size=n)
    data = Dataset(x, y)
    rep = fit_pdr4(data, seed=0)
    # dense grid oracle: the fitted criterion must match the grid optimum
    grid = np.arange(-np.pi, np.pi, 1e-3)
    best = -np.inf
    best_th = None
    for th in grid:
        val = s4(data, angles_to_beta(np.array([th])))
        if val > best:
            best, best_th = val, th
    assert rep.loglik >= best
    b_grid = angles_to_beta(np.array([best_th]))
    b = rep.beta_hat.beta
    if b @ b_grid < 0:
        b = -b
    assert np.linalg.norm(b - b_grid) < 0.05


def test_fit_pdr4_invariances():
    data = random_dataset(11, n=20, p=2)
    rep1 = fit_pdr4(data, seed=5)
    rep2 = fit_pdr4(Dataset(data.x, np.tanh(data.y)), seed=5)
    assert np.array_equal(rep1.beta_hat.beta, rep2.beta_hat.beta)
    perm = np.random.default_rng(0).permutation(20)
    rep3 = fit_pdr4(Dataset(data.x[perm], data.y[perm]), seed=5)
    assert np.linalg.norm(rep1.beta_hat.beta - rep3.beta_hat.beta) < 1e-8


def test_cox_initial_loglik_is_log_risk_sizes():
    data = random_dataset(21, n=12, p=2)
    order = np.lexsort((np.arange(data.n), data.y))
    ys = data.y[order]
    firsts = np.flatnonzero(np.concatenate(([True], ys[1:] != ys[:-1])))
    gid = np.cumsum(np.concatenate(([0], (ys[1:] != ys[:-1]).astype(int))))
    ll0 = _cox_quantities(data.x[order], np.ones(data.n), firsts[gid],
                          np.zeros(2), want_derivs=False)[0]
    risk_sizes = data.n - firsts[gid]
    assert abs(ll0 - (-np.sum(np.log(risk_sizes)))) < 1e-12


def test_cox_newton_agrees_with_bisection_oracle():
    # scalar covariate, n = 3: the score is monotone in b; bracket and
    # bisect it independently of the Newton path
    data = Dataset(np.array([[0.0], [1.0], [0.4]]), np.array([2.0, 1.0, 3.0]))

    def score(b):
        return _cox_quantities(
            np.array([[1.0], [0.0], [0.4]]),  # x sorted by y: y=(1,2,3)
            np.ones(3),
            np.array([0, 1, 2]),
            np.array([b]),
        )[1][0]

    lo, hi = -60.0, 60.0
    assert score(lo) * score(hi) < 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if score(lo) * score(mid) <= 0:
            hi = mid
        else:
            lo = mid
    root = 0.5 * (lo + hi)
    fit = fit_cox(data)
    assert abs(fit.beta_hat_unnormalized[0] - root) < 1e-8


def test_cox_trace_monotone_and_orientation():
    rng = np.random.default_rng(2)
    n = 60
    x = rng.standard_normal((n, 2))
    beta0 = np.array([1.0, 0.5])
    # hazard model data: H(y) = -x'beta + eps
    eps = np.log(-np.log1p(-rng.random(n)))
    data = Dataset(x, -(x @ beta0) + eps)
    fit = fit_cox(data)
    slack = 1e-12 * np.maximum(1.0, np.abs(fit.ll_trace[:-1]))
    assert np.all(np.diff(fit.ll_trace) >= -slack)
    # partial-likelihood coefficients estimate +beta0; the report negates
    assert fit.beta_hat_unnormalized @ beta0 > 0
    assert fit.beta_hat.beta @ beta0 < 0


def test_cox_y_location_and_monotone_invariance():
    data = random_dataset(23, n=30, p=2)
    f1 = fit_cox(data)
    f2 = fit_cox(Dataset(data.x, data.y + 11.5))
    f3 = fit_cox(Dataset(data.x, np.exp(data.y)))
    assert np.array_equal(f1.beta_hat_unnormalized, f2.beta_hat_unnormalized)
    assert np.array_equal(f1.beta_hat_unnormalized, f3.beta_hat_unnormalized)


def test_cox_breslow_handles_ties():
    x = np.array([[0.1], [0.9], [0.5], [0.2]])
    y = np.array([1.0, 1.0, 2.0, 3.0])
    fit = fit_cox(Dataset(x, y))
    assert np.isfinite(fit.loglik)
    slack = 1e-12 * np.maximum(1.0, np.abs(fit.ll_trace[:-1]))
    assert np.all(np.diff(fit.ll_trace) >= -slack)


def test_cox_censoring_indicators_respected():
    data = random_dataset(25, n=40, p=2)
    delta = (np.random.default_rng(1).random(40) > 0.3).astype(float)
    censored = Dataset(data.x, data.y, delta)
    f_all = fit_cox(data)
    f_cens = fit_cox(censored)
    assert not np.array_equal(f_all.beta_hat_unnormalized,
                              f_cens.beta_hat_unnormalized)
