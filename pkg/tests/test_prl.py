import numpy as np
from scipy.special import expit

from pairlik.dataset import Dataset
from pairlik.isotonic import StepCdf
from pairlik.prl import fit_prl, loglik, profile_loglik
from pairlik.sphere import angles_to_beta

from conftest import random_dataset, random_unit


def dense_step_cdf(fn, lo=-30.0, hi=30.0, k=6001):
    knots = np.linspace(lo, hi, k)
    vals = np.sort(np.clip(fn(knots), 0.0, 1.0))
    return StepCdf(knots, vals)


def two_point_data():
    return Dataset(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([2.0, 1.0]))


def test_constant_half_cdf():
    data = two_point_data()
    f = StepCdf(np.array([0.0]), np.array([0.5]))
    assert np.isclose(loglik(data, np.array([1.0, 0.0]), f), 2 * np.log(0.5))


def test_perfect_fit_is_exactly_zero():
    data = two_point_data()
    # F(v12) = F(1) = 1, F(v21) = F(-1) = 0
    f = StepCdf(np.array([-1.0, 1.0]), np.array([0.0, 1.0]))
    assert loglik(data, np.array([1.0, 0.0]), f, "strict") == 0.0


def test_zero_probability_with_nonzero_indicator_is_minus_inf():
    data = two_point_data()
    f = StepCdf(np.array([-1.0, 1.0]), np.array([0.0, 0.0]))  # F(1) = 0, I = 1
    assert loglik(data, np.array([1.0, 0.0]), f) == -np.inf


def test_loglik_matches_bruteforce_double_loop():
    data = random_dataset(77, n=3, p=2)
    beta = random_unit(78, 2)
    f = dense_step_cdf(lambda t: expit(1.3 * t))
    expected = 0.0
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            v = float((data.x[i] - data.x[j]) @ beta)
            q = float(f(v))
            if data.y[i] > data.y[j]:
                expected += np.log(q)
            else:
                expected += np.log1p(-q)
    assert abs(loglik(data, beta, f) - expected) < 1e-12


def test_tie_aware_contribution_table():
    # supplement-style contribution check: pair with tied responses adds
    # log F(v_ji) + log F(v_ij), strictly ordered pairs add the mixed terms
    data = Dataset(np.array([[0.5], [0.0]]), np.array([1.0, 1.0]))
    f = dense_step_cdf(lambda t: expit(t))
    v = 0.5
    expected = np.log(float(f(v))) + np.log(float(f(-v)))
    assert abs(loglik(data, np.array([1.0]), f, "tie_aware") - expected) < 1e-12
    data2 = Dataset(np.array([[0.5], [0.0]]), np.array([2.0, 1.0]))
    expected2 = np.log(float(f(v))) + np.log1p(-float(f(-v)))
    assert abs(loglik(data2, np.array([1.0]), f, "tie_aware") - expected2) < 1e-12


def test_profile_two_points_perfect_separation():
    pl, cdf = profile_loglik(two_point_data(), np.array([1.0, 0.0]))
    assert pl == 0.0
    assert np.array_equal(cdf.values, [0.0, 1.0])


def test_profile_constant_y():
    x = np.arange(6.0).reshape(-1, 1) / 3.0
    data = Dataset(x, np.full(6, 2.5))
    pl_tie, cdf_tie = profile_loglik(data, np.array([1.0]), "tie_aware")
    assert pl_tie == 0.0
    assert np.all(cdf_tie.values == 1.0)
    pl_strict, cdf_strict = profile_loglik(data, np.array([1.0]), "strict")
    assert pl_strict == 0.0
    assert np.all(cdf_strict.values == 0.0)


def random_monotone_cdf(rng, knots):
    vals = np.sort(rng.uniform(0.005, 0.995, knots.size))
    return StepCdf(knots, vals)


def test_profile_dominates_random_monotone_cdfs():
    data = random_dataset(10, n=10, p=2)
    rng = np.random.default_rng(99)
    grid = np.linspace(-np.pi, np.pi, 3600)
    check_at = grid[::72]  # 50 directions from the grid
    for th in check_at:
        beta = angles_to_beta(np.array([th]))
        pl, cdf = profile_loglik(data, beta)
        for _ in range(50):
            f = random_monotone_cdf(rng, cdf.knots)
            assert pl >= loglik(data, beta, f) - 1e-10


def test_fit_recovers_noiseless_direction():
    rng = np.random.default_rng(123)
    x = rng.standard_normal((50, 2))
    beta_star = np.array([1.0, 0.0])
    data = Dataset(x, x @ beta_star)
    report = fit_prl(data, seed=4)
    assert report.loglik == 0.0
    assert "perfect_separation" in report.flags
    b = report.beta_hat.beta
    if b @ beta_star < 0:
        b = -b
    assert np.linalg.norm(b - beta_star) < 0.1
    # grid oracle: no direction on a fine grid beats the fitted maximum
    from pairlik._engine import PairEngine

    eng = PairEngine.uncensored(data, "strict")
    grid = np.arange(-np.pi, np.pi, 1e-3)
    grid_best = max(
        eng.pl_batch(angles_to_beta(grid[None, i:i + 2048]))
        .max() for i in range(0, grid.size, 2048)
    )
    assert report.loglik >= grid_best - 1e-12


def test_rank_invariance_bitwise():
    data = random_dataset(200, n=25, p=2)
    rep1 = fit_prl(data, seed=7)
    rep2 = fit_prl(Dataset(data.x, np.exp(data.y)), seed=7)
    assert np.array_equal(rep1.beta_hat.beta, rep2.beta_hat.beta)
    assert rep1.loglik == rep2.loglik
    assert np.array_equal(rep1.start_values, rep2.start_values)


def test_row_permutation_invariance():
    data = random_dataset(201, n=20, p=2)
    perm = np.random.default_rng(1).permutation(20)
    rep1 = fit_prl(data, seed=3)
    rep2 = fit_prl(Dataset(data.x[perm], data.y[perm]), seed=3)
    assert np.linalg.norm(rep1.beta_hat.beta - rep2.beta_hat.beta) < 1e-8


def test_monotone_transform_invariance_of_objective():
    data = random_dataset(202, n=12, p=2)
    rng = np.random.default_rng(5)
    f = dense_step_cdf(lambda t: expit(0.7 * t))
    for _ in range(5):
        beta = random_unit(int(rng.integers(1e6)), 2)
        a = loglik(data, beta, f)
        b = loglik(Dataset(data.x, np.tanh(data.y)), beta, f)
        assert a == b
        pa, _ = profile_loglik(data, beta)
        pb, _ = profile_loglik(Dataset(data.x, data.y ** 3), beta)
        assert pa == pb


def test_covariate_shift_invariance():
    data = random_dataset(203, n=12, p=2)
    shifted = Dataset(data.x + np.array([3.0, -1.5]), data.y)
    beta = random_unit(9, 2)
    assert profile_loglik(data, beta)[0] == profile_loglik(shifted, beta)[0]


def test_determinism_given_seed():
    data = random_dataset(204, n=15, p=2)
    r1 = fit_prl(data, seed=11)
    r2 = fit_prl(data, seed=11)
    assert np.array_equal(r1.beta_hat.beta, r2.beta_hat.beta)
    assert np.array_equal(r1.start_values, r2.start_values)


def test_loglik_equals_reevaluation_at_fit():
    data = random_dataset(205, n=15, p=2)
    rep = fit_prl(data, seed=2)
    pl, _ = profile_loglik(data, rep.beta_hat.beta)
    assert abs(rep.loglik - pl) < 1e-9


def test_p1_fit_two_point_comparison():
    x = np.arange(10.0).reshape(-1, 1)
    data = Dataset(x, -np.arange(10.0))  # decreasing: best direction is -1
    rep = fit_prl(data, seed=0)
    assert np.array_equal(rep.beta_hat.beta, [-1.0])
    assert rep.loglik == 0.0


def test_report_fields():
    data = random_dataset(206, n=10, p=3)
    rep = fit_prl(data, seed=1, n_starts=5)
    assert rep.n_starts == 5
    assert rep.start_values.shape == (5,)
    assert rep.converged.shape == (5,)
    assert abs(np.linalg.norm(rep.beta_hat.beta) - 1.0) < 1e-12
    b_from_theta = angles_to_beta(rep.theta_hat.theta)
    assert np.max(np.abs(b_from_theta - rep.beta_hat.beta)) < 1e-10


def test_profile_with_duplicate_rows_and_ties():
    # duplicate covariate rows create zero projections; tied responses
    # break the mirror shortcut; both must match the brute-force route
    x = np.array([[1.0, 0.5], [1.0, 0.5], [0.0, -0.2], [2.0, 0.1]])
    y = np.array([1.0, 1.0, 0.0, 2.0])
    data = Dataset(x, y)
    beta = np.array([0.8, 0.6])
    pl, cdf = profile_loglik(data, beta)
    # brute force: enumerate ordered pairs, pool equal projections,
    # isotonic by max-min, then sum the likelihood terms
    from pairlik.isotonic import maxmin_oracle

    vals = {}
    for i in range(4):
        for j in range(4):
            if i == j:
                continue
            v = float((x[i] - x[j]) @ beta)
            vals.setdefault(v, []).append(1.0 if y[i] > y[j] else 0.0)
    knots = np.array(sorted(vals))
    resp = np.array([np.mean(vals[k]) for k in knots])
    wts = np.array([len(vals[k]) for k in knots], dtype=float)
    fitted = maxmin_oracle(resp, wts)
    assert np.allclose(cdf.knots, knots, atol=1e-12)
    assert np.max(np.abs(cdf.values - fitted)) < 1e-12
    expected = sum(
        w * (r * np.log(f) if r > 0 else 0.0)
        + w * ((1 - r) * np.log1p(-f) if r < 1 else 0.0)
        for r, f, w in zip(resp, fitted, wts)
    )
    assert abs(pl - expected) < 1e-10
