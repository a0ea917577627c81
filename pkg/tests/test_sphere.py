import numpy as np
import pytest

from pairlik.sphere import PolarAngles, UnitBeta, angles_to_beta, to_angles, to_beta


def test_identity_angle_p2():
    assert np.allclose(to_beta(PolarAngles(np.array([0.0]))).beta, [1.0, 0.0])


def test_quarter_turn_p2():
    b = to_beta(PolarAngles(np.array([np.pi / 2]))).beta
    assert np.allclose(b, [0.0, 1.0], atol=1e-15)


def test_p3_product_formulas():
    # direct evaluation of the three product formulas
    t1, t2 = np.pi / 4, np.pi / 3
    expected = np.array([
        np.cos(t1),
        np.sin(t1) * np.cos(t2),
        np.sin(t1) * np.sin(t2),
    ])
    assert np.allclose(expected,
                       [np.sqrt(2) / 2, np.sqrt(2) / 4, np.sqrt(6) / 4])
    b = to_beta(PolarAngles(np.array([t1, t2]))).beta
    assert np.allclose(b, expected, atol=1e-15)
    assert abs(np.linalg.norm(b) - 1.0) < 1e-12


def test_to_angles_axis_and_diagonal():
    assert np.allclose(to_angles(UnitBeta(np.array([1.0, 0.0]))).theta, [0.0])
    th = to_angles(UnitBeta(np.array([1.0, 1.0]) / np.sqrt(2))).theta
    assert np.allclose(th, [np.pi / 4])


@pytest.mark.parametrize("p", [2, 3, 5])
def test_roundtrip_random_unit_vectors(p):
    rng = np.random.default_rng(100 + p)
    worst = 0.0
    for _ in range(1000):
        b = rng.standard_normal(p)
        b /= np.linalg.norm(b)
        b2 = to_beta(to_angles(UnitBeta(b))).beta
        worst = max(worst, float(np.max(np.abs(b - b2))))
    assert worst < 1e-10


@pytest.mark.parametrize("p", [2, 3, 4, 6])
def test_unit_norm_for_random_angles(p):
    rng = np.random.default_rng(7 * p)
    thetas = rng.uniform(-np.pi, np.pi, size=(500, p - 1))
    for th in thetas:
        assert abs(np.linalg.norm(angles_to_beta(th)) - 1.0) < 1e-12


@pytest.mark.parametrize("beta", [
    [0.0, 1.0], [0.0, -1.0], [-1.0, 0.0],
    [0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
])
def test_chart_singularities_map_back(beta):
    b = np.asarray(beta, dtype=float)
    th = to_angles(UnitBeta(b))
    assert np.max(np.abs(to_beta(th).beta - b)) < 1e-12
    assert np.all(np.abs(th.theta) <= np.pi + 1e-12)


def test_batched_chart_matches_single():
    rng = np.random.default_rng(3)
    thetas = rng.uniform(-np.pi, np.pi, size=(3, 40))
    batch = angles_to_beta(thetas)
    for k in range(40):
        assert np.array_equal(batch[:, k], angles_to_beta(thetas[:, k]))


def test_polar_angles_validation():
    with pytest.raises(ValueError):
        PolarAngles(np.array([4.0]))
    with pytest.raises(ValueError):
        PolarAngles(np.array([np.nan]))
    with pytest.raises(ValueError):
        UnitBeta(np.array([1.0, 1.0]))
