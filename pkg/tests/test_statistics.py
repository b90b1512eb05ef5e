import math

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

from data_modules.statistics import (
    ColumnStats,
    GaussianStats,
    StatsConfig,
    column_design,
    gaussian_holdout_risk,
    gaussian_nll,
    gaussian_stats,
    hyvarinen_score,
    legendre_column_stats,
    score_on_holdout,
)
from models.basis import BasisSpec
from models.dataset import Dataset, Support
from models.errors import DimensionMismatchError, DomainError, EmptyDatasetError
from models.legendre import legendre_table
from models.params import BlockLayout, ParamBlocks


def test_gaussian_stats_single_sample():
    stats = gaussian_stats(Dataset(np.array([[1.0, 2.0]])))
    np.testing.assert_array_equal(stats.sigma_hat, [[1.0, 2.0], [2.0, 4.0]])


def test_gaussian_stats_monte_carlo(rng):
    stats = gaussian_stats(Dataset(rng.standard_normal((100_000, 3))))
    assert np.abs(stats.sigma_hat - np.eye(3)).max() <= 0.05


def test_stats_reject_empty_and_wrong_support():
    with pytest.raises(EmptyDatasetError):
        gaussian_stats(Dataset(np.zeros((0, 2))))
    with pytest.raises(DomainError):
        legendre_column_stats(Dataset(np.full((3, 2), 0.5)), BasisSpec.legendre(1, 1))
    with pytest.raises(ValueError):
        legendre_column_stats(Dataset(np.full((3, 2), 0.5), Support.UNIT_CUBE), BasisSpec.legendre(3, 3),
                              StatsConfig(max_column_dim=5))


def test_legendre_single_sample_design():
    data = Dataset(np.array([[0.5, 0.5]]), Support.UNIT_CUBE)
    design, _ = column_design(data, BasisSpec.legendre(1, 1), 0)
    np.testing.assert_allclose(design[0], [np.sqrt(3.0) / 2.0, 0.0], atol=1e-15)
    stats = legendre_column_stats(data, BasisSpec.legendre(1, 1))
    np.testing.assert_allclose(stats[0].gamma, [[0.75, 0.0], [0.0, 0.0]], atol=1e-15)


def test_boundary_sample_contributes_nothing():
    data = Dataset(np.array([[0.0, 0.3, 0.7]]), Support.UNIT_CUBE)
    stats = legendre_column_stats(data, BasisSpec.legendre(2, 2))
    assert not np.any(stats[0].gamma)
    assert not np.any(stats[0].kvec)


def test_stats_average_over_samples(make_unit_data, rng):
    data = make_unit_data(rng, 3, 7)
    basis = BasisSpec.legendre(2, 2)
    pooled = legendre_column_stats(data, basis)
    singles = [legendre_column_stats(data.subset([r]), basis) for r in range(data.n)]
    for i in range(3):
        np.testing.assert_allclose(pooled[i].gamma, np.mean([s[i].gamma for s in singles], axis=0), atol=1e-12)
        np.testing.assert_allclose(pooled[i].kvec, np.mean([s[i].kvec for s in singles], axis=0), atol=1e-12)


def test_gamma_is_symmetric_psd(legendre_stats):
    for s in legendre_stats:
        np.testing.assert_array_equal(s.gamma, s.gamma.T)
        assert np.linalg.eigvalsh(s.gamma)[0] >= -1e-12
        assert s.dim == 2 + 3 * 4


def test_parallel_stats_match_serial(make_unit_data, rng):
    data = make_unit_data(rng, 4, 50)
    basis = BasisSpec.legendre(2, 1)
    serial = legendre_column_stats(data, basis)
    threaded = legendre_column_stats(data, basis, StatsConfig(n_jobs=2))
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a.gamma, b.gamma)
        np.testing.assert_array_equal(a.kvec, b.kvec)


def test_edge_block_orientation(make_unit_data, rng):
    # block (0, 2) entry (k, l) is phi_k(x_0) phi_l(x_2) in both columns
    data = make_unit_data(rng, 3, 1)
    basis = BasisSpec.legendre(1, 2)
    x = data.values[0]
    values, d1, _ = legendre_table(x, 2)
    left, _ = column_design(data, basis, 0)
    right, _ = column_design(data, basis, 2)
    w0, w2 = x[0] * (1 - x[0]), x[2] * (1 - x[2])
    expected_left = w0 * np.outer(d1[1:3, 0], values[1:3, 2]).ravel()
    expected_right = w2 * np.outer(values[1:3, 0], d1[1:3, 2]).ravel()
    # column 0: vertex, (0, 1), (0, 2); column 2: vertex, (0, 2), (1, 2)
    np.testing.assert_allclose(left[0, 1 + 4:1 + 8], expected_left, rtol=1e-12)
    np.testing.assert_allclose(right[0, 1:1 + 4], expected_right, rtol=1e-12)


def test_hyvarinen_gaussian_examples():
    stats = GaussianStats(np.array([[4.0]]), 1)
    assert hyvarinen_score(np.array([[2.0]]), stats) == pytest.approx(6.0)
    assert hyvarinen_score(np.zeros((1, 1)), stats) == 0.0
    assert hyvarinen_score(np.eye(3), GaussianStats(np.eye(3), 1)) == pytest.approx(-1.5)
    with pytest.raises(DimensionMismatchError):
        hyvarinen_score(np.eye(2), stats)


def test_gaussian_column_form_matches_trace_form(make_gaussian_stats, rng):
    stats = make_gaussian_stats(rng, 5, 80)
    a = rng.standard_normal((5, 5))
    theta = ParamBlocks.from_precision(a + a.T)
    trace_form = hyvarinen_score(theta, stats)
    column_form = hyvarinen_score(theta, stats.to_column_stats())
    assert column_form == pytest.approx(trace_form, rel=1e-12, abs=1e-12)


def test_score_is_quadratic(legendre_stats, rng):
    layout = BlockLayout(4, 2, 4)
    base = rng.standard_normal(layout.size)
    zero = hyvarinen_score(ParamBlocks(4, 2, 4), legendre_stats)
    assert zero == 0.0

    def second_difference(t):
        h = lambda s: hyvarinen_score(ParamBlocks.from_vector(s * t * base, layout), legendre_stats)
        return (h(2.0) - 2.0 * h(1.0) + zero) / (t * t)

    curvature = second_difference(1.0)
    assert curvature >= 0.0
    for t in (0.5, 2.0):
        assert second_difference(t) == pytest.approx(curvature, rel=1e-10)


def test_score_rejects_mismatched_theta(legendre_stats):
    with pytest.raises(DimensionMismatchError):
        hyvarinen_score(ParamBlocks(4, 1, 1), legendre_stats)


def test_score_on_holdout(make_unit_data, rng):
    data = make_unit_data(rng, 3, 60)
    basis = BasisSpec.legendre(2, 2)
    theta = ParamBlocks.from_vector(0.1 * rng.standard_normal(BlockLayout(3, 2, 4).size), BlockLayout(3, 2, 4))
    assert score_on_holdout(theta, data, basis) == pytest.approx(
        hyvarinen_score(theta, legendre_column_stats(data, basis)))
    assert score_on_holdout(ParamBlocks(3, 2, 4), data, basis) == 0.0


def test_gaussian_nll_examples():
    d = 3
    assert gaussian_nll(np.eye(d), np.eye(d)) == pytest.approx(d / 2 + d / 2 * math.log(2 * math.pi))
    expected = math.log(2.0) + 0.5 + 0.5 * math.log(2 * math.pi)
    assert gaussian_nll(np.array([[0.25]]), np.array([[4.0]])) == pytest.approx(expected)
    assert gaussian_nll(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2)) == math.inf


def test_gaussian_holdout_risk(rng):
    holdout = Dataset(rng.standard_normal((40, 2)))
    sigma = gaussian_stats(holdout).sigma_hat
    omega = np.array([[1.5, 0.2], [0.2, 1.0]])
    assert gaussian_holdout_risk(ParamBlocks.from_precision(omega), holdout) == pytest.approx(
        gaussian_nll(omega, sigma))


def _sample_univariate(theta_star, n, rng):
    grid = np.linspace(0.0, 1.0, 20_001)
    values, _, _ = legendre_table(grid, len(theta_star))
    density = np.exp(theta_star @ values[1:])
    cdf = cumulative_trapezoid(density, grid, initial=0.0)
    return np.interp(rng.uniform(size=n), cdf / cdf[-1], grid)


@pytest.mark.parametrize("seed", range(5))
def test_population_minimizer_is_the_true_parameter(seed):
    rng = np.random.default_rng(seed)
    theta_star = np.array([0.5, -0.8, 0.3])
    x = _sample_univariate(theta_star, 20_000, rng)
    stats = legendre_column_stats(Dataset(x[:, None], Support.UNIT_CUBE), BasisSpec.legendre(3, 1))
    step = 0.1
    offsets = step * np.arange(-10, 11)
    for k in range(3):
        scores = []
        for offset in offsets:
            candidate = theta_star.copy()
            candidate[k] += offset
            scores.append(hyvarinen_score(ParamBlocks(1, 3, 1, {0: candidate}), stats))
        assert abs(int(np.argmin(scores)) - 10) <= 1


def test_column_stats_dimension():
    s = ColumnStats(0, np.eye(5), np.zeros(5), 1, 1, 2)
    assert s.dim == 5
    assert s.d == 3
