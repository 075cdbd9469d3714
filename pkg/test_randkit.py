"""
Tests for engine.randkit: stream determinism and splitting, samplers.
"""

import numpy as np
import pytest
from scipy import integrate, stats

from engine.randkit import (
    CovariateKind,
    CovariateModel,
    SparseParam,
    make_stream,
    sample_covariate,
    sample_covariates,
    sample_sparse_uniform_param,
    sample_standard_normal,
)


# ── Streams ───────────────────────────────────────────────────────────────────

def test_same_key_same_draws():
    a = sample_standard_normal(make_stream(42, 0), 1_000_000)
    b = sample_standard_normal(make_stream(42, 0), 1_000_000)
    assert np.array_equal(a, b)


def test_distinct_replications_uncorrelated():
    a = sample_standard_normal(make_stream(42, 0), 10_000)
    b = sample_standard_normal(make_stream(42, 1), 10_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05


def test_stream_independent_of_consumption_order():
    fresh = sample_standard_normal(make_stream(42, 7), 100)
    for rep in range(7):
        sample_standard_normal(make_stream(42, rep), 5000)
    assert np.array_equal(sample_standard_normal(make_stream(42, 7), 100), fresh)


def test_child_streams_differ_from_parent():
    parent = make_stream(3, 2)
    child = parent.child(1)
    assert not np.array_equal(sample_standard_normal(parent, 50), sample_standard_normal(child, 50))
    with pytest.raises(ValueError):
        parent.child(0)


def test_negative_replication_rejected():
    with pytest.raises(ValueError):
        make_stream(1, -1)


# ── Normals ───────────────────────────────────────────────────────────────────

def test_normal_requires_positive_n():
    with pytest.raises(ValueError):
        sample_standard_normal(make_stream(1, 0), 0)
    draw = sample_standard_normal(make_stream(1, 0), 1)
    assert draw.shape == (1,) and np.isfinite(draw[0])


def test_normal_moments():
    z = sample_standard_normal(make_stream(5, 0), 100_000)
    assert -0.013 < z.mean() < 0.013
    inside = np.mean(np.abs(z) < 1.0)
    expected = stats.norm.cdf(1.0) - stats.norm.cdf(-1.0)
    assert inside == pytest.approx(expected, abs=0.006)


# ── Covariates ────────────────────────────────────────────────────────────────

def test_clipped_entries_bounded():
    model = CovariateModel(CovariateKind.CLIPPED_GAUSSIAN, 50, bound=1.0)
    x = sample_covariates(make_stream(9, 0), model, 2000)
    assert x.min() >= -1.0 and x.max() <= 1.0
    assert np.any(x == 1.0)  # clamped, not rejected


def test_identity_variance():
    model = CovariateModel(CovariateKind.GAUSSIAN_IDENTITY, 3)
    x = sample_covariates(make_stream(10, 0), model, 100_000)
    assert x[:, 0].var() == pytest.approx(1.0, abs=0.02)


def test_clipped_variance_matches_quadrature():
    inner, _ = integrate.quad(lambda z: z * z * stats.norm.pdf(z), -1.0, 1.0)
    expected = inner + 2.0 * stats.norm.sf(1.0)
    model = CovariateModel(CovariateKind.CLIPPED_GAUSSIAN, 2, bound=1.0)
    x = sample_covariates(make_stream(11, 0), model, 100_000)
    assert np.mean(x[:, 0] ** 2) == pytest.approx(expected, abs=0.01)


def test_circulant_covariance():
    model = CovariateModel(CovariateKind.GAUSSIAN_CIRCULANT, 4, r=0.5)
    x = sample_covariates(make_stream(12, 0), model, 100_000)
    np.testing.assert_allclose(np.cov(x, rowvar=False), model.covariance(), atol=0.03)


def test_single_covariate_shape():
    model = CovariateModel(CovariateKind.GAUSSIAN_BLOCK, 6, block_size=3, block_rho=0.4)
    assert sample_covariate(make_stream(1, 1), model).shape == (6,)


@pytest.mark.parametrize("kwargs", [
    {"kind": "gaussian_circulant", "d": 4, "r": 1.0},
    {"kind": "clipped_gaussian", "d": 4, "bound": 0.0},
    {"kind": "gaussian_identity", "d": 1},
])
def test_invalid_models(kwargs):
    with pytest.raises(ValueError):
        CovariateModel(**kwargs)


# ── Sparse parameters ─────────────────────────────────────────────────────────

def test_full_support_param():
    theta = sample_sparse_uniform_param(make_stream(1, 0), 10, 10, 0.0, 1.0)
    assert theta.support == tuple(range(10))
    assert all(0.0 <= v <= 1.0 for v in theta.values)


def test_exact_sparsity():
    theta = sample_sparse_uniform_param(make_stream(2, 0), 100, 5, 0.0, 1.0)
    assert theta.s0 == 5
    assert np.count_nonzero(theta.dense()) == 5


def test_uniform_value_mean():
    stream = make_stream(3, 0)
    values = [v for _ in range(2000) for v in sample_sparse_uniform_param(stream, 20, 5, 0.0, 1.0).values]
    assert np.mean(values) == pytest.approx(0.5, abs=0.012)


def test_sparse_param_dot_and_round_trip():
    theta = SparseParam.from_dense([0.0, 2.0, 0.0, -1.0])
    assert theta.support == (1, 3)
    assert theta.dot([5.0, 1.0, 7.0, 1.0]) == pytest.approx(1.0)
    assert SparseParam(4, (), ()).dot(np.ones(4)) == 0.0


def test_sparse_param_validation():
    with pytest.raises(ValueError):
        SparseParam(3, (2, 1), (1.0, 1.0))
    with pytest.raises(ValueError):
        sample_sparse_uniform_param(make_stream(1, 0), 5, 6, 0.0, 1.0)
