import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bnf.batchnorm import BNParams, batch_stats, bn_network_forward, bn_transform
from bnf.errors import DegenerateBatch

matrices = arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(2, 9)), elements=st.floats(-100, 100))


def two_pass_oracle(Z):
    mus, sigmas = [], []
    for row in Z.tolist():
        m = 0.0
        for v in row:
            m += v
        m /= len(row)
        s = 0.0
        for v in row:
            s += (v - m) * (v - m)
        mus.append(m)
        sigmas.append(math.sqrt(s / len(row)))
    return np.array(mus), np.array(sigmas)


def test_stats_examples():
    s = batch_stats([[1.0, 2.0, 3.0]])
    assert s.mu[0] == 2.0
    assert s.sigma[0] == pytest.approx(math.sqrt(2 / 3), rel=1e-15)
    s = batch_stats([[4.5, 4.5, 4.5, 4.5]])
    assert (s.mu[0], s.sigma[0]) == (4.5, 0.0)
    s = batch_stats([[4.0, 7.0, 11.0]])
    assert s.mu[0] == pytest.approx(22 / 3, rel=1e-15)
    assert s.sigma[0] == pytest.approx(math.sqrt(74) / 3, rel=1e-15)


def test_stats_match_symbolic_formulas():
    # mu = 4/3 w1 + 2 w2, sigma = sqrt(2 w1^2 + 6 w1 w2 + 6 w2^2) / 3
    for w1, w2 in [(1.0, 3.0), (5.0, 3.0), (-2.0, 0.5)]:
        s = batch_stats([[w1 + w2, w1 + 2 * w2, 2 * w1 + 3 * w2]])
        assert s.mu[0] == pytest.approx(4 / 3 * w1 + 2 * w2, rel=1e-14)
        assert s.sigma[0] == pytest.approx(math.sqrt(2 * w1**2 + 6 * w1 * w2 + 6 * w2**2) / 3, rel=1e-14)


def test_stats_equal_two_pass_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        Z = rng.normal(scale=5.0, size=(5, 7))
        mu, sigma = two_pass_oracle(Z)
        s = batch_stats(Z)
        np.testing.assert_allclose(s.mu, mu, rtol=0, atol=1e-13)
        np.testing.assert_allclose(s.sigma, sigma, rtol=1e-14, atol=0)


def test_transform_example():
    out = bn_transform([[4.0, 7.0, 11.0]], BNParams.plain())
    r = math.sqrt(74)
    np.testing.assert_allclose(out, [[-10 / r, -1 / r, 11 / r]], rtol=1e-14)


def test_transform_degenerate_row():
    Z = np.array([[1.0, 2.0, 3.0], [2.0, 2.0, 2.0]])
    with pytest.raises(DegenerateBatch) as info:
        bn_transform(Z, BNParams.plain(2))
    assert info.value.row == 1


def test_bn_network_forward_examples(ex1):
    s = batch_stats([[4.0, 7.0, 11.0]])
    assert bn_network_forward([1, 3], [1, 1], s, BNParams.plain()) == pytest.approx(-10 / math.sqrt(74), rel=1e-14)
    assert bn_network_forward([1, 3], [1, 1], s, BNParams.plain()) == pytest.approx(-1.16248, abs=1e-5)
    s53 = batch_stats([[8.0, 11.0, 19.0]])
    assert bn_network_forward([5, 3], [2, 3], s53, BNParams.plain()) == pytest.approx(19 / math.sqrt(194), rel=1e-14)
    xbar = ex1.inputs.mean(axis=0)
    assert bn_network_forward([1, 3], xbar, s, BNParams([2.0], [0.75])) == pytest.approx(0.75, abs=1e-14)


def _nondegenerate(Z):
    return bool(np.all(batch_stats(Z).sigma > 1e-3 * (1 + np.abs(Z).max())))


@settings(max_examples=200)
@given(matrices)
def test_rows_standardized(Z):
    assume(_nondegenerate(Z))
    out = bn_transform(Z, BNParams.plain(Z.shape[0]))
    assert np.all(np.abs(out.mean(axis=1)) <= 1e-12)
    assert np.all(np.abs(out.std(axis=1) - 1) <= 1e-12)


@settings(max_examples=200)
@given(matrices)
def test_recovery(Z):
    assume(_nondegenerate(Z))
    s = batch_stats(Z)
    out = bn_transform(Z, BNParams(s.sigma, s.mu))
    np.testing.assert_allclose(out, Z, rtol=1e-12, atol=1e-12 * (1 + np.abs(Z).max()))


@settings(max_examples=200)
@given(matrices, st.floats(1e-3, 1e3))
def test_positive_scale_invariance(Z, c):
    assume(_nondegenerate(Z))
    params = BNParams(np.linspace(-2, 2, Z.shape[0]), np.linspace(1, 3, Z.shape[0]))
    np.testing.assert_allclose(bn_transform(c * Z, params), bn_transform(Z, params), rtol=0, atol=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        BNParams([1.0, 2.0], [0.0])
    with pytest.raises(ValueError):
        BNParams([np.inf], [0.0])
