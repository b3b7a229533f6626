import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from heatpath import besov
from heatpath.errors import ConfigError
from heatpath.kernels import Modulus


def hat(J, j, k):
    """Piecewise-linear Faber function of level j, index k on 2^J + 1 points."""
    x = np.arange(2 ** J + 1) / 2 ** J
    left, mid, right = (2 * k - 2) / 2 ** (j + 1), (2 * k - 1) / 2 ** (j + 1), 2 * k / 2 ** (j + 1)
    return np.clip(np.minimum((x - left) / (mid - left), (right - x) / (right - mid)), 0, None)


def test_linear_function_has_no_detail():
    c = besov.schauder_coefficients(2.0 + 3.0 * np.linspace(0, 1, 17))
    assert c.f0 == 2.0 and c.f1 == pytest.approx(3.0)
    assert all(np.allclose(lv, 0) for lv in c.levels)


def test_single_hat_isolated():
    c = besov.schauder_coefficients(hat(6, 3, 5))
    for j, lv in enumerate(c.levels):
        want = np.zeros(2 ** j)
        if j == 3:
            want[4] = 2 * 2 ** 1.5
        np.testing.assert_allclose(lv, want, atol=1e-14)


def test_length_must_be_dyadic():
    with pytest.raises(ValueError):
        besov.schauder_coefficients(np.zeros(10))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 33, elements=st.floats(-10, 10)), arrays(np.float64, 33, elements=st.floats(-10, 10)))
def test_coefficients_linear(a, b):
    ca, cb = besov.schauder_coefficients(a), besov.schauder_coefficients(b)
    cab = besov.schauder_coefficients(a + 2 * b)
    comb = ca + 2 * cb
    for x, y in zip(cab.levels, comb.levels):
        np.testing.assert_allclose(x, y, atol=1e-9)


def test_level_stats_parameter_checks():
    c = besov.schauder_coefficients(np.random.default_rng(0).standard_normal(65))
    with pytest.raises(ConfigError):
        besov.besov_level_stats(c, Modulus(0.25), 4.0)
    with pytest.raises(ConfigError):
        besov.besov_level_stats(c, Modulus(0.5), 1.0)
    js, _ = besov.besov_level_stats(c, Modulus(0.5, 1.0), 4.0)
    assert js[0] == 1  # omega(1) = 0 with a log factor


def test_level_stat_formula():
    levels = [np.full(2 ** j, 1.0) for j in range(4)]
    c = besov.DyadicCoefficients.from_levels(levels)
    js, s = besov.besov_level_stats(c, Modulus(0.5), 4.0)
    # ||f_j||_4 = 2^(j/4), so s_j = 2^(-3j/4) 2^(j/4) / 2^(-j/2) = 1
    np.testing.assert_allclose(s, 1.0)


def test_lp_scaled_is_overflow_safe():
    assert besov._lp(np.array([1e200, 1e200]), 8.0) == pytest.approx(1e200 * 2 ** 0.125)


def test_orlicz_argmax_and_norm():
    levels = [np.zeros(2 ** j) for j in range(5)]
    levels[3][0] = 8.0
    c = besov.DyadicCoefficients.from_levels(levels, f0=0.1, f1=0.2)
    norm, (p, j) = besov.orlicz_sequence_norm(c, 0.5)
    # one spike of 8 at level 3: stat(p) = 8 p^(-1/2) 2^(-3/p), largest at p = 4
    assert j == 3 and p == 4.0
    assert norm == pytest.approx(4.0 * 2 ** -0.75)


def test_little_space_diagnostic():
    flat = besov.little_space_diagnostic(np.ones(10))
    assert flat.violation and flat.slope == pytest.approx(0.0)
    decaying = besov.little_space_diagnostic(2.0 ** -np.arange(10.0))
    assert not decaying.violation and decaying.slope == pytest.approx(-1.0)


def test_modulus_norm_direct_on_linear_path():
    f = np.linspace(0, 1, 65)
    # increments of x are exactly h, so sup_h Delta / h^0.5 peaks at the largest shift
    val = besov.modulus_norm_direct(f, 2.0, Modulus(0.5))
    assert np.isfinite(val) and val > 0


def test_coefficient_statistic_limit():
    v = np.random.default_rng(1).standard_normal((3, 2 ** 14))
    m, c = besov.coefficient_statistic(v, 4.0)
    assert c == pytest.approx(3.0)
    assert np.all(np.abs(m - c) < 0.1 * c)
