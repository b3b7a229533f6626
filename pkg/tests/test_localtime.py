import math

import numpy as np
import pytest

from heatpath import localtime
from heatpath.errors import ConfigError
from heatpath.kernels import SpaceSection, SpaceTime, TimeSection
from heatpath.localtime import LevelSet


def test_linear_occupation_of_a_ramp():
    # f(t) = t on [0, 1] spends exactly dxi in every level bin inside [0, 1]
    f = np.linspace(0.0, 1.0, 65)
    fld = localtime.occupation_histogram(f, n_bins=9, method="linear")
    inner = (fld.edges[:-1] >= 0) & (fld.edges[1:] <= 1)
    np.testing.assert_allclose(fld.values[inner, -1], 1.0, rtol=1e-12)
    # direction does not matter
    back = localtime.occupation_histogram(f[::-1], n_bins=9, method="linear")
    np.testing.assert_allclose(back.values[:, -1], fld.values[:, -1], atol=1e-12)


def test_left_and_midpoint_keys():
    f = np.array([0.0, 1.0, 0.0, 1.0, 0.0])
    left = localtime.occupation_histogram(f, n_bins=8, method="left")
    mid = localtime.occupation_histogram(f, n_bins=8, method="midpoint")
    # left keys alternate 0, 1; midpoints all sit at 1/2
    assert np.count_nonzero(left.values[:, -1]) == 2
    assert np.count_nonzero(mid.values[:, -1]) == 1


def test_field_is_cumulative_in_time():
    f = np.random.default_rng(0).standard_normal(129).cumsum()
    fld = localtime.occupation_histogram(f, stops=[0, 32, 64, 128])
    assert np.all(np.diff(fld.values, axis=1) >= 0)
    np.testing.assert_allclose(fld.occupation(), fld.time_grid, atol=1e-12)


def test_histogram_arguments_checked():
    f = np.linspace(0, 1, 9)
    with pytest.raises(ConfigError):
        localtime.occupation_histogram(f, n_bins=4)
    with pytest.raises(ConfigError):
        localtime.occupation_histogram(f, method="spline")
    with pytest.raises(ConfigError):
        localtime.occupation_histogram(f, value_range=(0.2, 1.0))


def test_constant_path_concentrates_in_one_bin():
    fld = localtime.occupation_histogram(np.full(17, 0.3), method="linear")
    assert np.count_nonzero(fld.values[:, -1]) == 1
    assert fld.occupation()[-1] == pytest.approx(1.0)


def test_local_time_series_ramp():
    f = np.linspace(-1.0, 1.0, 257)
    L = localtime.local_time_series(f, 0.0, width=0.1)
    # slope of the ramp is 2, so the time density at 0 is 1/2
    assert L[-1] == pytest.approx(0.5, rel=1e-12)
    assert L[0] == 0.0 and np.all(np.diff(L) >= 0)


def test_fourier_estimate_of_a_ramp():
    f = np.linspace(-1.0, 1.0, 2049)
    est = localtime.fourier_local_time(f, 0.0, u_max=400.0, du=0.05, taper=True)
    assert est == pytest.approx(0.5, abs=0.02)


def test_berman_exponents_and_frozen_values():
    assert localtime.berman_exponent(TimeSection(), 3.0) == 1.0
    assert localtime.berman_exponent(SpaceSection(), 1.0) == 1.0
    # frozen from 20-digit mpmath double quadrature
    assert localtime.berman_integral(TimeSection(), 0.0).value == pytest.approx(1.74026493201774, rel=1e-10)
    assert localtime.berman_integral(SpaceSection(), 0.0).value == pytest.approx(2.74878859512659, rel=1e-10)
    assert str(localtime.berman_integral(TimeSection(), 3.0)) == "DIVERGES"
    with pytest.raises(ConfigError):
        localtime.berman_exponent(TimeSection(), -1.0)
    with pytest.raises(ConfigError):
        localtime.berman_integral(SpaceTime(), 0.0)


def test_berman_time_horizon_scaling():
    # Var is homogeneous of degree 1/2, so the double integral scales as T^(2 - (p+1)/4)
    p = 1.0
    v1 = localtime.berman_integral(TimeSection(horizon=1.0), p).value
    v4 = localtime.berman_integral(TimeSection(horizon=4.0), p).value
    assert v4 / v1 == pytest.approx(4.0 ** (2 - (p + 1) / 4), rel=1e-10)


def test_holder_exponent_of_exact_powers():
    t = np.linspace(0, 1, 2 ** 10 + 1)
    alpha, _ = localtime.holder_exponent(t)
    assert alpha == pytest.approx(1.0, abs=1e-12)
    bm = np.random.default_rng(0).standard_normal((20, 2 ** 12)).cumsum(axis=1) * 2 ** -6
    bm = np.hstack([np.zeros((20, 1)), bm])
    med = np.median([localtime.holder_exponent(b)[0] for b in bm])
    assert med == pytest.approx(0.5, abs=0.05)
    with pytest.raises(ValueError):
        localtime.holder_exponent(np.zeros(65))


def test_moment_scaling_brownian_square():
    # increments of Brownian motion: E(B_h)^2 = h, slope exactly 1 in expectation
    rng = np.random.default_rng(3)
    n = 2 ** 10
    B = np.hstack([np.zeros((400, 1)), (rng.standard_normal((400, n)) * math.sqrt(1 / n)).cumsum(axis=1)])
    lags = 2.0 ** -np.arange(9, 3, -1)
    ms = localtime.moment_scaling(B, 1 / n, lags)
    assert ms.slope == pytest.approx(1.0, abs=4 * ms.stderr + 0.02)
    with pytest.raises(ConfigError):
        localtime.moment_scaling(B[:50], 1 / n, lags)
    with pytest.raises(ConfigError):
        localtime.moment_scaling(B, 1 / n, lags, order=3)


def test_level_set_cells():
    f = np.array([1.0, -1.0, -2.0, 0.0, 3.0])
    ls = localtime.level_set(f, 0.0)
    np.testing.assert_array_equal(ls.cells, [0, 2, 3])


def test_box_dimension_of_full_and_point_sets():
    J = 12
    full = LevelSet(0.0, np.arange(2 ** J), 2 ** J)
    assert localtime.box_dimension(full).dim == pytest.approx(1.0)
    sparse = LevelSet(0.0, np.arange(0, 2 ** J, 2 ** J // 32), 2 ** J)
    est = localtime.box_dimension(sparse, levels=np.arange(6, 13))
    assert est.dim == pytest.approx(0.0, abs=1e-12)
    assert localtime.default_box_levels(J) == (3, 9)
    with pytest.raises(ConfigError):
        localtime.box_dimension(LevelSet(0.0, np.arange(3), 2 ** J))
