"""
Local times, level sets and their fractal dimension for sampled paths.

A path is given on an equally spaced grid.  Two occupation estimators are
provided.  The step estimator assigns every grid step to one level bin (by
its left-endpoint value by default).  The linear estimator spreads each step
over the bins crossed by the linear interpolant, in proportion to the time
the interpolant spends in each bin; this removes the quantization of the
step estimator at short time lags and is what the regularity fits use.
Both satisfy the occupation identity ``sum_b L(xi_b, t) * dxi = t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import kernels
from .errors import ConfigError, QuadratureError
from .kernels import SpaceSection, TimeSection

MIN_BINS = 8
DEFAULT_U_MAX = 256.0
DEFAULT_DU = 0.25
BIN_WIDTH_FACTOR = 2.0
MIN_REPLICATES = 100


def _as_series(path, coordinates=None):
    """``(coordinates, values)`` for a SamplePath or a bare array on [0, 1]."""
    values = np.asarray(getattr(path, "values", path), dtype=float)
    if values.ndim != 1:
        raise ValueError("expected a one-dimensional path")
    if values.size == 0:
        raise ValueError("empty path")
    if coordinates is None:
        grid = getattr(path, "grid", None)
        if grid is not None:
            coordinates = grid.coordinates
        else:
            coordinates = np.linspace(0.0, 1.0, values.size)
    coordinates = np.asarray(coordinates, dtype=float)
    if coordinates.shape != values.shape:
        raise ValueError("coordinates and values differ in length")
    return coordinates, values


# ---------------------------------------------------------------- occupation


@dataclass
class LocalTimeField:
    """``values[b, i]`` estimates ``L(xi_grid[b], time_grid[i])``; bins have width ``dxi``."""

    xi_grid: np.ndarray
    time_grid: np.ndarray
    values: np.ndarray
    dxi: float
    method: str = "left"

    @property
    def edges(self) -> np.ndarray:
        return np.append(self.xi_grid - 0.5 * self.dxi, self.xi_grid[-1] + 0.5 * self.dxi)

    def occupation(self) -> np.ndarray:
        """``sum_b L(xi_b, t_i) * dxi`` for every prefix ``t_i``."""
        return self.values.sum(axis=0) * self.dxi


def default_bins(n_steps: int) -> int:
    return max(MIN_BINS, math.ceil(n_steps ** (1.0 / 3.0)))


def _step_occupation(lo, hi, dt, edges):
    """Time each linear step between ``lo`` and ``hi`` spends below every edge.

    The interpolant is monotone on a step, so the time below an edge is the
    fraction of the step's range that lies below it, whatever the direction.
    """
    lo, hi = np.minimum(lo, hi)[:, None], np.maximum(lo, hi)[:, None]
    span = hi - lo
    flat = span == 0
    frac = np.where(flat, 0.0, (edges[None, :] - lo) / np.where(flat, 1.0, span))
    below = np.where(flat, (lo < edges[None, :]).astype(float), np.clip(frac, 0.0, 1.0))
    return dt * below


def occupation_histogram(path, n_bins: int | None = None, stops=None, method: str = "left",
                         coordinates=None, value_range=None) -> LocalTimeField:
    """Occupation-density estimate of the local time on uniform level bins.

    Parameters
    ----------
    path : SamplePath or array
        Values on an equally spaced grid.
    n_bins : int, optional
        Number of level bins (at least 8).  Defaults to ``ceil(n_steps^(1/3))``.
    stops : array of int, optional
        Grid indices ``i`` of the prefixes ``[t_0, t_i]``; defaults to all.
    method : {"left", "midpoint", "linear"}
        Bin key of each step: its left value, the mean of its two end values,
        or the linear interpolant spread over all bins it crosses.
    value_range : (lo, hi), optional
        Level range covered by the bins; must contain the path.

    Returns
    -------
    LocalTimeField
        ``L(xi_b, t_i) = occupation time of bin b up to t_i / dxi``.
    """
    coords, f = _as_series(path, coordinates)
    if f.size < 2:
        raise ValueError("need at least one grid step")
    n_steps = f.size - 1
    n_bins = default_bins(n_steps) if n_bins is None else int(n_bins)
    if n_bins < MIN_BINS:
        raise ConfigError(f"n_bins must be >= {MIN_BINS}, got {n_bins}")
    if method not in ("left", "midpoint", "linear"):
        raise ConfigError(f"unknown occupation method {method!r}")
    dt = float(coords[1] - coords[0])
    lo, hi = float(f.min()), float(f.max())
    if value_range is not None:
        if value_range[0] > lo or value_range[1] < hi:
            raise ConfigError("value_range must cover the path range")
        lo, hi = map(float, value_range)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    # widen by half a bin on each side so extreme values sit strictly inside
    dxi = (hi - lo) / (n_bins - 1)
    edges = lo - 0.5 * dxi + dxi * np.arange(n_bins + 1)
    centers = 0.5 * (edges[1:] + edges[:-1])

    if method == "linear":
        below = _step_occupation(f[:-1], f[1:], dt, edges)
        per_step = np.diff(below, axis=1)
    else:
        key = f[:-1] if method == "left" else 0.5 * (f[:-1] + f[1:])
        idx = np.clip(np.searchsorted(edges, key, side="right") - 1, 0, n_bins - 1)
        per_step = np.zeros((n_steps, n_bins))
        per_step[np.arange(n_steps), idx] = dt
    cum = np.vstack([np.zeros(n_bins), np.cumsum(per_step, axis=0)])
    stops = np.arange(f.size) if stops is None else np.asarray(stops, dtype=int)
    if np.any((stops < 0) | (stops > n_steps)):
        raise ConfigError("prefix stops must be grid indices")
    values = cum[stops].T / dxi
    return LocalTimeField(centers, coords[stops] - coords[0], values, dxi, method)


def local_time_series(path, xi: float = 0.0, width: float | None = None, coordinates=None) -> np.ndarray:
    """``L(xi, t_i)`` at every grid point from the linear estimator with one bin.

    ``width`` defaults to ``BIN_WIDTH_FACTOR`` times the median absolute
    step, which keeps the bin comparable to the grid's own level resolution.
    """
    coords, f = _as_series(path, coordinates)
    if width is None:
        width = BIN_WIDTH_FACTOR * float(np.median(np.abs(np.diff(f))))
    if width <= 0:
        raise ValueError("bin width must be positive")
    dt = float(coords[1] - coords[0])
    edges = np.array([xi - 0.5 * width, xi + 0.5 * width])
    occ = np.diff(_step_occupation(f[:-1], f[1:], dt, edges), axis=1)[:, 0]
    return np.concatenate([[0.0], np.cumsum(occ)]) / width


def fourier_local_time(path, xi: float, interval=None, u_max: float = DEFAULT_U_MAX, du: float = DEFAULT_DU,
                       taper: bool = False, bin_width: float | None = None, coordinates=None) -> float:
    """Truncated Fourier inversion ``(1/pi) int_0^U int_B cos(u (f(s) - xi)) ds du``.

    Both integrals use the trapezoid rule: over ``u`` with step ``du`` and over
    the grid points falling in ``interval``.  ``taper`` applies the Fejer
    weight ``1 - u/U``.  ``bin_width`` averages the estimate over a level bin
    of that width centred at ``xi``, which is the smoothing the histogram
    estimator carries.  The raw value may be negative (Gibbs ringing).
    """
    if u_max <= 0 or du <= 0:
        raise ConfigError("u_max and du must be positive")
    coords, f = _as_series(path, coordinates)
    if interval is not None:
        keep = (coords >= interval[0]) & (coords <= interval[1])
        coords, f = coords[keep], f[keep]
    if f.size < 2:
        return 0.0
    n_u = int(round(u_max / du))
    u = np.linspace(0.0, n_u * du, n_u + 1)
    wu = np.full(u.size, du)
    wu[[0, -1]] *= 0.5
    if taper:
        wu *= 1.0 - u / u[-1]
    ws = np.empty(f.size)
    ws[1:-1] = 0.5 * (coords[2:] - coords[:-2])
    ws[0] = 0.5 * (coords[1] - coords[0])
    ws[-1] = 0.5 * (coords[-1] - coords[-2])
    d = f - xi
    phase = u[:, None] * d[None, :]
    if bin_width:
        h = 0.5 * bin_width
        # (1/2h) int_{-h}^{h} cos(u (d - e)) de = cos(u d) sinc(u h)
        damp = np.sinc(u * h / np.pi)
        inner = (np.cos(phase) @ ws) * damp
    else:
        inner = np.cos(phase) @ ws
    return float(wu @ inner / np.pi)


# ------------------------------------------------------------------- Berman


@dataclass(frozen=True)
class BermanResult:
    diverges: bool
    exponent: float
    value: float | None = None

    @property
    def finite(self) -> bool:
        return not self.diverges

    def __str__(self):
        return "DIVERGES" if self.diverges else f"{self.value:.10g}"


def berman_exponent(section, p: float) -> float:
    """Order of the diagonal singularity of ``[E(dX)^2]^(-(p+1)/2)``."""
    if p < 0:
        raise ConfigError(f"p must be >= 0, got {p}")
    if isinstance(section, TimeSection):
        return (p + 1.0) / 4.0
    if isinstance(section, SpaceSection):
        return (p + 1.0) / 2.0
    raise ConfigError("Berman integral needs a time or space section")


def berman_integral(section, p: float) -> BermanResult:
    """``int int [E(X_s - X_t)^2]^(-(p+1)/2) ds dt`` over the section's square.

    Divergence is decided from the analytic exponent (1/4 of the time
    variance, 1/2 of the space variance, times ``p + 1``).  Finite values
    come from adaptive quadrature with the algebraic singularity factored
    into the weight.
    """
    e = berman_exponent(section, p)
    if e >= 1.0:
        return BermanResult(True, e)
    q = 0.5 * (p + 1.0)
    if isinstance(section, TimeSection):
        # Var(u_t - u_s) is homogeneous of degree 1/2 in (t, s): with s = t (1 - w)
        # the square reduces to 2 T^(2 - q/2) / (2 - q/2) * int_0^1 V(1, 1-w)^(-q) dw.
        def g(w):
            if w == 0.0:
                return (math.sqrt(2.0 * math.pi) / 2.0) ** q  # V ~ 2 sqrt(w / 2 pi)
            v = kernels.time_increment_variance(1.0, 1.0 - w)
            return (math.sqrt(w) / v) ** q

        inner, err = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(-e, 0.0), limit=200)
        T = section.horizon
        power = 2.0 - 0.5 * q
        value = 2.0 * T ** power / power * inner
    else:
        L = section.b - section.a

        def g(d):
            if d == 0.0:
                return L  # V(d) / d -> 1
            return (L - d) * (d / kernels.space_increment_variance(d, section.t)) ** q

        inner, err = integrate.quad(g, 0.0, L, weight="alg", wvar=(-e, 0.0), limit=200)
        value = 2.0 * inner
    if not np.isfinite(value) or err > 1e-6 * max(1.0, abs(inner)):
        raise QuadratureError(f"Berman quadrature did not converge (estimate {inner}, error {err})")
    return BermanResult(False, e, float(value))


# -------------------------------------------------------------- regularity


def _dyadic_levels(n: int) -> int:
    J = int(round(math.log2(n - 1))) if n > 2 else 0
    if 2 ** J + 1 != n:
        raise ValueError(f"series length must be 2^J + 1, got {n}")
    return J


def dyadic_increment_medians(series, levels, nonzero: bool = False) -> np.ndarray:
    """Median ``|f(t + 2^-j) - f(t)|`` over grid points, for each level ``j``."""
    f = np.asarray(series, dtype=float)
    J = _dyadic_levels(f.size)
    out = np.full(len(levels), np.nan)
    for i, j in enumerate(levels):
        lag = 2 ** (J - int(j))
        inc = np.abs(f[lag:] - f[:-lag])
        if nonzero:
            inc = inc[inc > 0]
        if inc.size:
            out[i] = np.median(inc)
    return out


def holder_exponent(series, levels=None, nonzero: bool = False):
    """Slope of ``-log2 median |increment at lag 2^-j|`` against ``j``.

    Parameters
    ----------
    series : array
        Values on ``2^J + 1`` dyadic points of [0, 1].
    levels : sequence of int, optional
        Levels ``j`` used in the fit (default ``1 .. J-1``); at least 6.
    nonzero : bool
        Ignore zero increments; meant for local times, which are flat while
        the path stays away from the level.

    Returns
    -------
    (alpha, stderr)
    """
    f = np.asarray(series, dtype=float)
    J = _dyadic_levels(f.size)
    levels = np.arange(1, J) if levels is None else np.asarray(levels, dtype=int)
    if np.any((levels < 0) | (levels > J)):
        raise ConfigError(f"levels must lie in 0..{J}")
    if np.ptp(f) == 0:
        raise ValueError("constant series has no Hölder exponent")
    med = dyadic_increment_medians(f, levels, nonzero)
    ok = np.isfinite(med) & (med > 0)
    if ok.sum() < 6:
        raise ValueError(f"need at least 6 usable dyadic levels, got {int(ok.sum())}")
    x = levels[ok].astype(float)
    y = -np.log2(med[ok])
    coef, cov = np.polyfit(x, y, 1, cov=True)
    return float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0)))


@dataclass
class MomentScaling:
    order: int
    lags: np.ndarray
    moments: np.ndarray
    slope: float
    stderr: float
    n_replicates: int


def moment_scaling(series, dt: float, lags, order: int = 2, start: int = 0, n_boot: int = 200,
                   seed: int = 0, min_replicates: int = MIN_REPLICATES) -> MomentScaling:
    """Fit ``log E[(L(t0 + h) - L(t0))^n]`` against ``log h``.

    Parameters
    ----------
    series : array (replicates, points)
        Local-time series ``L(xi, t_i)`` of independent replicates on a common grid.
    dt : float
        Grid spacing.
    lags : array
        Lags ``h``; each must be a positive multiple of ``dt``.
    order : int
        Even moment order ``n``.
    start : int
        Grid index of the anchor ``t0``.
    n_boot, seed
        Replicate-bootstrap draws for the slope's standard error.
    """
    L = np.atleast_2d(np.asarray(series, dtype=float))
    if L.shape[0] < min_replicates:
        raise ConfigError(f"need at least {min_replicates} replicates, got {L.shape[0]}")
    if order < 2 or order % 2:
        raise ConfigError(f"moment order must be even and >= 2, got {order}")
    lags = np.asarray(lags, dtype=float)
    if lags.size < 4:
        raise ConfigError("need at least 4 lags")
    steps = np.rint(lags / dt).astype(int)
    if np.any(steps < 1) or not np.allclose(steps * dt, lags) or start + steps.max() >= L.shape[1]:
        raise ConfigError("lags must be grid multiples inside the series")
    inc = (L[:, start + steps] - L[:, [start]]) ** order
    logh = np.log(lags)

    def fit(rows):
        return np.polyfit(logh, np.log(rows.mean(axis=0)), 1)[0]

    moments = inc.mean(axis=0)
    if np.any(moments <= 0):
        raise ValueError("a lag has zero empirical moment; use longer lags or more replicates")
    slope = float(np.polyfit(logh, np.log(moments), 1)[0])
    rng = np.random.default_rng(seed)
    boot = []
    for _ in range(n_boot):
        rows = inc[rng.integers(0, inc.shape[0], inc.shape[0])]
        if np.all(rows.mean(axis=0) > 0):
            boot.append(fit(rows))
    stderr = float(np.std(boot, ddof=1)) if len(boot) > 1 else float("nan")
    return MomentScaling(order, lags, moments, slope, stderr, L.shape[0])


# --------------------------------------------------------------- level sets


@dataclass
class LevelSet:
    level: float
    cells: np.ndarray
    n_cells: int

    def __len__(self):
        return int(self.cells.size)


def level_set(path, xi: float) -> LevelSet:
    """Grid cells ``[i, i+1]`` on which ``path - xi`` changes sign or vanishes."""
    f = np.asarray(getattr(path, "values", path), dtype=float) - xi
    if f.size < 2:
        raise ValueError("need at least one grid cell")
    a, b = f[:-1], f[1:]
    hit = (a * b < 0) | (a == 0) | (b == 0)
    return LevelSet(float(xi), np.flatnonzero(hit), f.size - 1)


@dataclass
class DimensionEstimate:
    dim: float
    stderr: float
    scales: np.ndarray
    counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


MIN_LEVEL_CELLS = 16


def default_box_levels(J: int):
    """``(3, J - 3)``: the finest scales undercount crossings, so they are left out."""
    return 3, max(J - 3, min(J, 6))


def box_dimension(ls: LevelSet, levels=None, min_cells: int = MIN_LEVEL_CELLS) -> DimensionEstimate:
    """Box-counting dimension from dyadic coarsenings of the sampling grid.

    At level ``m`` the grid is cut into ``2^m`` boxes; ``N(2^-m)`` counts boxes
    containing at least one level-set cell.  The dimension is the slope of
    ``log2 N`` against ``m``.  ``levels`` defaults to ``3 .. J - 3``
    (see :func:`default_box_levels`).
    """
    J = int(round(math.log2(ls.n_cells)))
    if 2 ** J != ls.n_cells:
        raise ValueError("level set must live on a dyadic grid")
    if len(ls) < max(min_cells, 1):
        raise ConfigError(
            f"level set has {len(ls)} cells (< {min_cells}); raise J or pick xi = path(t0) for a random t0"
        )
    if levels is None:
        lo, hi = default_box_levels(J)
        levels = np.arange(lo, hi + 1)
    levels = np.asarray(levels, dtype=int)
    if levels.size < 4 or levels.min() < 3 or levels.max() > J:
        raise ConfigError(f"need >= 4 scales between 3 and {J}")
    counts = np.array([np.unique(ls.cells >> (J - m)).size for m in levels])
    coef, cov = np.polyfit(levels.astype(float), np.log2(counts), 1, cov=True)
    dim = float(min(max(coef[0], 0.0), 1.0))
    return DimensionEstimate(dim, float(math.sqrt(max(cov[0, 0], 0.0))), levels, counts)
