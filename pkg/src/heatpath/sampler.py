"""
Exact Gaussian simulation of the mild solution on dyadic grids.

Samples are drawn by Cholesky factorization of the closed-form covariance
matrices in :mod:`heatpath.kernels`; no time stepping is involved, so the
law of the sampled vector is exact up to the jitter added for numerical
positive definiteness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from . import kernels
from .errors import ConfigError, PSDError
from .kernels import SpaceSection, SpaceTime, TimeSection
from .rng import SeedSpec, standard_normals

MAX_POINTS = 8193
JITTER_START = 1e-12
JITTER_MAX = 1e-8


@dataclass(frozen=True)
class GridSpec:
    """``2^J + 1`` equally spaced points per axis of a section, endpoints included."""

    section: object
    resolution_j: int
    label: str = ""

    def __post_init__(self):
        if self.resolution_j < 1:
            raise ConfigError("resolution_j must be >= 1")
        if self.n_points > MAX_POINTS:
            raise ConfigError(
                f"grid with {self.n_points} points exceeds the exact backend cap of "
                f"{MAX_POINTS}; use a smaller resolution J"
            )

    @property
    def n_axis(self) -> int:
        return 2 ** self.resolution_j + 1

    @property
    def n_points(self) -> int:
        if isinstance(self.section, SpaceTime):
            return self.n_axis ** 2
        return self.n_axis

    @property
    def unit_points(self) -> np.ndarray:
        return np.arange(self.n_axis) / 2.0 ** self.resolution_j

    @property
    def coordinates(self) -> np.ndarray:
        """Grid in natural units; ``(n, 2)`` of ``(t, x)`` pairs for space-time grids."""
        sec = self.section
        u = self.unit_points
        if isinstance(sec, TimeSection):
            return sec.horizon * u
        if isinstance(sec, SpaceSection):
            return sec.a + (sec.b - sec.a) * u
        if isinstance(sec, SpaceTime):
            tt = sec.t0 + (sec.t1 - sec.t0) * u
            xx = sec.x0 + (sec.x1 - sec.x0) * u
            T, X = np.meshgrid(tt, xx, indexing="ij")
            return np.column_stack([T.ravel(), X.ravel()])
        raise ConfigError(f"unknown section {sec!r}")


@dataclass
class SamplePath:
    grid: GridSpec
    values: np.ndarray
    seed: SeedSpec


@dataclass
class CholeskyFactor:
    """Lower factor of the nondegenerate block plus the pinned (zero) indices."""

    lower: np.ndarray
    active: np.ndarray
    dim: int
    jitter: float = 0.0
    pinned: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


def build_covariance(grid: GridSpec) -> np.ndarray:
    """Covariance matrix of the field on ``grid``; exactly symmetric."""
    pts = grid.coordinates
    sec = grid.section
    if isinstance(sec, SpaceTime):
        cov = sec.covariance(pts[:, None, :], pts[None, :, :])
    elif isinstance(sec, TimeSection):
        cov = kernels.cov_time_section(pts[:, None], pts[None, :])
    else:
        cov = sec.covariance(pts[:, None], pts[None, :])
    cov = np.triu(cov)
    return cov + np.triu(cov, 1).T


def cholesky_factor(cov: np.ndarray) -> CholeskyFactor:
    """Factor ``cov`` with the escalating jitter policy.

    Rows with exactly zero variance (``u(0, x) = 0``) are pinned to zero and
    removed before factorization.  Jitter ``eps * mean(diag) * I`` starts at
    zero, then ``1e-12`` and grows tenfold up to ``1e-8``.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be a square matrix")
    if not np.array_equal(cov, cov.T):
        raise ValueError("covariance must be symmetric")
    diag = np.diag(cov)
    active = np.flatnonzero(diag != 0.0)
    pinned = np.flatnonzero(diag == 0.0)
    if np.any(cov[np.ix_(pinned, active)] != 0.0):
        raise PSDError("zero-variance coordinate with nonzero covariance", minor=1)
    sub = cov[np.ix_(active, active)]
    scale = float(np.mean(np.diag(sub))) if sub.size else 0.0
    eps = 0.0
    info = 0
    while True:
        mat = sub + (eps * scale) * np.eye(len(active)) if eps else sub
        lower, info = lapack.dpotrf(mat, lower=1, clean=1, overwrite_a=0)
        if info == 0:
            return CholeskyFactor(lower=lower, active=active, dim=cov.shape[0], jitter=eps, pinned=pinned)
        if info < 0:
            raise ValueError(f"dpotrf rejected argument {-info}")
        if eps >= JITTER_MAX:
            break
        eps = JITTER_START if eps == 0.0 else eps * 10.0
    raise PSDError(
        f"covariance is not positive definite even with jitter {JITTER_MAX:g}; "
        f"leading minor of order {int(info)} failed",
        minor=int(info),
    )


def sample_from_factor(factor: CholeskyFactor, seed: SeedSpec, n: int) -> np.ndarray:
    """``(n, dim)`` samples; replicate ``i`` uses stream ``seed.replicate(i)``."""
    z = standard_normals(seed, n, len(factor.active))
    out = np.zeros((n, factor.dim))
    out[:, factor.active] = z @ factor.lower.T
    return out


def cholesky_sample(cov: np.ndarray, seed: SeedSpec, n: int = 1) -> np.ndarray:
    return sample_from_factor(cholesky_factor(cov), seed, n)


def sample_paths(grid: GridSpec, seed: SeedSpec, n: int = 1, factor: CholeskyFactor | None = None):
    """Sample ``n`` paths on ``grid``.  Pass ``factor`` to reuse a factorization."""
    if factor is None:
        factor = cholesky_factor(build_covariance(grid))
    values = sample_from_factor(factor, seed, n)
    return [SamplePath(grid, values[i], seed.replicate(i)) for i in range(n)]


def coefficient_covariance(j: int, section) -> np.ndarray:
    """``2^j x 2^j`` covariance of the level-``j`` Schauder coefficients.

    The section is mapped affinely onto [0, 1]: a time horizon ``T`` scales the
    time covariance by ``sqrt(T)``, a window ``[a, b]`` rescales spatial lags.
    """
    kk = np.arange(1, 2 ** j + 1)
    if isinstance(section, TimeSection):
        cov = math.sqrt(section.horizon) * kernels.coeff_cov_time(j, kk[:, None], kk[None, :])
    elif isinstance(section, SpaceSection):
        cov = kernels.coeff_cov_space(j, kk[:, None], kk[None, :], section.t, scale=section.b - section.a)
    else:
        raise ConfigError("coefficient sampling needs a time or space section")
    cov = np.triu(cov)
    return cov + np.triu(cov, 1).T


@dataclass
class CoefficientSample:
    j: int
    values: np.ndarray  # (n, 2^j)
    sigma: np.ndarray  # (2^j,)

    @property
    def normalized(self) -> np.ndarray:
        return self.values / self.sigma


def sample_coefficients(j: int, section, seed: SeedSpec, n: int = 1) -> CoefficientSample:
    """Draw the level-``j`` coefficients directly from their exact joint law."""
    if not 0 <= j <= 12:
        raise ConfigError("coefficient sampling supports 0 <= j <= 12")
    cov = coefficient_covariance(j, section)
    return CoefficientSample(j, cholesky_sample(cov, seed, n), np.sqrt(np.diag(cov)))


def conditional_variance(cov: np.ndarray, target, conditioning) -> float:
    """``Var(a'X | X_C)`` by a Cholesky solve on the conditioning block.

    Zero-variance coordinates in ``C`` carry no information and are dropped.
    """
    cov = np.asarray(cov, dtype=float)
    a = np.asarray(target, dtype=float)
    total = float(a @ cov @ a)
    idx = np.asarray(sorted(set(int(i) for i in conditioning)), dtype=int)
    if idx.size:
        idx = idx[np.diag(cov)[idx] > 0]
    if idx.size == 0:
        return total
    factor = cholesky_factor(cov[np.ix_(idx, idx)])
    b = cov[idx] @ a
    w = linalg.solve_triangular(factor.lower, b, lower=True)
    return float(min(max(total - w @ w, 0.0), total))


def lnd_ratio_scan(resolution_j: int = 8, max_span: float = 0.125, section: TimeSection | None = None):
    """Minimum of ``Var(u_t - u_s | u on [r, s]) / Var(u_t - u_s)`` over grid triples.

    Scans every ``r < s < t`` on the time grid with ``t - r <= max_span``.
    Since ``u_s`` is in the conditioning set, the conditional variance of the
    increment equals ``Var(u_t | u_r..u_s)``; all ``t`` for one ``(r, s)`` share a
    single factorization.  Returns ``(min_ratio, (r, s, t))`` in grid indices.
    """
    grid = GridSpec(section or TimeSection(), resolution_j)
    cov = build_covariance(grid)
    n = grid.n_axis
    span = int(round(max_span * 2 ** resolution_j / grid.section.horizon))
    best = (np.inf, None)
    var_t = np.diag(cov)
    for r in range(n):
        for s in range(r + 1, min(n - 1, r + span)):
            ts = np.arange(s + 1, min(n, r + span + 1))
            if ts.size == 0:
                continue
            cond = np.arange(r, s + 1)
            cond = cond[var_t[cond] > 0]
            f = cholesky_factor(cov[np.ix_(cond, cond)])
            w = linalg.solve_triangular(f.lower, cov[np.ix_(cond, ts)], lower=True)
            cvar = np.maximum(var_t[ts] - np.sum(w * w, axis=0), 0.0)
            uvar = var_t[ts] + var_t[s] - 2.0 * cov[s, ts]
            ratio = cvar / uvar
            i = int(np.argmin(ratio))
            if ratio[i] < best[0]:
                best = (float(ratio[i]), (r, s, int(ts[i])))
    return best


def slnd_scan(resolution_j: int = 8, section: SpaceSection | None = None, radii=None):
    """``min_y Var(u(t, y) | u(t, x): r <= |y - x|)`` on a space grid, per radius.

    Returns ``(radii, min_variances, K)`` where ``K = min_r V(r) / r``.
    """
    section = section or SpaceSection()
    grid = GridSpec(section, resolution_j)
    cov = build_covariance(grid)
    pts = grid.coordinates
    if radii is None:
        radii = 2.0 ** -np.arange(7, 2, -1)
    radii = np.asarray(radii, dtype=float)
    width = section.b - section.a
    mins = np.empty(radii.size)
    for i, r in enumerate(radii):
        best = np.inf
        for y in range(grid.n_axis):
            dist = np.abs(pts - pts[y])
            cond = np.flatnonzero((dist >= r * (1 - 1e-12)) & (dist <= width))
            e = np.zeros(grid.n_axis)
            e[y] = 1.0
            best = min(best, conditional_variance(cov, e, cond))
        mins[i] = best
    return radii, mins, float(np.min(mins / radii))
