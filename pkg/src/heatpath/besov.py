"""
Schauder (Faber) coefficients and sequence-space Besov norms on [0, 1].

For a path sampled at the ``2^J + 1`` dyadic points ``i / 2^J`` the level-``j``
coefficients are rescaled second differences

    f_jk = 2 * 2^(j/2) * (f((2k-1)/2^(j+1)) - f(2k/2^(j+1))/2 - f((2k-2)/2^(j+1))/2),

for ``j = 0 .. J-1`` and ``k = 1 .. 2^j``.  The modular Besov norm of a path
is equivalent to ``max(|f0|, |f1|, sup_j s_j)`` with the per-level statistic

    s_j = 2^(-j (1/2 + 1/p)) / omega(2^-j) * ||f_j.||_p,

and the Besov-Orlicz norm to the same expression with ``sup_p`` over
``p^(-1/2) 2^(-j (1/2 - alpha + 1/p)) ||f_j.||_p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kernels import Modulus, gaussian_abs_moment, modulus_eval

ORLICZ_P_GRID = tuple(2.0 ** np.arange(0, 9))  # 1, 2, 4, ..., 256
LITTLE_SPACE_FLOOR = 0.25


@dataclass
class DyadicCoefficients:
    f0: float
    f1: float
    levels: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def __mul__(self, c):
        return DyadicCoefficients(c * self.f0, c * self.f1, [c * lv for lv in self.levels])

    __rmul__ = __mul__

    def __add__(self, other):
        return DyadicCoefficients(
            self.f0 + other.f0, self.f1 + other.f1, [a + b for a, b in zip(self.levels, other.levels)]
        )

    @classmethod
    def from_levels(cls, levels, f0=0.0, f1=0.0):
        """Wrap coefficient arrays sampled directly (e.g. ``u_jk`` draws)."""
        levels = [np.asarray(lv, dtype=float) for lv in levels]
        for j, lv in enumerate(levels):
            if lv.shape != (2 ** j,):
                raise ValueError(f"level {j} must hold {2 ** j} coefficients, got {lv.shape}")
        return cls(float(f0), float(f1), levels)


def _dyadic_depth(n: int) -> int:
    J = int(round(np.log2(n - 1))) if n > 1 else -1
    if J < 1 or 2 ** J + 1 != n:
        raise ValueError(f"path length must be 2^J + 1 with J >= 1, got {n}")
    return J


def schauder_coefficients(path) -> DyadicCoefficients:
    """Coefficient pyramid of a path given on ``2^J + 1`` dyadic points.

    ``path`` may be a :class:`~heatpath.sampler.SamplePath` or an array.
    """
    f = np.asarray(getattr(path, "values", path), dtype=float)
    J = _dyadic_depth(f.size)
    levels = []
    for j in range(J):
        step = 2 ** (J - j - 1)
        left = f[0 : -1 : 2 * step]
        mid = f[step :: 2 * step]
        right = f[2 * step :: 2 * step]
        levels.append(2.0 * 2.0 ** (j / 2.0) * (mid - 0.5 * right - 0.5 * left))
    return DyadicCoefficients(float(f[0]), float(f[-1] - f[0]), levels)


def _lp(x, p):
    """``(sum |x|^p)^(1/p)`` scaled by the max to avoid overflow at large p."""
    a = np.abs(x)
    top = a.max() if a.size else 0.0
    if top == 0.0:
        return 0.0
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def _levels_for(m: Modulus, depth: int) -> np.ndarray:
    # omega(1) = 0 when lambda > 0, so level 0 is only usable for pure powers
    start = 0 if m.lam == 0 else 1
    return np.arange(start, depth)


def _omega_at_level(m: Modulus, j: np.ndarray) -> np.ndarray:
    t = 2.0 ** -j.astype(float)
    out = np.ones_like(t)
    inner = j > 0
    out[inner] = modulus_eval(m, t[inner])
    return out


def besov_level_stats(coeffs: DyadicCoefficients, m: Modulus, p: float):
    """Per-level statistics ``s_j``; returns ``(levels, s)``."""
    if p <= 1:
        raise ConfigError(f"p must exceed 1, got {p}")
    if m.alpha * p <= 1:
        raise ConfigError(f"need 1/p < alpha (alpha={m.alpha}, p={p})")
    js = _levels_for(m, coeffs.depth)
    norms = np.array([_lp(coeffs.levels[j], p) for j in js])
    s = 2.0 ** (-js * (0.5 + 1.0 / p)) / _omega_at_level(m, js) * norms
    return js, s


def besov_sequence_norm(coeffs: DyadicCoefficients, m: Modulus, p: float):
    """``(max(|f0|, |f1|, sup_j s_j), s)`` with ``s`` the per-level statistics."""
    _, s = besov_level_stats(coeffs, m, p)
    top = float(s.max()) if s.size else 0.0
    return max(abs(coeffs.f0), abs(coeffs.f1), top), s


def orlicz_level_stats(coeffs: DyadicCoefficients, alpha: float, p_grid=ORLICZ_P_GRID):
    """``(J, len(p_grid))`` table of ``p^(-1/2) 2^(-j(1/2 - alpha + 1/p)) ||f_j.||_p``."""
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    p_grid = np.asarray(p_grid, dtype=float)
    table = np.empty((coeffs.depth, p_grid.size))
    for j, lv in enumerate(coeffs.levels):
        for i, p in enumerate(p_grid):
            table[j, i] = 2.0 ** (-j * (0.5 - alpha + 1.0 / p)) * _lp(lv, p) / np.sqrt(p)
    return table


def orlicz_sequence_norm(coeffs: DyadicCoefficients, alpha: float, p_grid=ORLICZ_P_GRID):
    """Besov-Orlicz sequence norm over a fixed dyadic grid of ``p``.

    Returns ``(norm, (p, j))`` where ``(p, j)`` attains the supremum of the
    level part; ``norm`` also covers ``|f0|`` and ``|f1|``.
    """
    table = orlicz_level_stats(coeffs, alpha, p_grid)
    if table.size == 0:
        return max(abs(coeffs.f0), abs(coeffs.f1)), (None, None)
    j, i = np.unravel_index(int(np.argmax(table)), table.shape)
    return max(abs(coeffs.f0), abs(coeffs.f1), float(table[j, i])), (float(p_grid[i]), int(j))


@dataclass
class LittleSpaceDiagnostic:
    liminf: float
    slope: float
    floor: float
    violation: bool


def top_half(levels, stats):
    levels = np.asarray(levels)
    stats = np.asarray(stats, dtype=float)
    cut = levels.size // 2
    return levels[cut:], stats[cut:]


def little_space_diagnostic(stats, levels=None, floor_factor: float = LITTLE_SPACE_FLOOR):
    """Does ``s_j`` stay away from zero on the finest half of the levels?

    The slope is the least-squares fit of ``log2 s_j`` on ``j`` over that top
    half; the floor is ``floor_factor * median(s_j)`` over all levels.
    """
    stats = np.asarray(stats, dtype=float)
    if stats.size < 4:
        raise ValueError("need at least 4 levels")
    levels = np.arange(stats.size) if levels is None else np.asarray(levels)
    lv, st = top_half(levels, stats)
    liminf = float(st.min())
    slope = float(np.polyfit(lv, np.log2(np.maximum(st, np.finfo(float).tiny)), 1)[0])
    floor = floor_factor * float(np.median(stats))
    return LittleSpaceDiagnostic(liminf, slope, floor, bool(liminf > floor))


@dataclass
class RegularityReport:
    levels: np.ndarray
    stats: np.ndarray
    norm: float
    little_space_liminf: float
    slope: float
    in_big_space: bool
    little_space_violation: bool
    p: float
    modulus: Modulus

    def as_dict(self):
        return {
            "p": self.p,
            "alpha": self.modulus.alpha,
            "lambda": self.modulus.lam,
            "norm": self.norm,
            "little_space_liminf": self.little_space_liminf,
            "top_half_slope": self.slope,
            "in_big_space": self.in_big_space,
            "little_space_violation": self.little_space_violation,
            "levels": [int(j) for j in self.levels],
            "stats": [float(s) for s in self.stats],
        }


PLATEAU_SLOPE = (-0.5, 0.25)


def is_plateau(slope: float, band=PLATEAU_SLOPE) -> bool:
    return band[0] <= slope <= band[1]


def regularity_report(coeffs: DyadicCoefficients, m: Modulus, p: float,
                      floor_factor: float = LITTLE_SPACE_FLOOR, plateau=PLATEAU_SLOPE) -> RegularityReport:
    """Besov statistics plus verdicts.

    ``in_big_space``: the norm is finite and the top-half statistics show no
    growth (fitted slope inside ``plateau``).  ``little_space_violation``: the
    statistics do not decay toward zero (see :func:`little_space_diagnostic`).
    """
    levels, stats = besov_level_stats(coeffs, m, p)
    norm = max(abs(coeffs.f0), abs(coeffs.f1), float(stats.max()))
    diag = little_space_diagnostic(stats, levels, floor_factor)
    return RegularityReport(
        levels=levels,
        stats=stats,
        norm=norm,
        little_space_liminf=diag.liminf,
        slope=diag.slope,
        in_big_space=bool(np.isfinite(norm) and is_plateau(diag.slope, plateau)),
        little_space_violation=diag.violation,
        p=p,
        modulus=m,
    )


def modulus_norm_direct(path, p: float, m: Modulus) -> float:
    """``||f||_p + max_h Delta_p(f)(h) / omega(h)`` from grid shifts and Riemann sums.

    ``Delta_p(f)(h) = sup_{|s| <= h} (int |f(x+s) - f(x)|^p dx)^(1/p)``, with
    shifts restricted to grid multiples ``h = m / 2^J < 1`` and left Riemann
    sums.  Only meant as a cross-check of :func:`besov_sequence_norm`.
    """
    f = np.asarray(getattr(path, "values", path), dtype=float)
    J = _dyadic_depth(f.size)
    n = 2 ** J
    dx = 1.0 / n
    lp = (dx * np.sum(np.abs(f[:-1]) ** p)) ** (1.0 / p)
    running = 0.0
    best = 0.0
    for shift in range(1, n):
        d = (dx * np.sum(np.abs(f[shift:n] - f[: n - shift]) ** p)) ** (1.0 / p)
        running = max(running, d)
        h = shift * dx
        best = max(best, running / float(modulus_eval(m, h)))
    return float(lp + best)


def coefficient_statistic(normalized, p: float):
    """``(2^-j sum_k |v_jk|^p, c_p)``; the last axis holds one level."""
    v = np.asarray(normalized, dtype=float)
    return np.mean(np.abs(v) ** p, axis=-1), float(gaussian_abs_moment(p))
