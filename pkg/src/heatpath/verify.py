"""
Independent oracles for the closed forms in :mod:`heatpath.kernels`.

* ``quadrature_f``: adaptive Simpson on the defining integral of ``F``.
* ``bilinear_coeff_cov_oracle``: coefficient covariances expanded over the
  three dyadic points of each coefficient, evaluated in 40-digit arithmetic.
* ``lattice_wiener_oracle``: Monte Carlo over a space-time lattice
  discretization of the stochastic convolution, with one noise array shared
  by both evaluation points.

``run_suite`` runs a configurable set of comparisons and returns one
:class:`OracleReport` per compared quantity.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import mpmath
import numpy as np

from . import kernels
from .errors import ConfigError, QuadratureError
from .kernels import SpaceSection, TimeSection
from .rng import SeedSpec, stream

MAX_DEPTH = 60
MAX_CELLS = 10 ** 7
ORACLE_DPS = 40


@dataclass
class OracleReport:
    quantity: str
    oracle: float
    closed_form: float
    discrepancy: float
    tolerance: float
    passed: bool
    kind: str = "abs"

    def as_dict(self):
        return asdict(self)


def _report(quantity, oracle, closed, tolerance, kind="abs"):
    oracle = float(oracle)
    closed = float(closed)
    diff = abs(oracle - closed)
    if kind == "rel":
        diff = diff / abs(oracle) if oracle != 0 else (0.0 if closed == 0 else math.inf)
    return OracleReport(quantity, oracle, closed, diff, float(tolerance), bool(diff <= tolerance), kind)


# ---------------------------------------------------------------- quadrature


def quadrature_f(u: float, t: float, tol: float = 1e-12, rtol: float | None = None,
                 max_depth: int = MAX_DEPTH) -> float:
    """``F(u) = int_0^t exp(-u^2/4r) / (2 sqrt(pi r)) dr`` by adaptive Simpson.

    The substitution ``r = v^2`` turns the integrand into the smooth
    ``exp(-u^2/4v^2) / sqrt(pi)`` on ``[0, sqrt t]``.  ``tol`` bounds the
    absolute error; with ``rtol`` the bound becomes ``min(tol, rtol * |F|)``
    using a coarse first pass for ``|F|``.

    Raises
    ------
    QuadratureError
        If some subinterval still misses its share of the tolerance at
        ``max_depth`` bisections.
    """
    if t <= 0 or tol <= 0:
        raise ConfigError("quadrature_f needs t > 0 and tol > 0")
    u2 = float(u) * float(u)

    def g(v):
        return math.exp(-u2 / (4.0 * v * v)) / math.sqrt(math.pi) if v > 0 else (0.0 if u2 else 1.0 / math.sqrt(math.pi))

    b = math.sqrt(t)
    if rtol is not None:
        rough = _simpson(g, 0.0, b, 1e-6 * b, max_depth)
        tol = min(tol, rtol * abs(rough)) if rough else tol
    return _simpson(g, 0.0, b, tol, max_depth)


def _simpson(g, a, b, tol, max_depth):
    fa, fm, fb = g(a), g(0.5 * (a + b)), g(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # explicit stack, left-to-right so the summation order is fixed
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = g(lm), g(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
            continue
        if depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson missed tolerance {eps:g} on [{a:g}, {b:g}] at depth {depth}")
        stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
        stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
    return total


# ------------------------------------------------------ bilinear expansion

_STENCIL = (-0.5, 1.0, -0.5)


def _mp_cov_time(p, q):
    return (mpmath.sqrt(p + q) - mpmath.sqrt(abs(p - q))) / mpmath.sqrt(2 * mpmath.pi)


def _mp_f_space(u, t):
    u = abs(u)
    return mpmath.sqrt(t / mpmath.pi) * mpmath.exp(-u * u / (4 * t)) - u / 2 * mpmath.erfc(u / (2 * mpmath.sqrt(t)))


def bilinear_coeff_cov_oracle(j: int, k: int, k2: int, section=None, dps: int = ORACLE_DPS) -> float:
    """``4 * 2^j * sum_{i,m} c_i c_m Cov(P_i, P'_m)`` with ``c = (-1/2, 1, -1/2)``.

    ``P`` and ``P'`` are the points ``(2k-2, 2k-1, 2k) / 2^(j+1)`` of each
    coefficient mapped onto the section.  The nine-term sum cancels to
    ``|k - k2|^(-7/2)`` of its terms, so it is carried out with ``dps``
    significant digits and rounded once at the end.
    """
    section = section or TimeSection()
    j, k, k2 = int(j), int(k), int(k2)
    if j < 0 or not (1 <= k <= 2 ** j and 1 <= k2 <= 2 ** j):
        raise ValueError(f"invalid coefficient index (j={j}, k={k}, k2={k2})")
    with mpmath.workdps(dps):
        scale = 2 * mpmath.mpf(2) ** j
        pts = lambda kk: [mpmath.mpf(2 * kk - 2 + i) / 2 ** (j + 1) for i in range(3)]
        if isinstance(section, TimeSection):
            T = mpmath.mpf(section.horizon)
            cov = lambda p, q: _mp_cov_time(T * p, T * q)
        elif isinstance(section, SpaceSection):
            L = mpmath.mpf(section.b) - mpmath.mpf(section.a)
            t = mpmath.mpf(section.t)
            cov = lambda p, q: _mp_f_space(L * (p - q), t)
        else:
            raise ConfigError("bilinear oracle needs a time or space section")
        total = mpmath.mpf(0)
        for ci, p in zip(_STENCIL, pts(k)):
            for cm, q in zip(_STENCIL, pts(k2)):
                total += mpmath.mpf(ci) * mpmath.mpf(cm) * cov(p, q)
        return float(2 * scale * total)


def closed_coeff_cov(j, k, k2, section):
    """Closed-form coefficient covariance for a section (the thing the oracle checks)."""
    if isinstance(section, TimeSection):
        return math.sqrt(section.horizon) * kernels.coeff_cov_time(j, k, k2)
    return kernels.coeff_cov_space(j, k, k2, section.t, scale=section.b - section.a)


# --------------------------------------------------------- lattice oracle


def _time_breakpoints(times, ds, g):
    """Slab edges on ``[0, max(times)]``, graded toward every evaluation time.

    Behind an evaluation time ``T`` the slab widths grow like
    ``g * tau^(5/6)`` with the distance ``tau`` to ``T`` (capped at ``ds``).
    That grading balances the per-slab projection error, which scales like
    ``w^3 tau^(-5/2)``, and needs only about ``6/g`` slabs down to ``tau = 0``.
    """
    top = max(times)
    pts = {0.0, top}
    for T in times:
        if T <= 0:
            continue
        pts.add(T)
        tau = g ** 6
        while tau < T:
            pts.add(T - tau)
            tau += min(ds, g * tau ** (5.0 / 6.0))
    return np.array(sorted(pts))


def _spatial_cells(r1, r2, kernels_, dy, radius):
    """Cell edges of one slab: width ``min(dy, sigma)`` around each active kernel."""
    regions = []
    for T, c in kernels_:
        if r2 > T:
            continue
        sigma = math.sqrt(T - r2) if T > r2 else math.sqrt(r2 - r1)
        R = min(radius, 6.0 * math.sqrt(T - r1))
        regions.append((min(dy, sigma), c - R, c + R))
    regions.sort()
    lo, hi, covered = [], [], []
    for h, a, b in regions:
        pieces = [(a, b)]
        for ca, cb in covered:
            nxt = []
            for pa, pb in pieces:
                if pb <= ca or pa >= cb:
                    nxt.append((pa, pb))
                    continue
                if pa < ca:
                    nxt.append((pa, ca))
                if pb > cb:
                    nxt.append((cb, pb))
            pieces = nxt
        for pa, pb in pieces:
            n = max(1, math.ceil((pb - pa) / h - 1e-9))
            e = np.linspace(pa, pb, n + 1)
            lo.append(e[:-1])
            hi.append(e[1:])
        covered.append((a, b))
    if not lo:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(lo), np.concatenate(hi)


def lattice_weights(t, x, s, y, ds=0.25, dy=0.25, y_radius=None, grading=None):
    """Weights ``a_c, b_c`` with ``u(t,x) ~ sum_c a_c N_c`` and ``u(s,y) ~ sum_c b_c N_c``.

    ``a_c = |c|^(-1/2) int_c G(t - r, x - z) dr dz``, with the time integral
    exact (through ``F``) and the space integral by the midpoint rule.
    Slabs are graded toward ``t`` and ``s`` (see ``_time_breakpoints``; the
    grading constant defaults to ``0.4 ds`` so refining ``ds`` refines it
    too).  Spatial cells have width ``min(dy, sqrt(tau))`` and extend
    ``min(y_radius, 6 sqrt(tau))`` around each centre; the default radius
    ``6 sqrt(max(t, s))`` leaves out less than ``1e-8`` of Gaussian mass.
    """
    if ds <= 0 or dy <= 0:
        raise ConfigError("ds and dy must be positive")
    if t < 0 or s < 0:
        raise ConfigError("times must be nonnegative")
    if y_radius is None:
        y_radius = 6.0 * math.sqrt(max(t, s, 0.0))
    g = 0.4 * ds if grading is None else grading
    pts = [(float(t), float(x)), (float(s), float(y))]
    edges = _time_breakpoints([t, s], ds, g) if max(t, s) > 0 else np.zeros(1)
    wa, wb = [], []
    n_cells = 0
    for r1, r2 in zip(edges[:-1], edges[1:]):
        z1, z2 = _spatial_cells(r1, r2, pts, dy, y_radius)
        n_cells += z1.size
        if n_cells > MAX_CELLS:
            raise ConfigError(f"lattice exceeds {MAX_CELLS} cells; use coarser ds/dy")
        if z1.size == 0:
            continue
        zm = 0.5 * (z1 + z2)
        amp = np.sqrt((z2 - z1) / (r2 - r1))
        for (T, c), out in zip(pts, (wa, wb)):
            if r2 > T:
                out.append(np.zeros_like(zm))
            else:
                out.append(amp * 2.0 * (kernels.f_space(zm - c, 0.5 * (T - r1)) - kernels.f_space(zm - c, 0.5 * (T - r2))))
    if not wa:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(wa), np.concatenate(wb)


@dataclass
class LatticeEstimate:
    covariance: float
    stderr: float
    closed_form: float
    lattice_mean: float
    n_cells: int
    n: int

    @property
    def bias(self) -> float:
        """Exact discretization bias: lattice expectation minus closed form."""
        return self.lattice_mean - self.closed_form

    @property
    def z_score(self) -> float:
        d = self.covariance - self.closed_form
        return 0.0 if d == 0 else (abs(d) / self.stderr if self.stderr > 0 else math.inf)


def lattice_wiener_oracle(t, x, s, y, ds=0.25, dy=0.25, y_radius=None, seed=0, n=200_000,
                          grading=None) -> LatticeEstimate:
    """Empirical ``Cov(u(t,x), u(s,y))`` from ``n`` lattice replicates.

    Both points are driven by the same cell noise (common random numbers).
    Noise is drawn in fixed-size chunks from the Philox stream of ``seed``,
    so the result is a pure function of the arguments.  ``lattice_mean`` is
    the exact expectation ``sum_c a_c b_c`` of the estimate, which gives the
    discretization bias without Monte Carlo noise.
    """
    a, b = lattice_weights(t, x, s, y, ds, dy, y_radius, grading)
    closed = float(kernels.cov_space_time(t, x, s, y))
    mean = float(a @ b)
    if not np.any(a) or not np.any(b):
        # one point carries no noise: the estimate is identically zero
        return LatticeEstimate(0.0, 0.0, closed, mean, a.size, n)
    w = np.column_stack([a, b])
    gen = stream(SeedSpec(int(seed)))
    chunk = max(1, (1 << 22) // a.size)
    vals = np.empty((n, 2))
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        vals[start:start + m] = gen.standard_normal((m, a.size)) @ w
    centered = vals - vals.mean(axis=0)
    prod = centered[:, 0] * centered[:, 1]
    cov = float(prod.sum() / (n - 1))
    se = float(prod.std(ddof=1) / math.sqrt(n))
    return LatticeEstimate(cov, se, closed, mean, a.size, n)


def lattice_refinement(t, x, s, y, ds=0.25, dy=0.25, levels=3):
    """``|lattice mean - closed form|`` as ``ds`` and ``dy`` are halved ``levels - 1`` times."""
    closed = float(kernels.cov_space_time(t, x, s, y))
    out = []
    for i in range(levels):
        a, b = lattice_weights(t, x, s, y, ds / 2 ** i, dy / 2 ** i)
        out.append(abs(float(a @ b) - closed))
    return np.array(out)


# -------------------------------------------------------------------- suite

LATTICE_CONFIGS = (
    (1.0, 0.0, 1.0, 0.0),
    (0.7, 0.2, 0.3, -0.1),
    (1.0, 0.0, 1.0, 10.0),
    (0.0, 0.0, 1.0, 0.0),
    (0.5, 0.0, 0.5, 0.3),
    (1.0, 0.4, 0.6, 0.4),
    (0.25, 0.0, 0.25, 0.0),
    (2.0, 0.5, 1.5, -0.5),
)


def f_space_grid(n_u=10, ts=(0.1, 0.5, 1.0, 2.0, 5.0)):
    """Default 50-point ``(u, t)`` grid: ``|u|`` up to ``3 sqrt t`` on each of five times."""
    pts = []
    for t in ts:
        for u in np.linspace(-3.0, 3.0, n_u) * math.sqrt(t):
            pts.append((float(u), float(t)))
    return pts


DEFAULT_SUITE = {
    "f_space": {"points": None, "tol": 1e-9},
    "coeff_cov_time": {"max_j": 10, "pairs": 500, "seed": 0, "tol": 1e-12},
    "coeff_cov_space": {"max_j": 10, "pairs": 500, "seed": 0, "tol": 1e-12, "t": 1.0},
    "lattice": {"configs": LATTICE_CONFIGS, "n": 200_000, "seed": 0, "ds": 0.25, "dy": 0.25, "n_se": 3.0},
    "lattice_refinement": {"configs": LATTICE_CONFIGS, "ds": 0.25, "dy": 0.25, "levels": 3, "slack": 1e-12},
}


def _check_f_space(cfg, scale):
    pts = cfg.get("points") or f_space_grid()
    tol = cfg.get("tol", 1e-9) * scale
    out = []
    for u, t in pts:
        q = quadrature_f(u, t, tol=1e-12, rtol=1e-12)
        out.append(_report(f"f_space[u={u!r},t={t!r}]", q, kernels.f_space(u, t), tol, "rel"))
    return out


def _check_coeff(cfg, scale, section, name):
    rng = np.random.default_rng(cfg.get("seed", 0))
    tol = cfg.get("tol", 1e-12) * scale
    out = []
    for j in range(cfg.get("max_j", 10) + 1):
        ks = rng.integers(1, 2 ** j + 1, size=(cfg.get("pairs", 500), 2))
        closed = closed_coeff_cov(j, ks[:, 0], ks[:, 1], section)
        for (k, k2), c in zip(ks, np.atleast_1d(closed)):
            o = bilinear_coeff_cov_oracle(j, int(k), int(k2), section)
            out.append(_report(f"{name}[j={j},k={k},k2={k2}]", o, c, tol, "rel"))
    return out


def _check_lattice(cfg, scale):
    out = []
    for i, (t, x, s, y) in enumerate(cfg.get("configs", LATTICE_CONFIGS)):
        est = lattice_wiener_oracle(t, x, s, y, cfg.get("ds", 0.25), cfg.get("dy", 0.25),
                                    seed=cfg.get("seed", 0) + i, n=cfg.get("n", 200_000))
        tol = cfg.get("n_se", 3.0) * est.stderr * scale
        out.append(_report(f"lattice[t={t!r},x={x!r},s={s!r},y={y!r}]", est.covariance, est.closed_form, tol))
    return out


def _check_refinement(cfg, scale):
    out = []
    for t, x, s, y in cfg.get("configs", LATTICE_CONFIGS):
        errs = lattice_refinement(t, x, s, y, cfg.get("ds", 0.25), cfg.get("dy", 0.25), cfg.get("levels", 3))
        worst = float(np.max(np.diff(errs))) if errs.size > 1 else 0.0
        # report the largest step *away* from the closed form; must be <= slack
        out.append(OracleReport(f"lattice_refinement[t={t!r},x={x!r},s={s!r},y={y!r}]", float(errs[-1]),
                                float(errs[0]), max(worst, 0.0), cfg.get("slack", 1e-12) * scale,
                                bool(worst <= cfg.get("slack", 1e-12) * scale), "trend"))
    return out


CHECKS = {
    "f_space": _check_f_space,
    "coeff_cov_time": lambda cfg, sc: _check_coeff(cfg, sc, TimeSection(), "coeff_cov_time"),
    "coeff_cov_space": lambda cfg, sc: _check_coeff(cfg, sc, SpaceSection(t=cfg.get("t", 1.0)), "coeff_cov_space"),
    "lattice": _check_lattice,
    "lattice_refinement": _check_refinement,
}


def run_suite(config=None, only=None, tolerance_scale: float = 1.0):
    """Run the registered oracle comparisons.

    Parameters
    ----------
    config : dict, optional
        Maps check names to their options; ``None`` runs ``DEFAULT_SUITE``
        and ``{}`` runs nothing.
    only : str or sequence of str, optional
        Restrict to these check names.
    tolerance_scale : float
        Multiplies every tolerance.

    Returns
    -------
    list of OracleReport
        Failures are data; nothing is raised for a failed comparison.
    """
    config = DEFAULT_SUITE if config is None else config
    unknown = set(config) - set(CHECKS)
    if unknown:
        raise ConfigError(f"unknown checks: {sorted(unknown)}")
    if only is not None:
        only = [only] if isinstance(only, str) else list(only)
        bad = set(only) - set(CHECKS)
        if bad:
            raise ConfigError(f"unknown checks: {sorted(bad)}")
    reports = []
    for name in CHECKS:
        if name not in config or (only is not None and name not in only):
            continue
        reports.extend(CHECKS[name](dict(config[name] or {}), tolerance_scale))
    return reports
