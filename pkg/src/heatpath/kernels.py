"""
Closed-form covariance kernels of the linear stochastic heat equation

    du/dt = (1/2) d2u/dx2 + space-time white noise,   u(0, .) = 0,

together with the special functions and dyadic coefficient covariances the
rest of the package is tested against.

All kernels work in natural units: a section over [a, b] or [0, T] is not
rescaled here.  Callers that want the unit interval do the affine change of
variables themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)

D4_WEIGHTS = np.array([1.0, -4.0, 6.0, -4.0, 1.0])


@dataclass(frozen=True)
class Modulus:
    """Modulus of continuity ``t**alpha * log(1/t)**lam`` on (0, 1)."""

    alpha: float
    lam: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.lam < 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    def __call__(self, t):
        return modulus_eval(self, t)


def green(t, x):
    """Heat kernel ``(2 pi t)^(-1/2) exp(-x^2 / 2t)``, zero for ``t <= 0``."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    pos = t > 0
    tt = np.where(pos, t, 1.0)
    out = np.where(pos, np.exp(-0.5 * x * x / tt) / np.sqrt(2.0 * np.pi * tt), 0.0)
    return out[()] if out.ndim == 0 else out


def cov_time_section(t, s):
    """Covariance of ``u(t, x)`` and ``u(s, x)``; independent of ``x``.

    Equals ``(sqrt(t + s) - sqrt|t - s|) / sqrt(2 pi)``, the bifractional
    Brownian covariance with ``H = K = 1/2`` up to the factor ``1/sqrt(2 pi)``.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(s < 0):
        raise ValueError("times must be nonnegative")
    out = (np.sqrt(t + s) - np.sqrt(np.abs(t - s))) / SQRT_2PI
    return out[()] if out.ndim == 0 else out


def f_space(u, t):
    """Spatial covariance ``F(u) = int_0^t exp(-u^2/4r) / (2 sqrt(pi r)) dr``.

    Closed form ``sqrt(t/pi) exp(-u^2/4t) - |u|/2 erfc(|u| / 2 sqrt t)``,
    evaluated through ``erfcx`` so the difference of the two terms does not
    cancel catastrophically in the tail.  ``t == 0`` gives 0 by continuity.
    """
    u = np.abs(np.asarray(u, dtype=float))
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    pos = t > 0
    tt = np.where(pos, t, 1.0)
    rt = np.sqrt(tt)
    z = u / (2.0 * rt)
    # sqrt(t) e^{-z^2} (1/sqrt(pi) - z erfcx(z))
    out = rt * np.exp(-z * z) * (1.0 / SQRT_PI - z * special.erfcx(z))
    out = np.where(pos, out, 0.0)
    return out[()] if out.ndim == 0 else out


def cov_space_time(t, x, s, y):
    """Covariance of ``u(t, x)`` and ``u(s, y)``.

    ``int_0^{t^s} G(t + s - 2r, x - y) dr = F(x-y; (t+s)/2) - F(x-y; |t-s|/2)``.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(s < 0):
        raise ValueError("times must be nonnegative")
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    out = f_space(d, 0.5 * (t + s)) - f_space(d, 0.5 * np.abs(t - s))
    return out[()] if np.ndim(out) == 0 else out


def fourth_difference(values):
    """``phi(0) - 4 phi(1) + 6 phi(2) - 4 phi(3) + phi(4)`` for five samples.

    Accepts a trailing axis of length 5 and reduces over it.
    """
    v = np.asarray(values, dtype=float)
    if v.shape[-1] != 5:
        raise ValueError(f"need exactly 5 values on the last axis, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("fourth_difference needs finite values")
    out = v @ D4_WEIGHTS
    return out[()] if np.ndim(out) == 0 else out


def _check_index(j, k):
    j = np.asarray(j)
    k = np.asarray(k)
    if np.any(j < 0) or np.any(k < 1) or np.any(k > 2 ** j.astype(np.int64)):
        raise ValueError(f"invalid coefficient index (j={j}, k={k})")


def _bspline4(w):
    """Cubic B-spline on [0, 4]: the Peano kernel of ``fourth_difference``."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    p0 = (w >= 0) & (w < 1)
    p1 = (w >= 1) & (w < 2)
    p2 = (w >= 2) & (w < 3)
    p3 = (w >= 3) & (w <= 4)
    out[p0] = w[p0] ** 3 / 6.0
    out[p1] = (-3.0 * w[p1] ** 3 + 12.0 * w[p1] ** 2 - 12.0 * w[p1] + 4.0) / 6.0
    out[p2] = (3.0 * w[p2] ** 3 - 24.0 * w[p2] ** 2 + 60.0 * w[p2] - 44.0) / 6.0
    out[p3] = (4.0 - w[p3]) ** 3 / 6.0
    return out


def _peano_rule(n=12):
    x, wt = np.polynomial.legendre.leggauss(n)
    nodes = np.concatenate([i + 0.5 * (x + 1.0) for i in range(4)])
    weights = np.tile(0.5 * wt, 4) * _bspline4(nodes)
    return nodes, weights


# D4[f](a) = int_0^4 f''''(a + w) M4(w) dw, Gauss-Legendre on each cubic piece.
# Used wherever the five samples nearly cancel.
_PEANO_NODES, _PEANO_WEIGHTS = _peano_rule()


def _d4_sqrt(a):
    """``fourth_difference`` of ``sqrt`` at ``a, a+1, ..., a+4`` (``a >= 0``).

    Direct for ``a < 2``; otherwise through ``sqrt'''' = -(15/16) x^(-7/2)``,
    which keeps full relative precision at large ``a``.
    """
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    near = a < 2.0
    if np.any(near):
        out[near] = fourth_difference(np.sqrt(a[near][:, None] + np.arange(5.0)))
    far = ~near
    if np.any(far):
        x = a[far][:, None] + _PEANO_NODES
        out[far] = -(15.0 / 16.0) * (x ** -3.5) @ _PEANO_WEIGHTS
    return out


def _unique_eval(fn, keys):
    """Evaluate ``fn`` once per distinct key and broadcast back."""
    keys = np.asarray(keys)
    uniq, inv = np.unique(keys, return_inverse=True)
    return fn(uniq)[inv.reshape(-1)].reshape(keys.shape)


def coeff_cov_time(j, k, k2, j2=None):
    """Exact ``E[u_jk u_jk2]`` for the time section ``t -> u(t, x)`` on [0, 1].

    With ``Phi(x) = sqrt(2(k + k2) - x)`` and ``Psi(x) = sqrt|2|k - k2| - 2 + x|``
    this is ``2^(j/2) / (2 sqrt pi) * (D4[Phi] - D4[Psi])``; on the diagonal the
    ``Psi`` part is the constant ``8 - 2 sqrt 2``.  ``k`` and ``k2`` broadcast.
    """
    if j2 is not None and j2 != j:
        raise ValueError(f"coefficients must share a level, got {j} and {j2}")
    k = np.asarray(k, dtype=np.int64)
    k2 = np.asarray(k2, dtype=np.int64)
    _check_index(j, k)
    _check_index(j, k2)
    k, k2 = np.broadcast_arrays(k, k2)

    def psi(dk):
        dk = dk.astype(float)
        out = np.empty_like(dk)
        kink = dk <= 1
        out[kink] = fourth_difference(np.sqrt(np.abs(2.0 * dk[kink][:, None] - 2.0 + np.arange(5.0))))
        out[~kink] = _d4_sqrt(2.0 * dk[~kink] - 2.0)
        return out

    phi = _unique_eval(lambda kk: _d4_sqrt(2.0 * kk - 4.0), k + k2)
    out = 2.0 ** (j / 2.0) / (2.0 * SQRT_PI) * (phi - _unique_eval(psi, np.abs(k - k2)))
    return out[()] if np.ndim(out) == 0 else out


def _heat_density_d2(u, t):
    """Second ``u``-derivative of ``exp(-u^2/4t) / (2 sqrt(pi t))``, i.e. ``F''''``."""
    p = np.exp(-u * u / (4.0 * t)) / (2.0 * math.sqrt(math.pi * t))
    return p * (u * u / (4.0 * t * t) - 1.0 / (2.0 * t))


def coeff_cov_space(j, k, k2, t, scale=1.0, j2=None):
    """Exact ``E[z_jk z_jk2]`` for the space section ``x -> u(t, x)``.

    ``2^j * D4[x -> F(|2(k - k2) - 2 + x| * scale / 2^(j+1))]``.  ``scale`` is
    the window length when the section [a, b] is mapped onto [0, 1].  Where
    the five samples nearly cancel, the difference is taken through
    ``F'' = heat density`` plus the kink of ``F(|u|)`` at 0, which adds ``2h``.
    """
    if j2 is not None and j2 != j:
        raise ValueError(f"coefficients must share a level, got {j} and {j2}")
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    k = np.asarray(k, dtype=np.int64)
    k2 = np.asarray(k2, dtype=np.int64)
    _check_index(j, k)
    _check_index(j, k2)
    h = scale / 2.0 ** (j + 1)

    def d4(dk):
        dk = dk.astype(float)
        # stencil roughness: large means the five samples differ by orders of
        # magnitude and the direct difference is accurate; small means they
        # nearly cancel and the Peano form is needed
        rough = h / math.sqrt(t) * (1.0 + 2.0 * dk * h / math.sqrt(t))
        out = np.empty_like(dk)
        direct = rough >= 2.0
        if np.any(direct):
            lag = np.abs(2.0 * dk[direct][:, None] - 2.0 + np.arange(5.0)) * h
            out[direct] = fourth_difference(f_space(lag, t))
        smooth = ~direct
        if np.any(smooth):
            ds = dk[smooth]
            u = h * (np.maximum(2.0 * ds - 2.0, -2.0)[:, None] + _PEANO_NODES)
            out[smooth] = h ** 4 * (_heat_density_d2(u, t) @ _PEANO_WEIGHTS) + np.where(ds == 0, 2.0 * h, 0.0)
        return out

    out = 2.0 ** j * _unique_eval(d4, np.abs(k - k2))
    return out[()] if np.ndim(out) == 0 else out


def gaussian_abs_moment(p):
    """``E|N|^p = 2^(p/2) Gamma((p+1)/2) / sqrt(pi)`` for a standard normal N."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("p must be nonnegative")
    out = np.exp(0.5 * p * math.log(2.0) + special.gammaln(0.5 * (p + 1.0))) / SQRT_PI
    return out[()] if out.ndim == 0 else out


def modulus_eval(m: Modulus, t):
    t = np.asarray(t, dtype=float)
    if np.any((t <= 0) | (t >= 1)):
        raise ValueError("modulus is defined on the open interval (0, 1)")
    out = t ** m.alpha * np.log(1.0 / t) ** m.lam
    return out[()] if out.ndim == 0 else out


def time_increment_variance(t, s):
    """``E(u(t,x) - u(s,x))^2`` from the closed-form covariance.

    ``(2 sqrt|t-s| + sqrt(2t) + sqrt(2s) - 2 sqrt(t+s)) / sqrt(2 pi)``; the last
    three terms are rationalized to ``-2 (t-s)^2 / ((a+b)(a+c)(b+c))`` with
    ``a, b, c = sqrt(2t), sqrt(2s), sqrt(t+s)`` to avoid cancellation.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(s < 0):
        raise ValueError("times must be nonnegative")
    a, b, c = np.sqrt(2.0 * t), np.sqrt(2.0 * s), np.sqrt(t + s)
    den = (a + b) * (a + c) * (b + c)
    curv = np.where(den > 0, -2.0 * (t - s) ** 2 / np.where(den > 0, den, 1.0), 0.0)
    out = (2.0 * np.sqrt(np.abs(t - s)) + curv) / SQRT_2PI
    return out[()] if np.ndim(out) == 0 else out


def space_increment_variance(d, t):
    """``E(u(t,x) - u(t,x+d))^2 = 2 (F(0) - F(d))``.

    Written as ``2 sqrt(t/pi) (1 - exp(-z^2)) + |d| erfc(z)`` with
    ``z = |d| / 2 sqrt t`` so small lags do not cancel.
    """
    d = np.abs(np.asarray(d, dtype=float))
    t = np.asarray(t, dtype=float)
    z = d / (2.0 * np.sqrt(t))
    out = -2.0 * np.sqrt(t / math.pi) * np.expm1(-z * z) + d * special.erfc(z)
    return out[()] if np.ndim(out) == 0 else out


def space_increment_lower_constant(t, width):
    """Constant ``c_t`` with ``c_t |x - y| <= E(u(t,x) - u(t,y))^2`` on a window.

    ``(1 - 2 P[0 <= N <= width / sqrt(2t)]) / (2 pi)``.
    """
    prob = special.ndtr(width / math.sqrt(2.0 * t)) - 0.5
    return (1.0 - 2.0 * prob) / (2.0 * math.pi)


@dataclass(frozen=True)
class TimeSection:
    """``t -> u(t, x)`` on ``[0, horizon]`` at a fixed position ``x``."""

    x: float = 0.0
    horizon: float = 1.0

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")

    kind = "time"

    @property
    def interval(self):
        return 0.0, self.horizon

    def covariance(self, p, q):
        return cov_time_section(p, q)


@dataclass(frozen=True)
class SpaceSection:
    """``x -> u(t, x)`` on the window ``[a, b]`` at a fixed time ``t > 0``."""

    t: float = 1.0
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("space sections need t > 0")
        if not self.a < self.b:
            raise ValueError("window needs a < b")

    kind = "space"

    @property
    def interval(self):
        return self.a, self.b

    def covariance(self, p, q):
        return f_space(np.asarray(p) - np.asarray(q), self.t)


@dataclass(frozen=True)
class SpaceTime:
    """Tensor grid over ``[t0, t1] x [x0, x1]``."""

    t0: float = 0.0
    t1: float = 1.0
    x0: float = 0.0
    x1: float = 1.0

    def __post_init__(self):
        if not (0 <= self.t0 < self.t1 and self.x0 < self.x1):
            raise ValueError("space-time section needs 0 <= t0 < t1 and x0 < x1")

    kind = "spacetime"

    def covariance(self, p, q):
        p = np.asarray(p)
        q = np.asarray(q)
        return cov_space_time(p[..., 0], p[..., 1], q[..., 0], q[..., 1])
