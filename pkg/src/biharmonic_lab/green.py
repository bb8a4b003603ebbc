"""Closed-form Dirichlet Green kernels on the unit ball of R^4.

Second order (method of images):

    G_lap(x,y) = (1/4pi^2) (|x-y|^{-2} - [XY]^{-2}),
    [XY] = sqrt(|x|^2|y|^2 - 2 x.y + 1)

Fourth order (Boggio's formula, n=4, m=2), normalized so the leading
singularity is the biharmonic fundamental solution (1/8pi^2) log(1/|x-y|):

    G_bih(x,y) = (1/8pi^2) [ log A + (A^{-2} - 1)/2 ],   A = [XY]/|x-y|

The angular means of both kernels over a sphere |y| = s are exact (see
mean_green_*), which reduces every radial representation integral to 1-D
quadrature with a single derivative kink at s = t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import factorial2

from .quadrature import QuadratureError, integrate_kinked

S3_AREA = 2.0 * math.pi**2  # |S^3|
FOURPI2 = 4.0 * math.pi**2
EIGHTPI2 = 8.0 * math.pi**2

_MIN_SEP = 1e-14


def _dots(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xx = np.sum(x * x, axis=-1)
    yy = np.sum(y * y, axis=-1)
    xy = np.sum(x * y, axis=-1)
    return xx, yy, xy


def xy_bracket(x, y):
    """sqrt(|x|^2 |y|^2 - 2 x.y + 1); equals |x-y| when |y| = 1."""
    xx, yy, xy = _dots(x, y)
    return np.sqrt(np.maximum(xx * yy - 2.0 * xy + 1.0, 0.0))


def green_laplace(x, y):
    """Dirichlet Green function of -Delta on the unit 4-ball."""
    xx, yy, xy = _dots(x, y)
    d2 = xx + yy - 2.0 * xy
    if np.any(d2 < _MIN_SEP**2):
        raise ValueError("kernel is singular at coincident points")
    b2 = xx * yy - 2.0 * xy + 1.0
    return (1.0 / d2 - 1.0 / b2) / FOURPI2


def green_biharmonic(x, y):
    """Dirichlet Green function of Delta^2 on the unit 4-ball (Boggio)."""
    xx, yy, xy = _dots(x, y)
    d2 = xx + yy - 2.0 * xy
    if np.any(d2 < _MIN_SEP**2):
        raise ValueError("kernel is singular at coincident points")
    b2 = xx * yy - 2.0 * xy + 1.0
    A2 = b2 / d2
    return (0.5 * np.log(A2) + 0.5 * (1.0 / A2 - 1.0)) / EIGHTPI2


def mean_green_laplace(t, s):
    """Angular mean of G_lap(x, s*omega) over omega in S^3, |x| = t."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    rmax = np.maximum(s, t)
    return (1.0 / rmax**2 - 1.0) / FOURPI2


def mean_green_biharmonic(t, s):
    """Angular mean of G_bih(x, s*omega) over omega in S^3, |x| = t.

    Derived from the exact sphere means: <log|x-y|^2> = 2 log max(s,t)
    + (min/max)^2/2, <[XY]^{-2}> = 1, <A^{-2}> = 1 - (1-t^2)(1-s^2).
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    rmax = np.maximum(s, t)
    rmin = np.minimum(s, t)
    with np.errstate(divide="ignore"):
        out = (
            (t * s) ** 2 / 4.0
            - np.log(rmax)
            - (rmin / np.where(rmax > 0, rmax, 1.0)) ** 2 / 4.0
            - (1.0 - t * t) * (1.0 - s * s) / 2.0
        )
    return out / EIGHTPI2


def represent(g, x_radius, rtol=1e-8):
    """u(x) = int_B G_bih(x,y) g(y) dy for radial g, |x| = x_radius.

    The angular integral is exact; the radial integral uses graded panels
    (ratio 2, 20 levels) toward the s = x_radius kink and toward s = 0.
    The result is cross-checked at two Gauss orders; disagreement beyond
    rtol raises QuadratureError with the achieved error.
    """
    t = float(x_radius)
    if not 0.0 <= t < 1.0:
        raise ValueError("x_radius must lie in [0, 1)")

    def integrand(s):
        return S3_AREA * s**3 * np.asarray(g(s), dtype=float) * mean_green_biharmonic(t, s)

    kinks = (t,) if 0.0 < t < 1.0 else ()
    lo = integrate_kinked(integrand, 0.0, 1.0, kinks, npts=12)
    hi = integrate_kinked(integrand, 0.0, 1.0, kinks, npts=24)
    err = abs(hi - lo)
    scale = max(abs(hi), 1e-300)
    if err / scale > rtol:
        raise QuadratureError(
            f"representation quadrature achieved {err / scale:.3e} > rtol={rtol:g}",
            achieved=err / scale,
        )
    return hi


# ---------------------------------------------------------------------------
# Navier kernel at the pole


def green_navier_pole(z_radius, check_tol=1e-8):
    """G_NAV(0, z) = int_B G_lap(0,y) G_lap(y,z) dy by radial reduction.

    Two independent routes are evaluated: the 1-D composition integral
    (angular mean of G_lap is exact) and a nested quadrature that solves the
    radial Poisson problem -(r^3 phi')' = r^3 g with phi(1) = 0.  They must
    agree to check_tol.
    """
    t = float(z_radius)
    if not 0.0 < t < 1.0:
        raise ValueError("z_radius must lie in (0, 1)")

    def g0(s):
        return (1.0 / s**2 - 1.0) / FOURPI2

    def comp_integrand(s):
        return S3_AREA * s**3 * g0(s) * mean_green_laplace(t, s)

    composed = integrate_kinked(comp_integrand, 0.0, 1.0, (t,), npts=24)

    # nested route: phi(t) = int_t^1 rho^{-3} [int_0^rho s^3 g0(s) ds] drho
    def inner(rho):
        val, _ = quad(lambda s: s**3 * g0(s), 0.0, rho, epsabs=1e-14, epsrel=1e-12)
        return val

    nested, _ = quad(lambda rho: inner(rho) / rho**3, t, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
    if abs(composed - nested) > check_tol * max(abs(composed), 1e-30):
        raise QuadratureError(
            f"composition and nested-solve routes disagree: {composed!r} vs {nested!r}",
            achieved=abs(composed - nested),
        )
    return composed


# ---------------------------------------------------------------------------
# sampled verification of the kernel estimates


def sample_ball_pairs(n_samples, seed=42, min_sep=1e-6):
    """Uniform pairs (x, y) in the open unit 4-ball with |x-y| >= min_sep."""
    rng = np.random.default_rng(seed)
    out_x = np.empty((n_samples, 4))
    out_y = np.empty((n_samples, 4))
    have = 0
    while have < n_samples:
        m = n_samples - have
        g = rng.standard_normal((2 * m, 4))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radii = rng.random(2 * m) ** 0.25
        pts = g * radii[:, None]
        x, y = pts[:m], pts[m:]
        keep = np.linalg.norm(x - y, axis=1) >= min_sep
        k = int(np.sum(keep))
        out_x[have : have + k] = x[keep]
        out_y[have : have + k] = y[keep]
        have += k
    return out_x, out_y


@dataclass(frozen=True)
class TwoSidedReport:
    r_min: float
    r_max: float
    ratio: float
    n_samples: int
    seed: int
    passed: bool


def verify_two_sided_estimate(n_samples=10_000, seed=42):
    """Ratio statistics of G_bih against log(1 + d(x)^2 d(y)^2 / |x-y|^4)."""
    if n_samples < 1000:
        raise ValueError("need at least 10^3 samples")
    x, y = sample_ball_pairs(n_samples, seed)
    G = green_biharmonic(x, y)
    dx = 1.0 - np.linalg.norm(x, axis=1)
    dy = 1.0 - np.linalg.norm(y, axis=1)
    dist = np.linalg.norm(x - y, axis=1)
    bound = np.log1p(dx**2 * dy**2 / dist**4)
    ratio = G / bound
    r_min, r_max = float(ratio.min()), float(ratio.max())
    return TwoSidedReport(
        r_min, r_max, r_max / r_min, n_samples, seed, passed=(r_min > 0 and r_max / r_min < 1e3)
    )


def _fd_gradient(x, y, h):
    """Centered-difference gradient of G_bih in x."""
    grads = np.empty_like(x)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        grads[:, i] = (green_biharmonic(x + e, y) - green_biharmonic(x - e, y)) / (2 * h)
    return grads


@dataclass(frozen=True)
class GradientReport:
    sup_grad_product: float
    sup_log_ratio: float
    sup_grad_product_refined: float
    sup_log_ratio_refined: float
    fd_step: float
    n_samples: int
    seed: int
    passed: bool


def verify_gradient_estimate(n_samples=10_000, fd_step=1e-4, seed=42):
    """sup |grad_x G| |x-y| and sup |G|/log(2 + 1/|x-y|) over sampled pairs.

    Passes when both are finite and stable (within a factor 1.5) under
    doubling the sample count.
    """
    if not 0.0 < fd_step <= 1e-3:
        raise ValueError("fd_step must lie in (0, 1e-3]")

    def sups(n, sd):
        x, y = sample_ball_pairs(n, sd, min_sep=10 * fd_step)
        # keep |x| + h inside the ball for the FD stencil
        shrink = (1.0 - 2 * fd_step) / np.maximum(np.linalg.norm(x, axis=1), 1.0)
        x = x * np.minimum(shrink, 1.0)[:, None]
        dist = np.linalg.norm(x - y, axis=1)
        G = green_biharmonic(x, y)
        gr = np.linalg.norm(_fd_gradient(x, y, fd_step), axis=1)
        return float(np.max(gr * dist)), float(np.max(np.abs(G) / np.log(2.0 + 1.0 / dist)))

    s1, l1 = sups(n_samples, seed)
    s2, l2 = sups(2 * n_samples, seed)
    ok = (
        np.isfinite([s1, l1, s2, l2]).all()
        and s2 <= 1.5 * s1 + 1e-12
        and l2 <= 1.5 * l1 + 1e-12
    )
    return GradientReport(s1, l1, s2, l2, fd_step, n_samples, seed, bool(ok))


def fd_bilaplacian_4d(f, x, h):
    """Composed 9-point discrete Laplacian applied twice at x in R^4."""
    x = np.asarray(x, dtype=float)

    def lap(p):
        tot = -8.0 * f(p)
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            tot += f(p + e) + f(p - e)
        return tot / h**2

    tot = -8.0 * lap(x)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        tot += lap(x + e) + lap(x - e)
    return tot / h**2


# ---------------------------------------------------------------------------
# polyharmonic constants (conformal dimension N = 2m)


@dataclass(frozen=True)
class PolyharmonicConstants:
    m: int
    gamma_m: float            # fundamental-solution normalization of (-Delta)^m
    sphere_area_2m: float     # |S^{2m}|
    sphere_area_2m_minus_1: float  # |S^{2m-1}|

    def theta_of_beta(self, beta):
        """Blow-up energy quantum theta = (2m)! |S^{2m}| / beta."""
        return math.factorial(2 * self.m) * self.sphere_area_2m / beta


def polyharmonic_constants(m):
    """gamma_m = |S^{2m-1}| 2^{2m-2} ((m-1)!)^2, sphere areas, theta(beta).

    |S^{2m-1}| = 2 pi^m/(m-1)! and |S^{2m}| = 2^{m+1} pi^m/(2m-1)!!; the
    identity beta*theta(beta)/gamma_m = 4m holds exactly for every beta > 0.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    s_odd = 2.0 * math.pi**m / math.factorial(m - 1)          # |S^{2m-1}|
    s_even = 2.0 ** (m + 1) * math.pi**m / float(factorial2(2 * m - 1))  # |S^{2m}|
    gamma_m = s_odd * 2.0 ** (2 * m - 2) * math.factorial(m - 1) ** 2
    return PolyharmonicConstants(m, gamma_m, s_even, s_odd)
