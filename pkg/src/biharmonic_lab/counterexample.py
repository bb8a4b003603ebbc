"""Unbounded distributional solution of Delta^2 w = a(x) e^{w^alpha}.

For alpha in (1,2) set gamma = (alpha-1)/alpha, delta = 1/(4 alpha) - 1/2
and f_beta(t) = t + beta t^gamma + delta log t.  With u_beta(r) =
f_beta(l(r))^{1/alpha}, l(r) = log(1/r), the parameters (A, B, beta) are
chosen so that

    w(r) = 4^{1/alpha} (u_beta(r) + A + B r^2)

satisfies w(rho) = w'(rho) = 0 and beta = -alpha A.  Then w solves
Delta^2 w = a e^{w^alpha} with a = 4^{1/alpha} e^{-w^alpha} Delta^2 u_beta
positive and w unbounded at the origin.

Everything is evaluated as a function of ell = l(r) >= l(rho); radii like
e^{-1000} are never materialized.  Quantities that overflow doubles
(Delta^2 u_beta ~ e^{4 ell}, a itself for small rho) are carried as logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOG4 = math.log(4.0)


class DomainGuardError(RuntimeError):
    """The implicit map left its domain of validity at some t."""

    def __init__(self, t, message):
        super().__init__(f"t={t:g}: {message}")
        self.t = t


class InconsistencyError(RuntimeError):
    """Parameter verification failed beyond tolerance."""


class CertificateError(RuntimeError):
    """A certificate clause failed; names the clause and witness ell."""

    def __init__(self, clause, witness_ell, message):
        super().__init__(f"clause {clause} failed at ell={witness_ell:g}: {message}")
        self.clause = clause
        self.witness_ell = witness_ell


def solve_x0(alpha):
    """The unique x0 < -1 with (-x0)^alpha = 1 - alpha x0.

    Bisection bracket plus Newton polish on g(s) = s^alpha - alpha s - 1,
    s = -x0 in (1, inf); residual <= 1e-12.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")

    def g(s):
        return s**alpha - alpha * s - 1.0

    lo, hi = 1.0, 2.0
    while g(hi) < 0:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    for _ in range(8):
        s -= g(s) / (alpha * s ** (alpha - 1.0) - alpha)
    if abs(g(s)) > 1e-12 * (1.0 + alpha * s):
        raise InconsistencyError(f"x0 residual {g(s):.3e}")
    x0 = -s
    assert x0 < -1.0
    return x0


def y0_of(alpha, x0):
    """y0 = -(x0 + (-x0)^{2-alpha})/(2 alpha) > 0."""
    y0 = -(x0 + (-x0) ** (2.0 - alpha)) / (2.0 * alpha)
    assert y0 > 0.0
    return y0


def _F_map(alpha, x, y, t):
    """The implicit system F(x,y,t) = 0 defining (A, B, beta); t log t
    extends to 0 by continuity at t = 0."""
    gamma = (alpha - 1.0) / alpha
    delta = 1.0 / (4.0 * alpha) - 0.5
    tlogt = t * math.log(t) if t > 0 else 0.0
    P = 1.0 - alpha * x - delta * tlogt
    if P <= 0:
        raise DomainGuardError(t, "argument 1 - alpha x - delta t log t is not positive")
    c = 1.0 / alpha
    Q = 1.0 - (alpha - 1.0) * x + delta * t
    F1 = x + y * t + P**c
    F2 = 2.0 * y - c * P ** (c - 1.0) * Q
    dF1x = 1.0 - P ** (c - 1.0)
    dF1y = t
    dF2x = -c * ((c - 1.0) * P ** (c - 2.0) * (-alpha) * Q + P ** (c - 1.0) * (-(alpha - 1.0)))
    dF2y = 2.0
    return np.array([F1, F2]), np.array([[dF1x, dF1y], [dF2x, dF2y]])


def solve_implicit(alpha, t, seed=None):
    """(x(t), y(t)) with F(x,y,t) = 0, damped Newton from (x0, y0)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if seed is None:
        x = solve_x0(alpha)
        y = y0_of(alpha, x)
    else:
        x, y = seed
    F, J = _F_map(alpha, x, y, t)
    for _ in range(100):
        if np.max(np.abs(F)) <= 1e-12:
            return x, y
        dx, dy = np.linalg.solve(J, -F)
        step = 1.0
        for _ in range(40):
            try:
                Ft, Jt = _F_map(alpha, x + step * dx, y + step * dy, t)
            except DomainGuardError:
                step *= 0.5
                continue
            if np.max(np.abs(Ft)) < np.max(np.abs(F)):
                break
            step *= 0.5
        else:
            raise DomainGuardError(t, "implicit Newton stalled")
        x, y = x + step * dx, y + step * dy
        F, J = Ft, Jt
    raise DomainGuardError(t, "implicit Newton did not converge")


@dataclass(frozen=True)
class CounterexampleParams:
    alpha: float
    gamma: float
    delta: float
    ell_rho: float
    x0: float
    y0: float
    x_t: float          # x(1/ell_rho)
    y_t: float          # y(1/ell_rho)
    A: float            # x_t * ell_rho^{1/alpha} < 0
    beta: float         # -alpha A > 0
    B_rho2: float       # B * rho^2 = y_t * ell_rho^{1/alpha - 1} > 0
    log_B: float        # log B = log(B_rho2) + 2 ell_rho
    scaling_C: float    # beta / ell_rho^{1/alpha}

    @property
    def rho(self):
        """e^{-ell_rho}; underflows to 0.0 for ell_rho > ~745."""
        return math.exp(-self.ell_rho) if self.ell_rho < 745 else 0.0

    @property
    def B(self):
        """B itself; overflows to inf for ell_rho > ~354."""
        return math.exp(self.log_B) if self.log_B < 709 else math.inf


def make_params(alpha, ell_rho):
    """Parameters for rho given via ell_rho = l(rho) = log(1/rho).

    Verifies the defining system directly: u_beta(rho) + A + B rho^2 = 0
    and du_beta/dell(ell_rho) = 2 B rho^2, to 1e-8 relative.
    """
    if ell_rho <= 1.0:
        raise ValueError("ell_rho must exceed 1")
    t = 1.0 / ell_rho
    x0 = solve_x0(alpha)
    y0 = y0_of(alpha, x0)
    x, y = solve_implicit(alpha, t)
    gamma = (alpha - 1.0) / alpha
    delta = 1.0 / (4.0 * alpha) - 0.5
    c = 1.0 / alpha
    A = x * ell_rho**c
    beta = -alpha * A
    B_rho2 = y * ell_rho ** (c - 1.0)
    params = CounterexampleParams(
        alpha=alpha,
        gamma=gamma,
        delta=delta,
        ell_rho=float(ell_rho),
        x0=x0,
        y0=y0,
        x_t=x,
        y_t=y,
        A=A,
        beta=beta,
        B_rho2=B_rho2,
        log_B=math.log(B_rho2) + 2.0 * ell_rho,
        scaling_C=beta / ell_rho**c,
    )
    # independent re-derivation of the system at r = rho
    ub = u_beta(params, ell_rho)
    scale = max(abs(ub), 1.0)
    res1 = abs(A + B_rho2 + ub) / scale
    res2 = abs(du_beta_dell(params, ell_rho) - 2.0 * B_rho2) / scale
    if max(res1, res2) > 1e-8:
        raise InconsistencyError(f"parameter system residuals {res1:.2e}, {res2:.2e}")
    return params


# --------------------------------------------------------------------------
# f_beta and its derivatives (functions of ell)


def _fb(params, ell):
    ell = np.asarray(ell, dtype=float)
    return ell + params.beta * ell**params.gamma + params.delta * np.log(ell)


def _fb_derivs(params, ell):
    g, d, b = params.gamma, params.delta, params.beta
    ell = np.asarray(ell, dtype=float)
    f1 = 1.0 + b * g * ell ** (g - 1.0) + d / ell
    f2 = b * g * (g - 1.0) * ell ** (g - 2.0) - d / ell**2
    f3 = b * g * (g - 1.0) * (g - 2.0) * ell ** (g - 3.0) + 2.0 * d / ell**3
    f4 = b * g * (g - 1.0) * (g - 2.0) * (g - 3.0) * ell ** (g - 4.0) - 6.0 * d / ell**4
    return f1, f2, f3, f4


def u_beta(params, ell):
    """u_beta = f_beta(ell)^{1/alpha}; requires f_beta > 0."""
    fv = _fb(params, ell)
    if np.any(fv <= 0):
        raise ValueError("u_beta undefined: f_beta <= 0 at some ell")
    return fv ** (1.0 / params.alpha)


def du_beta_dell(params, ell):
    fv = _fb(params, ell)
    f1, _, _, _ = _fb_derivs(params, ell)
    c = 1.0 / params.alpha
    return c * fv ** (c - 1.0) * f1


@dataclass(frozen=True)
class BilapValue:
    ell: np.ndarray
    scaled: np.ndarray        # G(ell) = r^4 Delta^2 u_beta (finite part)
    log_value: np.ndarray     # log Delta^2 u_beta = 4 ell + log G
    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    h4: np.ndarray
    leading_scaled: np.ndarray  # 4(alpha-1)/alpha^2 * ell^{1/alpha - 2}
    positive: bool


def bilap_u_beta(params, ell):
    """Delta^2 u_beta via the h_i assembly:

        Delta^2 u_beta = r^{-4} sum_{i=1}^4 i! C(1/alpha, i)
                                 f_beta^{1/alpha - i} h_i,
        h1 = f'''' - 4 f'',   h2 = 4 f''' f' - 4 f'^2 + 3 f''^2,
        h3 = 6 f'^2 f'',      h4 = f'^4

    (equivalently r^{-4} (g'''' - 4 g'') for g = f_beta^{1/alpha} in
    log-radial coordinates).  Only logs and the scaled value r^4 Delta^2
    are materialized.
    """
    ell = np.atleast_1d(np.asarray(ell, dtype=float))
    a = params.alpha
    c = 1.0 / a
    fv = _fb(params, ell)
    if np.any(fv <= 0):
        raise ValueError("outside validity: f_beta <= 0")
    f1, f2, f3, f4 = _fb_derivs(params, ell)
    h1 = f4 - 4.0 * f2
    h2 = 4.0 * f3 * f1 - 4.0 * f1**2 + 3.0 * f2**2
    h3 = 6.0 * f1**2 * f2
    h4 = f1**4
    coef = [c, c * (c - 1.0), c * (c - 1.0) * (c - 2.0), c * (c - 1.0) * (c - 2.0) * (c - 3.0)]
    G = (
        coef[0] * fv ** (c - 1.0) * h1
        + coef[1] * fv ** (c - 2.0) * h2
        + coef[2] * fv ** (c - 3.0) * h3
        + coef[3] * fv ** (c - 4.0) * h4
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = np.where(G > 0, 4.0 * ell + np.log(np.abs(G) + 1e-320), np.nan)
    lead = 4.0 * (a - 1.0) / a**2 * ell ** (c - 2.0)
    return BilapValue(ell, G, logv, h1, h2, h3, h4, lead, bool(np.all(G > 0)))


# --------------------------------------------------------------------------
# w and a (log space)


def _z_of(params, ell):
    """z = u_beta + A + B r^2 = w / 4^{1/alpha} (>= 0 on [ell_rho, inf))."""
    ell = np.asarray(ell, dtype=float)
    br2 = params.B_rho2 * np.exp(-2.0 * (ell - params.ell_rho))
    return u_beta(params, ell) + params.A + br2


def eval_w(params, ell):
    """w(ell) = 4^{1/alpha} (u_beta + A + B r^2)."""
    return 4.0 ** (1.0 / params.alpha) * _z_of(params, ell)


def dw_dell(params, ell):
    ell = np.asarray(ell, dtype=float)
    br2 = params.B_rho2 * np.exp(-2.0 * (ell - params.ell_rho))
    return 4.0 ** (1.0 / params.alpha) * (du_beta_dell(params, ell) - 2.0 * br2)


def w_alpha(params, ell):
    """w^alpha = 4 z^alpha (the exponent of the nonlinearity)."""
    z = np.maximum(_z_of(params, ell), 0.0)
    return 4.0 * z**params.alpha


def phi_defect(params, ell):
    """Phi = z^alpha - ell - delta log(ell), evaluated without cancellation.

    Uses f_beta - (ell + delta log ell) = beta ell^gamma exactly, then
    expm1/log1p ladders; stable for ell up to ~1e30.  The paper's
    w^alpha = 4 l + 4 delta log l + o(1) statement says 4*Phi -> 0.
    """
    ell = np.asarray(ell, dtype=float)
    base = ell + params.delta * np.log(ell)
    c = 1.0 / params.alpha
    q = base**c
    bump = params.beta * ell**params.gamma / base
    s = q * np.expm1(c * np.log1p(bump)) + params.A \
        + params.B_rho2 * np.exp(-2.0 * (ell - params.ell_rho))
    ratio = np.maximum(s / q, -1.0)
    return base * np.expm1(params.alpha * np.log1p(ratio))


def eval_log_a(params, ell):
    """log a(ell), a = 4^{1/alpha} e^{-w^alpha} Delta^2 u_beta.

    The e^{-4 ell} / r^{-4} cancellation is done analytically:
    log a = log(4)/alpha + log G(ell) - 4 delta log(ell) - 4 Phi(ell).
    """
    ell = np.atleast_1d(np.asarray(ell, dtype=float))
    bl = bilap_u_beta(params, ell)
    if not bl.positive:
        raise ValueError("Delta^2 u_beta is not positive on the requested ells")
    return LOG4 / params.alpha + np.log(bl.scaled) \
        - 4.0 * params.delta * np.log(ell) - 4.0 * phi_defect(params, ell)


def eval_a(params, ell):
    """a(ell) as a float; overflows to inf when log a > ~709."""
    la = eval_log_a(params, ell)
    with np.errstate(over="ignore"):
        return np.exp(la)


def a_limit(alpha):
    """a(0+) = 4^{1/alpha + 1} (alpha - 1) / alpha^2."""
    return 4.0 ** (1.0 / alpha + 1.0) * (alpha - 1.0) / alpha**2


def identity_residual(params, ell):
    """Log-space defect of Delta^2 w = a e^{w^alpha}, normalized by
    max(1, w^alpha).  w^alpha here is recomputed through the direct power
    route, so the residual measures genuine fp path differences."""
    ell = np.atleast_1d(np.asarray(ell, dtype=float))
    bl = bilap_u_beta(params, ell)
    log_lhs = LOG4 / params.alpha + bl.log_value            # log Delta^2 w
    wa = w_alpha(params, ell)
    log_rhs = eval_log_a(params, ell) + wa
    return np.abs(log_lhs - log_rhs) / np.maximum(1.0, wa)


# --------------------------------------------------------------------------
# certificate


@dataclass(frozen=True)
class CounterexampleCertificate:
    params: CounterexampleParams
    ell_grid: np.ndarray
    ell_star: float            # w strictly increasing beyond this grid point
    w_growth_ratio: float      # w(top)/top^{1/alpha} vs 4^{1/alpha}
    min_log_a: float
    max_log_a: float
    bc_residuals: tuple        # (|w(ell_rho)|, |dw/dell(ell_rho)|)
    max_identity_residual: float


def certify(params, ell_max=1e6, n_grid=400):
    """Run the certificate clauses on a geometric ell grid.

    (i) Delta^2 u_beta > 0; (ii) w > 0 and strictly increasing beyond some
    ell*; (iii) 0 < min a <= max a < inf (as logs); (iv) w(l(rho)) = 0 and
    dw/dell(l(rho)) = 0 to 1e-8; (v) the pointwise identity Delta^2 w =
    a e^{w^alpha} to 1e-12 in normalized log-space arithmetic.
    Raises CertificateError naming the clause and witness ell on failure.
    """
    if ell_max < params.ell_rho * 10:
        raise ValueError("ell_max too small for a meaningful certificate")
    grid = np.geomspace(params.ell_rho, ell_max, n_grid)
    grid[0] = params.ell_rho

    bl = bilap_u_beta(params, grid)
    if not bl.positive:
        bad = float(grid[np.argmin(bl.scaled)])
        raise CertificateError("i:positivity", bad, "Delta^2 u_beta <= 0")

    w = eval_w(params, grid)
    dw = np.diff(w)
    increasing_from = n_grid - 1
    for k in range(n_grid - 1):
        if np.all(dw[k:] > 0):
            increasing_from = k
            break
    if increasing_from >= n_grid - 2:
        raise CertificateError("ii:monotone", float(grid[-1]), "w never becomes increasing")
    tail = slice(increasing_from + 1, None)
    if np.any(w[tail] <= 0):
        bad = float(grid[tail][np.argmin(w[tail])])
        raise CertificateError("ii:positive", bad, "w <= 0 beyond ell*")
    ell_star = float(grid[increasing_from])
    growth = float(w[-1] / grid[-1] ** (1.0 / params.alpha))

    la = eval_log_a(params, grid)
    if not np.all(np.isfinite(la)):
        bad = float(grid[~np.isfinite(la)][0])
        raise CertificateError("iii:bounded", bad, "log a not finite")

    w0 = abs(float(eval_w(params, params.ell_rho)))
    dw0 = abs(float(dw_dell(params, params.ell_rho)))
    if w0 > 1e-8 or dw0 > 1e-8:
        raise CertificateError("iv:boundary", params.ell_rho, f"w={w0:.2e}, dw/dell={dw0:.2e}")

    ir = identity_residual(params, grid)
    if np.max(ir) > 1e-12:
        bad = float(grid[np.argmax(ir)])
        raise CertificateError("v:identity", bad, f"residual {np.max(ir):.2e}")

    return CounterexampleCertificate(
        params=params,
        ell_grid=grid,
        ell_star=ell_star,
        w_growth_ratio=growth,
        min_log_a=float(np.min(la)),
        max_log_a=float(np.max(la)),
        bc_residuals=(w0, dw0),
        max_identity_residual=float(np.max(ir)),
    )


def counterexample_potential(params):
    """The coefficient a(x) as a Potential (moderate ell_rho only)."""
    from .nonlinearity import Potential

    if params.ell_rho > 150:
        raise ValueError("potential only float-representable for ell_rho <= 150")
    return Potential("CounterexamplePotential", handle=params)
