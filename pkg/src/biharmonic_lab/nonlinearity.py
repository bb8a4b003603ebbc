"""Catalog of admissible nonlinearities h(x,t) = a(|x|) f(t).

Four families of f are supported, chosen so that the growth rate
beta = lim_{t->inf} f'(t)/f(t) is known analytically:

    PureExp      f(t) = exp(gamma t)                      beta = gamma
    ExpPoly      f(t) = exp(gamma t) (1+t)^(-q)           beta = gamma
    PowerExp     f(t) = t^p exp(t^alpha), alpha in [0,1)  beta = 0
    LogPowerExp  f(t) = log^theta(t+1) t^p exp(t^alpha)   beta = 0

beta > 0 members are "critical" (genuinely exponential growth), beta = 0
members "subcritical".  Large arguments are handled in log space; eval_f
returns a LogValue above the overflow threshold instead of inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .quadrature import QuadratureError

PURE_EXP = "PureExp"
EXP_POLY = "ExpPoly"
POWER_EXP = "PowerExp"
LOG_POWER_EXP = "LogPowerExp"

KINDS = (PURE_EXP, EXP_POLY, POWER_EXP, LOG_POWER_EXP)

#: exponent above which eval_f switches to a log-value representation
OVERFLOW_LOG = 700.0


class CatalogError(RuntimeError):
    """Numerical behaviour contradicts the catalog's analytic data."""


class LogValue(NamedTuple):
    """A positive number represented by its natural log (overflow guard)."""

    log: float

    def __float__(self):
        return math.exp(min(self.log, OVERFLOW_LOG + 10.0))  # inf beyond ~e^710


@dataclass(frozen=True)
class Potential:
    """Radial coefficient a(r) on the unit ball.

    kind is one of Constant, RadialPolynomial, CounterexamplePotential.
    For RadialPolynomial, coeffs are in increasing powers of r.
    """

    kind: str
    coeffs: tuple = ()
    handle: object = None  # CounterexamplePotential only
    a0: float = field(init=False, default=0.0)      # sampled lower bound
    sup: float = field(init=False, default=0.0)     # sampled essential sup

    def __post_init__(self):
        if self.kind == "Constant":
            (c,) = self.coeffs
            if c <= 0:
                raise ValueError("constant potential must be positive")
            lo = hi = float(c)
        elif self.kind == "RadialPolynomial":
            r = np.linspace(0.0, 1.0, 4097)
            vals = self._poly(r)
            lo, hi = float(vals.min()), float(vals.max())
            if lo < 0:
                raise ValueError("potential is negative on the ball")
        elif self.kind == "CounterexamplePotential":
            if self.handle is None:
                raise ValueError("CounterexamplePotential requires a handle")
            lo, hi = math.nan, math.nan  # filled by the counterexample module
        else:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        object.__setattr__(self, "a0", lo)
        object.__setattr__(self, "sup", hi)

    def _poly(self, r):
        out = np.zeros_like(np.asarray(r, dtype=float))
        for k, c in enumerate(self.coeffs):
            out = out + c * np.asarray(r, dtype=float) ** k
        return out

    def value(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "Constant":
            return np.broadcast_to(self.coeffs[0], r.shape).copy() if r.shape else float(self.coeffs[0])
        if self.kind == "RadialPolynomial":
            return self._poly(r)
        # counterexample: a(r) = exp(log_a(l(r))), only for moderate l(rho)
        from . import counterexample as cx

        ell = -np.log(np.maximum(r, 1e-300))
        return np.exp(cx.eval_log_a(self.handle, ell))

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "Constant":
            return np.zeros_like(r) if r.shape else 0.0
        if self.kind == "RadialPolynomial":
            out = np.zeros_like(r)
            for k, c in enumerate(self.coeffs):
                if k >= 1:
                    out = out + k * c * r ** (k - 1)
            return out
        raise NotImplementedError("derivative of counterexample potential")


def constant_potential(a0=1.0):
    return Potential("Constant", (float(a0),))


def radial_polynomial_potential(coeffs):
    return Potential("RadialPolynomial", tuple(float(c) for c in coeffs))


@dataclass(frozen=True)
class NonlinearitySpec:
    kind: str
    gamma: float = 0.0
    q: float = 0.0
    p: float = 0.0
    alpha: float = 0.0
    theta: float = 0.0
    potential: Potential = field(default_factory=constant_potential)
    beta: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.kind in (PURE_EXP, EXP_POLY):
            if self.gamma <= 0:
                raise ValueError("gamma must be positive")
            beta = self.gamma
        elif self.kind in (POWER_EXP, LOG_POWER_EXP):
            if self.p <= 1:
                raise ValueError("p must exceed 1")
            if not (0.0 <= self.alpha < 1.0):
                raise ValueError("alpha must lie in [0, 1)")
            if self.kind == LOG_POWER_EXP and self.theta < 0:
                raise ValueError("theta must be nonnegative")
            beta = 0.0
        else:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        object.__setattr__(self, "beta", beta)


def pure_exp(gamma, potential=None):
    return NonlinearitySpec(PURE_EXP, gamma=gamma, potential=potential or constant_potential())


def exp_poly(gamma, q, potential=None):
    return NonlinearitySpec(EXP_POLY, gamma=gamma, q=q, potential=potential or constant_potential())


def power_exp(p, alpha, potential=None):
    return NonlinearitySpec(POWER_EXP, p=p, alpha=alpha, potential=potential or constant_potential())


def log_power_exp(theta, p, alpha, potential=None):
    return NonlinearitySpec(
        LOG_POWER_EXP, theta=theta, p=p, alpha=alpha, potential=potential or constant_potential()
    )


# ---------------------------------------------------------------------------
# evaluation


def log_f(spec, t):
    """log f(t), vectorized, exact in log space (t may be an array)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        if spec.kind == PURE_EXP:
            out = spec.gamma * t
        elif spec.kind == EXP_POLY:
            out = spec.gamma * t - spec.q * np.log1p(t)
        elif spec.kind == POWER_EXP:
            out = spec.p * np.log(t) + t**spec.alpha
        else:
            out = spec.theta * np.log(np.log1p(t)) + spec.p * np.log(t) + t**spec.alpha
    return out


def eval_f(spec, t):
    """f(t) for scalar t >= 0; LogValue when exp would overflow."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    lf = float(log_f(spec, t))
    if lf > OVERFLOW_LOG:
        return LogValue(lf)
    return math.exp(lf)


def f_array(spec, t):
    """f at array arguments as plain floats (inf on overflow).

    Also defined for t < 0 by the solver's smooth extension: PureExp and
    ExpPoly evaluate natively (ExpPoly clamped above t = -0.9), power
    members extend linearly through the origin (f(0)=0, f'(0)=0 => 0).
    """
    t = np.asarray(t, dtype=float)
    if spec.kind == PURE_EXP:
        return np.exp(np.minimum(spec.gamma * t, OVERFLOW_LOG + 9))
    if spec.kind == EXP_POLY:
        tc = np.maximum(t, -0.9)
        return np.exp(np.minimum(spec.gamma * tc - spec.q * np.log1p(tc), OVERFLOW_LOG + 9))
    tp = np.maximum(t, 0.0)
    with np.errstate(invalid="ignore"):
        out = np.where(tp > 0, np.exp(np.minimum(log_f(spec, np.maximum(tp, 1e-300)), OVERFLOW_LOG + 9)), 0.0)
    return out


def f_prime_array(spec, t):
    """f'(t) at array arguments (same extension rules as f_array)."""
    t = np.asarray(t, dtype=float)
    if spec.kind == PURE_EXP:
        return spec.gamma * f_array(spec, t)
    if spec.kind == EXP_POLY:
        tc = np.maximum(t, -0.9)
        return f_array(spec, tc) * (spec.gamma - spec.q / (1.0 + tc))
    tp = np.maximum(t, 1e-300)
    expo = np.exp(np.minimum(tp**spec.alpha, OVERFLOW_LOG + 9))
    base = tp ** (spec.p - 1) * expo * (spec.p + spec.alpha * tp**spec.alpha)
    if spec.kind == LOG_POWER_EXP:
        lg = np.log1p(tp)
        with np.errstate(divide="ignore", invalid="ignore"):
            extra = np.where(
                spec.theta > 0,
                spec.theta * np.where(lg > 0, lg, 1.0) ** (spec.theta - 1) / (1.0 + tp) * tp**spec.p * expo,
                0.0,
            )
        base = base * np.where(lg > 0, lg, 1.0) ** spec.theta + extra
    return np.where(np.asarray(t) > 0, base, 0.0)


def eval_f_prime(spec, t):
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(f_prime_array(spec, t))


def growth_ratio(spec, t):
    """f'(t)/f(t), analytic per catalog member (t > 0)."""
    t = np.asarray(t, dtype=float)
    if spec.kind == PURE_EXP:
        return np.broadcast_to(spec.gamma, t.shape).astype(float) if t.shape else spec.gamma
    if spec.kind == EXP_POLY:
        return spec.gamma - spec.q / (1.0 + t)
    out = spec.p / t + spec.alpha * t ** (spec.alpha - 1.0)
    if spec.kind == LOG_POWER_EXP and spec.theta > 0:
        out = out + spec.theta / ((1.0 + t) * np.log1p(t))
    return out


def _exp_poly_F_int_q(g, q, t):
    """F(t) for f = e^{g s}(1+s)^{-q}, integer q, via the by-parts recursion
    on J_{-k} = int_0^t e^{g s}(1+s)^{-k} ds:

        J_{-(k+1)} = (g J_{-k} - e^{g t}(1+t)^{-k} + 1) / k,   k >= 1,

    ascending from J_0 = expm1(g t)/g (q <= 0 uses the mirrored recursion
    J_m = (e^{g t}(1+t)^m - 1 - m J_{m-1})/g).  The k = 0 base J_{-1} is the
    exponential integral, e^{-g}(Ei(g(1+t)) - Ei(g))."""
    from scipy.special import expi

    egt = math.exp(g * t)
    if q <= 0:
        J = math.expm1(g * t) / g
        for m in range(1, -q + 1):
            J = (egt * (1.0 + t) ** m - 1.0 - m * J) / g
        return J
    J = math.exp(-g) * (expi(g * (1.0 + t)) - expi(g))  # J_{-1}
    for k in range(1, q):
        J = (g * J - egt * (1.0 + t) ** (-k) + 1.0) / k
    return J


def eval_F(spec, t, rtol=1e-10):
    """F(t) = int_0^t f; closed form where available, else quadrature."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    if spec.kind == PURE_EXP:
        g = spec.gamma
        if g * t > OVERFLOW_LOG:
            return math.inf
        return math.expm1(g * t) / g
    if spec.kind == EXP_POLY and float(spec.q).is_integer() and spec.gamma * (1 + t) < OVERFLOW_LOG:
        return _exp_poly_F_int_q(spec.gamma, int(round(spec.q)), t)
    if spec.kind == POWER_EXP and spec.alpha == 0.0:
        return t ** (spec.p + 1) / (spec.p + 1)
    val, err = quad(lambda s: f_array(spec, s), 0.0, t, epsabs=0.0, epsrel=rtol, limit=200)
    if val != 0 and abs(err / val) > 10 * rtol:
        raise QuadratureError(
            f"F quadrature did not converge to rtol={rtol:g}", achieved=abs(err / max(abs(val), 1e-300))
        )
    return val


def eval_h(spec, x, t):
    """h(x,t) = a(|x|) f(t); x may be a radius or a 4-point."""
    r = _radius(x)
    return float(spec.potential.value(r)) * eval_f(spec, t)


def eval_H(spec, x, t):
    """H(x,t) = a(|x|) F(t) (exact separation for all catalog members)."""
    r = _radius(x)
    return float(spec.potential.value(r)) * eval_F(spec, t)


def _radius(x):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    return float(np.linalg.norm(arr))


# ---------------------------------------------------------------------------
# classification and growth envelopes


@dataclass(frozen=True)
class Criticality:
    kind: str  # "subcritical" | "critical"
    beta: float


def classify(spec):
    """Subcritical iff beta = 0; cross-checked against sampled f'/f."""
    samples = np.array([10.0, 1e2, 1e3, 1e4])
    dev = np.abs(growth_ratio(spec, samples) - spec.beta)
    if np.any(np.diff(dev) > 1e-12 + 1e-9 * dev[:-1]):
        raise CatalogError(
            f"f'/f deviation from beta={spec.beta} is not monotone: {dev.tolist()}"
        )
    if dev[-1] > max(10 * dev[0], 1e-9) and spec.beta == 0.0:
        raise CatalogError("sampled f'/f does not approach the catalog beta")
    return Criticality("critical" if spec.beta > 0 else "subcritical", spec.beta)


@dataclass(frozen=True)
class ExpBoundFit:
    epsilon: float
    c_eps: float
    d_eps: float
    t_eps: float
    t_grid: np.ndarray

    def check(self, t):
        """Both envelope inequalities at points t (log-space comparison)."""
        t = np.asarray(t, dtype=float)
        spec = self._spec
        lf = log_f(spec, np.maximum(t, 1e-300))
        lf = np.where(t == 0, log_f(spec, 1e-300) if spec.kind in (POWER_EXP, LOG_POWER_EXP) else log_f(spec, 0.0), lf)
        logD = math.log(self.d_eps) if self.d_eps > 0 else -math.inf
        logC = math.log(self.c_eps) if self.c_eps > 0 else -math.inf
        beta = spec.beta
        up = np.logaddexp(logD + (beta + self.epsilon) * t, logC)  # log(D e^{(b+e)t} + C)
        lo_lhs = logD + (beta - self.epsilon) * t                  # log(D e^{(b-e)t})
        lo_rhs = np.logaddexp(lf, logC)                            # log(f + C)
        upper_ok = lf <= up + 1e-12
        lower_ok = lo_lhs <= lo_rhs + 1e-12
        return upper_ok & lower_ok


def fit_exp_bounds(spec, epsilon, t_max=1e4):
    """Envelope constants D_eps, C_eps of the exponential growth bounds.

    D_eps = f(T_eps) e^{-(beta+eps) T_eps} with T_eps the first sampled point
    where |f'/f - beta| < eps; C_eps = max f on [0, T_eps].
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if t_max < 100:
        raise ValueError("t_max must be at least 100")
    grid = np.concatenate(([0.0], np.geomspace(1e-2, t_max, 512)))
    dev = np.abs(growth_ratio(spec, grid[1:]) - spec.beta)
    hits = np.nonzero(dev < epsilon)[0]
    if hits.size == 0:
        raise CatalogError("convergence threshold not reached below t_max")
    t_eps = float(grid[1:][hits[0]])
    log_d = float(log_f(spec, t_eps)) - (spec.beta + epsilon) * t_eps
    head = grid[grid <= t_eps]
    c_eps = float(np.max(f_array(spec, head))) if head.size else 0.0
    fit = ExpBoundFit(epsilon, c_eps, math.exp(log_d), t_eps, grid)
    object.__setattr__(fit, "_spec", spec)
    if not bool(np.all(fit.check(grid))):
        raise CatalogError("fitted envelope violates its own sample grid")
    return fit


# ---------------------------------------------------------------------------
# boundary hypotheses (sampled certificate, 64 x 64 grid)


@dataclass(frozen=True)
class BoundaryHypothesesReport:
    h3a_ok: bool
    h3b_ok: bool
    violations: tuple
    b_h4: float
    strip_width: float


def verify_boundary_hypotheses(spec, strip_width=0.1):
    """Sampled check of the boundary-strip hypotheses.

    In the strip 1-strip_width < r < 1: d/dt h = a f' >= 0 and the radial
    form of the outward monotonicity, a'(r) <= 0.  Also records an empirical
    gradient-control constant sup |a'(r)| F(t)/(F(t)+1).
    """
    if spec.potential.kind == "CounterexamplePotential":
        raise ValueError("boundary hypotheses apply to Constant/RadialPolynomial potentials")
    r = np.linspace(1.0 - strip_width, 1.0, 64)
    t = np.concatenate(([0.0], np.geomspace(1e-2, 1e3, 63)))
    fp = f_prime_array(spec, t)
    a = np.asarray(spec.potential.value(r), dtype=float)
    ap = np.asarray(spec.potential.derivative(r), dtype=float)
    violations = []
    h3a_ok = True
    bad_t = t[fp < -1e-12]
    if bad_t.size:
        h3a_ok = False
        violations.append(("H3a", float(bad_t[0])))
    h3b_ok = True
    bad_r = r[ap > 1e-12]
    if bad_r.size:
        h3b_ok = False
        violations.append(("H3b", float(bad_r[0])))
    # F(t)/(F(t)+1) -> 1 for large t; cap the log to avoid overflow
    ratio = np.empty_like(t)
    for i, ti in enumerate(t):
        lf = float(log_f(spec, max(ti, 1e-300)))
        if lf > 40:
            ratio[i] = 1.0
        else:
            Fv = eval_F(spec, float(ti))
            ratio[i] = Fv / (Fv + 1.0)
    b_h4 = float(np.max(np.abs(ap)) * np.max(ratio))
    return BoundaryHypothesesReport(h3a_ok, h3b_ok, tuple(violations), b_h4, strip_width)
