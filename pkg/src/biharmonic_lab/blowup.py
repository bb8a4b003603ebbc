"""Blow-up rescaling against the explicit bubble profile.

A solution with maximum M rescales as v(rho) = u(mu rho) - M with
mu = (lambda a(0) f(M))^{-1/4}; as M grows, v approaches the entire
solution of Delta^2 v = e^{beta v},

    v(rho) = -(4/beta) log(1 + sqrt(beta/24) rho^2 / 4),

whose total mass carries the quantum theta = 64 pi^2 / beta regardless of
amplitude.  Local energies are measured in canonical bubble units: radius
R corresponds to physical radius R * kappa * mu with kappa = sqrt(2)
(24/beta)^{1/4}, so that the closed-form mass fraction inside R is
1 - 6[(1+S)^{-2}/2 - (1+S)^{-3}/3] with S = R^2/2 for every beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator

from . import nonlinearity as nl
from . import radial
from .continuation import scale_mu
from .quadrature import QuadratureError, gauss_panels


def bubble(beta, a_inf, rho):
    """The entire profile of Delta^2 v = a_inf e^{beta v} with v(0) = 0."""
    if beta <= 0 or a_inf <= 0:
        raise ValueError("beta and a_inf must be positive")
    c = math.sqrt(a_inf * beta / 24.0)
    return -(4.0 / beta) * np.log1p(c * np.asarray(rho, dtype=float) ** 2 / 4.0)


def bubble_total_energy(beta, a_inf, rtol=1e-10):
    """a_inf * int_{R^4} e^{beta v} dx by radial quadrature with a tail bound.

    The integrand is a_inf (1 + c rho^2/4)^{-4}, c = sqrt(a_inf beta / 24);
    the analytic tail bound a_inf 128 pi^2/(c^4 R^4) must be below rtol of
    the running total, else QuadratureError.  (Analytically the result is
    64 pi^2 / beta, independent of a_inf.)
    """
    if beta <= 0 or a_inf <= 0:
        raise ValueError("beta and a_inf must be positive")
    c = math.sqrt(a_inf * beta / 24.0)
    rho_c = 2.0 / math.sqrt(c)           # core scale: c rho^2/4 = 1
    R = 400.0 * rho_c

    def integrand(rho):
        return 2.0 * math.pi**2 * a_inf * rho**3 / (1.0 + c * rho**2 / 4.0) ** 4

    edges = np.concatenate((np.linspace(0.0, rho_c, 9), rho_c * np.geomspace(1.0, R / rho_c, 49)[1:]))
    total = gauss_panels(integrand, edges, npts=40)
    tail_bound = a_inf * 128.0 * math.pi**2 / (c**4 * R**4)
    if tail_bound > rtol * total:
        raise QuadratureError("tail bound exceeds tolerance", achieved=tail_bound / total)
    return total


def bubble_mass_fraction(R):
    """Canonical bubble mass inside canonical radius R (S = R^2/2)."""
    S = np.asarray(R, dtype=float) ** 2 / 2.0
    return 1.0 - 6.0 * ((1.0 + S) ** -2 / 2.0 - (1.0 + S) ** -3 / 3.0)


def canonical_radius_factor(beta):
    """kappa with r_physical = R_canonical * kappa * mu."""
    return math.sqrt(2.0) * (24.0 / beta) ** 0.25


@dataclass
class BlowupReport:
    M: float
    mu: float
    lam: float
    rho: np.ndarray
    v: np.ndarray
    v_bubble: np.ndarray
    deviation_sup: float
    local_energy: list          # [[R, value], ...] in canonical units
    theta_target: float
    fraction_expected: list     # [[R, closed-form bubble fraction], ...]
    kappa: float
    truncated: bool
    gradient_surrogates: tuple = ("|u'|", "|Delta u|", "|(Delta u)'|")

    def as_dict(self):
        return {
            "M": self.M,
            "mu": self.mu,
            "lambda": self.lam,
            "deviation_sup": self.deviation_sup,
            "local_energy": [[float(R), float(v)] for R, v in self.local_energy],
            "theta_target": self.theta_target,
            "fraction_expected": [[float(R), float(v)] for R, v in self.fraction_expected],
            "kappa": self.kappa,
            "truncated": self.truncated,
            "gradient_surrogates": list(self.gradient_surrogates),
        }


def rescale(sol, spec, lam=None, R_max=5.0, n_rho=201, R_list=(1.0, 2.0, 3.0, 4.0, 5.0)):
    """Rescaled profile, bubble deviation and local energies for one solution.

    Subcritical members (beta = 0) have no bubble to compare against; use
    subcritical_energy_divergence on the traced branch instead.
    """
    if spec.beta <= 0:
        raise ValueError("rescale applies to critical members (beta > 0); "
                         "use continuation.subcritical_energy_divergence for beta = 0")
    if not sol.converged:
        raise ValueError("rescale requires a converged solution")
    lam = sol.lam if lam is None else lam
    M = sol.M
    mu = scale_mu(spec, lam, M)
    interp = PchipInterpolator(sol.grid.nodes, sol.u)
    truncated = mu * R_max > 1.0
    R_eff = min(R_max, 1.0 / mu)
    rho = np.linspace(0.0, R_eff, n_rho)
    v = interp(mu * rho) - M
    v[0] = 0.0
    vb = bubble(spec.beta, 1.0, rho)
    report = BlowupReport(
        M=M,
        mu=mu,
        lam=lam,
        rho=rho,
        v=v,
        v_bubble=vb,
        deviation_sup=float(np.max(np.abs(v - vb))),
        local_energy=local_energy(sol, spec, lam, R_list),
        theta_target=64.0 * math.pi**2 / spec.beta,
        fraction_expected=[[float(R), float(bubble_mass_fraction(R))] for R in R_list],
        kappa=canonical_radius_factor(spec.beta),
        truncated=truncated,
    )
    return report


def local_energy(sol, spec, lam=None, R_list=(1.0, 2.0, 3.0, 4.0, 5.0), n_quad=4001):
    """2 pi^2 int_0^{R kappa mu} r^3 lambda h(r,u) dr per canonical radius R."""
    if not sol.converged:
        raise ValueError("local energy requires a converged solution")
    lam = sol.lam if lam is None else lam
    beta = spec.beta
    kappa = canonical_radius_factor(beta) if beta > 0 else 1.0
    mu = scale_mu(spec, lam, sol.M)
    interp = PchipInterpolator(sol.grid.nodes, sol.u)
    out = []
    for R in R_list:
        r_cut = min(float(R) * kappa * mu, 1.0)
        if r_cut == 0.0:
            out.append([float(R), 0.0])
            continue
        rr = np.linspace(0.0, r_cut, n_quad)
        integrand = rr**3 * radial.forcing_h(spec, lam, rr, interp(rr))
        out.append([float(R), float(2.0 * math.pi**2 * simpson(integrand, x=rr))])
    return out


@dataclass(frozen=True)
class GradientLpReport:
    i: int
    p: float
    surrogate: str
    radii: np.ndarray
    values: np.ndarray          # 2 pi^2 int_0^r s^3 |D^i u|^p ds
    fitted_C: float             # max over radii of value / r^{4 - i p}
    exponent: float             # 4 - i p

    def as_dict(self):
        return {
            "i": self.i,
            "p": self.p,
            "surrogate": self.surrogate,
            "radii": self.radii.tolist(),
            "values": self.values.tolist(),
            "fitted_C": self.fitted_C,
            "exponent": self.exponent,
        }


_SURROGATES = {1: "|u'|", 2: "|Delta u|", 3: "|(Delta u)'|"}


def gradient_Lp_check(sol, i, p, radii=None):
    """Fit C in int_{B_r} |D^i u|^p <= C r^{4-ip} from the radial data.

    Radial surrogates: |u'| for the gradient, |Delta u| and |(Delta u)'| for
    the second and third derivative tensor norms (equivalent up to fixed
    dimensional constants for radial functions).
    """
    if i not in (1, 2, 3):
        raise ValueError("i must be 1, 2 or 3")
    if not 1.0 <= p < 4.0 / i:
        raise ValueError("p must lie in [1, 4/i)")
    if radii is None:
        radii = np.geomspace(0.05, 0.8, 16)
    radii = np.asarray(radii, dtype=float)
    r = sol.grid.nodes
    D = {1: sol.du, 2: sol.lap_u, 3: sol.dlap_u}[i]
    integrand = r**3 * np.abs(D) ** p
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(r))))
    values = 2.0 * math.pi**2 * np.interp(radii, r, cum)
    expo = 4.0 - i * p
    C = float(np.max(values / radii**expo))
    return GradientLpReport(i, p, _SURROGATES[i], radii, values, C, expo)
