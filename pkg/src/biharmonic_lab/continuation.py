"""Max-norm continuation of solution branches of Delta^2 u = lambda a f(u).

The branch is parameterized by M = u(0) (the blow-up parameter): each step
solves the augmented system {PDE residual = 0, u(0) - M = 0} for (u, lambda)
jointly, warm-started by secant extrapolation from the two previous points.
Folds in lambda are sign changes of dlambda/dM; the augmented Jacobian stays
regular there, so tracing continues through them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import nonlinearity as nl
from . import radial
from .radial import DIRICHLET, NAVIER, NoConvergence, SingularJacobian


@dataclass
class BranchPoint:
    M: float
    lam: float
    energy: float
    mu: float
    fold_flag: bool
    solution: radial.RadialSolution


@dataclass
class SolutionBranch:
    spec: nl.NonlinearitySpec
    bc: str
    grid: radial.RadialGrid
    points: list = field(default_factory=list)
    truncated: bool = False
    diagnostic: str = ""

    @property
    def M(self):
        return np.array([p.M for p in self.points])

    @property
    def lam(self):
        return np.array([p.lam for p in self.points])

    @property
    def energies(self):
        return np.array([p.energy for p in self.points])

    @property
    def mu(self):
        return np.array([p.mu for p in self.points])


def scale_mu(spec, lam, M):
    """Blow-up scale mu = (lambda a(0) f(M))^{-1/4}, overflow-safe."""
    a0 = float(spec.potential.value(0.0))
    log_arg = math.log(lam) + math.log(a0) + float(nl.log_f(spec, M))
    return math.exp(-0.25 * log_arg)


def _seed_profile(bc, grid, M):
    r = grid.nodes
    if bc == DIRICHLET:
        return M * (1.0 - r**2) ** 2
    return M * (r**4 - 3.0 * r**2 + 2.0) / 2.0


def trace(spec, bc, grid, config=None, M_start=0.25, M_end=25.0, dM=0.25):
    """Trace the branch from M_start to M_end in steps of dM (adaptive).

    Newton failure halves the step (floor dM/16, then the branch is
    truncated with a diagnostic); after 3 consecutive successes the step
    doubles back toward the user dM.
    """
    if M_start > M_end:
        raise ValueError("M_start must not exceed M_end")
    if dM <= 0:
        raise ValueError("dM must be positive")
    config = config or radial.SolverConfig()
    branch = SolutionBranch(spec=spec, bc=bc, grid=grid)
    a0 = float(spec.potential.value(0.0))

    def solve_at(M, init, lam_guess):
        if init is None:
            sol0 = radial.RadialSolution(
                grid=grid,
                u=_seed_profile(bc, grid, M),
                du=np.zeros(grid.n),
                lap_u=np.zeros(grid.n),
                dlap_u=np.zeros(grid.n),
                bc=bc,
                lam=lam_guess,
                M=M,
                residual_norm=math.inf,
                residual_raw=math.inf,
                newton_iters=0,
            )
            init = sol0
        return radial.solve(spec, None, bc, grid, config=config, init=init, M_target=M)

    M = M_start
    dM_cur = dM
    easy = 0
    sols = []
    while True:
        if not sols:
            fM = float(nl.f_array(spec, np.array([M]))[0])
            lam_guess = 192.0 * M / (a0 * fM) if bc == DIRICHLET else 96.0 * M / (a0 * fM)
            init = None
        elif len(sols) == 1:
            init, lam_guess = sols[-1][1], sols[-1][1].lam
        else:
            (M1, s1), (M2, s2) = sols[-2], sols[-1]
            t = (M - M2) / (M2 - M1)
            guess = radial.RadialSolution(
                grid=grid,
                u=s2.u + t * (s2.u - s1.u),
                du=s2.du,
                lap_u=s2.lap_u + t * (s2.lap_u - s1.lap_u),
                dlap_u=s2.dlap_u,
                bc=bc,
                lam=s2.lam + t * (s2.lam - s1.lam),
                M=M,
                residual_norm=math.inf,
                residual_raw=math.inf,
                newton_iters=0,
            )
            init, lam_guess = guess, guess.lam
        try:
            sol = solve_at(M, init, lam_guess)
        except (NoConvergence, SingularJacobian) as exc:
            if dM_cur <= dM / 16.0 + 1e-15:
                branch.truncated = True
                branch.diagnostic = f"Newton failed at M={M:g} with minimal step: {exc}"
                break
            dM_cur = max(dM_cur / 2.0, dM / 16.0)
            M = sols[-1][0] + dM_cur if sols else M_start
            easy = 0
            continue
        sols.append((M, sol))
        easy += 1
        if easy >= 3:
            dM_cur = min(2.0 * dM_cur, dM)
        if M >= M_end - 1e-12:
            break
        M = min(M + dM_cur, M_end)

    lams = [s.lam for _, s in sols]
    for k, (Mk, sk) in enumerate(sols):
        fold = False
        if 0 < k < len(sols) - 1:
            fold = (lams[k + 1] - lams[k]) * (lams[k] - lams[k - 1]) < 0
        branch.points.append(
            BranchPoint(
                M=Mk,
                lam=sk.lam,
                energy=radial.solution_energy(sk, spec),
                mu=scale_mu(spec, sk.lam, Mk),
                fold_flag=fold,
                solution=sk,
            )
        )
    return branch


def energy_along_branch(branch):
    """Per-point energies and their supremum (the empirical Lambda)."""
    E = branch.energies
    return E, float(np.max(E)) if len(E) else 0.0


@dataclass(frozen=True)
class DivergenceReport:
    slope: float        # d log E / d log M over the top half of the branch
    energies: np.ndarray
    M: np.ndarray
    passed: bool


def subcritical_energy_divergence(branch, min_slope=0.2):
    """Subcritical members: branch energy must grow without bound with M.

    Fits the log-log slope of energy vs M over the top half of the traced
    branch; a slope bounded away from zero certifies that M -> infinity
    forces energy -> infinity (the contrapositive of the a-priori bound).
    """
    if branch.spec.beta != 0.0:
        raise ValueError("divergence check applies to subcritical members")
    M, E = branch.M, branch.energies
    half = len(M) // 2
    if len(M) - half < 3:
        raise ValueError("branch too short for a slope fit")
    slope = float(np.polyfit(np.log(M[half:]), np.log(E[half:]), 1)[0])
    return DivergenceReport(slope, E, M, slope >= min_slope)
