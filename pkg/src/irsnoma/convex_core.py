"""In-tree first-order solvers for the two subproblem geometries.

solve_polytope maximizes a smooth concave objective over {x >= 0, A x <= b}
by projected gradient ascent with Armijo backtracking; the projection is
cyclic Dykstra over the orthant and the half-spaces, and feasibility is
certified by a phase-1 projection probe. solve_spectrahedron does the same
over {Phi PSD, diag(Phi) = 1} using the projection kernel. Both guarantee a
non-decreasing objective along iterates and report a scaled first-order
stationarity residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._kernels import project_unit_diag_psd
from .config import SolverSettings

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


class InfeasiblePolytope(RuntimeError):
    """The constraint set is (numerically) empty.

    rows holds the indices of the violated inequality rows at the best
    point found (row -1 stands for the x >= 0 bound); residual is the
    remaining worst violation.
    """

    def __init__(self, rows, residual: float):
        self.rows = tuple(rows)
        self.residual = float(residual)
        super().__init__(
            f"no feasible point found; violated rows {self.rows} "
            f"(residual {self.residual:.3e})")


@dataclass(frozen=True)
class PolytopeProblem:
    """Concave maximization over {x >= 0, a_ub x <= b_ub}.

    objective(x) returns (value, gradient) and must be concave and smooth
    on the feasible set.
    """

    objective: Objective
    a_ub: np.ndarray
    b_ub: np.ndarray

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.a_ub, dtype=float))
        b = np.atleast_1d(np.asarray(self.b_ub, dtype=float))
        if a.shape[0] != b.shape[0]:
            raise ValueError("a_ub and b_ub row counts differ")
        object.__setattr__(self, "a_ub", a)
        object.__setattr__(self, "b_ub", b)

    @property
    def dim(self) -> int:
        return self.a_ub.shape[1]


@dataclass(frozen=True)
class SpectrahedronProblem:
    """Concave maximization over {Phi PSD Hermitian, diag(Phi) = 1}.

    objective(phi) returns (value, gradient); the gradient is Hermitian and
    taken with respect to the real inner product Re tr(G^H Phi).
    """

    objective: Objective
    dim: int


@dataclass
class SolveResult:
    x: np.ndarray
    value: float
    trace: list[float] = field(default_factory=list)
    kkt_residual: float = np.inf
    converged: bool = False
    iterations: int = 0


# ---------------------------------------------------------------------------
# Polytope geometry

def project_polytope(x0: np.ndarray, a_ub: np.ndarray, b_ub: np.ndarray,
                     tol: float = 1e-12, max_iter: int = 2000) -> np.ndarray:
    """Euclidean projection onto {x >= 0, a_ub x <= b_ub}.

    Cyclic Dykstra over the orthant and each half-space (each has a
    closed-form projection). Does not certify feasibility; callers check
    violations on the result.
    """
    k, n = a_ub.shape
    row_sq = np.einsum("ij,ij->i", a_ub, a_ub)
    x = np.asarray(x0, dtype=float).copy()
    corr = np.zeros((k + 1, n))
    scale = max(1.0, float(np.linalg.norm(x)))
    for _ in range(max_iter):
        x_prev = x.copy()
        y = x + corr[0]
        x = np.maximum(y, 0.0)
        corr[0] = y - x
        for i in range(k):
            y = x + corr[i + 1]
            viol = float(a_ub[i] @ y) - b_ub[i]
            if viol > 0.0 and row_sq[i] > 0.0:
                x = y - (viol / row_sq[i]) * a_ub[i]
            else:
                x = y
            corr[i + 1] = y - x
        if np.linalg.norm(x - x_prev) <= tol * scale:
            break
    return x


def _violations(x: np.ndarray, a_ub: np.ndarray,
                b_ub: np.ndarray) -> tuple[list[int], float]:
    rows = []
    worst = 0.0
    neg = float(np.min(x, initial=0.0))
    if neg < 0.0:
        rows.append(-1)
        worst = -neg
    slack = a_ub @ x - b_ub
    for i, s in enumerate(slack):
        if s > 0.0:
            rows.append(i)
            worst = max(worst, float(s))
    return rows, worst


def feasible_point(prob: PolytopeProblem, x0: np.ndarray | None = None,
                   tol: float = 1e-9) -> np.ndarray:
    """Phase-1: produce a feasible point or raise InfeasiblePolytope."""
    n = prob.dim
    start = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    x = project_polytope(start, prob.a_ub, prob.b_ub)
    rows, worst = _violations(x, prob.a_ub, prob.b_ub)
    scale = max(1.0, float(np.max(np.abs(prob.b_ub), initial=1.0)))
    if worst > tol * scale:
        raise InfeasiblePolytope(rows, worst)
    return np.maximum(x, 0.0)


def solve_polytope(prob: PolytopeProblem, settings: SolverSettings,
                   x0: np.ndarray | None = None) -> SolveResult:
    """Projected gradient ascent with Armijo backtracking.

    Every iterate is feasible (within the projection tolerance); the
    objective trace is non-decreasing. Stops when the relative improvement
    drops below rel_tol and the scaled stationarity residual
    ||x - P(x + g)|| / (1 + ||g||) is at or below sdp_tol, or at the
    iteration cap (converged stays False).
    """
    x = feasible_point(prob, x0)
    val, g = prob.objective(x)
    trace = [float(val)]
    step = 1.0 / max(1.0, float(np.linalg.norm(g)))
    feas_tol = 1e-9 * max(1.0, float(np.max(np.abs(prob.b_ub), initial=1.0)))
    result = SolveResult(x=x, value=float(val), trace=trace)
    for it in range(1, settings.pgd_max_iter + 1):
        improved = False
        while True:
            xc = project_polytope(x + step * g, prob.a_ub, prob.b_ub)
            _, worst = _violations(xc, prob.a_ub, prob.b_ub)
            if worst <= feas_tol:
                d = xc - x
                gain = float(g @ d)
                vc, gc = prob.objective(xc)
                if vc >= val + settings.armijo_c * gain and vc >= val:
                    improved = True
                    break
            # candidate infeasible (projection under-converged) or no ascent
            step *= settings.armijo_shrink
            if step < 1e-18:
                break
        if not improved:
            break
        rel = (vc - val) / max(1.0, abs(val))
        x, val, g = xc, vc, gc
        trace.append(float(val))
        step = min(step * 1.6, 1e6)
        if rel < settings.rel_tol:
            resid = _polytope_residual(x, g, prob)
            if resid <= settings.sdp_tol:
                result.kkt_residual = resid
                result.converged = True
                break
    result.x = x
    result.value = float(val)
    result.iterations = len(trace) - 1
    if not np.isfinite(result.kkt_residual):
        result.kkt_residual = _polytope_residual(x, g, prob)
        result.converged = result.kkt_residual <= settings.sdp_tol
    return result


def _polytope_residual(x: np.ndarray, g: np.ndarray,
                       prob: PolytopeProblem) -> float:
    probe = project_polytope(x + g, prob.a_ub, prob.b_ub)
    return float(np.linalg.norm(x - probe) /
                 (1.0 + float(np.linalg.norm(g))))


# ---------------------------------------------------------------------------
# Spectrahedron geometry

def solve_spectrahedron(prob: SpectrahedronProblem, settings: SolverSettings,
                        phi0: np.ndarray | None = None) -> SolveResult:
    """Projected gradient ascent over the unit-diagonal PSD slice.

    Iterates stay feasible (PSD within the projection tolerance, exact unit
    diagonal); the trace is non-decreasing. Identity start unless phi0 is
    given.
    """
    n = prob.dim
    if phi0 is None:
        phi = np.eye(n, dtype=complex)
    else:
        phi, _, _ = project_unit_diag_psd(
            np.asarray(phi0, dtype=complex),
            settings.projection_tol, settings.projection_max_iter)
    val, g = prob.objective(phi)
    trace = [float(val)]
    step = 1.0 / max(1.0, _fro(g))
    result = SolveResult(x=phi, value=float(val), trace=trace)
    for it in range(1, settings.pgd_max_iter + 1):
        improved = False
        while True:
            cand, _, p_res = project_unit_diag_psd(
                phi + step * g,
                settings.projection_tol, settings.projection_max_iter)
            feas_cap = 10.0 * settings.projection_tol * max(1.0, _fro(cand))
            if p_res <= feas_cap:
                d = cand - phi
                gain = float(np.vdot(g, d).real)
                vc, gc = prob.objective(cand)
                if vc >= val + settings.armijo_c * gain and vc >= val:
                    improved = True
                    break
            # projection under-converged for this step size, or no ascent
            step *= settings.armijo_shrink
            if step < 1e-18:
                break
        if not improved:
            break
        rel = (vc - val) / max(1.0, abs(val))
        phi, val, g = cand, vc, gc
        trace.append(float(val))
        step = min(step * 1.6, 1e6)
        if rel < settings.rel_tol:
            resid = _spectra_residual(phi, g, settings)
            if resid <= settings.sdp_tol:
                result.kkt_residual = resid
                result.converged = True
                break
    result.x = phi
    result.value = float(val)
    result.iterations = len(trace) - 1
    if not np.isfinite(result.kkt_residual):
        result.kkt_residual = _spectra_residual(phi, g, settings)
        result.converged = result.kkt_residual <= settings.sdp_tol
    return result


def _fro(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def _spectra_residual(phi: np.ndarray, g: np.ndarray,
                      settings: SolverSettings) -> float:
    probe, _, _ = project_unit_diag_psd(
        phi + g, settings.projection_tol, settings.projection_max_iter)
    return _fro(phi - probe) / (1.0 + _fro(g))
