"""First-order solvers against closed-form and grid oracles."""

import math

import numpy as np
import pytest

from irsnoma._kernels import project_unit_diag_psd
from irsnoma.config import SolverSettings
from irsnoma.convex_core import (InfeasiblePolytope, PolytopeProblem,
                                 SpectrahedronProblem, feasible_point,
                                 project_polytope, solve_polytope,
                                 solve_spectrahedron)

LN2 = math.log(2.0)


def simplex_problem(n):
    # maximize sum log(1 + x_i) subject to sum x <= 1, x >= 0
    def obj(x):
        return float(np.sum(np.log1p(x))), 1.0 / (1.0 + x)
    return PolytopeProblem(objective=obj, a_ub=np.ones((1, n)), b_ub=[1.0])


def test_symmetric_water_level(tight_settings):
    for n in (2, 4, 7):
        res = solve_polytope(simplex_problem(n), tight_settings)
        np.testing.assert_allclose(res.x, np.full(n, 1.0 / n), atol=1e-6)
        assert res.value == pytest.approx(n * math.log(1 + 1.0 / n),
                                          abs=1e-9)
        assert res.converged
        assert res.kkt_residual <= tight_settings.sdp_tol


def test_scalar_grid_oracle(tight_settings):
    # maximize log2(1+x) - 0.5 x on [0, 3]; stationary at x = 2/ln2 - 1
    def obj(x):
        return (float(math.log2(1 + x[0]) - 0.5 * x[0]),
                np.array([1.0 / ((1 + x[0]) * LN2) - 0.5]))
    prob = PolytopeProblem(objective=obj, a_ub=[[1.0]], b_ub=[3.0])
    res = solve_polytope(prob, tight_settings)
    x_star = 2.0 / LN2 - 1.0
    grid = np.linspace(0, 3, 20001)
    vals = np.log2(1 + grid) - 0.5 * grid
    assert res.x[0] == pytest.approx(x_star, abs=1e-6)
    assert res.value >= float(vals.max()) - 1e-8
    assert res.value == pytest.approx(float(vals.max()), abs=1e-8)


def test_interior_quadratic(tight_settings):
    # maximize -||x - c||^2 with c strictly inside the box
    c = np.array([0.25, 0.5])
    def obj(x):
        d = x - c
        return -float(d @ d), -2.0 * d
    prob = PolytopeProblem(objective=obj,
                           a_ub=np.eye(2), b_ub=[1.0, 1.0])
    res = solve_polytope(prob, tight_settings)
    np.testing.assert_allclose(res.x, c, atol=1e-7)
    assert res.value == pytest.approx(0.0, abs=1e-12)


def test_boundary_quadratic(tight_settings):
    # c outside the box: optimum is the projection of c
    c = np.array([2.0, 0.5])
    def obj(x):
        d = x - c
        return -float(d @ d), -2.0 * d
    prob = PolytopeProblem(objective=obj,
                           a_ub=np.eye(2), b_ub=[1.0, 1.0])
    res = solve_polytope(prob, tight_settings)
    np.testing.assert_allclose(res.x, [1.0, 0.5], atol=1e-7)


def test_monotone_trace(tight_settings):
    res = solve_polytope(simplex_problem(5), tight_settings)
    diffs = np.diff(res.trace)
    assert np.all(diffs >= -1e-12)
    assert res.iterations == len(res.trace) - 1


def test_warm_start_accepted(tight_settings):
    prob = simplex_problem(4)
    x0 = np.full(4, 0.25)
    res = solve_polytope(prob, tight_settings, x0=x0)
    assert res.value == pytest.approx(4 * math.log(1.25), abs=1e-9)
    assert res.iterations <= 5


def test_infeasible_certificate():
    def obj(x):
        return float(x[0]), np.array([1.0])
    prob = PolytopeProblem(objective=obj, a_ub=[[1.0]], b_ub=[-1.0])
    with pytest.raises(InfeasiblePolytope) as exc:
        feasible_point(prob)
    assert exc.value.rows
    assert exc.value.residual > 0.1
    with pytest.raises(InfeasiblePolytope):
        solve_polytope(prob, SolverSettings())


def test_projection_helper():
    a = np.array([[1.0, 1.0]])
    b = np.array([1.0])
    x = project_polytope(np.array([2.0, 2.0]), a, b)
    np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-9)
    assert float(a[0] @ x) <= 1.0 + 1e-9
    # feasible input is a fixed point
    inside = np.array([0.2, 0.3])
    np.testing.assert_allclose(project_polytope(inside, a, b), inside,
                               atol=1e-12)


def test_feasible_point_satisfies_constraints():
    rng = np.random.default_rng(3)
    a = np.abs(rng.standard_normal((4, 6)))
    b = rng.uniform(0.5, 2.0, 4)
    def obj(x):
        return 0.0, np.zeros(6)
    prob = PolytopeProblem(objective=obj, a_ub=a, b_ub=b)
    x = feasible_point(prob)
    assert np.all(x >= 0)
    assert np.all(a @ x <= b + 1e-8)


# ---------------------------------------------------------------------------
# spectrahedron geometry

def linear_spectra(c):
    c = np.asarray(c, dtype=complex)
    def obj(phi):
        return float(np.vdot(c, phi).real), c
    return SpectrahedronProblem(objective=obj, dim=c.shape[0])


def test_spectrahedron_dim_one(tight_settings):
    res = solve_spectrahedron(linear_spectra([[2.0]]), tight_settings)
    np.testing.assert_allclose(res.x, [[1.0]], atol=1e-10)
    assert res.value == pytest.approx(2.0, abs=1e-10)


def test_spectrahedron_offdiag_real(tight_settings):
    c = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    res = solve_spectrahedron(linear_spectra(c), tight_settings)
    assert res.value == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(res.x, np.ones((2, 2)), atol=1e-3)


def test_spectrahedron_disc_closed_form(tight_settings):
    # dim 2 with unit diagonal: Phi = [[1, z], [conj(z), 1]], |z| <= 1,
    # so max Re tr(C^H Phi) = tr(C) + 2|c12|
    c = np.array([[0.5, 0.3 - 0.4j], [0.3 + 0.4j, 1.5]])
    res = solve_spectrahedron(linear_spectra(c), tight_settings)
    assert res.value == pytest.approx(0.5 + 1.5 + 2 * 0.5, abs=1e-6)
    z = res.x[0, 1]
    assert z == pytest.approx((0.3 - 0.4j) / 0.5, abs=1e-3)


def test_spectrahedron_projection_objective(tight_settings):
    # maximize -||Phi - Z||^2 / 2: optimum is the set projection of Z
    rng = np.random.default_rng(11)
    n = 4
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    z = (a + a.conj().T) / 2
    def obj(phi):
        d = phi - z
        return -0.5 * float(np.vdot(d, d).real), z - phi
    prob = SpectrahedronProblem(objective=obj, dim=n)
    res = solve_spectrahedron(prob, tight_settings)
    direct, _, _ = project_unit_diag_psd(z.copy(), 1e-12, 3000)
    np.testing.assert_allclose(res.x, direct, atol=1e-5)


def test_spectrahedron_monotone_and_feasible(tight_settings):
    rng = np.random.default_rng(15)
    n = 6
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    c = (a + a.conj().T) / 2
    res = solve_spectrahedron(linear_spectra(c), tight_settings)
    assert np.all(np.diff(res.trace) >= -1e-12)
    np.testing.assert_allclose(np.diag(res.x).real, 1.0, atol=1e-9)
    w = np.linalg.eigvalsh(res.x)
    assert w.min() > -1e-7
    assert res.kkt_residual <= tight_settings.sdp_tol


def test_spectrahedron_warm_start(tight_settings):
    c = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    phi0 = np.ones((2, 2), dtype=complex)
    res = solve_spectrahedron(linear_spectra(c), tight_settings, phi0=phi0)
    assert res.value == pytest.approx(2.0, abs=1e-8)
    assert res.iterations <= 3
