"""Pure-numpy spectrahedron projection (fallback backend).

Semismooth Newton on the dual of the semidefinite least-squares problem:
the nearest unit-diagonal PSD matrix to A is P_+(A + Diag(y*)) where y*
minimizes the smooth convex dual

    f(y) = 0.5 * ||P_+(A + Diag(y))||_F^2 - sum(y),

whose gradient is diag(P_+(A + Diag(y))) - 1. A generalized Hessian is
assembled from the eigendecomposition's divided-difference matrix, giving
quadratic convergence even when the optimal matrix is singular; Armijo
backtracking on f globalizes it. Each iteration costs one Hermitian
eigendecomposition plus one small positive-definite solve. Semantics match
the compiled backend; tests cross-check both.
"""

from __future__ import annotations

import numpy as np

_ARMIJO_C = 1e-4


def _dual_eval(x: np.ndarray, y: np.ndarray):
    """Dual value/gradient at shift y plus the spectral decomposition."""
    s = x.copy()
    idx = np.arange(x.shape[0])
    s[idx, idx] = s[idx, idx] + y
    w, v = np.linalg.eigh(s)
    wc = np.maximum(w, 0.0)
    sq = float(wc @ wc)
    fval = 0.5 * sq - float(np.sum(y))
    grad = (np.abs(v) ** 2) @ wc - 1.0
    return fval, grad, w, v, wc, sq


def _generalized_hessian(w: np.ndarray, v: np.ndarray,
                         wc: np.ndarray) -> np.ndarray:
    """One element of the generalized Hessian of the dual at (w, v).

    Omega holds the divided differences of the eigenvalue clip; rows of
    E are the omega-weighted outer products of the eigenvector rows, so
    the Hessian is the real Gram matrix E E^H.
    """
    n = w.shape[0]
    denom = w[:, None] - w[None, :]
    num = wc[:, None] - wc[None, :]
    tiny = 1e-13 * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    active = (w > 0.0).astype(float)
    flat = 0.5 * (active[:, None] + active[None, :])  # tie fallback
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = np.where(np.abs(denom) > tiny, num / denom, flat)
    e = (v[:, :, None] * v.conj()[:, None, :]) * np.sqrt(omega)[None, :, :]
    e = e.reshape(n, n * n)
    return (e @ e.conj().T).real


def project_unit_diag_psd(phi: np.ndarray, tol: float = 1e-9,
                          max_iter: int = 500):
    """Project a Hermitian matrix onto {X PSD, diag(X) == 1}.

    Returns (x, iterations, residual). The result has an exact unit
    diagonal; its minimum eigenvalue is bounded below by -residual, where
    residual is the Frobenius distance between the optimal PSD matrix and
    the returned unit-diagonal matrix (the dual gradient norm, driven to
    tol relative to max(1, ||x||)).
    """
    x = 0.5 * (phi + phi.conj().T)
    n = x.shape[0]
    norm_x = float(np.linalg.norm(x))
    y = np.zeros(n)
    fval, grad, w, v, wc, sq = _dual_eval(x, y)
    it = 0
    for it in range(max_iter + 1):
        resid = float(np.linalg.norm(grad))
        scale = max(1.0, min(norm_x, np.sqrt(sq)))
        if resid <= tol * scale or it == max_iter:
            break
        hess = _generalized_hessian(w, v, wc)
        ridge = 1e-12 * max(1.0, float(np.trace(hess)) / n)
        try:
            d = -np.linalg.solve(hess + ridge * np.eye(n), grad)
        except np.linalg.LinAlgError:
            d = -grad
        slope = float(grad @ d)
        if slope >= 0.0:
            d = -grad
            slope = -resid * resid
        step = 1.0
        accepted = False
        while step >= 1e-20:
            y_new = y + step * d
            f_new, g_new, w, v, wc, sq = _dual_eval(x, y_new)
            # near the optimum the f decrease sinks below round-off, so a
            # strict residual decrease also accepts (local Newton phase)
            if (f_new <= fval + _ARMIJO_C * step * slope
                    or float(np.linalg.norm(g_new)) <= (1.0 - 1e-4) * resid):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # restore the spectra of the current (last accepted) point
            fval, grad, w, v, wc, sq = _dual_eval(x, y)
            break
        y, fval, grad = y_new, f_new, g_new
    out = (v * wc[None, :]) @ v.conj().T
    idx = np.arange(n)
    resid = float(np.linalg.norm(out[idx, idx].real - 1.0))
    out[idx, idx] = 1.0
    return out, it, resid
