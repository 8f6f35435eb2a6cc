# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled spectrahedron projection (hot kernel).

Same algorithm as _spectra_py.project_unit_diag_psd: semismooth Newton on
the dual of the semidefinite least-squares problem, with the Hermitian
eigendecomposition done by LAPACK zheevd in-place and the generalized
Hessian assembled from divided differences of the eigenvalue clip. The
Newton system is solved with dgesv; the whole iteration avoids temporary
Python objects.
"""

import numpy as np

cimport cython
from libc.math cimport sqrt, fabs
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zheevd, dgesv


cdef inline double _dual_eval(double complex[:, ::1] x, double[::1] yv,
                              double complex[:, ::1] s, double[::1] w,
                              double[::1] grad,
                              double complex* work, int lwork,
                              double* rwork, int lrwork,
                              int* iwork, int liwork,
                              int ln, double* sq_out, int* info) nogil:
    """Dual value at shift yv; fills eigen data (s rows, w) and grad."""
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t n = <Py_ssize_t> ln
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    cdef double sq = 0.0, acc, re, im, fval
    for i in range(n):
        for j in range(n):
            s[i, j] = x[i, j]
        s[i, i] = x[i, i] + yv[i]
    zheevd(&jobz, &uplo, &ln, &s[0, 0], &ln, &w[0], work, &lwork,
           rwork, &lrwork, iwork, &liwork, info)
    if info[0] != 0:
        sq_out[0] = 0.0
        return 0.0
    # buffer rows now hold conj(eigenvectors); |entry| is unchanged, so
    # the gradient needs only squared magnitudes of the rows
    for k in range(n):
        if w[k] > 0.0:
            sq += w[k] * w[k]
    fval = 0.5 * sq
    for i in range(n):
        fval -= yv[i]
        acc = -1.0
        for k in range(n):
            if w[k] > 0.0:
                re = s[k, i].real
                im = s[k, i].imag
                acc += w[k] * (re * re + im * im)
        grad[i] = acc
    sq_out[0] = sq
    return fval


cdef inline double _nrm2(double[::1] g, Py_ssize_t n) nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += g[i] * g[i]
    return sqrt(acc)


def project_unit_diag_psd(phi, double tol=1e-9, int max_iter=500):
    """Project a Hermitian matrix onto {X PSD, diag(X) == 1}.

    Returns (x, iterations, residual); see the fallback docstring for the
    exact contract.
    """
    a = np.asarray(phi, dtype=np.complex128)
    cdef Py_ssize_t n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("matrix must be square")

    x_arr = np.ascontiguousarray(0.5 * (a + a.conj().T))
    s_arr = np.empty((n, n), dtype=np.complex128)
    out_arr = np.zeros((n, n), dtype=np.complex128)
    hess_arr = np.empty((n, n), dtype=np.float64)
    w_arr = np.empty(n, dtype=np.float64)
    y_arr = np.zeros(n, dtype=np.float64)
    yn_arr = np.empty(n, dtype=np.float64)
    g_arr = np.empty(n, dtype=np.float64)
    gn_arr = np.empty(n, dtype=np.float64)
    d_arr = np.empty(n, dtype=np.float64)
    cr_arr = np.empty(n, dtype=np.float64)
    ci_arr = np.empty(n, dtype=np.float64)
    ipiv_arr = np.empty(n, dtype=np.int32)

    cdef double complex[:, ::1] x = x_arr
    cdef double complex[:, ::1] s = s_arr
    cdef double complex[:, ::1] outm = out_arr
    cdef double[:, ::1] hess = hess_arr
    cdef double[::1] w = w_arr
    cdef double[::1] y = y_arr
    cdef double[::1] yn = yn_arr
    cdef double[::1] g = g_arr
    cdef double[::1] gn = gn_arr
    cdef double[::1] d = d_arr
    cdef double[::1] cr = cr_arr
    cdef double[::1] ci = ci_arr
    cdef int[::1] ipiv = ipiv_arr

    # zheevd workspace query
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    cdef int info = 0, ln = <int> n
    cdef int lwork = -1, lrwork = -1, liwork = -1
    cdef double complex wk_q
    cdef double rwk_q
    cdef int iwk_q
    zheevd(&jobz, &uplo, &ln, &s[0, 0], &ln, &w[0], &wk_q, &lwork,
           &rwk_q, &lrwork, &iwk_q, &liwork, &info)
    if info != 0:
        raise RuntimeError(f"zheevd workspace query failed (info={info})")
    lwork = <int> wk_q.real
    lrwork = <int> rwk_q
    liwork = iwk_q
    work_arr = np.empty(lwork, dtype=np.complex128)
    rwork_arr = np.empty(lrwork, dtype=np.float64)
    iwork_arr = np.empty(liwork, dtype=np.int32)
    cdef double complex[::1] work = work_arr
    cdef double[::1] rwork = rwork_arr
    cdef int[::1] iwork = iwork_arr

    cdef Py_ssize_t i, j, k, l, it = 0
    cdef int nrhs = 1, sinfo = 0, k0, mpos, accepted
    cdef double fval, f_new, sq = 0.0, resid, scale, norm_x
    cdef double wmax, tiny, denom, num, om, wgt, wck, wcl, a1, b1
    cdef double ridge, tr, slope, step, gnorm, lam, re, im, dacc
    cdef double complex cv
    cdef char opn = b'N'
    cdef char opc = b'C'
    cdef double complex cone = 1.0
    cdef double complex czero = 0.0

    with nogil:
        norm_x = 0.0
        for i in range(n):
            for j in range(n):
                re = x[i, j].real
                im = x[i, j].imag
                norm_x += re * re + im * im
        norm_x = sqrt(norm_x)

        fval = _dual_eval(x, y, s, w, g, &work[0], lwork, &rwork[0], lrwork,
                          &iwork[0], liwork, ln, &sq, &info)
        while info == 0:
            resid = _nrm2(g, n)
            scale = sqrt(sq)
            if norm_x < scale:
                scale = norm_x
            if scale < 1.0:
                scale = 1.0
            if resid <= tol * scale or it == max_iter:
                break

            # generalized Hessian from the clip's divided differences
            for i in range(n):
                for j in range(n):
                    hess[i, j] = 0.0
            wmax = 0.0
            for k in range(n):
                if fabs(w[k]) > wmax:
                    wmax = fabs(w[k])
            tiny = 1e-13 * (1.0 if wmax < 1.0 else wmax)
            for k in range(n):
                wck = w[k] if w[k] > 0.0 else 0.0
                for l in range(k + 1):
                    wcl = w[l] if w[l] > 0.0 else 0.0
                    denom = w[k] - w[l]
                    num = wck - wcl
                    if fabs(denom) > tiny:
                        om = num / denom
                    else:
                        om = 0.5 * ((1.0 if w[k] > 0.0 else 0.0)
                                    + (1.0 if w[l] > 0.0 else 0.0))
                    if om == 0.0:
                        continue
                    wgt = om if l == k else 2.0 * om
                    for i in range(n):
                        cv = s[k, i].conjugate() * s[l, i]
                        cr[i] = cv.real
                        ci[i] = cv.imag
                    for j in range(n):
                        a1 = wgt * cr[j]
                        b1 = wgt * ci[j]
                        for i in range(n):
                            hess[j, i] += a1 * cr[i] + b1 * ci[i]
            tr = 0.0
            for i in range(n):
                tr += hess[i, i]
            tr = tr / n
            ridge = 1e-12 * (1.0 if tr < 1.0 else tr)
            for i in range(n):
                hess[i, i] += ridge
                d[i] = -g[i]
            # hess is symmetric, so the column-major view dgesv sees is
            # the same matrix
            dgesv(&ln, &nrhs, &hess[0, 0], &ln, &ipiv[0], &d[0], &ln, &sinfo)
            if sinfo != 0:
                for i in range(n):
                    d[i] = -g[i]
            slope = 0.0
            for i in range(n):
                slope += g[i] * d[i]
            if slope >= 0.0:
                for i in range(n):
                    d[i] = -g[i]
                slope = -resid * resid

            step = 1.0
            accepted = 0
            while step >= 1e-20:
                for i in range(n):
                    yn[i] = y[i] + step * d[i]
                f_new = _dual_eval(x, yn, s, w, gn, &work[0], lwork,
                                   &rwork[0], lrwork, &iwork[0], liwork,
                                   ln, &sq, &info)
                if info != 0:
                    break
                # near the optimum the f decrease sinks below round-off,
                # so a strict residual decrease also accepts
                gnorm = _nrm2(gn, n)
                if (f_new <= fval + 1e-4 * step * slope
                        or gnorm <= (1.0 - 1e-4) * resid):
                    accepted = 1
                    break
                step *= 0.5
            if info != 0:
                break
            if accepted == 0:
                # restore the spectra of the last accepted point
                fval = _dual_eval(x, y, s, w, g, &work[0], lwork, &rwork[0],
                                  lrwork, &iwork[0], liwork, ln, &sq, &info)
                break
            for i in range(n):
                y[i] = yn[i]
                g[i] = gn[i]
            fval = f_new
            it += 1

        if info == 0:
            # reconstruct from positive eigenvalues: rows k >= k0 scaled by
            # sqrt(w_k) give the projection as one rank-mpos BLAS product
            k0 = ln
            for k in range(n):
                if w[k] > 0.0:
                    k0 = <int> k
                    break
            mpos = ln - k0
            if mpos > 0:
                for k in range(k0, n):
                    lam = sqrt(w[k])
                    for j in range(n):
                        s[k, j] = lam * s[k, j]
                zgemm(&opn, &opc, &ln, &ln, &mpos, &cone, &s[k0, 0], &ln,
                      &s[k0, 0], &ln, &czero, &outm[0, 0], &ln)
            resid = 0.0
            for i in range(n):
                dacc = outm[i, i].real - 1.0
                resid += dacc * dacc
                outm[i, i] = 1.0
            resid = sqrt(resid)

    if info != 0:
        raise RuntimeError(f"zheevd failed (info={info})")
    return out_arr, int(it), resid
