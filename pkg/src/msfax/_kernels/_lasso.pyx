# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled coordinate-descent kernel.

Semantics match _lasso_py.lasso_cd_gram exactly; see that module for the
contract.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def lasso_cd_gram(double[:, ::1] gram, double[::1] b, double lam,
                  double[::1] beta, int max_iter=1000, double tol=1e-10):
    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t q, r
    cdef int n_iter = 0, it
    cdef double g_qq, old, rho, new, change, max_change, max_abs, delta, floor_

    grad_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    for q in range(m):
        rho = 0.0
        for r in range(m):
            rho += gram[q, r] * beta[r]
        grad[q] = rho

    for it in range(1, max_iter + 1):
        n_iter = it
        max_change = 0.0
        max_abs = 0.0
        for q in range(m):
            g_qq = gram[q, q]
            old = beta[q]
            rho = b[q] - grad[q] + g_qq * old
            if rho > lam:
                new = (rho - lam) / g_qq
            elif rho < -lam:
                new = (rho + lam) / g_qq
            else:
                new = 0.0
            if new != old:
                beta[q] = new
                delta = new - old
                for r in range(m):
                    grad[r] += gram[r, q] * delta
            change = new - old
            if change < 0.0:
                change = -change
            if change > max_change:
                max_change = change
            change = new if new >= 0.0 else -new
            if change > max_abs:
                max_abs = change
        floor_ = max_abs if max_abs > 1.0 else 1.0
        if max_change <= tol * floor_:
            break
    return n_iter
