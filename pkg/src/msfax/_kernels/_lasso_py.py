"""Pure NumPy fallback for the coordinate-descent kernel.

Mirrors the compiled version exactly: same update order, same soft
threshold, same stopping rule, so either backend yields the same solution
up to floating-point rounding.
"""

import numpy as np


def lasso_cd_gram(gram, b, lam, beta, max_iter=1000, tol=1e-10):
    """Coordinate descent for 0.5 b'Gb - b'beta + lam * |beta|_1, in place.

    gram must be symmetric with strictly positive diagonal. beta is the
    warm start and is overwritten with the solution. Returns the number of
    full sweeps performed. A sweep where no coordinate moves more than
    tol * max(1, max|beta|) terminates the loop.
    """
    m = b.shape[0]
    grad = gram @ beta
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
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
                grad += gram[:, q] * (new - old)
            change = abs(new - old)
            if change > max_change:
                max_change = change
            if abs(new) > max_abs:
                max_abs = abs(new)
        if max_change <= tol * max(max_abs, 1.0):
            break
    return n_iter
