"""Constrained ECM estimation of the multi-study factor model.

Shared loadings Phi, study loadings Lambda_s, and diagonal noise psi_s are
estimated by expectation-conditional-maximization. Stacking the shared and
specific factors z = (f, l) with joint loading Omega_s = [Phi, Lambda_s]
gives the standard Gaussian conditioning identities

    E[z | x]   = Omega_s' Sigma_s^-1 x
    Var[z | x] = I - Omega_s' Sigma_s^-1 Omega_s

from which per-study sufficient statistics are accumulated using the
sample covariance only, so the per-iteration cost does not grow with n.
Each conditional maximization is a row-wise least-squares problem
restricted to the free entries of the block-lower-triangular loadings;
noise variances update from the expected residual second moments. Every
CM step maximizes the same minorant, so the observed log-likelihood is
nondecreasing along the iteration.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg

from . import config
from .core import (
    InfeasibleFactorsError,
    MsfaxModel,
    MultiStudyDataset,
    constrain_loadings,
    validate_identifiability,
)

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclasses.dataclass(frozen=True)
class EcmOptions:
    """Knobs of the ECM solver."""

    max_iter: int = 2000
    rel_tol: float = 1e-6
    n_starts: int = 3
    ridge: float = config.DEFAULT_RIDGE
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.n_starts < 1:
            raise ValueError("n_starts must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


@dataclasses.dataclass
class EcmFit:
    """Result of one multi-start ECM run (best start by final log-likelihood)."""

    model: MsfaxModel
    loglik: float
    loglik_trace: np.ndarray
    n_iter: int
    converged: bool
    best_start: int


# ===========================================================================
# likelihood and posterior moments
# ===========================================================================

def _study_cov_terms(phi, lam, psi, ridge):
    omega = np.hstack([phi, lam])
    sigma = omega @ omega.T + np.diag(psi)
    if ridge:
        sigma = sigma + ridge * np.eye(sigma.shape[0])
    return omega, sigma


def observed_loglik(phi, lambdas, psi, data: MultiStudyDataset) -> float:
    """Gaussian log-likelihood of centered data under (phi, lambdas, psi)."""
    phi = np.asarray(phi, dtype=float)
    total = 0.0
    for s, x in enumerate(data.studies):
        n, p = x.shape
        omega, sigma = _study_cov_terms(phi, np.asarray(lambdas[s], float),
                                        np.asarray(psi[s], float), 0.0)
        cov = x.T @ x / n
        c, low = scipy.linalg.cho_factor(sigma, lower=True)
        logdet = 2.0 * float(np.log(np.diag(c)).sum())
        trace = float(np.trace(scipy.linalg.cho_solve((c, low), cov)))
        total += -0.5 * n * (p * _LOG_2PI + logdet + trace)
    return total


def conditional_factor_moments(phi, lam, psi, x):
    """Posterior mean and covariance of the stacked factors given data rows.

    x may be a single observation (p,) or a batch (n, p); the mean follows
    the batch shape with m = k + j columns and the covariance is m x m.
    """
    phi = np.asarray(phi, float)
    lam = np.asarray(lam, float)
    psi = np.asarray(psi, float)
    omega, sigma = _study_cov_terms(phi, lam, psi, 0.0)
    c, low = scipy.linalg.cho_factor(sigma, lower=True)
    a = scipy.linalg.cho_solve((c, low), omega)          # Sigma^-1 Omega
    var = np.eye(omega.shape[1]) - omega.T @ a
    var = 0.5 * (var + var.T)
    mean = np.atleast_2d(x) @ a
    if np.ndim(x) == 1:
        mean = mean[0]
    return mean, var


def _estep(omega, sigma, cov, n, m):
    """Sufficient statistics summed over one study's observations."""
    c, low = scipy.linalg.cho_factor(sigma, lower=True)
    a = scipy.linalg.cho_solve((c, low), omega)          # p x m
    var = np.eye(m) - omega.T @ a
    cxz = n * (cov @ a)                                  # sum_i x_i E[z_i]'
    czz = n * (var + a.T @ cov @ a)                      # sum_i E[z_i z_i']
    czz = 0.5 * (czz + czz.T)
    logdet = 2.0 * float(np.log(np.diag(c)).sum())
    trace = float(np.trace(scipy.linalg.cho_solve((c, low), cov)))
    loglik = -0.5 * n * (omega.shape[0] * _LOG_2PI + logdet + trace)
    return czz, cxz, loglik


# ===========================================================================
# conditional maximization steps
# ===========================================================================

def _solve_rows(gram, rhs, ridge):
    """Row-wise least squares honoring the triangular constraint.

    gram is (p, m, m), rhs is (p, m); row i < m - 1 only uses its first
    i + 1 columns, the rest are structural zeros. Returns the (p, m)
    solution.
    """
    p, m = rhs.shape
    eye = ridge * np.eye(m)
    out = np.linalg.solve(gram + eye, rhs[..., None])[..., 0]
    for i in range(min(m - 1, p)):
        nf = i + 1
        out[i] = 0.0
        out[i, :nf] = np.linalg.solve(gram[i, :nf, :nf] + eye[:nf, :nf], rhs[i, :nf])
    return out


def _cm_cycle(phi, lambdas, psis, covs, sizes, ridge):
    """One ECM cycle: E-step stats, then Phi, each Lambda_s, each psi_s."""
    S = len(lambdas)
    k = phi.shape[1]
    p = phi.shape[0]

    stats = []
    loglik = 0.0
    for s in range(S):
        omega, sigma = _study_cov_terms(phi, lambdas[s], psis[s], 0.0)
        czz, cxz, ll = _estep(omega, sigma, covs[s], sizes[s], k + lambdas[s].shape[1])
        stats.append((czz, cxz))
        loglik += ll

    # ---- shared loadings: pool row-wise normal equations over studies ----
    gram = np.zeros((p, k, k))
    rhs = np.zeros((p, k))
    for s in range(S):
        czz, cxz = stats[s]
        cff = czz[:k, :k]
        cfl = czz[:k, k:]
        w = 1.0 / psis[s]
        gram += cff[None, :, :] * w[:, None, None]
        rhs += (cxz[:, :k] - lambdas[s] @ cfl.T) * w[:, None]
    phi_new = _solve_rows(gram, rhs, ridge)

    # ---- study loadings, given the updated Phi ----
    lambdas_new = []
    for s in range(S):
        czz, cxz = stats[s]
        cll = czz[k:, k:]
        cfl = czz[:k, k:]
        w = 1.0 / psis[s]
        gram_s = cll[None, :, :] * w[:, None, None]
        rhs_s = (cxz[:, k:] - phi_new @ cfl) * w[:, None]
        lambdas_new.append(_solve_rows(gram_s, rhs_s, ridge))

    # ---- noise variances from expected residual second moments ----
    psis_new = []
    for s in range(S):
        czz, cxz = stats[s]
        n = sizes[s]
        omega = np.hstack([phi_new, lambdas_new[s]])
        term2 = (omega * cxz).sum(axis=1)
        term3 = ((omega @ czz) * omega).sum(axis=1)
        psi = np.diag(covs[s]) - (2.0 * term2 - term3) / n
        psis_new.append(np.maximum(psi, config.PSI_FLOOR))

    return phi_new, lambdas_new, psis_new, loglik


# ===========================================================================
# initialization and the multi-start driver
# ===========================================================================

def _initial_values(data, covs, k, j, rng, perturb):
    pooled = data.pooled()
    n_all, p = pooled.shape
    pooled_cov = pooled.T @ pooled / n_all
    sd = np.sqrt(np.diag(pooled_cov))
    corr = pooled_cov / np.outer(sd, sd)
    evals, evecs = np.linalg.eigh(corr)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    scale = np.sqrt(np.clip(evals[:k], 0.0, None))
    phi = sd[:, None] * evecs[:, :k] * scale[None, :]

    lambdas = []
    for s, js in enumerate(j):
        resid = covs[s] - phi @ phi.T
        ev, vec = np.linalg.eigh(0.5 * (resid + resid.T))
        idx = np.argsort(ev)[::-1][:js]
        lam = vec[:, idx] * np.sqrt(np.clip(ev[idx], 1e-4, None))[None, :]
        lambdas.append(lam)

    if perturb:
        phi = phi + rng.normal(0.0, 0.1, phi.shape)
        lambdas = [lam + rng.normal(0.0, 0.1, lam.shape) for lam in lambdas]

    phi = constrain_loadings(phi)
    lambdas = [constrain_loadings(lam) for lam in lambdas]
    psis = [np.maximum(0.5 * np.diag(c), config.PSI_FLOOR) for c in covs]
    return phi, lambdas, psis


def _canonical_signs(phi, lambdas):
    """Flip columns so the largest-magnitude entry of each is positive."""
    def fix(mat):
        out = mat.copy()
        for c in range(out.shape[1]):
            col = out[:, c]
            if col[np.argmax(np.abs(col))] < 0:
                out[:, c] = -col
        return out
    return fix(phi), [fix(lam) for lam in lambdas]


def _single_start(data, covs, k, j, opts, start):
    rng = np.random.default_rng([opts.seed, start])
    phi, lambdas, psis = _initial_values(data, covs, k, j, rng, perturb=start > 0)
    sizes = data.sizes
    trace = [observed_loglik(phi, lambdas, psis, data)]
    converged = False
    for _ in range(opts.max_iter):
        phi, lambdas, psis, _ = _cm_cycle(phi, lambdas, psis, covs, sizes, opts.ridge)
        ll = observed_loglik(phi, lambdas, psis, data)
        prev = trace[-1]
        trace.append(ll)
        if abs(ll - prev) <= opts.rel_tol * max(1.0, abs(prev)):
            converged = True
            break
    return phi, lambdas, psis, np.asarray(trace), converged


def fit_msfa(
    data: MultiStudyDataset,
    k: int,
    j: tuple[int, ...] | list[int],
    opts: EcmOptions | None = None,
) -> EcmFit:
    """Fit the multi-study factor model with fixed factor counts.

    data must be centered. Runs opts.n_starts independent starts (the
    first from a pooled-PCA initialization, the rest perturbed) and keeps
    the one with the highest final observed log-likelihood. Non-convergence
    within max_iter is reported through the converged flag, not an error.
    """
    opts = opts or EcmOptions()
    if not isinstance(data, MultiStudyDataset):
        data = MultiStudyDataset(list(data))
    if not data.is_centered():
        raise ValueError("dataset must be centered; call dataset.center() first")
    j = tuple(int(v) for v in j)
    if len(j) != data.n_studies:
        raise ValueError("j must list one factor count per study")
    report = validate_identifiability(data.p, k, j)
    if not report.feasible:
        raise InfeasibleFactorsError("; ".join(report.reasons))

    covs = [x.T @ x / x.shape[0] for x in data.studies]
    best = None
    for start in range(opts.n_starts):
        phi, lambdas, psis, trace, converged = _single_start(
            data, covs, k, j, opts, start)
        if best is None or trace[-1] > best[3][-1]:
            best = (phi, lambdas, psis, trace, converged, start)

    phi, lambdas, psis, trace, converged, start = best
    phi, lambdas = _canonical_signs(phi, lambdas)
    model = MsfaxModel(phi=phi, lambdas=list(lambdas), psi=list(psis),
                       names=data.names)
    return EcmFit(
        model=model,
        loglik=float(trace[-1]),
        loglik_trace=trace,
        n_iter=int(trace.size - 1),
        converged=converged,
        best_start=start,
    )
