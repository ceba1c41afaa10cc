"""Noise splitting and precision/network extraction from a fitted model.

The total noise psi_s decomposes into a shared floor gamma and study
remainders eta_s = psi_s - gamma with gamma taken as half the per-predictor
minimum across studies (the center of the interval of values consistent
with every study). Shared and study-specific precision matrices then come
from inverting the corresponding covariance blocks:

    shared:   (Phi Phi' + diag(gamma))^-1
    study s:  (Lambda_s Lambda_s' + diag(eta_s))^-1
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np
import scipy.linalg

from . import config
from .core import GgmNetwork, MsfaxModel, NetworkSet, SingularCovarianceError


def split_noise(psi) -> tuple[np.ndarray, list[np.ndarray]]:
    """Split per-study noise into (gamma, [eta_1, ..., eta_S]).

    gamma[q] = 0.5 * min_s psi[s][q]; eta_s = psi_s - gamma. Each eta is
    nudged by at most one ulp so that gamma + eta reproduces psi bitwise
    whenever a representable value exists; the identity always holds to
    within one ulp of psi.
    """
    psi = np.atleast_2d(np.asarray(psi, dtype=float))
    if psi.ndim != 2:
        raise ValueError("psi must be a list of per-study noise vectors")
    if np.any(psi <= 0) or not np.all(np.isfinite(psi)):
        raise ValueError("noise variances must be positive and finite")
    gamma = 0.5 * psi.min(axis=0)
    g = np.broadcast_to(gamma, psi.shape)
    etas = psi - g
    # one-ulp repair toward bitwise gamma + eta == psi
    ok = (g + etas) == psi
    for cand in (np.nextafter(etas, -np.inf), np.nextafter(etas, np.inf)):
        hit = ~ok & ((g + cand) == psi)
        etas = np.where(hit, cand, etas)
        ok |= hit
    return gamma, [etas[s].copy() for s in range(psi.shape[0])]


def _spd_inverse(sigma: np.ndarray, ridge: float | None, what: str) -> np.ndarray:
    """Invert a symmetric positive-definite matrix via Cholesky."""
    p = sigma.shape[0]
    attempts = [0.0] if ridge is None else [ridge]
    if ridge is None:
        attempts.append(config.DEFAULT_RIDGE)
    last = None
    for i, r in enumerate(attempts):
        try:
            c, low = scipy.linalg.cho_factor(sigma + r * np.eye(p), lower=True)
        except np.linalg.LinAlgError as exc:
            last = exc
            continue
        if i > 0:
            warnings.warn(f"{what} covariance nearly singular, added ridge {r:g}")
        theta = scipy.linalg.cho_solve((c, low), np.eye(p))
        return 0.5 * (theta + theta.T)
    raise SingularCovarianceError(f"{what} covariance is singular") from last


def shared_precision(phi: np.ndarray, gamma: np.ndarray, ridge: float | None = None) -> np.ndarray:
    """Precision of the shared component, (Phi Phi' + diag(gamma))^-1."""
    phi = np.asarray(phi, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (phi.shape[0],):
        raise ValueError("gamma must have one entry per predictor")
    if np.any(gamma < 0):
        raise ValueError("gamma must be nonnegative")
    return _spd_inverse(phi @ phi.T + np.diag(gamma), ridge, "shared")


def study_precision(lam: np.ndarray, eta: np.ndarray, ridge: float | None = None) -> np.ndarray:
    """Precision of one study-specific component, (Lambda Lambda' + diag(eta))^-1."""
    lam = np.asarray(lam, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (lam.shape[0],):
        raise ValueError("eta must have one entry per predictor")
    if np.any(eta < 0):
        raise ValueError("eta must be nonnegative")
    if ridge is None and np.any(eta == 0):
        warnings.warn("eta has zero entries, adding default ridge")
        ridge = config.DEFAULT_RIDGE
    return _spd_inverse(lam @ lam.T + np.diag(eta), ridge, "study")


def partial_correlations(theta: np.ndarray) -> np.ndarray:
    """Partial correlations -theta_ij / sqrt(theta_ii * theta_jj).

    theta must be symmetric with strictly positive diagonal. The result is
    exactly symmetric with a zero diagonal, entries clipped to [-1, 1].
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ValueError("precision matrix must be square")
    if np.abs(theta - theta.T).max() > config.SYMMETRY_ATOL:
        raise ValueError("precision matrix must be symmetric")
    d = np.diag(theta)
    if np.any(d <= 0):
        raise ValueError("precision diagonal must be strictly positive")
    scale = np.sqrt(d)
    rho = -theta / np.outer(scale, scale)
    rho = 0.5 * (rho + rho.T)
    rho = np.clip(rho, -1.0, 1.0)
    np.fill_diagonal(rho, 0.0)
    return rho


@dataclasses.dataclass
class PrecisionPair:
    """Shared precision matrix plus one study precision per study."""

    shared: np.ndarray
    studies: list[np.ndarray]


def precisions_from_model(model: MsfaxModel, ridge: float | None = None) -> PrecisionPair:
    """Split the noise if needed and invert both covariance blocks."""
    model = _with_split(model)
    shared = shared_precision(model.phi, model.gamma, ridge)
    studies = [
        study_precision(lam, eta, ridge)
        for lam, eta in zip(model.lambdas, model.etas)
    ]
    return PrecisionPair(shared=shared, studies=studies)


def networks_from_fit(model: MsfaxModel, ridge: float | None = None) -> NetworkSet:
    """Shared and study-specific partial-correlation networks of a model.

    Models that already carry gamma/etas (for example simulated truth)
    keep them; otherwise the noise split is applied first.
    """
    model = _with_split(model)
    prec = precisions_from_model(model, ridge)
    shared = GgmNetwork(partial_correlations(prec.shared), names=model.names)
    specific = [
        GgmNetwork(partial_correlations(t), names=model.names)
        for t in prec.studies
    ]
    return NetworkSet(shared=shared, specific=specific, model=model)


def _with_split(model: MsfaxModel) -> MsfaxModel:
    if model.gamma is not None:
        return model
    gamma, etas = split_noise(model.psi)
    return dataclasses.replace(model, gamma=gamma, etas=etas)
