"""Shared helpers: small random models, SPD matrices, synthetic draws."""

import numpy as np

import msfax
from msfax.core import constrain_loadings


def rand_spd(rng, p):
    """Well-conditioned random SPD matrix (eigenvalues bounded below)."""
    a = rng.standard_normal((p, p))
    return a @ a.T / p + np.diag(rng.uniform(0.5, 1.5, p))


def rand_model(rng, p, k, j):
    """Random valid model with triangular loading constraints applied."""
    phi = constrain_loadings(rng.standard_normal((p, k)))
    lambdas = [constrain_loadings(rng.standard_normal((p, js))) for js in j]
    gamma = rng.uniform(0.2, 0.8, p)
    etas = [rng.uniform(0.2, 0.8, p) for _ in j]
    psi = [gamma + e for e in etas]
    return msfax.MsfaxModel(phi=phi, lambdas=lambdas, psi=psi,
                            gamma=gamma, etas=etas)


def dataset_from_model(rng, model, n):
    """Centered draws from a model, independent of the simulate module."""
    studies = []
    for s, lam in enumerate(model.lambdas):
        f = rng.standard_normal((n, model.phi.shape[1]))
        l = rng.standard_normal((n, lam.shape[1]))
        eps = rng.standard_normal((n, model.phi.shape[0]))
        x = f @ model.phi.T + l @ lam.T + eps * np.sqrt(model.psi[s])
        studies.append(x - x.mean(axis=0))
    return msfax.MultiStudyDataset(studies)
