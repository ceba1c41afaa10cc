"""Network post-processing: edge thresholds, hub scores, preprocessing.

These utilities support downstream analysis of estimated networks:
a Bonferroni-corrected Fisher edge-detection threshold, hub scoring via
the principal eigenvector of the absolute network, projection of
predictor values onto a loading column, and the two data-preparation
steps used for paired fasting/post measurements.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.stats import norm

from . import config
from .core import GgmNetwork


def fisher_threshold(n: int, p: int, family_alpha: float = config.DEFAULT_FAMILY_ALPHA) -> float:
    """Partial-correlation magnitude detectable at a family-wise level.

    Applies a Bonferroni correction over the p*(p-1) ordered pairs and
    inverts the Fisher z-transform at the corrected two-sided level:

        alpha = family_alpha / (p * (p - 1))
        t = tanh( z_{1-alpha} / sqrt(n - (p - 2) - 3) )

    n must exceed p + 1 so the degrees of freedom stay positive.
    """
    if p < 2:
        raise ValueError("need at least two predictors")
    if not 0 < family_alpha < 1:
        raise ValueError("family_alpha must lie in (0, 1)")
    dof = n - (p - 2) - 3
    if dof <= 0:
        raise ValueError(f"n = {n} too small for p = {p}")
    alpha = family_alpha / (p * (p - 1))
    z = norm.ppf(1.0 - alpha)
    return float(np.tanh(z / np.sqrt(dof)))


def threshold_network(network: GgmNetwork, threshold: float) -> GgmNetwork:
    """Zero all edges with magnitude at or below the threshold."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    values = np.where(np.abs(network.values) > threshold, network.values, 0.0)
    np.fill_diagonal(values, 0.0)
    return GgmNetwork(values, names=network.names, is_difference=network.is_difference)


def hub_scores(network: GgmNetwork) -> np.ndarray:
    """Node hubness from the principal eigenvector of |partial correlation|.

    The eigenvector of the largest eigenvalue of the absolute weighted
    adjacency is taken entrywise nonnegative and normalized so its
    maximum is 1. An empty network returns all zeros.
    """
    a = np.abs(network.values)
    if a.max() == 0.0:
        return np.zeros(network.p)
    w, v = np.linalg.eigh(a)
    vec = v[:, -1]
    # Perron vector of a nonnegative matrix; fix the sign and clear
    # rounding noise on nodes outside the dominant component
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    vec = np.clip(vec, 0.0, None)
    return vec / vec.max()


def project_onto_factor(values: np.ndarray, loading: np.ndarray) -> float:
    """Inner product of a predictor vector with a unit-scaled loading column.

    Returns sum_q loading_q * values_q / sqrt(sum_q loading_q^2).
    """
    values = np.asarray(values, dtype=float)
    loading = np.asarray(loading, dtype=float)
    if values.shape != loading.shape or values.ndim != 1:
        raise ValueError("values and loading must be vectors of equal length")
    norm2 = float(loading @ loading)
    if norm2 == 0.0:
        raise ValueError("cannot project onto an all-zero loading")
    return float(loading @ values / np.sqrt(norm2))


@dataclasses.dataclass
class PreprocessResult:
    """Log-ratio matrix plus bookkeeping from imputation."""

    values: np.ndarray
    n_imputed_fasting: int
    n_imputed_post: int


def log_ratio_preprocess(
    fasting: np.ndarray,
    post: np.ndarray,
    missing: np.ndarray | None = None,
    max_missing_fraction: float = 0.5,
) -> PreprocessResult:
    """Column-centered log2 ratios of paired post/fasting measurements.

    Missing entries (given by the mask, plus any NaNs) are imputed as half
    the column minimum over detected entries, separately per matrix.
    Columns missing more than max_missing_fraction of their entries are
    rejected. Measured values must be strictly positive.
    """
    fasting = np.array(fasting, dtype=float)
    post = np.array(post, dtype=float)
    if fasting.shape != post.shape or fasting.ndim != 2:
        raise ValueError("fasting and post must be matrices of equal shape")
    if missing is None:
        missing = np.zeros(fasting.shape, dtype=bool)
    missing = np.asarray(missing, dtype=bool) | np.isnan(fasting) | np.isnan(post)
    if missing.shape != fasting.shape:
        raise ValueError("missing mask must match the data shape")

    frac = missing.mean(axis=0)
    bad = np.nonzero(frac > max_missing_fraction)[0]
    if bad.size:
        raise ValueError(f"columns {bad.tolist()} exceed the missingness limit")

    counts = []
    for mat in (fasting, post):
        observed = np.where(missing, np.nan, mat)
        if np.nanmin(observed) <= 0:
            raise ValueError("measured values must be strictly positive")
        col_min = np.nanmin(observed, axis=0)
        fill = np.broadcast_to(0.5 * col_min, mat.shape)
        counts.append(int(missing.sum()))
        mat[missing] = fill[missing]

    ratio = np.log2(post / fasting)
    ratio = ratio - ratio.mean(axis=0, keepdims=True)
    return PreprocessResult(ratio, counts[0], counts[1])


def covariate_residualize(values: np.ndarray, covariates: np.ndarray) -> np.ndarray:
    """Residuals of each column after least squares on covariates plus intercept.

    The returned matrix has mean-zero columns orthogonal to every
    covariate column.
    """
    values = np.asarray(values, dtype=float)
    covariates = np.asarray(covariates, dtype=float)
    if values.ndim != 2 or covariates.ndim != 2:
        raise ValueError("values and covariates must be matrices")
    if values.shape[0] != covariates.shape[0]:
        raise ValueError("values and covariates must have the same rows")
    design = np.column_stack([np.ones(values.shape[0]), covariates])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    resid = values - design @ coef
    return resid - resid.mean(axis=0, keepdims=True)
