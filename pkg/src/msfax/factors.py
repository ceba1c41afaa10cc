"""Data-driven choice of shared and study-specific factor counts.

Two steps: first, a slope-comparison scree test picks the total factor
count per study from its correlation-matrix eigenvalues; second, a pilot
fit at the implied counts is decomposed to decide how many of those
factors are genuinely shared (eigenvalues of Phi Phi' explaining more
than a fixed fraction of its trace), with the remainder per study
becoming specific factors.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import config
from .core import InfeasibleFactorsError, MultiStudyDataset, validate_identifiability
from .ecm import EcmOptions, fit_msfa


def _slope3(y) -> float:
    # least-squares slope of three equally spaced points
    return (y[2] - y[0]) / 2.0


def cng_scree(eigenvalues) -> int:
    """Elbow position of a scree via paired three-point slope comparison.

    For each candidate count c the slope of the least-squares line through
    eigenvalues (c-1, c, c+1) is compared with the slope through
    (c+2, c+3, c+4); the returned count maximizes the slope difference
    (after minus before). The window preceding the comparison point is
    centered on the candidate, so the drop from position c to c+1 falls
    inside it and the candidate just before the cliff wins. Candidates
    range over [2, m - 4]; ties resolve to the smallest candidate.
    Requires at least six eigenvalues, sorted descending.
    """
    e = np.asarray(eigenvalues, dtype=float)
    if e.ndim != 1 or e.size < 6:
        raise ValueError("need at least six eigenvalues")
    if np.any(np.diff(e) > 1e-12 * max(1.0, float(np.abs(e).max()))):
        raise ValueError("eigenvalues must be sorted in descending order")
    m = e.size
    best_c = 2
    best = -np.inf
    for c in range(2, m - 3):
        before = _slope3(e[c - 2:c + 1])
        after = _slope3(e[c + 1:c + 4])
        diff = after - before
        if diff > best:
            best = diff
            best_c = c
    return best_c


@dataclasses.dataclass(frozen=True)
class FactorCountEstimate:
    """Chosen factor counts plus the evidence they were based on."""

    k: int
    j: tuple[int, ...]
    totals: tuple[int, ...]
    shared_fractions: tuple[float, ...]
    warnings: tuple[str, ...] = ()
    pilot_fit: object = dataclasses.field(default=None, repr=False, compare=False)


def correlation_eigenvalues(x: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of a study's correlation matrix."""
    x = np.asarray(x, dtype=float)
    corr = np.corrcoef(x, rowvar=False)
    vals = np.linalg.eigvalsh(corr)
    return vals[::-1]


def estimate_factor_counts(
    data: MultiStudyDataset,
    opts: EcmOptions | None = None,
) -> FactorCountEstimate:
    """Estimate (k, j_1..j_S) from the data alone.

    Per-study totals t_s come from the scree test; a pilot fit at
    k = min_s t_s with one spare specific slot per study is decomposed
    and k is cut back to the shared eigenvalues explaining more than
    config.SHARED_EIG_FRACTION of trace(Phi Phi'). The final counts always
    satisfy the identifiability conditions, otherwise this raises.
    """
    if not isinstance(data, MultiStudyDataset):
        data = MultiStudyDataset(list(data))
    warnings: list[str] = []

    totals = tuple(cng_scree(correlation_eigenvalues(x)) for x in data.studies)
    k_star = min(totals)
    # One spare specific slot per study: with j_s = t_s - k* exactly, any
    # study at the minimum total has zero slots, so its genuinely specific
    # structure is forced into the shared loadings and inflates their
    # eigenvalue fractions before the 5% cut is applied.
    j_pilot = [max(t - k_star, 1) + 1 for t in totals]

    pilot_report = validate_identifiability(data.p, k_star, j_pilot)
    if not pilot_report.feasible:
        raise InfeasibleFactorsError(
            "pilot configuration infeasible: " + "; ".join(pilot_report.reasons))
    fit = fit_msfa(data, k_star, tuple(j_pilot), opts)

    sv = np.linalg.svd(fit.model.phi, compute_uv=False)
    eig = sv ** 2
    total = float(eig.sum())
    fractions = eig / total if total > 0 else np.zeros_like(eig)
    k = int(np.sum(fractions > config.SHARED_EIG_FRACTION))
    k = min(max(k, 1), k_star)

    j_final = []
    for s, t in enumerate(totals):
        js = t - k
        if js < 1:
            warnings.append(f"study {s}: specific count clamped to 1")
            js = 1
        j_final.append(js)

    report = validate_identifiability(data.p, k, j_final)
    if not report.feasible:
        raise InfeasibleFactorsError(
            "estimated configuration infeasible: " + "; ".join(report.reasons))
    return FactorCountEstimate(
        k=k,
        j=tuple(j_final),
        totals=totals,
        shared_fractions=tuple(float(f) for f in fractions),
        warnings=tuple(warnings),
        pilot_fit=fit,
    )
