"""Agreement metrics between estimated and true networks.

All metrics compare symmetric zero-diagonal matrices. The headline metric
is a modified RV coefficient computed on cross-product matrices with their
diagonals removed, which discards self-similarity inflation; relative
Euclidean distance and cosine similarity over the off-diagonal entries
complement it.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .core import GgmNetwork, NetworkSet


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, GgmNetwork):
        return x.values
    m = np.asarray(x, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix or GgmNetwork")
    return m


def matrix_rv(a, b) -> float:
    """Modified RV coefficient of two square matrices.

    With A~ = A A' minus its diagonal (and likewise B~), returns

        <vec(A~), vec(B~)> / sqrt(<vec(A~), vec(A~)> * <vec(B~), vec(B~)>)

    Raises ValueError when either trimmed cross-product is identically
    zero, since the coefficient is undefined there.
    """
    a = _as_matrix(a)
    b = _as_matrix(b)
    if a.shape != b.shape:
        raise ValueError("matrices must have identical shapes")
    at = a @ a.T
    bt = b @ b.T
    np.fill_diagonal(at, 0.0)
    np.fill_diagonal(bt, 0.0)
    den_a = float((at * at).sum())
    den_b = float((bt * bt).sum())
    if den_a == 0.0 or den_b == 0.0:
        raise ValueError("matrix RV undefined: trimmed cross-product is zero")
    return float((at * bt).sum() / np.sqrt(den_a * den_b))


def _strict_lower(m: np.ndarray) -> np.ndarray:
    return m[np.tril_indices_from(m, k=-1)]


def relative_euclidean(estimate, truth) -> float:
    """Relative Euclidean distance over below-diagonal entries.

    sqrt(sum_{i<j} (est_ij - true_ij)^2) / sqrt(sum_{i<j} true_ij^2).
    Raises ValueError when the truth has no nonzero off-diagonal entries.
    """
    e = _as_matrix(estimate)
    t = _as_matrix(truth)
    if e.shape != t.shape:
        raise ValueError("matrices must have identical shapes")
    et = _strict_lower(e)
    tt = _strict_lower(t)
    den = float(tt @ tt)
    if den == 0.0:
        raise ValueError("relative distance undefined: truth has no edges")
    return float(np.sqrt((et - tt) @ (et - tt)) / np.sqrt(den))


def cosine_similarity(estimate, truth) -> float:
    """Cosine of the angle between the off-diagonal entries of two matrices."""
    e = _as_matrix(estimate)
    t = _as_matrix(truth)
    if e.shape != t.shape:
        raise ValueError("matrices must have identical shapes")
    ev = _strict_lower(e)
    tv = _strict_lower(t)
    ne = float(ev @ ev)
    nt = float(tv @ tv)
    if ne == 0.0 or nt == 0.0:
        raise ValueError("cosine undefined for an all-zero matrix")
    return float(ev @ tv / np.sqrt(ne * nt))


METRICS = {
    "rv": matrix_rv,
    "relative_euclidean": relative_euclidean,
    "cosine": cosine_similarity,
}


def evaluate_networks(
    estimated: NetworkSet,
    truth: NetworkSet,
    method: str,
    setting: str = "",
    replicate: int = 0,
) -> list[dict]:
    """Score every network of a set against the truth.

    Returns one record per (target, metric) with target names "shared",
    "study1", ..., "studyS". Metrics that are undefined for a pair (for
    example an all-zero estimate) are recorded as NaN.
    """
    if len(estimated.specific) != len(truth.specific):
        raise ValueError("estimate and truth disagree on the number of studies")
    pairs = [("shared", estimated.shared, truth.shared)]
    pairs += [
        (f"study{s + 1}", est, tru)
        for s, (est, tru) in enumerate(zip(estimated.specific, truth.specific))
    ]
    records = []
    for target, est, tru in pairs:
        for name, fn in METRICS.items():
            try:
                value = fn(est, tru)
            except ValueError:
                value = float("nan")
            records.append({
                "method": method,
                "setting": setting,
                "replicate": replicate,
                "target": target,
                "metric": name,
                "value": value,
            })
    return records


def summarize(records) -> pd.DataFrame:
    """Median and 2.5/97.5 percentiles per (method, setting, target, metric)."""
    frame = pd.DataFrame(records)
    if frame.empty:
        return pd.DataFrame(
            columns=["method", "setting", "target", "metric",
                     "median", "p2_5", "p97_5", "n_reps"])
    grouped = frame.groupby(["method", "setting", "target", "metric"])["value"]
    out = grouped.agg(
        median="median",
        p2_5=lambda v: float(np.percentile(v.dropna(), 2.5)) if v.notna().any() else float("nan"),
        p97_5=lambda v: float(np.percentile(v.dropna(), 97.5)) if v.notna().any() else float("nan"),
        n_reps="count",
    ).reset_index()
    return out
