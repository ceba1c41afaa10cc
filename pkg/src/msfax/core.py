"""Core model types, validation, and covariance assembly.

The model couples S studies measured on the same p predictors. Each study
covariance decomposes as

    Sigma_s = Phi Phi' + Lambda_s Lambda_s' + diag(psi_s)

where Phi (p x k) is shared across studies, Lambda_s (p x j_s) is specific
to study s, and psi_s splits further into a shared part gamma and a
study-specific part eta_s. Identifiability is enforced through a
block-lower-triangular constraint on every loading matrix and a free
parameter budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config


class MsfaxError(Exception):
    """Base class for errors raised by this package."""


class InfeasibleFactorsError(MsfaxError):
    """Requested factor counts violate the identifiability conditions."""


class SingularCovarianceError(MsfaxError):
    """A covariance matrix required to be invertible is singular."""


# ---------------------------------------------------------------------------
# loading-matrix constraint
# ---------------------------------------------------------------------------

def constrain_loadings(values: np.ndarray) -> np.ndarray:
    """Zero the entries above the main diagonal of the top m x m block.

    For a p x m loading matrix only entries (i, j) with j > i inside the
    first m rows are structural zeros; everything else is untouched.
    Returns a new array.
    """
    out = np.array(values, dtype=float, copy=True)
    if out.ndim != 2:
        raise ValueError("loading matrix must be two-dimensional")
    m = out.shape[1]
    for i in range(min(m, out.shape[0])):
        out[i, i + 1:] = 0.0
    return out


def constraint_violations(values: np.ndarray) -> int:
    """Number of nonzero entries sitting in constrained positions."""
    values = np.asarray(values)
    m = values.shape[1]
    count = 0
    for i in range(min(m, values.shape[0])):
        count += int(np.count_nonzero(values[i, i + 1:]))
    return count


# ---------------------------------------------------------------------------
# identifiability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentifiabilityReport:
    """Outcome of the factor-count feasibility check."""

    p: int
    k: int
    j: tuple[int, ...]
    free_params: int
    budget: int
    feasible: bool
    reasons: tuple[str, ...] = ()


def free_parameter_count(p: int, k: int, j: tuple[int, ...] | list[int]) -> int:
    """Free parameters of the constrained model.

    Counts the loadings net of the triangular constraint plus the S + 1
    noise vectors:

        p*k - k*(k-1)/2 + sum_s [p*j_s - j_s*(j_s-1)/2] + (S+1)*p
    """
    j = tuple(int(v) for v in j)
    total = p * k - k * (k - 1) // 2
    for js in j:
        total += p * js - js * (js - 1) // 2
    total += (len(j) + 1) * p
    return total


def validate_identifiability(p: int, k: int, j: tuple[int, ...] | list[int]) -> IdentifiabilityReport:
    """Check that factor counts (k, j_1..j_S) are estimable at dimension p.

    Feasibility requires positive counts, k + sum(j) <= p,
    k + sum(j) > S, and the free-parameter count within the budget
    S * p * (p + 1) / 2 provided by the study covariances.
    """
    j = tuple(int(v) for v in j)
    n_studies = len(j)
    if p < 1 or n_studies < 1:
        raise ValueError("p and the number of studies must be positive")
    reasons = []
    if k < 1:
        reasons.append("k must be at least 1")
    if any(js < 1 for js in j):
        reasons.append("every j_s must be at least 1")
    total = k + sum(j)
    if total > p:
        reasons.append(f"k + sum(j) = {total} exceeds p = {p}")
    if total <= n_studies:
        reasons.append(f"k + sum(j) = {total} must exceed S = {n_studies}")
    free = free_parameter_count(p, k, j)
    budget = n_studies * p * (p + 1) // 2
    if free > budget:
        reasons.append(f"free parameters {free} exceed budget {budget}")
    return IdentifiabilityReport(
        p=p, k=k, j=j, free_params=free, budget=budget,
        feasible=not reasons, reasons=tuple(reasons),
    )


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------

@dataclass
class MultiStudyDataset:
    """Observations from S studies over a common predictor set.

    studies holds one (n_s, p) array per study; predictor names are
    optional and shared by all studies.
    """

    studies: list[np.ndarray]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.studies = [np.asarray(x, dtype=float) for x in self.studies]
        if not self.studies:
            raise ValueError("dataset needs at least one study")
        p = self.studies[0].shape[1] if self.studies[0].ndim == 2 else -1
        for s, x in enumerate(self.studies):
            if x.ndim != 2:
                raise ValueError(f"study {s} is not a matrix")
            if x.shape[1] != p:
                raise ValueError("all studies must share the same predictors")
            if x.shape[0] < 2:
                raise ValueError(f"study {s} has fewer than two observations")
            if not np.all(np.isfinite(x)):
                raise ValueError(f"study {s} contains non-finite values")
        if self.names is not None:
            self.names = tuple(str(v) for v in self.names)
            if len(self.names) != p:
                raise ValueError("predictor names do not match p")

    @property
    def p(self) -> int:
        return self.studies[0].shape[1]

    @property
    def n_studies(self) -> int:
        return len(self.studies)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(x.shape[0] for x in self.studies)

    def center(self) -> "MultiStudyDataset":
        """Return a copy with every column of every study mean-centered."""
        return MultiStudyDataset(
            [x - x.mean(axis=0, keepdims=True) for x in self.studies],
            names=self.names,
        )

    def is_centered(self, atol: float = config.CENTERING_ATOL) -> bool:
        return all(np.abs(x.mean(axis=0)).max() <= atol for x in self.studies)

    def pooled(self) -> np.ndarray:
        """Row-concatenation of all studies."""
        return np.vstack(self.studies)

    def covariances(self) -> list[np.ndarray]:
        """Per-study sample covariances with 1/n normalization."""
        return [x.T @ x / x.shape[0] for x in (s - s.mean(0) for s in self.studies)]


# ---------------------------------------------------------------------------
# fitted model
# ---------------------------------------------------------------------------

@dataclass
class MsfaxModel:
    """Parameters of the multi-study factor model.

    gamma and etas are optional until the noise split has been applied;
    psi is always the total noise variance per study.
    """

    phi: np.ndarray
    lambdas: list[np.ndarray]
    psi: list[np.ndarray]
    gamma: np.ndarray | None = None
    etas: list[np.ndarray] | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.lambdas = [np.asarray(l, dtype=float) for l in self.lambdas]
        self.psi = [np.asarray(v, dtype=float) for v in self.psi]
        if self.gamma is not None:
            self.gamma = np.asarray(self.gamma, dtype=float)
        if self.etas is not None:
            self.etas = [np.asarray(v, dtype=float) for v in self.etas]
        if self.names is not None:
            self.names = tuple(str(v) for v in self.names)

    @property
    def p(self) -> int:
        return self.phi.shape[0]

    @property
    def k(self) -> int:
        return self.phi.shape[1]

    @property
    def j(self) -> tuple[int, ...]:
        return tuple(l.shape[1] for l in self.lambdas)

    @property
    def n_studies(self) -> int:
        return len(self.lambdas)

    def stacked_loadings(self) -> np.ndarray:
        return np.hstack([self.phi] + list(self.lambdas))

    def validate(self) -> None:
        """Raise ValueError when any model invariant is violated."""
        p, k = self.phi.shape
        if len(self.psi) != len(self.lambdas):
            raise ValueError("psi and lambdas disagree on the number of studies")
        for s, lam in enumerate(self.lambdas):
            if lam.shape[0] != p:
                raise ValueError(f"lambda_{s} row count differs from phi")
        for s, v in enumerate(self.psi):
            if v.shape != (p,):
                raise ValueError(f"psi_{s} must have one entry per predictor")
            if not np.all(v > 0):
                raise ValueError(f"psi_{s} must be strictly positive")
        if constraint_violations(self.phi):
            raise ValueError("phi violates the block-triangular constraint")
        for s, lam in enumerate(self.lambdas):
            if constraint_violations(lam):
                raise ValueError(f"lambda_{s} violates the block-triangular constraint")
        stacked = self.stacked_loadings()
        sv = np.linalg.svd(stacked, compute_uv=False)
        if sv[-1] <= config.RANK_RTOL * sv[0]:
            raise ValueError("stacked loadings are column-rank deficient")
        if (self.gamma is None) != (self.etas is None):
            raise ValueError("gamma and etas must be set together")
        if self.gamma is not None:
            if not np.all(self.gamma > 0):
                raise ValueError("gamma must be strictly positive")
            for s, eta in enumerate(self.etas):
                if np.any(eta < 0):
                    raise ValueError(f"eta_{s} must be nonnegative")
                if np.abs(self.gamma + eta - self.psi[s]).max() > config.SPLIT_IDENTITY_ATOL:
                    raise ValueError(f"gamma + eta_{s} does not reproduce psi_{s}")

    def covariance(self, study: int) -> np.ndarray:
        return covariance_from_model(self, study)


def covariance_from_model(model: MsfaxModel, study: int) -> np.ndarray:
    """Implied covariance Phi Phi' + Lambda_s Lambda_s' + diag(psi_s)."""
    if not 0 <= study < model.n_studies:
        raise ValueError(f"study index {study} out of range")
    lam = model.lambdas[study]
    sigma = model.phi @ model.phi.T + lam @ lam.T + np.diag(model.psi[study])
    return 0.5 * (sigma + sigma.T)


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------

@dataclass
class GgmNetwork:
    """A partial-correlation network over p predictors.

    values is symmetric with a zero diagonal. Entries of ordinary networks
    live in [-1, 1]; difference networks (study minus pooled) may leave
    that range and carry is_difference=True.
    """

    values: np.ndarray
    names: tuple[str, ...] | None = None
    is_difference: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("network matrix must be square")
        if np.abs(v - v.T).max() > config.SYMMETRY_ATOL:
            raise ValueError("network matrix must be symmetric")
        if np.abs(np.diag(v)).max() != 0.0:
            raise ValueError("network diagonal must be exactly zero")
        if not self.is_difference and np.abs(v).max() > 1.0 + 1e-12:
            raise ValueError("partial correlations must lie in [-1, 1]")
        if self.names is not None:
            self.names = tuple(str(v) for v in self.names)
            if len(self.names) != self.values.shape[0]:
                raise ValueError("node names do not match matrix size")

    @property
    def p(self) -> int:
        return self.values.shape[0]

    def edges(self) -> list[tuple[int, int, float]]:
        """Nonzero upper-triangle entries as (i, j, value)."""
        i, j = np.nonzero(np.triu(self.values, k=1))
        return [(int(a), int(b), float(self.values[a, b])) for a, b in zip(i, j)]


@dataclass
class NetworkSet:
    """Shared network plus one study-specific network per study."""

    shared: GgmNetwork
    specific: list[GgmNetwork]
    model: MsfaxModel | None = None
