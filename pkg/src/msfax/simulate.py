"""Synthetic multi-study data with known shared and specific networks.

Loadings are sparse sign matrices: each column carries +-1 entries on a
random support, with the block-triangular constraint applied and the
block-diagonal entry forced nonzero so the stacked loadings keep full
column rank. Entries are zero with probability 0.6 and equiprobably +-1
otherwise, so every column, shared or specific, carries comparable
energy and the per-study eigenvalue scree has an elbow at the total
factor count. Noise variances are uniform draws whose supports set the
balance between the shared floor gamma and the study remainders.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import config
from .core import MsfaxModel, MultiStudyDataset, constrain_loadings

# Every loading column draws its support at this density (entries are
# zero with probability 0.6) and keeps at least MIN_COLUMN_COUNT entries.
LOADING_DENSITY = 0.40
MIN_COLUMN_COUNT = 2

# Support of the magnitude of "not truly zero" entries.
NEAR_ZERO_RANGE = (0.01, 0.05)

NOISE_SUPPORTS = {
    "equal": ((0.1, 0.5), (0.1, 0.5)),
    "shared_dominant": ((0.5, 1.0), (0.05, 0.25)),
    "specific_dominant": ((0.05, 0.25), (0.5, 1.0)),
}

_MAX_RANK_RETRIES = 25


@dataclasses.dataclass(frozen=True)
class SimulationSetting:
    """One simulation scenario: dimensions, noise regime, zero handling."""

    name: str
    n: tuple[int, ...]
    p: int
    k: int
    j: tuple[int, ...]
    noise: str = "equal"
    exact_zeros: bool = True
    seed: int = 0

    def __post_init__(self):
        if len(self.n) != len(self.j):
            raise ValueError("n and j must list one entry per study")
        if self.noise not in NOISE_SUPPORTS:
            raise ValueError(f"unknown noise regime {self.noise!r}")
        if any(v < 2 for v in self.n):
            raise ValueError("every study needs at least two observations")

    @property
    def n_studies(self) -> int:
        return len(self.n)


def _builtin(name, n, p, k, j, noise="equal", exact_zeros=True, seed=0):
    return SimulationSetting(name=name, n=tuple(n), p=p, k=k, j=tuple(j),
                             noise=noise, exact_zeros=exact_zeros, seed=seed)


BUILTIN_SETTINGS = {
    "baseline": _builtin("baseline", (1600, 1600), 60, 2, (2, 2), seed=131),
    "few-predictors": _builtin("few-predictors", (1600, 1600), 12, 2, (2, 2), seed=102),
    "more-studies": _builtin("more-studies", (1600,) * 4, 60, 2, (2,) * 4, seed=103),
    "more-factors": _builtin("more-factors", (1600, 1600), 60, 4, (3, 5), seed=104),
    "small-samples": _builtin("small-samples", (250, 250), 60, 2, (2, 2), seed=105),
    "unequal-samples": _builtin("unequal-samples", (1600, 250), 60, 2, (2, 2), seed=106),
    "shared-noise": _builtin("shared-noise", (1600, 1600), 60, 2, (2, 2),
                             noise="shared_dominant", seed=107),
    "specific-noise": _builtin("specific-noise", (1600, 1600), 60, 2, (2, 2),
                               noise="specific_dominant", seed=108),
    "near-zeros": _builtin("near-zeros", (1600, 1600), 60, 2, (2, 2),
                           exact_zeros=False, seed=109),
    "application-scale": _builtin("application-scale", (2887, 576), 60, 2, (2, 2),
                                  exact_zeros=False, seed=110),
}

_ORDERED = list(BUILTIN_SETTINGS)
_ALIASES = {str(i + 1): nm for i, nm in enumerate(_ORDERED)}
_ALIASES.update({f"setting{i + 1}": nm for i, nm in enumerate(_ORDERED)})


def builtin_setting(name: str) -> SimulationSetting:
    """Look up a built-in setting by name or by its 1-based number."""
    key = str(name).strip().lower()
    key = _ALIASES.get(key, key)
    if key not in BUILTIN_SETTINGS:
        known = ", ".join(BUILTIN_SETTINGS)
        raise ValueError(f"unknown setting {name!r}; known: {known}")
    return BUILTIN_SETTINGS[key]


def _sign_column(rng: np.random.Generator, p: int, col: int, count: int) -> np.ndarray:
    """One +-1 column with `count` entries at or below row `col`."""
    out = np.zeros(p)
    count = min(max(count, 1), p - col)
    # the block-diagonal entry is always present; the rest of the support
    # is drawn from the unconstrained rows
    pool = np.arange(col + 1, p)
    extra = rng.choice(pool, size=count - 1, replace=False) if count > 1 else []
    rows = np.concatenate([[col], extra]).astype(int)
    out[rows] = rng.choice([-1.0, 1.0], size=rows.size)
    return out


def _loading_matrix(rng, p, m) -> np.ndarray:
    count = max(MIN_COLUMN_COUNT, round(LOADING_DENSITY * p))
    cols = [_sign_column(rng, p, c, count) for c in range(m)]
    return constrain_loadings(np.column_stack(cols))


def _fill_near_zeros(rng, mat: np.ndarray) -> np.ndarray:
    """Replace free zero entries by +-uniform(NEAR_ZERO_RANGE) values."""
    out = mat.copy()
    m = out.shape[1]
    free_zero = out == 0.0
    for i in range(min(m, out.shape[0])):
        free_zero[i, i + 1:] = False  # structural zeros stay exact
    n = int(free_zero.sum())
    lo, hi = NEAR_ZERO_RANGE
    out[free_zero] = rng.uniform(lo, hi, n) * rng.choice([-1.0, 1.0], n)
    return out


def generate_loadings(
    p: int,
    k: int,
    j: tuple[int, ...],
    rng: np.random.Generator,
    exact_zeros: bool = True,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Draw (phi, [lambda_1..lambda_S]) with full-rank stacked columns."""
    for _ in range(_MAX_RANK_RETRIES):
        phi = _loading_matrix(rng, p, k)
        lambdas = [_loading_matrix(rng, p, js) for js in j]
        if not exact_zeros:
            phi = _fill_near_zeros(rng, phi)
            lambdas = [_fill_near_zeros(rng, lam) for lam in lambdas]
        stacked = np.hstack([phi] + lambdas)
        sv = np.linalg.svd(stacked, compute_uv=False)
        if sv[-1] > config.RANK_RTOL * sv[0]:
            return phi, lambdas
    raise RuntimeError("failed to draw full-rank loadings")


def generate_model(setting: SimulationSetting, rng: np.random.Generator) -> MsfaxModel:
    """Draw the true model for a setting: loadings plus noise components."""
    phi, lambdas = generate_loadings(setting.p, setting.k, setting.j, rng,
                                     exact_zeros=setting.exact_zeros)
    (glo, ghi), (elo, ehi) = NOISE_SUPPORTS[setting.noise]
    gamma = rng.uniform(glo, ghi, setting.p)
    etas = [rng.uniform(elo, ehi, setting.p) for _ in setting.j]
    psi = [gamma + eta for eta in etas]
    return MsfaxModel(phi=phi, lambdas=lambdas, psi=psi, gamma=gamma, etas=etas)


def setting_model(setting: SimulationSetting) -> MsfaxModel:
    """The fixed true model of a setting, keyed on the setting seed alone."""
    return generate_model(setting, np.random.default_rng([int(setting.seed)]))


def generate_dataset(
    setting: SimulationSetting,
    replicate: int = 0,
) -> tuple[MultiStudyDataset, MsfaxModel]:
    """Sample one replicate: centered studies plus the generating model.

    The true parameters are a function of the setting alone (one draw per
    setting seed); replicates resample only the factor scores and noise,
    keyed on (setting.seed, replicate). Both streams are bitwise
    reproducible and replicates are independent.
    """
    model = setting_model(setting)
    rng = np.random.default_rng([int(setting.seed), int(replicate)])
    studies = []
    for s, n in enumerate(setting.n):
        f = rng.standard_normal((n, setting.k))
        l = rng.standard_normal((n, setting.j[s]))
        eps = rng.standard_normal((n, setting.p)) * np.sqrt(model.psi[s])
        x = f @ model.phi.T + l @ model.lambdas[s].T + eps
        studies.append(x - x.mean(axis=0, keepdims=True))
    return MultiStudyDataset(studies), model
