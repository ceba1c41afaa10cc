"""Simulation-study driver: simulate, fit, benchmark, score, summarize.

One replicate produces metric records for the factor-model fit and the
penalized-precision benchmark against the generating truth. Replicates
are independent and keyed by (setting seed, replicate index), so runs are
reproducible for any worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .benchmark import GlassoOptions, benchmark_networks
from .decompose import networks_from_fit
from .ecm import EcmOptions, fit_msfa
from .factors import estimate_factor_counts
from .metrics import evaluate_networks, summarize
from .simulate import builtin_setting, generate_dataset

__all__ = [
    "StudyPlan",
    "run_replicate",
    "replicate_factor_counts",
    "run_study",
]

METHODS = ("msfa", "glasso")


@dataclass(frozen=True)
class StudyPlan:
    """Everything one replicate needs, picklable for worker processes."""

    setting_name: str
    methods: tuple = METHODS
    factors: str = "true"
    ecm_opts: EcmOptions = None
    glasso_opts: GlassoOptions = None

    def __post_init__(self):
        if self.factors not in ("true", "estimated"):
            raise ValueError("factors must be 'true' or 'estimated'")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")


def run_replicate(plan, replicate):
    """Simulate one replicate and score the requested methods."""
    setting = builtin_setting(plan.setting_name)
    data, truth = generate_dataset(setting, replicate)
    truth_nets = networks_from_fit(truth)
    records = []
    if "msfa" in plan.methods:
        ecm_opts = plan.ecm_opts or EcmOptions()
        if plan.factors == "true":
            k, j = setting.k, setting.j
        else:
            counts = estimate_factor_counts(data, ecm_opts)
            k, j = counts.k, counts.j
        fit = fit_msfa(data, k, j, ecm_opts)
        est = networks_from_fit(fit.model)
        records += evaluate_networks(est, truth_nets, "msfa", setting.name, replicate)
    if "glasso" in plan.methods:
        result = benchmark_networks(data, plan.glasso_opts)
        records += evaluate_networks(
            result.networks, truth_nets, "glasso", setting.name, replicate
        )
    return records


def replicate_factor_counts(setting_name, replicate, ecm_opts=None):
    """Estimated (k, j) for one simulated replicate, for recovery rates."""
    setting = builtin_setting(setting_name)
    data, _ = generate_dataset(setting, replicate)
    counts = estimate_factor_counts(data, ecm_opts)
    return counts.k, tuple(counts.j)


def _replicate_task(args):
    plan, replicate = args
    return run_replicate(plan, replicate)


def run_study(plan, n_replicates, jobs=1):
    """All replicates of a plan; returns (records, summary frame)."""
    if n_replicates < 1:
        raise ValueError("n_replicates must be positive")
    tasks = [(plan, r) for r in range(n_replicates)]
    records = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for result in pool.map(_replicate_task, tasks):
                records.extend(result)
    else:
        for task in tasks:
            records.extend(_replicate_task(task))
    return records, summarize(records)
