"""Command-line interface.

Subcommands cover the full loop: simulate replicate datasets with their
truth, fit the factor model, run the penalized-precision benchmark, score
saved networks against a truth model, run the whole simulation study into
a summary table, and export thresholded networks and hub scores from a
fitted model. Every subcommand accepts --config pointing at a JSON file
whose keys mirror the long flag names; explicit flags win.

Exit codes: 0 success, 2 bad arguments or inputs, 3 numerical failure.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__, config, io
from .benchmark import GlassoOptions, benchmark_networks
from .core import MsfaxError, NetworkSet
from .decompose import networks_from_fit
from .ecm import EcmOptions, fit_msfa
from .factors import estimate_factor_counts
from .metrics import evaluate_networks, summarize
from .netstats import fisher_threshold, hub_scores, threshold_network
from .simulate import BUILTIN_SETTINGS, builtin_setting, generate_dataset
from .study import StudyPlan, run_study

__all__ = ["main", "build_parser"]


def _parse_ints(text):
    return tuple(int(v) for v in str(text).split(",") if v != "")

def _parse_floats(text):
    return tuple(float(v) for v in str(text).split(",") if v != "")

def _parse_names(text):
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _add_config(sub):
    sub.add_argument(
        "--config",
        help="JSON file whose keys mirror the long option names; "
        "options given on the command line take precedence",
    )


def _add_ecm_flags(sub):
    sub.add_argument("--max-iter", type=int, default=EcmOptions.max_iter,
                     help="iteration cap per start")
    sub.add_argument("--tol", type=float, default=EcmOptions.rel_tol,
                     help="relative log-likelihood change for convergence")
    sub.add_argument("--starts", type=int, default=EcmOptions.n_starts,
                     help="number of random starts")
    sub.add_argument("--seed", type=int, default=EcmOptions.seed,
                     help="seed for the start perturbations")
    sub.add_argument("--ridge", type=float, default=EcmOptions.ridge,
                     help="ridge added to near-singular solves")


def _ecm_opts(args):
    return EcmOptions(
        max_iter=args.max_iter,
        rel_tol=args.tol,
        n_starts=args.starts,
        ridge=args.ridge,
        seed=args.seed,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="msfax",
        description="multi-study factor analysis of shared and "
        "study-specific gaussian graphical models",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    sub = commands.add_parser(
        "simulate",
        help="write simulated replicates with their truth model and networks",
    )
    sub.add_argument("--setting", default="1",
                     help="built-in setting name or number "
                     f"({', '.join(sorted(set(BUILTIN_SETTINGS)))})")
    sub.add_argument("--reps", type=int, default=1,
                     help="number of replicate directories to write")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the setting's truth seed")
    sub.add_argument("--out", default=None, help="output directory")
    _add_config(sub)
    subparsers["simulate"] = sub

    sub = commands.add_parser("fit", help="fit the factor model to a dataset")
    sub.add_argument("--data", required=True,
                     help="replicate directory or its manifest.json")
    sub.add_argument("--k", type=int, help="number of shared factors")
    sub.add_argument("--j", type=_parse_ints,
                     help="per-study factor counts, e.g. 2,2")
    sub.add_argument("--auto-factors", action="store_true",
                     help="estimate factor counts from the data")
    sub.add_argument("--out", default=None, help="output directory")
    _add_ecm_flags(sub)
    _add_config(sub)
    subparsers["fit"] = sub

    sub = commands.add_parser(
        "benchmark", help="penalized-precision benchmark on a dataset"
    )
    sub.add_argument("--data", required=True,
                     help="replicate directory or its manifest.json")
    sub.add_argument("--grid", type=_parse_floats,
                     default=config.DEFAULT_LAMBDA_GRID,
                     help="comma-separated penalty grid")
    sub.add_argument("--out", default=None, help="output directory")
    _add_config(sub)
    subparsers["benchmark"] = sub

    sub = commands.add_parser(
        "evaluate", help="score saved networks against a truth model"
    )
    sub.add_argument("--estimated", required=True,
                     help="directory holding shared/study matrix CSVs")
    sub.add_argument("--truth", required=True,
                     help="truth model JSON or a simulated replicate directory")
    sub.add_argument("--method", default="msfa",
                     help="method label for the records")
    sub.add_argument("--setting", default="", help="setting label")
    sub.add_argument("--replicate", type=int, default=0)
    sub.add_argument("--difference-specific", action="store_true",
                     help="saved specific networks are differences")
    sub.add_argument("--out", default=None, help="output directory")
    _add_config(sub)
    subparsers["evaluate"] = sub

    sub = commands.add_parser(
        "study", help="run the simulation study and write the summary table"
    )
    sub.add_argument("--settings", type=_parse_names, default=("1",),
                     help="comma-separated setting names or numbers")
    sub.add_argument("--reps", type=int, default=10,
                     help="replicates per setting")
    sub.add_argument("--methods", type=_parse_names,
                     default=("msfa", "glasso"))
    sub.add_argument("--factors", choices=("true", "estimated"),
                     default="true",
                     help="use the generating factor counts or estimate them")
    sub.add_argument("--jobs", type=int, default=1,
                     help="worker processes across replicates")
    sub.add_argument("--grid", type=_parse_floats,
                     default=config.DEFAULT_LAMBDA_GRID)
    sub.add_argument("--out", default=None, help="output directory")
    _add_ecm_flags(sub)
    _add_config(sub)
    subparsers["study"] = sub

    sub = commands.add_parser(
        "network",
        help="export thresholded networks and hub scores from a fitted model",
    )
    sub.add_argument("--model", required=True, help="model JSON")
    sub.add_argument("--threshold-value", type=float, default=None,
                     help="zero out edges at or below this magnitude")
    sub.add_argument("--threshold-alpha", type=float, default=None,
                     help="family-wise level for a correlation-test threshold")
    sub.add_argument("--n", type=int, default=None,
                     help="sample size behind --threshold-alpha")
    sub.add_argument("--hubs", action="store_true",
                     help="also write per-node hub scores")
    sub.add_argument("--out", default=None, help="output directory")
    _add_config(sub)
    subparsers["network"] = sub

    return parser, subparsers


def _apply_config(parser, subparsers, args, argv):
    path = getattr(args, "config", None)
    if not path:
        return args
    overrides = json.loads(Path(path).read_text())
    if not isinstance(overrides, dict):
        raise ValueError("config file must hold a JSON object")
    sub = subparsers[args.command]
    valid = {a.dest for a in sub._actions}
    unknown = set(overrides) - valid
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    sub.set_defaults(**overrides)
    return parser.parse_args(argv)


def _cmd_simulate(args):
    if args.reps < 1:
        raise ValueError("--reps must be at least 1")
    setting = builtin_setting(args.setting)
    if args.seed is not None:
        setting = dataclasses.replace(setting, seed=args.seed)
    out = io.output_dir(args.out)
    for rep in range(args.reps):
        rep_dir = io.output_dir(out / f"rep{rep + 1}")
        data, truth = generate_dataset(setting, rep)
        manifest = io.save_dataset(data, rep_dir)
        io.save_model(truth, rep_dir / "truth_model.json")
        print(f"wrote {manifest}")
        print(f"wrote {rep_dir / 'truth_model.json'}")
        _write_networks(networks_from_fit(truth), rep_dir)
    return 0


def _load_data(path):
    return io.load_dataset(path).center()


def _write_networks(nets, out):
    paths = [io.save_network(nets.shared, out / "shared")]
    for s, net in enumerate(nets.specific):
        paths.append(io.save_network(net, out / f"study{s + 1}"))
    for matrix_path, edges_path in paths:
        print(f"wrote {matrix_path}")
        print(f"wrote {edges_path}")


def _cmd_fit(args):
    data = _load_data(args.data)
    opts = _ecm_opts(args)
    if args.auto_factors:
        counts = estimate_factor_counts(data, opts)
        k, j = counts.k, counts.j
        for note in counts.warnings:
            print(f"note: {note}", file=sys.stderr)
        print(json.dumps({
            "t": list(counts.totals),
            "k": counts.k,
            "j": list(counts.j),
            "fractions": list(counts.shared_fractions),
        }))
    else:
        if args.k is None or args.j is None:
            raise ValueError("provide --k and --j, or --auto-factors")
        k, j = args.k, args.j
    fit = fit_msfa(data, k, j, opts)
    out = io.output_dir(args.out)
    io.save_model(fit.model, out / "model.json")
    io.save_trace(fit, out / "trace.csv")
    print(f"wrote {out / 'model.json'}")
    print(f"wrote {out / 'trace.csv'}")
    _write_networks(networks_from_fit(fit.model), out)
    print(
        f"log-likelihood {fit.loglik:.6f} after {fit.n_iter} iterations"
        f" ({'converged' if fit.converged else 'not converged'})"
    )
    return 0


def _cmd_benchmark(args):
    data = _load_data(args.data)
    opts = GlassoOptions(grid=tuple(args.grid))
    result = benchmark_networks(data, opts)
    out = io.output_dir(args.out)
    _write_networks(result.networks, out)
    rows = []
    for name, sel in result.selections.items():
        for entry in sel.table:
            rows.append({"fit": name, **entry})
    io.save_records(rows, out / "selection.csv")
    print(f"wrote {out / 'selection.csv'}")
    lams = ", ".join(
        f"{name}={sel.lam:g}" for name, sel in result.selections.items()
    )
    print(f"selected penalties: {lams}")
    return 0


def _cmd_evaluate(args):
    directory = Path(args.estimated)
    shared = io.load_network(directory / "shared.matrix.csv")
    specific = []
    for path in sorted(directory.glob("study*.matrix.csv")):
        specific.append(
            io.load_network(path, is_difference=args.difference_specific)
        )
    if not specific:
        raise ValueError(f"no study networks found in {directory}")
    estimated = NetworkSet(shared=shared, specific=specific)
    truth = networks_from_fit(io.load_model(args.truth))
    records = evaluate_networks(
        estimated, truth, args.method, args.setting, args.replicate
    )
    out = io.output_dir(args.out)
    io.save_records(records, out / "metrics.csv")
    print(f"wrote {out / 'metrics.csv'}")
    return 0


def _cmd_study(args):
    records = []
    for name in args.settings:
        plan = StudyPlan(
            setting_name=name,
            methods=tuple(args.methods),
            factors=args.factors,
            ecm_opts=_ecm_opts(args),
            glasso_opts=GlassoOptions(grid=tuple(args.grid)),
        )
        chunk, _ = run_study(plan, args.reps, jobs=args.jobs)
        records.extend(chunk)
    out = io.output_dir(args.out)
    io.save_records(records, out / "metrics_long.csv")
    io.save_summary_table(summarize(records), out / "summary_table.csv")
    print(f"wrote {out / 'metrics_long.csv'}")
    print(f"wrote {out / 'summary_table.csv'}")
    return 0


def _cmd_network(args):
    model = io.load_model(args.model)
    nets = networks_from_fit(model)
    if args.threshold_alpha is not None and args.threshold_value is not None:
        raise ValueError("give either --threshold-value or --threshold-alpha")
    threshold = args.threshold_value
    if args.threshold_alpha is not None:
        if args.n is None:
            raise ValueError("--threshold-alpha needs --n")
        threshold = fisher_threshold(args.n, model.p, args.threshold_alpha)
        print(f"threshold {threshold:.6f}")
    if threshold is not None:
        nets = NetworkSet(
            shared=threshold_network(nets.shared, threshold),
            specific=[threshold_network(n, threshold) for n in nets.specific],
            model=nets.model,
        )
    out = io.output_dir(args.out)
    _write_networks(nets, out)
    if args.hubs:
        names = list(model.names) if model.names else [
            f"var{i + 1}" for i in range(model.p)
        ]
        rows = []
        labeled = [("shared", nets.shared)] + [
            (f"study{s + 1}", net) for s, net in enumerate(nets.specific)
        ]
        for label, net in labeled:
            for node, score in zip(names, hub_scores(net)):
                rows.append({"network": label, "node": node,
                             "score": float(score)})
        hub_path = out / "hubs.csv"
        pd.DataFrame(rows).to_csv(hub_path, index=False)
        print(f"wrote {hub_path}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "benchmark": _cmd_benchmark,
    "evaluate": _cmd_evaluate,
    "study": _cmd_study,
    "network": _cmd_network,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(parser, subparsers, args, argv)
        return _COMMANDS[args.command](args)
    except MsfaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
