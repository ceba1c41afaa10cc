"""File formats for datasets, fitted models, networks, and metrics.

Datasets are one CSV per study plus a JSON manifest. Models are a single
JSON document with dense row-major arrays. Networks are written both as a
dense matrix CSV and as a sparse edge list. Metrics travel as a long CSV
of per-replicate records plus a compact summary table.
"""

import json
import os
from pathlib import Path

import numpy as np
import pandas as pd

from . import config
from .core import GgmNetwork, MsfaxModel, MultiStudyDataset

__all__ = [
    "output_dir",
    "save_dataset",
    "load_dataset",
    "save_model",
    "load_model",
    "save_network",
    "load_network",
    "save_trace",
    "save_records",
    "load_records",
    "save_summary_table",
]


def output_dir(path=None):
    """Resolve the output directory: explicit path, env override, or cwd."""
    if path is None:
        path = os.environ.get(config.OUTPUT_DIR_ENV, "") or "."
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _columns(p):
    return [f"var{i + 1}" for i in range(p)]


def save_dataset(data, directory, prefix="study"):
    """Write one CSV per study and a manifest; returns the manifest path.

    CSV columns carry the predictor names when the dataset has them.
    """
    directory = output_dir(directory)
    columns = list(data.names) if data.names else _columns(data.p)
    entries = []
    for s, x in enumerate(data.studies):
        fname = f"{prefix}{s + 1}.csv"
        pd.DataFrame(x, columns=columns).to_csv(directory / fname, index=False)
        entries.append({"file": fname, "n": int(x.shape[0])})
    manifest = {
        "p": int(data.p),
        "names": list(data.names) if data.names else None,
        "studies": entries,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def load_dataset(manifest_path):
    """Read a dataset written by save_dataset.

    Accepts either the manifest.json path or the directory holding it.
    """
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    manifest = json.loads(manifest_path.read_text())
    studies = []
    for entry in manifest["studies"]:
        frame = pd.read_csv(manifest_path.parent / entry["file"])
        studies.append(frame.to_numpy(dtype=float))
    return MultiStudyDataset(studies, names=manifest.get("names"))


def save_model(model, path):
    """Write a loadings model as JSON with dense row-major arrays."""
    doc = {
        "p": int(model.p),
        "k": int(model.k),
        "j": [int(v) for v in model.j],
        "n_studies": int(model.n_studies),
        "phi": model.phi.tolist(),
        "lambdas": [lam.tolist() for lam in model.lambdas],
        "psi": [v.tolist() for v in model.psi],
        "gamma": None if model.gamma is None else model.gamma.tolist(),
        "etas": None if model.etas is None else [e.tolist() for e in model.etas],
        "names": list(model.names) if model.names else None,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def load_model(path):
    """Read a model written by save_model.

    Accepts the JSON path or a directory holding model.json (a fit
    output) or truth_model.json (a simulated replicate).
    """
    path = Path(path)
    if path.is_dir():
        for candidate in ("model.json", "truth_model.json"):
            if (path / candidate).exists():
                path = path / candidate
                break
        else:
            raise OSError(
                f"no model.json or truth_model.json in directory {path}")
    doc = json.loads(path.read_text())
    model = MsfaxModel(
        phi=np.asarray(doc["phi"], dtype=float),
        lambdas=[np.asarray(lam, dtype=float) for lam in doc["lambdas"]],
        psi=[np.asarray(v, dtype=float) for v in doc["psi"]],
        gamma=None if doc["gamma"] is None else np.asarray(doc["gamma"], dtype=float),
        etas=None
        if doc["etas"] is None
        else [np.asarray(e, dtype=float) for e in doc["etas"]],
        names=doc.get("names"),
    )
    model.validate()
    return model


def save_network(network, path_stem):
    """Write dense matrix and edge-list CSVs; returns the two paths.

    The edge list keeps only nonzero entries of the strict upper triangle,
    one row per edge, with 1-based node indices.
    """
    path_stem = Path(path_stem)
    path_stem.parent.mkdir(parents=True, exist_ok=True)
    values = network.values
    p = values.shape[0]
    names = list(network.names) if network.names else _columns(p)
    matrix_path = path_stem.with_suffix(".matrix.csv")
    pd.DataFrame(values, index=names, columns=names).to_csv(matrix_path)

    rows = []
    for i in range(p):
        for jj in range(i + 1, p):
            if values[i, jj] != 0.0:
                rows.append(
                    {
                        "node_i": names[i],
                        "node_j": names[jj],
                        "partial_correlation": values[i, jj],
                    }
                )
    edges_path = path_stem.with_suffix(".edges.csv")
    pd.DataFrame(
        rows, columns=["node_i", "node_j", "partial_correlation"]
    ).to_csv(edges_path, index=False)
    return matrix_path, edges_path


def load_network(matrix_path, is_difference=False):
    """Read the dense matrix CSV back into a network."""
    frame = pd.read_csv(matrix_path, index_col=0)
    return GgmNetwork(
        frame.to_numpy(dtype=float),
        names=list(frame.columns),
        is_difference=is_difference,
    )


def save_trace(fit, path):
    """Write the log-likelihood trace of a fit as iteration,loglik rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace = pd.DataFrame(
        {
            "iteration": np.arange(len(fit.loglik_trace)),
            "loglik": fit.loglik_trace,
        }
    )
    trace.to_csv(path, index=False)
    return path


def save_records(records, path):
    """Write per-replicate metric records as a long CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame.from_records(records).to_csv(path, index=False)
    return path


def load_records(path):
    return pd.read_csv(path).to_dict("records")


def save_summary_table(summary, path):
    """Write a summary in report layout: one row per method and target,
    one column per metric, each cell median with a percentile interval."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cells = {}
    for row in summary.itertuples(index=False):
        key = (row.setting, row.method, row.target)
        if np.isnan(row.median):
            cells.setdefault(key, {})[row.metric] = ""
        else:
            cells.setdefault(key, {})[row.metric] = (
                f"{row.median:.4f} ({row.p2_5:.4f}, {row.p97_5:.4f})"
            )
    index = pd.MultiIndex.from_tuples(
        sorted(cells), names=["setting", "method", "target"]
    )
    table = pd.DataFrame(
        [cells[key] for key in index], index=index
    ).fillna("")
    table.to_csv(path)
    return path
