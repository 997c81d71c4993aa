"""Structured run reports (JSON) and flat sample dumps (CSV).

A report is a single self-describing document; complex matrices are serialized
row-major as [re, im] pairs with the mode count and dimension declared. Apart
from the timestamp field, identical invocations produce byte-identical files.
"""

import datetime
import json
import os
import subprocess
from pathlib import Path

import numpy as np

from .ensembles import RngSpec
from .fock import FockOperator
from .verify import CriterionResult, EstimatorReport

REPORT_DIR_ENV = "FERMIGAUSS_REPORT_DIR"


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, RngSpec):
        return {"seed": obj.seed, "stream": obj.stream}
    return obj


def fock_to_doc(op: FockOperator) -> dict:
    flat = op.matrix.ravel()
    return {
        "modes": op.modes,
        "dimension": op.dim,
        "layout": "row-major [re, im] pairs",
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def estimator_to_criterion(name: str, report: EstimatorReport) -> dict:
    if report.per_entry_se is None:
        tol_or_se = {"kind": "tolerance", "value": _jsonable(report.details.get("tolerance", 1e-8))}
    else:
        tol_or_se = {
            "kind": "standard_error",
            "matrix": [[float(x) for x in row] for row in report.per_entry_se],
        }
    return {
        "name": name,
        "target": fock_to_doc(report.target),
        "measured": fock_to_doc(report.mean),
        "tolerance_or_se": tol_or_se,
        "max_abs_deviation": report.max_abs_deviation,
        "samples": report.samples,
        "rule": report.criterion,
        "passed": report.passed,
        "details": _jsonable(report.details),
    }


def result_to_criterion(res: CriterionResult) -> dict:
    return {
        "name": res.name,
        "target": 0.0,
        "measured": res.measured,
        "tolerance_or_se": res.tolerance,
        "passed": res.passed,
        "details": res.detail,
    }


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


def build_report(command: str, parameters: dict, seed: RngSpec | None, criteria: list, warnings=None) -> dict:
    return {
        "command": command,
        "parameters": _jsonable(parameters),
        "seed": _jsonable(seed),
        "git_describe": git_describe(),
        "criteria": _jsonable(criteria),
        "warnings": list(warnings or []),
        "passed": bool(all(c.get("passed", False) for c in criteria)),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def resolve_out_path(path: str) -> Path:
    """Relative paths land in $FERMIGAUSS_REPORT_DIR when that is set."""
    p = Path(path)
    base = os.environ.get(REPORT_DIR_ENV)
    if base and not p.is_absolute():
        return Path(base) / p
    return p


def write_report(doc: dict, path: str) -> Path:
    out = resolve_out_path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2) + "\n")
    return out


def write_lambda_csv(path: str, samples, modes: int) -> Path:
    """One row per sample, columns lambda_1..lambda_M, 17 significant digits."""
    out = resolve_out_path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    arr = np.asarray(samples, dtype=float).reshape(-1, modes) if np.size(samples) else np.empty((0, modes))
    with out.open("w") as fh:
        fh.write(",".join(f"lambda_{j + 1}" for j in range(modes)) + "\n")
        for row in arr:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
    return out
