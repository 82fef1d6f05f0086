"""JSON reports and CSV sidecars for runs and benchmarks."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .bspline import evaluate
from .gensol import TimeSeries, predict
from .pipeline import CellResult, EDCResult, RunReport
from .series_io import write_table


def dumps(obj: Any) -> str:
    """Deterministic JSON: insertion-ordered keys, repr floats, no NaN."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(obj: Any, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8", newline="")


def strip_timings(obj: Any) -> Any:
    """Copy of a report structure without any ``timings`` entries."""
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k != "timings"}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


def sidecar(path, suffix: str) -> Path:
    p = Path(path)
    return p.with_name(f"{p.stem}_{suffix}.csv")


def write_run_sidecars(report: RunReport, data: TimeSeries, path) -> list[Path]:
    """Plot-ready CSVs next to a run report: fit, GA history, refinement, coefficients."""
    out = []
    spline = report.spline.model()
    xs = np.clip(data.xs, *spline.domain)
    p = sidecar(path, "fit")
    write_table(
        p,
        ("x", "y", "general_solution", "spline"),
        zip(data.xs, data.ys, predict(report.general_solution, data.xs), evaluate(spline, xs)),
    )
    out.append(p)
    p = sidecar(path, "ga_history")
    write_table(p, ("generation", "best_loss"), ((i + 1, float(v)) for i, v in enumerate(report.ga.loss_history)))
    out.append(p)
    p = sidecar(path, "refinement")
    write_table(p, ("round", "total_squared_residual"), enumerate(float(v) for v in report.spline.residual_history))
    out.append(p)
    p = sidecar(path, "coefficients")
    ode = report.ode
    write_table(
        p,
        ("order", "coefficient", "unit_norm", "sparsity"),
        (
            (i, float(c), float(u), float(m))
            for i, (c, u, m) in enumerate(zip(ode.coefficients.coeffs, ode.raw_null_vector, ode.sparsity_mask))
        ),
    )
    out.append(p)
    return out


def _orders(n: int, prefix: str) -> list[str]:
    return [f"{prefix}{i}" for i in range(n)]


def spring_document(cells: Sequence[CellResult], include_timings: bool = True) -> dict[str, Any]:
    return {
        "benchmark": "spring",
        "cells": [
            {**c.row(), "report": c.report.to_dict(include_timings) if c.report else None} for c in cells
        ],
    }


def write_spring_table(cells: Sequence[CellResult], path) -> None:
    n = max((len(c.truth) for c in cells), default=0)
    header = ["case", "noise", "seed", "status"] + _orders(n, "truth_c") + _orders(n, "c") + _orders(n, "mask")
    header += ["max_relative_error", "ga_loss", "general_solution_mse"]
    rows = []
    for c in cells:
        row = [c.name, "yes" if c.noisy else "no", c.seed]
        if c.report is None:
            rows.append(row + [f"error:{c.error_stage}"] + list(c.truth) + [""] * (2 * n + 3))
            continue
        r = c.report
        rows.append(
            row
            + ["ok"]
            + list(c.truth)
            + list(r.ode.coefficients.coeffs)
            + list(r.ode.sparsity_mask)
            + [float(np.max(c.relative_errors())), r.ga.best_loss, r.general_solution_mse]
        )
    write_table(path, header, rows)


def edc_document(results: Sequence[EDCResult], include_timings: bool = True) -> dict[str, Any]:
    return {
        "benchmark": "edc",
        "components": [
            {**r.row(), "report": r.report.to_dict(include_timings) if r.report else None} for r in results
        ],
    }


def write_edc_table(results: Sequence[EDCResult], path) -> None:
    n = max((len(r.report.ode.raw_null_vector) for r in results if r.report), default=0)
    header = ["component", "seed", "status", "reference_rate", "rate", "squared_error"]
    header += _orders(n, "c") + _orders(n, "mask")
    rows = []
    for r in results:
        if r.report is None:
            rows.append([r.component, r.seed, f"error:{r.error_stage}", r.reference_rate] + [""] * (2 + 2 * n))
            continue
        rows.append(
            [r.component, r.seed, "ok", r.reference_rate, r.rate, r.squared_error]
            + list(r.report.ode.coefficients.coeffs)
            + list(r.report.ode.sparsity_mask)
        )
    write_table(path, header, rows)


def write_sparsity_csv(labels: Sequence[str], matrix: np.ndarray, path) -> None:
    n = matrix.shape[1] if matrix.size else 0
    write_table(path, ["label"] + _orders(n, "order"), ([lab] + [float(v) for v in row] for lab, row in zip(labels, matrix)))


def null_vectors_from_document(doc: dict[str, Any], source: str = "") -> list[tuple[str, list[float], Any]]:
    """(label, unit null vector, pivot) for every run stored in a report file."""
    def one(label, rep):
        ode = rep["ode"]
        return (label, ode["raw_null_vector"], ode["pivot_order"] if ode["pivot_order"] is not None else "lowest")

    if "ode" in doc:
        return [one(source or "run", doc)]
    out = []
    for cell in doc.get("cells", []):
        if cell.get("report"):
            out.append(one(f"{cell['case']}/{'noisy' if cell['noise'] else 'clean'}", cell["report"]))
    for comp in doc.get("components", []):
        if comp.get("report"):
            out.append(one(comp["component"], comp["report"]))
    return out
