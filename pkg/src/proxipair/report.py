"""Artifact writers: CSV traces, the stability table, text report, JSON summary.

CSV schemas are frozen so downstream tooling stays stable:

* ``trace.csv`` columns: iter, orientation, gap, gap_minus_d, cauchy_step,
  residual_x, residual_y
* ``stability.csv`` columns: kind, epsilon, bound, n_samples, kept,
  violations, max_ratio

Floats are written with shortest round-trip precision; identical runs produce
byte-identical files.
"""

from __future__ import annotations

import json
import os
from typing import Optional

import numpy as np

from .core import Orientation
from .mappings import CyclicMap
from .solver import SolveReport

__all__ = ["write_trace_csv", "write_stability_csv", "write_result_json",
           "write_report_txt", "fmt"]

TRACE_COLUMNS = ["iter", "orientation", "gap", "gap_minus_d", "cauchy_step",
                 "residual_x", "residual_y"]
STABILITY_COLUMNS = ["kind", "epsilon", "bound", "n_samples", "kept",
                     "violations", "max_ratio"]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace_csv(path: str, t: CyclicMap, report: SolveReport) -> None:
    """Write the iterate trace; residuals are recomputed by batch evaluation."""
    iterates = report.iterates
    n = len(iterates)
    firsts = np.array([p.first for p in iterates])
    seconds = np.array([p.second for p in iterates])
    img_f = np.empty_like(firsts)
    img_s = np.empty_like(seconds)
    for orientation, idx in ((Orientation.AB, slice(0, n, 2)),
                             (Orientation.BA, slice(1, n, 2))):
        if firsts[idx].shape[0]:
            img_f[idx] = t.apply_many(firsts[idx], seconds[idx], orientation)
            img_s[idx] = t.apply_many(seconds[idx], firsts[idx],
                                      orientation.flipped)
    res_x = np.linalg.norm(firsts - img_f, axis=1)
    res_y = np.linalg.norm(seconds - img_s, axis=1)
    gaps = np.maximum(res_x, res_y)

    lines = [",".join(TRACE_COLUMNS)]
    for i in range(n):
        if i >= 2:
            cauchy = fmt(max(
                float(np.linalg.norm(firsts[i] - firsts[i - 2])),
                float(np.linalg.norm(seconds[i] - seconds[i - 2])),
            ))
        else:
            cauchy = ""
        lines.append(",".join([
            str(i),
            iterates[i].orientation.value,
            fmt(gaps[i]),
            fmt(gaps[i] - report.d),
            cauchy,
            fmt(res_x[i]),
            fmt(res_y[i]),
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_stability_csv(path: str, rows: list[dict]) -> None:
    lines = [",".join(STABILITY_COLUMNS)]
    for row in rows:
        lines.append(",".join([
            str(row["kind"]),
            fmt(row["epsilon"]),
            fmt(row["bound"]),
            str(row["n_samples"]),
            str(row["kept"]),
            str(row["violations"]),
            fmt(row["max_ratio"]),
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [float(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_result_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_result_json(path: str) -> Optional[dict]:
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_report_txt(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
