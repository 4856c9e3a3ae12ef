"""CSV and JSON encodings for traces, grids, trajectories and oracle queries.

Floats are written with ``repr``, the shortest decimal that parses back to the
same double, so every file re-reads to identical values.  NaN cells become
empty CSV fields and JSON ``null``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, List, Optional

import numpy as np

from .model import SimSummary
from .montecarlo import CellError, GridResult, GridSpec, Trajectory

TRACE_COLUMNS = ["i", "is_reader", "x", "attended", "v", "visits", "likes", "rating"]
GRID_COLUMNS = ["alpha", "rho", "value", "stderr"]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "" if math.isnan(value) else repr(value)
    return str(int(value))


def csv_text(header: List[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _nullable(x: float) -> Optional[float]:
    x = float(x)
    return None if math.isnan(x) else x


def _matrix_to_list(m: np.ndarray):
    return [[_nullable(v) for v in row] for row in m]


def _matrix_from_list(rows) -> np.ndarray:
    return np.array([[math.nan if v is None else float(v) for v in row] for row in rows], dtype=np.float64)


# --- single runs -------------------------------------------------------------


def trace_csv(summary: SimSummary) -> str:
    rows = (
        (r.index, r.is_reader, r.x, r.attended, r.v, r.visits, r.likes, r.rating_after)
        for r in summary.trace
    )
    return csv_text(TRACE_COLUMNS, rows)


def summary_dict(summary: SimSummary, seed: int) -> dict:
    return {
        "final_rating": summary.final_rating,
        "dead": int(summary.dead),
        "death_index": summary.death_index,
        "attendance": summary.attendance,
        "seed": seed,
    }


def trace_json(summary: SimSummary, seed: int, params: dict) -> str:
    records = [
        dict(zip(TRACE_COLUMNS, (r.index, r.is_reader, r.x, r.attended, r.v, r.visits, r.likes, r.rating_after)))
        for r in summary.trace
    ]
    return dumps({"params": params, "summary": summary_dict(summary, seed), "trace": records})


# --- grids -------------------------------------------------------------------


def grid_to_dict(result: GridResult) -> dict:
    return {
        "spec": result.spec.to_dict(),
        "seed": result.master_seed,
        "alphas": [float(a) for a in result.spec.alphas],
        "rhos": [float(r) for r in result.spec.rhos],
        "matrix": _matrix_to_list(result.matrix),
        "stderr": _matrix_to_list(result.stderr),
        "errors": [[e.alpha_index, e.rho_index, e.message] for e in result.errors],
    }


def grid_from_dict(data: dict) -> GridResult:
    return GridResult(
        spec=GridSpec.from_dict(data["spec"]),
        matrix=_matrix_from_list(data["matrix"]),
        stderr=_matrix_from_list(data["stderr"]),
        master_seed=int(data["seed"]),
        errors=[CellError(int(i), int(j), str(msg)) for i, j, msg in data.get("errors", [])],
    )


def grid_json(result: GridResult) -> str:
    return dumps(grid_to_dict(result))


def grid_from_json(text: str) -> GridResult:
    return grid_from_dict(json.loads(text))


def grid_csv(result: GridResult) -> str:
    """Long form, one row per cell, alpha-major with both axes ascending."""
    alphas, rhos = result.spec.alphas, result.spec.rhos
    rows = (
        (alphas[i], rhos[j], result.matrix[i, j], result.stderr[i, j])
        for i in range(len(alphas))
        for j in range(len(rhos))
    )
    return csv_text(GRID_COLUMNS, rows)


def read_grid_csv(text: str):
    """Parse :func:`grid_csv` output into (alphas, rhos, matrix, stderr)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    alphas = sorted({float(r["alpha"]) for r in rows})
    rhos = sorted({float(r["rho"]) for r in rows})
    ai = {a: k for k, a in enumerate(alphas)}
    ri = {r: k for k, r in enumerate(rhos)}
    matrix = np.full((len(alphas), len(rhos)), math.nan)
    stderr = np.full_like(matrix, math.nan)
    for r in rows:
        i, j = ai[float(r["alpha"])], ri[float(r["rho"])]
        matrix[i, j] = float(r["value"]) if r["value"] else math.nan
        stderr[i, j] = float(r["stderr"]) if r["stderr"] else math.nan
    return np.array(alphas), np.array(rhos), matrix, stderr


# --- trajectories --------------------------------------------------------------


def trajectory_csv(traj: Trajectory, per_trial: bool = False) -> str:
    if per_trial:
        rows = (
            (t, c, traj.ratings[t, k])
            for t in range(traj.ratings.shape[0])
            for k, c in enumerate(traj.checkpoints)
        )
        return csv_text(["trial", "checkpoint", "rating"], rows)
    trials = traj.ratings.shape[0]
    rows = (
        (c, traj.mean[k], traj.survivor_mean[k], traj.survivors[k], trials)
        for k, c in enumerate(traj.checkpoints)
    )
    return csv_text(["checkpoint", "mean_rating", "survivor_mean_rating", "survivors", "trials"], rows)


def trajectory_json(traj: Trajectory, seed: int, params: dict, per_trial: bool = False) -> str:
    out = {
        "params": params,
        "seed": seed,
        "trials": int(traj.ratings.shape[0]),
        "checkpoints": list(traj.checkpoints),
        "mean_rating": [_nullable(v) for v in traj.mean],
        "survivor_mean_rating": [_nullable(v) for v in traj.survivor_mean],
        "survivors": [int(v) for v in traj.survivors],
    }
    if per_trial:
        out["ratings"] = _matrix_to_list(traj.ratings)
    return dumps(out)
