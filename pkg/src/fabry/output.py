"""CSV/JSON serialisation with full-precision, deterministic formatting."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from fabry.eigenmode import EigenmodeProfile
from fabry.solver import SweepTable

SWEEP_COLUMNS = [
    "branch_id", "kind", "lambda_re", "lambda_im", "delta",
    "k_num_re", "k_num_im", "k_asym_re", "k_asym_im", "abs_err", "residual",
]
MODE_COLUMNS = ["x", "u_re", "u_im", "interval_index", "classification"]


def fmt(x: float) -> str:
    """17 significant digits in scientific notation."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.16e}"


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2) + "\n"


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def sweep_csv(table: SweepTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in table.rows:
        w.writerow([
            r.branch_id, r.kind, fmt(r.lam.real), fmt(r.lam.imag), fmt(r.delta),
            fmt(r.k_num.real), fmt(r.k_num.imag), fmt(r.k_asym.real), fmt(r.k_asym.imag),
            fmt(r.abs_err), fmt(r.residual),
        ])
    return buf.getvalue()


def read_sweep_csv(path: str | Path) -> list[dict[str, Any]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        rec: dict[str, Any] = {"branch_id": int(row["branch_id"]), "kind": row["kind"]}
        for key in SWEEP_COLUMNS[2:]:
            rec[key] = float(row[key])
        out.append(rec)
    return out


def mode_csv(profile: EigenmodeProfile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MODE_COLUMNS)
    for x, u, j, c in profile.rows():
        w.writerow([fmt(x), fmt(u.real), fmt(u.imag), j, c])
    return buf.getvalue()


def read_mode_csv(path: str | Path) -> list[dict[str, Any]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {
            "x": float(r["x"]),
            "u_re": float(r["u_re"]),
            "u_im": float(r["u_im"]),
            "interval_index": int(r["interval_index"]),
            "classification": r["classification"],
        }
        for r in rows
    ]


def detect_csv_kind(path: str | Path) -> str:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    if header == SWEEP_COLUMNS:
        return "sweep"
    if header == MODE_COLUMNS:
        return "mode"
    raise ValueError(f"{path}: unrecognised CSV header {header}")
