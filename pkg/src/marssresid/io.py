"""Model JSON and data/result CSV formats."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .model import PARAMS, ModelSpec, ObservationSet

MISSING_TOKENS = {"", "na", "nan"}
MODEL_KEYS = ("m", "n", "T", "B", "u", "Q", "Z", "a", "R", "x0", "V0")


class InputFormatError(ValueError):
    def __init__(self, path, message: str, line: int | None = None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _reshape_param(path, name, value, spec_shape, T):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputFormatError(path, f"parameter {name!r} is not a numeric array: {exc}") from None
    single = tuple(spec_shape)
    if arr.shape == single or (len(single) == 1 and arr.shape == (single[0], 1)):
        return arr.reshape(single)
    if arr.shape == (T,) + single or (len(single) == 1 and arr.shape == (T, single[0], 1)):
        return arr.reshape((T,) + single)
    raise InputFormatError(
        path, f"parameter {name!r} has shape {arr.shape}; expected {single} or {(T,) + single}"
    )


def load_model(path) -> ModelSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(path, f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    except OSError as exc:
        raise InputFormatError(path, f"cannot read file: {exc.strerror}") from None
    if not isinstance(doc, dict):
        raise InputFormatError(path, "top level must be an object")
    missing = [k for k in MODEL_KEYS if k not in doc]
    if missing:
        raise InputFormatError(path, f"missing keys: {', '.join(missing)}")
    try:
        m, n, T = int(doc["m"]), int(doc["n"]), int(doc["T"])
    except (TypeError, ValueError):
        raise InputFormatError(path, "m, n and T must be integers") from None
    if min(m, n, T) < 1:
        raise InputFormatError(path, "m, n and T must be positive")
    shapes = {"B": (m, m), "u": (m,), "Q": (m, m), "Z": (n, m), "a": (n,), "R": (n, n)}
    kw = {name: _reshape_param(path, name, doc[name], shapes[name], T) for name in PARAMS}
    x0 = _reshape_param(path, "x0", doc["x0"], (m,), 1)
    V0 = _reshape_param(path, "V0", doc["V0"], (m, m), 1)
    return ModelSpec(xi=x0, Lambda=V0, horizon=T, **kw)


def model_to_dict(spec: ModelSpec) -> dict:
    doc = {"m": spec.num_states, "n": spec.num_obs, "T": spec.horizon}
    for name in PARAMS:
        doc[name] = getattr(spec, name).tolist()
    doc["x0"] = spec.xi.tolist()
    doc["V0"] = spec.Lambda.tolist()
    return doc


def save_model(spec: ModelSpec, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(spec), indent=2) + "\n")


def load_data(path, n: int | None = None, T: int | None = None) -> ObservationSet:
    """Read the data CSV: header row, then ``t, y1, ..., yn`` with t = 1..T."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputFormatError(path, f"cannot read file: {exc.strerror}") from None
    if not rows:
        raise InputFormatError(path, "empty file", line=1)
    width = len(rows[0])
    if width < 2:
        raise InputFormatError(path, "header needs a time column and at least one series", line=1)
    if n is not None and width - 1 != n:
        raise InputFormatError(path, f"header has {width - 1} series; model has n={n}", line=1)
    values, mask = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise InputFormatError(path, f"expected {width} fields, found {len(row)}", line=lineno)
        try:
            t = int(row[0])
        except ValueError:
            raise InputFormatError(path, f"time value {row[0]!r} is not an integer", line=lineno) from None
        if t != len(values) + 1:
            raise InputFormatError(path, f"expected time {len(values) + 1}, found {t}", line=lineno)
        vals, obs = [], []
        for cell in row[1:]:
            cell = cell.strip()
            if cell.lower() in MISSING_TOKENS:
                vals.append(0.0)
                obs.append(False)
                continue
            try:
                x = float(cell)
            except ValueError:
                raise InputFormatError(path, f"cannot parse value {cell!r}", line=lineno) from None
            if not math.isfinite(x):
                raise InputFormatError(path, f"non-finite value {cell!r}", line=lineno)
            vals.append(x)
            obs.append(True)
        values.append(vals)
        mask.append(obs)
    if not values:
        raise InputFormatError(path, "no data rows")
    if T is not None and len(values) != T:
        raise InputFormatError(path, f"data has {len(values)} time steps; model has T={T}")
    return ObservationSet(np.array(values).T, np.array(mask).T)


def save_data(obs: ObservationSet, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t"] + [f"y{i + 1}" for i in range(obs.n)])
        for t in range(obs.T):
            cells = [fmt(obs.y[i, t]) if obs.mask[i, t] else "NA" for i in range(obs.n)]
            out.writerow([t + 1] + cells)


RESIDUAL_COLUMNS = ("t", "series", "type", "value", "variance", "std_value", "outlier")


def write_residuals(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(RESIDUAL_COLUMNS)
        for t, series, kind, value, var, std, flag in rows:
            out.writerow([t, series, kind, fmt(value), fmt(var), fmt(std), "true" if flag else "false"])


def read_residuals(path) -> list[tuple]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            (
                int(r["t"]),
                r["series"],
                r["type"],
                float(r["value"]),
                float(r["variance"]),
                float(r["std_value"]),
                r["outlier"] == "true",
            )
            for r in reader
        ]


def write_sigma(path, sigma: np.ndarray, labels: list[str], present=None) -> None:
    """Long format: one line per (t, row, col) entry.

    ``present`` optionally lists, per t, how many leading labels exist.
    """
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "row", "col", "value"])
        for i, s in enumerate(sigma):
            k = len(labels) if present is None else present[i]
            for r in range(k):
                for c in range(k):
                    out.writerow([i + 1, labels[r], labels[c], fmt(s[r, c])])


def read_sigma(path, labels: list[str], T: int) -> np.ndarray:
    pos = {lab: i for i, lab in enumerate(labels)}
    out = np.zeros((T, len(labels), len(labels)))
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out[int(r["t"]) - 1, pos[r["row"]], pos[r["col"]]] = float(r["value"])
    return out
