"""Event CSV files and JSON model documents.

Events file::

    # horizon=12.5
    time,mark
    0.31,1
    ...

Marks are 1-based on disk and 0-based in memory.  Floats are written with
``repr`` so a write/parse round trip is exact.
"""
from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from .core import EventSequence, HawkesError, HawkesModel


def _atomic_write(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_events(seq: EventSequence) -> str:
    lines = [f"# horizon={seq.horizon!r}", "time,mark"]
    lines += [f"{t!r},{m + 1}" for t, m in zip(seq.times.tolist(), seq.marks.tolist())]
    return "\n".join(lines) + "\n"


def write_events(seq: EventSequence, path):
    _atomic_write(path, format_events(seq))


def parse_events(text: str, d: Optional[int] = None) -> EventSequence:
    horizon = None
    rows = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, _, value = stripped[1:].strip().partition("=")
            if key.strip() == "horizon":
                try:
                    horizon = float(value)
                except ValueError:
                    raise HawkesError(f"bad horizon comment: {line!r}") from None
            continue
        rows.append(stripped)
    if not rows or [c.strip() for c in rows[0].split(",")] != ["time", "mark"]:
        raise HawkesError("events file must start with the header 'time,mark'")
    times, marks = [], []
    for lineno, row in enumerate(csv.reader(rows[1:]), start=2):
        if len(row) != 2:
            raise HawkesError(f"row {lineno}: expected 2 columns, got {len(row)}")
        try:
            times.append(float(row[0]))
            mark = int(row[1])
        except ValueError:
            raise HawkesError(f"row {lineno}: cannot parse {row!r}") from None
        if mark < 1:
            raise HawkesError(f"row {lineno}: marks are 1-based, got {mark}")
        marks.append(mark - 1)
    if not times:
        raise HawkesError("events file contains no events")
    return EventSequence(np.array(times), np.array(marks, dtype=np.int64), horizon=horizon, d=d)


def read_events(path, d: Optional[int] = None) -> EventSequence:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise HawkesError(f"cannot read events file {path}: {exc}") from exc
    return parse_events(text, d=d)


def model_to_dict(model: HawkesModel, meta: Optional[dict] = None) -> dict:
    return {
        "d": model.d,
        "mu": model.mu.tolist(),
        "alpha": model.alpha.tolist(),
        "beta": model.beta.tolist(),
        "meta": dict(meta or {}),
    }


def model_from_dict(doc: dict) -> HawkesModel:
    try:
        d = int(doc["d"])
        model = HawkesModel(doc["mu"], doc["alpha"], doc["beta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise HawkesError(f"invalid model document: {exc}") from exc
    if model.d != d:
        raise HawkesError(f"model document declares d={d} but parameters have d={model.d}")
    return model


def write_model(model: HawkesModel, path, meta: Optional[dict] = None, **extra):
    doc = model_to_dict(model, meta)
    doc.update(extra)
    # json writes floats with repr, i.e. shortest round-tripping digits
    _atomic_write(path, json.dumps(doc, indent=2) + "\n")


def read_model(path) -> HawkesModel:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise HawkesError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise HawkesError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def write_json(obj, path):
    _atomic_write(path, json.dumps(obj, indent=2) + "\n")


def write_csv(header, rows, path):
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_signs(matrix, path):
    """d x d matrix of -1/0/+1 as a headerless CSV (row i = receiving dimension)."""
    signs = np.sign(np.asarray(matrix, dtype=float)).astype(int)
    _atomic_write(path, "\n".join(",".join(str(v) for v in row) for row in signs.tolist()) + "\n")


def read_signs(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", dtype=int, ndmin=2)
