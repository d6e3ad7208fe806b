"""CSV embedding/label files and JSON report documents."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import Any, Iterable

import numpy as np

from .metricspace import PointSet


class FormatError(ValueError):
    pass


def _data_lines(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def parse_embeddings(text: str, source: str = "<embeddings>") -> PointSet:
    rows = list(csv.reader(_data_lines(text)))
    if not rows:
        raise FormatError(f"{source}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "id":
        raise FormatError(f"{source}: header must be 'id,f0,f1,...'")
    ids, values = [], []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"{source}: row {n} has {len(row)} columns, expected {len(header)}")
        ids.append(row[0].strip())
        try:
            values.append([float(v) for v in row[1:]])
        except ValueError:
            raise FormatError(f"{source}: row {n} has a non-numeric value") from None
    if not ids:
        raise FormatError(f"{source}: no data rows")
    try:
        return PointSet(np.array(values, dtype=np.float64), tuple(ids))
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from None


def read_embeddings(path: str | os.PathLike) -> PointSet:
    with open(path, encoding="utf-8") as fh:
        return parse_embeddings(fh.read(), os.fspath(path))


def format_embeddings(P: PointSet, footer: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id"] + [f"f{j}" for j in range(P.dim)])
    for pid, row in zip(P.ids, P.points):
        w.writerow([pid] + [repr(float(v)) for v in row])
    for line in footer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def parse_labels(text: str, source: str = "<labels>") -> dict[str, str]:
    rows = list(csv.reader(_data_lines(text)))
    if not rows or [h.strip() for h in rows[0]] != ["id", "label"]:
        raise FormatError(f"{source}: header must be 'id,label'")
    out: dict[str, str] = {}
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise FormatError(f"{source}: row {n} must have 2 columns")
        key = row[0].strip()
        if key in out:
            raise FormatError(f"{source}: duplicate id {key!r}")
        out[key] = row[1].strip()
    return out


def read_labels(path: str | os.PathLike) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_labels(fh.read(), os.fspath(path))


def round_sig(x: float, digits: int = 12) -> float:
    if x is None or not math.isfinite(x) or x == 0:
        return x
    return float(f"{x:.{digits}g}")


def _normalise(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _normalise(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalise(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not math.isfinite(x) else round_sig(x)
    return obj


def dump_report(obj: Any) -> str:
    """Deterministic JSON text; floats rounded to 12 significant digits, NaN/Inf as null."""
    return json.dumps(_normalise(obj), indent=2, allow_nan=False) + "\n"


def load_report(text: str) -> Any:
    return json.loads(text)


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory and rename into place."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
