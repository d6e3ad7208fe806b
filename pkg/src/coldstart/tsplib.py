"""Minimal TSPLIB reader for EUC_2D node-coordinate instances."""
from __future__ import annotations

import gzip
import os
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .metricspace import PointSet

SUPPORTED_TYPES = ("EUC_2D",)


class TsplibError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class TspInstance:
    name: str
    dimension: int
    edge_weight_type: str
    coords: NDArray[np.float64]
    source_line_numbers: tuple[int, ...]


def _header(line: str) -> tuple[str, str]:
    if ":" in line:
        key, _, value = line.partition(":")
    else:
        key, _, value = line.strip().partition(" ")
    return key.strip().upper(), value.strip()


def parse_tsplib(text: str) -> TspInstance:
    if not isinstance(text, str):
        raise TsplibError(f"expected str, got {type(text).__name__}")
    name = ""
    dimension = None
    ewt = None
    nodes: dict[int, tuple[float, float, int]] = {}
    in_coords = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_coords:
            parts = line.split()
            if len(parts) == 1 and not parts[0].lstrip("+-").isdigit():
                # another section begins
                in_coords = False
            else:
                if len(parts) != 3:
                    raise TsplibError(f"expected 'index x y', got {line!r}", lineno)
                try:
                    idx = int(parts[0])
                    x, y = float(parts[1]), float(parts[2])
                except ValueError:
                    raise TsplibError(f"malformed node line {line!r}", lineno) from None
                if not (np.isfinite(x) and np.isfinite(y)):
                    raise TsplibError(f"non-finite coordinate in {line!r}", lineno)
                if idx in nodes:
                    raise TsplibError(f"duplicate node index {idx}", lineno)
                nodes[idx] = (x, y, lineno)
                continue
        key, value = _header(line)
        if key == "NODE_COORD_SECTION":
            if ewt is None:
                raise TsplibError("NODE_COORD_SECTION before EDGE_WEIGHT_TYPE", lineno)
            in_coords = True
        elif key == "NAME":
            name = value
        elif key == "DIMENSION":
            try:
                dimension = int(value)
            except ValueError:
                raise TsplibError(f"bad DIMENSION {value!r}", lineno) from None
            if dimension < 1:
                raise TsplibError(f"DIMENSION must be positive, got {dimension}", lineno)
        elif key == "EDGE_WEIGHT_TYPE":
            ewt = value.upper()
            if ewt not in SUPPORTED_TYPES:
                raise TsplibError(f"unsupported EDGE_WEIGHT_TYPE {value!r}", lineno)
        elif key.endswith("_SECTION"):
            raise TsplibError(f"unsupported section {key}", lineno)
        # other keys (TYPE, COMMENT, ...) are ignored

    if dimension is None:
        raise TsplibError("missing DIMENSION")
    if ewt is None:
        raise TsplibError("missing EDGE_WEIGHT_TYPE")
    if len(nodes) != dimension:
        raise TsplibError(f"DIMENSION is {dimension} but {len(nodes)} node lines were found")
    order = sorted(nodes)
    if order[0] != 1 or order[-1] != dimension:
        raise TsplibError(f"node indices must be 1..{dimension}, got {order[0]}..{order[-1]}")
    coords = np.array([nodes[i][:2] for i in order], dtype=np.float64)
    return TspInstance(name, dimension, ewt, coords, tuple(nodes[i][2] for i in order))


def load_tsplib(path: str | os.PathLike) -> TspInstance:
    """Read a .tsp (or .tsp.gz) file."""
    path = os.fspath(path)
    try:
        opener = gzip.open if path.endswith(".gz") else open
        with opener(path, "rb") as fh:
            data = fh.read()
    except (OSError, EOFError) as exc:
        raise TsplibError(f"cannot read {path}: {exc}") from None
    return parse_bytes(data)


def parse_bytes(data: bytes) -> TspInstance:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise TsplibError(f"not UTF-8 text: {exc}") from None
    return parse_tsplib(text)


def instance_to_pointset(inst: TspInstance) -> PointSet:
    return PointSet(inst.coords, tuple(str(i) for i in range(1, inst.dimension + 1)))


TSPLIB_DIR_ENV = "COLDSTART_TSPLIB_DIR"


def find_instance(name: str, search: list[str | os.PathLike] | None = None) -> str:
    """Path of ``name``.tsp or ``name``.tsp.gz in the search directories.

    By default looks in $COLDSTART_TSPLIB_DIR, then ./data/tsplib.
    """
    if search is None:
        search = [p for p in (os.environ.get(TSPLIB_DIR_ENV), os.path.join("data", "tsplib")) if p]
    for d in search:
        for suffix in (".tsp", ".tsp.gz"):
            path = os.path.join(os.fspath(d), name + suffix)
            if os.path.isfile(path):
                return path
    raise FileNotFoundError(
        f"TSPLIB instance {name!r} not found in {[os.fspath(d) for d in search]}; "
        f"download {name}.tsp and place it there or set {TSPLIB_DIR_ENV}"
    )
