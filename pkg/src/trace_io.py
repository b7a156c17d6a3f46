"""Reading and writing traces, path files and JSON reports.

Trace CSV layout: header ``eta,intensity`` or ``eta,intensity,counts_up,shots``,
floats at 17 significant digits, LF line endings. Count traces store the
empirical frequency counts_up/shots in the intensity column.
"""

import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import pandas as pd
import yaml

from errors import DomainError, TraceFormatError
from polarimeter import CountTrace, IntensityTrace
from theory import GeodesicPath

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["eta", "intensity"]
COUNT_COLUMNS = ["counts_up", "shots"]
UNIT_TOL = 1e-9


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write text to a sibling temp file, then rename it over the target."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target


def trace_frame(trace: IntensityTrace | CountTrace) -> pd.DataFrame:
    if isinstance(trace, CountTrace):
        return pd.DataFrame(
            {
                "eta": trace.etas,
                "intensity": trace.frequencies(),
                "counts_up": trace.counts_up,
                "shots": np.full(trace.etas.size, trace.shots, dtype=np.int64),
            }
        )
    return pd.DataFrame({"eta": trace.etas, "intensity": trace.intensities})


def write_trace_csv(trace: IntensityTrace | CountTrace, path: str | Path) -> Path:
    """Write a trace losslessly (17 significant digits)."""
    text = trace_frame(trace).to_csv(index=False, float_format="%.17g", lineterminator="\n")
    target = atomic_write_text(path, text)
    logger.info("Wrote %d trace points to %s", len(trace.etas), target)
    return target


def read_trace_csv(path: str | Path, refine_tol: float = 1e-10) -> IntensityTrace | CountTrace:
    """Read a trace written by write_trace_csv.

    Returns:
        A CountTrace when count columns are present, an IntensityTrace otherwise

    Raises:
        TraceFormatError: On a missing file, wrong header or invalid values

    """
    source = Path(path)
    try:
        df = pd.read_csv(source, float_precision="round_trip")
    except FileNotFoundError as e:
        raise TraceFormatError(f"trace file not found: {source}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise TraceFormatError(f"cannot parse {source}: {e}") from e

    columns = list(df.columns)
    if columns not in (TRACE_COLUMNS, TRACE_COLUMNS + COUNT_COLUMNS):
        raise TraceFormatError(f"{source}: unexpected header {','.join(map(str, columns))}")
    if df.isna().to_numpy().any():
        raise TraceFormatError(f"{source}: missing values")

    try:
        if columns == TRACE_COLUMNS:
            return IntensityTrace(
                df["eta"].to_numpy(dtype=float), df["intensity"].to_numpy(dtype=float), refine_tol=refine_tol
            )
        shots = df["shots"].unique()
        if shots.size != 1:
            raise TraceFormatError(f"{source}: shots must be the same on every row")
        return CountTrace(df["eta"].to_numpy(dtype=float), df["counts_up"].to_numpy(dtype=np.int64), int(shots[0]))
    except ValueError as e:
        raise TraceFormatError(f"{source}: {e}") from e


def read_path_file(path: str | Path) -> GeodesicPath:
    """Read a geodesic path from a YAML or JSON mapping with a ``vertices`` list.

    Vertices within 1e-9 of unit length are normalised; anything else is rejected.

    Raises:
        TraceFormatError: On a malformed file
        AmbiguousGeodesicError: If consecutive vertices are antipodal

    """
    source = Path(path)
    try:
        raw = yaml.safe_load(source.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise TraceFormatError(f"path file not found: {source}") from e
    except yaml.YAMLError as e:
        raise TraceFormatError(f"cannot parse {source}: {e}") from e
    if not isinstance(raw, dict) or not isinstance(raw.get("vertices"), list):
        raise TraceFormatError(f"{source}: expected a mapping with a 'vertices' list")

    vertices = []
    for k, item in enumerate(raw["vertices"]):
        try:
            vec = np.asarray(item, dtype=float)
        except (TypeError, ValueError) as e:
            raise TraceFormatError(f"{source}: vertex {k} is not numeric") from e
        if vec.shape != (3,) or not np.all(np.isfinite(vec)):
            raise TraceFormatError(f"{source}: vertex {k} must be three finite numbers")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > UNIT_TOL:
            raise TraceFormatError(f"{source}: vertex {k} has length {norm:.12g}, expected 1")
        vertices.append(vec / norm)

    try:
        return GeodesicPath.from_vertices(vertices)
    except DomainError as e:
        raise TraceFormatError(f"{source}: {e}") from e


def _check_finite(value: Any, where: str = "$") -> None:
    if isinstance(value, float) and not math.isfinite(value):
        raise DomainError(f"non-finite value at {where}")
    if isinstance(value, dict):
        for key, item in value.items():
            _check_finite(item, f"{where}.{key}")
    elif isinstance(value, list | tuple):
        for i, item in enumerate(value):
            _check_finite(item, f"{where}[{i}]")


def dumps_json(payload: dict[str, Any]) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, trailing newline."""
    _check_finite(payload)
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(payload: dict[str, Any], path: str | Path | None = None, stream: TextIO | None = None) -> str:
    """Write a report to a file (atomically) or a stream, returning the text written."""
    text = dumps_json(payload)
    if path is not None:
        target = atomic_write_text(path, text)
        logger.info("Wrote report to %s", target)
    else:
        (stream or sys.stdout).write(text)
    return text
