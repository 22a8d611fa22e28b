"""
Artifact writers for the runner.

Every file is written to a temporary sibling and renamed into place, so a
reader never sees a partial artifact. CSV files open with one metadata
comment line; JSON reports carry the same fields under "metadata".

Floats are written with 17 significant digits, so identical inputs give
byte-identical files.
"""

import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def format_float(value: float) -> str:
    """17 significant digits; infinities as 'inf' / '-inf'."""
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def config_hash(text: str) -> str:
    """SHA-256 of the raw configuration text."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def metadata_line(metadata: dict) -> str:
    """'# key=value,key=value' in sorted key order."""
    return "# " + ",".join(f"{k}={metadata[k]}" for k in sorted(metadata))


def atomic_write_text(path, text: str) -> Path:
    """
    Write text to path through a temporary file in the same directory.

    Returns:
        The final path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"wrote {path}")
    return path


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(
    path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: Optional[dict] = None,
) -> Path:
    """
    CSV with a metadata comment line, a header row and LF line endings.
    """
    buffer = io.StringIO()
    if metadata:
        buffer.write(metadata_line(metadata) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
        writer.writerow([_cell(v) for v in row])
    return atomic_write_text(path, buffer.getvalue())


def to_jsonable(value: Any) -> Any:
    """
    Plain JSON types: numpy scalars and arrays unwrapped, infinities as
    strings, NaN as null, complex as {"re", "im"}.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_jsonable(value.real), "im": to_jsonable(value.imag)}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def dumps_json(payload: dict) -> str:
    """Stable JSON text: sorted keys, repr-exact floats, no NaN."""
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, payload: dict, metadata: Optional[dict] = None) -> Path:
    """JSON report; metadata goes under the "metadata" key."""
    document = dict(payload)
    if metadata:
        document["metadata"] = dict(metadata)
    return atomic_write_text(path, dumps_json(document))
