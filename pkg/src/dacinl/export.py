"""CSV / JSON / raw-binary writers for the data products.

CSV: comma separated, '.' decimal point, LF line endings, one header row,
optional leading ``#`` comment lines. Floats are written with ``repr`` so
they parse back to the identical double. JSON documents carry
``"schema": 1`` at the top level.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

SCHEMA_VERSION = 1


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def to_csv(header, rows, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) else v
    if isinstance(v, np.integer):
        return int(v)
    return v


def to_json(payload: dict) -> str:
    doc = {"schema": SCHEMA_VERSION, **payload}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"


def curve_rows(outputs: np.ndarray, dnl: np.ndarray, inl: np.ndarray):
    """Rows (k, i_out, dnl, inl); DNL is undefined at code 0."""
    for k in range(outputs.size):
        yield (k, outputs[k], None if k == 0 else dnl[k - 1], inl[k])


def curve_csv(outputs, dnl, inl, comments=()) -> str:
    return to_csv(["k", "i_out", "dnl", "inl"], curve_rows(outputs, dnl, inl), comments)


def curve_json(outputs, dnl, inl, architecture: str, inl_max: float) -> str:
    return to_json({
        "kind": "transfer_curve",
        "architecture": architecture,
        "inl_max": inl_max,
        "k": list(range(len(outputs))),
        "i_out": outputs,
        "dnl": [None, *list(dnl)],
        "inl": inl,
    })


def write_raw_samples(path, samples: np.ndarray) -> None:
    """Flat little-endian float64 array, no header."""
    np.asarray(samples, dtype="<f8").tofile(path)


def read_raw_samples(path) -> np.ndarray:
    return np.fromfile(path, dtype="<f8")
