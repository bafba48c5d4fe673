"""Operator files and report serialization.

Operators are stored as ``{"dim": d, "entries": [[re, im], ...]}`` with the
``d*d`` entries in row-major order. Floats are written with ``repr`` so a
load after a dump reproduces every entry exactly.
"""

import csv
import io
import json
import math
from dataclasses import asdict, is_dataclass

import numpy as np

from .operator_core import as_hermitian

LOG2 = math.log(2.0)


class OperatorFormatError(ValueError):
    pass


def operator_to_dict(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise OperatorFormatError(f"expected a square matrix, got shape {a.shape}")
    return {
        "dim": int(a.shape[0]),
        "entries": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }


def operator_from_dict(obj, check_hermitian=True):
    try:
        dim = int(obj["dim"])
        entries = obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise OperatorFormatError("operator JSON needs integer 'dim' and list 'entries'") from exc
    if dim < 1 or len(entries) != dim * dim:
        raise OperatorFormatError(f"'entries' must hold dim*dim = {dim * dim} values, got {len(entries)}")
    try:
        flat = np.array([complex(float(re), float(im)) for re, im in entries])
    except (TypeError, ValueError) as exc:
        raise OperatorFormatError("each entry must be a [re, im] pair of numbers") from exc
    a = flat.reshape(dim, dim)
    if check_hermitian:
        as_hermitian(a)  # raises NotHermitianError naming the asymmetry
    return a


def load_operator(path):
    """Read a Hermitian operator from a JSON file."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise OperatorFormatError(f"{path}: malformed JSON ({exc.msg})") from exc
    return operator_from_dict(obj)


def dump_operator(a, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(operator_to_dict(a), fh)
        fh.write("\n")


def _jsonable(v):
    if is_dataclass(v) and not isinstance(v, type):
        return _jsonable(asdict(v))
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return v


def to_json(obj):
    """Deterministic JSON text; infinities become the strings ``"inf"``/``"-inf"``."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def convert_unit(value, unit):
    """Nats to the requested unit; non-finite values pass through."""
    if unit == "nats":
        return value
    if unit == "bits":
        return value / LOG2 if isinstance(value, float) and math.isfinite(value) else value
    raise ValueError(f"unknown unit {unit!r}")


def write_text(text, path=None, stream=None):
    if path is None or path == "-":
        stream.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
