"""File formats.

System files hold ``{"n", "map", "mass"}``, vector files ``{"values"}`` and
partition files ``{"blocks"}``.  Reals are written with 17 significant digits
so every double round-trips exactly; non-finite values use the JavaScript
spellings ``Infinity``/``-Infinity``/``NaN`` that :mod:`json` reads back.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .dynsys import FiniteDynSystem, ValidationError, check_vector, validate_system
from .measures import check_measure
from .partitions import PartitionOfUnity

MEASURE_LOAD_TOL = 1e-9


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON text with 17-digit reals."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(_plain(v), (int, float)) and not isinstance(_plain(v), bool) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(obj, path: str | Path | None) -> str:
    text = dumps(obj) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def write_csv(rows: list, path: str | Path | None, columns=None) -> str:
    if not rows:
        return ""
    columns = columns or list(rows[0])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row[c]) for c in columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _csv_cell(v):
    v = _plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_csv_cell(x) for x in v)
    return v


def _read(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    return obj


def _field(obj, name, path):
    if name not in obj:
        raise ValidationError(f"{path}: missing field {name!r}")
    return obj[name]


def system_from_dict(obj: dict, where="system") -> FiniteDynSystem:
    n = _field(obj, "n", where)
    amap = _field(obj, "map", where)
    mass = _field(obj, "mass", where)
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValidationError(f"{where}: n must be an integer")
    if not isinstance(amap, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in amap):
        raise ValidationError(f"{where}: map must be an array of integers")
    if not isinstance(mass, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in mass):
        raise ValidationError(f"{where}: mass must be an array of reals")
    sys = FiniteDynSystem(n, np.array(amap, dtype=np.int64), np.array(mass, dtype=float))
    validate_system(sys)
    return sys


def system_to_dict(sys: FiniteDynSystem) -> dict:
    return {"n": sys.n, "map": [int(v) for v in sys.map], "mass": [float(v) for v in sys.mass]}


def load_system(path) -> FiniteDynSystem:
    return system_from_dict(_read(path), str(path))


def save_system(sys: FiniteDynSystem, path) -> str:
    return write_json(system_to_dict(sys), path)


def load_vector(path, sys: FiniteDynSystem | None = None) -> np.ndarray:
    obj = _read(path)
    values = _field(obj, "values", path)
    if not isinstance(values, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ValidationError(f"{path}: values must be an array of reals")
    v = np.array(values, dtype=float)
    if sys is not None:
        v = check_vector(sys, v, str(path))
    return v


def save_vector(values, path) -> str:
    return write_json({"values": [float(v) for v in values]}, path)


def load_measure(path, sys: FiniteDynSystem) -> np.ndarray:
    v = load_vector(path, sys)
    check_measure(sys, v, tol=MEASURE_LOAD_TOL)
    return v / v.sum()


def load_partition(path, sys: FiniteDynSystem) -> PartitionOfUnity:
    obj = _read(path)
    blocks = _field(obj, "blocks", path)
    if not isinstance(blocks, list) or not all(isinstance(b, list) for b in blocks):
        raise ValidationError(f"{path}: blocks must be an array of arrays")
    return PartitionOfUnity.from_blocks(blocks, sys.n)


def save_partition(P: PartitionOfUnity, path) -> str:
    return write_json({"blocks": P.blocks()}, path)


def random_system(rng: np.random.Generator, n: int, kind: str = "random", unit_mass: bool = False) -> FiniteDynSystem:
    """Uniform random self-map or permutation; masses log-uniform on [0.5, 2]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "random":
        amap = rng.integers(0, n, size=n)
    elif kind == "permutation":
        amap = rng.permutation(n)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if unit_mass:
        mass = np.ones(n)
    else:
        mass = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=n))
    sys = FiniteDynSystem(n, amap, mass)
    validate_system(sys)
    return sys
