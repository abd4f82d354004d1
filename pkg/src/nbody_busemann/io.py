"""File formats: configurations, mass systems, trajectories and result tables.

Every CSV starts with ``# schema v1``; every JSON object carries ``"schema": "v1"``.
Configuration files additionally carry ``# positions N=<N> d=<d>``.
"""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path

import numpy as np

from .core import MassSystem
from .pathopt import Trajectory

SCHEMA = "v1"
_POS_HEADER = re.compile(r"#\s*positions\s+N=(\d+)\s+d=(\d+)")


class FormatError(ValueError):
    pass


def _fmt(v: float) -> str:
    return repr(float(v))


def read_system(path) -> MassSystem:
    data = json.loads(Path(path).read_text())
    try:
        return MassSystem(tuple(float(m) for m in data["masses"]), int(data["dim"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: expected {{'masses': [...], 'dim': d}}") from exc


def write_system(path, sys: MassSystem) -> None:
    write_json(path, {"masses": list(sys.masses), "dim": sys.dim})


def read_configuration(path, sys: MassSystem | None = None) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    shape = None
    rows = []
    for line in lines:
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            m = _POS_HEADER.match(s)
            if m:
                shape = (int(m.group(1)), int(m.group(2)))
            continue
        rows.append([float(v) for v in s.split(",")])
    if shape is None:
        raise FormatError(f"{path}: missing '# positions N=<N> d=<d>' header")
    x = np.array(rows, dtype=float)
    if x.shape != shape:
        raise FormatError(f"{path}: header says {shape}, data has {x.shape}")
    return sys.check(x) if sys is not None else x


def configuration_text(x) -> str:
    x = np.asarray(x, dtype=float)
    out = [f"# positions N={x.shape[0]} d={x.shape[1]}", f"# schema {SCHEMA}"]
    out += [",".join(_fmt(v) for v in row) for row in x]
    return "\n".join(out) + "\n"


def write_configuration(path, x) -> None:
    Path(path).write_text(configuration_text(x))


def table_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema {SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_table(path, header, rows) -> None:
    Path(path).write_text(table_text(header, rows))


def read_table(path) -> tuple[list[str], list[list[float]]]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, [[float(v) for v in row] for row in reader]


def trajectory_rows(traj: Trajectory):
    header = ["t"] + [f"x{i}_{k}" for i in range(traj.points.shape[1]) for k in range(traj.points.shape[2])]
    rows = [[t, *p.reshape(-1)] for t, p in zip(traj.knots, traj.points)]
    return header, rows


def write_trajectory(path, traj: Trajectory) -> None:
    write_table(path, *trajectory_rows(traj))


def read_trajectory(path, shape) -> Trajectory:
    _, rows = read_table(path)
    data = np.array(rows)
    return Trajectory(data[:, 0], data[:, 1:].reshape(len(data), *shape))


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def json_text(obj: dict) -> str:
    obj = {"schema": SCHEMA, **{k: v for k, v in obj.items() if k != "schema"}}
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def write_json(path, obj: dict) -> None:
    Path(path).write_text(json_text(obj))
