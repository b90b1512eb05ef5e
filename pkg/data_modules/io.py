"""CSV/JSON artifacts of the command-line tools.

Floats are written with ``repr`` (shortest round-trip form), so reading a file
back reproduces every 64-bit value exactly. All files are UTF-8 with LF line
endings.
"""
import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from models.basis import BasisSpec
from models.errors import InputFormatError
from models.params import ParamBlocks, is_vertex

VERSION = "0.1.0"
PathLike = Union[str, Path]


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_matrix(path: PathLike) -> np.ndarray:
    """n x d matrix from a CSV file with an optional header row."""
    path = Path(path)
    if not path.is_file():
        raise InputFormatError(f"No such file: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    if rows and not all(_is_number(cell) for cell in rows[0]):
        rows = rows[1:]
    if not rows:
        raise InputFormatError(f"{path} has no data rows")
    width = len(rows[0])
    values = []
    for line, row in enumerate(rows, start=1):
        if len(row) != width:
            raise InputFormatError(f"{path}: row {line} has {len(row)} fields, expected {width}")
        try:
            parsed = [float(cell) for cell in row]
        except ValueError as exc:
            raise InputFormatError(f"{path}: row {line} is not numeric ({exc})") from exc
        if not all(math.isfinite(v) for v in parsed):
            raise InputFormatError(f"{path}: row {line} has a non-finite value")
        values.append(parsed)
    return np.asarray(values, dtype=float)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) for v in row])


def write_matrix(path: PathLike, matrix: np.ndarray, prefix: str = "x") -> None:
    matrix = np.atleast_2d(matrix)
    write_csv(path, [f"{prefix}{j}" for j in range(matrix.shape[1])], matrix.tolist())


def write_json(path: PathLike, payload: dict) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, allow_nan=False, default=_json_default)
        f.write("\n")


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def json_safe(value):
    """Replaces non-finite floats by None so the payload is strict JSON."""
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, (float, np.floating)) and not math.isfinite(value):
        return None
    return value


@dataclass
class RunManifest:
    """Provenance of one command run; ``created`` is the only non-reproducible field."""

    command: str
    config: dict
    seed: Optional[int] = None
    version: str = VERSION
    stages: Dict[str, float] = field(default_factory=dict)
    created: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S"))

    def stage(self, name: str, seconds: float) -> None:
        self.stages[name] = seconds

    def to_dict(self) -> dict:
        return json_safe(asdict(self))


def theta_to_dict(theta: ParamBlocks, basis: BasisSpec, lam: Optional[float],
                  manifest: Optional[RunManifest] = None) -> dict:
    payload = {}
    if manifest is not None:
        payload["manifest"] = manifest.to_dict()
    payload.update(
        d=theta.d,
        basis=basis.to_dict(),
        **{"lambda": lam},
        vertices={str(k): [float(v) for v in value] for k, value in theta.items() if is_vertex(k)},
        edges={f"{k[0]}-{k[1]}": [float(v) for v in value] for k, value in sorted(theta.items(), key=_edge_order)
               if not is_vertex(k)},
    )
    return payload


def _edge_order(item):
    key = item[0]
    return (0, key, 0) if is_vertex(key) else (1,) + tuple(key)


def theta_from_dict(payload: dict) -> ParamBlocks:
    try:
        basis = BasisSpec.from_dict(payload["basis"])
        d = int(payload["d"])
        theta = ParamBlocks(d, basis.vertex_dim, basis.edge_dim)
        for key, value in payload["vertices"].items():
            theta[int(key)] = value
        for key, value in payload["edges"].items():
            i, j = (int(v) for v in key.split("-"))
            theta[(i, j)] = value
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"Malformed parameter file: {exc}") from exc
    return theta


def write_theta(path: PathLike, theta: ParamBlocks, basis: BasisSpec, lam: Optional[float],
                manifest: Optional[RunManifest] = None) -> None:
    write_json(path, theta_to_dict(theta, basis, lam, manifest))


def read_theta(path: PathLike) -> ParamBlocks:
    with open(path, encoding="utf-8") as f:
        return theta_from_dict(json.load(f))


def edge_rows(theta: ParamBlocks) -> List[tuple]:
    return [(i, j, float(np.linalg.norm(theta[(i, j)]))) for i, j in sorted(theta.edge_keys())
            if np.any(theta[(i, j)] != 0)]


def write_edges(path: PathLike, theta: ParamBlocks) -> None:
    write_csv(path, ["i", "j", "group_norm"], edge_rows(theta))
