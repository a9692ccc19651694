"""JSON / CSV serialization of measures, distributions and reports."""

from __future__ import annotations

import csv
import json
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from .measures import MILD_METRIC_VERSION, AtomicMeasure, holonomy_residual

FORMAT_VERSION = 1


class ValidationError(ValueError):
    pass


def measure_to_json(mu: AtomicMeasure, K: int | None = None, **header) -> dict:
    obj = {"format": FORMAT_VERSION, "metric": MILD_METRIC_VERSION, **header, "d": mu.d, "n": mu.n}
    if K is not None:
        obj["K"] = K
    obj["atoms"] = [
        {"x": x.tolist(), "v": v.tolist(), "w": float(w)} for x, v, w in zip(mu.x, mu.v, mu.w)
    ]
    return obj


def measure_from_json(obj: dict, validate: bool = True, tol: float = 1e-8) -> AtomicMeasure:
    """Rebuild a measure; with ``validate`` a probability measure must pass the holonomy re-check at its stored K."""
    atoms = obj["atoms"]
    d, n = int(obj["d"]), int(obj["n"])
    if atoms:
        mu = AtomicMeasure(
            np.array([a["x"] for a in atoms], dtype=float).reshape(-1, d),
            np.array([a["v"] for a in atoms], dtype=float).reshape(-1, n, d),
            np.array([a["w"] for a in atoms], dtype=float),
        )
    else:
        mu = AtomicMeasure.empty(d, n)
    if validate:
        if abs(mu.total_weight - 1.0) > 1e-10:
            raise ValidationError(f"total weight {mu.total_weight!r} is not 1")
        K = int(obj.get("K", 0))
        res = holonomy_residual(mu, K)
        if len(res) and np.max(np.abs(res)) > tol:
            raise ValidationError(f"holonomy residual {np.max(np.abs(res)):.3e} exceeds {tol:g} at K={K}")
    return mu


def measure_csv_rows(mu: AtomicMeasure) -> tuple[list[str], list[list[float]]]:
    """Header x_1..x_d, v_11..v_nd, w and one row per atom."""
    header = [f"x_{k + 1}" for k in range(mu.d)]
    header += [f"v_{i + 1}{k + 1}" for i in range(mu.n) for k in range(mu.d)]
    rows = [[*map(float, x), *map(float, v.ravel()), float(w)] for x, v, w in zip(mu.x, mu.v, mu.w)]
    return header + ["w"], rows


def write_measure_csv(path: str | Path, mu: AtomicMeasure, seed: int | None = None) -> None:
    write_csv(path, *measure_csv_rows(mu), seed=seed)


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def read_json(path: str | Path):
    return json.loads(Path(path).read_text())


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], seed: int | None = None) -> None:
    """Comma separated, LF endings, floats in repr form; an optional '# seed=' first line."""
    with open(path, "w", newline="") as fh:
        if seed is not None:
            fh.write(f"# seed={seed}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(c)) if isinstance(c, (float, np.floating)) else c for c in row])


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
