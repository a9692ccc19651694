"""Reference set-ups shared by the CLI, the experiment scripts and the tests."""

from __future__ import annotations

import numpy as np

from .distributions import MildDistribution, TransportField, continuity_field
from .functions import polynomial_battery
from .geometry import FourierForm
from .lagrangians import CATALOGUE, Lagrangian
from .measures import AtomicMeasure, Cell
from .optimize import LPSolution, MeasureLP, assemble, solve, unit_velocities
from .variations import TrigVectorField, horizontal_distribution


def lagrangian_from_config(cfg: dict | str, d: int = 2) -> Lagrangian:
    """{name: ..., beta: ..., stretch: [...], potential: [{axes, freq, phase, coeff}, ...]}."""
    if isinstance(cfg, str):
        cfg = {"name": cfg}
    name = cfg.get("name", "mechanical")
    if name not in CATALOGUE:
        raise ValueError(f"unknown Lagrangian {name!r}; choose from {sorted(CATALOGUE)}")
    potential = None
    if cfg.get("potential"):
        terms = [{"axes": [], **t} for t in cfg["potential"]]
        potential = FourierForm.from_json({"degree": 0, "d": d, "terms": terms})
    if name == "mechanical":
        return CATALOGUE[name](potential)
    if name == "sock":
        return CATALOGUE[name](float(cfg.get("beta", 1.0)), potential)
    if name == "volume":
        return CATALOGUE[name](cfg.get("stretch"), potential)
    return CATALOGUE[name]()


def velocity_set(spec, d: int, n: int) -> np.ndarray:
    """{unit: k} for k planar unit vectors, or an explicit list of fibers."""
    if isinstance(spec, dict) and "unit" in spec:
        if n != 1:
            raise ValueError("unit velocity sets are for n = 1")
        return unit_velocities(int(spec["unit"]), d)
    return np.asarray(spec, dtype=float).reshape(-1, n, d)


def homological_mechanical(N: int = 8, K: int = 2, count: int = 16, method: str = "highs") -> tuple[MeasureLP, LPSolution]:
    """Mechanical L with V = 0 on T^2, class (1, 0), planar unit velocity set; optimum 1/2."""
    from .lagrangians import Mechanical

    lp = assemble(2, 1, N, unit_velocities(count), Mechanical(), K, homology_target=(1.0, 0.0))
    return lp, solve(lp, method)


def patch_measure(m: int = 16, lo: float = 0.25, hi: float = 0.75, fiber=(1.0, 0.0)) -> AtomicMeasure:
    """Uniform probability on an m x m grid over [lo, hi]^2 with a fixed fiber."""
    s = lo + (hi - lo) * (np.arange(m) + 0.5) / m
    x = np.stack(np.meshgrid(s, s, indexing="ij"), axis=-1).reshape(-1, 2)
    v = np.broadcast_to(np.asarray(fiber, dtype=float), (len(x), 1, 2)).copy()
    return AtomicMeasure(x, v, np.full(len(x), 1.0 / len(x)))


def translation(mu: AtomicMeasure, direction) -> MildDistribution:
    """Tangent distribution of mu moved by the constant base field ``direction``."""
    return horizontal_distribution(mu, TrigVectorField.constant(direction))


def transport_recovery(m: int = 16, direction=(1.0, 0.0), degree: int = 2, tol: float = 1e-6) -> tuple[AtomicMeasure, TransportField]:
    mu = patch_measure(m)
    centre = np.concatenate([[0.5, 0.5], mu.v[0, 0]])
    tests = polynomial_battery(centre, degree)
    return mu, continuity_field(mu, translation(mu, direction), tests, tol)


def sinusoid_cell(a: float = 0.1, cells: int = 400) -> Cell:
    """gamma(t) = (t, a sin(2 pi t))."""
    return Cell.from_function(lambda t: np.concatenate([t, a * np.sin(2 * np.pi * t)], axis=-1), cells)


def straight_cell(cells: int = 50, height: float = 0.3, slope: float = 0.0) -> Cell:
    return Cell.from_function(lambda t: np.concatenate([t, height + slope * t], axis=-1), cells)
