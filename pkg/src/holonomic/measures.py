"""Atomic measures on T^nM, cell-induced measures, holonomy and homology."""

from __future__ import annotations

import itertools
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .geometry import (
    FourierForm,
    constant_forms,
    exact_form_basis,
    torus_delta,
    trig_basis,
    vol_n,
)

PROBABILITY_TOL = 1e-12
MILD_METRIC_VERSION = "mild-v1"


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finitely many weighted phase points.

    x: (N, d) base points reduced to [0, 1); v: (N, n, d) fibers; w: (N,) weights.
    Weights must be nonnegative unless ``signed`` is set (mollified or
    discretized distributions).
    """

    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    signed: bool = False

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        v = np.asarray(self.v, dtype=float)
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        if v.ndim == 2:
            v = v[:, None, :]
        if x.shape[0] == 0:
            x = x.reshape(0, x.shape[-1] if x.ndim == 2 else v.shape[-1])
        if not (len(x) == len(v) == len(w)):
            raise ValueError(f"atom arrays disagree: {len(x)}, {len(v)}, {len(w)}")
        if v.shape[2] != x.shape[1]:
            raise ValueError("fiber dimension must equal base dimension")
        if not 1 <= v.shape[1] <= x.shape[1]:
            raise ValueError(f"need 1 <= n <= d, got n={v.shape[1]}, d={x.shape[1]}")
        if not self.signed and np.any(w < 0):
            raise ValueError("negative weight in an unsigned measure")
        x = np.mod(x, 1.0)
        x[x >= 1.0] = 0.0
        for a in (x, v, w):
            a.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def n(self) -> int:
        return self.v.shape[1]

    def __len__(self) -> int:
        return len(self.w)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.w))

    @property
    def is_probability(self) -> bool:
        return abs(self.total_weight - 1.0) <= PROBABILITY_TOL and not np.any(self.w < 0)

    @classmethod
    def empty(cls, d: int, n: int) -> AtomicMeasure:
        return cls(np.zeros((0, d)), np.zeros((0, n, d)), np.zeros(0))

    @classmethod
    def dirac(cls, x, v, weight: float = 1.0) -> AtomicMeasure:
        return cls(np.asarray(x, float)[None], np.asarray(v, float)[None], [weight], signed=weight < 0)

    def with_weights(self, w, signed: bool | None = None) -> AtomicMeasure:
        w = np.asarray(w, dtype=float)
        if signed is None:
            signed = self.signed or bool(np.any(w < 0))
        return AtomicMeasure(self.x, self.v, w, signed=signed)

    def with_fibers(self, v) -> AtomicMeasure:
        return AtomicMeasure(self.x, v, self.w, signed=self.signed)

    def restrict(self, mask) -> AtomicMeasure:
        mask = np.asarray(mask)
        return AtomicMeasure(self.x[mask], self.v[mask], self.w[mask], signed=self.signed)

    def scaled(self, c: float) -> AtomicMeasure:
        return self.with_weights(c * self.w, signed=self.signed or c < 0)

    def normalized(self) -> AtomicMeasure:
        return self.scaled(1.0 / self.total_weight)

    def __add__(self, other: AtomicMeasure) -> AtomicMeasure:
        return concat([self, other])

    def compress(self, tol: float = 0.0) -> AtomicMeasure:
        return self.restrict(np.abs(self.w) > tol)


def concat(measures: Sequence[AtomicMeasure]) -> AtomicMeasure:
    return AtomicMeasure(
        np.concatenate([m.x for m in measures]),
        np.concatenate([m.v for m in measures]),
        np.concatenate([m.w for m in measures]),
        signed=any(m.signed for m in measures),
    )


# ------------------------------------------------------------ integration


def integrate(mu: AtomicMeasure, f: Callable) -> float:
    """sum_a w_a f(p_a); ``f`` takes (x, v) arrays."""
    if len(mu) == 0:
        return 0.0
    return float(np.sum(mu.w * np.asarray(f(mu.x, mu.v), dtype=float)))


def mass(mu: AtomicMeasure) -> float:
    return integrate(mu, lambda x, v: vol_n(v))


def holonomy_residual(mu: AtomicMeasure, K: int) -> np.ndarray:
    """Pairings of mu with d(omega_b) over the (n-1)-form basis up to cutoff K."""
    if K < 1:
        return np.zeros(0)
    basis = exact_form_basis(mu.d, mu.n, K)
    if len(mu) == 0:
        return np.zeros(len(basis))
    return np.array([integrate(mu, b) for b in basis])


def is_holonomic(mu: AtomicMeasure, K: int, tol: float) -> bool:
    res = holonomy_residual(mu, K)
    return mu.is_probability and (len(res) == 0 or float(np.max(np.abs(res))) <= tol)


def homology_class(mu: AtomicMeasure) -> np.ndarray:
    """rho_J = integral of dx_J, one entry per axis subset J of size n (lexicographic)."""
    return np.array([integrate(mu, f) for f in constant_forms(mu.d, mu.n)])


# ----------------------------------------------------------- cells, chains


@dataclass(frozen=True, eq=False)
class Cell:
    """n-cell sampled on a uniform grid of [0,1]^n; samples shape (m_1, ..., m_n, d)."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim < 2:
            raise ValueError("samples need shape (m_1, ..., m_n, d)")
        if any(m < 2 for m in s.shape[:-1]):
            raise ValueError("each cell axis needs at least 2 samples")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.ndim - 1

    @property
    def d(self) -> int:
        return self.samples.shape[-1]

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], cells, n: int = 1) -> Cell:
        """Sample ``fn`` (t of shape (..., n) -> (..., d)) at cells+1 points per axis."""
        cells = (cells,) * n if np.isscalar(cells) else tuple(cells)
        axes = [np.linspace(0.0, 1.0, c + 1) for c in cells]
        t = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(np.asarray(fn(t), dtype=float))

    def lifted(self) -> np.ndarray:
        """Unwrap samples along every axis so neighbours differ by < 1/2."""
        s = np.array(self.samples)
        for ax in range(self.n):
            step = np.diff(s, axis=ax)
            reduced = step - np.round(step)
            if np.any(np.abs(reduced) >= 0.5 - 1e-12):
                raise ValueError(f"ambiguous lift along cell axis {ax}: a jump reaches 1/2")
            first = np.take(s, [0], axis=ax)
            s = np.concatenate([first, first + np.cumsum(reduced, axis=ax)], axis=ax)
        return s


@dataclass(frozen=True, eq=False)
class CellChain:
    cells: tuple[Cell, ...]
    coefficients: tuple[float, ...]

    def __post_init__(self):
        if len(self.cells) != len(self.coefficients):
            raise ValueError("one coefficient per cell")
        if any(c <= 0 for c in self.coefficients):
            raise ValueError("chain coefficients must be positive")
        if len({(c.n, c.d) for c in self.cells}) > 1:
            raise ValueError("all cells need the same n and d")


def measure_from_chain(chain: CellChain) -> AtomicMeasure:
    """Midpoint-rule atoms: one per grid cell at (gamma, d gamma/dt_1, ..., d gamma/dt_n)."""
    parts = []
    for cell, a in zip(chain.cells, chain.coefficients):
        s = cell.lifted()
        n, d = cell.n, cell.d
        shape = s.shape[:-1]
        h = [1.0 / (m - 1) for m in shape]
        corners = list(itertools.product((0, 1), repeat=n))
        inner = tuple(m - 1 for m in shape)

        def corner(c):
            return s[tuple(slice(ci, ci + mi) for ci, mi in zip(c, inner))]

        centre = sum(corner(c) for c in corners) / len(corners)
        fibers = []
        for j in range(n):
            diff = sum(
                corner(c) - corner(c[:j] + (0,) + c[j + 1 :]) for c in corners if c[j] == 1
            )
            fibers.append(diff / (len(corners) / 2) / h[j])
        v = np.stack(fibers, axis=-2).reshape(-1, n, d)
        x = centre.reshape(-1, d)
        w = np.full(len(x), a * float(np.prod(h)))
        parts.append(AtomicMeasure(x, v, w))
    return concat(parts)


# ---------------------------------------------------------------- fixtures


def corner_measure(N: int = 64) -> AtomicMeasure:
    """The corner curve on T^2: (s,0) with velocity (1,0), then (0,s) with velocity (0,1).

    Atoms sit on the nodes s = k/N with weight 1/(2N) each; both branches have
    an atom at the origin. For trigonometric integrands of frequency below N
    the rule is exact on each closed branch.
    """
    s = np.arange(N) / N
    zero = np.zeros(N)
    x = np.concatenate([np.stack([s, zero], 1), np.stack([zero, s], 1)])
    v = np.concatenate([np.tile([[1.0, 0.0]], (N, 1)), np.tile([[0.0, 1.0]], (N, 1))])[:, None, :]
    return AtomicMeasure(x, v, np.full(2 * N, 1.0 / (2 * N)))


def corner_chain(N: int = 64) -> CellChain:
    a = Cell.from_function(lambda t: np.concatenate([t, 0 * t], axis=-1), N)
    b = Cell.from_function(lambda t: np.concatenate([0 * t, t], axis=-1), N)
    return CellChain((a, b), (0.5, 0.5))


def line_measure(N: int = 64, offset: float = 0.0, speed: float = 1.0, d: int = 2, axis: int = 0) -> AtomicMeasure:
    """Uniform probability on the closed line x_axis = s, other coordinates ``offset``."""
    x = np.full((N, d), float(offset))
    x[:, axis] = np.arange(N) / N
    v = np.zeros((N, 1, d))
    v[:, 0, axis] = speed
    return AtomicMeasure(x, v, np.full(N, 1.0 / N))


# ------------------------------------------------------------- mild metric


def _metric_catalog(d: int, n: int) -> list[tuple[tuple[int, ...], str, np.ndarray]]:
    """Frozen test sequence: harmonics |m|_inf <= 1 times unit Gaussians in the fibers.

    Gaussian centres: the zero frame, then +-e_l in each fiber slot. Ordering is
    part of the metric definition (version ``mild-v1``).
    """
    centres = [np.zeros((n, d))]
    for i in range(n):
        for l in range(d):
            for sgn in (1.0, -1.0):
                c = np.zeros((n, d))
                c[i, l] = sgn
                centres.append(c)
    return [(m, p, c) for c in centres for (m, p) in trig_basis(d, 1)]


def mild_distance(mu1: AtomicMeasure, mu2: AtomicMeasure) -> float:
    """|M(mu1) - M(mu2)| + sum_k 2^-k |int |f_k| dmu1 - int |f_k| dmu2| / sup|f_k|."""
    if (mu1.d, mu1.n) != (mu2.d, mu2.n):
        raise ValueError("measures live on different phase spaces")
    total = abs(mass(mu1) - mass(mu2))
    for k, (m, phase, c) in enumerate(_metric_catalog(mu1.d, mu1.n), start=1):
        harmonic = FourierForm.monomial(mu1.d, (), m, phase)

        def f(x, v, harmonic=harmonic, c=c):
            env = np.exp(-0.5 * np.sum((v - c) ** 2, axis=(1, 2)))
            return np.abs(harmonic(x, v) * env)

        # sup|f_k| = 1: harmonics reach +-1 and the envelope peaks at 1
        total += abs(integrate(mu1, f) - integrate(mu2, f)) / 2.0**k
    return float(total)


def phase_distances(mu: AtomicMeasure, points_x: np.ndarray, points_v: np.ndarray) -> np.ndarray:
    """Distance matrix (P, N) from given phase points to the atoms of mu, wrapping the base."""
    dx = torus_delta(points_x[:, None, :], mu.x[None, :, :])
    dv = points_v[:, None, :, :] - mu.v[None, :, :, :]
    return np.sqrt(np.sum(dx**2, axis=-1) + np.sum(dv**2, axis=(-1, -2)))
