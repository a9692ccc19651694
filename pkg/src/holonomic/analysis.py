"""Weak-KAM form fits, Hamilton-Jacobi residuals and per-component energy constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .geometry import FourierForm, constant_forms, exact_form_basis
from .lagrangians import Lagrangian, action
from .measures import AtomicMeasure

RCOND = 1e-10


@dataclass
class WeakKamFit:
    mode: str
    K: int
    basis: list[FourierForm]
    coefficients: np.ndarray
    residual: float
    n_constant: int = 0  # closed mode: the leading dx_J entries of ``basis``

    @property
    def form(self) -> FourierForm:
        """The fitted n-form sum_b c_b basis_b."""
        out = None
        for c, b in zip(self.coefficients, self.basis):
            term = b.scale(float(c))
            out = term if out is None else out + term
        return out

    def fiber_gradient(self, x, v) -> np.ndarray:
        g = np.zeros(np.shape(v))
        for c, b in zip(self.coefficients, self.basis):
            if c != 0.0:
                g += c * b.fiber_gradient(x, v)
        return g

    def rows(self) -> list[tuple[str, float]]:
        """(basis id, coefficient); closed mode lists the dx_J first as const0.., then the exact forms."""
        nc = self.n_constant
        return [
            (f"const{k}" if k < nc else f"exact{k - nc}", float(c))
            for k, c in enumerate(self.coefficients)
        ]


def _fit_basis(d: int, n: int, K: int, mode: str) -> list[FourierForm]:
    if mode == "exact":
        return exact_form_basis(d, n, K) if K >= 1 else []
    if mode == "closed":
        return constant_forms(d, n) + (exact_form_basis(d, n, K) if K >= 1 else [])
    raise ValueError(f"mode must be 'exact' or 'closed', got {mode!r}")


def weak_kam_fit(mu: AtomicMeasure, L: Lagrangian, K: int, mode: str = "exact") -> WeakKamFit:
    """Weighted least squares of grad_v L on supp mu against fiber gradients of exact/closed forms."""
    if len(mu) == 0:
        raise ValueError("empty measure")
    L.require_differentiable(mu.x, mu.v)
    basis = _fit_basis(mu.d, mu.n, K, mode)
    sq = np.sqrt(mu.w)[:, None]
    target = (sq * L.grad_v(mu.x, mu.v).reshape(len(mu), -1)).ravel()
    if not basis:
        return WeakKamFit(mode, K, [], np.zeros(0), float(np.linalg.norm(target)))
    B = np.stack([(sq * b.fiber_gradient(mu.x, mu.v).reshape(len(mu), -1)).ravel() for b in basis], axis=1)
    coef, *_ = np.linalg.lstsq(B, target, rcond=RCOND)
    coef[np.abs(coef) < 1e-14] = 0.0
    nc = len(constant_forms(mu.d, mu.n)) if mode == "closed" else 0
    return WeakKamFit(mode, K, basis, coef, float(np.linalg.norm(target - B @ coef)), nc)


@dataclass
class HJResidual:
    values: np.ndarray
    mean: float
    variance: float


def _weighted_stats(values: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    p = w / w.sum()
    mean = float(p @ values)
    return mean, float(p @ (values - mean) ** 2)


def hj_residual(mu: AtomicMeasure, L: Lagrangian, fit: WeakKamFit, i: int = 0) -> HJResidual:
    """Per atom g(p_i, v_i) - L + A_L(mu), with p_i the fitted fiber gradient in slot i."""
    p = fit.fiber_gradient(mu.x, mu.v)
    vals = np.sum(p[:, i, :] * mu.v[:, i, :], axis=1) - L(mu.x, mu.v) + action(L, mu)
    mean, var = _weighted_stats(vals, mu.w)
    return HJResidual(vals, mean, var)


@dataclass
class ComponentConstants:
    labels: np.ndarray  # component id per atom
    constants: np.ndarray  # (components, n)
    variances: np.ndarray  # (components, n)

    @property
    def count(self) -> int:
        return len(self.constants)

    def passed(self, tau: float) -> bool:
        return bool(np.all(self.variances <= tau))


def default_radius(mu: AtomicMeasure) -> float:
    """Twice the median nearest-neighbour base distance."""
    if len(mu) < 2:
        return 1e-3
    tree = cKDTree(mu.x % 1.0, boxsize=1.0)
    dist, _ = tree.query(mu.x % 1.0, k=2)
    nn = dist[:, 1]
    nn = nn[nn > 0]
    return 2.0 * float(np.median(nn)) if len(nn) else 1e-3


def cluster(mu: AtomicMeasure, radius: float) -> np.ndarray:
    """Single-linkage components at ``radius`` in phase space (wrapped base, Euclidean fibers)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    N = len(mu)
    if N == 0:
        return np.zeros(0, dtype=int)
    tree = cKDTree(mu.x % 1.0, boxsize=1.0)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    if len(pairs):
        dx = mu.x[pairs[:, 0]] - mu.x[pairs[:, 1]]
        dx -= np.round(dx)
        dv = (mu.v[pairs[:, 0]] - mu.v[pairs[:, 1]]).reshape(len(pairs), -1)
        close = np.sum(dx**2, axis=1) + np.sum(dv**2, axis=1) <= radius**2
        pairs = pairs[close]
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(N, N))
    _, labels = connected_components(graph, directed=False)
    return labels


def component_constants(mu: AtomicMeasure, L: Lagrangian, radius: float | None = None) -> ComponentConstants:
    """Per component and slot: weighted mean and variance of L - g(v_i, grad_{v_i} L)."""
    L.require_differentiable(mu.x, mu.v)
    labels = cluster(mu, default_radius(mu) if radius is None else radius)
    vals = L(mu.x, mu.v)[:, None] - np.sum(mu.v * L.grad_v(mu.x, mu.v), axis=2)
    k = labels.max() + 1 if len(labels) else 0
    const = np.zeros((k, mu.n))
    var = np.zeros((k, mu.n))
    for c in range(k):
        sel = labels == c
        for i in range(mu.n):
            const[c, i], var[c, i] = _weighted_stats(vals[sel, i], mu.w[sel])
    return ComponentConstants(labels, const, var)
