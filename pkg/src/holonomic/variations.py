"""Explicit variation families of holonomic measures and their tangent distributions.

Each family comes as an evaluator t -> mu_t together with the distribution it
is claimed to differentiate to; ``derivative_check`` confirms the claim with
finite differences in t.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .distributions import MildDistribution, pair
from .functions import TestFunction, base_index, fiber_index
from .geometry import FourierForm, constant_forms, exact_form_basis, trig_basis
from .measures import AtomicMeasure, integrate

TRANSPOSITION_MARGIN = 0.9


@dataclass(frozen=True)
class TrigVectorField:
    """Vector field on T^d whose components are trigonometric 0-forms."""

    components: tuple[FourierForm, ...]

    def __post_init__(self):
        d = len(self.components)
        if any(c.degree != 0 or c.d != d for c in self.components):
            raise ValueError("components must be 0-forms on T^d with d = number of components")

    @property
    def d(self) -> int:
        return len(self.components)

    @classmethod
    def constant(cls, vec) -> TrigVectorField:
        d = len(vec)
        return cls(tuple(FourierForm.constant(d, (), float(a)) for a in vec))

    @classmethod
    def random(cls, d: int, K: int, rng: np.random.Generator, scale: float = 1.0) -> TrigVectorField:
        basis = trig_basis(d, K)
        comps = []
        for _ in range(d):
            terms = {((), m, p): scale * rng.standard_normal() / len(basis) ** 0.5 for m, p in basis}
            comps.append(FourierForm(d, 0, terms))
        return cls(tuple(comps))

    def _tables(self):
        """Frequencies (T, d), cos/sin flags (T,), coefficients (d, T) over all components."""
        tab = self.__dict__.get("_tab")
        if tab is None:
            keys = sorted({(m, p) for c in self.components for (_, m, p) in c.terms})
            M = np.array([m for m, _ in keys], dtype=float).reshape(len(keys), self.d)
            is_sin = np.array([p == "sin" for _, p in keys], dtype=bool)
            C = np.array([[c.terms.get(((), m, p), 0.0) for m, p in keys] for c in self.components]).reshape(self.d, len(keys))
            tab = (M, is_sin, C)
            object.__setattr__(self, "_tab", tab)
        return tab

    def _phases(self, x):
        M, is_sin, C = self._tables()
        theta = 2 * np.pi * (np.atleast_2d(x) @ M.T)
        c, s = np.cos(theta), np.sin(theta)
        value = np.where(is_sin, s, c)
        slope = np.where(is_sin, c, -s)  # d/dtheta
        return M, C, value, slope

    def __call__(self, x) -> np.ndarray:
        _, C, value, _ = self._phases(x)
        return value @ C.T

    def jacobian(self, x) -> np.ndarray:
        """J[a, k, l] = dX_k / dx_l."""
        M, C, _, slope = self._phases(x)
        return 2 * np.pi * np.einsum("kt,at,tl->akl", C, slope, M)

    def value_and_jacobian(self, x):
        M, C, value, slope = self._phases(x)
        return value @ C.T, 2 * np.pi * np.einsum("kt,at,tl->akl", C, slope, M)

    def sup_bound(self) -> float:
        return float(np.sqrt(sum(sum(abs(a) for a in c.terms.values()) ** 2 for c in self.components)))

    def to_json(self) -> dict:
        return {"components": [c.to_json() for c in self.components]}

    @classmethod
    def from_json(cls, obj) -> TrigVectorField:
        comps = obj["components"]
        d = len(comps)
        return cls(tuple(FourierForm.from_json(c, d) for c in comps))


@dataclass(frozen=True, eq=False)
class VariationFamily:
    kind: str
    base: AtomicMeasure
    evaluator: Callable[[float], AtomicMeasure] = field(repr=False)
    distribution: MildDistribution = field(repr=False)
    validity: float = np.inf  # family defined for |t| < validity
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, t: float) -> AtomicMeasure:
        t = float(t)
        if abs(t) >= self.validity:
            raise ValueError(f"t={t} outside the validity interval (-{self.validity}, {self.validity})")
        if t == 0:
            return self.base
        if t not in self._cache:
            self._cache[t] = self.evaluator(t)
        return self._cache[t]


def _term(mu: AtomicMeasure, weights, index) -> tuple[tuple[int, ...], AtomicMeasure]:
    return tuple(index), mu.with_weights(np.asarray(weights, dtype=float), signed=True)


# ------------------------------------------------------------- horizontal


def _flow(X: TrigVectorField, x0: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for the flow and its differential dphi_t."""
    hmax = 1e-3 / (1.0 + X.sup_bound())
    steps = max(1, int(np.ceil(abs(t) / hmax)))
    h = t / steps
    d = X.d
    x = np.array(x0, dtype=float)
    J = np.broadcast_to(np.eye(d), (len(x), d, d)).copy()

    def rhs(x, J):
        val, jac = X.value_and_jacobian(x)
        return val, jac @ J

    for _ in range(steps):
        k1x, k1J = rhs(x, J)
        k2x, k2J = rhs(x + 0.5 * h * k1x, J + 0.5 * h * k1J)
        k3x, k3J = rhs(x + 0.5 * h * k2x, J + 0.5 * h * k2J)
        k4x, k4J = rhs(x + h * k3x, J + h * k3J)
        x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        J = J + h / 6 * (k1J + 2 * k2J + 2 * k3J + k4J)
    return x, J


def horizontal_distribution(mu: AtomicMeasure, X: TrigVectorField) -> MildDistribution:
    """<eta, f> = int (d_x f(X) + sum_i d_{v_i} f(DX v_i)) dmu: the lifted flow's velocity."""
    d, n = mu.d, mu.n
    Xv = X(mu.x)
    DX = X.jacobian(mu.x)
    fiber_vel = np.einsum("akl,ail->aik", DX, mu.v)
    terms = []
    for k in range(d):
        if np.any(Xv[:, k]):
            terms.append(_term(mu, -mu.w * Xv[:, k], base_index(d, n, k)))
    for i in range(n):
        for k in range(d):
            if np.any(fiber_vel[:, i, k]):
                terms.append(_term(mu, -mu.w * fiber_vel[:, i, k], fiber_index(d, n, i, k)))
    return MildDistribution(tuple(terms), d, n)


def horizontal(mu: AtomicMeasure, X: TrigVectorField) -> VariationFamily:
    def evaluate(t):
        x, J = _flow(X, mu.x, t)
        return AtomicMeasure(x, np.einsum("akl,ail->aik", J, mu.v), mu.w, signed=mu.signed)

    return VariationFamily("horizontal", mu, evaluate, horizontal_distribution(mu, X))


# --------------------------------------------------------------- vertical


def _as_field(mu: AtomicMeasure, u) -> np.ndarray:
    if callable(u):
        u = u(mu.x, mu.v)
    u = np.asarray(u, dtype=float)
    try:
        return np.array(np.broadcast_to(u, mu.v.shape))
    except ValueError:
        raise ValueError(f"fiber field has shape {u.shape}, expected {mu.v.shape}") from None


def vertical_distribution(mu: AtomicMeasure, u) -> MildDistribution:
    """<eta^u, f> = int g(u, grad_v f) dmu."""
    u = _as_field(mu, u)
    d, n = mu.d, mu.n
    terms = []
    for i in range(n):
        for k in range(d):
            if np.any(u[:, i, k]):
                terms.append(_term(mu, -mu.w * u[:, i, k], fiber_index(d, n, i, k)))
    return MildDistribution(tuple(terms), d, n)


def vertical(mu: AtomicMeasure, u) -> VariationFamily:
    """Fiber shift int f dmu_s = int f(x, v + s u) dmu; u per atom or callable (x, v) -> (N, n, d)."""
    u = _as_field(mu, u)
    if not np.all(np.isfinite(u)):
        raise ValueError("fiber field must be finite on the support")

    def evaluate(s):
        return mu.with_fibers(mu.v + s * u)

    return VariationFamily("vertical", mu, evaluate, vertical_distribution(mu, u))


def fiber_gradient_basis(mu: AtomicMeasure, K: int, homological: bool = False) -> list[np.ndarray]:
    """grad_v of the exact n-forms up to K (and of the dx_J when ``homological``) at the atoms."""
    forms = exact_form_basis(mu.d, mu.n, K) if K >= 1 else []
    if homological:
        forms = constant_forms(mu.d, mu.n) + forms
    return [f.fiber_gradient(mu.x, mu.v) for f in forms]


def project_out(mu: AtomicMeasure, u, K: int, homological: bool = False) -> np.ndarray:
    """Component of u orthogonal, in L^2(mu), to the fiber gradients of exact (or closed) forms."""
    u = _as_field(mu, u)
    basis = fiber_gradient_basis(mu, K, homological)
    if not basis:
        return u
    sq = np.sqrt(mu.w)[:, None]
    B = np.stack([(sq * b.reshape(len(mu), -1)).ravel() for b in basis], axis=1)
    y = (sq * u.reshape(len(mu), -1)).ravel()
    coef, *_ = np.linalg.lstsq(B, y, rcond=1e-10)
    r = (y - B @ coef).reshape(len(mu), -1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(sq > 0, r / sq, 0.0)
    return out.reshape(u.shape)


# --------------------------------------------------------- transpositional


def _sigma_values(mu: AtomicMeasure, sigma) -> np.ndarray:
    vals = sigma(mu.x, mu.v) if callable(sigma) else sigma
    return np.broadcast_to(np.asarray(vals, dtype=float), (len(mu),)).copy()


def transpositional_distribution(mu: AtomicMeasure, sigma, i: int = 0) -> MildDistribution:
    """<eta, f> = int sigma f - int sigma g(v_i, grad_{v_i} f) - int f int sigma."""
    s = _sigma_values(mu, sigma)
    d, n = mu.d, mu.n
    zero = (0,) * ((n + 1) * d)
    total_sigma = float(np.sum(mu.w * s))
    terms = [_term(mu, mu.w * (s - total_sigma), zero)]
    for k in range(d):
        if np.any(mu.v[:, i, k]):
            terms.append(_term(mu, mu.w * s * mu.v[:, i, k], fiber_index(d, n, i, k)))
    return MildDistribution(tuple(terms), d, n)


def transpositional(mu: AtomicMeasure, sigma, i: int = 0) -> VariationFamily:
    """Reweighted fiber rescaling, the analogue of a reparameterization.

    int f dmu_t = int (1 + t sigma) f(.., v_i / (1 + t sigma), ..) dmu / int (1 + t sigma) dmu,
    defined while |t| sup|sigma| < 0.9.
    """
    if not 0 <= i < mu.n:
        raise ValueError(f"fiber slot {i} out of range")
    s = _sigma_values(mu, sigma)
    sup = float(np.max(np.abs(s))) if len(s) else 0.0
    validity = TRANSPOSITION_MARGIN / sup if sup > 0 else np.inf

    def evaluate(t):
        factor = 1.0 + t * s
        v = np.array(mu.v)
        v[:, i, :] /= factor[:, None]
        w = mu.w * factor
        return AtomicMeasure(mu.x, v, w / np.sum(w) * mu.total_weight)

    return VariationFamily("transpositional", mu, evaluate, transpositional_distribution(mu, s, i), validity)


# ------------------------------------------------------------------ point


def point_variation(atoms: Sequence[tuple], weight: float = 1.0) -> MildDistribution:
    """sum -d_w delta_(x, v): each atom moves its fiber in direction w.

    ``atoms`` holds ((x, v), w) pairs with v of shape (n, d) and w of the same shape.
    """
    terms = []
    d = n = None
    for (x, v), w in atoms:
        x = np.asarray(x, dtype=float)
        v = np.atleast_2d(np.asarray(v, dtype=float))
        w = np.atleast_2d(np.asarray(w, dtype=float))
        d, n = len(x), v.shape[0]
        for i in range(n):
            for k in range(d):
                if w[i, k] != 0.0:
                    terms.append((fiber_index(d, n, i, k), AtomicMeasure(x[None], v[None], [-weight * w[i, k]], signed=True)))
    return MildDistribution(tuple(terms), d, n)


def corner_distribution() -> MildDistribution:
    """-d_(-1,1) delta_((0,0),(1,0)) - d_(1,-1) delta_((0,0),(0,1))."""
    return point_variation(
        [
            (((0.0, 0.0), ((1.0, 0.0),)), ((-1.0, 1.0),)),
            (((0.0, 0.0), ((0.0, 1.0),)), ((1.0, -1.0),)),
        ]
    )


# ------------------------------------------------------- derivative check


@dataclass
class ConvergenceReport:
    steps: np.ndarray
    estimates: np.ndarray
    target: float
    errors: np.ndarray
    order: float
    one_sided: bool

    def converged(self, min_order: float, exact_tol: float = 1e-10) -> bool:
        """Empirical order reached, or the difference quotient is exact to rounding."""
        return bool(np.max(self.errors) <= exact_tol or self.order >= min_order)


def derivative_check(
    family: VariationFamily,
    f: TestFunction,
    steps: Sequence[float] = (0.001, 0.0005, 0.00025, 0.000125),
    one_sided: bool = False,
) -> ConvergenceReport:
    """Compare difference quotients of t -> int f dmu_t with <eta, f>."""
    steps = np.asarray(steps, dtype=float)
    target = pair(family.distribution, f)
    base = integrate(family.base, f)
    est = []
    for t in steps:
        if one_sided:
            est.append((integrate(family(t), f) - base) / t)
        else:
            est.append((integrate(family(t), f) - integrate(family(-t), f)) / (2 * t))
    est = np.array(est)
    err = np.abs(est - target)
    positive = err > 0
    if positive.sum() >= 2:
        order = float(np.polyfit(np.log(steps[positive]), np.log(err[positive]), 1)[0])
    else:
        order = np.inf
    return ConvergenceReport(steps, est, target, err, order, one_sided)
