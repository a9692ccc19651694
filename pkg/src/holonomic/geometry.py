"""Flat torus phase space and trigonometric differential forms.

Points of T^nM are a base point on R^d/Z^d plus n fiber vectors in R^d. A
differential k-form with trigonometric-polynomial coefficients is stored as a
map ``(axes, freq, phase) -> coeff`` and evaluated on n-frames through the
k x k minors of the fiber matrix.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .functions import TestFunction

TWO_PI = 2.0 * np.pi
DEFAULT_CUTOFF = 3


@dataclass(frozen=True)
class TorusPoint:
    coords: tuple[float, ...]

    def __post_init__(self):
        c = np.mod(np.asarray(self.coords, dtype=float), 1.0)
        c[c >= 1.0] = 0.0
        object.__setattr__(self, "coords", tuple(float(a) for a in c))

    @property
    def d(self) -> int:
        return len(self.coords)

    def distance(self, other: TorusPoint) -> float:
        return float(np.linalg.norm(torus_delta(np.array(other.coords), np.array(self.coords))))


@dataclass(frozen=True)
class PhasePoint:
    base: TorusPoint
    fibers: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if not isinstance(self.base, TorusPoint):
            object.__setattr__(self, "base", TorusPoint(tuple(self.base)))
        fibers = tuple(tuple(float(a) for a in f) for f in self.fibers)
        object.__setattr__(self, "fibers", fibers)
        n, d = len(fibers), self.base.d
        if not 1 <= n <= d:
            raise ValueError(f"need 1 <= n <= d, got n={n}, d={d}")
        if any(len(f) != d for f in fibers):
            raise ValueError("fiber length must equal the base dimension")

    @property
    def x(self) -> np.ndarray:
        return np.array([self.base.coords])

    @property
    def v(self) -> np.ndarray:
        return np.array([self.fibers])


def torus_delta(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Shortest signed displacement a - b on the torus, per axis in [-1/2, 1/2)."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return diff - np.floor(diff + 0.5)


def torus_distance_axis(a, b) -> np.ndarray:
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(diff, 1.0 - diff)


def vol_n(v: np.ndarray) -> np.ndarray:
    """sqrt|det(v v^T)| for fiber matrices of shape (..., n, d)."""
    v = np.asarray(v, dtype=float)
    gram = v @ np.swapaxes(v, -1, -2)
    return np.sqrt(np.abs(np.linalg.det(gram)))


# ---------------------------------------------------------------- trig basis


def _half_space(m: tuple[int, ...]) -> bool:
    for a in m:
        if a:
            return a > 0
    return False


def trig_basis(d: int, K: int) -> list[tuple[tuple[int, ...], str]]:
    """Real trigonometric basis of functions on T^d with |m|_inf <= K.

    cos for m = 0, cos and sin for each m in the half-space (first nonzero
    entry positive). There are (2K+1)^d elements, constant first.
    """
    out: list[tuple[tuple[int, ...], str]] = [((0,) * d, "cos")]
    for m in itertools.product(range(-K, K + 1), repeat=d):
        if _half_space(m):
            out.append((m, "cos"))
            out.append((m, "sin"))
    return out


def _trig(phase: str, theta: np.ndarray, shift: int = 0) -> np.ndarray:
    # d^r/dtheta^r of cos/sin
    k = shift % 4
    if phase == "sin":
        k = (k + 3) % 4  # sin = cos shifted by -pi/2
    return [np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin][k](theta)


def _perm_sign(p: tuple[int, ...]) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _wedge_sign(j: int, axes: tuple[int, ...]) -> int:
    return -1 if sum(a < j for a in axes) % 2 else 1


@dataclass(frozen=True)
class FourierForm(TestFunction):
    """k-form sum_J a_J(x) dx_J on T^d with trigonometric coefficients.

    ``terms`` maps (axes J, frequency m, "cos"|"sin") to a real coefficient.
    Used as a function on T^nM it is sum_J a_J(x) det(v[:, J]); a 0-form is a
    function of the base point only.
    """

    d: int
    degree: int
    terms: dict = field(default_factory=dict)
    cutoff: int | None = None

    def __post_init__(self):
        clean = {}
        for (axes, m, phase), c in self.terms.items():
            axes = tuple(int(a) for a in axes)
            m = tuple(int(a) for a in m)
            if len(axes) != self.degree or len(set(axes)) != len(axes):
                raise ValueError(f"axes {axes} do not match degree {self.degree}")
            if any(not 0 <= a < self.d for a in axes) or len(m) != self.d:
                raise ValueError(f"term {(axes, m)} outside dimension {self.d}")
            if phase not in ("cos", "sin"):
                raise ValueError(f"phase must be cos or sin, got {phase!r}")
            if self.cutoff is not None and max(map(abs, m), default=0) > self.cutoff:
                raise ValueError(f"frequency {m} exceeds cutoff {self.cutoff}")
            if phase == "sin" and not any(m):
                continue
            # sort axes, tracking orientation
            order = tuple(sorted(range(len(axes)), key=lambda i: axes[i]))
            sign = _perm_sign(order)
            key = (tuple(axes[i] for i in order), m, phase)
            clean[key] = clean.get(key, 0.0) + sign * float(c)
        object.__setattr__(self, "terms", {k: c for k, c in clean.items() if c != 0.0})

    # -- construction helpers

    @classmethod
    def constant(cls, d: int, axes=(), coeff: float = 1.0) -> FourierForm:
        return cls(d, len(axes), {(tuple(axes), (0,) * d, "cos"): coeff})

    @classmethod
    def monomial(cls, d: int, axes, m, phase: str, coeff: float = 1.0) -> FourierForm:
        return cls(d, len(axes), {(tuple(axes), tuple(m), phase): coeff})

    def __add__(self, other):
        if not isinstance(other, FourierForm):
            return TestFunction.__add__(self, other)
        if (self.d, self.degree) != (other.d, other.degree):
            raise ValueError("cannot add forms of different type")
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0.0) + c
        return FourierForm(self.d, self.degree, terms)

    def scale(self, c: float) -> FourierForm:
        return FourierForm(self.d, self.degree, {k: c * a for k, a in self.terms.items()})

    def __rmul__(self, c):
        return self.scale(float(c))

    def __neg__(self):
        return self.scale(-1.0)

    def max_frequency(self) -> int:
        return max((max(map(abs, m), default=0) for (_, m, _) in self.terms), default=0)

    # -- evaluation

    def coefficient(self, axes, x: np.ndarray, base_order=None) -> np.ndarray:
        """a_J(x) (or its base partial of order ``base_order``) for the given axes."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        alpha = np.zeros(self.d, dtype=int) if base_order is None else np.asarray(base_order)
        r = int(alpha.sum())
        out = np.zeros(len(x))
        for (J, m, phase), c in self.terms.items():
            if J != tuple(axes):
                continue
            mv = np.asarray(m, dtype=float)
            factor = c * TWO_PI**r * np.prod(mv**alpha)
            if factor == 0.0:
                continue
            out += factor * _trig(phase, TWO_PI * (x @ mv), r)
        return out

    def _axes_sets(self):
        return sorted({J for (J, _, _) in self.terms})

    def __call__(self, x, v):
        return self._evaluate(x, v, None)

    def _derivative(self, index, x, v):
        return self._evaluate(x, v, index)

    def _evaluate(self, x, v, index) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        v = np.asarray(v, dtype=float)
        if v.ndim == 2:
            v = v[None]
        d = self.d
        n = v.shape[1]
        if self.degree not in (0, n):
            raise ValueError(f"form of degree {self.degree} cannot be evaluated on {n}-frames")
        index = np.zeros((n + 1) * d, dtype=int) if index is None else np.asarray(index)
        alpha = index[:d]
        fib = index[d:].reshape(n, d)
        if self.degree == 0 and fib.any():
            return np.zeros(len(x))
        out = np.zeros(len(x))
        for J in self._axes_sets():
            coef = self.coefficient(J, x, alpha)
            out += coef * _minor_derivative(v, J, fib)
        return out

    def fiber_gradient(self, x, v) -> np.ndarray:
        """Gradient in the fibers, shape (N, n, d); exact since the form is multilinear."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        v = np.asarray(v, dtype=float)
        n = v.shape[1]
        grad = np.zeros((len(x), n, self.d))
        if self.degree == 0:
            return grad
        for J in self._axes_sets():
            coef = self.coefficient(J, x)
            for i in range(n):
                for col, l in enumerate(J):
                    grad[:, i, l] += coef * _cofactor(v, J, i, col)
        return grad

    def base_gradient(self, x) -> np.ndarray:
        """Gradient of a 0-form, shape (N, d)."""
        if self.degree != 0:
            raise ValueError("base_gradient is defined for 0-forms")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros((len(x), self.d))
        for j in range(self.d):
            e = np.zeros(self.d, dtype=int)
            e[j] = 1
            out[:, j] = self.coefficient((), x, e)
        return out

    # -- serialization

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "d": self.d,
            "terms": [
                {"axes": list(J), "freq": list(m), "phase": p, "coeff": c}
                for (J, m, p), c in sorted(self.terms.items())
            ],
        }

    @classmethod
    def from_json(cls, obj, d: int | None = None) -> FourierForm:
        if isinstance(obj, str):
            obj = json.loads(obj)
        terms = {}
        for t in obj["terms"]:
            key = (tuple(t["axes"]), tuple(t["freq"]), t["phase"])
            terms[key] = terms.get(key, 0.0) + float(t["coeff"])
        if d is None:
            d = obj.get("d") or len(obj["terms"][0]["freq"])
        return cls(int(d), int(obj["degree"]), terms)

    def __hash__(self):
        return hash((self.d, self.degree, tuple(sorted(self.terms.items()))))

    def __eq__(self, other):
        return (
            isinstance(other, FourierForm)
            and (self.d, self.degree) == (other.d, other.degree)
            and self.terms == other.terms
        )


def _minor_derivative(v: np.ndarray, J, fib_orders: np.ndarray) -> np.ndarray:
    """Partial of det(v[:, J]) w.r.t. fiber entries with orders ``fib_orders`` (n, d)."""
    N, n, _ = v.shape
    k = len(J)
    if k == 0:
        return np.ones(N)
    row_orders = fib_orders.sum(axis=1)
    if np.any(row_orders > 1):
        return np.zeros(N)
    total = np.zeros(N)
    for perm in itertools.permutations(range(k)):
        term = np.full(N, float(_perm_sign(perm)))
        for i in range(n):
            col = J[perm[i]]
            if row_orders[i]:
                if fib_orders[i, col] != 1:
                    term = None
                    break
            else:
                term = term * v[:, i, col]
        if term is not None:
            total += term
    return total


def _cofactor(v: np.ndarray, J, row: int, col: int) -> np.ndarray:
    orders = np.zeros(v.shape[1:], dtype=int)
    orders[row, J[col]] = 1
    return _minor_derivative(v, J, orders)


# ------------------------------------------------------------- operations


def eval_form(form: FourierForm, x, v) -> np.ndarray:
    """Evaluate an n-form on frames (x, v); the degree must equal the frame size."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-2]
    if form.degree != n:
        raise ValueError(f"form degree {form.degree} does not match n={n}")
    return form(x, v)


def exterior_derivative(form: FourierForm) -> FourierForm:
    """Exact d of a trigonometric form: d(a dx_J) = sum_j (da/dx_j) dx_j ^ dx_J."""
    if form.degree >= form.d:
        raise ValueError("exterior derivative of a top-degree form is zero; degree must be < d")
    terms: dict = {}
    for (J, m, phase), c in form.terms.items():
        for j in range(form.d):
            if m[j] == 0 or j in J:
                continue
            # d/dx_j cos(2 pi m.x) = -2 pi m_j sin, d/dx_j sin = 2 pi m_j cos
            new_phase, factor = ("sin", -1.0) if phase == "cos" else ("cos", 1.0)
            coeff = c * factor * TWO_PI * m[j] * _wedge_sign(j, J)
            axes = tuple(sorted(J + (j,)))
            key = (axes, m, new_phase)
            terms[key] = terms.get(key, 0.0) + coeff
    return FourierForm(form.d, form.degree + 1, terms, form.cutoff)


def fiber_gradient_form(form: FourierForm, x, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if form.degree != v.shape[-2]:
        raise ValueError(f"form degree {form.degree} does not match n={v.shape[-2]}")
    return form.fiber_gradient(x, v)


def form_basis(d: int, k: int, K: int, include_constant: bool = True) -> list[FourierForm]:
    """Single-term basis of k-forms with coefficients in the trig basis up to K."""
    out = []
    for axes in itertools.combinations(range(d), k):
        for m, phase in trig_basis(d, K):
            if not include_constant and not any(m):
                continue
            out.append(FourierForm.monomial(d, axes, m, phase))
    return out


def exact_form_basis(d: int, n: int, K: int) -> list[FourierForm]:
    """d(omega_b) for the nonconstant (n-1)-form basis; these test holonomy."""
    if n < 1 or n > d:
        raise ValueError(f"need 1 <= n <= d, got n={n}, d={d}")
    out = []
    for b in form_basis(d, n - 1, K, include_constant=False):
        db = exterior_derivative(b)
        if db.terms:
            out.append(db)
    return out


def constant_forms(d: int, n: int) -> list[FourierForm]:
    """dx_J for every axis subset of size n; closed but not exact."""
    return [FourierForm.constant(d, J) for J in itertools.combinations(range(d), n)]


def n_constant_forms(d: int, n: int) -> int:
    return comb(d, n)
