"""Test functions on the phase space T^nM = T^d x (R^d)^n.

Every function takes ``x`` of shape (N, d) and ``v`` of shape (N, n, d) and
returns N values. Partial derivatives are addressed by a multi-index of length
(n+1)*d: the first d entries act on the base coordinates, entry d + i*d + l on
the l-th component of fiber i.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from .stencils import central_nodes, stencil

FD_STEP = 1e-4


def split_z(z: np.ndarray, d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    return z[:, :d], z[:, d:].reshape(len(z), n, d)


def join_z(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.concatenate([x, v.reshape(len(v), -1)], axis=1)


def base_index(d: int, n: int, axis: int, order: int = 1) -> tuple[int, ...]:
    idx = [0] * ((n + 1) * d)
    idx[axis] = order
    return tuple(idx)


def fiber_index(d: int, n: int, slot: int, axis: int, order: int = 1) -> tuple[int, ...]:
    idx = [0] * ((n + 1) * d)
    idx[d + slot * d + axis] = order
    return tuple(idx)


def _fd_step(order: int) -> float:
    # roundoff grows like eps / h^order; widen the step for higher orders
    return FD_STEP ** (2.0 / (order + 1))


class TestFunction:
    """Smooth function on T^nM with a derivative oracle.

    Subclasses implement ``__call__`` and may override ``_derivative`` to return
    analytic partials; returning ``None`` falls back to nested central
    differences with one Richardson step.
    """

    __test__ = False  # not a pytest class

    def __call__(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _derivative(self, index: tuple[int, ...], x, v) -> np.ndarray | None:
        return None

    def derivative(self, index, x, v) -> np.ndarray:
        index = tuple(int(i) for i in index)
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if len(index) != x.shape[1] * (v.shape[1] + 1):
            raise ValueError(f"multi-index length {len(index)} does not match phase space")
        if not any(index):
            return self(x, v)
        out = self._derivative(index, x, v)
        if out is None:
            out = finite_difference(self, index, x, v)
        return out

    def __add__(self, other: TestFunction) -> TestFunction:
        return SumFunction((self, other), (1.0, 1.0))

    def __sub__(self, other: TestFunction) -> TestFunction:
        return SumFunction((self, other), (1.0, -1.0))

    def __rmul__(self, c: float) -> TestFunction:
        return SumFunction((self,), (float(c),))


def _fd_once(f: TestFunction, index, x, v, h: float) -> np.ndarray:
    d, n = x.shape[1], v.shape[1]
    z0 = join_z(x, v)
    axes = [(k, o) for k, o in enumerate(index) if o]
    per_axis = []
    for k, o in axes:
        nodes = central_nodes(o)
        per_axis.append((k, nodes, stencil(o, nodes, h)))
    total = np.zeros(len(x))
    grids = np.meshgrid(*[np.arange(len(p[1])) for p in per_axis], indexing="ij")
    for combo in zip(*[g.ravel() for g in grids]):
        weight = 1.0
        z = z0.copy()
        for (k, nodes, c), j in zip(per_axis, combo):
            weight *= c[j]
            z[:, k] += h * nodes[j]
        if weight != 0.0:
            total += weight * f(*split_z(z, d, n))
    return total


def finite_difference(f: TestFunction, index, x, v) -> np.ndarray:
    """Nested central differences plus one Richardson extrapolation step."""
    h = _fd_step(sum(index))
    coarse = _fd_once(f, index, x, v, h)
    fine = _fd_once(f, index, x, v, h / 2)
    return (4.0 * fine - coarse) / 3.0


class SumFunction(TestFunction):
    def __init__(self, parts, coeffs):
        self.parts = tuple(parts)
        self.coeffs = tuple(coeffs)

    def __call__(self, x, v):
        return sum(c * f(x, v) for f, c in zip(self.parts, self.coeffs))

    def derivative(self, index, x, v):
        return sum(c * f.derivative(index, x, v) for f, c in zip(self.parts, self.coeffs))


class Constant(TestFunction):
    def __init__(self, value: float = 1.0):
        self.value = float(value)

    def __call__(self, x, v):
        return np.full(len(x), self.value)

    def _derivative(self, index, x, v):
        return np.zeros(len(x))


class FunctionOf(TestFunction):
    """Wrap a vectorized callable ``fn(x, v)``; derivatives by finite differences."""

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray], name: str = ""):
        self.fn = fn
        self.name = name or getattr(fn, "__name__", "f")

    def __call__(self, x, v):
        return np.asarray(self.fn(x, v), dtype=float)

    def __repr__(self):
        return f"FunctionOf({self.name})"


class Polynomial(TestFunction):
    """Monomial in the local coordinates z - center (base offsets wrapped to [-1/2, 1/2)).

    Stands in for a test function that equals the polynomial near ``center`` and
    is cut off smoothly far away; only valid on measures supported in that patch.
    """

    def __init__(self, exponents, center, coeff: float = 1.0):
        self.exponents = np.asarray(exponents, dtype=int)
        self.center = np.asarray(center, dtype=float)
        self.coeff = float(coeff)

    def _local(self, x, v):
        z = join_z(x, v) - self.center
        d = x.shape[1]
        z[:, :d] -= np.round(z[:, :d])
        return z

    def __call__(self, x, v):
        return self.coeff * np.prod(self._local(x, v) ** self.exponents, axis=1)

    def _derivative(self, index, x, v):
        index = np.asarray(index)
        if np.any(index > self.exponents):
            return np.zeros(len(x))
        z = self._local(x, v)
        factor = 1.0
        for e, k in zip(self.exponents, index):
            for j in range(k):
                factor *= e - j
        return self.coeff * factor * np.prod(z ** (self.exponents - index), axis=1)


def polynomial_battery(center, degree: int, include_constant: bool = False) -> list[Polynomial]:
    from .stencils import monomial_exponents

    center = np.asarray(center, dtype=float)
    out = []
    for e in monomial_exponents(len(center), degree):
        if sum(e) == 0 and not include_constant:
            continue
        out.append(Polynomial(e, center))
    return out


def wrapped_sq_distance(x: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Smooth periodic surrogate for squared torus distance: sum (sin(pi dx)/pi)^2."""
    return np.sum((np.sin(np.pi * (x - x0)) / np.pi) ** 2, axis=-1)


class GaussianBump(TestFunction):
    """amplitude * exp(-(|x - x0|_T^2 + |v - v0|^2) / (2 s^2)), smooth and periodic in x."""

    def __init__(self, x0, v0, width: float, amplitude: float = 1.0, offset: float = 0.0):
        self.x0 = np.asarray(x0, dtype=float)
        self.v0 = np.asarray(v0, dtype=float)
        self.width = float(width)
        self.amplitude = float(amplitude)
        self.offset = float(offset)

    def __call__(self, x, v):
        r2 = wrapped_sq_distance(x, self.x0) + np.sum((v - self.v0) ** 2, axis=(1, 2))
        return self.amplitude * np.exp(-r2 / (2 * self.width**2)) + self.offset

    def derivative(self, index, x, v):
        if any(index):
            # offset does not contribute to derivatives
            return _BumpNoOffset(self).derivative(index, x, v)
        return self(x, v)

    def sup(self) -> float:
        return abs(self.amplitude) + abs(self.offset)


class _BumpNoOffset(TestFunction):
    def __init__(self, bump: GaussianBump):
        self.bump = bump

    def __call__(self, x, v):
        b = self.bump
        r2 = wrapped_sq_distance(x, b.x0) + np.sum((v - b.v0) ** 2, axis=(1, 2))
        return b.amplitude * np.exp(-r2 / (2 * b.width**2))
