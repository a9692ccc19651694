"""Built-in Lagrangians with analytic first and second derivatives."""

from __future__ import annotations

import numpy as np

from .functions import TestFunction, finite_difference
from .geometry import FourierForm, vol_n
from .measures import AtomicMeasure, integrate

NONSMOOTH_TOL = 1e-12


class NonDifferentiableError(ValueError):
    def __init__(self, atoms):
        self.atoms = np.asarray(atoms)
        super().__init__(f"Lagrangian is not differentiable at atoms {self.atoms.tolist()}")


class Lagrangian(TestFunction):
    """L(x, v_1, ..., v_n) with gradients and Hessian blocks.

    Shapes for N points: grad_x (N, d), grad_v (N, n, d),
    hess_xv[a, k, i, l] = d2L / dx_k dv_il, hess_vv[a, i, l, j, m] = d2L / dv_il dv_jm.
    Subclasses override what they know analytically; the rest falls back to
    finite differences of the evaluator.
    """

    name = "lagrangian"

    def differentiable(self, x, v) -> np.ndarray:
        return np.ones(len(x), dtype=bool)

    def grad_x(self, x, v) -> np.ndarray:
        d, n = x.shape[1], v.shape[1]
        return np.stack([finite_difference(self, _unit(d, n, k), x, v) for k in range(d)], axis=1)

    def grad_v(self, x, v) -> np.ndarray:
        d, n = x.shape[1], v.shape[1]
        cols = [finite_difference(self, _unit(d, n, d + k), x, v) for k in range(n * d)]
        return np.stack(cols, axis=1).reshape(len(x), n, d)

    def hess_xv(self, x, v) -> np.ndarray:
        d, n = x.shape[1], v.shape[1]
        out = np.empty((len(x), d, n * d))
        for k in range(d):
            for j in range(n * d):
                idx = np.array(_unit(d, n, k)) + np.array(_unit(d, n, d + j))
                out[:, k, j] = finite_difference(self, tuple(idx), x, v)
        return out.reshape(len(x), d, n, d)

    def hess_vv(self, x, v) -> np.ndarray:
        d, n = x.shape[1], v.shape[1]
        m = n * d
        out = np.empty((len(x), m, m))
        for a in range(m):
            for b in range(a, m):
                idx = np.array(_unit(d, n, d + a)) + np.array(_unit(d, n, d + b))
                out[:, a, b] = out[:, b, a] = finite_difference(self, tuple(idx), x, v)
        return out.reshape(len(x), n, d, n, d)

    def _derivative(self, index, x, v):
        d, n = x.shape[1], v.shape[1]
        index = np.asarray(index)
        order = int(index.sum())
        nz = np.flatnonzero(index)
        if order == 1:
            k = int(nz[0])
            if k < d:
                return self.grad_x(x, v)[:, k]
            return self.grad_v(x, v).reshape(len(x), -1)[:, k - d]
        if order == 2:
            ks = [int(k) for k in nz for _ in range(index[k])]
            a, b = sorted(ks)
            if a < d <= b:
                return self.hess_xv(x, v).reshape(len(x), d, -1)[:, a, b - d]
            if a >= d:
                return self.hess_vv(x, v).reshape(len(x), n * d, n * d)[:, a - d, b - d]
        return None

    def require_differentiable(self, x, v) -> None:
        bad = np.flatnonzero(~self.differentiable(x, v))
        if len(bad):
            raise NonDifferentiableError(bad)

    def __repr__(self):
        return f"{type(self).__name__}()"


def _unit(d: int, n: int, k: int) -> tuple[int, ...]:
    idx = [0] * ((n + 1) * d)
    idx[k] = 1
    return tuple(idx)


class _Potential:
    """Optional V(x) given as a trigonometric 0-form."""

    def __init__(self, potential: FourierForm | None):
        if potential is not None and potential.degree != 0:
            raise ValueError("potential must be a 0-form")
        self.potential = potential

    def V(self, x) -> np.ndarray:
        if self.potential is None:
            return np.zeros(len(x))
        return self.potential.coefficient((), x)

    def dV(self, x) -> np.ndarray:
        if self.potential is None:
            return np.zeros(x.shape)
        return self.potential.base_gradient(x)


class Length(Lagrangian):
    """|v| for curves (n = 1); smooth away from the zero fiber."""

    name = "length"

    def __call__(self, x, v):
        return np.linalg.norm(v[:, 0, :], axis=1)

    def differentiable(self, x, v):
        return np.linalg.norm(v[:, 0, :], axis=1) > NONSMOOTH_TOL

    def grad_x(self, x, v):
        return np.zeros(x.shape)

    def grad_v(self, x, v):
        r = np.linalg.norm(v, axis=2, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return v / r

    def hess_xv(self, x, v):
        return np.zeros((len(x), x.shape[1]) + v.shape[1:])

    def hess_vv(self, x, v):
        u = v[:, 0, :]
        r = np.linalg.norm(u, axis=1)[:, None, None]
        eye = np.eye(u.shape[1])[None]
        with np.errstate(invalid="ignore", divide="ignore"):
            h = eye / r - u[:, :, None] * u[:, None, :] / r**3
        return h[:, None, :, None, :]


class Mechanical(Lagrangian, _Potential):
    """1/2 sum_i |v_i|^2 + V(x). With no potential this is the Dirichlet energy."""

    name = "mechanical"

    def __init__(self, potential: FourierForm | None = None):
        _Potential.__init__(self, potential)

    def __call__(self, x, v):
        return 0.5 * np.sum(v**2, axis=(1, 2)) + self.V(x)

    def grad_x(self, x, v):
        return self.dV(x)

    def grad_v(self, x, v):
        return np.array(v, dtype=float)

    def hess_xv(self, x, v):
        return np.zeros((len(x), x.shape[1]) + v.shape[1:])

    def hess_vv(self, x, v):
        n, d = v.shape[1:]
        return np.broadcast_to(np.eye(n * d).reshape(n, d, n, d), (len(x), n, d, n, d)).copy()


class Dirichlet(Mechanical):
    name = "dirichlet"

    def __init__(self):
        super().__init__(None)


class Volume(Lagrangian, _Potential):
    """vol_n(v_1, b_1 v_1, ..., b_n v_n) + V(x) with per-slot stretch factors b_i.

    Unit factors give the n-volume; the anisotropic sock uses (1, beta).
    """

    name = "volume"

    def __init__(self, stretch=None, potential: FourierForm | None = None):
        _Potential.__init__(self, potential)
        self.stretch = None if stretch is None else np.asarray(stretch, dtype=float)

    def _frame(self, v):
        v = np.asarray(v, dtype=float)
        if self.stretch is None:
            return v
        return v * self.stretch[None, :, None]

    def __call__(self, x, v):
        return vol_n(self._frame(v)) + self.V(x)

    def differentiable(self, x, v):
        return vol_n(self._frame(v)) > NONSMOOTH_TOL

    def grad_x(self, x, v):
        return self.dV(x)

    def _scale(self, n):
        return np.ones(n) if self.stretch is None else self.stretch

    def grad_v(self, x, v):
        A = self._frame(v)
        vol, ginv = _vol_and_inverse(A)
        grad = vol[:, None, None] * (ginv @ A)
        return grad * self._scale(v.shape[1])[None, :, None]

    def hess_xv(self, x, v):
        return np.zeros((len(x), x.shape[1]) + v.shape[1:])

    def hess_vv(self, x, v):
        A = self._frame(v)
        N, n, d = A.shape
        vol, ginv = _vol_and_inverse(A)
        P = ginv @ A  # d vol = vol * <P, E>
        out = np.empty((N, n, d, n, d))
        for j in range(n):
            for m in range(d):
                E = np.zeros((n, d))
                E[j, m] = 1.0
                dG = E @ np.swapaxes(A, 1, 2) + A @ E.T
                dvol = vol * P[:, j, m]
                dP = -ginv @ dG @ P + ginv @ E
                out[:, :, :, j, m] = dvol[:, None, None] * P + vol[:, None, None] * dP
        s = self._scale(n)
        return out * s[None, :, None, None, None] * s[None, None, None, :, None]


def _vol_and_inverse(A):
    G = A @ np.swapaxes(A, 1, 2)
    vol = np.sqrt(np.abs(np.linalg.det(G)))
    ginv = np.full_like(G, np.nan)
    ok = vol > NONSMOOTH_TOL
    ginv[ok] = np.linalg.inv(G[ok])
    return vol, ginv


def sock(beta: float, potential: FourierForm | None = None) -> Volume:
    """vol_2(v_1, beta v_2) + V(x)."""
    return Volume(stretch=(1.0, beta), potential=potential)


CATALOGUE = {
    "length": Length,
    "mechanical": Mechanical,
    "dirichlet": Dirichlet,
    "volume": Volume,
    "sock": sock,
}


# ------------------------------------------------------------- operations


def action(L: Lagrangian, mu: AtomicMeasure) -> float:
    return integrate(mu, L)


def hamiltonian(L: Lagrangian, i: int, x, v) -> np.ndarray:
    """H_i = g(v_i, grad_{v_i} L) - L."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.asarray(v, dtype=float)
    if v.ndim == 2:
        v = v[None]
    L.require_differentiable(x, v)
    return np.sum(v[:, i, :] * L.grad_v(x, v)[:, i, :], axis=1) - L(x, v)


def energy_defect(L: Lagrangian, mu: AtomicMeasure, i: int = 0) -> np.ndarray:
    """Per-atom g(v_i, grad_{v_i} L) - L + A_L(mu)."""
    return hamiltonian(L, i, mu.x, mu.v) + action(L, mu)
