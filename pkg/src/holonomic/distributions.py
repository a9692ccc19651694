"""Mild distributions in structural form eta = sum_I d^I nu_I.

Each term pairs a multi-index I over the (n+1)*d phase coordinates with a
signed atomic measure nu_I, and

    <d^I nu, f> = (-1)^|I| sum_a w_a (d^I f)(p_a).
"""

from __future__ import annotations

import itertools
import json
from functools import lru_cache
from importlib import resources
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .functions import Constant, TestFunction, join_z, split_z
from .geometry import constant_forms, exact_form_basis, torus_delta
from .measures import AtomicMeasure, concat, phase_distances
from .stencils import StencilError, central_nodes, stencil  # noqa: F401  (re-exported)

MOLLIFIER_MASS = 0.4439938161680794  # integral of exp(-1/(1-x^2)) over (-1, 1)


@dataclass(frozen=True, eq=False)
class MildDistribution:
    terms: tuple[tuple[tuple[int, ...], AtomicMeasure], ...] = ()
    d: int | None = None
    n: int | None = None

    def __post_init__(self):
        terms = tuple((tuple(int(i) for i in idx), mu) for idx, mu in self.terms)
        d, n = self.d, self.n
        for idx, mu in terms:
            d = mu.d if d is None else d
            n = mu.n if n is None else n
            if (mu.d, mu.n) != (d, n):
                raise ValueError("terms live on different phase spaces")
            if len(idx) != (n + 1) * d or min(idx, default=0) < 0:
                raise ValueError(f"bad multi-index {idx} for d={d}, n={n}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "n", n)

    @classmethod
    def zero(cls, d: int, n: int) -> MildDistribution:
        return cls((), d, n)

    @classmethod
    def from_measure(cls, mu: AtomicMeasure) -> MildDistribution:
        return cls((((0,) * ((mu.n + 1) * mu.d), mu),))

    @property
    def dim(self) -> int:
        return (self.n + 1) * self.d

    @property
    def order(self) -> int:
        return max((sum(i) for i, _ in self.terms), default=0)

    def __add__(self, other: MildDistribution) -> MildDistribution:
        return MildDistribution(self.terms + other.terms, self.d or other.d, self.n or other.n)

    def __sub__(self, other: MildDistribution) -> MildDistribution:
        return self + other.scale(-1.0)

    def scale(self, c: float) -> MildDistribution:
        return MildDistribution(tuple((i, mu.scaled(c)) for i, mu in self.terms), self.d, self.n)

    def atoms(self):
        """Yield (term number, index, x, v, weight) for every atom with nonzero weight."""
        for t, (idx, mu) in enumerate(self.terms):
            for a in range(len(mu)):
                if mu.w[a] != 0.0:
                    yield t, idx, mu.x[a], mu.v[a], mu.w[a]

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "terms": [
                {
                    "index": list(idx),
                    "atoms": [
                        {"x": mu.x[a].tolist(), "v": mu.v[a].tolist(), "w": float(mu.w[a])}
                        for a in range(len(mu))
                    ],
                }
                for idx, mu in self.terms
            ],
        }

    @classmethod
    def from_json(cls, obj) -> MildDistribution:
        if isinstance(obj, str):
            obj = json.loads(obj)
        terms = []
        for t in obj["terms"]:
            atoms = t["atoms"]
            if not atoms:
                continue
            mu = AtomicMeasure(
                [a["x"] for a in atoms], [a["v"] for a in atoms], [a["w"] for a in atoms], signed=True
            )
            terms.append((tuple(t["index"]), mu))
        return cls(tuple(terms), obj.get("d"), obj.get("n"))


def pair(eta: MildDistribution, f: TestFunction) -> float:
    total = 0.0
    for idx, mu in eta.terms:
        if len(mu) == 0:
            continue
        vals = np.asarray(f.derivative(idx, mu.x, mu.v), dtype=float)
        total += (-1) ** sum(idx) * float(np.sum(mu.w * vals))
    return total


# ------------------------------------------------------------------ checks


@dataclass
class CheckResult:
    passed: bool
    value: float
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __bool__(self) -> bool:
        return self.passed


def check_prob(eta: MildDistribution, tol: float = 1e-9) -> CheckResult:
    """<eta, 1> = signed weight of the order-0 terms; derivative terms give exactly 0."""
    value = pair(eta, Constant(1.0))
    return CheckResult(abs(value) <= tol, value, np.array([value]))


def check_hol(eta: MildDistribution, K: int = 3, tol: float = 1e-9) -> CheckResult:
    res = np.array([pair(eta, b) for b in exact_form_basis(eta.d, eta.n, K)])
    worst = float(np.max(np.abs(res))) if len(res) else 0.0
    return CheckResult(worst <= tol, worst, res)


def check_hom(eta: MildDistribution, tol: float = 1e-9) -> CheckResult:
    res = np.array([pair(eta, f) for f in constant_forms(eta.d, eta.n)])
    worst = float(np.max(np.abs(res))) if len(res) else 0.0
    return CheckResult(worst <= tol, worst, res)


@dataclass
class PosReport:
    passed: bool
    diagnostics: list[dict]

    def __bool__(self) -> bool:
        return self.passed


def _local_frame(mu: AtomicMeasure, j: int, radius: float, rel_tol: float = 1e-6) -> np.ndarray:
    """Orthonormal basis (rows) of the principal directions of supp mu near atom j."""
    z = join_z(mu.x, mu.v)
    disp = z - z[j]
    disp[:, : mu.d] = torus_delta(mu.x, mu.x[j])
    dist = np.linalg.norm(disp, axis=1)
    near = disp[(dist <= radius) & (dist > 0)]
    if len(near) == 0:
        return np.zeros((0, z.shape[1]))
    _, s, vt = np.linalg.svd(near, full_matrices=False)
    return vt[s > rel_tol * s[0]]


def check_pos_structural(
    eta: MildDistribution,
    mu: AtomicMeasure,
    radius: float = 0.1,
    support_tol: float = 1e-9,
) -> PosReport:
    """Necessary structural test for (Pos); a heuristic, not a certificate.

    Every atom of eta must sit on an atom of mu, and the derivative orders of
    its term along coordinate directions transverse to the local principal
    subspace of supp mu must total at most one.
    """
    if len(mu) == 0:
        raise ValueError("reference measure is empty")
    diagnostics = []
    passed = True
    frames: dict[int, np.ndarray] = {}
    for t, idx, x, v, _ in eta.atoms():
        dist = phase_distances(mu, x[None], v[None])[0]
        j = int(np.argmin(dist))
        in_support = bool(dist[j] <= support_tol)
        if j not in frames:
            frames[j] = _local_frame(mu, j, radius)
        frame = frames[j]
        transverse = 0
        for k, order in enumerate(idx):
            if order == 0:
                continue
            e = np.zeros(eta.dim)
            e[k] = 1.0
            perp = e - frame.T @ (frame @ e) if len(frame) else e
            if np.linalg.norm(perp) > 1e-8:
                transverse += order
        ok = in_support and transverse <= 1
        passed &= ok
        diagnostics.append(
            {
                "term": t,
                "index": idx,
                "in_support": in_support,
                "support_distance": float(dist[j]),
                "tangent_dim": int(len(frame)),
                "transverse_order": transverse,
                "passed": ok,
            }
        )
    return PosReport(passed, diagnostics)


class _TransverseSquare(TestFunction):
    """((z - z0) . e)^2 * exp(-|z - z0|^2 / (2 r^2)), base offsets wrapped."""

    def __init__(self, x0, v0, direction, radius):
        self.z0 = join_z(np.asarray(x0)[None], np.asarray(v0)[None])[0]
        self.e = np.asarray(direction, dtype=float)
        self.r = float(radius)
        self.d = len(x0)

    def __call__(self, x, v):
        dz = join_z(x, v) - self.z0
        dz[:, : self.d] = torus_delta(x, self.z0[: self.d])
        return (dz @ self.e) ** 2 * np.exp(-np.sum(dz**2, axis=1) / (2 * self.r**2))


def check_pos_plus(
    eta: MildDistribution,
    mu: AtomicMeasure,
    battery: Sequence[TestFunction] | None = None,
    radius: float = 0.1,
    tol: float = 1e-9,
) -> CheckResult:
    """(Pos+) inequality on a battery of nonnegative functions vanishing on supp mu.

    The default battery puts, at each atom of eta, a squared transverse
    coordinate times a Gaussian cutoff, for every direction orthogonal to the
    local principal subspace of supp mu. Per-test values are returned.
    """
    tests = list(battery or [])
    if battery is None:
        for _, _, x, v, _ in eta.atoms():
            j = int(np.argmin(phase_distances(mu, x[None], v[None])[0]))
            frame = _local_frame(mu, j, radius)
            complement = np.linalg.svd(
                np.eye(eta.dim) - (frame.T @ frame if len(frame) else 0.0)
            )[0]
            rank = eta.dim - len(frame)
            for e in complement.T[:rank]:
                tests.append(_TransverseSquare(x, v, e, radius))
    values = np.array([pair(eta, f) for f in tests])
    worst = float(values.min()) if len(values) else 0.0
    return CheckResult(worst >= -tol, worst, values)


# --------------------------------------------------------------- stencils


def discretize(eta: MildDistribution, h: float) -> AtomicMeasure:
    """Replace each d^I delta_p by (-1)^|I| sum_i c_i delta_{p + h x_i} (product central stencils)."""
    xs, vs, ws = [], [], []
    for _, idx, x, v, w in eta.atoms():
        axes = [(k, o) for k, o in enumerate(idx) if o]
        per_axis = [(k, central_nodes(o), stencil(o, central_nodes(o), h)) for k, o in axes]
        z0 = join_z(x[None], v[None])[0]
        sign = (-1) ** sum(idx)
        for combo in itertools.product(*[range(len(p[1])) for p in per_axis]):
            z = z0.copy()
            weight = sign * w
            for (k, nodes, c), j in zip(per_axis, combo):
                z[k] += h * nodes[j]
                weight *= c[j]
            if weight != 0.0:
                px, pv = split_z(z[None], eta.d, eta.n)
                xs.append(px[0])
                vs.append(pv[0])
                ws.append(weight)
    if not ws:
        return AtomicMeasure.empty(eta.d, eta.n)
    return AtomicMeasure(xs, vs, ws, signed=True)


# --------------------------------------------------------------- smoothing

SMOOTH_FD_STEP = 2e-4


def mollifier(x) -> np.ndarray:
    """psi(x) = exp(-1/(1-x^2)) / MOLLIFIER_MASS on (-1, 1), zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2)) / MOLLIFIER_MASS
    return out


@lru_cache(maxsize=None)
def mollifier_rule(q: int) -> tuple[np.ndarray, np.ndarray]:
    """q-point Gauss rule for the weight psi (frozen table, q <= 32)."""
    table = json.loads(resources.files("holonomic").joinpath("data/mollifier_rules.json").read_text())
    if str(q) not in table["rules"]:
        raise ValueError(f"no mollifier rule with {q} points (have 1..{len(table['rules'])})")
    rule = table["rules"][str(q)]
    return np.array(rule["nodes"]), np.array(rule["weights"])


def _fourth_order_nodes(order: int) -> np.ndarray:
    half = (order + 1) // 2 + 1
    return np.arange(-half, half + 1, dtype=float)


def smooth(
    eta: MildDistribution,
    width: float,
    q: int = 16,
    axes: Sequence[int] | None = None,
) -> AtomicMeasure:
    """Signed atom cloud standing in for the mollified distribution psi_t * eta.

    Pairing the cloud with f approximates <eta, psi_t * f>, where the
    convolution runs along the coordinate vector fields in ``axes`` (default
    all (n+1)*d phase coordinates; their flows are translations). Each axis
    uses the q-point Gauss rule of the mollifier weight. A derivative term
    d^I nu is first turned into a fourth-order difference quotient of
    translated atoms, which is exact on the polynomial part of psi_t * f.
    """
    if width <= 0:
        raise ValueError("smoothing width must be positive")
    axes = list(range(eta.dim)) if axes is None else sorted(set(axes))
    s, g = mollifier_rule(q)
    grids = list(itertools.product(range(q), repeat=len(axes)))
    offsets = np.zeros((len(grids), eta.dim))
    offsets[:, axes] = width * np.array([[s[i] for i in combo] for combo in grids]).reshape(len(grids), -1)
    quad = np.array([np.prod([g[i] for i in combo]) for combo in grids])
    h = SMOOTH_FD_STEP
    parts = []
    for idx, mu in eta.terms:
        if len(mu) == 0:
            continue
        per_axis = []
        for k, o in enumerate(idx):
            if o:
                nodes = _fourth_order_nodes(o)
                per_axis.append((k, nodes, stencil(o, nodes, h)))
        shifts, coeffs = [], []
        for combo in itertools.product(*[range(len(p[1])) for p in per_axis]):
            shift = np.zeros(eta.dim)
            c = (-1.0) ** sum(idx)
            for (k, nodes, weights), j in zip(per_axis, combo):
                shift[k] += h * nodes[j]
                c *= weights[j]
            if c != 0.0:
                shifts.append(shift)
                coeffs.append(c)
        shifts = np.array(shifts)
        # every (atom, stencil node, quadrature node) triple becomes one atom
        disp = (shifts[:, None, :] + offsets[None, :, :]).reshape(-1, eta.dim)
        kern = (np.array(coeffs)[:, None] * quad[None, :]).ravel()
        z = np.repeat(join_z(mu.x, mu.v), len(disp), axis=0) + np.tile(disp, (len(mu), 1))
        w = np.repeat(mu.w, len(disp)) * np.tile(kern, len(mu))
        x, v = split_z(z, eta.d, eta.n)
        parts.append(AtomicMeasure(x, v, w, signed=True))
    if not parts:
        return AtomicMeasure.empty(eta.d, eta.n)
    return concat(parts)


# --------------------------------------------------------------- transport


@dataclass
class TransportField:
    field: np.ndarray  # (N, (n+1)*d): base components then fiber components
    residual: float
    passed: bool


def continuity_field(
    mu: AtomicMeasure,
    eta: MildDistribution,
    tests: Sequence[TestFunction],
    tol: float = 1e-6,
) -> TransportField:
    """Least-norm per-atom velocity v with <eta, f> = sum_a w_a grad f(p_a) . v_a for f in tests.

    The norm is sum_a w_a |v_a|^2; solved through the substitution
    y_a = sqrt(w_a) v_a and a minimum-norm least-squares solve.
    """
    if np.any(mu.w <= 0):
        raise ValueError("continuity_field needs strictly positive weights")
    D = (mu.n + 1) * mu.d
    N = len(mu)
    if not tests:
        return TransportField(np.zeros((N, D)), 0.0, True)
    sq = np.sqrt(mu.w)
    G = np.zeros((len(tests), N * D))
    b = np.zeros(len(tests))
    for k, f in enumerate(tests):
        grad = np.empty((N, D))
        for j in range(D):
            e = [0] * D
            e[j] = 1
            grad[:, j] = f.derivative(e, mu.x, mu.v)
        G[k] = (sq[:, None] * grad).ravel()
        b[k] = pair(eta, f)
    y, *_ = np.linalg.lstsq(G, b, rcond=1e-12)
    residual = float(np.max(np.abs(G @ y - b)))
    field_ = y.reshape(N, D) / sq[:, None]
    return TransportField(field_, residual, residual <= tol)
