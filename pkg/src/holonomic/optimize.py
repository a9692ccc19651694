"""Action minimization over discretized holonomic measures, criticality scans, E-L residuals."""

from __future__ import annotations

import io
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import lp as simplex_backend
from .distributions import MildDistribution, check_hol, check_hom, check_prob, pair
from .geometry import constant_forms, exact_form_basis
from .lagrangians import Lagrangian
from .measures import AtomicMeasure, Cell, holonomy_residual, homology_class
from .variations import (
    TrigVectorField,
    horizontal_distribution,
    project_out,
    transpositional_distribution,
    vertical_distribution,
)

LP_TOL = 1e-10
FEASIBILITY_TOL = 1e-8


# -------------------------------------------------------------------- LP


def unit_velocities(count: int, d: int = 2) -> np.ndarray:
    """``count`` equally spaced unit vectors in the (e_1, e_2) plane, starting at e_1; shape (count, 1, d)."""
    ang = 2 * np.pi * np.arange(count) / count
    v = np.zeros((count, 1, d))
    v[:, 0, 0] = np.cos(ang)
    v[:, 0, 1] = np.sin(ang)
    v[np.abs(v) < 1e-15] = 0.0
    return v


def base_grid(d: int, N: int) -> np.ndarray:
    axes = [np.arange(N) / N] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def _is_symmetric(velocities: np.ndarray) -> bool:
    flat = velocities.reshape(len(velocities), -1)
    return all(np.any(np.all(np.abs(flat + u) < 1e-12, axis=1)) for u in flat)


@dataclass(frozen=True, eq=False)
class MeasureLP:
    x: np.ndarray  # (M, d)
    v: np.ndarray  # (M, n, d)
    cost: np.ndarray  # (M,)
    A: np.ndarray  # (rows, M)
    b: np.ndarray  # (rows,)
    labels: tuple[str, ...]
    K: int
    homology_target: np.ndarray | None = None

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def n(self) -> int:
        return self.v.shape[1]

    def __len__(self) -> int:
        return len(self.cost)

    def measure(self, weights, tol: float = 0.0) -> AtomicMeasure:
        w = np.asarray(weights, dtype=float)
        keep = w > tol
        return AtomicMeasure(self.x[keep], self.v[keep], w[keep])

    def tableau(self) -> str:
        """Plain-text dump: objective row, then one row per constraint with its label and target."""
        out = io.StringIO()
        out.write(f"# variables {len(self)} rows {len(self.b)} K {self.K}\n")
        out.write("obj " + " ".join(f"{c:.17g}" for c in self.cost) + "\n")
        for lab, row, t in zip(self.labels, self.A, self.b):
            out.write(f"{lab} " + " ".join(f"{a:.17g}" for a in row) + f" = {t:.17g}\n")
        return out.getvalue()


def assemble(
    d: int,
    n: int,
    N: int,
    velocities,
    L: Lagrangian,
    K: int,
    homology_target=None,
    require_symmetric: bool = True,
) -> MeasureLP:
    """One weight per (base node, velocity) pair; probability, holonomy and optional homology rows."""
    velocities = np.asarray(velocities, dtype=float)
    if velocities.ndim == 2:
        velocities = velocities[:, None, :]
    if N < 1 or len(velocities) == 0:
        raise ValueError("empty grid")
    if velocities.shape[1:] != (n, d):
        raise ValueError(f"velocities must have shape (V, {n}, {d})")
    if K < 0:
        raise ValueError("K must be nonnegative")
    if require_symmetric and not _is_symmetric(velocities):
        raise ValueError("velocity set must be symmetric under v -> -v")
    nodes = base_grid(d, N)
    x = np.repeat(nodes, len(velocities), axis=0)
    v = np.tile(velocities, (len(nodes), 1, 1))
    L.require_differentiable(x, v)
    cost = np.asarray(L(x, v), dtype=float)

    rows = [np.ones(len(x))]
    targets = [1.0]
    labels = ["prob"]
    for b, form in enumerate(exact_form_basis(d, n, K) if K >= 1 else []):
        rows.append(form(x, v))
        targets.append(0.0)
        labels.append(f"hol{b}")
    rho = None
    if homology_target is not None:
        rho = np.asarray(homology_target, dtype=float)
        forms = constant_forms(d, n)
        if rho.shape != (len(forms),):
            raise ValueError(f"homology target needs {len(forms)} entries")
        for J, (form, r) in enumerate(zip(forms, rho)):
            rows.append(form(x, v))
            targets.append(float(r))
            labels.append(f"hom{J}")
    return MeasureLP(x, v, cost, np.array(rows), np.array(targets), tuple(labels), K, rho)


class LPError(RuntimeError):
    def __init__(self, status: str, certificate: np.ndarray | None):
        self.status = status
        self.certificate = certificate
        super().__init__(f"LP {status}")


@dataclass
class LPSolution:
    measure: AtomicMeasure
    weights: np.ndarray
    objective: float
    iterations: int
    method: str
    holonomy_residual: float
    probability_residual: float
    homology_residual: float


def _polish(lp: MeasureLP, w: np.ndarray, tol: float) -> np.ndarray:
    """Re-solve the equality system on the support to remove solver slack."""
    support = np.flatnonzero(w > tol)
    if len(support) == 0:
        return w
    sol, *_ = np.linalg.lstsq(lp.A[:, support], lp.b, rcond=None)
    if np.any(sol < 0):
        return w
    out = np.zeros_like(w)
    out[support] = sol
    before = np.abs(lp.A @ w - lp.b).max()
    after = np.abs(lp.A @ out - lp.b).max()
    return out if after <= before else w


def solve(lp: MeasureLP, method: str = "highs", tol: float = LP_TOL) -> LPSolution:
    """Optimal basic weights, polished and re-verified against the constraints.

    ``method`` is "highs" (scipy) or "bland" (the dense reference simplex).
    Raises LPError carrying a certificate when infeasible or unbounded.
    """
    if method == "highs":
        res = linprog(
            lp.cost,
            A_eq=lp.A,
            b_eq=lp.b,
            bounds=(0, None),
            method="highs-ds",
            options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol},
        )
        if res.status in (2, 3):
            ref = simplex_backend.simplex(lp.cost, lp.A, lp.b)
            raise LPError(ref.status if ref.status != "optimal" else res.message, ref.certificate)
        if res.status != 0:
            raise LPError(res.message, None)
        w, its = np.clip(res.x, 0.0, None), int(res.nit)
    elif method == "bland":
        ref = simplex_backend.simplex(lp.cost, lp.A, lp.b)
        if ref.status != "optimal":
            raise LPError(ref.status, ref.certificate)
        w, its = ref.x, ref.iterations
    else:
        raise ValueError(f"unknown LP method {method!r}")
    w = _polish(lp, w, 1e-13)
    mu = lp.measure(w)
    hol = holonomy_residual(mu, lp.K)
    hom = 0.0
    if lp.homology_target is not None:
        hom = float(np.max(np.abs(homology_class(mu) - lp.homology_target)))
    return LPSolution(
        measure=mu,
        weights=w,
        objective=float(lp.cost @ w),
        iterations=its,
        method=method,
        holonomy_residual=float(np.max(np.abs(hol))) if len(hol) else 0.0,
        probability_residual=abs(mu.total_weight - 1.0),
        homology_residual=hom,
    )


# ------------------------------------------------------------ criticality


@dataclass(frozen=True, eq=False)
class Generator:
    eta: MildDistribution
    one_sided: bool = False
    label: str = ""


@dataclass
class CriticalityReport:
    labels: list[str]
    values: np.ndarray
    one_sided: np.ndarray
    tau: float
    excluded: list[tuple[str, str]] = field(default_factory=list)

    @property
    def violations(self) -> np.ndarray:
        """Amount by which each generator breaks its condition (<= 0 means fine)."""
        two = np.abs(self.values) - self.tau
        one = -self.values - self.tau
        return np.where(self.one_sided, one, two)

    @property
    def critical(self) -> bool:
        return bool(np.all(self.violations <= 0))

    @property
    def witness(self) -> tuple[str, float] | None:
        if self.critical:
            return None
        k = int(np.argmax(self.violations))
        return self.labels[k], float(self.values[k])

    def to_json(self) -> dict:
        w = self.witness
        return {
            "critical": self.critical,
            "tau": self.tau,
            "witness": None if w is None else {"label": w[0], "value": w[1]},
            "generators": [
                {"label": lab, "value": float(val), "one_sided": bool(s)}
                for lab, val, s in zip(self.labels, self.values, self.one_sided)
            ],
            "excluded": [{"label": lab, "reason": r} for lab, r in self.excluded],
        }


def criticality_scan(
    mu: AtomicMeasure,
    L: Lagrangian,
    generators: Sequence[Generator],
    tau: float = 1e-6,
    K: int = 3,
    homological: bool = False,
    check_tol: float = 1e-9,
) -> CriticalityReport:
    """Pair L with each admissible generator; ``K`` is the holonomy cutoff used in the pre-checks."""
    labels, values, sided, excluded = [], [], [], []
    for k, g in enumerate(generators):
        label = g.label or f"g{k}"
        reasons = []
        if not check_prob(g.eta, check_tol):
            reasons.append("prob")
        if K >= 1 and not check_hol(g.eta, K, check_tol):
            reasons.append("hol")
        if homological and not check_hom(g.eta, check_tol):
            reasons.append("hom")
        if reasons:
            excluded.append((label, "fails " + ",".join(reasons)))
            continue
        labels.append(label)
        values.append(pair(g.eta, L))
        sided.append(g.one_sided)
    return CriticalityReport(labels, np.array(values, dtype=float), np.array(sided, dtype=bool), tau, excluded)


def generator_battery(
    mu: AtomicMeasure,
    rng: np.random.Generator,
    count: int = 20,
    K: int = 2,
    homological: bool = False,
    field_K: int = 1,
) -> list[Generator]:
    """Random horizontal, projected vertical and transpositional generators at mu.

    Horizontal fields have frequency <= field_K so that the flow derivative of
    d(omega) for omega up to K - field_K stays inside the constraints imposed on mu.
    Transpositional weights are centred in homological mode so the class is kept.
    """
    gens = []
    for k in range(count):
        X = TrigVectorField.random(mu.d, field_K, rng)
        gens.append(Generator(horizontal_distribution(mu, X), False, f"horizontal{k}"))
    for k in range(count):
        u = project_out(mu, rng.standard_normal(mu.v.shape), K, homological)
        gens.append(Generator(vertical_distribution(mu, u), False, f"vertical{k}"))
    for k in range(count):
        X = TrigVectorField.random(mu.d, 2, rng)
        sigma = X.components[0].coefficient((), mu.x)
        if homological:
            sigma = sigma - np.sum(mu.w * sigma) / mu.total_weight
        i = int(rng.integers(mu.n))
        gens.append(Generator(transpositional_distribution(mu, sigma, i), False, f"transpositional{k}"))
    return gens


# ------------------------------------------------------------ E-L residual


@dataclass
class ELResidual:
    field: np.ndarray  # (interior samples..., d)
    points: np.ndarray
    sup: float


def _central(s: np.ndarray, ax: int, h: float) -> np.ndarray:
    return (np.take(s, range(2, s.shape[ax]), axis=ax) - np.take(s, range(0, s.shape[ax] - 2), axis=ax)) / (2 * h)


def _trim(a: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    sl = [slice(None)] * a.ndim
    for ax in axes:
        sl[ax] = slice(1, -1)
    return a[tuple(sl)]


def el_residual(cell: Cell, L: Lagrangian) -> ELResidual:
    """dL/dx - sum_i d/dt_i (dL/dv_i) along the sampled map, at interior samples."""
    s = cell.lifted()
    n, d = cell.n, cell.d
    if any(m < 3 for m in s.shape[:-1]):
        raise ValueError("need at least 3 samples per cell axis")
    h = [1.0 / (m - 1) for m in s.shape[:-1]]
    first = [_central(s, i, h[i]) for i in range(n)]
    # every array trimmed to the common interior
    v = np.stack([_trim(first[i], [a for a in range(n) if a != i]) for i in range(n)], axis=-2)
    X = np.empty(v.shape[:-2] + (n, n, d))
    for i in range(n):
        for j in range(n):
            if i == j:
                sec = (np.take(s, range(2, s.shape[i]), axis=i) - 2 * np.take(s, range(1, s.shape[i] - 1), axis=i)
                       + np.take(s, range(0, s.shape[i] - 2), axis=i)) / h[i] ** 2
                X[..., i, i, :] = _trim(sec, [a for a in range(n) if a != i])
            else:
                ij = _central(first[j], i, h[i])
                ji = _central(first[i], j, h[j])
                rest = [a for a in range(n) if a not in (i, j)]
                X[..., i, j, :] = 0.5 * (_trim(ij, rest) + _trim(ji, rest))
    x = _trim(s, range(n)) % 1.0
    shape = x.shape[:-1]
    xf = x.reshape(-1, d)
    vf = v.reshape(-1, n, d)
    Xf = X.reshape(-1, n, n, d)
    L.require_differentiable(xf, vf)
    gx = L.grad_x(xf, vf)
    hxv = L.hess_xv(xf, vf)  # [a, l, i, k]
    hvv = L.hess_vv(xf, vf)  # [a, i, k, j, m]
    res = gx - np.einsum("alik,ail->ak", hxv, vf) - np.einsum("aikjm,aijm->ak", hvv, Xf)
    res = res.reshape(shape + (d,))
    sup = float(np.max(np.linalg.norm(res, axis=-1))) if res.size else 0.0
    return ELResidual(res, x, sup)
