"""Finite-difference weights from Taylor moment conditions.

Given nodes x_i (offsets in R^D, in units of the step h) and a target
multi-index I, find weights c_i with

    sum_i c_i x_i^J / J! = [J == I]     for every |J| <= degree

so that ``sum_i c_i f(h x_i) / h^|I|`` converges to the I-th partial of f at 0.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence

import numpy as np


class StencilError(ValueError):
    """Node set is not unisolvent for the requested moment system."""

    def __init__(self, message: str, rank: int, rows: int):
        super().__init__(message)
        self.rank = rank
        self.rows = rows
        self.deficiency = rows - rank


def monomial_exponents(dim: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of length ``dim`` with total degree <= ``degree``."""
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(dim), total):
            e = [0] * dim
            for j in combo:
                e[j] += 1
            out.append(tuple(e))
    return out


def _default_degree(dim: int, order: int, n_nodes: int) -> int:
    degree = order
    while len(monomial_exponents(dim, degree + 1)) <= n_nodes:
        degree += 1
    return degree


def moment_matrix(nodes: np.ndarray, exponents: Sequence[tuple[int, ...]]) -> np.ndarray:
    rows = []
    for J in exponents:
        scale = math.prod(math.factorial(j) for j in J)
        rows.append(np.prod(nodes ** np.asarray(J), axis=1) / scale)
    return np.array(rows)


def stencil(index, nodes, h: float = 1.0, degree: int | None = None) -> np.ndarray:
    """Weights approximating the ``index``-th partial derivative at the origin.

    ``nodes`` is a list of offsets (scalars for 1-D, vectors otherwise) measured
    in units of ``h``. ``degree`` is the highest monomial degree matched; by
    default the largest degree whose moment count does not exceed the number of
    nodes. Surplus nodes give the minimum-norm weights.

    Raises StencilError when the moment rows are not independent on the nodes.
    """
    index = tuple(int(i) for i in np.atleast_1d(index))
    if any(i < 0 for i in index):
        raise ValueError(f"negative derivative order in {index}")
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    if nodes.shape[1] != len(index):
        raise ValueError(f"nodes have dimension {nodes.shape[1]}, index has {len(index)}")
    order = sum(index)
    if degree is None:
        degree = _default_degree(len(index), order, len(nodes))
    if degree < order:
        raise ValueError(f"degree {degree} below derivative order {order}")

    exps = monomial_exponents(len(index), degree)
    A = moment_matrix(nodes, exps)
    rank = np.linalg.matrix_rank(A, tol=1e-10 * max(1.0, np.abs(A).max()))
    if rank < len(exps):
        raise StencilError(
            f"moment system of degree {degree} has rank {rank} < {len(exps)} rows "
            f"on {len(nodes)} nodes",
            rank=rank,
            rows=len(exps),
        )
    b = np.array([1.0 if J == index else 0.0 for J in exps])
    c, *_ = np.linalg.lstsq(A, b, rcond=None)
    return c / h**order


def central_nodes(order: int) -> np.ndarray:
    """Smallest symmetric integer node set giving a second-order central stencil."""
    half = (order + 1) // 2
    return np.arange(-half, half + 1, dtype=float)
