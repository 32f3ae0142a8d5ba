"""Assembly and solution of the local, nonlocal and variable-horizon coupled systems.

Every node carries one unknown and one equation. Local (LM) nodes use the
3-point finite-difference stencil, nonlocal (NLM) nodes a trapezoidal
collocation of the peridynamic integral with the horizon shrinking toward
the interfaces, and each interface node matches the local stress with the
one-sided peridynamic stress.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .grid import Grid, Material, horizon_nodes

LM, NLM = 0, 1

# one-sided 4-point first-derivative stencils (times 1/(6h)), exact on cubics
BACKWARD = np.array([-2.0, 9.0, -18.0, 11.0])   # u[k-3..k]
FORWARD = np.array([-11.0, 18.0, -9.0, 2.0])    # u[k..k+3]


class SolverError(RuntimeError):
    """Raised when a linear system cannot be solved reliably."""


class DegenerateReferenceWarning(UserWarning):
    """The reference solution has zero norm; the absolute error was returned."""


@dataclass(frozen=True)
class Dirichlet:
    value: float = 0.0


@dataclass(frozen=True)
class Neumann:
    g: float = 0.0


@dataclass(frozen=True)
class BoundaryConditions:
    left: Dirichlet = Dirichlet()
    right: object = Neumann()

    def __post_init__(self):
        if not isinstance(self.left, Dirichlet):
            raise ValueError("the left boundary condition must be Dirichlet")
        if not isinstance(self.right, (Dirichlet, Neumann)):
            raise ValueError("right boundary condition must be Dirichlet or Neumann")


@dataclass
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray


@dataclass
class Solution:
    u: np.ndarray
    residual_norm: float = 0.0


def nonlocal_intervals(labels) -> list:
    """Maximal runs of NLM nodes as ``(first, last)`` index pairs."""
    lab = np.asarray(labels).astype(np.int8)
    padded = np.concatenate(([0], lab, [0]))
    edges = np.flatnonzero(np.diff(padded))
    return [(int(s), int(e) - 1) for s, e in zip(edges[::2], edges[1::2])]


def labels_from_intervals(n: int, intervals) -> np.ndarray:
    lab = np.zeros(n + 1, dtype=np.int8)
    for a, b in intervals:
        lab[a:b + 1] = NLM
    return lab


def nonlocal_row(grid: Grid, material: Material, m_local: int, k: int):
    """Collocation stencil of the peridynamic operator at node `k`.

    Returns ``(columns, coefficients)``. Trapezoidal weights (1/2 on the
    outermost bond) reproduce the 5-point m=2 stencil and make the row
    exact on cubics, since sum(beta_j * j) = m_local**2 / 2.
    """
    if not 1 <= m_local <= grid.m:
        raise ValueError(f"m_local={m_local} outside 1..{grid.m}")
    if k - m_local < 0 or k + m_local > grid.n:
        raise ValueError(f"stencil of node {k} with m_local={m_local} leaves the grid")
    h = grid.h
    kbar = 2.0 * material.EA / (m_local * h) ** 2
    j = np.arange(1, m_local + 1)
    beta = np.ones(m_local)
    beta[-1] = 0.5
    off = -kbar * beta / (j * h) * h
    cols = np.concatenate((k - j[::-1], [k], k + j))
    coef = np.concatenate((off[::-1], [-2.0 * off.sum()], off))
    return cols, coef


def check_regions(grid: Grid, intervals) -> None:
    """Geometric preconditions the coupled assembly relies on."""
    prev_b = None
    for a, b in intervals:
        if b - a < 2 * grid.m:
            raise ValueError(
                f"nonlocal interval [{a}, {b}] spans {b - a} intervals; need at least {2 * grid.m}")
        if a < 3 or b > grid.n - 3:
            raise ValueError(f"nonlocal interval [{a}, {b}] too close to the boundary")
        if prev_b is not None and a - prev_b < 2:
            raise ValueError("nonlocal intervals must be separated by at least one local node")
        prev_b = b


def _assemble(grid, material, intervals, bc, f):
    n, h, EA = grid.n, grid.h, material.EA
    K = np.zeros((n + 1, n + 1))
    rhs = np.array(f, dtype=float, copy=True)
    if rhs.shape != (n + 1,):
        raise ValueError(f"load has {rhs.size} values, grid has {n + 1} nodes")

    lab = labels_from_intervals(n, intervals)
    c2 = EA / h**2
    for k in range(1, n):
        if lab[k] == LM:
            K[k, k - 1:k + 2] = (-c2, 2 * c2, -c2)

    s = EA / (6.0 * h)   # kappa*delta^2/2 == EA for every local horizon
    for a, b in intervals:
        for k in range(a + 1, b):
            cols, coef = nonlocal_row(grid, material, horizon_nodes(grid.m, a, b, k), k)
            K[k, cols] = coef
        if a > 0:
            K[a, :] = 0.0
            K[a, a - 3:a + 1] += s * BACKWARD
            K[a, a:a + 4] -= s * FORWARD
            rhs[a] = 0.0
        if b < n:
            K[b, :] = 0.0
            K[b, b:b + 4] += s * FORWARD
            K[b, b - 3:b + 1] -= s * BACKWARD
            rhs[b] = 0.0

    K[0, :] = 0.0
    K[0, 0] = 1.0
    rhs[0] = bc.left.value
    K[n, :] = 0.0
    if isinstance(bc.right, Neumann):
        K[n, n - 3:] = s * BACKWARD
        rhs[n] = bc.right.g
    else:
        K[n, n] = 1.0
        rhs[n] = bc.right.value
    return LinearSystem(K, rhs)


def assemble_vhcm(grid: Grid, material: Material, regions, bc: BoundaryConditions, load) -> LinearSystem:
    """Coupled system for the NLM/LM labelling `regions` (one label per node)."""
    lab = np.asarray(regions)
    if lab.shape != (grid.node_count,):
        raise ValueError(f"expected {grid.node_count} labels, got {lab.size}")
    intervals = nonlocal_intervals(lab)
    check_regions(grid, intervals)
    return _assemble(grid, material, intervals, bc, getattr(load, "values", load))


def solve(system: LinearSystem) -> Solution:
    K, rhs = system.matrix, system.rhs
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != rhs.size:
        raise ValueError(f"system is not square: matrix {K.shape}, rhs {rhs.shape}")
    try:
        u = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular matrix (condition estimate {np.linalg.cond(K):.3e})") from exc
    res = float(np.linalg.norm(K @ u - rhs))
    scale = max(float(np.linalg.norm(rhs)), 1.0)
    if not np.all(np.isfinite(u)) or res > 1e-8 * scale:
        raise SolverError(
            f"ill-conditioned system: residual {res:.3e}, condition estimate {np.linalg.cond(K):.3e}")
    return Solution(u, res)


def solve_vhcm(grid, material, regions, bc, load) -> Solution:
    return solve(assemble_vhcm(grid, material, regions, bc, load))


def solve_local(grid, material, bc, load) -> Solution:
    return solve_vhcm(grid, material, np.zeros(grid.node_count, dtype=np.int8), bc, load)


def solve_nonlocal(grid, material, bc, load) -> Solution:
    """Fully nonlocal reference: horizon collapses toward both end nodes."""
    return solve(_assemble(grid, material, [(0, grid.n)], bc, getattr(load, "values", load)))


def _values(u):
    return np.asarray(getattr(u, "u", u), dtype=float)


def relative_error(u_ref, u_test) -> float:
    """Relative l2 distance of `u_test` from `u_ref`.

    A zero reference returns the absolute norm of `u_test` and emits
    :class:`DegenerateReferenceWarning`.
    """
    r, t = _values(u_ref), _values(u_test)
    if r.shape != t.shape:
        raise ValueError(f"length mismatch: {r.shape} vs {t.shape}")
    ref_norm = np.linalg.norm(r)
    diff = float(np.linalg.norm(r - t))
    if ref_norm == 0.0:
        warnings.warn("reference solution has zero norm", DegenerateReferenceWarning, stacklevel=2)
        return float(np.linalg.norm(t))
    return diff / float(ref_norm)


def pointwise_error(u_ref, u_test) -> np.ndarray:
    r, t = _values(u_ref), _values(u_test)
    if r.shape != t.shape:
        raise ValueError(f"length mismatch: {r.shape} vs {t.shape}")
    return np.abs(r - t)


def solution_csv(grid: Grid, solution) -> str:
    u = _values(solution)
    lines = ["x,u"] + [f"{x:.17g},{v:.17g}" for x, v in zip(grid.x, u)]
    return "\n".join(lines) + "\n"
