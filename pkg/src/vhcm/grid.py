"""Uniform 1D discretization of the bar and the index arithmetic built on it."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, length] with `n` intervals and horizon `m * h`."""

    length: float
    n: int
    m: int

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def delta(self) -> float:
        return self.m * self.h

    @property
    def node_count(self) -> int:
        return self.n + 1

    @property
    def x(self) -> np.ndarray:
        # k*h, never cumulative sums: interface nodes must coincide exactly
        return np.arange(self.n + 1) * self.h

    def node(self, k: int) -> float:
        return k * self.h

    def snap(self, position: float) -> int:
        """Index of the node nearest to `position`."""
        k = int(round(position / self.h))
        if not 0 <= k <= self.n:
            raise ValueError(f"position {position} lies outside [0, {self.length}]")
        return k


@dataclass(frozen=True)
class Material:
    """Elastic modulus and cross-section; the peridynamic stiffness follows from the horizon."""

    E: float = 1.0
    A: float = 1.0

    def __post_init__(self):
        if self.E <= 0 or self.A <= 0:
            raise ValueError("E and A must be positive")

    @property
    def EA(self) -> float:
        return self.E * self.A

    def kappa(self, delta: float) -> float:
        """Stiffness making the nonlocal model compatible with the local one."""
        return 2.0 * self.EA / delta**2


def make_grid(length: float, n: int, m: int) -> Grid:
    if length <= 0:
        raise ValueError(f"length must be positive, got {length}")
    if m < 1 or n < 1:
        raise ValueError(f"n and m must be positive integers, got n={n}, m={m}")
    if n < 4 * m + 2:
        raise ValueError(
            f"n={n} is too small for m={m}: need n >= 4m+2 = {4 * m + 2} "
            "so a nonlocal region fits between 2*delta and length - 2*delta"
        )
    return Grid(float(length), int(n), int(m))


def variable_horizon(grid: Grid, a: float, b: float, x: float) -> float:
    """Horizon that shrinks linearly to zero at the interfaces `a` and `b`.

    All three positions are snapped to nodes so the result is an exact
    multiple of ``h``.
    """
    ka, kb, kx = grid.snap(a), grid.snap(b), grid.snap(x)
    return horizon_nodes(grid.m, ka, kb, kx) * grid.h


def horizon_nodes(m: int, ka: int, kb: int, k: int) -> int:
    """Local horizon in units of h for node `k` strictly inside (ka, kb)."""
    if not ka < k < kb:
        raise ValueError(f"node {k} is not strictly inside ({ka}, {kb})")
    return min(k - ka, m, kb - k)
