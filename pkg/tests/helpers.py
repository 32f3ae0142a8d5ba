"""Shared oracles for the test suite."""

import numpy as np

from vhcm.grid import Material, make_grid
from vhcm.solver import BoundaryConditions, Dirichlet, Neumann

STD_GRID = make_grid(1.0, 256, 8)
UNIT = Material()
DEFAULT_BC = BoundaryConditions()


def relerr(a, b):
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale)


def numeric_grad(f, x, step=1e-5):
    """Central differences of scalar ``f()`` with respect to array ``x`` (perturbed in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + step
        fp = f()
        x[i] = old - step
        fm = f()
        x[i] = old
        g[i] = (fp - fm) / (2 * step)
    return g


def layer_gradcheck(layer, x, gen, step=1e-5):
    """Max relative error of a layer's backward against finite differences.

    The scalar objective is ``sum(r * layer(x))`` for a fixed random ``r``.
    """
    y, cache = layer.forward(x)
    r = gen.standard_normal(y.shape)
    dx, grads = layer.backward(r, cache)

    def obj():
        return float(np.sum(r * layer.forward(x)[0]))

    errs = [relerr(dx, numeric_grad(obj, x, step))]
    for p, g in zip(layer.params, grads):
        errs.append(relerr(g, numeric_grad(obj, p, step)))
    return max(errs)


def cubic_case(coeffs, bc_right="neumann", grid=STD_GRID, material=UNIT):
    """Nodal cubic, its manufactured load -EA u'' and the matching boundary conditions."""
    a, b, c, d = coeffs
    x = grid.x
    u = a * x**3 + b * x**2 + c * x + d
    f = -material.EA * (6 * a * x + 2 * b)
    L = grid.length
    if bc_right == "neumann":
        right = Neumann(material.EA * (3 * a * L**2 + 2 * b * L + c))
    else:
        right = Dirichlet(a * L**3 + b * L**2 + c * L + d)
    return u, f, BoundaryConditions(Dirichlet(d), right)
