"""Parametric load families, their sampling on the grid and the second-derivative preprocessing."""

from dataclasses import dataclass, fields, replace
from enum import Enum

import numpy as np

from .grid import Grid


class Family(str, Enum):
    F1 = "f1"   # step-like load whose nonlocal solution jumps at x_jump
    F2 = "f2"   # antisymmetric log spike at x_jump
    F3 = "f3"   # linear, cubic solution: local and nonlocal agree
    F4 = "f4"   # tanh ramp around 0.5
    F5 = "f5"   # gaussian bump at c


SINGULAR = (Family.F1, Family.F2)


@dataclass(frozen=True)
class LoadSpec:
    family: Family
    x_jump: float = 0.5
    c1: float = 0.0
    c2: float = 0.0
    t: float = 0.05
    c: float = 0.5
    negated: bool = False
    delta: float = 1.0 / 32

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.F4 and self.t <= 0:
            raise ValueError("f4 needs t > 0")
        if self.family in SINGULAR and self.delta <= 0:
            raise ValueError("f1/f2 need a positive delta")

    @property
    def singular(self) -> bool:
        return self.family in SINGULAR

    def negate(self) -> "LoadSpec":
        return replace(self, negated=not self.negated)

    def to_record(self) -> dict:
        rec = {f.name: getattr(self, f.name) for f in fields(self)}
        rec["family"] = self.family.value
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "LoadSpec":
        kw = {}
        for f in fields(cls):
            if f.name not in rec:
                continue
            v = rec[f.name]
            if f.name == "negated":
                v = v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes")
            elif f.name != "family":
                v = float(v)
            kw[f.name] = v
        return cls(**kw)


@dataclass(frozen=True)
class LoadSum:
    """Superposition of several loads, e.g. an f1 with two jumps."""

    parts: tuple

    @property
    def singular(self) -> bool:
        return any(p.singular for p in self.parts)


@dataclass
class LoadVector:
    values: np.ndarray
    spec: object = None


def parse_spec(text: str, delta: float = None):
    """Parse ``"f1 x_jump=0.71 negated=1"``; ``+`` joins several specs into a LoadSum."""
    if "+" in text:
        return LoadSum(tuple(parse_spec(p, delta) for p in text.split("+")))
    tokens = text.replace(",", " ").split()
    if not tokens:
        raise ValueError("empty load spec")
    rec = {"family": tokens[0].lower()}
    for tok in tokens[1:]:
        key, _, val = tok.partition("=")
        rec[key.strip()] = val.strip()
    if delta is not None and "delta" not in rec:
        rec["delta"] = delta
    return LoadSpec.from_record(rec)


def _f1(s, delta):
    # s is the coordinate of the closed-form formula (singularity at 0.5)
    d = delta
    base = 0.5 * d**2 - d + 3.0 / 8.0
    # right constant chosen so f(1 - s) = 1 - f(s); the load is then continuous at 0.5 + d
    base_r = 5.0 / 8.0 - d - 0.5 * d**2
    out = np.where(s >= 0.5 + d, 1.0, 0.0)
    left = (s >= 0.5 - d) & (s < 0.5)
    right = (s > 0.5) & (s < 0.5 + d)
    with np.errstate(divide="ignore", invalid="ignore"):
        fl = (base + (2 * d - 1.5 - np.log(d)) * s + (1.5 + np.log(d)) * s**2
              - (s**2 - s) * np.log(0.5 - s))
        fr = (base_r + (2 * d + 1.5 + np.log(d)) * s - (1.5 + np.log(d)) * s**2
              + (s**2 - s) * np.log(s - 0.5))
    out = np.where(left, fl, out)
    out = np.where(right, fr, out)
    # exactly on the singularity both branches diverge; use the principal value
    out = np.where(s == 0.5, 0.5, out)
    return out


def _f2(s, delta):
    d = delta
    left = (s >= 0.5 - d) & (s < 0.5)
    right = (s > 0.5) & (s < 0.5 + d)
    with np.errstate(divide="ignore", invalid="ignore"):
        fl = (np.log(d) - np.log(0.5 - s)) / (2 * d**2)
        fr = (np.log(s - 0.5) - np.log(d)) / (2 * d**2)
    out = np.zeros_like(s)
    out = np.where(left, fl, out)
    out = np.where(right, fr, out)
    return out


def eval_load(spec, x):
    """Value of the load at `x` (scalar or array)."""
    if isinstance(spec, LoadSum):
        return sum(eval_load(p, x) for p in spec.parts)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    fam = spec.family
    if fam is Family.F1:
        v = _f1(x + (0.5 - spec.x_jump), spec.delta)
    elif fam is Family.F2:
        v = _f2(x + (0.5 - spec.x_jump), spec.delta)
    elif fam is Family.F3:
        v = spec.c1 * x + spec.c2
    elif fam is Family.F4:
        v = np.tanh((x - 0.5) / spec.t)
    elif fam is Family.F5:
        v = np.exp(-400.0 * (x - spec.c) ** 2)
    else:  # pragma: no cover
        raise ValueError(f"unknown family {fam}")
    if spec.negated:
        v = -v
    return float(v) if scalar else v


def sample_load(spec, grid: Grid) -> LoadVector:
    return LoadVector(np.asarray(eval_load(spec, grid.x), dtype=float), spec)


def second_derivative(load, grid: Grid) -> np.ndarray:
    """Second-order finite-difference second derivative at every node.

    Interior nodes use the central 3-point stencil, the two end nodes the
    one-sided 4-point stencil, so polynomials up to degree 2 are exact
    everywhere.
    """
    v = np.asarray(getattr(load, "values", load), dtype=float)
    if v.shape != (grid.node_count,):
        raise ValueError(f"load has {v.size} values, grid has {grid.node_count} nodes")
    if v.size < 4:
        raise ValueError("need at least 4 nodes for the boundary stencil")
    h2 = grid.h**2
    d2 = np.empty_like(v)
    d2[1:-1] = (v[:-2] - 2 * v[1:-1] + v[2:]) / h2
    d2[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h2
    d2[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h2
    # differences at round-off level of the samples are exact zeros (linear loads)
    noise = 64 * np.finfo(float).eps * np.max(np.abs(v), initial=0.0) / h2
    d2[np.abs(d2) <= noise] = 0.0
    return d2


def augment(specs):
    """Append a negated copy of every f1/f2 spec."""
    specs = list(specs)
    return specs + [s.negate() for s in specs if isinstance(s, LoadSpec) and s.singular]
