"""End-to-end steps: generate data, train, predict regions, verify them by re-solving."""

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import labeling, metrics
from .grid import Grid, Material
from .labeling import Dataset, post_process, preprocess, windows
from .loads import LoadSpec, LoadSum, LoadVector, sample_load
from .nn import CnnModel, History, TrainConfig, predict_labels, train
from .solver import (BoundaryConditions, DegenerateReferenceWarning, nonlocal_intervals,
                     pointwise_error, relative_error, solve_local, solve_nonlocal, solve_vhcm)

log = logging.getLogger(__name__)


def generate(config):
    """References and dataset for an :class:`~vhcm.io.ExperimentConfig`.

    Returns ``(dataset, references, report)``.
    """
    grid, mat, bc = config.grid, config.material, config.bc
    start = time.perf_counter()
    refs = labeling.build_references(
        grid, mat, bc, config.eps, config.seed, config.roster_per_family,
        config.roster_polynomial, config.families, config.roster_negate, config.workers)
    if config.case == "full_domain":
        ds = labeling.build_fulldomain_dataset(refs, grid, config.seed, config.fractions)
    else:
        ds = labeling.build_window_dataset(refs, grid, config.seed, config.fractions)
    report = {
        "case": config.case,
        "loads": len(refs),
        "samples": len(ds),
        "split": ds.counts(),
        "wall_time_s": time.perf_counter() - start,
        "references": [
            {**r.spec.to_record(), "alpha": r.alpha, "achieved_error": r.achieved_error} for r in refs],
    }
    return ds, refs, report


def fit(dataset: Dataset, train_config: TrainConfig):
    """Build the case-appropriate model and train it on the dataset splits."""
    tx, ty = dataset.subset("train")
    vx, vy = dataset.subset("validation")
    model = CnnModel.build(dataset.inputs.shape[1], dataset.labels.shape[1], seed=train_config.seed)
    return train(model, tx, ty, vx, vy, train_config)


def evaluate(model: CnnModel, dataset: Dataset, split: str = "test") -> dict:
    """Test-split scores: per-sample averages for full-domain data, pooled counts for windows."""
    x, y = dataset.subset(split)
    pred = predict_labels(model, x)
    if dataset.case == "full_domain":
        return metrics.average_metrics(metrics.confusion(p, r) for p, r in zip(pred, y))
    cm = metrics.confusion(pred, y)
    return {**metrics.scores(cm), "tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn,
            "confusion_percent": cm.percentages(), "samples": int(len(y))}


def _values(load, grid):
    if isinstance(load, (LoadSpec, LoadSum)):
        return sample_load(load, grid).values
    return np.asarray(getattr(load, "values", load), dtype=float)


def predict_regions(model: CnnModel, load, grid: Grid):
    """Raw and post-processed per-node labels for a load (spec or nodal values)."""
    x = preprocess(_values(load, grid), grid)
    if model.output_size == 1:
        raw = predict_labels(model, windows(x, grid.m))[:, 0]
    else:
        raw = predict_labels(model, x[None])[0]
    return raw, post_process(raw, grid.m)


@dataclass
class Verification:
    name: str
    labels: np.ndarray
    raw_labels: np.ndarray
    u_nlm: np.ndarray
    u_coupled: np.ndarray
    error: float
    pointwise: np.ndarray
    all_local: bool
    intervals: list = field(default_factory=list)


def verify_load(model: CnnModel, load, grid: Grid, material: Material, bc: BoundaryConditions,
                name: str = "") -> Verification:
    """Predict regions, then compare the coupled solution against the fully nonlocal one.

    When the cleaned prediction is entirely local the coupled solution is
    the local one and ``all_local`` is set.
    """
    f = _values(load, grid)
    raw, lab = predict_regions(model, f, grid)
    u_nlm = solve_nonlocal(grid, material, bc, f).u
    all_local = not lab.any()
    u_c = solve_local(grid, material, bc, f).u if all_local else solve_vhcm(grid, material, lab, bc, f).u
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateReferenceWarning)
        err = relative_error(u_nlm, u_c)
    return Verification(name, lab, raw, u_nlm, u_c, err, pointwise_error(u_nlm, u_c), all_local,
                        nonlocal_intervals(lab))


def load_name(load) -> str:
    if isinstance(load, LoadSum):
        return "+".join(load_name(p) for p in load.parts)
    if isinstance(load, LoadSpec):
        fam = load.family.value
        if load.singular:
            tag = f"{fam}(x_jump={load.x_jump:.6g})"
        elif fam == "f3":
            tag = f"f3(c1={load.c1:.6g},c2={load.c2:.6g})"
        elif fam == "f4":
            tag = f"f4(t={load.t:.6g})"
        else:
            tag = f"f5(c={load.c:.6g})"
        return ("-" + tag) if load.negated else tag
    return "load"
