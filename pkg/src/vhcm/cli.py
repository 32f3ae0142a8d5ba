"""Command line entry point: ``vhcm generate|train|predict|verify|report``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io, pipeline
from .io import ConfigError, ExperimentConfig
from .loads import parse_spec
from .solver import SolverError, nonlocal_intervals

log = logging.getLogger("vhcm")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _config(args) -> ExperimentConfig:
    overrides = {"seed": args.seed}
    if args.config:
        return ExperimentConfig.load(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"not serializable: {type(v)}")


def _dump(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _intervals_text(intervals):
    return ";".join(f"{a}-{b}" for a, b in intervals)


def cmd_generate(args) -> int:
    cfg = _config(args)
    out = _out(args)
    ds, refs, report = pipeline.generate(cfg)
    io.write_dataset(out / "dataset.csv", ds, cfg.grid, cfg.eps)
    # wall time varies run to run, so it goes to the log rather than the report
    wall = report.pop("wall_time_s")
    _dump(out / "generation.json", report)
    (out / "config.ini").write_text(cfg.to_text())
    log.info("generated %d loads, %d samples %s in %.2f s", report["loads"], report["samples"],
             report["split"], wall)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out(args)
    path = Path(args.dataset or out / "dataset.csv")
    if not path.exists():
        raise ConfigError(f"dataset file {path} not found")
    ds, header = io.read_dataset(path)
    tc = cfg.train_config()
    try:
        model, hist = pipeline.fit(ds, tc)
    except ValueError as exc:
        # e.g. a window too short for the conv stack
        raise ConfigError(str(exc)) from exc
    io.write_model(out / "model.bin", model, tc, io.checksum(path))
    (out / "history.csv").write_text(hist.to_csv())
    result = pipeline.evaluate(model, ds, "test")
    result["best_epoch"] = hist.best_epoch
    result["epochs"] = len(hist.train_loss)
    _dump(out / "metrics.json", result)
    log.info("trained %d epochs (best %d); test accuracy %.4f", len(hist.train_loss),
             hist.best_epoch, result["accuracy"])
    return EXIT_OK


def _read_model(path):
    if not Path(path).exists():
        raise ConfigError(f"model file {path} not found")
    return io.read_model(path)


def cmd_predict(args) -> int:
    cfg = _config(args)
    out = _out(args)
    grid = cfg.grid
    model = _read_model(args.model)
    if args.csv:
        load = io.read_load_csv(args.csv, grid)
    elif args.load:
        load = _parse(args.load, grid)
    else:
        raise ConfigError("predict needs --load SPEC or --csv PATH")
    raw, lab = pipeline.predict_regions(model, load, grid)
    with open(out / "labels.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "x", "raw", "label"])
        for k in range(grid.node_count):
            w.writerow([k, format(grid.x[k], ".17g"), int(raw[k]), int(lab[k])])
    log.info("nonlocal intervals: %s", nonlocal_intervals(lab) or "none")
    return EXIT_OK


def _parse(text, grid):
    try:
        return parse_spec(text, grid.delta)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad load spec {text!r}: {exc}") from exc


def _verify_targets(args, cfg):
    if args.load:
        return [_parse(t, cfg.grid) for t in args.load]
    if args.dataset:
        ds, _ = io.read_dataset(args.dataset)
        test = sorted(set(ds.source[ds.split == "test"].tolist()))
        return [ds.specs[i] for i in test if ds.specs[i].singular]
    raise ConfigError("verify needs --load SPEC (repeatable) or --dataset PATH")


def cmd_verify(args) -> int:
    cfg = _config(args)
    out = _out(args)
    grid, mat, bc = cfg.grid, cfg.material, cfg.bc
    model = _read_model(args.model)
    targets = _verify_targets(args, cfg)
    sol_dir = out / "solutions"
    sol_dir.mkdir(exist_ok=True)
    rows = []
    for i, load in enumerate(targets):
        name = pipeline.load_name(load)
        v = pipeline.verify_load(model, load, grid, mat, bc, name)
        fname = f"{i:04d}.csv"
        np.savetxt(sol_dir / fname, np.column_stack([grid.x, v.u_nlm, v.u_coupled, v.pointwise, v.labels]),
                   delimiter=",", header="x,u_nlm,u_coupled,pointwise_error,label", comments="",
                   fmt="%.17g")
        rows.append({"index": i, "load": name, "relative_error": v.error,
                     "passed": bool(v.error < cfg.eps), "all_local": v.all_local,
                     "intervals": _intervals_text(v.intervals), "solution": f"solutions/{fname}"})
    with open(out / "verification.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["index"])
        w.writeheader()
        for r in rows:
            w.writerow({**r, "relative_error": format(r["relative_error"], ".17g")})
    passed = sum(r["passed"] for r in rows)
    _dump(out / "verification.json", {"eps": cfg.eps, "count": len(rows), "passed": passed,
                                      "pass_fraction": passed / len(rows) if rows else None})
    log.info("verified %d loads, %d below eps", len(rows), passed)
    return EXIT_OK


def cmd_report(args) -> int:
    from . import plots
    out = _out(args)
    made = []
    if args.history:
        made.append(plots.loss_curve(args.history, out / "loss_curve.svg"))
    if args.metrics:
        made.append(plots.confusion_matrix(args.metrics, out / "confusion_matrix.svg"))
    if args.verification:
        made += plots.verification_plots(args.verification, out)
    if not made:
        raise ConfigError("report needs at least one of --history, --metrics, --verification")
    for p in made:
        log.info("wrote %s", p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="vhcm", description="Learn local/nonlocal region splits for a 1D bar.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="build reference regions and the dataset")

    t = sub.add_parser("train", parents=[common], help="train a CNN on a dataset file")
    t.add_argument("--dataset", help="dataset file (default: OUT/dataset.csv)")

    pr = sub.add_parser("predict", parents=[common], help="predict nodal labels for one load")
    pr.add_argument("--model", required=True)
    pr.add_argument("--load", help='load spec, e.g. "f1 x_jump=0.71"; join specs with +')
    pr.add_argument("--csv", help="nodal load values, one column (f) or two (x, f)")

    v = sub.add_parser("verify", parents=[common], help="solve with predicted regions and compare")
    v.add_argument("--model", required=True)
    v.add_argument("--load", action="append", help="load spec; repeatable")
    v.add_argument("--dataset", help="verify the singular loads of this dataset's test split")

    r = sub.add_parser("report", parents=[common], help="plot histories, metrics, verifications")
    r.add_argument("--history", help="history.csv from train")
    r.add_argument("--metrics", help="metrics.json from train")
    r.add_argument("--verification", help="output directory of verify")
    return p


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "predict": cmd_predict,
            "verify": cmd_verify, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, OSError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (SolverError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
