"""Deterministic SVG figures for training histories, confusion matrices and verifications."""

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no date stamp so identical inputs give identical files
matplotlib.rcParams["svg.hashsalt"] = "vhcm"
_META = {"Date": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return Path(path)


def loss_curve(history_csv, path):
    data = np.genfromtxt(history_csv, delimiter=",", names=True)
    data = np.atleast_1d(data)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(data["epoch"], data["train_loss"], label="train")
    ax.plot(data["epoch"], data["val_loss"], label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("binary cross-entropy")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def confusion_matrix(metrics_json, path):
    pct = json.loads(Path(metrics_json).read_text())["confusion_percent"]
    grid = np.array([[pct["LM->LM"], pct["LM->NLM"]], [pct["NLM->LM"], pct["NLM->NLM"]]], dtype=float)
    fig, ax = plt.subplots(figsize=(3.8, 3.4))
    ax.imshow(np.nan_to_num(grid), cmap="Blues", vmin=0, vmax=100)
    for i in range(2):
        for j in range(2):
            v = grid[i, j]
            ax.text(j, i, "n/a" if np.isnan(v) else f"{v:.2f}%", ha="center", va="center",
                    color="white" if v > 50 else "black")
    ax.set_xticks([0, 1], ["LM", "NLM"])
    ax.set_yticks([0, 1], ["LM", "NLM"])
    ax.set_xlabel("predicted")
    ax.set_ylabel("reference")
    fig.tight_layout()
    return _save(fig, path)


def _solution(path):
    d = np.genfromtxt(path, delimiter=",", names=True)
    return d["x"], d["u_nlm"], d["u_coupled"], d["pointwise_error"], d["label"]


def displacement(x, u_nlm, u_c, labels, title, path):
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(x, u_nlm, label="nonlocal", lw=2)
    ax.plot(x, u_c, "--", label="coupled")
    lo, hi = ax.get_ylim()
    ax.fill_between(x, lo, hi, where=labels > 0.5, color="0.85", step="mid", label="NLM region")
    ax.set_ylim(lo, hi)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title(title, fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def pointwise(x, err, title, path):
    fig, ax = plt.subplots(figsize=(5.5, 3))
    ax.plot(x, err)
    ax.set_xlabel("x")
    ax.set_ylabel("|u_nonlocal - u_coupled|")
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def label_map(names, label_rows, path):
    img = np.array(label_rows, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 0.5 + 0.25 * len(names)))
    ax.imshow(img, aspect="auto", cmap="Greys", vmin=0, vmax=1, interpolation="nearest")
    ax.set_yticks(range(len(names)), names, fontsize=6)
    ax.set_xlabel("node")
    fig.tight_layout()
    return _save(fig, path)


def verification_plots(verify_dir, out):
    """Overlay, pointwise-error and label-map figures for a ``verify`` output directory."""
    verify_dir, out = Path(verify_dir), Path(out)
    with open(verify_dir / "verification.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    made, names, labels = [], [], []
    for r in rows:
        x, u_nlm, u_c, err, lab = _solution(verify_dir / r["solution"])
        title = f"{r['load']}  rel. error {float(r['relative_error']):.3e}"
        stem = f"{int(r['index']):04d}"
        made.append(displacement(x, u_nlm, u_c, lab, title, out / f"displacement_{stem}.svg"))
        made.append(pointwise(x, err, title, out / f"pointwise_{stem}.svg"))
        names.append(r["load"])
        labels.append(lab)
    if rows:
        made.append(label_map(names, labels, out / "label_map.svg"))
    return made
