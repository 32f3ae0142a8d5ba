"""Confusion counts and derived scores.

The positive class is LM (label 0), so TP counts correctly predicted local
nodes and TN correctly predicted nonlocal ones.
"""

from dataclasses import dataclass

import numpy as np

from .solver import LM, NLM


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other):
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)

    def percentages(self):
        """Row-normalized percentages: (LM predicted LM, LM predicted NLM, NLM predicted NLM, NLM predicted LM)."""
        lm = self.tp + self.fn
        nlm = self.tn + self.fp
        pct = lambda a, b: 100.0 * a / b if b else None
        return {"LM->LM": pct(self.tp, lm), "LM->NLM": pct(self.fn, lm),
                "NLM->NLM": pct(self.tn, nlm), "NLM->LM": pct(self.fp, nlm)}


def confusion(predicted, reference) -> ConfusionMatrix:
    p = np.asarray(predicted).ravel()
    r = np.asarray(reference).ravel()
    if p.shape != r.shape:
        raise ValueError(f"length mismatch: {p.size} predicted vs {r.size} reference")
    return ConfusionMatrix(
        tp=int(np.sum((p == LM) & (r == LM))),
        fp=int(np.sum((p == LM) & (r == NLM))),
        tn=int(np.sum((p == NLM) & (r == NLM))),
        fn=int(np.sum((p == NLM) & (r == LM))),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    return (cm.tp + cm.tn) / cm.total if cm.total else 0.0


def precision(cm: ConfusionMatrix) -> float:
    d = cm.tp + cm.fp
    return cm.tp / d if d else 0.0


def recall(cm: ConfusionMatrix) -> float:
    d = cm.tp + cm.fn
    return cm.tp / d if d else 0.0


def f1(cm: ConfusionMatrix) -> float:
    p, r = precision(cm), recall(cm)
    return 2 * p * r / (p + r) if p + r else 0.0


def scores(cm: ConfusionMatrix) -> dict:
    return {"accuracy": accuracy(cm), "precision": precision(cm), "recall": recall(cm), "f1": f1(cm)}


def average_metrics(per_sample) -> dict:
    """Per-sample scores averaged over samples, plus the pooled counts."""
    per_sample = list(per_sample)
    if not per_sample:
        raise ValueError("no confusion matrices to average")
    table = [scores(cm) for cm in per_sample]
    report = {k: float(np.mean([t[k] for t in table])) for k in table[0]}
    pct = [cm.percentages() for cm in per_sample]
    # rows without reference nodes (e.g. NLM rows of all-local samples) are skipped
    report["confusion_percent"] = {
        k: float(np.mean(vals)) if (vals := [p[k] for p in pct if p[k] is not None]) else None
        for k in pct[0]}
    pooled = sum(per_sample, ConfusionMatrix())
    report["pooled"] = {"tp": pooled.tp, "fp": pooled.fp, "tn": pooled.tn, "fn": pooled.fn,
                        **scores(pooled)}
    report["samples"] = len(per_sample)
    return report
