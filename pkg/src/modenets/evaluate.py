"""Scoring fitted solutions against ground truth.

Macro-F1 matches predicted clusters to truth clusters one-to-one so that
the summed per-pair F1 is maximal, then averages F1 over truth clusters
(unmatched truth clusters count as 0). The matching makes the score
invariant to label permutations on either side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cluster import ClusterParams
from .mdl import cost_data
from .model import total_log_likelihood
from .tensor import TensorTS, slice_time

__all__ = ["EvalReport", "macro_f1", "labels_from_params", "loglik_report"]


@dataclass(frozen=True)
class EvalReport:
    """Macro-F1 with its per-truth-cluster breakdown and matching."""

    macro_f1: float
    per_class_f1: tuple[tuple[int, float], ...]
    matching: tuple[tuple[int, int], ...]
    k_true: int
    k_pred: int

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "per_class_f1": [
                {"true_cluster": c, "f1": f} for c, f in self.per_class_f1
            ],
            "matching": [
                {"true_cluster": c, "pred_cluster": p} for c, p in self.matching
            ],
            "k_true": self.k_true,
            "k_pred": self.k_pred,
        }


def macro_f1(pred_labels, true_labels) -> EvalReport:
    """Best-matching macro-F1 of predicted vs true per-step labels."""
    pred = np.asarray(pred_labels).ravel()
    true = np.asarray(true_labels).ravel()
    if pred.shape != true.shape or pred.size == 0:
        raise ValueError(
            f"label arrays must be equal-length and non-empty, "
            f"got {pred.shape} vs {true.shape}"
        )
    pred_ids = np.unique(pred)
    true_ids = np.unique(true)
    confusion = np.zeros((pred_ids.size, true_ids.size))
    p_idx = np.searchsorted(pred_ids, pred)
    t_idx = np.searchsorted(true_ids, true)
    np.add.at(confusion, (p_idx, t_idx), 1.0)
    pred_tot = confusion.sum(axis=1, keepdims=True)
    true_tot = confusion.sum(axis=0, keepdims=True)
    f1 = 2.0 * confusion / (pred_tot + true_tot)

    rows, cols = linear_sum_assignment(-f1)
    matched = {int(true_ids[c]): (int(pred_ids[r]), float(f1[r, c]))
               for r, c in zip(rows, cols)}
    per_class = tuple(
        (int(c), matched.get(int(c), (0, 0.0))[1]) for c in true_ids
    )
    matching = tuple((c, matched[c][0]) for c in sorted(matched))
    score = float(np.mean([f for _, f in per_class]))
    return EvalReport(
        macro_f1=score,
        per_class_f1=per_class,
        matching=matching,
        k_true=int(true_ids.size),
        k_pred=int(pred_ids.size),
    )


def labels_from_params(params: ClusterParams) -> np.ndarray:
    """Expand a fitted solution into per-step cluster ids."""
    return params.assignments.labels()


def loglik_report(x: TensorTS, params: ClusterParams) -> dict:
    """Recompute data log-likelihood per cluster and in total."""
    assign = params.assignments
    per_cluster = {c: 0.0 for c in range(1, assign.k + 1)}
    for (a, b), c in zip(assign.segmentation.ranges(), assign.segment_cluster):
        per_cluster[c] += float(
            total_log_likelihood(slice_time(x, a, b), params.models[c - 1]).sum()
        )
    total = sum(per_cluster.values())
    recheck = -cost_data(x, params.models, assign)
    return {
        "total_log_likelihood": total,
        "per_cluster": [
            {"cluster": c, "log_likelihood": v} for c, v in per_cluster.items()
        ],
        "matches_cost_data": bool(abs(total - recheck) < 1e-6 * max(1.0, abs(total))),
    }
