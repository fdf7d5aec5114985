"""Description-length costs for a segmented, clustered tensor series.

Total cost = assignment + model + data + l1 penalty. The universal integer
code log* is base-2; model and data terms use natural logs, matching the
mixed-base convention the costs were defined with. Floats are priced at a
fixed 32 bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .glasso import l1_offdiag
from .model import ClusterModel, total_log_likelihood
from .segments import Assignments, Segmentation
from .tensor import TensorTS, slice_time

FLOAT_CODE_BITS = 32.0

__all__ = [
    "FLOAT_CODE_BITS",
    "Assignments",
    "CostBreakdown",
    "log_star",
    "cost_assign",
    "cost_model",
    "cost_data",
    "cost_l1",
    "cost_total",
]


@dataclass(frozen=True)
class CostBreakdown:
    assign: float
    model: float
    data: float
    l1: float
    total: float

    def to_dict(self) -> dict:
        return {
            "assign": self.assign,
            "model": self.model,
            "data": self.data,
            "l1": self.l1,
            "total": self.total,
        }

    @classmethod
    def from_parts(cls, assign, model, data, l1) -> "CostBreakdown":
        return cls(assign, model, data, l1, assign + model + data + l1)


def log_star(x) -> float:
    """Universal code length: sum of the positive iterated base-2 logs."""
    x = float(x)
    if x < 1:
        raise ValueError(f"log_star needs x >= 1, got {x}")
    total = 0.0
    v = math.log2(x)
    while v > 0:
        total += v
        v = math.log2(v)
    return total


def cost_assign(assign: Assignments) -> float:
    """Bits for K, the segment count, and each segment's cluster and size."""
    m = assign.m
    cost = log_star(assign.k) + log_star(m) + m * log_star(assign.k)
    for count in assign.cluster_time_counts():
        cost += log_star(count)
    return cost


def _network_cost(dim: int, nnz: int) -> float:
    cost = dim * (math.log(dim) + FLOAT_CODE_BITS)
    if nnz > 0:
        cost += log_star(nnz) + nnz * (
            math.log(dim * (dim - 1) / 2) + FLOAT_CODE_BITS
        )
    return cost


def _support_nnz(net) -> int:
    """Upper-triangle edge count, memoized on the network instance."""
    nnz = net.__dict__.get("_offdiag_nnz")
    if nnz is None:
        nnz = int(np.triu(net.support, k=1).sum())
        net.__dict__["_offdiag_nnz"] = nnz
    return nnz


def cost_model(models: Sequence[ClusterModel]) -> float:
    """Per-network coding cost, normalized by D_n^2 N within each model."""
    total = 0.0
    for model in models:
        n_modes = len(model.networks)
        for net in model.networks:
            total += _network_cost(net.dim, _support_nnz(net)) / (
                net.dim**2 * n_modes
            )
    return total


def cost_data(
    x: TensorTS, models: Sequence[ClusterModel], assign: Assignments
) -> float:
    """Negative total log-likelihood of every segment under its cluster."""
    total = 0.0
    for (a, b), c in zip(assign.segmentation.ranges(), assign.segment_cluster):
        total += float(total_log_likelihood(slice_time(x, a, b), models[c - 1]).sum())
    return -total


def _net_l1(net) -> float:
    """Off-diagonal l1 mass, memoized on the network instance; the cached
    float equals a fresh l1_offdiag call, keeping cost sums bit-identical."""
    val = net.__dict__.get("_l1_offdiag")
    if val is None:
        val = l1_offdiag(net.psi)
        net.__dict__["_l1_offdiag"] = val
    return val


def cost_l1(models: Sequence[ClusterModel], lam: float) -> float:
    """lam times the summed off-diagonal l1 mass of every network."""
    return lam * sum(
        _net_l1(net) for model in models for net in model.networks
    )


def cost_total(
    x: TensorTS,
    models: Sequence[ClusterModel],
    assign: Assignments,
    lam: float,
) -> CostBreakdown:
    """All four cost pieces and their sum for one candidate solution."""
    if len(models) != assign.k:
        raise ValueError(f"{len(models)} models for k={assign.k}")
    return CostBreakdown.from_parts(
        cost_assign(assign),
        cost_model(models),
        cost_data(x, models, assign),
        cost_l1(models, lam),
    )
