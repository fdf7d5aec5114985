"""Cluster-count search and segment-to-cluster EM.

For each candidate K, segments are seeded randomly onto clusters (every
cluster gets at least one), then assignment and refit steps alternate
until the assignment repeats. K grows from 1 and the search stops at the
first K whose best converged cost exceeds the previous K's; the cheapest
attempt wins. A lambda grid wraps the whole pipeline, keeping the run
with the smallest total description length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._context import FitContext, fit_many
from .errors import InvalidPartitionError
from .glasso import AdmmConfig
from .mdl import CostBreakdown, cost_assign, cost_l1, cost_model
from .model import ClusterModel
from .segments import Assignments, Segmentation
from .segmenter import InitialWindows, _as_ctx, detect, init_cutpoints

__all__ = [
    "ClusterParams",
    "assign_segments",
    "infer_networks",
    "detect_clusters",
    "fit",
]

DEFAULT_LAMBDA_GRID = (0.5, 1.0, 2.0, 4.0)


@dataclass
class ClusterParams:
    """One fitted solution: assignments, per-cluster models, and costs."""

    assignments: Assignments
    models: tuple[ClusterModel, ...]
    lam: float
    costs: CostBreakdown
    diagnostics: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.assignments.k


def _cluster_ranges(segmentation: Segmentation, labels, k: int):
    ranges = segmentation.ranges()
    return [
        [ranges[i] for i, c in enumerate(labels) if c == cluster]
        for cluster in range(1, k + 1)
    ]


def _compact(labels: Sequence[int]) -> tuple[int, ...]:
    mapping: dict[int, int] = {}
    out = []
    for c in labels:
        mapping.setdefault(int(c), len(mapping) + 1)
        out.append(mapping[int(c)])
    return tuple(out)


def assign_segments(x, models: Sequence[ClusterModel],
                    segmentation: Segmentation) -> tuple[int, ...]:
    """Give each segment the model with the highest data log-likelihood.

    The penalty terms play no role here; ties go to the lowest cluster id.
    """
    ctx = _as_ctx(x)
    tables = ctx.segment_tables(segmentation.ranges())
    nll = ctx.nll_table(tables, models)
    return tuple(int(c) + 1 for c in np.argmin(nll, axis=1))


def infer_networks(
    x, assign: Assignments, lam: float, config: AdmmConfig = AdmmConfig(),
    threads: int = 1,
) -> list[ClusterModel]:
    """Refit every cluster's networks on its pooled member segments."""
    ctx = _as_ctx(x)
    groups = _cluster_ranges(assign.segmentation, assign.segment_cluster, assign.k)
    return fit_many(ctx, groups, lam, config, threads=threads)


def _costs_from_tables(ctx, tables, assign, models, lam) -> CostBreakdown:
    nll = ctx.nll_table(tables, models)
    data = float(
        sum(nll[i, c - 1] for i, c in enumerate(assign.segment_cluster))
    )
    return CostBreakdown.from_parts(
        cost_assign(assign), cost_model(models), data, cost_l1(models, lam)
    )


def _em_once(ctx, segmentation, tables, k, lam, config, rng, max_em_iters,
             threads=1):
    """Run one seeded EM at fixed K; returns labels, models, iters, flag."""
    m = segmentation.m
    perm = rng.permutation(m)
    raw = np.empty(m, dtype=np.int64)
    raw[perm[:k]] = np.arange(1, k + 1)
    if m > k:
        raw[perm[k:]] = rng.integers(1, k + 1, size=m - k)
    labels = _compact(raw)
    seen = {labels}
    models: list[ClusterModel] = []
    converged = False
    iters = 0
    for iters in range(1, max_em_iters + 1):
        groups = _cluster_ranges(segmentation, labels, max(labels))
        models = fit_many(ctx, groups, lam, config, threads=threads)
        nll = ctx.nll_table(tables, models)
        new = _compact(np.argmin(nll, axis=1) + 1)
        if new == labels:
            converged = True
            break
        if new in seen:
            # Oscillation: adopt the repeated state and refit to match.
            labels = new
            groups = _cluster_ranges(segmentation, labels, max(labels))
            models = fit_many(ctx, groups, lam, config, threads=threads)
            break
        seen.add(new)
        labels = new
    else:
        groups = _cluster_ranges(segmentation, labels, max(labels))
        models = fit_many(ctx, groups, lam, config, threads=threads)
    return labels, models, iters, converged


def detect_clusters(
    x,
    segmentation: Segmentation,
    lam: float,
    seed: int = 0,
    config: AdmmConfig = AdmmConfig(),
    restarts: int = 1,
    max_em_iters: int = 20,
    max_k: int = 20,
    threads: int = 1,
) -> ClusterParams:
    """Search K upward from 1 and return the cheapest clustering."""
    ctx = _as_ctx(x)
    if segmentation.t_total != ctx.t_len:
        raise InvalidPartitionError(
            f"segmentation T={segmentation.t_total} != data T={ctx.t_len}"
        )
    if restarts < 1 or max_em_iters < 1 or max_k < 1:
        raise ValueError("restarts, max_em_iters, and max_k must be >= 1")
    m = segmentation.m
    tables = ctx.segment_tables(segmentation.ranges())

    attempts: list[dict] = []

    def record(k_attempt, labels, models, iters, converged):
        assign = Assignments(segmentation, labels, max(labels))
        costs = _costs_from_tables(ctx, tables, assign, models, lam)
        attempts.append(
            {
                "k": k_attempt,
                "k_effective": assign.k,
                "assign": assign,
                "models": tuple(models),
                "costs": costs,
                "em_iters": iters,
                "em_converged": converged,
            }
        )

    base_labels = (1,) * m
    base_models = fit_many(ctx, _cluster_ranges(segmentation, base_labels, 1),
                           lam, config, threads=threads)
    record(1, base_labels, base_models, 0, True)

    for k in range(2, min(m, max_k) + 1):
        best = None
        for r in range(restarts):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(k, r))
            )
            labels, models, iters, converged = _em_once(
                ctx, segmentation, tables, k, lam, config, rng, max_em_iters,
                threads=threads,
            )
            assign = Assignments(segmentation, labels, max(labels))
            costs = _costs_from_tables(ctx, tables, assign, models, lam)
            if best is None or costs.total < best[0]:
                best = (costs.total, labels, models, iters, converged)
        record(k, best[1], best[2], best[3], best[4])
        if attempts[-1]["costs"].total > attempts[-2]["costs"].total:
            break

    winner = min(attempts, key=lambda a: a["costs"].total)
    chosen = winner["assign"]
    models = winner["models"]
    diagnostics = {
        "m": m,
        "seed": seed,
        "restarts": restarts,
        "selected_k": chosen.k,
        "k_trace": [
            {
                "k": a["k"],
                "k_effective": a["k_effective"],
                "total": a["costs"].total,
                "em_iters": a["em_iters"],
                "em_converged": a["em_converged"],
            }
            for a in attempts
        ],
        "admm_nonconverged": sum(
            not net.converged for mdl in models for net in mdl.networks
        ),
        "degenerate_modes": sum(
            net.degenerate for mdl in models for net in mdl.networks
        ),
    }
    return ClusterParams(
        assignments=chosen,
        models=models,
        lam=lam,
        costs=winner["costs"],
        diagnostics=diagnostics,
    )


def fit(
    x,
    window=4,
    lam_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    seed: int = 0,
    config: AdmmConfig = AdmmConfig(),
    restarts: int = 1,
    max_em_iters: int = 20,
    max_k: int = 20,
    threads: int = 1,
) -> ClusterParams:
    """Full pipeline: window init, boundary detection, cluster search,
    best lambda by total cost."""
    if not lam_grid:
        raise ValueError("lam_grid must not be empty")
    ctx = _as_ctx(x)
    best: ClusterParams | None = None
    trace = []
    for lam in lam_grid:
        seg0 = init_cutpoints(ctx.t_len, window)
        seg_trace: list = []
        seg = detect(ctx, seg0, lam, config, trace=seg_trace, threads=threads)
        params = detect_clusters(
            ctx,
            seg,
            lam,
            seed=seed,
            config=config,
            restarts=restarts,
            max_em_iters=max_em_iters,
            max_k=max_k,
            threads=threads,
        )
        params.diagnostics["sweeps"] = seg_trace
        trace.append(
            {
                "lambda": float(lam),
                "total": params.costs.total,
                "k": params.k,
                "m": params.assignments.m,
            }
        )
        if best is None or params.costs.total < best.costs.total:
            best = params
    best.diagnostics["lambda_trace"] = trace
    best.diagnostics["window"] = (
        int(window)
        if isinstance(window, (int, np.integer))
        else list(window.sizes if isinstance(window, InitialWindows) else window)
    )
    return best
