"""Cost-driven segment boundary detection.

Starting from fixed-size windows, repeated sweeps walk the current
segments and compare three local hypotheses: keep the next segment solo,
merge it with its left neighbor, or merge its right pair. Each hypothesis
is priced as a standalone description (every candidate segment its own
cluster) over only the involved steps; the cheapest wins, ties preferring
solo, then left. Sweeps repeat until the cut-point list is stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._context import FitContext, fit_from_ranges, fit_many
from .errors import DataFormatError, InvalidPartitionError
from .glasso import AdmmConfig
from .mdl import cost_assign, cost_l1, cost_model
from .model import ClusterModel
from .segments import Assignments, Segmentation
from .tensor import TensorTS

__all__ = [
    "InitialWindows",
    "Segmentation",
    "init_cutpoints",
    "fit_segment_model",
    "detect",
]


@dataclass(frozen=True)
class InitialWindows:
    """Explicit initial window sizes; must sum to T."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise InvalidPartitionError("window sizes must be positive")


def _as_ctx(x) -> FitContext:
    if isinstance(x, FitContext):
        return x
    if isinstance(x, TensorTS):
        return FitContext(x)
    raise TypeError(f"expected TensorTS or FitContext, got {type(x).__name__}")


def init_cutpoints(t_total: int, window=4) -> Segmentation:
    """Fixed-size initial segmentation; a short final window absorbs the
    remainder. ``window`` may be an int or explicit sizes."""
    t_total = int(t_total)
    if t_total < 1:
        raise InvalidPartitionError(f"T must be >= 1, got {t_total}")
    if isinstance(window, InitialWindows):
        sizes = window.sizes
    elif isinstance(window, (int, np.integer)):
        w = int(window)
        if w < 1:
            raise InvalidPartitionError(f"window must be >= 1, got {w}")
        full, rest = divmod(t_total, w)
        sizes = (w,) * full + ((rest,) if rest else ())
    else:
        sizes = InitialWindows(tuple(window)).sizes
    if sum(sizes) != t_total:
        raise InvalidPartitionError(
            f"window sizes sum to {sum(sizes)}, T is {t_total}"
        )
    cps = [1]
    for s in sizes[:-1]:
        cps.append(cps[-1] + s)
    return Segmentation(tuple(cps), t_total)


def fit_segment_model(
    x, a: int, b: int, lam: float, config: AdmmConfig = AdmmConfig(),
    threads: int = 1,
) -> ClusterModel:
    """Fit one model to the half-open step range [a, b)."""
    ctx = _as_ctx(x)
    if not (1 <= a < b <= ctx.t_len + 1):
        raise DataFormatError(f"invalid range [{a}, {b}) for T={ctx.t_len}")
    return fit_from_ranges(ctx, [(a, b)], lam, config, threads=threads)


def _candidate_cost(ctx, ranges, models, lam) -> float:
    """Description length of the involved steps, one cluster per segment."""
    lengths = [b - a for a, b in ranges]
    cps = [1]
    for size in lengths[:-1]:
        cps.append(cps[-1] + size)
    local = Assignments(
        segmentation=Segmentation(tuple(cps), sum(lengths)),
        segment_cluster=tuple(range(1, len(ranges) + 1)),
        k=len(ranges),
    )
    data = sum(ctx.range_nll([r], mdl) for r, mdl in zip(ranges, models))
    return cost_assign(local) + cost_model(models) + data + cost_l1(models, lam)


def detect(
    x,
    segmentation: Segmentation,
    lam: float,
    config: AdmmConfig = AdmmConfig(),
    trace: list | None = None,
    threads: int = 1,
) -> Segmentation:
    """Merge initial windows into maximal cost-coherent segments."""
    ctx = _as_ctx(x)
    if segmentation.t_total != ctx.t_len:
        raise InvalidPartitionError(
            f"segmentation T={segmentation.t_total} does not match data T={ctx.t_len}"
        )
    cp = list(segmentation.cut_points)
    t_total = segmentation.t_total
    cache: dict[tuple[int, int], ClusterModel] = {}

    while True:
        m = len(cp)
        if m == 1:
            break
        bounds = cp + [t_total + 1]
        ranges = [(bounds[i], bounds[i + 1]) for i in range(m)]
        needed = list(ranges)
        for i in range(m - 1):
            needed.append((ranges[i][0], ranges[i + 1][1]))
        missing = [r for r in dict.fromkeys(needed) if r not in cache]
        if missing:
            for r, mdl in zip(missing, fit_many(ctx, [[r] for r in missing],
                                                lam, config, threads=threads)):
                cache[r] = mdl

        def merged(i: int) -> tuple[int, int]:
            return (ranges[i][0], ranges[i + 1][1])

        new_cp: list[int] = []
        merges = 0
        i = 0
        while i < m:
            if m - i >= 3:
                solo = [ranges[i], ranges[i + 1], ranges[i + 2]]
                left = [merged(i), ranges[i + 2]]
                right = [ranges[i], merged(i + 1)]
                c_solo = _candidate_cost(ctx, solo, [cache[r] for r in solo], lam)
                c_left = _candidate_cost(ctx, left, [cache[r] for r in left], lam)
                c_right = _candidate_cost(ctx, right, [cache[r] for r in right], lam)
                if c_left < c_solo and c_left <= c_right:
                    new_cp.append(cp[i])
                    i += 2
                    merges += 1
                elif c_right < c_solo:
                    new_cp.append(cp[i])
                    new_cp.append(cp[i + 1])
                    i += 3
                    merges += 1
                else:
                    new_cp.append(cp[i])
                    i += 1
            elif m - i == 2:
                solo = [ranges[i], ranges[i + 1]]
                pair = [merged(i)]
                c_solo = _candidate_cost(ctx, solo, [cache[r] for r in solo], lam)
                c_pair = _candidate_cost(ctx, pair, [cache[pair[0]]], lam)
                new_cp.append(cp[i])
                if c_pair < c_solo:
                    i += 2
                    merges += 1
                else:
                    i += 1
            else:
                new_cp.append(cp[i])
                i += 1
        if trace is not None:
            trace.append({"m": m, "merges": merges, "fits": len(missing)})
        if new_cp == cp:
            break
        cp = new_cp
    return Segmentation(tuple(cp), t_total)
