"""Segment and cluster-assignment bookkeeping.

Cut points are 1-based segment starts; cp[0] is always 1 and the sentinel
cp[m] = T+1 stays implicit. These types live here so both the cost module
and the segment detector can use them without import cycles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidPartitionError

__all__ = ["Segmentation", "Assignments"]


@dataclass(frozen=True)
class Segmentation:
    """A partition of 1..T into m contiguous segments."""

    cut_points: tuple[int, ...]
    t_total: int

    def __post_init__(self):
        cps = tuple(int(c) for c in self.cut_points)
        object.__setattr__(self, "cut_points", cps)
        object.__setattr__(self, "t_total", int(self.t_total))
        if not cps or cps[0] != 1:
            raise InvalidPartitionError(f"cut points must start at 1, got {cps[:3]}")
        if any(a >= b for a, b in zip(cps, cps[1:])):
            raise InvalidPartitionError("cut points must be strictly increasing")
        if cps[-1] > self.t_total:
            raise InvalidPartitionError(
                f"last cut point {cps[-1]} exceeds T={self.t_total}"
            )

    @property
    def m(self) -> int:
        """Segment count."""
        return len(self.cut_points)

    def ranges(self) -> tuple[tuple[int, int], ...]:
        """Half-open 1-based (start, end) per segment."""
        ends = self.cut_points[1:] + (self.t_total + 1,)
        return tuple(zip(self.cut_points, ends))

    def lengths(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in self.ranges())


@dataclass(frozen=True)
class Assignments:
    """Segment-to-cluster map over a Segmentation.

    Cluster ids run 1..k and every id must be used by at least one segment.
    """

    segmentation: Segmentation
    segment_cluster: tuple[int, ...]
    k: int

    def __post_init__(self):
        labels = tuple(int(c) for c in self.segment_cluster)
        object.__setattr__(self, "segment_cluster", labels)
        object.__setattr__(self, "k", int(self.k))
        if len(labels) != self.segmentation.m:
            raise InvalidPartitionError(
                f"{len(labels)} labels for {self.segmentation.m} segments"
            )
        if self.k < 1:
            raise InvalidPartitionError("k must be >= 1")
        used = set(labels)
        if not used <= set(range(1, self.k + 1)):
            raise InvalidPartitionError(
                f"cluster ids must lie in 1..{self.k}, got {sorted(used)}"
            )
        if used != set(range(1, self.k + 1)):
            raise InvalidPartitionError("every cluster id must be used")

    @property
    def m(self) -> int:
        return self.segmentation.m

    def members(self, cluster: int) -> tuple[int, ...]:
        """0-based segment indices assigned to the given 1-based cluster."""
        return tuple(
            i for i, c in enumerate(self.segment_cluster) if c == cluster
        )

    def cluster_ranges(self, cluster: int) -> tuple[tuple[int, int], ...]:
        ranges = self.segmentation.ranges()
        return tuple(ranges[i] for i in self.members(cluster))

    def cluster_time_counts(self) -> tuple[int, ...]:
        """Total step count |A_k| per cluster, index 0 = cluster 1."""
        lengths = self.segmentation.lengths()
        counts = [0] * self.k
        for i, c in enumerate(self.segment_cluster):
            counts[c - 1] += lengths[i]
        return tuple(counts)

    def labels(self) -> np.ndarray:
        """Per-time-step cluster ids, shape (T,)."""
        out = np.empty(self.segmentation.t_total, dtype=np.int64)
        for (a, b), c in zip(self.segmentation.ranges(), self.segment_cluster):
            out[a - 1 : b - 1] = c
        return out
