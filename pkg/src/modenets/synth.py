"""Synthetic tensor series with known regimes and networks.

A named sequence (A..D) lists which cluster generates each segment. Every
cluster gets one random sparse symmetric weight matrix per mode (edge
probability 0.2, weights uniform on [-0.6, -0.3] U [0.3, 0.6], zero
diagonal); the assembled joint matrix is made positive definite by adding
(0.1 + |c|) I, c its smallest eigenvalue. Observations are zero-mean
Gaussian draws with that matrix as precision.

With G_k segments in the pattern, cluster k emits obs_per_segment * G_k
steps, split across its segments by a seeded multinomial composition with
a minimum part of 20; the printed segment order is kept as is.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import DataFormatError
from .model import assemble_precision
from .tensor import TensorTS

__all__ = [
    "SEQUENCE_PATTERNS",
    "GroundTruth",
    "gen_mode_network",
    "build_cluster_precision",
    "sample_gaussian",
    "gen_tts",
    "write_labels_csv",
    "read_labels_csv",
]

SEQUENCE_PATTERNS: dict[str, tuple[int, ...]] = {
    "A": (1, 2, 1),
    "B": (1, 2, 3, 2, 1),
    "C": (1, 2, 3, 4, 1, 2, 3, 4),
    "D": (1, 2, 2, 1, 3, 3, 3, 1),
}

MIN_SEGMENT_LEN = 20


@dataclass(frozen=True)
class GroundTruth:
    """Generating structure of a synthetic series."""

    labels: np.ndarray
    cut_points: tuple[int, ...]
    segment_cluster: tuple[int, ...]
    k: int
    mode_networks: tuple[tuple[np.ndarray, ...], ...]
    precisions: tuple[np.ndarray, ...]


def gen_mode_network(
    d: int, rng: np.random.Generator, edge_prob: float = 0.2
) -> np.ndarray:
    """Random symmetric zero-diagonal weights; each upper pair is an edge
    with probability edge_prob, weight uniform on [-0.6,-0.3] U [0.3,0.6]."""
    w = np.zeros((d, d))
    iu, ju = np.triu_indices(d, k=1)
    n_pairs = iu.size
    if n_pairs:
        edges = rng.random(n_pairs) < edge_prob
        signs = rng.integers(0, 2, size=n_pairs) * 2 - 1
        mags = rng.uniform(0.3, 0.6, size=n_pairs)
        vals = np.where(edges, signs * mags, 0.0)
        w[iu, ju] = vals
        w[ju, iu] = vals
    return w


def build_cluster_precision(mode_networks: Sequence[np.ndarray]) -> np.ndarray:
    """Assemble per-mode weights and shift the diagonal onto the PD cone."""
    base = assemble_precision(list(mode_networks))
    c = float(np.linalg.eigvalsh(base).min())
    return base + (0.1 + abs(c)) * np.eye(base.shape[0])


def sample_gaussian(
    theta: np.ndarray, n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw zero-mean samples whose precision matrix is theta, (n, D)."""
    chol = cholesky(theta, lower=True)
    z = rng.standard_normal((n_samples, theta.shape[0]))
    # x = L^-T z  =>  cov(x) = (L L^T)^-1 = theta^-1
    return solve_triangular(chol, z.T, lower=True, trans="T").T


def _resolve_pattern(sequence) -> tuple[int, ...]:
    if isinstance(sequence, str):
        key = sequence.strip().upper()
        if key not in SEQUENCE_PATTERNS:
            raise DataFormatError(
                f"unknown sequence {sequence!r}; known: "
                f"{sorted(SEQUENCE_PATTERNS)} or an explicit pattern"
            )
        return SEQUENCE_PATTERNS[key]
    pattern = tuple(int(c) for c in sequence)
    if not pattern:
        raise DataFormatError("pattern must not be empty")
    k = max(pattern)
    if min(pattern) < 1 or set(pattern) != set(range(1, k + 1)):
        raise DataFormatError(
            f"pattern must use every cluster id 1..K, got {pattern}"
        )
    return pattern


def gen_tts(
    dims: Sequence[int],
    sequence,
    seed: int = 0,
    obs_per_segment: int = 100,
) -> tuple[TensorTS, GroundTruth]:
    """Generate a synthetic series for a sequence name or explicit pattern.

    Draw order is fixed (networks per cluster and mode, then segment
    length compositions per cluster, then samples in time order), so a
    seed pins the output exactly.
    """
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DataFormatError(f"dims must be positive, got {dims}")
    pattern = _resolve_pattern(sequence)
    if obs_per_segment < MIN_SEGMENT_LEN:
        raise DataFormatError(
            f"obs_per_segment must be >= {MIN_SEGMENT_LEN}, got {obs_per_segment}"
        )
    k = max(pattern)
    rng = np.random.default_rng(seed)

    mode_networks = tuple(
        tuple(gen_mode_network(d, rng) for d in dims) for _ in range(k)
    )
    precisions = tuple(build_cluster_precision(nets) for nets in mode_networks)

    counts = [pattern.count(c) for c in range(1, k + 1)]
    lengths_by_cluster: list[list[int]] = []
    for g in counts:
        total = obs_per_segment * g
        extra = total - MIN_SEGMENT_LEN * g
        parts = rng.multinomial(extra, np.full(g, 1.0 / g)) + MIN_SEGMENT_LEN
        lengths_by_cluster.append([int(v) for v in parts])

    seg_lengths = []
    taken = [0] * k
    for c in pattern:
        seg_lengths.append(lengths_by_cluster[c - 1][taken[c - 1]])
        taken[c - 1] += 1

    chols = [cholesky(theta, lower=True) for theta in precisions]
    d_total = precisions[0].shape[0]
    t_total = sum(seg_lengths)
    flat = np.empty((d_total, t_total))
    labels = np.empty(t_total, dtype=np.int64)
    cut_points = []
    pos = 0
    for c, length in zip(pattern, seg_lengths):
        cut_points.append(pos + 1)
        z = rng.standard_normal((length, d_total))
        flat[:, pos : pos + length] = solve_triangular(
            chols[c - 1], z.T, lower=True, trans="T"
        )
        labels[pos : pos + length] = c
        pos += length

    truth = GroundTruth(
        labels=labels,
        cut_points=tuple(cut_points),
        segment_cluster=pattern,
        k=k,
        mode_networks=mode_networks,
        precisions=precisions,
    )
    return TensorTS.from_flat(flat, dims), truth


def write_labels_csv(path, labels: np.ndarray) -> None:
    """Write per-step cluster ids as 't,cluster' rows, t starting at 1."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "cluster"])
        for t, c in enumerate(np.asarray(labels).ravel(), start=1):
            writer.writerow([t, int(c)])


def read_labels_csv(path) -> np.ndarray:
    """Read a 't,cluster' file back into a (T,) label array."""
    rows: list[tuple[int, int]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["t", "cluster"]:
            raise DataFormatError(f"{path}: expected header 't,cluster'")
        for row in reader:
            if not row:
                continue
            try:
                rows.append((int(row[0]), int(row[1])))
            except (ValueError, IndexError) as exc:
                raise DataFormatError(f"{path}: bad row {row!r}") from exc
    rows.sort()
    if not rows or [t for t, _ in rows] != list(range(1, len(rows) + 1)):
        raise DataFormatError(f"{path}: steps must cover 1..T exactly")
    return np.array([c for _, c in rows], dtype=np.int64)
