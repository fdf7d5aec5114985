"""Tensor time series container and mode-reordering primitives.

A tensor time series is stored as an (N+1)-order float64 array whose last
axis is time. The canonical flat layout is column-major (mode 1 fastest),
so ``values.reshape(d_total, t_len, order="F")`` gives one vectorized
observation per column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError, InvalidPartitionError

REMAINING = -1

__all__ = [
    "REMAINING",
    "TensorTS",
    "reorder",
    "mode_slices",
    "slice_time",
    "normalize_periods",
    "read_tts",
    "read_tts_raw",
    "write_tts",
    "interpolate_missing",
]


@dataclass(frozen=True)
class TensorTS:
    """An (N+1)-order tensor whose last mode indexes time.

    Parameters
    ----------
    values : ndarray of shape (D_1, ..., D_N, T)
        Finite float64 observations.
    mode_labels : tuple of tuples of str, optional
        Variable names per non-time mode; entry n must have length D_{n+1}.
    """

    values: np.ndarray
    mode_labels: tuple[tuple[str, ...], ...] | None = field(default=None)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim < 2:
            raise DataFormatError(
                "values must have at least one data mode plus time, got "
                f"ndim={arr.ndim}"
            )
        if any(d < 1 for d in arr.shape):
            raise DataFormatError(f"all dimensions must be >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise DataFormatError("values must be finite")
        object.__setattr__(self, "values", arr)
        if self.mode_labels is not None:
            labels = tuple(tuple(str(v) for v in mode) for mode in self.mode_labels)
            if len(labels) != self.n_modes:
                raise DataFormatError(
                    f"mode_labels has {len(labels)} modes, tensor has {self.n_modes}"
                )
            for n, mode in enumerate(labels):
                if len(mode) != self.dims[n]:
                    raise DataFormatError(
                        f"mode {n + 1} has {self.dims[n]} variables, "
                        f"got {len(mode)} labels"
                    )
            object.__setattr__(self, "mode_labels", labels)

    @property
    def n_modes(self) -> int:
        """Number of data modes N (time excluded)."""
        return self.values.ndim - 1

    @property
    def dims(self) -> tuple[int, ...]:
        """Data-mode dimensions (D_1, ..., D_N)."""
        return self.values.shape[:-1]

    @property
    def t_len(self) -> int:
        """Number of time steps T."""
        return self.values.shape[-1]

    @property
    def d_total(self) -> int:
        """Total variable count D = prod(dims)."""
        return int(np.prod(self.dims))

    @classmethod
    def from_flat(cls, flat, dims, mode_labels=None) -> "TensorTS":
        """Build from a (D, T) matrix whose columns are vectorized steps."""
        flat = np.asarray(flat, dtype=np.float64)
        dims = tuple(int(d) for d in dims)
        if flat.ndim != 2:
            raise DataFormatError(f"flat must be 2-d, got ndim={flat.ndim}")
        d = int(np.prod(dims))
        if flat.shape[0] != d:
            raise DataFormatError(
                f"flat has {flat.shape[0]} rows, dims {dims} require {d}"
            )
        values = flat.reshape(dims + (flat.shape[1],), order="F")
        return cls(values, mode_labels)

    def flat(self) -> np.ndarray:
        """Return the (D, T) matrix of vectorized observations."""
        return self.values.reshape(self.d_total, self.t_len, order="F")


def _expand_partition(partition, n_total: int) -> list[tuple[int, ...]]:
    groups: list[list[int]] = []
    rest_at: int | None = None
    seen: set[int] = set()
    for gi, group in enumerate(partition):
        if isinstance(group, (int, np.integer)):
            raise InvalidPartitionError(
                "partition groups must be sequences of mode ids"
            )
        members = [int(m) for m in group]
        if members == [REMAINING]:
            if rest_at is not None:
                raise InvalidPartitionError("only one remaining-modes group allowed")
            rest_at = gi
            groups.append([])
            continue
        if not members:
            raise InvalidPartitionError("empty partition group")
        for m in members:
            if m == REMAINING:
                raise InvalidPartitionError(
                    "the remaining-modes marker must form its own group"
                )
            if not 1 <= m <= n_total:
                raise InvalidPartitionError(
                    f"mode {m} out of range 1..{n_total}"
                )
            if m in seen:
                raise InvalidPartitionError(f"mode {m} used twice")
            seen.add(m)
        groups.append(members)
    rest = [m for m in range(1, n_total + 1) if m not in seen]
    if rest_at is not None:
        groups[rest_at] = rest
    elif rest:
        raise InvalidPartitionError(f"modes {rest} not covered by partition")
    return [tuple(g) for g in groups]


def reorder(values: np.ndarray, partition) -> np.ndarray:
    """Regroup a tensor's modes into one axis per partition group.

    ``partition`` is a sequence of groups of 1-based mode ids; the single
    marker ``(REMAINING,)`` stands for all unused modes in ascending order.
    Within a group the first listed mode varies fastest (column-major
    combination), so ``reorder(x, ((REMAINING,),))`` is vectorization.
    An empty remaining group yields an axis of length 1.
    """
    values = np.asarray(values)
    groups = _expand_partition(partition, values.ndim)
    perm = [m - 1 for g in groups for m in g]
    out_shape = tuple(
        int(np.prod([values.shape[m - 1] for m in g])) for g in groups
    )
    return values.transpose(perm).reshape(out_shape, order="F")


def mode_slices(x: TensorTS, n: int) -> np.ndarray:
    """Stack of mode-n observation vectors, shape (T, p_n, D_n).

    Row (t, d) holds the mode-n fiber obtained by fixing the remaining
    modes at combined index d (column-major over ascending mode ids).
    """
    if not 1 <= n <= x.n_modes:
        raise InvalidPartitionError(f"mode {n} out of range 1..{x.n_modes}")
    time_mode = x.n_modes + 1
    return reorder(x.values, ((time_mode,), (REMAINING,), (n,)))


def slice_time(x: TensorTS, a: int, b: int) -> TensorTS:
    """Restrict to the half-open step range [a, b), 1-based."""
    if not (1 <= a < b <= x.t_len + 1):
        raise DataFormatError(
            f"invalid time range [{a}, {b}) for T={x.t_len}"
        )
    return TensorTS(x.values[..., a - 1 : b - 1].copy(), x.mode_labels)


def normalize_periods(x: TensorTS, boundaries: Sequence[int]) -> TensorTS:
    """Z-score every variable within each period.

    ``boundaries`` lists 1-based period starts plus the final sentinel,
    so (1, 101, 201) splits T=200 into two halves. Standard deviations are
    population (ddof=0); a variable that is constant within a period
    (sigma < 1e-12) maps to zeros there.
    """
    bounds = [int(b) for b in boundaries]
    if len(bounds) < 2 or bounds[0] != 1 or bounds[-1] != x.t_len + 1:
        raise InvalidPartitionError(
            f"boundaries must run from 1 to T+1={x.t_len + 1}, got {bounds}"
        )
    if any(b1 >= b2 for b1, b2 in zip(bounds, bounds[1:])):
        raise InvalidPartitionError("boundaries must be strictly increasing")
    flat = x.flat().copy()
    for a, b in zip(bounds, bounds[1:]):
        block = flat[:, a - 1 : b - 1]
        mu = block.mean(axis=1, keepdims=True)
        sigma = block.std(axis=1, keepdims=True)
        ok = sigma >= 1e-12
        centered = block - mu
        flat[:, a - 1 : b - 1] = np.where(ok, centered / np.where(ok, sigma, 1.0), 0.0)
    return TensorTS.from_flat(flat, x.dims, x.mode_labels)


def interpolate_missing(flat: np.ndarray) -> np.ndarray:
    """Fill NaN gaps in a (D, T) matrix by per-variable linear interpolation.

    Leading or trailing gaps have no anchor on one side and are rejected.
    """
    flat = np.asarray(flat, dtype=np.float64)
    out = flat.copy()
    t_len = flat.shape[1]
    steps = np.arange(t_len, dtype=np.float64)
    for d in range(flat.shape[0]):
        row = flat[d]
        missing = ~np.isfinite(row)
        if not missing.any():
            continue
        if missing.all() or missing[0] or missing[-1]:
            raise DataFormatError(
                f"variable {d + 1} has a leading or trailing gap; "
                "linear interpolation needs anchors on both sides"
            )
        out[d, missing] = np.interp(steps[missing], steps[~missing], row[~missing])
    return out


def read_tts_raw(path) -> tuple[tuple[int, ...], np.ndarray]:
    """Parse a .tts file into (dims, (D, T) matrix); NaN entries allowed."""
    rows: list[list[float]] = []
    header: list[int] | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            tokens = text.split()
            if header is None:
                try:
                    header = [int(tok) for tok in tokens]
                except ValueError as exc:
                    raise DataFormatError(
                        f"{path}:{lineno}: header must be integers 'D_1 ... D_N T'"
                    ) from exc
                if len(header) < 2 or any(v < 1 for v in header):
                    raise DataFormatError(
                        f"{path}:{lineno}: header needs N>=1 dims and T, all >= 1"
                    )
                continue
            try:
                rows.append([float(tok) for tok in tokens])
            except ValueError as exc:
                raise DataFormatError(
                    f"{path}:{lineno}: non-numeric value"
                ) from exc
    if header is None:
        raise DataFormatError(f"{path}: missing header line")
    dims, t_len = tuple(header[:-1]), header[-1]
    d_total = math.prod(dims)
    if len(rows) != t_len:
        raise DataFormatError(
            f"{path}: header promises T={t_len} rows, found {len(rows)}"
        )
    for i, row in enumerate(rows):
        if len(row) != d_total:
            raise DataFormatError(
                f"{path}: row {i + 1} has {len(row)} values, expected {d_total}"
            )
    flat = np.array(rows, dtype=np.float64).T if rows else np.zeros((d_total, 0))
    if np.isinf(flat).any():
        raise DataFormatError(f"{path}: infinite values are not allowed")
    return dims, flat


def read_tts(path) -> TensorTS:
    """Read a .tts file; values must be finite (see interpolate_missing)."""
    dims, flat = read_tts_raw(path)
    if not np.isfinite(flat).all():
        raise DataFormatError(
            f"{path}: missing values present; ingest with interpolation enabled"
        )
    return TensorTS.from_flat(flat, dims)


def write_tts(path, x: TensorTS, comments: Iterable[str] = ()) -> None:
    """Write a TensorTS as '# comments, dims header, one step per line'."""
    flat = x.flat()
    with open(path, "w", encoding="utf-8") as fh:
        for comment in comments:
            fh.write(f"# {comment}\n")
        fh.write(" ".join(str(d) for d in x.dims) + f" {x.t_len}\n")
        for t in range(x.t_len):
            fh.write(" ".join(format(v, ".17g") for v in flat[:, t]) + "\n")
