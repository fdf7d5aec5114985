"""Cluster model: one dependency network per mode plus a mean vector.

A cluster's joint precision over all D = prod(D_n) variables is assembled
hierarchically: mode 1's matrix is the base block; each further mode n
contributes its off-diagonal entries psi_ij as couplings between whole
copies of the level-(n-1) block. Diagonals of modes n >= 2 are not placed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidModelError
from .glasso import ModeNetwork, mode_log_likelihood
from .tensor import REMAINING, TensorTS, mode_slices, reorder

__all__ = [
    "ClusterModel",
    "assemble_precision",
    "mode_means",
    "total_log_likelihood",
    "model_to_dict",
    "model_from_dict",
]


@dataclass(frozen=True)
class ClusterModel:
    """Per-mode networks, a full mean vector, and the member step count."""

    networks: tuple[ModeNetwork, ...]
    mean_vec: np.ndarray
    member_count: int

    def __post_init__(self):
        networks = tuple(self.networks)
        if not networks:
            raise InvalidModelError("a model needs at least one mode network")
        for i, net in enumerate(networks):
            if net.n != i + 1:
                raise InvalidModelError(
                    f"networks must be ordered by mode, got mode {net.n} at {i}"
                )
        mean_vec = np.asarray(self.mean_vec, dtype=np.float64).ravel()
        d = int(np.prod([net.dim for net in networks]))
        if mean_vec.shape != (d,):
            raise InvalidModelError(
                f"mean_vec has length {mean_vec.shape[0]}, networks imply {d}"
            )
        if not np.isfinite(mean_vec).all():
            raise InvalidModelError("mean_vec must be finite")
        if self.member_count < 0:
            raise InvalidModelError("member_count must be >= 0")
        object.__setattr__(self, "networks", networks)
        object.__setattr__(self, "mean_vec", mean_vec)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(net.dim for net in self.networks)

    @property
    def d_total(self) -> int:
        return int(np.prod(self.dims))


def _as_psi(entry) -> np.ndarray:
    psi = entry.psi if isinstance(entry, ModeNetwork) else np.asarray(entry)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise InvalidModelError(f"mode matrix must be square, got {psi.shape}")
    return np.asarray(psi, dtype=np.float64)


def assemble_precision(networks) -> np.ndarray:
    """Assemble per-mode matrices into the joint (D, D) matrix.

    Accepts a ClusterModel, ModeNetworks, or plain square arrays (mode
    order). Mode 1 enters whole; higher modes contribute off-diagonals
    only, each entry scaling an identity coupling between blocks.
    """
    if isinstance(networks, ClusterModel):
        networks = networks.networks
    psis = [_as_psi(entry) for entry in networks]
    theta = psis[0].copy()
    for psi in psis[1:]:
        off = psi - np.diag(np.diagonal(psi))
        theta = np.kron(np.eye(psi.shape[0]), theta) + np.kron(
            off, np.eye(theta.shape[0])
        )
    return theta


def mode_means(model: ClusterModel, n: int) -> np.ndarray:
    """Mean of each mode-n slice, shape (p_n, D_n); matches mode_slices."""
    if not 1 <= n <= len(model.networks):
        raise InvalidModelError(f"mode {n} out of range 1..{len(model.networks)}")
    mean_tensor = model.mean_vec.reshape(model.dims, order="F")
    return reorder(mean_tensor, ((REMAINING,), (n,)))


def total_log_likelihood(x: TensorTS, model: ClusterModel) -> np.ndarray:
    """Per-time-step log-likelihood summed over the model's modes."""
    if x.dims != model.dims:
        raise InvalidModelError(
            f"tensor dims {x.dims} do not match model dims {model.dims}"
        )
    total = np.zeros(x.t_len)
    for n, net in enumerate(model.networks, start=1):
        total += mode_log_likelihood(mode_slices(x, n), net, mode_means(model, n))
    return total


def model_to_dict(model: ClusterModel) -> dict:
    """JSON-ready form: dense row-major psi and support, mean_vec, count."""
    return {
        "networks": [
            {
                "mode": net.n,
                "psi": net.psi.tolist(),
                "support": net.support.tolist(),
                "converged": net.converged,
                "n_iter": net.n_iter,
                "degenerate": net.degenerate,
            }
            for net in model.networks
        ],
        "mean_vec": model.mean_vec.tolist(),
        "member_count": model.member_count,
    }


def model_from_dict(payload: dict) -> ClusterModel:
    networks = tuple(
        ModeNetwork(
            n=int(entry["mode"]),
            psi=np.array(entry["psi"], dtype=np.float64),
            support=np.array(entry["support"], dtype=bool),
            converged=bool(entry.get("converged", True)),
            n_iter=int(entry.get("n_iter", 0)),
            degenerate=bool(entry.get("degenerate", False)),
        )
        for entry in payload["networks"]
    )
    return ClusterModel(
        networks=networks,
        mean_vec=np.array(payload["mean_vec"], dtype=np.float64),
        member_count=int(payload["member_count"]),
    )
