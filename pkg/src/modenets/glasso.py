"""Per-mode sparse Gaussian dependency network estimation.

Each data mode of a segment gets its own precision matrix, fit by ADMM on
the l1-penalized negative log-likelihood of the pooled mode slices:

    minimize  lam * ||psi||_od,1 + (t/2) * (tr(S psi) - logdet(psi))

over positive-definite psi, where S is the pooled covariance of the
segment's mode slices, t the segment length, and ||.||_od,1 the l1 norm of
both off-diagonal triangles. Many same-size problems are iterated together
as a stacked eigendecomposition; per-problem trajectories are identical to
one-at-a-time fits because the updates never couple problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError, InvalidModelError, InvalidStatsError

LOG_2PI = float(np.log(2.0 * np.pi))

__all__ = [
    "AdmmConfig",
    "ModeStats",
    "ModeNetwork",
    "compute_mode_stats",
    "fit_network",
    "fit_networks",
    "mode_log_likelihood",
    "l1_offdiag",
    "network_objective",
]


@dataclass(frozen=True)
class AdmmConfig:
    """ADMM solver knobs.

    Stopping uses Boyd-style primal/dual Frobenius residuals against
    eps = abs_tol + rel_tol * scale.
    """

    rho: float = 1.0
    abs_tol: float = 1e-6
    rel_tol: float = 1e-5
    max_iter: int = 1000

    def __post_init__(self):
        if self.rho <= 0 or self.abs_tol <= 0 or self.rel_tol < 0:
            raise ValueError("rho and abs_tol must be positive, rel_tol >= 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class ModeStats:
    """Sufficient statistics of one mode over one pooled time range.

    means has shape (p, D_n): one mean vector per fixed combination of the
    other modes. pooled_cov is the (D_n, D_n) covariance pooled over time
    and slices, normalized by t_count * p.
    """

    n: int
    t_count: int
    p: int
    means: np.ndarray
    pooled_cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", np.asarray(self.means, dtype=np.float64))
        object.__setattr__(
            self, "pooled_cov", np.asarray(self.pooled_cov, dtype=np.float64)
        )
        d = self.pooled_cov.shape[0]
        if self.pooled_cov.shape != (d, d) or self.means.shape != (self.p, d):
            raise InvalidStatsError(
                f"inconsistent stats shapes: means {self.means.shape}, "
                f"cov {self.pooled_cov.shape}, p={self.p}"
            )
        if self.t_count < 1 or self.p < 1:
            raise InvalidStatsError("t_count and p must be >= 1")

    @property
    def dim(self) -> int:
        return self.pooled_cov.shape[0]


@dataclass(frozen=True)
class ModeNetwork:
    """Estimated mode-n precision matrix with its sparsity pattern.

    psi is symmetric positive definite; support marks structural nonzeros
    (diagonal always True). degenerate flags the diagonal fallback used
    when a range is too short for a covariance.
    """

    n: int
    psi: np.ndarray
    support: np.ndarray
    converged: bool = True
    n_iter: int = 0
    degenerate: bool = False

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=np.float64)
        support = np.asarray(self.support, dtype=bool)
        d = psi.shape[0]
        if psi.shape != (d, d) or support.shape != (d, d):
            raise InvalidModelError(f"psi/support must be square, got {psi.shape}")
        if not np.isfinite(psi).all():
            raise InvalidModelError("psi must be finite")
        if np.abs(psi - psi.T).max() > 1e-8:
            raise InvalidModelError("psi must be symmetric within 1e-8")
        if not support.diagonal().all():
            raise InvalidModelError("support diagonal must be True")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "support", support)

    @property
    def dim(self) -> int:
        return self.psi.shape[0]


def compute_mode_stats(slices: np.ndarray, n: int) -> ModeStats:
    """Pool a (T, p, D_n) slice stack into per-slice means and covariance."""
    slices = np.asarray(slices, dtype=np.float64)
    if slices.ndim != 3:
        raise InvalidStatsError(f"slices must be (T, p, D), got {slices.shape}")
    t_count, p, d = slices.shape
    if t_count * p < 2:
        raise InsufficientDataError(
            f"need at least 2 effective samples, got T={t_count}, p={p}"
        )
    means = slices.mean(axis=0)
    centered = slices - means[None, :, :]
    cov = np.einsum("tpi,tpj->ij", centered, centered) / (t_count * p)
    cov = 0.5 * (cov + cov.T)
    return ModeStats(n=n, t_count=t_count, p=p, means=means, pooled_cov=cov)


def _soft_threshold_offdiag(a: np.ndarray, thr: float) -> np.ndarray:
    """Shrink off-diagonals of a (B, D, D) stack toward zero by thr."""
    z = np.sign(a) * np.maximum(np.abs(a) - thr, 0.0)
    d = a.shape[-1]
    idx = np.arange(d)
    z[..., idx, idx] = a[..., idx, idx]
    return z


def _admm_batch(
    covs: np.ndarray, t_counts: np.ndarray, lam: float, config: AdmmConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run independent ADMM glasso problems side by side.

    covs is (B, D, D), t_counts (B,). Returns (psi (B, D, D), n_iter (B,),
    converged (B,)). Each problem is frozen at its own first convergence,
    so results match solo runs bit for bit.
    """
    rho = config.rho
    n_prob, d, _ = covs.shape
    idx = np.arange(d)

    out_psi = np.empty_like(covs)
    out_iter = np.full(n_prob, config.max_iter, dtype=np.int64)
    out_conv = np.zeros(n_prob, dtype=bool)

    active = np.arange(n_prob)
    s_act = covs.copy()
    t_act = t_counts.astype(np.float64).copy()
    z = np.zeros_like(s_act)
    z[:, idx, idx] = 1.0 / np.maximum(s_act[:, idx, idx], 1e-12)
    u = np.zeros_like(s_act)
    thr = lam / rho

    for it in range(1, config.max_iter + 1):
        m = rho * (z - u) - 0.5 * t_act[:, None, None] * s_act
        m = 0.5 * (m + m.transpose(0, 2, 1))
        eigval, eigvec = np.linalg.eigh(m)
        root = (eigval + np.sqrt(eigval**2 + 2.0 * rho * t_act[:, None])) / (2.0 * rho)
        theta = (eigvec * root[:, None, :]) @ eigvec.transpose(0, 2, 1)
        theta = 0.5 * (theta + theta.transpose(0, 2, 1))

        z_new = _soft_threshold_offdiag(theta + u, thr)
        r_norm = np.sqrt(((theta - z_new) ** 2).sum(axis=(1, 2)))
        s_norm = rho * np.sqrt(((z_new - z) ** 2).sum(axis=(1, 2)))
        u = u + theta - z_new

        theta_norm = np.sqrt((theta**2).sum(axis=(1, 2)))
        z_norm = np.sqrt((z_new**2).sum(axis=(1, 2)))
        eps_pri = config.abs_tol + config.rel_tol * np.maximum(theta_norm, z_norm)
        eps_dual = config.abs_tol + config.rel_tol * rho * np.sqrt(
            (u**2).sum(axis=(1, 2))
        )
        hit = (r_norm <= eps_pri) & (s_norm <= eps_dual)
        if hit.any():
            frozen = active[hit]
            out_psi[frozen] = z_new[hit]
            out_iter[frozen] = it
            out_conv[frozen] = True
            keep = ~hit
            if not keep.any():
                return out_psi, out_iter, out_conv
            active = active[keep]
            s_act, t_act = s_act[keep], t_act[keep]
            z, u = z_new[keep], u[keep]
        else:
            z = z_new

    out_psi[active] = z
    return out_psi, out_iter, out_conv


def _finalize_network(
    n: int, psi: np.ndarray, n_iter: int, converged: bool
) -> ModeNetwork:
    support = psi != 0.0
    d = psi.shape[0]
    support[np.arange(d), np.arange(d)] = True
    min_eig = float(np.linalg.eigvalsh(psi).min())
    if min_eig <= 0.0:
        # Rare: shift onto the PD cone and flag it rather than fail.
        psi = psi + (abs(min_eig) + 1e-8) * np.eye(d)
        converged = False
    return ModeNetwork(
        n=n, psi=psi, support=support, converged=bool(converged), n_iter=int(n_iter)
    )


def _check_fit_inputs(stats: ModeStats, lam: float) -> None:
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    cov = stats.pooled_cov
    if np.abs(cov - cov.T).max() > 1e-8:
        raise InvalidStatsError("pooled_cov must be symmetric within 1e-8")
    if float(np.linalg.eigvalsh(cov).min()) < -1e-10:
        raise InvalidStatsError(
            "pooled_cov has a negative eigenvalue beyond tolerance"
        )


def fit_network(
    stats: ModeStats, lam: float, config: AdmmConfig = AdmmConfig()
) -> ModeNetwork:
    """Fit one mode network; deterministic for fixed stats and lam."""
    _check_fit_inputs(stats, lam)
    psi, n_iter, conv = _admm_batch(
        stats.pooled_cov[None, :, :],
        np.array([stats.t_count], dtype=np.float64),
        lam,
        config,
    )
    return _finalize_network(stats.n, psi[0], int(n_iter[0]), bool(conv[0]))


def fit_networks(
    stats_list: Sequence[ModeStats],
    lam: float,
    config: AdmmConfig = AdmmConfig(),
    threads: int = 1,
) -> list[ModeNetwork]:
    """Fit many mode networks, batching problems of equal dimension.

    threads > 1 splits the batches across a thread pool; problems never
    couple, so the results are identical to a serial run.
    """
    for stats in stats_list:
        _check_fit_inputs(stats, lam)
    by_dim: dict[int, list[int]] = {}
    for i, stats in enumerate(stats_list):
        by_dim.setdefault(stats.dim, []).append(i)
    chunks: list[list[int]] = []
    for indices in by_dim.values():
        if threads > 1:
            size = max(1, -(-len(indices) // threads))
            chunks.extend(
                indices[j : j + size] for j in range(0, len(indices), size)
            )
        else:
            chunks.append(indices)

    out: list[ModeNetwork | None] = [None] * len(stats_list)

    def run(indices: list[int]):
        covs = np.stack([stats_list[i].pooled_cov for i in indices])
        t_counts = np.array([stats_list[i].t_count for i in indices], dtype=np.float64)
        return _admm_batch(covs, t_counts, lam, config)

    if threads > 1 and len(chunks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    for indices, (psis, iters, convs) in zip(chunks, results):
        for j, i in enumerate(indices):
            out[i] = _finalize_network(
                stats_list[i].n, psis[j], int(iters[j]), bool(convs[j])
            )
    return out  # type: ignore[return-value]


def mode_log_likelihood(
    slices: np.ndarray, network: ModeNetwork, means: np.ndarray
) -> np.ndarray:
    """Per-time-step mode-n Gaussian log-likelihood, averaged over slices.

    output[t] = (1/p) sum_d -0.5 (x_td - mu_d)' psi (x_td - mu_d)
                + 0.5 logdet(psi) - (D_n/2) log(2 pi)
    """
    slices = np.asarray(slices, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    if slices.ndim != 3 or slices.shape[1:] != means.shape:
        raise InvalidModelError(
            f"slices {slices.shape} and means {means.shape} do not align"
        )
    if means.shape[1] != network.dim:
        raise InvalidModelError(
            f"network dim {network.dim} does not match slices {slices.shape}"
        )
    sign, logdet = np.linalg.slogdet(network.psi)
    if sign <= 0:
        raise InvalidModelError("psi must be positive definite")
    p = slices.shape[1]
    centered = slices - means[None, :, :]
    quad = np.einsum("tpi,ij,tpj->t", centered, network.psi, centered)
    return -0.5 * quad / p + 0.5 * logdet - 0.5 * network.dim * LOG_2PI


def l1_offdiag(psi: np.ndarray) -> float:
    """l1 norm of both off-diagonal triangles."""
    psi = np.asarray(psi)
    return float(np.abs(psi).sum() - np.abs(np.diagonal(psi)).sum())


def network_objective(psi: np.ndarray, stats: ModeStats, lam: float) -> float:
    """Penalized objective lam*||psi||_od,1 + (t/2)(tr(S psi) - logdet psi)."""
    sign, logdet = np.linalg.slogdet(psi)
    if sign <= 0:
        return float("inf")
    trace = float(np.vdot(stats.pooled_cov, psi))
    return lam * l1_offdiag(psi) + 0.5 * stats.t_count * (trace - logdet)
