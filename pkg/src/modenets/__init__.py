"""Subsequence clustering of tensor time series via per-mode sparse
dependency networks, with segmentation, cluster count, and sparsity all
chosen by total description length."""

from .cluster import (
    ClusterParams,
    assign_segments,
    detect_clusters,
    fit,
    infer_networks,
)
from .errors import (
    DataFormatError,
    InsufficientDataError,
    InvalidModelError,
    InvalidPartitionError,
    InvalidStatsError,
    ModeNetsError,
    NumericError,
)
from .evaluate import EvalReport, labels_from_params, loglik_report, macro_f1
from .glasso import (
    AdmmConfig,
    ModeNetwork,
    ModeStats,
    compute_mode_stats,
    fit_network,
    fit_networks,
    l1_offdiag,
    mode_log_likelihood,
)
from .mdl import (
    Assignments,
    CostBreakdown,
    cost_assign,
    cost_data,
    cost_l1,
    cost_model,
    cost_total,
    log_star,
)
from .model import (
    ClusterModel,
    assemble_precision,
    mode_means,
    total_log_likelihood,
)
from .segmenter import (
    InitialWindows,
    Segmentation,
    detect,
    fit_segment_model,
    init_cutpoints,
)
from .synth import (
    SEQUENCE_PATTERNS,
    GroundTruth,
    build_cluster_precision,
    gen_mode_network,
    gen_tts,
    sample_gaussian,
)
from .tensor import (
    REMAINING,
    TensorTS,
    mode_slices,
    normalize_periods,
    read_tts,
    reorder,
    slice_time,
    write_tts,
)

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "Assignments",
    "ClusterModel",
    "ClusterParams",
    "CostBreakdown",
    "DataFormatError",
    "EvalReport",
    "GroundTruth",
    "InitialWindows",
    "InsufficientDataError",
    "InvalidModelError",
    "InvalidPartitionError",
    "InvalidStatsError",
    "ModeNetsError",
    "ModeNetwork",
    "ModeStats",
    "NumericError",
    "REMAINING",
    "SEQUENCE_PATTERNS",
    "Segmentation",
    "TensorTS",
    "assemble_precision",
    "assign_segments",
    "build_cluster_precision",
    "compute_mode_stats",
    "cost_assign",
    "cost_data",
    "cost_l1",
    "cost_model",
    "cost_total",
    "detect",
    "detect_clusters",
    "fit",
    "fit_network",
    "fit_networks",
    "fit_segment_model",
    "gen_mode_network",
    "gen_tts",
    "infer_networks",
    "init_cutpoints",
    "l1_offdiag",
    "labels_from_params",
    "log_star",
    "loglik_report",
    "macro_f1",
    "mode_log_likelihood",
    "mode_means",
    "mode_slices",
    "normalize_periods",
    "read_tts",
    "reorder",
    "sample_gaussian",
    "slice_time",
    "total_log_likelihood",
    "write_tts",
]
