"""Command-line shell over the library.

Subcommands: generate synthetic data, fit a series, eval a result against
truth labels, export a network, bench the scaling sweeps. Machine output
goes to files or stdout; logs go to stderr. Exit codes: 0 ok, 2 usage,
3 data problem, 4 numeric failure. JSON floats carry 17 significant
digits and are emitted deterministically.
"""

from __future__ import annotations

import csv
import functools
import json
import logging
import math
import sys
import time

import click
import numpy as np

from . import __version__
from .cluster import ClusterParams, DEFAULT_LAMBDA_GRID, fit
from .errors import ModeNetsError, NumericError
from .evaluate import labels_from_params, loglik_report, macro_f1
from .glasso import AdmmConfig
from .mdl import CostBreakdown
from .model import model_from_dict, model_to_dict
from .segments import Assignments, Segmentation
from .synth import gen_tts, read_labels_csv, write_labels_csv
from .tensor import (
    TensorTS,
    interpolate_missing,
    normalize_periods,
    read_tts,
    read_tts_raw,
    write_tts,
)

logger = logging.getLogger("modenets")

RESULT_FORMAT = "modenets-result"
RESULT_VERSION = 1


# ---------------------------------------------------------------------------
# deterministic JSON with 17-significant-digit floats


def _format_float(v: float) -> str:
    if not math.isfinite(v):
        raise NumericError(f"non-finite value in output: {v!r}")
    return format(float(v), ".17g")


def dumps_17g(obj, indent: int = 2) -> str:
    """Serialize to JSON, floats as %.17g, keys in insertion order."""
    pieces: list[str] = []

    def emit(o, depth: int) -> None:
        pad = " " * (indent * depth)
        inner = " " * (indent * (depth + 1))
        if isinstance(o, bool) or isinstance(o, np.bool_):
            pieces.append("true" if o else "false")
        elif isinstance(o, (int, np.integer)):
            pieces.append(str(int(o)))
        elif isinstance(o, (float, np.floating)):
            pieces.append(_format_float(float(o)))
        elif o is None:
            pieces.append("null")
        elif isinstance(o, str):
            pieces.append(json.dumps(o))
        elif isinstance(o, dict):
            if not o:
                pieces.append("{}")
                return
            pieces.append("{\n")
            for i, (key, val) in enumerate(o.items()):
                pieces.append(f"{inner}{json.dumps(str(key))}: ")
                emit(val, depth + 1)
                pieces.append(",\n" if i < len(o) - 1 else "\n")
            pieces.append(pad + "}")
        elif isinstance(o, (list, tuple)) or isinstance(o, np.ndarray):
            seq = o.tolist() if isinstance(o, np.ndarray) else list(o)
            if not seq:
                pieces.append("[]")
                return
            pieces.append("[\n")
            for i, val in enumerate(seq):
                pieces.append(inner)
                emit(val, depth + 1)
                pieces.append(",\n" if i < len(seq) - 1 else "\n")
            pieces.append(pad + "]")
        else:
            raise TypeError(f"cannot serialize {type(o).__name__}")

    emit(obj, 0)
    pieces.append("\n")
    return "".join(pieces)


# ---------------------------------------------------------------------------
# result (de)serialization


def encode_result(params: ClusterParams, shape, config: dict) -> dict:
    assign = params.assignments
    return {
        "format": RESULT_FORMAT,
        "version": RESULT_VERSION,
        "config": config,
        "shape": list(shape),
        "lambda": params.lam,
        "k": assign.k,
        "m": assign.m,
        "cut_points": list(assign.segmentation.cut_points),
        "segment_cluster": list(assign.segment_cluster),
        "costs": params.costs.to_dict(),
        "clusters": [model_to_dict(mdl) for mdl in params.models],
        "diagnostics": params.diagnostics,
    }


def decode_result(payload: dict) -> ClusterParams:
    if payload.get("format") != RESULT_FORMAT:
        raise ModeNetsError(
            f"not a result file (format={payload.get('format')!r})"
        )
    shape = [int(v) for v in payload["shape"]]
    seg = Segmentation(tuple(payload["cut_points"]), shape[-1])
    assign = Assignments(seg, tuple(payload["segment_cluster"]), int(payload["k"]))
    models = tuple(model_from_dict(entry) for entry in payload["clusters"])
    costs = payload["costs"]
    return ClusterParams(
        assignments=assign,
        models=models,
        lam=float(payload["lambda"]),
        costs=CostBreakdown(
            assign=float(costs["assign"]),
            model=float(costs["model"]),
            data=float(costs["data"]),
            l1=float(costs["l1"]),
            total=float(costs["total"]),
        ),
        diagnostics=payload.get("diagnostics", {}),
    )


def load_result(path) -> ClusterParams:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModeNetsError(f"{path}: invalid JSON: {exc}") from exc
    return decode_result(payload)


# ---------------------------------------------------------------------------
# DOT / edge-list export


def partial_correlations(psi: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.diagonal(psi))
    return -psi / np.outer(d, d)


def export_network(params: ClusterParams, cluster: int, mode: int,
                   node_labels=None) -> dict:
    """Edge list of one cluster's mode network with partial correlations."""
    if not 1 <= cluster <= params.k:
        raise ModeNetsError(f"cluster {cluster} out of range 1..{params.k}")
    model = params.models[cluster - 1]
    if not 1 <= mode <= len(model.networks):
        raise ModeNetsError(
            f"mode {mode} out of range 1..{len(model.networks)}"
        )
    net = model.networks[mode - 1]
    d = net.dim
    if node_labels is None:
        node_labels = [f"v{i + 1}" for i in range(d)]
    node_labels = [str(v) for v in node_labels]
    if len(node_labels) != d:
        raise ModeNetsError(f"need {d} node labels, got {len(node_labels)}")
    pc = partial_correlations(net.psi)
    edges = []
    for i in range(d):
        for j in range(i + 1, d):
            if net.support[i, j] and net.psi[i, j] != 0.0:
                edges.append(
                    {
                        "source": node_labels[i],
                        "target": node_labels[j],
                        "psi": float(net.psi[i, j]),
                        "partial_correlation": float(pc[i, j]),
                    }
                )
    return {
        "cluster": cluster,
        "mode": mode,
        "nodes": node_labels,
        "edges": edges,
    }


def to_dot(graph: dict) -> str:
    """Render an export_network payload as an undirected DOT graph."""
    name = f"cluster{graph['cluster']}_mode{graph['mode']}"
    lines = [f'graph "{name}" {{']
    for label in graph["nodes"]:
        lines.append(f"  {json.dumps(label)};")
    for edge in graph["edges"]:
        w = edge["partial_correlation"]
        lines.append(
            f"  {json.dumps(edge['source'])} -- {json.dumps(edge['target'])} "
            f'[weight={_format_float(w)}, label="{w:.3f}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# shared option handling


class _DataError(click.ClickException):
    exit_code = 3


class _NumericFail(click.ClickException):
    exit_code = 4


def _mapped(fn):
    """Translate library errors into the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (NumericError, np.linalg.LinAlgError, FloatingPointError) as exc:
            raise _NumericFail(str(exc)) from exc
        except ModeNetsError as exc:
            raise _DataError(str(exc)) from exc
        except OSError as exc:
            raise _DataError(str(exc)) from exc
        except ValueError as exc:
            raise click.UsageError(str(exc)) from exc

    return wrapper


def _parse_floats(text: str, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise click.UsageError(f"{what} must be comma-separated numbers") from exc
    if not vals:
        raise click.UsageError(f"{what} must not be empty")
    return vals


def _parse_ints(text: str, what: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise click.UsageError(f"{what} must be comma-separated integers") from exc
    if not vals:
        raise click.UsageError(f"{what} must not be empty")
    return vals


def _write_text(path, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands


@click.group()
@click.version_option(version=__version__, prog_name="modenets")
@click.option("-v", "--verbose", count=True,
              help="-v for progress, -vv for solver detail.")
def main(verbose: int) -> None:
    """Cluster tensor time series into per-mode dependency networks."""
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(verbose, 2)]
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--dims", required=True, help="Comma-separated mode sizes, e.g. 10,10.")
@click.option("--sequence", required=True,
              help="Named sequence A..D or explicit pattern like 1,2,1.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--obs-per-segment", default=100, show_default=True, type=int,
              help="Average steps per segment (scaling runs only).")
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Output .tts path.")
@click.option("--labels", type=click.Path(dir_okay=False),
              help="Also write truth labels CSV here.")
@click.option("--networks", type=click.Path(dir_okay=False),
              help="Also write truth networks JSON here.")
@_mapped
def generate(dims, sequence, seed, obs_per_segment, out, labels, networks):
    """Generate a synthetic series with known regimes."""
    dims_t = _parse_ints(dims, "--dims")
    seq = sequence if sequence.strip().upper() in "ABCD" and len(
        sequence.strip()) == 1 else _parse_ints(sequence, "--sequence")
    x, truth = gen_tts(dims_t, seq, seed=seed, obs_per_segment=obs_per_segment)
    write_tts(out, x, comments=[
        f"synthetic sequence={sequence} dims={list(dims_t)} seed={seed}",
    ])
    logger.info("wrote %s: shape %s, T=%d, K=%d", out, dims_t, x.t_len, truth.k)
    if labels:
        write_labels_csv(labels, truth.labels)
        logger.info("wrote %s", labels)
    if networks:
        payload = {
            "sequence": str(sequence),
            "dims": list(dims_t),
            "seed": seed,
            "k": truth.k,
            "cut_points": list(truth.cut_points),
            "segment_cluster": list(truth.segment_cluster),
            "clusters": [
                {"mode_networks": [w.tolist() for w in nets]}
                for nets in truth.mode_networks
            ],
        }
        _write_text(networks, dumps_17g(payload))
        logger.info("wrote %s", networks)


def _load_input(path, interpolate: bool) -> TensorTS:
    if interpolate:
        dims, flat = read_tts_raw(path)
        n_missing = int((~np.isfinite(flat)).sum())
        if n_missing:
            logger.info("interpolating %d missing values", n_missing)
            flat = interpolate_missing(flat)
        return TensorTS.from_flat(flat, dims)
    return read_tts(path)


@main.command(name="fit")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--window", default="4", show_default=True,
              help="Initial window size, or comma-separated explicit sizes.")
@click.option("--lambda-grid", "lambda_grid", default="0.5,1,2,4",
              show_default=True, help="Sparsity values to search.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--restarts", default=1, show_default=True, type=int)
@click.option("--max-em-iters", default=20, show_default=True, type=int)
@click.option("--max-k", default=20, show_default=True, type=int)
@click.option("--rho", default=1.0, show_default=True, type=float)
@click.option("--abs-tol", default=1e-6, show_default=True, type=float)
@click.option("--rel-tol", default=1e-5, show_default=True, type=float)
@click.option("--max-admm-iter", default=1000, show_default=True, type=int)
@click.option("--normalize-every", type=int,
              help="Z-score every variable within fixed-length periods.")
@click.option("--normalize-boundaries",
              help="Explicit period starts (comma list; sentinel T+1 implied).")
@click.option("--interpolate", is_flag=True,
              help="Fill missing values (nan) by linear interpolation.")
@click.option("--threads", default=1, show_default=True, type=int,
              help="Solver thread cap; results are independent of it.")
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Result JSON path ('-' for stdout).")
@_mapped
def fit_cmd(input_path, window, lambda_grid, seed, restarts, max_em_iters,
            max_k, rho, abs_tol, rel_tol, max_admm_iter, normalize_every,
            normalize_boundaries, interpolate, threads, out):
    """Fit segments, clusters, and networks to a .tts series."""
    if normalize_every is not None and normalize_boundaries is not None:
        raise click.UsageError(
            "--normalize-every and --normalize-boundaries are exclusive"
        )
    x = _load_input(input_path, interpolate)
    boundaries = None
    if normalize_every is not None:
        if normalize_every < 1:
            raise click.UsageError("--normalize-every must be >= 1")
        boundaries = list(range(1, x.t_len + 1, normalize_every)) + [x.t_len + 1]
    elif normalize_boundaries is not None:
        boundaries = list(_parse_ints(normalize_boundaries, "--normalize-boundaries"))
        if boundaries[-1] != x.t_len + 1:
            boundaries.append(x.t_len + 1)
    if boundaries is not None:
        x = normalize_periods(x, boundaries)

    window_arg = _parse_ints(window, "--window")
    window_val = window_arg[0] if len(window_arg) == 1 else window_arg
    grid = _parse_floats(lambda_grid, "--lambda-grid")
    config = AdmmConfig(rho=rho, abs_tol=abs_tol, rel_tol=rel_tol,
                        max_iter=max_admm_iter)
    started = time.perf_counter()
    params = fit(
        x,
        window=window_val,
        lam_grid=grid,
        seed=seed,
        config=config,
        restarts=restarts,
        max_em_iters=max_em_iters,
        max_k=max_k,
        threads=threads,
    )
    elapsed = time.perf_counter() - started
    logger.info(
        "fit done in %.1fs: lambda=%g k=%d m=%d total cost %.3f",
        elapsed, params.lam, params.k, params.assignments.m, params.costs.total,
    )
    config_echo = {
        "input": str(input_path),
        "window": list(window_arg) if len(window_arg) > 1 else window_arg[0],
        "lambda_grid": list(grid),
        "seed": seed,
        "restarts": restarts,
        "max_em_iters": max_em_iters,
        "max_k": max_k,
        "admm": {
            "rho": rho,
            "abs_tol": abs_tol,
            "rel_tol": rel_tol,
            "max_iter": max_admm_iter,
        },
        "normalize_boundaries": boundaries,
        "interpolate": bool(interpolate),
        "threads": threads,
    }
    payload = encode_result(params, list(x.dims) + [x.t_len], config_echo)
    _write_text(out, dumps_17g(payload))
    if out != "-":
        logger.info("wrote %s", out)


@main.command(name="eval")
@click.option("--result", "result_path", type=click.Path(exists=True, dir_okay=False),
              help="Result JSON (single evaluation).")
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False),
              help="Truth labels CSV (single evaluation).")
@click.option("--pair", "pairs", multiple=True, metavar="RESULT:LABELS",
              help="Batch mode; repeatable result:labels path pairs.")
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False),
              help="Original .tts; adds a log-likelihood report.")
@click.option("--out", default="-", show_default=True,
              type=click.Path(dir_okay=False), help="Report JSON path.")
@_mapped
def eval_cmd(result_path, labels_path, pairs, data_path, out):
    """Score results against truth labels (macro-F1, best matching)."""
    jobs: list[tuple[str, str]] = []
    if result_path or labels_path:
        if not (result_path and labels_path):
            raise click.UsageError("--result and --labels go together")
        jobs.append((result_path, labels_path))
    for pair in pairs:
        left, sep, right = pair.partition(":")
        if not sep:
            raise click.UsageError(f"--pair needs RESULT:LABELS, got {pair!r}")
        jobs.append((left, right))
    if not jobs:
        raise click.UsageError("nothing to evaluate; pass --result/--labels or --pair")

    reports = []
    for rpath, lpath in jobs:
        params = load_result(rpath)
        truth = read_labels_csv(lpath)
        pred = labels_from_params(params)
        if pred.shape != truth.shape:
            raise ModeNetsError(
                f"{rpath} covers T={pred.size} steps, labels {lpath} T={truth.size}"
            )
        rep = macro_f1(pred, truth)
        entry = {"result": str(rpath), "labels": str(lpath), **rep.to_dict()}
        if data_path:
            entry["log_likelihood"] = loglik_report(read_tts(data_path), params)
        reports.append(entry)
        logger.info("%s vs %s: macro_f1=%.4f", rpath, lpath, rep.macro_f1)

    if len(reports) == 1:
        payload = reports[0]
    else:
        payload = {
            "mean_macro_f1": float(np.mean([r["macro_f1"] for r in reports])),
            "evaluations": reports,
        }
    _write_text(out, dumps_17g(payload))


@main.command()
@click.option("--result", "result_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--cluster", required=True, type=int, help="1-based cluster id.")
@click.option("--mode", required=True, type=int, help="1-based mode id.")
@click.option("--format", "fmt", default="dot", show_default=True,
              type=click.Choice(["dot", "json"]))
@click.option("--node-labels", help="Comma-separated variable names.")
@click.option("--out", default="-", show_default=True,
              type=click.Path(dir_okay=False))
@_mapped
def export(result_path, cluster, mode, fmt, node_labels, out):
    """Export one cluster's mode network as DOT or a JSON edge list."""
    params = load_result(result_path)
    labels = node_labels.split(",") if node_labels else None
    graph = export_network(params, cluster, mode, labels)
    text = to_dot(graph) if fmt == "dot" else dumps_17g(graph)
    _write_text(out, text)


@main.command()
@click.option("--vary", required=True, type=click.Choice(["T", "D1"]),
              help="Sweep axis: total steps or first mode size.")
@click.option("--values", required=True, help="Comma-separated sweep values.")
@click.option("--dims", default="5,5", show_default=True,
              help="Base mode sizes; D1 sweeps replace the first entry.")
@click.option("--sequence", default="C", show_default=True)
@click.option("--t-total", default=800, show_default=True, type=int,
              help="Series length for D1 sweeps.")
@click.option("--window", default=4, show_default=True, type=int)
@click.option("--lambda-grid", "lambda_grid", default="4", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--threads", default=1, show_default=True, type=int)
@click.option("--out", default="-", show_default=True,
              type=click.Path(dir_okay=False), help="Runtime CSV path.")
@_mapped
def bench(vary, values, dims, sequence, t_total, window, lambda_grid, seed,
          threads, out):
    """Time end-to-end fits while scaling T or D_1."""
    base_dims = list(_parse_ints(dims, "--dims"))
    sweep = _parse_ints(values, "--values")
    grid = _parse_floats(lambda_grid, "--lambda-grid")
    seq = sequence if len(sequence.strip()) == 1 else _parse_ints(
        sequence, "--sequence")
    from .synth import _resolve_pattern

    pattern = _resolve_pattern(seq)
    rows = []
    for value in sweep:
        if vary == "T":
            if value % len(pattern):
                raise click.UsageError(
                    f"T={value} is not divisible by the {len(pattern)}-segment pattern"
                )
            dims_t = tuple(base_dims)
            obs = value // len(pattern)
        else:
            dims_t = tuple([value] + base_dims[1:])
            if t_total % len(pattern):
                raise click.UsageError(
                    f"--t-total {t_total} not divisible by pattern length"
                )
            obs = t_total // len(pattern)
        x, _ = gen_tts(dims_t, seq, seed=seed, obs_per_segment=obs)
        started = time.perf_counter()
        params = fit(x, window=window, lam_grid=grid, seed=seed, threads=threads)
        elapsed = time.perf_counter() - started
        rows.append(
            {
                "vary": vary,
                "value": value,
                "dims": "x".join(str(d) for d in dims_t),
                "t": x.t_len,
                "seed": seed,
                "seconds": round(elapsed, 6),
                "k": params.k,
                "m": params.assignments.m,
            }
        )
        logger.info("%s=%d: %.2fs (k=%d, m=%d)", vary, value, elapsed,
                    params.k, params.assignments.m)

    fieldnames = ["vary", "value", "dims", "t", "seed", "seconds", "k", "m"]
    if out == "-":
        writer = csv.DictWriter(sys.stdout, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            writer.writerows(rows)


if __name__ == "__main__":
    main()
