"""Monte-Carlo benchmark engine: sweep configs, trial execution, output files.

A benchmark is described by an :class:`ExperimentSpec` (parseable from a
flat ``key = value`` text config).  The engine expands the sweep axes into
points, runs seeded independent trials per point, and writes a flat
results table (CSV or JSON) plus a JSON manifest echoing the resolved
configuration.

Determinism: every trial derives its random state from
``SeedSequence((seed, point_index, trial_index))``, so results are
bit-identical for a given spec regardless of thread count or execution
order, and any single row can be re-run in isolation.
"""

from __future__ import annotations

import csv
import json
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from importlib import metadata

import numpy as np

from .channel import SystemConfig, draw_paths, freq_response_from_taps, taps_from_paths
from .dictionaries import (
    FreqDictionary,
    TimeDictionary,
    build_delay_grid,
    build_grids,
    snap_paths_to_grids,
    ula_geometry,
)
from .metrics import TrialResult, nmse, spectral_efficiency
from .recovery import estimate_fd, estimate_td, estimate_tf
from .training import TrainingConfig, draw_training, simulate_rx

__all__ = [
    "ExperimentSpec",
    "SweepPoint",
    "BenchResult",
    "CSV_COLUMNS",
    "parse_config_text",
    "spec_to_text",
    "sweep_points",
    "run_experiment",
    "write_outputs",
]

ESTIMATOR_NAMES = ("td", "fd", "tf")
ANGLE_MODES = ("off-grid", "on-grid")

CSV_COLUMNS = (
    "estimator", "snr_db", "m_frames", "n_rf", "n_p", "p_subcarriers",
    "g_r", "g_t", "g_c", "trial", "seed", "nmse", "nmse_db", "rate_bps_hz",
    "flags",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Resolved benchmark description.

    Scalar fields fix the link; tuple fields are sweep axes whose Cartesian
    product defines the sweep points.  A ``grids`` entry is either
    ``(g_rx, g_tx, g_delay)`` (using the base antenna counts) or
    ``(n_rx, n_tx, g_rx, g_tx, g_delay)`` to sweep array sizes jointly
    with their dictionary resolutions.
    """

    name: str = "experiment"
    n_rx: int = 16
    n_tx: int = 32
    n_taps: int = 4
    frame_len: int = 16
    fft_size: int = 16
    rolloff: float = 0.8
    symbol_period: float = 1.0
    phase_bits: int = 2
    n_streams: int = 1
    angle_mode: str = "off-grid"
    snr_db: tuple = (0.0,)
    m_frames: tuple = (60,)
    n_rf: tuple = (2,)
    n_paths: tuple = (2,)
    p_subcarriers: tuple = (4,)
    grids: tuple = ((32, 64, 8),)
    estimators: tuple = ("td",)
    trials: int = 200
    seed: int = 20260814
    annotations: tuple = ()

    def __post_init__(self):
        if not self.name or any(c.isspace() for c in self.name):
            raise ValueError("name must be a nonempty token without whitespace")
        for label in ("n_rx", "n_tx", "n_taps", "frame_len", "fft_size",
                      "phase_bits", "n_streams", "trials"):
            if int(getattr(self, label)) < 1:
                raise ValueError(f"{label} must be positive")
        if self.frame_len <= self.n_taps:
            raise ValueError("frame_len must exceed n_taps (zero-padding length)")
        if self.fft_size < self.frame_len:
            raise ValueError("fft_size must be at least frame_len")
        if self.angle_mode not in ANGLE_MODES:
            raise ValueError(f"angle_mode must be one of {ANGLE_MODES}")
        for label in ("snr_db", "m_frames", "n_rf", "n_paths", "p_subcarriers",
                      "grids", "estimators"):
            if not getattr(self, label):
                raise ValueError(f"{label} must list at least one value")
        for label in ("m_frames", "n_rf", "n_paths", "p_subcarriers"):
            if any(int(v) < 1 for v in getattr(self, label)):
                raise ValueError(f"all {label} values must be positive")
        if any(p > self.fft_size for p in self.p_subcarriers):
            raise ValueError("p_subcarriers cannot exceed fft_size")
        for est in self.estimators:
            if est not in ESTIMATOR_NAMES:
                raise ValueError(f"unknown estimator '{est}' (choose from {ESTIMATOR_NAMES})")
        if len(set(self.estimators)) != len(self.estimators):
            raise ValueError("estimators must be unique")
        for grid in self.grids:
            if len(grid) not in (3, 5) or any(int(v) < 1 for v in grid):
                raise ValueError("each grids entry needs 3 or 5 positive sizes")


@dataclass(frozen=True)
class SweepPoint:
    index: int
    snr_db: float
    m_frames: int
    n_rf: int
    n_paths: int
    p_subcarriers: int
    n_rx: int
    n_tx: int
    g_rx: int
    g_tx: int
    g_delay: int


@dataclass(frozen=True)
class BenchResult:
    spec: ExperimentSpec
    points: tuple
    trials: tuple
    aggregates: tuple
    wall_time_s: float
    threads: int


# --- config text ------------------------------------------------------------

_SCALAR_INT = ("n_rx", "n_tx", "n_taps", "frame_len", "fft_size", "phase_bits",
               "n_streams", "trials", "seed")
_SCALAR_FLOAT = ("rolloff", "symbol_period")
_SCALAR_STR = ("name", "angle_mode")
_LIST_INT = ("m_frames", "n_rf", "n_paths", "p_subcarriers")
_LIST_FLOAT = ("snr_db",)


def _split_list(value: str):
    return [tok.strip() for tok in value.split(",") if tok.strip()]


def parse_config_text(text: str) -> ExperimentSpec:
    """Parse a flat ``key = value`` config into an :class:`ExperimentSpec`.

    ``#`` starts a comment; list values are comma-separated; grid entries
    are ``x``-joined sizes (``32x64x8`` or ``16x16x32x32x8``); the
    ``annotation`` key may repeat.  Unknown or duplicate keys are errors.
    """
    values: dict = {}
    annotations: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        val = val.strip()
        if key == "annotation":
            annotations.append(val)
            continue
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate key '{key}'")
        try:
            if key in _SCALAR_INT:
                values[key] = int(val)
            elif key in _SCALAR_FLOAT:
                values[key] = float(val)
            elif key in _SCALAR_STR:
                values[key] = val
            elif key in _LIST_INT:
                values[key] = tuple(int(tok) for tok in _split_list(val))
            elif key in _LIST_FLOAT:
                values[key] = tuple(float(tok) for tok in _split_list(val))
            elif key == "estimators":
                values[key] = tuple(tok.lower() for tok in _split_list(val))
            elif key == "grids":
                values[key] = tuple(
                    tuple(int(p) for p in tok.lower().split("x"))
                    for tok in _split_list(val)
                )
            else:
                raise ValueError(f"config line {lineno}: unknown key '{key}'")
        except ValueError as exc:
            if "config line" in str(exc):
                raise
            raise ValueError(f"config line {lineno}: bad value for '{key}': {val!r}") from exc
    if annotations:
        values["annotations"] = tuple(annotations)
    return ExperimentSpec(**values)


def spec_to_text(spec: ExperimentSpec) -> str:
    """Serialize a spec back to canonical config text (inverse of parsing)."""
    lines = [f"name = {spec.name}"]
    for key in _SCALAR_INT:
        if key != "seed":
            lines.append(f"{key} = {getattr(spec, key)}")
    for key in _SCALAR_FLOAT:
        lines.append(f"{key} = {format(getattr(spec, key), '.12g')}")
    lines.append(f"angle_mode = {spec.angle_mode}")
    lines.append("snr_db = " + ", ".join(format(v, ".12g") for v in spec.snr_db))
    for key in _LIST_INT:
        lines.append(f"{key} = " + ", ".join(str(v) for v in getattr(spec, key)))
    lines.append("grids = " + ", ".join("x".join(str(p) for p in g) for g in spec.grids))
    lines.append("estimators = " + ", ".join(spec.estimators))
    lines.append(f"seed = {spec.seed}")
    for note in spec.annotations:
        lines.append(f"annotation = {note}")
    return "\n".join(lines) + "\n"


# --- sweep expansion and trial execution -------------------------------------

def sweep_points(spec: ExperimentSpec):
    """Cartesian sweep in canonical axis order (snr, frames, rf, paths,
    subcarriers, grids)."""
    points = []
    index = 0
    for snr in spec.snr_db:
        for m in spec.m_frames:
            for n_rf in spec.n_rf:
                for n_p in spec.n_paths:
                    for p_sub in spec.p_subcarriers:
                        for grid in spec.grids:
                            if len(grid) == 5:
                                n_rx, n_tx, g_rx, g_tx, g_delay = grid
                            else:
                                n_rx, n_tx = spec.n_rx, spec.n_tx
                                g_rx, g_tx, g_delay = grid
                            points.append(SweepPoint(
                                index=index, snr_db=float(snr), m_frames=int(m),
                                n_rf=int(n_rf), n_paths=int(n_p),
                                p_subcarriers=int(p_sub), n_rx=int(n_rx),
                                n_tx=int(n_tx), g_rx=int(g_rx), g_tx=int(g_tx),
                                g_delay=int(g_delay)))
                            index += 1
    return tuple(points)


def _run_trial(spec: ExperimentSpec, point: SweepPoint, trial: int):
    """All estimator rows for one (point, trial) cell.

    Draws use common random numbers: each one is keyed only by the point
    parameters that can change it, so sweep points differing along other axes
    (SNR, training length, RF chains, pilot subcarriers, grids) share the same
    channel, training and antenna-noise realizations trial for trial, and every
    trend comparison is paired.  Estimators within a cell always share draws.
    """
    seed_label = int(np.random.SeedSequence(
        (spec.seed, point.index, trial)).generate_state(1, np.uint64)[0])
    path_seed = np.random.SeedSequence((spec.seed, 1, trial, point.n_paths))
    train_seed = np.random.SeedSequence(
        (spec.seed, 2, trial, point.n_rx, point.n_tx, point.m_frames, point.n_rf))
    noise_seed = np.random.SeedSequence(
        (spec.seed, 3, trial, point.n_rx, point.m_frames))
    cfg = SystemConfig(n_rx=point.n_rx, n_tx=point.n_tx, n_taps=spec.n_taps,
                       n_paths=point.n_paths, frame_len=spec.frame_len,
                       fft_size=spec.fft_size, symbol_period=spec.symbol_period,
                       rolloff=spec.rolloff)
    geometry = ula_geometry(cfg)
    grids = build_grids(geometry, point.g_rx, point.g_tx)
    delay_grid = build_delay_grid(cfg, point.g_delay)
    paths = draw_paths(cfg, path_seed)
    if spec.angle_mode == "on-grid":
        paths = snap_paths_to_grids(paths, grids, delay_grid)[0]
    ch = taps_from_paths(paths, cfg, geometry)
    true_freq = freq_response_from_taps(ch, cfg.fft_size)
    tcfg = TrainingConfig.from_snr_db(point.m_frames, point.n_rf, point.snr_db,
                                      phase_bits=spec.phase_bits)
    realization = draw_training(cfg, tcfg, train_seed)
    wanted = set(spec.estimators)
    parts = []
    if wanted & {"td", "tf"}:
        parts.append("td")
    if wanted & {"fd", "tf"}:
        parts.append("fd")
    mset = simulate_rx(ch, realization, noise_seed, parts=tuple(parts))
    tdict = TimeDictionary(grids, delay_grid) if wanted & {"td", "tf"} else None
    fdict = FreqDictionary(grids) if wanted & {"fd", "tf"} else None
    snr_linear = 10.0 ** (point.snr_db / 10.0)
    rows = []
    for name in spec.estimators:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if name == "td":
                est = estimate_td(mset, tdict)
            elif name == "fd":
                est = estimate_fd(mset, fdict)
            else:
                est = estimate_tf(mset, tdict, fdict, point.p_subcarriers)
        err = nmse(ch, est)
        freq_hat = est.freq_hat
        if freq_hat is None:
            freq_hat = freq_response_from_taps(est.taps_hat, cfg.fft_size)
        rate = spectral_efficiency(true_freq, freq_hat, snr_linear, spec.n_streams)
        rows.append(TrialResult(
            estimator=name, snr_db=point.snr_db, m_frames=point.m_frames,
            n_rf=point.n_rf, n_paths=point.n_paths,
            p_subcarriers=point.p_subcarriers, g_rx=point.g_rx, g_tx=point.g_tx,
            g_delay=point.g_delay, trial=trial, seed=seed_label, nmse=err,
            rate_bps_hz=rate, flags=est.flags))
    return rows


def _trial_task(packed):
    spec, point, trial = packed
    return _run_trial(spec, point, trial)


def _aggregate(results):
    """Per-(point, estimator) mean rows, in first-appearance (canonical) order."""
    groups: dict = {}
    order: list = []
    for row in results:
        key = (row.snr_db, row.m_frames, row.n_rf, row.n_paths, row.p_subcarriers,
               row.g_rx, row.g_tx, row.g_delay, row.estimator)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    aggregates = []
    for key in order:
        rows = groups[key]
        mean_nmse = float(np.mean([r.nmse for r in rows]))
        mean_rate = float(np.mean([r.rate_bps_hz for r in rows]))
        aggregates.append({
            "estimator": key[8], "snr_db": key[0], "m_frames": key[1],
            "n_rf": key[2], "n_p": key[3], "p_subcarriers": key[4],
            "g_r": key[5], "g_t": key[6], "g_c": key[7], "trial": -1,
            "seed": None, "nmse": mean_nmse,
            "nmse_db": float(10.0 * np.log10(mean_nmse)) if mean_nmse > 0 else float("-inf"),
            "rate_bps_hz": mean_rate, "flags": "aggregate",
        })
    return tuple(aggregates)


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> BenchResult:
    """Run every (sweep point, trial) cell and aggregate.

    ``threads`` > 1 distributes cells over worker processes; the output is
    identical to the sequential run because each cell is independently
    seeded and rows are assembled in canonical order.
    """
    if threads < 1:
        raise ValueError("threads must be positive")
    points = sweep_points(spec)
    tasks = [(spec, point, trial) for point in points for trial in range(spec.trials)]
    start = time.perf_counter()
    results: list = []
    if threads == 1:
        for task in tasks:
            results.extend(_trial_task(task))
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for rows in pool.map(_trial_task, tasks, chunksize=4):
                results.extend(rows)
    wall = time.perf_counter() - start
    return BenchResult(spec=spec, points=points, trials=tuple(results),
                       aggregates=_aggregate(results), wall_time_s=wall,
                       threads=threads)


# --- serialization ------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _trial_record(row: TrialResult) -> dict:
    return {
        "estimator": row.estimator, "snr_db": row.snr_db, "m_frames": row.m_frames,
        "n_rf": row.n_rf, "n_p": row.n_paths, "p_subcarriers": row.p_subcarriers,
        "g_r": row.g_rx, "g_t": row.g_tx, "g_c": row.g_delay, "trial": row.trial,
        "seed": row.seed, "nmse": row.nmse, "nmse_db": row.nmse_db,
        "rate_bps_hz": row.rate_bps_hz, "flags": ";".join(row.flags),
    }


def _csv_cells(record: dict) -> list:
    cells = []
    for col in CSV_COLUMNS:
        value = record[col]
        cells.append("" if value is None else _fmt(value))
    return cells


def _package_version() -> str:
    try:
        return metadata.version("mmwave-chanest")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_outputs(result: BenchResult, out_dir: str, fmt: str = "csv") -> dict:
    """Write the results table plus a manifest; returns the file paths.

    The results file content is a pure function of the experiment spec (CSV bytes are
    reproducible); the manifest additionally records volatile run facts
    (wall time, version, thread count).
    """
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    os.makedirs(out_dir, exist_ok=True)
    records = [_trial_record(r) for r in result.trials]
    agg_records = list(result.aggregates)
    base = result.spec.name
    if fmt == "csv":
        results_path = os.path.join(out_dir, f"{base}.csv")
        with open(results_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for record in records + agg_records:
                writer.writerow(_csv_cells(record))
    else:
        results_path = os.path.join(out_dir, f"{base}.json")
        payload = {"columns": list(CSV_COLUMNS), "trials": records,
                   "aggregates": agg_records}
        with open(results_path, "w") as fh:
            json.dump(payload, fh, indent=1, allow_nan=True)
            fh.write("\n")
    manifest_path = os.path.join(out_dir, f"{base}.manifest.json")
    manifest = {
        "name": result.spec.name,
        "config": asdict(result.spec),
        "annotations": list(result.spec.annotations),
        "columns": list(CSV_COLUMNS),
        "sweep_points": len(result.points),
        "trial_rows": len(records),
        "aggregate_rows": len(agg_records),
        "results_file": os.path.basename(results_path),
        "format": fmt,
        "version": _package_version(),
        "threads": result.threads,
        "wall_time_s": result.wall_time_s,
    }
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return {"results": results_path, "manifest": manifest_path}
