"""Sparse channel estimation for wideband hybrid-array mmWave links.

The package simulates frame-based training over a frequency-selective
geometric channel observed through quantized-phase analog precoders and
combiners, and recovers the channel with greedy sparse estimators working
in the time domain, per subcarrier in the frequency domain, or in a
combined time-frequency scheme.  A benchmark engine sweeps system
parameters over seeded Monte-Carlo trials and writes CSV/JSON tables.
"""

from .channel import (
    FreqChannel,
    PathSet,
    SystemConfig,
    TapChannel,
    draw_paths,
    freq_response_from_paths,
    freq_response_from_taps,
    raised_cosine,
    taps_from_paths,
)
from .dictionaries import (
    AngleGrids,
    DelayGrid,
    FreqDictionary,
    SteeringGeometry,
    TimeDictionary,
    build_delay_grid,
    build_grids,
    snap_paths_to_grids,
    ula_geometry,
)
from .training import (
    CovarianceModel,
    MeasurementSet,
    TrainingConfig,
    TrainingRealization,
    draw_training,
    simulate_fd_rx,
    simulate_rx,
    simulate_td_rx,
)
from .recovery import (
    ChannelEstimate,
    OmpSettings,
    SupportSet,
    estimate_fd,
    estimate_td,
    estimate_tf,
    ls_refit,
    omp,
)
from .metrics import TrialResult, nmse, spectral_efficiency
from .bench import (
    CSV_COLUMNS,
    BenchResult,
    ExperimentSpec,
    parse_config_text,
    run_experiment,
    sweep_points,
    write_outputs,
)
from .presets import PRESETS, load_preset, preset_names, preset_text

try:
    from importlib.metadata import version as _version

    __version__ = _version("mmwave-chanest")
except Exception:  # pragma: no cover - not installed
    __version__ = "0.0.0"

__all__ = [
    "AngleGrids",
    "BenchResult",
    "CSV_COLUMNS",
    "ChannelEstimate",
    "CovarianceModel",
    "DelayGrid",
    "ExperimentSpec",
    "FreqChannel",
    "FreqDictionary",
    "MeasurementSet",
    "OmpSettings",
    "PRESETS",
    "PathSet",
    "SteeringGeometry",
    "SupportSet",
    "SystemConfig",
    "TapChannel",
    "TimeDictionary",
    "TrainingConfig",
    "TrainingRealization",
    "TrialResult",
    "build_delay_grid",
    "build_grids",
    "draw_paths",
    "draw_training",
    "estimate_fd",
    "estimate_td",
    "estimate_tf",
    "freq_response_from_paths",
    "freq_response_from_taps",
    "load_preset",
    "ls_refit",
    "nmse",
    "omp",
    "parse_config_text",
    "preset_names",
    "preset_text",
    "raised_cosine",
    "run_experiment",
    "simulate_fd_rx",
    "simulate_rx",
    "simulate_td_rx",
    "snap_paths_to_grids",
    "spectral_efficiency",
    "sweep_points",
    "taps_from_paths",
    "ula_geometry",
    "write_outputs",
]
