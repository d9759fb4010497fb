"""Frequency-selective geometric multipath channel synthesis.

A link is described by a small number of propagation paths, each with a
complex gain, a delay inside the delay-spread window, an angle of arrival
at the receive array and an angle of departure from the transmit array.
Band limitation with a raised-cosine pulse turns the continuous delays
into a bank of discrete tap matrices; stacking the vectorized taps gives
the tall vector that the sparse estimators in :mod:`.recovery` work on.
The per-subcarrier frequency response is the DFT of the tap bank across
the delay index.

Every synthesized channel is rescaled so the squared norm of the stacked
tap vector equals ``n_rx * n_tx`` exactly, which keeps error metrics
comparable across realizations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemConfig",
    "PathSet",
    "TapChannel",
    "FreqChannel",
    "raised_cosine",
    "draw_paths",
    "taps_from_paths",
    "freq_response_from_taps",
    "freq_response_from_paths",
]

# Width of the branch guard around the removable singularities of the
# raised-cosine denominator.
_SINGULARITY_TOL = 1e-8


def raised_cosine(t, symbol_period: float = 1.0, rolloff: float = 0.0):
    """Raised-cosine pulse evaluated at time offset(s) ``t``.

    Parameters
    ----------
    t : float or array_like
        Time offset(s) in the same unit as ``symbol_period``.
    symbol_period : float
        Symbol period; must be positive.
    rolloff : float
        Excess-bandwidth factor in [0, 1].

    Returns
    -------
    float or ndarray
        ``sinc(t/T) * cos(pi*b*t/T) / (1 - (2*b*t/T)**2)`` with the
        removable singularities at ``|t| = T/(2*b)`` replaced by their
        analytic limit ``(pi/4) * sinc(1/(2*b))``.  Total function: no
        NaN/inf for any finite input.
    """
    if symbol_period <= 0:
        raise ValueError("symbol_period must be positive")
    if not 0.0 <= rolloff <= 1.0:
        raise ValueError("rolloff must lie in [0, 1]")
    x = np.asarray(t, dtype=float) / symbol_period
    den = 1.0 - (2.0 * rolloff * x) ** 2
    near_pole = np.abs(den) < _SINGULARITY_TOL
    safe_den = np.where(near_pole, 1.0, den)
    value = np.sinc(x) * np.cos(np.pi * rolloff * x) / safe_den
    # L'Hopital at the pole: cos -> 0 and den -> 0 at matched rate.
    value = np.where(near_pole, (np.pi / 4.0) * np.sinc(x), value)
    if np.ndim(t) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class SystemConfig:
    """Static link dimensions shared by every module.

    Attributes
    ----------
    n_rx, n_tx : int
        Receive / transmit antenna counts.
    n_taps : int
        Number of discrete channel taps (delay spread in symbols + 1).
    n_paths : int
        Number of physical propagation paths (0 allowed as a degenerate
        test input).
    frame_len : int
        Pilot symbols per training frame, strictly larger than ``n_taps``.
    fft_size : int
        DFT length for the per-subcarrier representation; at least
        ``n_taps``.
    symbol_period : float
        Symbol period (delays are expressed in this unit; 1 by default).
    rolloff : float
        Raised-cosine excess-bandwidth factor in [0, 1].
    """

    n_rx: int
    n_tx: int
    n_taps: int
    n_paths: int
    frame_len: int
    fft_size: int
    symbol_period: float = 1.0
    rolloff: float = 0.8

    def __post_init__(self):
        for name in ("n_rx", "n_tx", "n_taps", "frame_len", "fft_size"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.n_paths < 0:
            raise ValueError("n_paths must be nonnegative")
        if self.frame_len <= self.n_taps:
            raise ValueError("frame_len must exceed n_taps (zero padding eats n_taps-1 slots)")
        if self.fft_size < self.n_taps:
            raise ValueError("fft_size must be at least n_taps")
        if self.symbol_period <= 0:
            raise ValueError("symbol_period must be positive")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must lie in [0, 1]")

    @property
    def delay_spread(self) -> float:
        """Largest representable path delay, ``(n_taps - 1) * symbol_period``."""
        return (self.n_taps - 1) * self.symbol_period


@dataclass(frozen=True)
class PathSet:
    """Physical paths: complex gains, delays and array angles (radians)."""

    gains: np.ndarray
    delays: np.ndarray
    aoa: np.ndarray
    aod: np.ndarray

    def __post_init__(self):
        for name in ("gains", "delays", "aoa", "aod"):
            arr = np.atleast_1d(np.asarray(getattr(self, name)))
            object.__setattr__(self, name, arr)
        n = self.gains.shape[0]
        if not all(a.shape == (n,) for a in (self.delays, self.aoa, self.aod)):
            raise ValueError("gains, delays, aoa and aod must share one length")
        for name in ("gains", "delays", "aoa", "aod"):
            if n and not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")
        if n and np.any(self.delays < 0):
            raise ValueError("delays must be nonnegative")

    @property
    def n_paths(self) -> int:
        return self.gains.shape[0]


@dataclass(frozen=True)
class TapChannel:
    """Bank of tap matrices, shape ``(n_taps, n_rx, n_tx)``."""

    taps: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.taps, dtype=complex)
        if arr.ndim != 3:
            raise ValueError("taps must have shape (n_taps, n_rx, n_tx)")
        object.__setattr__(self, "taps", arr)

    @property
    def n_taps(self) -> int:
        return self.taps.shape[0]

    @property
    def n_rx(self) -> int:
        return self.taps.shape[1]

    @property
    def n_tx(self) -> int:
        return self.taps.shape[2]

    @property
    def h_c(self) -> np.ndarray:
        """Stacked column-major vectorizations of the taps (tap-major)."""
        return self.taps.transpose(0, 2, 1).reshape(-1)


@dataclass(frozen=True)
class FreqChannel:
    """Per-subcarrier channel matrices, shape ``(fft_size, n_rx, n_tx)``."""

    response: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.response, dtype=complex)
        if arr.ndim != 3:
            raise ValueError("response must have shape (fft_size, n_rx, n_tx)")
        object.__setattr__(self, "response", arr)

    @property
    def n_subcarriers(self) -> int:
        return self.response.shape[0]


def draw_paths(cfg: SystemConfig, rng_seed) -> PathSet:
    """Draw a random :class:`PathSet` for ``cfg``.

    Delays are uniform on ``[0, delay_spread]``, both angles uniform on
    ``[0, pi]`` and gains i.i.d. circularly symmetric complex Gaussian
    with unit variance.  Deterministic given the seed (an int or a
    ``numpy.random.Generator``).
    """
    rng = np.random.default_rng(rng_seed)
    n = cfg.n_paths
    delays = rng.uniform(0.0, cfg.delay_spread, size=n)
    aoa = rng.uniform(0.0, np.pi, size=n)
    aod = rng.uniform(0.0, np.pi, size=n)
    gains = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    return PathSet(gains, delays, aoa, aod)


def _check_delays(paths: PathSet, cfg: SystemConfig) -> None:
    if paths.n_paths and np.any(paths.delays > cfg.delay_spread * (1 + 1e-12)):
        raise ValueError("path delays exceed the representable delay spread")


def _pulse_profile(paths: PathSet, cfg: SystemConfig) -> np.ndarray:
    """Raised-cosine samples at every (tap lag, path delay) pair, shape
    ``(n_taps, n_paths)``."""
    lags = (
        cfg.symbol_period * np.arange(cfg.n_taps)[:, None]
        - paths.delays[None, :]
    )
    return raised_cosine(lags, cfg.symbol_period, cfg.rolloff)


def _raw_taps(paths: PathSet, cfg: SystemConfig, steering):
    """Unnormalized taps plus the normalization scale shared by the tap-
    and frequency-domain synthesis routes."""
    a_rx = steering.rx_matrix(paths.aoa)
    a_tx = steering.tx_matrix(paths.aod)
    weights = _pulse_profile(paths, cfg) * paths.gains[None, :]
    taps = np.einsum("rl,dl,tl->drt", a_rx, weights, a_tx.conj())
    norm = np.linalg.norm(taps)
    if norm == 0.0:
        warnings.warn("degenerate path set produced a zero channel; skipping normalization")
        scale = 1.0
    else:
        scale = np.sqrt(cfg.n_rx * cfg.n_tx) / norm
    return taps, scale, a_rx, a_tx


def taps_from_paths(paths: PathSet, cfg: SystemConfig, steering) -> TapChannel:
    """Synthesize the tap bank for ``paths``.

    Tap ``d`` sums ``gain * pulse(d*T - delay)`` rank-one outer products of
    the steering vectors, then the whole bank is rescaled so
    ``norm(h_c)**2 == n_rx * n_tx`` exactly.
    """
    _check_delays(paths, cfg)
    if paths.n_paths == 0:
        warnings.warn("empty path set: returning an all-zero channel")
        return TapChannel(np.zeros((cfg.n_taps, cfg.n_rx, cfg.n_tx), dtype=complex))
    taps, scale, _, _ = _raw_taps(paths, cfg, steering)
    return TapChannel(scale * taps)


def freq_response_from_taps(ch: TapChannel, fft_size: int) -> FreqChannel:
    """DFT of the tap bank across the delay index, entrywise over matrices."""
    if fft_size < ch.n_taps:
        raise ValueError("fft_size below the tap count would alias the delay profile")
    return FreqChannel(np.fft.fft(ch.taps, n=fft_size, axis=0))


def freq_response_from_paths(paths: PathSet, cfg: SystemConfig, steering) -> FreqChannel:
    """Per-subcarrier response straight from the paths.

    Evaluates, for every subcarrier, the sum over paths of
    ``gain * beta[k, path] * a_rx a_tx^*`` where ``beta`` is the DFT of each
    path's sampled pulse profile — an independent route to the same matrices
    as ``freq_response_from_taps(taps_from_paths(...))``, including the same
    normalization constant.
    """
    _check_delays(paths, cfg)
    if paths.n_paths == 0:
        warnings.warn("empty path set: returning an all-zero channel")
        return FreqChannel(np.zeros((cfg.fft_size, cfg.n_rx, cfg.n_tx), dtype=complex))
    _, scale, a_rx, a_tx = _raw_taps(paths, cfg, steering)
    beta = np.fft.fft(_pulse_profile(paths, cfg), n=cfg.fft_size, axis=0)
    coeff = scale * paths.gains[None, :] * beta
    response = np.einsum("rl,kl,tl->krt", a_rx, coeff, a_tx.conj())
    return FreqChannel(response)
