"""Training generation, link simulation and structured measurement operators.

Each training frame m applies a fresh random analog precoder/combiner pair
(quantized phases, constant modulus) and sends ``frame_len`` pseudorandom
QPSK pilot vectors preceded by ``n_taps - 1`` zero symbols.  The zero
padding isolates frames, so the received stream decomposes into independent
per-frame blocks of ``frame_len + n_taps - 1`` combined samples.

Two measurement views are produced from one simulated receive window:

* time domain — the first ``frame_len`` combined samples of every frame,
  stacked into one tall vector;
* frequency domain — the full window folded modulo ``fft_size``
  (overlap-and-add) and DFT'd, giving per-subcarrier measurement vectors.

The matching linear operators (`TimeDomainOperator`, `FreqDomainOperator`)
apply the exact same maps to a channel vector without ever materializing
the underlying block-Toeplitz/Kronecker matrices.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .channel import FreqChannel, SystemConfig, TapChannel

__all__ = [
    "TrainingConfig",
    "TrainingRealization",
    "CovarianceModel",
    "MeasurementSet",
    "TimeDomainOperator",
    "FreqDomainOperator",
    "draw_training",
    "simulate_rx",
    "simulate_td_rx",
    "simulate_fd_rx",
]

_DENSE_ENTRY_GATE = 1 << 22


@dataclass(frozen=True)
class TrainingConfig:
    """Training-stage knobs.

    ``snr`` is the linear post-combining signal-to-noise ratio with unit
    signal power, so the time-domain noise variance is ``1 / snr``
    (``numpy.inf`` gives a noiseless link).
    """

    num_frames: int
    n_rf: int
    phase_bits: int = 2
    snr: float = np.inf
    pilot_scheme: str = "qpsk-pseudorandom"
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_frames < 1:
            raise ValueError("num_frames must be positive")
        if self.n_rf < 1:
            raise ValueError("n_rf must be positive")
        if self.phase_bits < 1:
            raise ValueError("phase_bits must be positive")
        if not self.snr > 0:
            raise ValueError("snr must be positive (use numpy.inf for noiseless)")
        if self.pilot_scheme != "qpsk-pseudorandom":
            raise ValueError(f"unknown pilot scheme: {self.pilot_scheme!r}")

    @property
    def noise_var(self) -> float:
        return 0.0 if np.isinf(self.snr) else 1.0 / self.snr

    @classmethod
    def from_snr_db(cls, num_frames: int, n_rf: int, snr_db: float | None, **kwargs) -> "TrainingConfig":
        snr = np.inf if snr_db is None else 10.0 ** (snr_db / 10.0)
        return cls(num_frames=num_frames, n_rf=n_rf, snr=snr, **kwargs)


@dataclass(frozen=True)
class TrainingRealization:
    """One drawn set of per-frame precoders, combiners and pilots."""

    cfg: SystemConfig
    tcfg: TrainingConfig
    precoders: np.ndarray  # (M, n_tx, n_rf), entries exp(j*phase)/sqrt(n_tx)
    combiners: np.ndarray  # (M, n_rx, n_rf), entries exp(j*phase)/sqrt(n_rx)
    pilots: np.ndarray     # (M, frame_len, n_rf), QPSK / sqrt(n_rf)

    @property
    def num_frames(self) -> int:
        return self.precoders.shape[0]

    @property
    def window_len(self) -> int:
        """Captured samples per frame: frame plus the convolution tail."""
        return self.cfg.frame_len + self.cfg.n_taps - 1

    @cached_property
    def precoded(self) -> np.ndarray:
        """Antenna-domain pilot symbols ``F_m s_m[n]``, shape (M, frame_len, n_tx)."""
        return np.einsum("mts,mns->mnt", self.precoders, self.pilots)

    @cached_property
    def shifted(self) -> np.ndarray:
        """Per-tap delayed copies of the precoded pilots over the full window.

        ``shifted[m, w, d, :]`` is ``F_m s_m[w - d]`` (zero outside the
        frame), shape (M, window_len, n_taps, n_tx).  The first
        ``frame_len`` window slots of this tensor drive the time-domain
        measurement operator; the whole thing drives the simulation.
        """
        cfg = self.cfg
        out = np.zeros(
            (self.num_frames, self.window_len, cfg.n_taps, cfg.n_tx), dtype=complex
        )
        for d in range(cfg.n_taps):
            out[:, d : d + cfg.frame_len, d, :] = self.precoded
        return out

    @cached_property
    def pilot_freq(self) -> np.ndarray:
        """Pilot DFT across the frame, shape (M, fft_size, n_rf)."""
        return np.fft.fft(self.pilots, n=self.cfg.fft_size, axis=1)

    @cached_property
    def precoded_freq(self) -> np.ndarray:
        """``F_m`` applied to the pilot DFT, shape (M, fft_size, n_tx)."""
        return np.fft.fft(self.precoded, n=self.cfg.fft_size, axis=1)

    def td_operator(self, combiners: np.ndarray | None = None) -> "TimeDomainOperator":
        return TimeDomainOperator(
            shifted=self.shifted[:, : self.cfg.frame_len],
            combiners=self.combiners if combiners is None else combiners,
            n_taps=self.cfg.n_taps,
            n_tx=self.cfg.n_tx,
            n_rx=self.cfg.n_rx,
        )

    def fd_operator(self, combiners: np.ndarray | None = None) -> "FreqDomainOperator":
        return FreqDomainOperator(
            precoded_freq=self.precoded_freq,
            combiners=self.combiners if combiners is None else combiners,
            n_rx=self.cfg.n_rx,
            n_tx=self.cfg.n_tx,
        )


def draw_training(cfg: SystemConfig, tcfg: TrainingConfig, rng_seed=None) -> TrainingRealization:
    """Draw precoders, combiners and pilots (deterministic per seed).

    Phases come uniformly from the ``2**phase_bits``-point set
    ``{0, 2*pi/Q, ...}``; pilots are unit-modulus QPSK scaled by
    ``1/sqrt(n_rf)`` so each pilot vector carries unit average transmit
    power through the constant-modulus precoder.
    """
    seed = tcfg.rng_seed if rng_seed is None else rng_seed
    rng = np.random.default_rng(seed)
    m, n = tcfg.num_frames, cfg.frame_len
    levels = 2 ** tcfg.phase_bits
    phase_set = 2.0 * np.pi * np.arange(levels) / levels

    precoders = np.exp(1j * phase_set[rng.integers(0, levels, size=(m, cfg.n_tx, tcfg.n_rf))])
    precoders /= np.sqrt(cfg.n_tx)
    combiners = np.exp(1j * phase_set[rng.integers(0, levels, size=(m, cfg.n_rx, tcfg.n_rf))])
    combiners /= np.sqrt(cfg.n_rx)
    qpsk = np.exp(1j * (np.pi / 4.0 + (np.pi / 2.0) * rng.integers(0, 4, size=(m, n, tcfg.n_rf))))
    pilots = qpsk / np.sqrt(tcfg.n_rf)
    return TrainingRealization(cfg=cfg, tcfg=tcfg, precoders=precoders,
                               combiners=combiners, pilots=pilots)


@dataclass(frozen=True)
class CovarianceModel:
    """Block-diagonal noise covariance description.

    The covariance of each frame block is ``scale * I_samples kron block_m``
    with ``block_m = W_m^H W_m``; ``scale`` already contains the noise
    variance (and, for the frequency-domain view, the fold/DFT energy
    factor).
    """

    blocks: np.ndarray  # (M, n_rf, n_rf), Hermitian PSD
    scale: float
    samples_per_frame: int

    @property
    def total_power(self) -> float:
        """Expected noise energy of the full stacked measurement."""
        traces = np.einsum("maa->m", self.blocks).real
        return float(self.scale * self.samples_per_frame * traces.sum())


@dataclass(frozen=True)
class MeasurementSet:
    """Simulated measurements plus their noise bookkeeping."""

    realization: TrainingRealization
    y_td: np.ndarray | None = None            # (M * frame_len * n_rf,)
    y_fd: np.ndarray | None = None            # (fft_size, M * n_rf)
    cov_td: CovarianceModel | None = None
    cov_fd: CovarianceModel | None = None

    @property
    def noise_power_td(self) -> float:
        """Stopping threshold for the raw time-domain stack, E[e^H e]."""
        return self.cov_td.total_power if self.cov_td is not None else 0.0

    @property
    def noise_power_fd(self) -> float:
        """Per-subcarrier E[e^H e] (identical across subcarriers)."""
        return self.cov_fd.total_power if self.cov_fd is not None else 0.0


class TimeDomainOperator:
    """Matrix-free stacked time-domain measurement map.

    Maps a channel vector laid out like ``TapChannel.h_c`` to the stacked
    combined samples (frame-major, then sample, then RF chain).  Per frame
    the map is the Kronecker product of the block-Toeplitz pilot matrix
    (applied as a tap-wise FIR across the frame) with the conjugated
    combiner; neither factor is ever densified outside :meth:`dense`.
    """

    def __init__(self, shifted, combiners, n_taps, n_tx, n_rx):
        self.shifted = shifted        # (M, frame_len, n_taps, n_tx)
        self.combiners = combiners    # (M, n_rx, n_rf)
        self.n_taps = n_taps
        self.n_tx = n_tx
        self.n_rx = n_rx

    @property
    def shape(self):
        m, n, _, _ = self.shifted.shape
        n_rf = self.combiners.shape[2]
        return (m * n * n_rf, self.n_taps * self.n_rx * self.n_tx)

    def apply(self, v: np.ndarray) -> np.ndarray:
        vt = np.asarray(v).reshape(self.n_taps, self.n_tx, self.n_rx)
        antenna = np.tensordot(self.shifted, vt, axes=([2, 3], [0, 1]))  # (M, N, n_rx)
        combined = np.matmul(antenna, self.combiners.conj())             # (M, N, n_rf)
        return combined.reshape(-1)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        m, n, _, _ = self.shifted.shape
        y3 = np.asarray(y).reshape(m, n, -1)
        antenna = np.matmul(y3, self.combiners.transpose(0, 2, 1))       # (M, N, n_rx)
        z = np.tensordot(self.shifted.conj(), antenna, axes=([0, 1], [0, 1]))
        return z.reshape(-1)  # (n_taps, n_tx, n_rx) raveled = h_c layout

    def tap_block_matrix(self, pair_block: np.ndarray) -> np.ndarray:
        """Dense operator image of ``I_taps kron pair_block``.

        ``pair_block`` holds angle-pair columns (length ``n_rx * n_tx``);
        the result has one column per (tap d, pair s), tap-major, matching
        the per-tap gain refit model.
        """
        s = pair_block.shape[1]
        u3 = pair_block.reshape(self.n_tx, self.n_rx, s)
        t4 = np.einsum("mra,trs->mats", self.combiners.conj(), u3)
        omega = np.einsum("mats,mndt->mnads", t4, self.shifted)
        rows = self.shape[0]
        return omega.reshape(rows, self.n_taps * s)

    def delay_block_matrix(self, pair_block: np.ndarray, profiles: np.ndarray) -> np.ndarray:
        """Dense operator image of the pair columns combined with every
        delay-grid pulse profile; one column per (pair s, grid g), pair-major."""
        s = pair_block.shape[1]
        u3 = pair_block.reshape(self.n_tx, self.n_rx, s)
        t4 = np.einsum("mra,trs->mats", self.combiners.conj(), u3)
        pulsed = np.einsum("dg,mndt->mngt", profiles, self.shifted)
        omega = np.einsum("mats,mngt->mnasg", t4, pulsed)
        rows = self.shape[0]
        return omega.reshape(rows, s * profiles.shape[1])

    def dense(self, max_entries: int = _DENSE_ENTRY_GATE) -> np.ndarray:
        rows, cols = self.shape
        if rows * cols > max_entries:
            raise ValueError("dense operator materialization gated to small sizes")
        m, n, _, _ = self.shifted.shape
        blocks = []
        for i in range(m):
            pilot_block = self.shifted[i].reshape(n, self.n_taps * self.n_tx)
            blocks.append(np.kron(pilot_block, self.combiners[i].conj().T))
        return np.vstack(blocks)


class FreqDomainOperator:
    """Per-subcarrier measurement map (one small operator per subcarrier)."""

    def __init__(self, precoded_freq, combiners, n_rx, n_tx):
        self.precoded_freq = precoded_freq  # (M, fft_size, n_tx)
        self.combiners = combiners          # (M, n_rx, n_rf)
        self.n_rx = n_rx
        self.n_tx = n_tx

    @property
    def n_subcarriers(self) -> int:
        return self.precoded_freq.shape[1]

    @property
    def shape(self):
        m = self.combiners.shape[0]
        n_rf = self.combiners.shape[2]
        return (m * n_rf, self.n_rx * self.n_tx)

    def apply(self, k: int, v: np.ndarray) -> np.ndarray:
        vmat = np.asarray(v).reshape(self.n_tx, self.n_rx)
        antenna = np.einsum("mt,tr->mr", self.precoded_freq[:, k, :], vmat)
        return np.einsum("mra,mr->ma", self.combiners.conj(), antenna).reshape(-1)

    def adjoint(self, k: int, y: np.ndarray) -> np.ndarray:
        m = self.combiners.shape[0]
        y2 = np.asarray(y).reshape(m, -1)
        antenna = np.einsum("mra,ma->mr", self.combiners, y2)
        z = np.einsum("mt,mr->tr", self.precoded_freq[:, k, :].conj(), antenna)
        return z.reshape(-1)

    def pair_block_matrix(self, k: int, pair_block: np.ndarray) -> np.ndarray:
        """Dense image of selected angle-pair columns at subcarrier ``k``."""
        s = pair_block.shape[1]
        u3 = pair_block.reshape(self.n_tx, self.n_rx, s)
        antenna = np.einsum("mt,trs->mrs", self.precoded_freq[:, k, :], u3)
        omega = np.einsum("mra,mrs->mas", self.combiners.conj(), antenna)
        return omega.reshape(self.shape[0], s)

    def matrix(self, k: int, max_entries: int = _DENSE_ENTRY_GATE) -> np.ndarray:
        rows, cols = self.shape
        if rows * cols > max_entries:
            raise ValueError("dense operator materialization gated to small sizes")
        full = np.einsum("mt,mra->matr", self.precoded_freq[:, k, :], self.combiners.conj())
        return full.reshape(rows, cols)


def _fold_window(samples: np.ndarray, fft_size: int) -> np.ndarray:
    """Overlap-and-add: alias the window axis (axis 1) modulo ``fft_size``."""
    m, window, width = samples.shape
    folded = np.zeros((m, fft_size, width), dtype=complex)
    for start in range(0, window, fft_size):
        chunk = samples[:, start : start + fft_size]
        folded[:, : chunk.shape[1]] += chunk
    return folded


def _as_taps(ch, cfg: SystemConfig) -> TapChannel:
    if isinstance(ch, TapChannel):
        return ch
    if isinstance(ch, FreqChannel):
        taps = np.fft.ifft(ch.response, axis=0)[: cfg.n_taps]
        return TapChannel(taps)
    raise TypeError("channel must be a TapChannel or FreqChannel")


def simulate_rx(ch, tr: TrainingRealization, rng_seed=None, parts=("td", "fd")) -> MeasurementSet:
    """Simulate the receive chain once and expose the requested views.

    One noise window per frame is drawn and shared between the time- and
    frequency-domain views, exactly as a single physical capture would be.
    """
    cfg = tr.cfg
    taps = _as_taps(ch, cfg)
    if taps.taps.shape != (cfg.n_taps, cfg.n_rx, cfg.n_tx):
        raise ValueError("channel dimensions do not match the system config")
    if "fd" in parts and cfg.fft_size < cfg.frame_len:
        raise ValueError("fft_size below frame_len folds pilot symbols onto each other")

    m = tr.num_frames
    window = tr.window_len
    signal = np.tensordot(tr.shifted, taps.taps, axes=([2, 3], [0, 2]))  # (M, window, n_rx)
    sigma2 = tr.tcfg.noise_var
    received = signal
    if sigma2 > 0:
        rng = np.random.default_rng(rng_seed)
        noise = rng.standard_normal((m, window, cfg.n_rx)) + 1j * rng.standard_normal(
            (m, window, cfg.n_rx)
        )
        received = signal + np.sqrt(sigma2 / 2.0) * noise

    blocks = np.einsum("mra,mrb->mab", tr.combiners.conj(), tr.combiners)
    y_td = cov_td = y_fd = cov_fd = None
    if "td" in parts:
        combined = np.matmul(received[:, : cfg.frame_len], tr.combiners.conj())
        y_td = combined.reshape(-1)
        cov_td = CovarianceModel(blocks=blocks, scale=sigma2, samples_per_frame=cfg.frame_len)
    if "fd" in parts:
        combined = np.matmul(received, tr.combiners.conj())  # (M, window, n_rf)
        folded = _fold_window(combined, cfg.fft_size)
        spectrum = np.fft.fft(folded, axis=1)                # (M, fft_size, n_rf)
        y_fd = spectrum.transpose(1, 0, 2).reshape(cfg.fft_size, -1)
        # every captured noise sample lands in the fold exactly once with a
        # unit-modulus DFT coefficient, hence the window-length factor
        cov_fd = CovarianceModel(blocks=blocks, scale=sigma2 * window, samples_per_frame=1)
    return MeasurementSet(realization=tr, y_td=y_td, y_fd=y_fd, cov_td=cov_td, cov_fd=cov_fd)


def simulate_td_rx(ch, tr: TrainingRealization, rng_seed=None) -> MeasurementSet:
    """Time-domain measurement view only (fresh noise)."""
    return simulate_rx(ch, tr, rng_seed=rng_seed, parts=("td",))


def simulate_fd_rx(ch, tr: TrainingRealization, rng_seed=None) -> MeasurementSet:
    """Frequency-domain measurement view only (fresh noise)."""
    return simulate_rx(ch, tr, rng_seed=rng_seed, parts=("fd",))
