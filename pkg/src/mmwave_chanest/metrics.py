"""Estimation-quality metrics and the per-trial result record."""

from __future__ import annotations

from dataclasses import dataclass
from math import inf, log2, log10

import numpy as np

from .channel import FreqChannel

__all__ = ["nmse", "spectral_efficiency", "TrialResult"]

_RANK_TOL = 1e-12


def _as_vector(x) -> np.ndarray:
    if hasattr(x, "h_c"):
        return np.asarray(x.h_c)
    return np.asarray(x, dtype=complex).reshape(-1)


def nmse(true, estimate) -> float:
    """Normalized mean squared error ||h - h_hat||^2 / ||h||^2.

    Accepts anything exposing ``h_c`` (tap channels, estimates) or a raw
    array; shapes must agree and the reference must be nonzero.
    """
    h = _as_vector(true)
    h_hat = _as_vector(estimate)
    if h.shape != h_hat.shape:
        raise ValueError(f"shape mismatch: {h.shape} vs {h_hat.shape}")
    denom = float(np.vdot(h, h).real)
    if denom == 0.0:
        raise ValueError("reference channel is identically zero")
    diff = h - h_hat
    return float(np.vdot(diff, diff).real / denom)


def spectral_efficiency(true: FreqChannel, estimate: FreqChannel, snr: float,
                        n_streams: int = 1) -> float:
    """Achievable rate (bits/s/Hz) of SVD precoding designed on the estimate.

    Per subcarrier, the top ``n_streams`` left/right singular vectors of the
    *estimated* response form the combiner and precoder; the rate is then
    evaluated on the *true* response with equal power per stream, and
    averaged over subcarriers.  A rank-deficient estimate contributes only
    its usable directions; an all-zero estimate contributes zero rate.
    """
    if n_streams < 1:
        raise ValueError("n_streams must be positive")
    if true.response.shape != estimate.response.shape:
        raise ValueError("channel responses have mismatched shapes")
    if snr < 0:
        raise ValueError("snr must be nonnegative (linear scale)")
    n_sub = true.n_subcarriers
    total = 0.0
    for k in range(n_sub):
        u, s, vh = np.linalg.svd(estimate.response[k])
        keep = 0
        if s.size and s[0] > 0.0:
            keep = min(n_streams, int(np.count_nonzero(s > s[0] * _RANK_TOL)))
        if keep == 0:
            continue
        precoder = vh[:keep].conj().T
        combiner = u[:, :keep]
        h_eff = combiner.conj().T @ true.response[k] @ precoder
        gram = combiner.conj().T @ combiner
        inner = np.linalg.solve(gram, h_eff @ h_eff.conj().T)
        mat = np.eye(keep) + (snr / n_streams) * inner
        sign, logdet = np.linalg.slogdet(mat)
        total += logdet / np.log(2.0)
    return float(total / n_sub)


@dataclass(frozen=True)
class TrialResult:
    """One estimator evaluation on one channel/noise realization."""

    estimator: str
    snr_db: float
    m_frames: int
    n_rf: int
    n_paths: int
    p_subcarriers: int
    g_rx: int
    g_tx: int
    g_delay: int
    trial: int
    seed: int
    nmse: float
    rate_bps_hz: float
    flags: tuple = ()

    def __post_init__(self):
        if self.nmse < 0:
            raise ValueError("nmse must be nonnegative")

    @property
    def nmse_db(self) -> float:
        if self.nmse == 0.0:
            return -inf
        return 10.0 * log10(self.nmse)
