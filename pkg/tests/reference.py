"""Independent dense oracles for the test suite.

Everything here is rebuilt from first principles with explicit loops and
plain formulas — no reuse of the library's vectorized synthesis, operator
or solver code — so agreement between the two is meaningful evidence.
"""

from __future__ import annotations

import numpy as np

# ---------------------------------------------------------------------------
# arrays / pulses


def steering_column(n_elements: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA steering vector, unit norm."""
    k = np.arange(n_elements)
    return np.exp(1j * np.pi * k * np.cos(angle)) / np.sqrt(n_elements)


def raised_cosine_scalar(t: float, symbol_period: float, rolloff: float) -> float:
    """Direct textbook quotient; singular points via a two-sided numeric limit."""
    x = t / symbol_period
    den = 1.0 - (2.0 * rolloff * x) ** 2
    if abs(den) > 1e-6:
        return float(np.sinc(x) * np.cos(np.pi * rolloff * x) / den)
    eps = 1e-8
    lo = raised_cosine_scalar(t - eps * symbol_period, symbol_period, rolloff)
    hi = raised_cosine_scalar(t + eps * symbol_period, symbol_period, rolloff)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# channel synthesis


def channel_taps(paths, cfg) -> np.ndarray:
    """Loop-built tap bank with the exact-norm rescaling, (n_taps, n_rx, n_tx)."""
    taps = np.zeros((cfg.n_taps, cfg.n_rx, cfg.n_tx), dtype=complex)
    for l in range(paths.n_paths):
        a_r = steering_column(cfg.n_rx, paths.aoa[l])
        a_t = steering_column(cfg.n_tx, paths.aod[l])
        outer = np.outer(a_r, a_t.conj())
        for d in range(cfg.n_taps):
            pulse = raised_cosine_scalar(
                d * cfg.symbol_period - paths.delays[l], cfg.symbol_period, cfg.rolloff
            )
            taps[d] += paths.gains[l] * pulse * outer
    norm = np.linalg.norm(taps)
    if norm > 0:
        taps *= np.sqrt(cfg.n_rx * cfg.n_tx) / norm
    return taps


def h_c_vector(taps: np.ndarray) -> np.ndarray:
    """Stacked channel vector: index (d * n_tx + t) * n_rx + r <- taps[d, r, t]."""
    n_taps, n_rx, n_tx = taps.shape
    out = np.zeros(n_taps * n_tx * n_rx, dtype=complex)
    for d in range(n_taps):
        for t in range(n_tx):
            for r in range(n_rx):
                out[(d * n_tx + t) * n_rx + r] = taps[d, r, t]
    return out


def freq_response(taps: np.ndarray, fft_size: int) -> np.ndarray:
    """Per-subcarrier response by explicit DFT over the tap index."""
    n_taps = taps.shape[0]
    out = np.zeros((fft_size,) + taps.shape[1:], dtype=complex)
    for k in range(fft_size):
        for d in range(n_taps):
            out[k] += taps[d] * np.exp(-2j * np.pi * k * d / fft_size)
    return out


# ---------------------------------------------------------------------------
# measurement matrices (from the raw precoder/combiner/pilot arrays only)


def precoded_pilots(tr) -> np.ndarray:
    """F_m s_m[n] by explicit per-symbol matrix products, (M, frame_len, n_tx)."""
    cfg = tr.cfg
    m_frames = tr.precoders.shape[0]
    out = np.zeros((m_frames, cfg.frame_len, cfg.n_tx), dtype=complex)
    for m in range(m_frames):
        for n in range(cfg.frame_len):
            out[m, n] = tr.precoders[m] @ tr.pilots[m, n]
    return out


def dense_time_rows(tr) -> np.ndarray:
    """Time-domain sensing matrix; rows (m, n, a), columns (d, t, r)."""
    cfg = tr.cfg
    m_frames = tr.precoders.shape[0]
    n_rf = tr.combiners.shape[2]
    x = precoded_pilots(tr)
    rows = m_frames * cfg.frame_len * n_rf
    cols = cfg.n_taps * cfg.n_tx * cfg.n_rx
    phi = np.zeros((rows, cols), dtype=complex)
    row = 0
    for m in range(m_frames):
        for n in range(cfg.frame_len):
            for a in range(n_rf):
                w = tr.combiners[m, :, a].conj()
                for d in range(cfg.n_taps):
                    if not 0 <= n - d < cfg.frame_len:
                        continue
                    for t in range(cfg.n_tx):
                        base = (d * cfg.n_tx + t) * cfg.n_rx
                        phi[row, base : base + cfg.n_rx] = w * x[m, n - d, t]
                row += 1
    return phi


def pilot_dft(tr, k: int) -> np.ndarray:
    """K-point DFT of the pilot streams at bin k, (M, n_rf)."""
    cfg = tr.cfg
    m_frames = tr.pilots.shape[0]
    out = np.zeros((m_frames, tr.pilots.shape[2]), dtype=complex)
    for m in range(m_frames):
        for n in range(cfg.frame_len):
            out[m] += tr.pilots[m, n] * np.exp(-2j * np.pi * k * n / cfg.fft_size)
    return out


def dense_freq_rows(tr, k: int) -> np.ndarray:
    """Subcarrier-k sensing matrix; rows (m, a), columns (t, r)."""
    cfg = tr.cfg
    m_frames = tr.precoders.shape[0]
    n_rf = tr.combiners.shape[2]
    s_hat = pilot_dft(tr, k)
    phi = np.zeros((m_frames * n_rf, cfg.n_tx * cfg.n_rx), dtype=complex)
    for m in range(m_frames):
        xf = tr.precoders[m] @ s_hat[m]
        for a in range(n_rf):
            w = tr.combiners[m, :, a].conj()
            for t in range(cfg.n_tx):
                phi[m * n_rf + a, t * cfg.n_rx : (t + 1) * cfg.n_rx] = w * xf[t]
    return phi


# ---------------------------------------------------------------------------
# dictionaries


def dense_time_dictionary(tdict) -> np.ndarray:
    """Column flat = (g * g_tx + j) * g_rx + i -> profile_g (x) conj(a_tx_j) (x) a_rx_i."""
    grids = tdict.grids
    profiles = tdict.delay_grid.profiles
    g_delay = tdict.delay_grid.g_delay
    cols = []
    for g in range(g_delay):
        for j in range(grids.g_tx):
            for i in range(grids.g_rx):
                cols.append(
                    np.kron(
                        profiles[:, g],
                        np.kron(grids.a_tx[:, j].conj(), grids.a_rx[:, i]),
                    )
                )
    return np.stack(cols, axis=1)


def dense_freq_dictionary(grids) -> np.ndarray:
    """Column flat = j * g_rx + i -> conj(a_tx_j) (x) a_rx_i."""
    cols = []
    for j in range(grids.g_tx):
        for i in range(grids.g_rx):
            cols.append(np.kron(grids.a_tx[:, j].conj(), grids.a_rx[:, i]))
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# whitening + greedy pursuit oracle


def whitening_factors(combiners: np.ndarray) -> np.ndarray:
    """Per-frame inverse Cholesky factors of W_m^H W_m, (M, n_rf, n_rf)."""
    m_frames, _, n_rf = combiners.shape
    out = np.zeros((m_frames, n_rf, n_rf), dtype=complex)
    for m in range(m_frames):
        gram = combiners[m].conj().T @ combiners[m]
        out[m] = np.linalg.inv(np.linalg.cholesky(gram))
    return out


def whiten_time_rows(phi: np.ndarray, tr, sigma2: float) -> np.ndarray:
    """Apply the per-frame factor to every (m, n) row group of a (m, n, a) stack."""
    cfg = tr.cfg
    n_rf = tr.combiners.shape[2]
    factors = whitening_factors(tr.combiners)
    out = phi.astype(complex).copy()
    scale = np.sqrt(sigma2) if sigma2 > 0 else 1.0
    for m in range(tr.precoders.shape[0]):
        for n in range(cfg.frame_len):
            base = (m * cfg.frame_len + n) * n_rf
            out[base : base + n_rf] = factors[m] @ out[base : base + n_rf] / scale
    return out


def whiten_freq_rows(phi: np.ndarray, tr, sigma2_window: float) -> np.ndarray:
    """Same for a subcarrier's (m, a) row stack; scale includes the fold window."""
    n_rf = tr.combiners.shape[2]
    factors = whitening_factors(tr.combiners)
    out = phi.astype(complex).copy()
    scale = np.sqrt(sigma2_window) if sigma2_window > 0 else 1.0
    for m in range(tr.precoders.shape[0]):
        out[m * n_rf : (m + 1) * n_rf] = factors[m] @ out[m * n_rf : (m + 1) * n_rf] / scale
    return out


def pinv_gains(matrix: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.linalg.pinv(matrix) @ y


def greedy_pursuit(matrix: np.ndarray, y: np.ndarray, threshold: float,
                   max_atoms: int, min_decrease: float = 1e-12,
                   floor: float = 1e-20):
    """Brute-force normalized matched-filter pursuit with pseudo-inverse refits.

    Returns (selection sequence, final gains, squared-residual history).
    """
    norms = np.linalg.norm(matrix, axis=0)
    residual = y.astype(complex).copy()
    selected: list[int] = []
    history = [float(np.vdot(residual, residual).real)]
    eff_threshold = max(threshold, floor * history[0])
    while history[-1] > eff_threshold and len(selected) < min(max_atoms, y.size):
        stat = np.abs(matrix.conj().T @ residual)
        with np.errstate(divide="ignore", invalid="ignore"):
            stat = np.where(norms > norms.max() * 1e-12, stat / norms, 0.0)
        stat[selected] = -1.0
        best = int(np.argmax(stat))
        if not stat[best] > 0:
            break
        selected.append(best)
        gains = pinv_gains(matrix[:, selected], y)
        residual = y - matrix[:, selected] @ gains
        power = float(np.vdot(residual, residual).real)
        if history and (history[-1] - power) <= min_decrease * history[-1]:
            history.append(power)
            break
        history.append(power)
    gains = pinv_gains(matrix[:, selected], y) if selected else np.zeros(0, complex)
    return selected, gains, history
