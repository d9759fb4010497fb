"""Whitened greedy sparse recovery and the three end-to-end estimators.

The combined measurements carry colored noise (the analog combiner mixes
the per-antenna noise), so every estimator first left-multiplies each
frame block by the inverse Cholesky factor of its combiner Gram matrix
and rescales by the noise standard deviation.  After that the residual
energy is directly comparable with the stopping threshold, which defaults
to the expected whitened noise energy (= the measurement dimension).

Estimators:

* :func:`estimate_td` — one greedy pursuit over the full
  (delay-grid, AoD, AoA) atom space, then a least-squares refit of one
  gain per tap for every recovered angle pair.
* :func:`estimate_fd` — an independent pursuit and refit per subcarrier,
  converted back to taps by a truncated inverse DFT.
* :func:`estimate_tf` — pursuits on a few subcarriers recover the angle
  pairs; a single time-domain least squares then fits one delay-profile
  coefficient vector per recovered pair.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import FreqChannel, TapChannel
from .dictionaries import FreqDictionary, TimeDictionary
from .training import MeasurementSet

__all__ = [
    "OmpSettings",
    "OmpResult",
    "SupportSet",
    "ChannelEstimate",
    "whiten",
    "prepare_time_problem",
    "prepare_freq_problem",
    "omp",
    "ls_refit",
    "estimate_td",
    "estimate_fd",
    "estimate_tf",
]

# Relative numerical floor for the squared-residual stop rule: with an exact
# zero threshold (noiseless runs) the loop stops once the residual is at
# round-off level instead of grinding to max_atoms.
_RESIDUAL_FLOOR = 1e-20
_COND_LIMIT = 1e10
_RIDGE_FACTOR = 1e-10


@dataclass(frozen=True)
class OmpSettings:
    """Stopping policy for the greedy pursuit.

    ``stop_threshold`` is compared against the *squared* residual norm and
    lives in the whitened measurement domain (the estimators default it to
    the whitened noise energy).  ``min_residual_decrease`` is a relative
    stall guard: stop once an iteration shrinks the squared residual by
    less than this fraction.
    """

    stop_threshold: float
    max_atoms: int
    min_residual_decrease: float = 1e-12

    def __post_init__(self):
        if self.stop_threshold < 0:
            raise ValueError("stop_threshold must be nonnegative")
        if self.max_atoms < 1:
            raise ValueError("max_atoms must be positive")
        if self.min_residual_decrease < 0:
            raise ValueError("min_residual_decrease must be nonnegative")


@dataclass(frozen=True)
class SupportSet:
    """Selected atoms in selection order.

    Entries are ``(delay_idx, aod_idx, aoa_idx)`` triples for the
    time-domain dictionary or ``(aod_idx, aoa_idx)`` pairs for the
    frequency-domain one; duplicates are rejected.
    """

    atoms: tuple

    def __post_init__(self):
        if len(set(self.atoms)) != len(self.atoms):
            raise ValueError("support contains duplicate atoms")

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    @property
    def delay_indices(self) -> tuple:
        return tuple(dict.fromkeys(a[0] for a in self.atoms if len(a) == 3))

    @property
    def aod_indices(self) -> tuple:
        return tuple(dict.fromkeys(a[-2] for a in self.atoms))

    @property
    def aoa_indices(self) -> tuple:
        return tuple(dict.fromkeys(a[-1] for a in self.atoms))


@dataclass(frozen=True)
class OmpResult:
    selected: tuple
    gains: np.ndarray
    residual: np.ndarray
    residual_history: tuple
    stop_reason: str


@dataclass(frozen=True)
class ChannelEstimate:
    """Recovered support, gains and reconstructed channel."""

    estimator: str
    taps_hat: TapChannel
    support: SupportSet
    gains: np.ndarray
    freq_hat: FreqChannel | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def h_c(self) -> np.ndarray:
        return self.taps_hat.h_c

    @property
    def flags(self) -> tuple:
        return tuple(self.diagnostics.get("flags", ()))


def whiten(blocks: np.ndarray, scale: float):
    """Per-block whitening factors for a block-diagonal covariance.

    Parameters
    ----------
    blocks : ndarray, shape (M, n_rf, n_rf)
        Hermitian PSD covariance blocks (combiner Gram matrices).
    scale : float
        Variance multiplier shared by all blocks (0 for noiseless data).

    Returns
    -------
    factors : ndarray, shape (M, n_rf, n_rf)
        Inverse Cholesky factors (identity fallback for singular blocks,
        with a warning).
    sigma : float
        Scalar standard-deviation divisor (1 when ``scale`` is 0).
    whitened_power : float
        Expected whitened noise energy per (frame, sample) summed over
        frames; equals ``M * n_rf`` on the clean path.
    """
    m, n_rf, _ = blocks.shape
    factors = np.empty_like(blocks)
    for i in range(m):
        try:
            factors[i] = np.linalg.inv(np.linalg.cholesky(blocks[i]))
        except np.linalg.LinAlgError:
            warnings.warn("singular covariance block; identity whitening for that frame")
            factors[i] = np.eye(n_rf)
    sigma = float(np.sqrt(scale)) if scale > 0 else 1.0
    per_frame = np.einsum("mab,mbc,mac->m", factors, blocks, factors.conj()).real
    whitened_power = float((scale / sigma**2) * per_frame.sum())
    return factors, sigma, whitened_power


def prepare_time_problem(mset: MeasurementSet):
    """Whitened time-domain operator, measurement vector and threshold."""
    if mset.y_td is None or mset.cov_td is None:
        raise ValueError("measurement set has no time-domain part")
    tr = mset.realization
    cfg = tr.cfg
    factors, sigma, power = whiten(mset.cov_td.blocks, mset.cov_td.scale)
    wtil = np.matmul(tr.combiners, factors.conj().transpose(0, 2, 1)) / sigma
    y3 = mset.y_td.reshape(tr.num_frames, cfg.frame_len, -1)
    y_w = (np.einsum("mab,mnb->mna", factors, y3) / sigma).reshape(-1)
    threshold = mset.cov_td.samples_per_frame * power
    return tr.td_operator(combiners=wtil), y_w, threshold


def prepare_freq_problem(mset: MeasurementSet):
    """Whitened per-subcarrier operator, all whitened measurement vectors
    (rows indexed by subcarrier) and the per-subcarrier threshold."""
    if mset.y_fd is None or mset.cov_fd is None:
        raise ValueError("measurement set has no frequency-domain part")
    tr = mset.realization
    cfg = tr.cfg
    factors, sigma, power = whiten(mset.cov_fd.blocks, mset.cov_fd.scale)
    wtil = np.matmul(tr.combiners, factors.conj().transpose(0, 2, 1)) / sigma
    y3 = mset.y_fd.reshape(cfg.fft_size, tr.num_frames, -1)
    y_w = (np.einsum("mab,kmb->kma", factors, y3) / sigma).reshape(cfg.fft_size, -1)
    threshold = mset.cov_fd.samples_per_frame * power
    return tr.fd_operator(combiners=wtil), y_w, threshold


def omp(y: np.ndarray, *, correlate: Callable, column: Callable, n_atoms: int,
        settings: OmpSettings, col_norms: np.ndarray | None = None) -> OmpResult:
    """Greedy pursuit with matched-filter selection and LS re-solve.

    ``correlate(residual)`` returns all-atom correlations in flat order;
    ``column(flat)`` returns the measurement-space image of one atom.
    ``col_norms`` holds the effective (measurement-space) column norms:
    when given, the selection maximizes the *normalized* correlation
    |<a_f, r>| / ||a_f||, the matched filter for non-unit-norm columns
    (vanishing columns are never selected).  Ties break toward the lowest
    flat index; an atom is never selected twice.
    """
    if n_atoms < 1:
        raise ValueError("empty dictionary")
    y = np.asarray(y, dtype=complex)
    if col_norms is not None:
        col_norms = np.asarray(col_norms, dtype=float)
        if col_norms.shape != (n_atoms,):
            raise ValueError("col_norms must have one entry per atom")
        norm_floor = float(col_norms.max()) * 1e-12
    energy = float(np.vdot(y, y).real)
    threshold = max(settings.stop_threshold, _RESIDUAL_FLOOR * energy)
    cap = min(settings.max_atoms, y.size, n_atoms)
    residual = y.copy()
    res_sq = energy
    history = [res_sq]
    selected: list[int] = []
    columns: list[np.ndarray] = []
    gains = np.zeros(0, dtype=complex)
    while True:
        if res_sq <= threshold:
            reason = "threshold"
            break
        if len(selected) >= cap:
            reason = "max-atoms"
            break
        if len(history) >= 2 and (history[-2] - history[-1]) <= settings.min_residual_decrease * history[-2]:
            reason = "stalled"
            break
        corr = np.abs(np.asarray(correlate(residual)))
        if col_norms is not None:
            corr = np.divide(corr, col_norms, out=np.zeros_like(corr),
                             where=col_norms > norm_floor)
        if selected:
            corr[np.asarray(selected)] = -1.0
        best = int(np.argmax(corr))
        if not corr[best] > 0.0:
            reason = "orthogonal-residual"
            break
        selected.append(best)
        columns.append(np.asarray(column(best), dtype=complex))
        basis = np.stack(columns, axis=1)
        gains = np.linalg.lstsq(basis, y, rcond=None)[0]
        residual = y - basis @ gains
        res_sq = float(np.vdot(residual, residual).real)
        history.append(res_sq)
    return OmpResult(selected=tuple(selected), gains=gains, residual=residual,
                     residual_history=tuple(history), stop_reason=reason)


def ls_refit(matrix: np.ndarray, y: np.ndarray):
    """Least-squares gains over a restricted design matrix.

    SVD solve (identical to the pseudo-inverse on well-conditioned input);
    ill-conditioned (> 1e10) or underdetermined systems get a small ridge
    proportional to ``trace(A^H A) / cols`` plus a warning.  Returns
    ``(gains, flags)``.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2:
        raise ValueError("design matrix must be 2-D")
    rows, cols = a.shape
    if cols == 0:
        return np.zeros(0, dtype=complex), []
    if not np.all(np.isfinite(a)):
        raise ValueError("design matrix contains non-finite entries")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0:
        warnings.warn("all-zero design matrix in gain refit; returning zero gains")
        return np.zeros(cols, dtype=complex), ["zero-design"]
    proj = u.conj().T @ np.asarray(y, dtype=complex)
    underdetermined = rows < cols
    cond = s[0] / s[-1] if s[-1] > 0.0 else np.inf
    if underdetermined or cond > _COND_LIMIT:
        lam = _RIDGE_FACTOR * float((s**2).sum()) / cols
        gains = vh.conj().T @ ((s / (s**2 + lam)) * proj)
        flag = "underdetermined-refit" if underdetermined else "illconditioned-refit"
        warnings.warn(f"regularized gain refit ({flag}, cond={cond:.3g})")
        return gains, [flag]
    return vh.conj().T @ (proj / s), []


def _default_fd_settings(cfg, threshold: float) -> OmpSettings:
    # Per-subcarrier budget.  Pursuits routinely wander through coherent
    # neighbour atoms before the residual rule fires, and a budget of only
    # 2*n_paths strands noiseless recoveries mid-wander.  4*n_paths*n_taps
    # equals the time-domain cap 2*n_paths*g_delay at the customary
    # two-fold delay-grid oversampling, and stays far below the per-
    # subcarrier measurement count.
    return OmpSettings(
        stop_threshold=threshold,
        max_atoms=4 * max(cfg.n_paths, 1) * max(cfg.n_taps, 1),
    )


def _combiner_gains(combiners: np.ndarray, a_rx: np.ndarray) -> np.ndarray:
    """||W_m^H a_rx(i)||^2 per (frame, rx-grid angle) -> (M, G_r)."""
    projected = np.einsum("mra,ri->mai", combiners.conj(), a_rx)
    return (np.abs(projected) ** 2).sum(axis=1)


def _td_column_norms(op, tdict: TimeDictionary) -> np.ndarray:
    """Effective measurement-space norms of all time-domain atoms.

    The operator factors per frame into (pilot action) x (combiner
    projection), so ||col(g,j,i)||^2 = sum_m T_m(g,j) * R_m(i); both factors
    are small dense contractions.
    """
    tx_part = np.tensordot(op.shifted, tdict.grids.a_tx.conj(), axes=([3], [0]))
    pulsed = np.einsum("mndj,dg->mngj", tx_part, tdict.delay_grid.profiles)
    pilot_sq = (np.abs(pulsed) ** 2).sum(axis=1)  # (M, G_c, G_t)
    comb_sq = _combiner_gains(op.combiners, tdict.grids.a_rx)  # (M, G_r)
    sq = np.einsum("mgj,mi->gji", pilot_sq, comb_sq)
    return np.sqrt(sq.reshape(-1))


def _fd_column_norms(op, fdict: FreqDictionary, k: int,
                     comb_sq: np.ndarray) -> np.ndarray:
    """Effective norms of the per-subcarrier atoms at subcarrier k."""
    tx_sq = np.abs(op.precoded_freq[:, k, :] @ fdict.grids.a_tx.conj()) ** 2  # (M, G_t)
    return np.sqrt((tx_sq.T @ comb_sq).reshape(-1))


def _taps_from_pair_recon(recon: np.ndarray, n_taps: int, n_rx: int, n_tx: int) -> np.ndarray:
    """(n_rx*n_tx, n_taps) stacked vectorizations -> (n_taps, n_rx, n_tx)."""
    return recon.T.reshape(n_taps, n_tx, n_rx).transpose(0, 2, 1)


def estimate_td(mset: MeasurementSet, tdict: TimeDictionary,
                settings: OmpSettings | None = None) -> ChannelEstimate:
    """Time-domain estimator: one pursuit over all (delay, AoD, AoA) atoms.

    The gain refit re-solves one gain per tap per recovered angle pair
    (the delay structure is absorbed into the per-tap gains), then rebuilds
    the tap matrices from those gains.
    """
    op, y_w, threshold = prepare_time_problem(mset)
    cfg = mset.realization.cfg
    if settings is None:
        settings = OmpSettings(stop_threshold=threshold,
                               max_atoms=2 * max(cfg.n_paths, 1) * tdict.delay_grid.g_delay)
    run = omp(y_w, correlate=lambda r: tdict.correlate(op.adjoint(r)),
              column=lambda f: op.apply(tdict.atom(f)),
              n_atoms=tdict.n_atoms, settings=settings,
              col_norms=_td_column_norms(op, tdict))
    support = SupportSet(atoms=tuple(tdict.decode(f) for f in run.selected))
    flags: list[str] = []
    pairs = tuple(dict.fromkeys((a[1], a[2]) for a in support.atoms))
    if pairs:
        pair_block = np.stack(
            [np.kron(tdict.grids.a_tx[:, j].conj(), tdict.grids.a_rx[:, i])
             for j, i in pairs], axis=1)
        omega = op.tap_block_matrix(pair_block)
        gains, flags = ls_refit(omega, y_w)
        per_tap = gains.reshape(cfg.n_taps, -1)
        recon = pair_block @ per_tap.T
        taps = _taps_from_pair_recon(recon, cfg.n_taps, cfg.n_rx, cfg.n_tx)
    else:
        gains = np.zeros(0, dtype=complex)
        taps = np.zeros((cfg.n_taps, cfg.n_rx, cfg.n_tx), dtype=complex)
    diagnostics = {
        "iterations": len(run.selected),
        "residual_sq": run.residual_history[-1],
        "residual_history": run.residual_history,
        "stop_reason": run.stop_reason,
        "stop_threshold": settings.stop_threshold,
        "omp_invocations": 1,
        "refit_pairs": pairs,
        "flags": tuple(flags),
    }
    return ChannelEstimate(estimator="td", taps_hat=TapChannel(taps), support=support,
                           gains=gains, diagnostics=diagnostics)


def estimate_fd(mset: MeasurementSet, fdict: FreqDictionary,
                settings: OmpSettings | None = None) -> ChannelEstimate:
    """Frequency-domain estimator: independent pursuit + refit per subcarrier."""
    op, y_w, threshold = prepare_freq_problem(mset)
    cfg = mset.realization.cfg
    base = settings if settings is not None else _default_fd_settings(cfg, threshold)
    n_sub = cfg.fft_size
    freq = np.zeros((n_sub, cfg.n_rx, cfg.n_tx), dtype=complex)
    comb_sq = _combiner_gains(op.combiners, fdict.grids.a_rx)
    union: dict = {}
    per_sub = []
    all_gains = []
    flags: set = set()
    iterations = 0
    for k in range(n_sub):
        run = omp(y_w[k],
                  correlate=lambda r, k=k: fdict.correlate(op.adjoint(k, r)),
                  column=lambda f, k=k: op.apply(k, fdict.atom(f)),
                  n_atoms=fdict.n_atoms, settings=base,
                  col_norms=_fd_column_norms(op, fdict, k, comb_sq))
        pairs = tuple(fdict.decode(f) for f in run.selected)
        per_sub.append(pairs)
        iterations += len(pairs)
        for p in pairs:
            union.setdefault(p)
        if run.selected:
            basis = np.stack([fdict.atom(f) for f in run.selected], axis=1)
            omega = op.pair_block_matrix(k, basis)
            g, fl = ls_refit(omega, y_w[k])
            flags.update(fl)
            all_gains.append(g)
            freq[k] = (basis @ g).reshape(cfg.n_tx, cfg.n_rx).T
        else:
            all_gains.append(np.zeros(0, dtype=complex))
    taps = np.fft.ifft(freq, axis=0)[: cfg.n_taps]
    diagnostics = {
        "omp_invocations": n_sub,
        "iterations": iterations,
        "per_subcarrier_support": tuple(per_sub),
        "per_subcarrier_gains": tuple(all_gains),
        "stop_threshold": base.stop_threshold,
        "flags": tuple(sorted(flags)),
    }
    return ChannelEstimate(estimator="fd", taps_hat=TapChannel(taps),
                           support=SupportSet(atoms=tuple(union)), gains=np.zeros(0, dtype=complex),
                           freq_hat=FreqChannel(freq), diagnostics=diagnostics)


def estimate_tf(mset: MeasurementSet, tdict: TimeDictionary, fdict: FreqDictionary,
                n_subcarriers: int, settings: OmpSettings | None = None) -> ChannelEstimate:
    """Combined estimator: angles from a few subcarriers, delays/gains from time.

    Runs the frequency-domain pursuit on ``n_subcarriers`` evenly spaced
    subcarriers, unions the recovered (AoD, AoA) pairs, then solves one
    time-domain least squares with a delay-profile coefficient vector per
    recovered pair.
    """
    cfg = mset.realization.cfg
    n_sub = cfg.fft_size
    if not 1 <= n_subcarriers <= n_sub:
        raise ValueError("n_subcarriers must lie in [1, fft_size]")
    op_fd, y_fd_w, threshold_fd = prepare_freq_problem(mset)
    fd_settings = settings if settings is not None else _default_fd_settings(cfg, threshold_fd)
    picked = [int(np.floor(i * n_sub / n_subcarriers + 0.5)) for i in range(n_subcarriers)]
    comb_sq = _combiner_gains(op_fd.combiners, fdict.grids.a_rx)
    union: dict = {}
    iterations = 0
    for k in picked:
        run = omp(y_fd_w[k],
                  correlate=lambda r, k=k: fdict.correlate(op_fd.adjoint(k, r)),
                  column=lambda f, k=k: op_fd.apply(k, fdict.atom(f)),
                  n_atoms=fdict.n_atoms, settings=fd_settings,
                  col_norms=_fd_column_norms(op_fd, fdict, k, comb_sq))
        for f in run.selected:
            union.setdefault(fdict.decode(f))
        iterations += len(run.selected)
    pairs = tuple(union)
    op_td, y_td_w, _ = prepare_time_problem(mset)
    flags: list[str] = []
    if pairs:
        basis = np.stack([fdict.atom(fdict.encode(j, i)) for (j, i) in pairs], axis=1)
        omega = op_td.delay_block_matrix(basis, tdict.delay_grid.profiles)
        gains, flags = ls_refit(omega, y_td_w)
        per_pair = gains.reshape(len(pairs), tdict.delay_grid.g_delay)
        tap_coeff = per_pair @ tdict.delay_grid.profiles.T  # (pairs, n_taps)
        recon = basis @ tap_coeff
        taps = _taps_from_pair_recon(recon, cfg.n_taps, cfg.n_rx, cfg.n_tx)
    else:
        gains = np.zeros(0, dtype=complex)
        taps = np.zeros((cfg.n_taps, cfg.n_rx, cfg.n_tx), dtype=complex)
    diagnostics = {
        "omp_invocations": n_subcarriers,
        "subcarriers": tuple(picked),
        "iterations": iterations,
        "stop_threshold": fd_settings.stop_threshold,
        "flags": tuple(flags),
    }
    return ChannelEstimate(estimator="tf", taps_hat=TapChannel(taps),
                           support=SupportSet(atoms=pairs), gains=gains, diagnostics=diagnostics)
