"""Steering vectors, angle/delay grids and the sparsifying dictionaries.

The estimators never materialize their dictionaries: a time-domain
dictionary over (delay-grid, AoD-grid, AoA-grid) triples has
``g_delay * g_tx * g_rx`` atoms of length ``n_taps * n_rx * n_tx`` and
would dominate memory at realistic sizes.  Both dictionary classes
therefore expose per-atom access plus a batched matched filter
(:meth:`correlate`), and keep a densely assembled matrix behind a size
gate for oracle tests only.

Atom index layout (flat, C-order): delay-grid index first, then AoD,
then AoA — ``flat = g * (g_tx * g_rx) + j * g_rx + i``.  The
frequency-domain dictionary drops the delay axis: ``flat = j * g_rx + i``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .channel import PathSet, SystemConfig, raised_cosine

__all__ = [
    "SteeringGeometry",
    "ula_geometry",
    "AngleGrids",
    "DelayGrid",
    "TimeDictionary",
    "FreqDictionary",
    "build_grids",
    "build_delay_grid",
    "snap_paths_to_grids",
]

# Dense dictionary/operator materialization is a debug/oracle path; refuse
# above this many complex entries.
_DENSE_ENTRY_GATE = 1 << 22


@dataclass(frozen=True)
class SteeringGeometry:
    """Array response generators for both link ends.

    The default kind is a uniform linear array with half-wavelength
    element spacing, whose response to an angle ``phi`` is
    ``exp(j * pi * n * cos(phi)) / sqrt(N)`` for element ``n``.  A custom
    geometry supplies its own column generators (must return unit-norm
    columns, one per angle).
    """

    n_rx: int
    n_tx: int
    kind: str = "ula-half-wavelength"
    rx_response: Optional[Callable[[np.ndarray], np.ndarray]] = None
    tx_response: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.kind not in ("ula-half-wavelength", "custom"):
            raise ValueError(f"unknown steering geometry kind: {self.kind!r}")
        if self.kind == "custom" and (self.rx_response is None or self.tx_response is None):
            raise ValueError("custom geometry requires rx_response and tx_response")

    @staticmethod
    def _ula(n_elements: int, angles: np.ndarray) -> np.ndarray:
        angles = np.atleast_1d(np.asarray(angles, dtype=float))
        phase = np.pi * np.outer(np.arange(n_elements), np.cos(angles))
        return np.exp(1j * phase) / np.sqrt(n_elements)

    def rx_matrix(self, angles) -> np.ndarray:
        """Receive steering matrix, one unit-norm column per angle."""
        if self.kind == "custom":
            return np.asarray(self.rx_response(np.atleast_1d(angles)), dtype=complex)
        return self._ula(self.n_rx, angles)

    def tx_matrix(self, angles) -> np.ndarray:
        """Transmit steering matrix, one unit-norm column per angle."""
        if self.kind == "custom":
            return np.asarray(self.tx_response(np.atleast_1d(angles)), dtype=complex)
        return self._ula(self.n_tx, angles)

    def rx_vector(self, angle: float) -> np.ndarray:
        return self.rx_matrix(angle)[:, 0]

    def tx_vector(self, angle: float) -> np.ndarray:
        return self.tx_matrix(angle)[:, 0]


def ula_geometry(cfg: SystemConfig) -> SteeringGeometry:
    """Half-wavelength ULA geometry matching ``cfg``'s antenna counts."""
    return SteeringGeometry(n_rx=cfg.n_rx, n_tx=cfg.n_tx)


@dataclass(frozen=True)
class AngleGrids:
    """Quantized AoA/AoD grids and their steering matrices."""

    rx_angles: np.ndarray
    tx_angles: np.ndarray
    a_rx: np.ndarray
    a_tx: np.ndarray

    @property
    def g_rx(self) -> int:
        return self.rx_angles.shape[0]

    @property
    def g_tx(self) -> int:
        return self.tx_angles.shape[0]


def build_grids(geometry: SteeringGeometry, g_rx: int, g_tx: int) -> AngleGrids:
    """Uniform angle grids ``k * pi / G`` for ``k = 0 .. G-1`` on both ends."""
    if g_rx < 1 or g_tx < 1:
        raise ValueError("grid sizes must be positive")
    rx_angles = np.arange(g_rx) * np.pi / g_rx
    tx_angles = np.arange(g_tx) * np.pi / g_tx
    return AngleGrids(
        rx_angles=rx_angles,
        tx_angles=tx_angles,
        a_rx=geometry.rx_matrix(rx_angles),
        a_tx=geometry.tx_matrix(tx_angles),
    )


@dataclass(frozen=True)
class DelayGrid:
    """Uniform delay grid and the pulse profile of every grid point.

    ``profiles[d, n]`` holds the raised cosine evaluated at
    ``d * symbol_period - point[n]``, i.e. the length-``n_taps`` tap
    signature of a path sitting at grid delay ``n``.
    """

    points: np.ndarray
    profiles: np.ndarray

    @property
    def g_delay(self) -> int:
        return self.points.shape[0]

    @property
    def n_taps(self) -> int:
        return self.profiles.shape[0]


def build_delay_grid(cfg: SystemConfig, g_delay: int) -> DelayGrid:
    """``g_delay`` grid points uniform on ``[0, delay_spread]`` incl. endpoints."""
    if g_delay < 1:
        raise ValueError("delay grid needs at least one point")
    if g_delay < cfg.n_taps:
        warnings.warn("delay grid coarser than the tap count; on-grid coverage is incomplete")
    points = np.linspace(0.0, cfg.delay_spread, g_delay)
    lags = cfg.symbol_period * np.arange(cfg.n_taps)[:, None] - points[None, :]
    profiles = raised_cosine(lags, cfg.symbol_period, cfg.rolloff)
    return DelayGrid(points=points, profiles=profiles)


def _pair_column(a_tx: np.ndarray, a_rx: np.ndarray, aod_idx: int, aoa_idx: int) -> np.ndarray:
    # kron(conj(tx col), rx col) == column-major vec of the rank-one
    # rx_col @ tx_col^H matrix, matching the h_c layout.
    return np.kron(a_tx[:, aod_idx].conj(), a_rx[:, aoa_idx])


@dataclass(frozen=True)
class FreqDictionary:
    """Kronecker dictionary over (AoD, AoA) grid pairs, one atom per pair."""

    grids: AngleGrids

    @property
    def n_atoms(self) -> int:
        return self.grids.g_tx * self.grids.g_rx

    @property
    def atom_len(self) -> int:
        return self.grids.a_rx.shape[0] * self.grids.a_tx.shape[0]

    def encode(self, aod_idx: int, aoa_idx: int) -> int:
        return aod_idx * self.grids.g_rx + aoa_idx

    def decode(self, flat: int):
        if not 0 <= flat < self.n_atoms:
            raise IndexError(f"atom index {flat} out of range [0, {self.n_atoms})")
        return divmod(flat, self.grids.g_rx)

    def atom(self, flat: int) -> np.ndarray:
        aod_idx, aoa_idx = self.decode(flat)
        return _pair_column(self.grids.a_tx, self.grids.a_rx, aod_idx, aoa_idx)

    def correlate(self, z: np.ndarray) -> np.ndarray:
        """All-atom inner products ``atom^H z`` in flat order."""
        zmat = np.asarray(z).reshape(self.grids.a_tx.shape[0], self.grids.a_rx.shape[0])
        partial = np.tensordot(zmat, self.grids.a_rx.conj(), axes=([1], [0]))  # (t, i)
        corr = np.tensordot(self.grids.a_tx, partial, axes=([0], [0]))  # (j, i)
        return corr.reshape(-1)

    def dense(self, max_entries: int = _DENSE_ENTRY_GATE) -> np.ndarray:
        if self.n_atoms * self.atom_len > max_entries:
            raise ValueError("dense dictionary materialization gated to small sizes")
        return np.kron(self.grids.a_tx.conj(), self.grids.a_rx)


@dataclass(frozen=True)
class TimeDictionary:
    """Dictionary over (delay-grid, AoD, AoA) triples.

    Atom ``(g, j, i)`` stacks, over the tap index ``d``, the pair column
    of ``(j, i)`` scaled by the delay profile ``profiles[d, g]``.
    """

    grids: AngleGrids
    delay_grid: DelayGrid

    @property
    def n_atoms(self) -> int:
        return self.delay_grid.g_delay * self.grids.g_tx * self.grids.g_rx

    @property
    def atom_len(self) -> int:
        return self.delay_grid.n_taps * self.grids.a_rx.shape[0] * self.grids.a_tx.shape[0]

    def encode(self, delay_idx: int, aod_idx: int, aoa_idx: int) -> int:
        return (delay_idx * self.grids.g_tx + aod_idx) * self.grids.g_rx + aoa_idx

    def decode(self, flat: int):
        if not 0 <= flat < self.n_atoms:
            raise IndexError(f"atom index {flat} out of range [0, {self.n_atoms})")
        rest, aoa_idx = divmod(flat, self.grids.g_rx)
        delay_idx, aod_idx = divmod(rest, self.grids.g_tx)
        return delay_idx, aod_idx, aoa_idx

    def atom(self, flat: int) -> np.ndarray:
        delay_idx, aod_idx, aoa_idx = self.decode(flat)
        pair = _pair_column(self.grids.a_tx, self.grids.a_rx, aod_idx, aoa_idx)
        return (self.delay_grid.profiles[:, delay_idx][:, None] * pair[None, :]).reshape(-1)

    def correlate(self, z: np.ndarray) -> np.ndarray:
        """All-atom inner products ``atom^H z`` in flat order.

        ``z`` is laid out like ``h_c`` (tap-major, then column-major over
        each tap matrix).
        """
        n_rx = self.grids.a_rx.shape[0]
        n_tx = self.grids.a_tx.shape[0]
        zt = np.asarray(z).reshape(self.delay_grid.n_taps, n_tx, n_rx)
        partial = np.tensordot(zt, self.grids.a_rx.conj(), axes=([2], [0]))  # (d, t, i)
        pair_corr = np.tensordot(partial, self.grids.a_tx, axes=([1], [0]))  # (d, i, j)
        corr = np.tensordot(self.delay_grid.profiles, pair_corr, axes=([0], [0]))  # (g, i, j)
        return corr.transpose(0, 2, 1).reshape(-1)

    def dense(self, max_entries: int = _DENSE_ENTRY_GATE) -> np.ndarray:
        if self.n_atoms * self.atom_len > max_entries:
            raise ValueError("dense dictionary materialization gated to small sizes")
        pair_block = np.kron(self.grids.a_tx.conj(), self.grids.a_rx)
        # rows (d, antenna-pair), columns (delay-grid g, angle-pair q)
        full = np.einsum("dg,bq->dbgq", self.delay_grid.profiles, pair_block)
        return full.reshape(self.atom_len, self.n_atoms)

    def sparse_code(self, delay_idx, aod_idx, aoa_idx, gains) -> np.ndarray:
        """Sparse coefficient vector with ``gains`` placed at the encoded atoms
        (coinciding atoms accumulate)."""
        x = np.zeros(self.n_atoms, dtype=complex)
        for g, j, i, gain in zip(np.atleast_1d(delay_idx), np.atleast_1d(aod_idx),
                                 np.atleast_1d(aoa_idx), np.atleast_1d(gains)):
            x[self.encode(int(g), int(j), int(i))] += gain
        return x


def snap_paths_to_grids(paths: PathSet, grids: AngleGrids, delay_grid: DelayGrid):
    """Snap every path to its nearest grid point on all three axes.

    Returns the snapped :class:`PathSet` together with the per-path
    ``(delay_idx, aod_idx, aoa_idx)`` index arrays.  Ties resolve to the
    lower index (``argmin`` keeps the first minimum).
    """
    delay_idx = np.abs(paths.delays[:, None] - delay_grid.points[None, :]).argmin(axis=1)
    aoa_idx = np.abs(paths.aoa[:, None] - grids.rx_angles[None, :]).argmin(axis=1)
    aod_idx = np.abs(paths.aod[:, None] - grids.tx_angles[None, :]).argmin(axis=1)
    snapped = PathSet(
        gains=paths.gains,
        delays=delay_grid.points[delay_idx],
        aoa=grids.rx_angles[aoa_idx],
        aod=grids.tx_angles[aod_idx],
    )
    return snapped, delay_idx, aod_idx, aoa_idx
