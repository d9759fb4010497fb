"""Training frames, receive simulation and measurement operators."""

import dataclasses

import numpy as np
import pytest

import mmwave_chanest as mc
import reference as ref


def setup_link(m_frames=3, n_rf=2, snr_db=None, seed=0, **cfg_kw):
    base = dict(n_rx=3, n_tx=4, n_taps=3, n_paths=2, frame_len=8, fft_size=8)
    base.update(cfg_kw)
    cfg = mc.SystemConfig(**base)
    geo = mc.ula_geometry(cfg)
    ch = mc.taps_from_paths(mc.draw_paths(cfg, seed), cfg, geo)
    tcfg = mc.TrainingConfig.from_snr_db(m_frames, n_rf, snr_db)
    tr = mc.draw_training(cfg, tcfg, seed + 1000)
    return cfg, ch, tr


# ---------------------------------------------------------------------------
# draw_training


def test_precoder_combiner_phase_set_and_scale():
    cfg, _, tr = setup_link(m_frames=6)
    allowed_f = np.array([1, 1j, -1, -1j]) / np.sqrt(cfg.n_tx)
    allowed_w = np.array([1, 1j, -1, -1j]) / np.sqrt(cfg.n_rx)
    for arr, allowed in ((tr.precoders, allowed_f), (tr.combiners, allowed_w)):
        dists = np.abs(arr.reshape(-1)[:, None] - allowed[None, :])
        assert np.all(dists.min(axis=1) < 1e-12)


def test_pilots_unit_modulus_qpsk():
    cfg, _, tr = setup_link(n_rf=2)
    mags = np.abs(tr.pilots)
    assert np.allclose(mags, 1 / np.sqrt(2), atol=1e-12)
    q = (np.angle(tr.pilots * np.sqrt(2)) - np.pi / 4) / (np.pi / 2)
    offset = q - np.round(q)
    assert np.allclose(offset, 0.0, atol=1e-9)


def test_phase_histogram_uniform():
    cfg = mc.SystemConfig(n_rx=40, n_tx=100, n_taps=3, n_paths=1, frame_len=8, fft_size=8)
    tr = mc.draw_training(cfg, mc.TrainingConfig(num_frames=200, n_rf=5), 99)
    phases = np.round(np.angle(tr.precoders * np.sqrt(cfg.n_tx)) / (np.pi / 2)).astype(int) % 4
    counts = np.bincount(phases.reshape(-1), minlength=4)
    n = counts.sum()
    assert n == 100_000
    sigma = np.sqrt(n * 0.25 * 0.75)
    assert np.all(np.abs(counts - n / 4) < 3 * sigma)


def test_training_determinism():
    cfg, _, tr = setup_link()
    again = mc.draw_training(cfg, tr.tcfg, 1000)
    assert np.array_equal(tr.precoders, again.precoders)
    assert np.array_equal(tr.pilots, again.pilots)
    other = mc.draw_training(cfg, tr.tcfg, 1001)
    assert not np.array_equal(tr.pilots, other.pilots)


def test_training_config_noise_and_validation():
    assert mc.TrainingConfig(num_frames=2, n_rf=1, snr=4.0).noise_var == pytest.approx(0.25)
    assert mc.TrainingConfig.from_snr_db(2, 1, None).noise_var == 0.0
    assert mc.TrainingConfig.from_snr_db(2, 1, 10.0).noise_var == pytest.approx(0.1)
    with pytest.raises(ValueError):
        mc.TrainingConfig(num_frames=0, n_rf=1)
    with pytest.raises(ValueError):
        mc.TrainingConfig(num_frames=2, n_rf=0)
    with pytest.raises(ValueError):
        mc.TrainingConfig(num_frames=2, n_rf=1, snr=-1.0)


# ---------------------------------------------------------------------------
# noiseless structural identities


def test_time_domain_measurements_match_dense_reference():
    cfg, ch, tr = setup_link()
    mset = mc.simulate_td_rx(ch, tr)
    phi = ref.dense_time_rows(tr)
    want = phi @ ref.h_c_vector(ch.taps)
    assert np.linalg.norm(mset.y_td - want) <= 1e-10 * np.linalg.norm(want)


def test_freq_domain_measurements_match_dense_reference():
    cfg, ch, tr = setup_link(fft_size=8)
    mset = mc.simulate_fd_rx(ch, tr)
    freq = ref.freq_response(ch.taps, cfg.fft_size)
    for k in range(cfg.fft_size):
        phi_k = ref.dense_freq_rows(tr, k)
        h_k = freq[k].T.reshape(-1)
        want = phi_k @ h_k
        assert np.linalg.norm(mset.y_fd[k] - want) <= 1e-10 * np.linalg.norm(want)


def test_zero_padding_isolates_frames():
    cfg, ch, tr = setup_link(m_frames=4)
    base = mc.simulate_rx(ch, tr)
    pilots = tr.pilots.copy()
    pilots[2] = 0.0
    altered = dataclasses.replace(tr, pilots=pilots)
    # dataclass caches are per-instance, so the altered realization recomputes
    got = mc.simulate_rx(ch, altered)
    y0 = base.y_td.reshape(4, cfg.frame_len, 2)
    y1 = got.y_td.reshape(4, cfg.frame_len, 2)
    assert np.allclose(y1[[0, 1, 3]], y0[[0, 1, 3]], atol=1e-14)
    assert np.allclose(y1[2], 0.0, atol=1e-14)


def test_shared_noise_capture_between_views():
    cfg, ch, tr = setup_link(snr_db=0.0)
    both = mc.simulate_rx(ch, tr, rng_seed=5)
    td_only = mc.simulate_rx(ch, tr, rng_seed=5, parts=("td",))
    assert np.array_equal(both.y_td, td_only.y_td)
    assert td_only.y_fd is None
    assert both.cov_td.scale == pytest.approx(1.0)
    assert both.cov_fd.scale == pytest.approx(1.0 * (cfg.frame_len + cfg.n_taps - 1))


def test_noise_power_bookkeeping():
    cfg, ch, tr = setup_link(snr_db=10.0, m_frames=5, n_rf=2)
    mset = mc.simulate_rx(ch, tr)
    window = cfg.frame_len + cfg.n_taps - 1
    assert mset.noise_power_td == pytest.approx(0.1 * 5 * cfg.frame_len * 2)
    assert mset.noise_power_fd == pytest.approx(0.1 * window * 5 * 2)


def test_simulate_validation():
    cfg, ch, tr = setup_link()
    wrong = mc.TapChannel(np.zeros((cfg.n_taps, cfg.n_rx + 1, cfg.n_tx), dtype=complex))
    with pytest.raises(ValueError):
        mc.simulate_rx(wrong, tr)
    small_fft = mc.SystemConfig(n_rx=3, n_tx=4, n_taps=3, n_paths=2, frame_len=8, fft_size=4)
    geo = mc.ula_geometry(small_fft)
    ch2 = mc.taps_from_paths(mc.draw_paths(small_fft, 0), small_fft, geo)
    tr2 = mc.draw_training(small_fft, mc.TrainingConfig(num_frames=2, n_rf=1), 1)
    with pytest.raises(ValueError):
        mc.simulate_rx(ch2, tr2, parts=("fd",))
    assert mc.simulate_rx(ch2, tr2, parts=("td",)).y_td is not None


# ---------------------------------------------------------------------------
# measurement operators vs the dense references


def test_time_operator_apply_and_adjoint():
    cfg, ch, tr = setup_link()
    op = tr.td_operator()
    phi = ref.dense_time_rows(tr)
    rng = np.random.default_rng(8)
    v = rng.standard_normal(phi.shape[1]) + 1j * rng.standard_normal(phi.shape[1])
    y = rng.standard_normal(phi.shape[0]) + 1j * rng.standard_normal(phi.shape[0])
    assert np.allclose(op.apply(v), phi @ v, atol=1e-12)
    assert np.allclose(op.adjoint(y), phi.conj().T @ y, atol=1e-12)
    # inner-product adjoint identity
    lhs = np.vdot(y, op.apply(v))
    rhs = np.vdot(op.adjoint(y), v)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert np.allclose(op.dense(), phi, atol=1e-12)


def test_freq_operator_matrix_matches_reference():
    cfg, ch, tr = setup_link(fft_size=8)
    op = tr.fd_operator()
    for k in (0, 3, 7):
        assert np.allclose(op.matrix(k), ref.dense_freq_rows(tr, k), atol=1e-12)


def test_tap_block_matrix_columns():
    cfg, ch, tr = setup_link()
    op = tr.td_operator()
    phi = ref.dense_time_rows(tr)
    grids = mc.build_grids(mc.ula_geometry(cfg), 6, 8)
    pairs = [(1, 2), (5, 0)]
    pair_block = np.stack(
        [np.kron(grids.a_tx[:, j].conj(), grids.a_rx[:, i]) for j, i in pairs], axis=1
    )
    omega = op.tap_block_matrix(pair_block)
    # columns are (tap, pair) with the tap index major
    n_pairs = len(pairs)
    for d in range(cfg.n_taps):
        for s in range(n_pairs):
            embedded = np.zeros(phi.shape[1], dtype=complex)
            embedded[d * cfg.n_tx * cfg.n_rx : (d + 1) * cfg.n_tx * cfg.n_rx] = pair_block[:, s]
            assert np.allclose(omega[:, d * n_pairs + s], phi @ embedded, atol=1e-12)


def test_delay_block_matrix_columns():
    cfg, ch, tr = setup_link()
    op = tr.td_operator()
    phi = ref.dense_time_rows(tr)
    dgrid = mc.build_delay_grid(cfg, 5)
    grids = mc.build_grids(mc.ula_geometry(cfg), 6, 8)
    pairs = [(2, 1), (4, 2), (0, 0)]
    pair_block = np.stack(
        [np.kron(grids.a_tx[:, j].conj(), grids.a_rx[:, i]) for j, i in pairs], axis=1
    )
    omega = op.delay_block_matrix(pair_block, dgrid.profiles)
    # columns are (pair, delay-grid point) with the pair index major
    for s in range(len(pairs)):
        for g in range(dgrid.g_delay):
            embedded = np.zeros(phi.shape[1], dtype=complex)
            for d in range(cfg.n_taps):
                block = d * cfg.n_tx * cfg.n_rx
                embedded[block : block + cfg.n_tx * cfg.n_rx] = (
                    dgrid.profiles[d, g] * pair_block[:, s]
                )
            assert np.allclose(omega[:, s * dgrid.g_delay + g], phi @ embedded, atol=1e-12)


def test_freq_pair_block_matrix_columns():
    cfg, ch, tr = setup_link(fft_size=8)
    op = tr.fd_operator()
    grids = mc.build_grids(mc.ula_geometry(cfg), 6, 8)
    pairs = [(3, 1), (7, 2)]
    pair_block = np.stack(
        [np.kron(grids.a_tx[:, j].conj(), grids.a_rx[:, i]) for j, i in pairs], axis=1
    )
    for k in (1, 4):
        phi_k = ref.dense_freq_rows(tr, k)
        omega = op.pair_block_matrix(k, pair_block)
        assert np.allclose(omega, phi_k @ pair_block, atol=1e-12)
