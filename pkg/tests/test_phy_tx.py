import dataclasses
import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, strategies as st

from ermon.numerics import SizeError
from ermon.phy_tx import (ConfigError, FrameConfig, Role, build_frame, constellation, data_capacity,
                          generate_primary, random_frame, read_iq, reserved_index_table,
                          schedule_reserved_tones, synthesize, write_iq)


def _demodulate_clean(buf, cfg):
    """Receiver DFT of every symbol body of an unimpaired frame."""
    bodies = np.stack([buf.samples[cfg.symbol_start(m):cfg.symbol_start(m) + cfg.fft_len]
                       for m in range(cfg.n_symbols)])
    return np.fft.fftshift(np.fft.fft(bodies, axis=1, norm="ortho"), axes=1)


class TestFrameConfig:

    def test_reference_numerology(self, ref_cfg):
        assert ref_cfg.used_width == 800
        assert ref_cfg.subcarrier_spacing == pytest.approx(15625.0)
        assert ref_cfg.symbol_len == 1088

    def test_symbol_duration_68us(self, ref_cfg):
        assert ref_cfg.symbol_duration == pytest.approx(68e-6, rel=1e-12)

    def test_capacity_per_symbol(self, ref_cfg):
        assert ref_cfg.data_carriers_per_symbol == 800 - 32 - 4 == 764

    @pytest.mark.parametrize("changes", [
        {"n_subcarriers": 1000},
        {"cp_len": 1024},
        {"n_guard_total": 900, "n_pilots": 100, "n_reserved": 30},
        {"delta_r": 0},
        {"mapper": "8PSK"},
        {"n_guard_total": 223},
        {"disabled_tones": {5}},
    ])
    def test_invalid_configs(self, changes):
        with pytest.raises(ConfigError):
            FrameConfig(**changes)

    def test_hash_tracks_fields(self, ref_cfg):
        assert ref_cfg.config_hash() == FrameConfig().config_hash()
        assert ref_cfg.config_hash() != dataclasses.replace(ref_cfg, delta_r=3).config_hash()


class TestConstellations:

    @pytest.mark.parametrize("mapper", ["BPSK", "QPSK", "16PSK", "4QAM", "16QAM"])
    def test_unit_average_energy(self, mapper):
        assert np.mean(np.abs(constellation(mapper)) ** 2) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("mapper", ["BPSK", "QPSK", "16PSK"])
    def test_psk_constant_modulus(self, mapper):
        npt.assert_allclose(np.abs(constellation(mapper)), 1.0, atol=1e-15)


class TestSchedule:

    def test_base_offsets(self, ref_cfg):
        s = schedule_reserved_tones(ref_cfg, ref_cfg.n_preambles)
        offsets = np.array(s.reserved_indices) - ref_cfg.used_start
        assert list(offsets) == [0, 200, 400, 600]

    def test_advance_by_delta_r(self, ref_cfg):
        a = np.array(schedule_reserved_tones(ref_cfg, ref_cfg.n_preambles).reserved_indices)
        b = np.array(schedule_reserved_tones(ref_cfg, ref_cfg.n_preambles + 1).reserved_indices)
        # none of these land on a pilot, so the plain advance applies
        npt.assert_array_equal(b - a, 2)

    def test_sweep_covers_every_parity_class(self, ref_cfg):
        cfg = dataclasses.replace(ref_cfg, n_data_symbols=400)
        table = reserved_index_table(cfg)
        assert {int(c) % 2 for c in table.ravel()} == {0, 1}
        # each tone walks every non-pilot carrier of its residue class
        even = {c for c in cfg.used_indices.tolist() if (c - cfg.used_start) % 2 == 0}
        assert even - set(cfg.pilot_indices.tolist()) <= set(table.ravel().tolist())

    def test_preamble_rejected(self, ref_cfg):
        with pytest.raises(ConfigError):
            schedule_reserved_tones(ref_cfg, 0)

    def test_pure_function(self, ref_cfg):
        m = ref_cfg.n_preambles + 37
        assert schedule_reserved_tones(ref_cfg, m) == schedule_reserved_tones(FrameConfig(), m)

    def test_beyond_table_matches_formula(self, short_cfg):
        long_cfg = dataclasses.replace(short_cfg, n_data_symbols=40)
        m = short_cfg.n_preambles + 30
        assert schedule_reserved_tones(short_cfg, m) == schedule_reserved_tones(long_cfg, m)

    @given(st.integers(2, 500), st.sets(st.integers(113, 911), max_size=6))
    def test_indices_valid_and_disjoint(self, m, disabled):
        cfg = FrameConfig(n_data_symbols=0)
        disabled = {d for d in disabled if d not in set(cfg.pilot_indices.tolist())}
        cfg = dataclasses.replace(cfg, disabled_tones=frozenset(disabled))
        idx = schedule_reserved_tones(cfg, m).reserved_indices
        assert len(set(idx)) == cfg.n_reserved
        assert all(cfg.used_start <= c < cfg.used_start + cfg.used_width for c in idx)
        assert not set(idx) & set(cfg.pilot_indices.tolist())
        assert not set(idx) & disabled

    def test_no_free_index(self):
        with pytest.raises(ConfigError):
            FrameConfig(n_subcarriers=16, n_guard_total=8, n_pilots=2, n_reserved=2, cp_len=4,
                        disabled_tones={4, 5, 7, 8, 9}, n_data_symbols=1)


class TestBuildFrame:

    def test_reserved_entries_exactly_zero(self, short_cfg):
        grid = random_frame(short_cfg, seed=1)
        assert np.all(grid.values[grid.roles == Role.RESERVED] == 0)
        assert np.all(grid.values[grid.roles == Role.GUARD] == 0)
        assert np.count_nonzero(grid.roles == Role.RESERVED) == short_cfg.n_data_symbols * short_cfg.n_reserved

    def test_preambles_have_no_reserved_tones(self, short_cfg):
        grid = random_frame(short_cfg, seed=1)
        pre = grid.roles[:short_cfg.n_preambles]
        assert not np.any(pre == Role.RESERVED)
        npt.assert_array_equal(grid.values[0], grid.values[1])

    def test_pilots_unit_bpsk(self, short_cfg):
        grid = random_frame(short_cfg, seed=1)
        pil = grid.values[grid.roles == Role.PILOT]
        assert set(np.round(pil.real).tolist()) <= {-1.0, 1.0}
        npt.assert_array_equal(pil.imag, 0)

    def test_disabled_tones_zero(self):
        cfg = FrameConfig(n_data_symbols=3, disabled_tones={300, 301, 302})
        grid = random_frame(cfg, seed=2)
        assert np.all(grid.values[:, [300, 301, 302]] == 0)

    def test_payload_overflow(self, short_cfg):
        with pytest.raises(SizeError):
            build_frame(short_cfg, np.ones(data_capacity(short_cfg) + 1))

    def test_payload_order(self, small_cfg):
        payload = np.arange(1, data_capacity(small_cfg) + 1).astype(complex)
        grid = build_frame(small_cfg, payload)
        got = grid.values[grid.roles == Role.DATA]
        npt.assert_array_equal(got, payload)


class TestSynthesize:

    def test_unit_carrier_at_dc(self):
        cfg = FrameConfig(n_data_symbols=1, n_preambles=1)
        grid = build_frame(cfg, [])
        grid.values[:] = 0
        grid.values[1, cfg.n_subcarriers // 2] = 1.0
        s = synthesize(grid, cfg).samples
        body = s[cfg.symbol_start(1):cfg.symbol_start(1) + cfg.fft_len]
        npt.assert_allclose(body, 1 / math.sqrt(1024), atol=1e-15)

    def test_cp_bit_exact(self, short_cfg):
        s = synthesize(random_frame(short_cfg, seed=3), short_cfg).samples
        for m in range(short_cfg.n_preambles, short_cfg.n_symbols):
            start = short_cfg.symbol_start(m)
            body = s[start:start + short_cfg.fft_len]
            assert np.array_equal(s[start - short_cfg.cp_len:start], body[-short_cfg.cp_len:])

    def test_length(self, short_cfg):
        s = synthesize(random_frame(short_cfg, seed=3), short_cfg)
        assert len(s) == short_cfg.frame_len == 1088 * 10

    def test_grid_roundtrip(self, short_cfg):
        grid = random_frame(short_cfg, seed=4)
        rec = _demodulate_clean(synthesize(grid, short_cfg), short_cfg)
        assert np.sqrt(np.mean(np.abs(rec - grid.values) ** 2)) < 1e-9

    @given(st.integers(0, 2**31 - 1))
    def test_grid_roundtrip_small(self, seed):
        cfg = FrameConfig(n_subcarriers=64, n_guard_total=12, n_pilots=4, n_reserved=2, cp_len=8,
                          n_data_symbols=3)
        grid = random_frame(cfg, seed=seed)
        rec = _demodulate_clean(synthesize(grid, cfg), cfg)
        assert np.sqrt(np.mean(np.abs(rec - grid.values) ** 2)) < 1e-9

    def test_mean_data_power(self):
        cfg = FrameConfig(n_data_symbols=100)
        grid = random_frame(cfg, seed=5)
        s = synthesize(grid, cfg).samples
        bodies = np.concatenate([s[cfg.symbol_start(m):cfg.symbol_start(m) + cfg.fft_len]
                                 for m in range(cfg.n_preambles, cfg.n_symbols)])
        active = cfg.used_width - cfg.n_reserved
        assert np.mean(np.abs(bodies) ** 2) == pytest.approx(active / cfg.n_subcarriers, rel=0.02)

    def test_grid_shape_mismatch(self, short_cfg, small_cfg):
        with pytest.raises(SizeError):
            synthesize(random_frame(small_cfg, seed=0), short_cfg)


class TestPrimary:

    def test_zero_power_is_silent(self, short_cfg):
        assert not np.any(generate_primary(short_cfg, 0.0, 0, seed=1).samples)

    def test_silent_before_onset(self, short_cfg):
        s = generate_primary(short_cfg, 1.0, 5000, seed=1).samples
        assert not np.any(s[:5000])
        assert np.all(s[5000:5100] != 0)

    def test_boundary_onset_full_power(self, short_cfg):
        onset = short_cfg.symbol_start(4) - short_cfg.cp_len
        s = generate_primary(short_cfg, 2.0, onset, seed=1)
        body = s.samples[short_cfg.symbol_start(4):short_cfg.symbol_start(4) + 1024]
        X = np.fft.fftshift(np.fft.fft(body, norm="ortho"))
        npt.assert_allclose(np.abs(X[short_cfg.used_indices]) ** 2, 2.0, rtol=1e-9)
        assert np.max(np.abs(np.delete(X, short_cfg.used_indices))) < 1e-9

    def test_mid_symbol_onset_partial_power(self, short_cfg):
        start = short_cfg.symbol_start(4)
        s = generate_primary(short_cfg, 1.0, start + 512, seed=1).samples
        first = np.fft.fftshift(np.fft.fft(s[start:start + 1024], norm="ortho"))
        nxt = short_cfg.symbol_start(5)
        second = np.fft.fftshift(np.fft.fft(s[nxt:nxt + 1024], norm="ortho"))
        used = short_cfg.used_indices
        p1 = np.mean(np.abs(first[used]) ** 2)
        p2 = np.mean(np.abs(second[used]) ** 2)
        assert 0.3 < p1 < 0.7
        assert p2 == pytest.approx(1.0, rel=1e-9)

    @pytest.mark.parametrize("onset", [-1, 10**7])
    def test_onset_outside(self, short_cfg, onset):
        with pytest.raises(ValueError):
            generate_primary(short_cfg, 1.0, onset, seed=0)


class TestIqExport:

    def test_roundtrip(self, tmp_path, small_cfg):
        buf = synthesize(random_frame(small_cfg, seed=9), small_cfg)
        path = write_iq(buf, tmp_path / "frame.cf32", small_cfg)
        back = read_iq(path)
        npt.assert_allclose(back.samples, buf.samples, atol=1e-6)
        assert back.sample_rate == buf.sample_rate
        assert back.meta["config_hash"] == small_cfg.config_hash()

    def test_unwritable(self, tmp_path, small_cfg):
        buf = synthesize(random_frame(small_cfg, seed=9), small_cfg)
        with pytest.raises(OSError):
            write_iq(buf, tmp_path / "missing" / "x.cf32")
