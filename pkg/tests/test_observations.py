"""Observation assembly, normalization, and trajectory view indexing."""

import numpy as np
import pytest

from dogfight.dynamics import (AirframeCoefficients, ControlCommand,
                               make_level_state, step_dynamics)
from dogfight.errors import ContractError, WarmupError
from dogfight.observations import (ACTION_DIM, STATE_DIM, HistoryBuffer,
                                   TrajectoryConfig, build_state, clamp_unit,
                                   normalize_features, v_z_normalized)
from dogfight.units import ENERGY_REF_FT, KT_TO_FTS, specific_energy

AF = AirframeCoefficients.standard()
NEUTRAL = ControlCommand()


def aircraft(alt=15000.0, kt=500.0, heading=0.0, pos=(0.0, 0.0)):
    return make_level_state(np.array([pos[0], pos[1], alt]), heading,
                            kt * KT_TO_FTS, AF)


class TestBuildState:
    def test_energy_feature_matches_direct_formula(self):
        # independent oracle: E = z + v^2/(2g) evaluated directly
        own = aircraft(alt=30000.0, kt=800.0)
        oppo = aircraft(alt=15000.0, pos=(10000.0, 0.0))
        expected = specific_energy(30000.0, 800.0 * KT_TO_FTS)
        assert expected == pytest.approx(58332.9607, abs=1e-3)
        vec = build_state(own, oppo, NEUTRAL)
        # feature 10 normalizes energy by the 800 kt / 30000 ft reference
        assert vec[10] == pytest.approx(2.0 * expected / ENERGY_REF_FT - 1.0,
                                        abs=1e-12)
        assert vec[10] == pytest.approx(1.0)

    def test_colocated_identical_attitude_zeroes_relative_block(self):
        own = aircraft()
        oppo = own.copy()
        oppo.pose.position_e = own.pose.position_e + np.array([1e-6, 0, 0])
        vec = build_state(own, oppo, NEUTRAL)
        rel_pos = vec[13:19]
        rel_orient = vec[19:22]
        np.testing.assert_allclose(rel_pos, 0.0, atol=1e-9)
        np.testing.assert_allclose(rel_orient, 0.0, atol=1e-9)

    def test_all_entries_unit_bounded(self):
        rng = np.random.default_rng(3)
        own, oppo = aircraft(), aircraft(pos=(8000.0, 2000.0), heading=2.0)
        for k in range(300):
            cmd_own = ControlCommand(*rng.uniform(-1, 1, 4))
            cmd_oppo = ControlCommand(*rng.uniform(-1, 1, 4))
            own = step_dynamics(own, cmd_own, 0.1, AF)
            oppo = step_dynamics(oppo, cmd_oppo, 0.1, AF)
            vec = build_state(own, oppo, cmd_own)
            assert vec.shape == (STATE_DIM,)
            assert np.all(vec >= -1.0) and np.all(vec <= 1.0)
            if own.altitude_ft() < 1000.0 or oppo.altitude_ft() < 1000.0:
                break

    def test_prev_action_passthrough(self):
        own, oppo = aircraft(), aircraft(pos=(9000.0, 0.0))
        cmd = ControlCommand(0.25, -0.5, 0.125, 1.0)
        vec = build_state(own, oppo, cmd)
        np.testing.assert_allclose(vec[-ACTION_DIM:], [0.25, -0.5, 0.125, 1.0])

    def test_non_finite_rejected(self):
        own, oppo = aircraft(), aircraft(pos=(9000.0, 0.0))
        own.pose.velocity_e[1] = np.inf
        with pytest.raises(ContractError):
            build_state(own, oppo, NEUTRAL)

    def test_normalization_idempotent_on_normalized_vectors(self):
        rng = np.random.default_rng(5)
        vec = rng.uniform(-1, 1, STATE_DIM)
        np.testing.assert_array_equal(clamp_unit(vec), vec)
        np.testing.assert_array_equal(clamp_unit(clamp_unit(vec * 3)),
                                      clamp_unit(vec * 3))

    def test_v_z_normalization(self):
        own = aircraft()
        own.pose.velocity_e[2] = -250.0
        assert v_z_normalized(own) == pytest.approx(-0.25)
        own.pose.velocity_e[2] = -5000.0
        assert v_z_normalized(own) == -1.0


class TestHistoryBuffer:
    def _filled(self, cfg, n):
        buf = HistoryBuffer(cfg)
        for i in range(n):
            buf.push(np.full(STATE_DIM, float(i + 1)))
        return buf

    def test_push_keeps_capacity(self):
        cfg = TrajectoryConfig(4, 4, 4)
        buf = self._filled(cfg, 40)
        assert len(buf) == cfg.capacity == 16

    def test_newest_is_last_push(self):
        cfg = TrajectoryConfig(4, 4, 4)
        buf = self._filled(cfg, 21)
        assert buf.newest()[0] == 21.0

    def test_contents_equal_last_capacity_inputs(self):
        rng = np.random.default_rng(7)
        cfg = TrajectoryConfig(3, 5, 2)
        buf = HistoryBuffer(cfg)
        history = []
        for _ in range(1000):
            x = rng.uniform(-1, 1, STATE_DIM)
            history.append(x)
            buf.push(x)
        oracle = np.stack(history[-cfg.capacity:])
        np.testing.assert_array_equal(buf.as_matrix(), oracle)

    def test_toy_case_long_and_short_rows(self):
        # 4/4/4 buffer filled with step indices 1..16: long rows {4,8,12,16},
        # short rows {13,14,15,16}
        cfg = TrajectoryConfig(4, 4, 4)
        buf = self._filled(cfg, 16)
        np.testing.assert_array_equal(buf.long_view()[:, 0], [4, 8, 12, 16])
        np.testing.assert_array_equal(buf.short_view()[:, 0], [13, 14, 15, 16])

    def test_views_share_current_state(self):
        cfg = TrajectoryConfig(4, 4, 4)
        buf = self._filled(cfg, 19)
        np.testing.assert_array_equal(buf.short_view()[-1], buf.long_view()[-1])
        np.testing.assert_array_equal(buf.short_view()[-1], buf.newest())

    def test_unit_stride_views_coincide(self):
        cfg = TrajectoryConfig(6, 6, 1)
        buf = self._filled(cfg, 6)
        np.testing.assert_array_equal(buf.short_view(), buf.long_view())

    def test_warmup_error_until_full(self):
        cfg = TrajectoryConfig(4, 4, 4)
        buf = self._filled(cfg, 15)
        with pytest.raises(WarmupError):
            buf.short_view()
        with pytest.raises(WarmupError):
            buf.long_view()
        buf.push(np.zeros(STATE_DIM))
        buf.short_view()

    def test_long_randomized_run_matches_naive_slicing(self):
        rng = np.random.default_rng(11)
        cfg = TrajectoryConfig(8, 8, 8)
        buf = HistoryBuffer(cfg)
        history = []
        for k in range(10000):
            x = rng.uniform(-1, 1, STATE_DIM)
            history.append(x)
            buf.push(x)
            if not buf.full:
                continue
            if k % 37 == 0:  # spot-check throughout the run
                window = np.stack(history[-cfg.capacity:])
                np.testing.assert_array_equal(buf.short_view(),
                                              window[-cfg.short_len:])
                np.testing.assert_array_equal(
                    buf.long_view(), window[cfg.stride - 1::cfg.stride])

    def test_clear_resets_warmup(self):
        cfg = TrajectoryConfig(2, 2, 2)
        buf = self._filled(cfg, 10)
        buf.clear()
        assert not buf.full
        with pytest.raises(WarmupError):
            buf.long_view()
