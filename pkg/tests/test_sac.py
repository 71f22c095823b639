"""SAC machinery: rollout bookkeeping, update rules, determinism, resume."""

import numpy as np
import pytest

from dogfight.config import run_config_from_dict
from dogfight.critic import CriticNetwork
from dogfight.errors import ContractError
from dogfight.evaluation import trajectory_config
from dogfight.observations import STATE_DIM, HistoryBuffer
from dogfight.optim import Adam
from dogfight.policy import NetworkConfig, build_actor
from dogfight.replay import Batch, ReplayBuffer, TransitionRecord
from dogfight.sac import (Trainer, actor_update, compute_critic_targets,
                          critic_update, polyak_update, rollout_episode,
                          temperature_update, train)
from dogfight.autodiff import Tensor, parameter

NET = NetworkConfig(embed_dim=12, num_blocks=1, num_heads=2, short_len=3,
                    long_len=3, stride=2)


def toy_run_config(episodes=2, out_dir="/tmp/sac_test", **overrides):
    doc = {
        "network": {"embed_dim": 16, "num_blocks": 1, "num_heads": 2,
                    "short_len": 4, "long_len": 4, "stride": 2,
                    "mlp_ratio": 2},
        "trainer": {"batch_size": 16, "replay_capacity": 5000,
                    "updates_per_episode": 3},
        "environment": {"max_steps": 60, "step_rate_hz": 10.0},
        "run": {"task": "heading_hold", "episodes": episodes,
                "eval_every": 2, "eval_episodes": 1, "checkpoint_every": 100,
                "out_dir": out_dir, "seed": 11},
    }
    for section, val in overrides.items():
        doc[section].update(val)
    return run_config_from_dict(doc)


def _random_batch(rng, n=4, cfg=NET):
    return Batch(
        s_s=rng.uniform(-1, 1, (n, cfg.short_len, STATE_DIM)),
        s_l=rng.uniform(-1, 1, (n, cfg.long_len, STATE_DIM)),
        action=rng.uniform(-1, 1, (n, 4)),
        reward=rng.uniform(-1, 1, n),
        next_s_s=rng.uniform(-1, 1, (n, cfg.short_len, STATE_DIM)),
        next_s_l=rng.uniform(-1, 1, (n, cfg.long_len, STATE_DIM)),
        done=(rng.random(n) < 0.3).astype(float),
    )


def _nets(seed=0):
    actor = build_actor(NET, np.random.default_rng(seed))
    critics = (CriticNetwork(NET, np.random.default_rng(seed + 1)),
               CriticNetwork(NET, np.random.default_rng(seed + 2)))
    targets = (CriticNetwork(NET, np.random.default_rng(seed + 3)),
               CriticNetwork(NET, np.random.default_rng(seed + 4)))
    return actor, critics, targets


class TestReplay:
    def test_fifo_eviction_at_capacity(self):
        rng = np.random.default_rng(0)
        buf = ReplayBuffer(8, (3, STATE_DIM), (3, STATE_DIM))
        for k in range(20):
            rec = TransitionRecord(
                np.full((3, STATE_DIM), k, np.float32),
                np.full((3, STATE_DIM), k, np.float32),
                np.zeros(4), float(k), np.zeros((3, STATE_DIM)),
                np.zeros((3, STATE_DIM)), 0.0)
            buf.add(rec)
        assert len(buf) == 8
        assert set(buf.reward[:8].tolist()) == set(float(k) for k in range(12, 20))

    def test_sample_shapes_and_types(self):
        rng = np.random.default_rng(1)
        buf = ReplayBuffer(100, (3, STATE_DIM), (5, STATE_DIM))
        for k in range(10):
            buf.add(TransitionRecord(
                rng.random((3, STATE_DIM)), rng.random((5, STATE_DIM)),
                rng.random(4), 1.0, rng.random((3, STATE_DIM)),
                rng.random((5, STATE_DIM)), 0.0))
        batch = buf.sample(6, rng)
        assert batch.s_s.shape == (6, 3, STATE_DIM)
        assert batch.s_l.shape == (6, 5, STATE_DIM)
        assert batch.s_s.dtype == np.float64

    def test_empty_sample_rejected(self):
        buf = ReplayBuffer(10, (3, STATE_DIM), (3, STATE_DIM))
        with pytest.raises(ContractError):
            buf.sample(1, np.random.default_rng(0))

    def test_state_round_trip(self):
        rng = np.random.default_rng(2)
        buf = ReplayBuffer(50, (3, STATE_DIM), (3, STATE_DIM))
        for k in range(12):
            buf.add(TransitionRecord(
                rng.random((3, STATE_DIM)), rng.random((3, STATE_DIM)),
                rng.random(4), float(k), rng.random((3, STATE_DIM)),
                rng.random((3, STATE_DIM)), 0.0))
        arrays = {k: v.copy() for k, v in buf.state_arrays().items()}
        fresh = ReplayBuffer(50, (3, STATE_DIM), (3, STATE_DIM))
        fresh.load_state_arrays(arrays)
        assert len(fresh) == 12
        np.testing.assert_array_equal(fresh.reward[:12], buf.reward[:12])


class TestCriticTargets:
    def test_gamma_zero_targets_equal_rewards(self):
        rng = np.random.default_rng(3)
        actor, critics, targets = _nets()
        batch = _random_batch(rng)
        y = compute_critic_targets(batch, actor, *targets, alpha=0.0,
                                   gamma=0.0, rng=rng)
        np.testing.assert_array_equal(y, batch.reward)

    def test_done_suppresses_bootstrap(self):
        rng = np.random.default_rng(4)
        actor, critics, targets = _nets()
        batch = _random_batch(rng)
        batch.done[:] = 1.0
        y = compute_critic_targets(batch, actor, *targets, alpha=0.3,
                                   gamma=0.97, rng=rng)
        np.testing.assert_array_equal(y, batch.reward)

    def test_min_never_exceeds_either_target(self):
        rng = np.random.default_rng(5)
        actor, critics, targets = _nets()
        batch = _random_batch(rng, n=16)
        rng_a = np.random.default_rng(77)
        rng_b = np.random.default_rng(77)
        y_ab = compute_critic_targets(batch, actor, targets[0], targets[1],
                                      0.2, 0.99, rng_a)
        y_ba = compute_critic_targets(batch, actor, targets[1], targets[0],
                                      0.2, 0.99, rng_b)
        # swapping the twin targets leaves the clipped value unchanged
        np.testing.assert_array_equal(y_ab, y_ba)


class TestCriticUpdate:
    def test_moves_critics_leaves_actor(self):
        rng = np.random.default_rng(6)
        actor, critics, targets = _nets()
        opts = (Adam(critics[0].params, 1e-3), Adam(critics[1].params, 1e-3))
        batch = _random_batch(rng, n=8)
        actor_before = {k: v.data.copy() for k, v in actor.params.items()}
        c_before = {k: v.data.copy() for k, v in critics[0].params.items()}
        q1_loss, q2_loss = critic_update(batch, actor, critics, targets, opts,
                                         0.2, 0.99, rng)
        assert np.isfinite(q1_loss) and np.isfinite(q2_loss)
        assert any(not np.array_equal(critics[0].params[k].data, c_before[k])
                   for k in c_before)
        for k, v in actor.params.items():
            np.testing.assert_array_equal(v.data, actor_before[k])

    def test_empty_batch_rejected(self):
        rng = np.random.default_rng(7)
        actor, critics, targets = _nets()
        opts = (Adam(critics[0].params, 1e-3), Adam(critics[1].params, 1e-3))
        empty = _random_batch(rng, n=1)
        empty.reward = np.zeros(0)
        with pytest.raises(ContractError):
            critic_update(empty, actor, critics, targets, opts, 0.2, 0.99, rng)


class TestActorUpdate:
    def test_entropy_maximization_with_zero_critics(self):
        rng = np.random.default_rng(8)
        actor, critics, _ = _nets()
        for critic in critics:
            for p in critic.params.values():
                p.data = np.zeros_like(p.data)
        opt = Adam(actor.params, 3e-3)
        batch = _random_batch(rng, n=16)
        first = None
        last = None
        for step in range(50):
            _, mean_logp = actor_update(batch, actor, critics, opt, 0.2,
                                        np.random.default_rng(99))
            if first is None:
                first = mean_logp
            last = mean_logp
        assert last < first

    def test_leaves_critics_bit_identical(self):
        rng = np.random.default_rng(9)
        actor, critics, _ = _nets()
        opt = Adam(actor.params, 1e-3)
        snap = [{k: v.data.copy() for k, v in c.params.items()}
                for c in critics]
        batch = _random_batch(rng, n=8)
        loss, _ = actor_update(batch, actor, critics, opt, 0.2, rng)
        assert np.isfinite(loss)
        for critic, before in zip(critics, snap):
            for k, v in critic.params.items():
                np.testing.assert_array_equal(v.data, before[k])
            assert all(p.requires_grad for p in critic.params.values())

    def test_single_record_batch_pointwise(self):
        rng = np.random.default_rng(10)
        actor, critics, _ = _nets()
        opt = Adam(actor.params, 0.0)   # evaluate objective without moving
        batch = _random_batch(rng, n=1)
        noise_rng = np.random.default_rng(5)
        expected_noise = np.random.default_rng(5).standard_normal((1, 4))
        from dogfight.autodiff import Tensor as T
        action, logp = actor.sample_graph(T(batch.s_l), T(batch.s_s),
                                          expected_noise)
        q1 = critics[0].q_numpy(batch.s_l, batch.s_s, action.data)
        q2 = critics[1].q_numpy(batch.s_l, batch.s_s, action.data)
        pointwise = float(0.2 * logp.data[0, 0] - min(q1[0, 0], q2[0, 0]))
        loss, _ = actor_update(batch, actor, critics, opt, 0.2, noise_rng)
        assert loss == pytest.approx(pointwise, abs=1e-12)


class TestTemperature:
    def test_zero_gradient_at_target_entropy(self):
        log_alpha = parameter(np.array(np.log(0.2)), "log_alpha")
        opt = Adam({"log_alpha": log_alpha}, 1e-2)
        # mean log prob == -target entropy -> stationary
        alpha = temperature_update(4.0, log_alpha, opt, target_entropy=-4.0)
        assert alpha == pytest.approx(0.2)

    def test_alpha_decreases_when_entropy_high(self):
        log_alpha = parameter(np.array(np.log(0.2)), "log_alpha")
        opt = Adam({"log_alpha": log_alpha}, 1e-2)
        # entropy above target: mean log prob very negative
        alpha = temperature_update(-10.0, log_alpha, opt, target_entropy=-4.0)
        assert alpha < 0.2

    def test_alpha_stays_positive(self):
        log_alpha = parameter(np.array(np.log(0.2)), "log_alpha")
        opt = Adam({"log_alpha": log_alpha}, 0.5)
        for signal in (-50.0, 50.0, -500.0):
            alpha = temperature_update(signal, log_alpha, opt, -4.0)
            assert alpha > 0.0


class TestRollout:
    def _trainer(self, **overrides):
        return Trainer(toy_run_config(**overrides))

    def test_replay_grows_by_steps_minus_warmup(self):
        tr = self._trainer()
        rng = np.random.default_rng(12)
        stats = rollout_episode(tr.env, tr.actor, tr.history, tr.replay, rng, 3)
        warmup = tr.history.config.capacity
        assert stats.env_steps == stats.steps_collected + warmup
        assert len(tr.replay) == stats.steps_collected

    def test_adjacency_of_stored_views(self):
        tr = self._trainer()
        rng = np.random.default_rng(13)
        rollout_episode(tr.env, tr.actor, tr.history, tr.replay, rng, 3)
        n = len(tr.replay)
        for t in range(n - 1):
            np.testing.assert_array_equal(tr.replay.next_s_s[t],
                                          tr.replay.s_s[t + 1])
            np.testing.assert_array_equal(tr.replay.next_s_l[t],
                                          tr.replay.s_l[t + 1])

    def test_reproducible_records(self):
        def run():
            tr = self._trainer()
            rollout_episode(tr.env, tr.actor, tr.history, tr.replay,
                            np.random.default_rng(14), 5)
            return tr.replay.action[:len(tr.replay)].copy()
        np.testing.assert_array_equal(run(), run())

    def test_warmup_must_fit(self):
        tr = self._trainer(environment={"max_steps": 8})
        with pytest.raises(ContractError):
            rollout_episode(tr.env, tr.actor, tr.history, tr.replay,
                            np.random.default_rng(0), 1)


class TestTrainLoop:
    def test_metrics_monotone_episodes(self, tmp_path):
        cfg = toy_run_config(episodes=3, out_dir=str(tmp_path / "run"))
        result = train(cfg)
        lines = result.metrics_path.read_text().strip().splitlines()
        assert lines[0].startswith("episode,env_steps,eval_damage_ratio,"
                                   "eval_win_rate,mean_reward,alpha,q1_loss,"
                                   "q2_loss,pi_loss")
        episodes = [int(line.split(",")[0]) for line in lines[1:]]
        assert episodes == sorted(episodes) == list(range(1, 4))

    def test_seeded_run_reproducible(self, tmp_path):
        cfg_a = toy_run_config(episodes=2, out_dir=str(tmp_path / "a"))
        cfg_b = toy_run_config(episodes=2, out_dir=str(tmp_path / "b"))
        res_a, res_b = train(cfg_a), train(cfg_b)
        a = np.load(res_a.resume_path)
        b = np.load(res_b.resume_path)
        for key in a.files:
            np.testing.assert_array_equal(a[key], b[key], err_msg=key)

    def test_interrupt_resume_bit_identical(self, tmp_path):
        full_cfg = toy_run_config(episodes=4, out_dir=str(tmp_path / "full"))
        full = train(full_cfg)

        half_cfg = toy_run_config(episodes=2, out_dir=str(tmp_path / "half"))
        half = train(half_cfg)
        resumed_cfg = toy_run_config(episodes=4,
                                     out_dir=str(tmp_path / "resumed"))
        resumed = train(resumed_cfg, resume_from=half.resume_path)

        a = np.load(full.resume_path)
        b = np.load(resumed.resume_path)
        for key in a.files:
            np.testing.assert_array_equal(a[key], b[key], err_msg=key)

    def test_checkpoints_written(self, tmp_path):
        cfg = toy_run_config(episodes=2, out_dir=str(tmp_path / "ck"))
        result = train(cfg)
        assert result.final_checkpoint.exists()
        assert (tmp_path / "ck" / "config.json").exists()
        assert result.resume_path.exists()


def test_polyak_update_wrapper():
    _, critics, targets = _nets()
    before = {k: v.data.copy() for k, v in targets[0].params.items()}
    polyak_update(targets, critics, 1.0)
    for k, v in targets[0].params.items():
        np.testing.assert_array_equal(v.data, critics[0].params[k].data)
    polyak_update(targets, critics, 0.0)
    for k, v in targets[0].params.items():
        np.testing.assert_array_equal(v.data, critics[0].params[k].data)
