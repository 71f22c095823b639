"""Actor architecture: pipelines, token assembly, encoder, squashed sampling."""

import math

import numpy as np
import pytest

from dogfight import autodiff as ad
from dogfight.autodiff import Tape, Tensor, backward
from dogfight.checkpoint import load_checkpoint, save_checkpoint
from dogfight.errors import ConfigError, DimensionError
from dogfight.gradcheck import (check_actor_network, check_log_prob_graph,
                                run_all)
from dogfight.policy import (ARCHITECTURES, ActionDistribution, NetworkConfig,
                             TemporalFusionActor, build_actor,
                             log_prob_of_action, sample)

CFG = NetworkConfig(embed_dim=16, num_blocks=2, num_heads=2, short_len=4,
                    long_len=4, stride=2)


def make_actor(seed=0, cfg=CFG):
    return TemporalFusionActor(cfg, np.random.default_rng(seed))


def random_traj(rng, n):
    return rng.uniform(-1, 1, (1, n, 33))


class TestEmbed:
    def test_zero_weights_zero_embedding(self):
        actor = make_actor()
        for p in actor.params.values():
            p.data = np.zeros_like(p.data)
        traj = Tensor(np.zeros((1, CFG.long_len, 33)))
        out = actor.embed(traj, "long")
        np.testing.assert_array_equal(out.data, 0.0)

    def test_output_shapes(self):
        cfg = NetworkConfig(embed_dim=16, num_blocks=1, num_heads=2,
                            short_len=5, long_len=7, stride=2)
        actor = TemporalFusionActor(cfg, np.random.default_rng(1))
        rng = np.random.default_rng(2)
        h_l = actor.embed(Tensor(random_traj(rng, 7)), "long")
        h_s = actor.embed(Tensor(random_traj(rng, 5)), "short")
        assert h_l.shape == (1, 7, 16)
        assert h_s.shape == (1, 5, 16)

    def test_wrong_row_count_rejected(self):
        actor = make_actor()
        with pytest.raises(DimensionError):
            actor.embed(Tensor(np.zeros((1, CFG.long_len + 1, 33))), "long")

    def test_causal_prefix_property(self):
        # first k rows of the embedding depend only on the first k inputs
        actor = make_actor(3)
        rng = np.random.default_rng(4)
        base = random_traj(rng, CFG.long_len)
        perturbed = base.copy()
        perturbed[0, -1] += rng.uniform(0.5, 1.0, 33)
        out_a = actor.embed(Tensor(base), "long").data
        out_b = actor.embed(Tensor(perturbed), "long").data
        np.testing.assert_array_equal(out_a[0, :-1], out_b[0, :-1])
        assert not np.allclose(out_a[0, -1], out_b[0, -1])


class TestAssemble:
    def test_zero_embeddings_zero_pos_row0_is_class_token(self):
        actor = make_actor(5)
        actor.params["token/pos"].data[:] = 0.0
        z0 = actor.assemble(Tensor(np.zeros((1, CFG.long_len, 16))),
                            Tensor(np.zeros((1, CFG.short_len, 16))))
        np.testing.assert_array_equal(z0.data[0, 0],
                                      actor.params["token/class"].data[0])
        np.testing.assert_array_equal(z0.data[0, 1:], 0.0)

    def test_token_count_default_config(self):
        cfg = NetworkConfig()  # defaults: 8 + 8 + 1
        assert cfg.tokens == 17
        actor = TemporalFusionActor(
            NetworkConfig(embed_dim=8, num_blocks=1, num_heads=2),
            np.random.default_rng(0))
        z0 = actor.assemble(Tensor(np.zeros((2, 8, 8))),
                            Tensor(np.zeros((2, 8, 8))))
        assert z0.shape == (2, 17, 8)

    def test_identical_rows_with_zero_pos(self):
        actor = make_actor(6)
        actor.params["token/pos"].data[:] = 0.0
        row = np.random.default_rng(7).uniform(-1, 1, 16)
        h_l = np.tile(row, (1, CFG.long_len, 1))
        h_s = np.tile(row, (1, CFG.short_len, 1))
        z0 = actor.assemble(Tensor(h_l), Tensor(h_s))
        for k in range(1, z0.shape[1]):
            np.testing.assert_array_equal(z0.data[0, k], row)


class TestEncode:
    def test_degenerate_empty_stack(self):
        cfg = NetworkConfig(embed_dim=16, num_blocks=0, num_heads=2,
                            short_len=4, long_len=4, stride=2)
        actor = TemporalFusionActor(cfg, np.random.default_rng(8))
        rng = np.random.default_rng(9)
        z0 = Tensor(rng.uniform(-1, 1, (1, cfg.tokens, 16)))
        y = actor.encode(z0)
        row0 = ad.reshape(ad.slice_axis(z0, 1, 0, 1), (1, 16))
        from dogfight.networks import apply_layer_norm, apply_linear
        expected = apply_linear(actor.params, "head",
                                apply_layer_norm(actor.params, "head/ln", row0))
        np.testing.assert_array_equal(y.data, expected.data)

    def test_msa_subblock_permutation_equivariant(self):
        actor = make_actor(10)
        rng = np.random.default_rng(11)
        x = rng.uniform(-1, 1, (1, 6, 16))
        perm = rng.permutation(6)
        out = actor._attention("block0", Tensor(x)).data
        out_perm = actor._attention("block0", Tensor(x[:, perm])).data
        np.testing.assert_allclose(out_perm, out[:, perm], atol=1e-12)

    def test_full_pipeline_permutation_sensitive(self):
        actor = make_actor(12)
        rng = np.random.default_rng(13)
        s_l, s_s = random_traj(rng, 4), random_traj(rng, 4)
        y = actor._trunk(Tensor(s_l), Tensor(s_s)).data
        y_perm = actor._trunk(Tensor(s_l[:, ::-1].copy()), Tensor(s_s)).data
        assert not np.allclose(y, y_perm)

    def test_doubling_position_embedding_changes_output(self):
        actor = make_actor(14)
        rng = np.random.default_rng(15)
        s_l, s_s = random_traj(rng, 4), random_traj(rng, 4)
        y0 = actor._trunk(Tensor(s_l), Tensor(s_s)).data
        actor.params["token/pos"].data *= 2.0
        y1 = actor._trunk(Tensor(s_l), Tensor(s_s)).data
        assert not np.allclose(y0, y1)


class TestActionDistribution:
    def test_zero_weights_standard_normal(self):
        actor = make_actor(16)
        for p in actor.params.values():
            p.data = np.zeros_like(p.data)
        rng = np.random.default_rng(17)
        dist = actor.action_distribution(random_traj(rng, 4)[0],
                                         random_traj(rng, 4)[0])
        np.testing.assert_array_equal(dist.mu, 0.0)
        np.testing.assert_array_equal(dist.sigma, 1.0)

    def test_sigma_strictly_positive(self):
        rng = np.random.default_rng(18)
        actor = make_actor(19)
        for _ in range(20):
            dist = actor.action_distribution(random_traj(rng, 4)[0],
                                             random_traj(rng, 4)[0])
            assert np.all(dist.sigma > 0.0)

    def test_log_std_clamped(self):
        actor = make_actor(20)
        actor.params["std/b"].data[:] = 100.0
        rng = np.random.default_rng(21)
        dist = actor.action_distribution(random_traj(rng, 4)[0],
                                         random_traj(rng, 4)[0])
        np.testing.assert_allclose(dist.sigma, math.exp(CFG.log_std_max))


class TestSampling:
    def test_zero_sigma_recovers_tanh_mean(self):
        rng = np.random.default_rng(22)
        mu = rng.uniform(-2, 2, 4)
        dist = ActionDistribution(mu=mu, sigma=np.zeros(4))
        action, _ = sample(dist, rng)
        np.testing.assert_allclose(action, np.tanh(mu), atol=1e-12)

    def test_samples_strictly_inside_unit_cube(self):
        rng = np.random.default_rng(23)
        dist = ActionDistribution(mu=np.array([0.0, 1.0, -1.0, 3.0]),
                                  sigma=np.array([1.0, 2.0, 0.5, 1.0]))
        action, _ = sample(dist, rng, n=200000)
        assert np.all(action > -1.0) and np.all(action < 1.0)

    def test_presquash_mean_statistics(self):
        rng = np.random.default_rng(24)
        mu, sigma = np.array([0.3]), np.array([0.5])
        dist = ActionDistribution(mu=mu, sigma=sigma)
        action, _ = sample(dist, rng, n=100000)
        u = np.arctanh(np.clip(action, -1 + 1e-15, 1 - 1e-15))
        stderr = sigma[0] / math.sqrt(100000)
        assert abs(u.mean() - mu[0]) < 3 * stderr

    def test_log_prob_marginal_integrates_to_one(self):
        dist = ActionDistribution(mu=np.array([0.2]), sigma=np.array([0.7]))
        grid = np.linspace(-1 + 1e-9, 1 - 1e-9, 200001)[:, None]
        density = np.exp(log_prob_of_action(dist, grid))
        integral = np.trapezoid(density, grid[:, 0])
        assert abs(integral - 1.0) < 1e-3

    def test_sampling_deterministic_under_seed(self):
        actor = make_actor(25)
        rng = np.random.default_rng(26)
        s_l, s_s = random_traj(rng, 4)[0], random_traj(rng, 4)[0]
        a1 = actor.act_stochastic(s_l, s_s, np.random.default_rng(99))
        a2 = actor.act_stochastic(s_l, s_s, np.random.default_rng(99))
        np.testing.assert_array_equal(a1, a2)


class TestDeterministicAction:
    def test_pure_function_of_inputs(self):
        actor = make_actor(27)
        rng = np.random.default_rng(28)
        s_l, s_s = random_traj(rng, 4)[0], random_traj(rng, 4)[0]
        np.testing.assert_array_equal(actor.act_deterministic(s_l, s_s),
                                      actor.act_deterministic(s_l, s_s))

    def test_bounded_open_interval(self):
        actor = make_actor(29)
        rng = np.random.default_rng(30)
        for _ in range(10):
            a = actor.act_deterministic(random_traj(rng, 4)[0],
                                        random_traj(rng, 4)[0])
            assert np.all(a > -1.0) and np.all(a < 1.0)

    def test_equals_sample_with_suppressed_noise(self):
        actor = make_actor(31)
        rng = np.random.default_rng(32)
        s_l, s_s = random_traj(rng, 4)[0], random_traj(rng, 4)[0]
        dist = actor.action_distribution(s_l, s_s)
        forced = ActionDistribution(mu=dist.mu, sigma=np.zeros(4))
        action, _ = sample(forced, rng)
        np.testing.assert_allclose(actor.act_deterministic(s_l, s_s), action,
                                   atol=1e-15)


class TestGradients:
    def test_actor_network_finite_difference(self):
        result = check_actor_network(np.random.default_rng(33))
        assert result.passed, result.detail
        assert result.max_rel_err < 1e-4

    def test_log_prob_graph_finite_difference(self):
        result = check_log_prob_graph(np.random.default_rng(34))
        assert result.passed, result.detail


class TestBaselines:
    def test_all_architectures_forward(self):
        rng = np.random.default_rng(35)
        for arch in ARCHITECTURES:
            cfg = NetworkConfig(embed_dim=16, num_blocks=1, num_heads=2,
                                short_len=4, long_len=4, stride=2, arch=arch)
            actor = build_actor(cfg, np.random.default_rng(36))
            a = actor.act_deterministic(random_traj(rng, 4)[0],
                                        random_traj(rng, 4)[0])
            assert a.shape == (4,)
            assert np.all(np.abs(a) < 1.0)

    def test_unknown_arch_rejected(self):
        with pytest.raises(ConfigError):
            NetworkConfig(arch="perceptron")

    def test_head_count_must_divide(self):
        with pytest.raises(ConfigError):
            NetworkConfig(embed_dim=15, num_heads=4)


class TestCheckpointIntegration:
    def test_round_trip_preserves_actions_to_f32(self, tmp_path):
        actor = make_actor(37)
        rng = np.random.default_rng(38)
        s_l, s_s = random_traj(rng, 4)[0], random_traj(rng, 4)[0]
        before = actor.act_deterministic(s_l, s_s)
        path = tmp_path / "actor.tfz"
        save_checkpoint(path, actor.state_arrays())
        fresh = make_actor(99)  # different init
        fresh.load_state_arrays(load_checkpoint(path))
        after = fresh.act_deterministic(s_l, s_s)
        np.testing.assert_allclose(before, after, atol=1e-6)
