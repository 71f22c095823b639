"""Actor networks: the temporal-fusion policy and its ablation baselines.

The main actor embeds the sparse long-term and dense short-term trajectories
through separate linear+LSTM pipelines, prepends a learnable class token with
learnable position embeddings, runs a pre-norm transformer encoder stack, and
reads the action distribution off the class-token row.  Actions are squashed
Gaussians: tanh of a reparameterized normal sample, with the matching
change-of-variables correction on the log-density.

Baselines share the input pipelines and the action head but skip the
transformer: ``lstm`` sees only the short trajectory, ``dual_lstm``
concatenates the two terminal hidden states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, parameter
from .errors import ConfigError, DimensionError
from .networks import (apply_layer_norm, apply_linear, embed_trajectory,
                       init_input_pipeline, init_layer_norm, init_linear)
from .observations import ACTION_DIM

_LOG_2PI = math.log(2.0 * math.pi)
_LOG_2 = math.log(2.0)

ARCHITECTURES = ("temporal_fusion", "lstm", "dual_lstm")


@dataclass(frozen=True)
class NetworkConfig:
    embed_dim: int = 128
    num_blocks: int = 3
    num_heads: int = 4
    short_len: int = 8
    long_len: int = 8
    stride: int = 8
    mlp_ratio: int = 4
    arch: str = "temporal_fusion"
    log_std_min: float = -20.0
    log_std_max: float = 2.0

    def __post_init__(self):
        if self.embed_dim % self.num_heads != 0:
            raise ConfigError(f"embed_dim {self.embed_dim} not divisible by "
                              f"num_heads {self.num_heads}")
        if self.arch not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.arch!r}")

    @property
    def tokens(self) -> int:
        return self.long_len + self.short_len + 1


class ActorBase:
    """Trunk-agnostic action head and sampling machinery."""

    def __init__(self, cfg: NetworkConfig):
        self.cfg = cfg
        self.params: dict[str, Tensor] = {}

    # -- parameter plumbing -------------------------------------------------

    def parameters(self) -> dict[str, Tensor]:
        return self.params

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}

    def manifest(self) -> dict[str, tuple[int, ...]]:
        return {k: v.shape for k, v in self.params.items()}

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        from .checkpoint import verify_manifest
        verify_manifest(self.manifest(), arrays, type(self).__name__)
        for k, v in self.params.items():
            v.data = np.array(arrays[k], dtype=np.float64).reshape(v.shape)

    def _init_action_head(self, rng: np.random.Generator) -> None:
        d = self.cfg.embed_dim
        init_layer_norm(self.params, "out/ln", d)
        init_linear(self.params, "mean", d, ACTION_DIM, rng)
        init_linear(self.params, "std", d, ACTION_DIM, rng)

    # -- forward ------------------------------------------------------------

    def _trunk(self, s_l: Tensor, s_s: Tensor) -> Tensor:
        raise NotImplementedError

    def forward(self, s_l: Tensor, s_s: Tensor) -> tuple[Tensor, Tensor]:
        """(mean, clamped log-std) for a batch of trajectory pairs."""
        y = self._trunk(s_l, s_s)
        yn = apply_layer_norm(self.params, "out/ln", y)
        mu = apply_linear(self.params, "mean", yn)
        log_std = ad.clip(apply_linear(self.params, "std", yn),
                          self.cfg.log_std_min, self.cfg.log_std_max)
        return mu, log_std

    def sample_graph(self, s_l: Tensor, s_s: Tensor,
                     noise: np.ndarray) -> tuple[Tensor, Tensor]:
        """Reparameterized action and log-probability as tape tensors.

        ``noise`` is the fixed standard-normal draw; gradients flow to the
        network through the sample.  The log-density carries the tanh
        change-of-variables term, computed in its softplus-stable form.
        """
        mu, log_std = self.forward(s_l, s_s)
        sigma = ad.exp(log_std)
        u = ad.add(mu, ad.mul(sigma, noise))
        action = ad.tanh(u)
        gauss = ad.add(ad.mul(Tensor(noise * noise), -0.5),
                       ad.add(ad.neg(log_std), -0.5 * _LOG_2PI))
        squash = ad.mul(ad.sub(ad.add(ad.softplus(ad.mul(u, -2.0)), u),
                               _LOG_2), -2.0)
        log_prob = ad.tensor_sum(ad.add(gauss, squash), axis=-1, keepdims=True)
        return action, log_prob

    # -- numpy-side inference (no tape) --------------------------------------

    def action_distribution(self, s_l: np.ndarray,
                            s_s: np.ndarray) -> "ActionDistribution":
        mu, log_std = self.forward(Tensor(s_l[None]), Tensor(s_s[None]))
        return ActionDistribution(mu.data[0].copy(),
                                  np.exp(log_std.data[0]).copy())

    def act_deterministic(self, s_l: np.ndarray, s_s: np.ndarray) -> np.ndarray:
        """Evaluation-time action: tanh of the mean only."""
        dist = self.action_distribution(s_l, s_s)
        return np.tanh(dist.mu)

    def act_stochastic(self, s_l: np.ndarray, s_s: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
        action, _ = sample(self.action_distribution(s_l, s_s), rng)
        return action


@dataclass
class ActionDistribution:
    """Diagonal Gaussian over pre-squash controls."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if self.mu.shape != self.sigma.shape:
            raise DimensionError(f"mu {self.mu.shape} vs sigma "
                                 f"{self.sigma.shape}")


def _squashed_log_prob(u: np.ndarray, mu: np.ndarray,
                       sigma: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0.0, (u - mu) / np.where(sigma > 0.0, sigma, 1.0),
                     0.0)
        gauss = -0.5 * z * z - np.log(sigma) - 0.5 * _LOG_2PI
    squash = 2.0 * (_LOG_2 - u - np.logaddexp(0.0, -2.0 * u))
    return (gauss - squash).sum(axis=-1)


def sample(dist: ActionDistribution, rng: np.random.Generator,
           n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Draw tanh-squashed actions; returns (action, log_prob).

    With ``n`` set, draws that many actions at once (leading axis n).
    """
    shape = dist.mu.shape if n is None else (n,) + dist.mu.shape
    xi = rng.standard_normal(shape)
    u = dist.mu + dist.sigma * xi
    action = np.tanh(u)
    return action, _squashed_log_prob(u, dist.mu, dist.sigma)


def log_prob_of_action(dist: ActionDistribution, action: np.ndarray) -> np.ndarray:
    """Log-density of an already-squashed action under the distribution."""
    a = np.clip(action, -1.0 + 1e-12, 1.0 - 1e-12)
    u = np.arctanh(a)
    return _squashed_log_prob(u, dist.mu, dist.sigma)


# ---------------------------------------------------------------------------
# trunks
# ---------------------------------------------------------------------------

class TemporalFusionActor(ActorBase):
    """Dual LSTM pipelines fused by a class-token transformer encoder."""

    def __init__(self, cfg: NetworkConfig, rng: np.random.Generator):
        super().__init__(cfg)
        d = cfg.embed_dim
        init_input_pipeline(self.params, "long", d, rng)
        init_input_pipeline(self.params, "short", d, rng)
        self.params["token/class"] = parameter(
            0.02 * rng.standard_normal((1, d)), "token/class")
        self.params["token/pos"] = parameter(
            0.02 * rng.standard_normal((cfg.tokens, d)), "token/pos")
        for k in range(cfg.num_blocks):
            p = f"block{k}"
            init_layer_norm(self.params, f"{p}/ln1", d)
            for proj in ("wq", "wk", "wv", "wo"):
                init_linear(self.params, f"{p}/attn/{proj}", d, d, rng)
            init_layer_norm(self.params, f"{p}/ln2", d)
            init_linear(self.params, f"{p}/mlp/fc1", d, cfg.mlp_ratio * d, rng)
            init_linear(self.params, f"{p}/mlp/fc2", cfg.mlp_ratio * d, d, rng)
        init_layer_norm(self.params, "head/ln", d)
        init_linear(self.params, "head", d, d, rng)
        self._init_action_head(rng)

    def embed(self, traj: Tensor, pipeline: str) -> Tensor:
        """All LSTM hidden outputs for one trajectory, (B, n, d)."""
        n = self.cfg.long_len if pipeline == "long" else self.cfg.short_len
        hidden, _ = embed_trajectory(self.params, pipeline, traj, n,
                                     self.cfg.embed_dim)
        return hidden

    def assemble(self, h_l: Tensor, h_s: Tensor) -> Tensor:
        """[class token; long rows; short rows] + position embedding."""
        batch = h_l.shape[0]
        d = self.cfg.embed_dim
        token = ad.add(self.params["token/class"],
                       Tensor(np.zeros((batch, 1, d))))
        z0 = ad.concat([token, h_l, h_s], axis=1)
        return ad.add(z0, self.params["token/pos"])

    def _attention(self, block: str, x: Tensor) -> Tensor:
        cfg = self.cfg
        batch, n, d = x.shape
        dh = d // cfg.num_heads

        def heads(t: Tensor) -> Tensor:
            return ad.transpose(ad.reshape(t, (batch, n, cfg.num_heads, dh)),
                                (0, 2, 1, 3))

        q = heads(apply_linear(self.params, f"{block}/attn/wq", x))
        k = heads(apply_linear(self.params, f"{block}/attn/wk", x))
        v = heads(apply_linear(self.params, f"{block}/attn/wv", x))
        scores = ad.mul(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))),
                        1.0 / math.sqrt(dh))
        mixed = ad.matmul(ad.softmax(scores), v)
        merged = ad.reshape(ad.transpose(mixed, (0, 2, 1, 3)), (batch, n, d))
        return apply_linear(self.params, f"{block}/attn/wo", merged)

    def encode(self, z0: Tensor) -> Tensor:
        """Pre-norm encoder stack; returns the class-token readout (B, d)."""
        z = z0
        for k in range(self.cfg.num_blocks):
            p = f"block{k}"
            z = ad.add(z, self._attention(
                p, apply_layer_norm(self.params, f"{p}/ln1", z)))
            zn = apply_layer_norm(self.params, f"{p}/ln2", z)
            mlp = apply_linear(self.params, f"{p}/mlp/fc2",
                               ad.gelu(apply_linear(self.params,
                                                    f"{p}/mlp/fc1", zn)))
            z = ad.add(z, mlp)
        batch = z.shape[0]
        row0 = ad.reshape(ad.slice_axis(z, 1, 0, 1),
                          (batch, self.cfg.embed_dim))
        return apply_linear(self.params, "head",
                            apply_layer_norm(self.params, "head/ln", row0))

    def _trunk(self, s_l: Tensor, s_s: Tensor) -> Tensor:
        h_l = self.embed(s_l, "long")
        h_s = self.embed(s_s, "short")
        return self.encode(self.assemble(h_l, h_s))


class ShortLstmActor(ActorBase):
    """Baseline: single LSTM over the dense short trajectory."""

    def __init__(self, cfg: NetworkConfig, rng: np.random.Generator):
        super().__init__(cfg)
        d = cfg.embed_dim
        init_input_pipeline(self.params, "short", d, rng)
        init_layer_norm(self.params, "head/ln", d)
        init_linear(self.params, "head", d, d, rng)
        self._init_action_head(rng)

    def _trunk(self, s_l: Tensor, s_s: Tensor) -> Tensor:
        _, last = embed_trajectory(self.params, "short", s_s,
                                   self.cfg.short_len, self.cfg.embed_dim)
        return apply_linear(self.params, "head",
                            apply_layer_norm(self.params, "head/ln", last))


class DualLstmActor(ActorBase):
    """Baseline: both pipelines, terminal states concatenated, no encoder."""

    def __init__(self, cfg: NetworkConfig, rng: np.random.Generator):
        super().__init__(cfg)
        d = cfg.embed_dim
        init_input_pipeline(self.params, "long", d, rng)
        init_input_pipeline(self.params, "short", d, rng)
        init_linear(self.params, "fuse", 2 * d, d, rng)
        init_layer_norm(self.params, "head/ln", d)
        init_linear(self.params, "head", d, d, rng)
        self._init_action_head(rng)

    def _trunk(self, s_l: Tensor, s_s: Tensor) -> Tensor:
        _, last_l = embed_trajectory(self.params, "long", s_l,
                                     self.cfg.long_len, self.cfg.embed_dim)
        _, last_s = embed_trajectory(self.params, "short", s_s,
                                     self.cfg.short_len, self.cfg.embed_dim)
        fused = ad.relu(apply_linear(self.params, "fuse",
                                     ad.concat([last_l, last_s], axis=-1)))
        return apply_linear(self.params, "head",
                            apply_layer_norm(self.params, "head/ln", fused))


def build_actor(cfg: NetworkConfig, rng: np.random.Generator) -> ActorBase:
    if cfg.arch == "temporal_fusion":
        return TemporalFusionActor(cfg, rng)
    if cfg.arch == "lstm":
        return ShortLstmActor(cfg, rng)
    if cfg.arch == "dual_lstm":
        return DualLstmActor(cfg, rng)
    raise ConfigError(f"unknown architecture {cfg.arch!r}")
