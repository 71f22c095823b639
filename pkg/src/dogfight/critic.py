"""Twin Q-networks: LSTM input pipelines, residual MLP, scalar value.

The critic shares the actor's trajectory pipelines in shape only (no weight
sharing); instead of the transformer it concatenates the two terminal LSTM
hidden states with the action and scores the triple through a ReLU residual
block:

    (2d+4) -> linear -> ReLU -> [linear, ReLU, linear] + skip -> ReLU -> 1
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionError
from .networks import (apply_linear, embed_trajectory, init_input_pipeline,
                       init_linear)
from .observations import ACTION_DIM
from .policy import NetworkConfig


class CriticNetwork:
    def __init__(self, cfg: NetworkConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.params: dict[str, Tensor] = {}
        d = cfg.embed_dim
        init_input_pipeline(self.params, "long", d, rng)
        init_input_pipeline(self.params, "short", d, rng)
        init_linear(self.params, "in", 2 * d + ACTION_DIM, d, rng)
        init_linear(self.params, "res/fc1", d, d, rng)
        init_linear(self.params, "res/fc2", d, d, rng)
        init_linear(self.params, "out", d, 1, rng)

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

    def q_value(self, s_l: Tensor, s_s: Tensor, action: Tensor) -> Tensor:
        """Scalar value per batch row, shape (B, 1)."""
        if action.ndim != 2 or action.shape[-1] != ACTION_DIM:
            raise DimensionError(f"q_value: action must be (batch, "
                                 f"{ACTION_DIM}), got {action.shape}")
        _, last_l = embed_trajectory(self.params, "long", s_l,
                                     self.cfg.long_len, self.cfg.embed_dim)
        _, last_s = embed_trajectory(self.params, "short", s_s,
                                     self.cfg.short_len, self.cfg.embed_dim)
        cat = ad.concat([last_l, last_s, action], axis=-1)
        x0 = ad.relu(apply_linear(self.params, "in", cat))
        res = apply_linear(self.params, "res/fc2",
                           ad.relu(apply_linear(self.params, "res/fc1", x0)))
        x1 = ad.relu(ad.add(x0, res))
        return apply_linear(self.params, "out", x1)

    def q_numpy(self, s_l: np.ndarray, s_s: np.ndarray,
                action: np.ndarray) -> np.ndarray:
        """Tape-free evaluation for targets and diagnostics."""
        return self.q_value(Tensor(s_l), Tensor(s_s), Tensor(action)).data
