"""Shared building blocks for the actor and critic networks.

Parameters live in flat name->Tensor dicts so checkpointing, optimizers, and
target-network blending all operate on plain manifests.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, glorot_uniform, parameter
from .errors import DimensionError
from .observations import STATE_DIM


def init_linear(params: dict, name: str, in_dim: int, out_dim: int,
                rng: np.random.Generator) -> None:
    params[f"{name}/W"] = parameter(glorot_uniform((in_dim, out_dim), rng),
                                    f"{name}/W")
    params[f"{name}/b"] = parameter(np.zeros(out_dim), f"{name}/b")


def apply_linear(params: dict, name: str, x: Tensor) -> Tensor:
    return ad.add(ad.matmul(x, params[f"{name}/W"]), params[f"{name}/b"])


def init_layer_norm(params: dict, name: str, dim: int) -> None:
    params[f"{name}/gain"] = parameter(np.ones(dim), f"{name}/gain")
    params[f"{name}/bias"] = parameter(np.zeros(dim), f"{name}/bias")


def apply_layer_norm(params: dict, name: str, x: Tensor) -> Tensor:
    return ad.layer_norm(x, params[f"{name}/gain"], params[f"{name}/bias"])


def init_lstm(params: dict, name: str, in_dim: int, width: int,
              rng: np.random.Generator) -> None:
    """Fused-gate LSTM weights; forget-gate bias starts at 1.0."""
    params[f"{name}/wx"] = parameter(glorot_uniform((in_dim, 4 * width), rng),
                                     f"{name}/wx")
    params[f"{name}/wh"] = parameter(glorot_uniform((width, 4 * width), rng),
                                     f"{name}/wh")
    bias = np.zeros(4 * width)
    bias[width:2 * width] = 1.0
    params[f"{name}/b"] = parameter(bias, f"{name}/b")


def init_input_pipeline(params: dict, prefix: str, width: int,
                        rng: np.random.Generator) -> None:
    init_linear(params, f"{prefix}/in_proj", STATE_DIM, width, rng)
    init_lstm(params, f"{prefix}/lstm", width, width, rng)


def embed_trajectory(params: dict, prefix: str, traj: Tensor,
                     expected_len: int, width: int) -> tuple[Tensor, Tensor]:
    """Linear + ReLU per row, then an LSTM scan from zero state.

    Returns (all hidden outputs (B, n, d), final hidden (B, d)).
    """
    if traj.ndim != 3 or traj.shape[-1] != STATE_DIM:
        raise DimensionError(f"{prefix}: trajectory must be (batch, n, "
                             f"{STATE_DIM}), got {traj.shape}")
    if traj.shape[1] != expected_len:
        raise DimensionError(f"{prefix}: expected {expected_len} rows, got "
                             f"{traj.shape[1]}")
    batch = traj.shape[0]
    x = ad.relu(apply_linear(params, f"{prefix}/in_proj", traj))
    hidden = ad.lstm_scan(x, params[f"{prefix}/lstm/wx"],
                          params[f"{prefix}/lstm/wh"],
                          params[f"{prefix}/lstm/b"])
    last = ad.reshape(ad.slice_axis(hidden, 1, expected_len - 1, expected_len),
                      (batch, width))
    return hidden, last


def set_requires_grad(params: dict[str, Tensor], flag: bool) -> None:
    for p in params.values():
        p.requires_grad = flag


def polyak_blend(target: dict[str, Tensor], source: dict[str, Tensor],
                 tau: float) -> None:
    """target <- tau * source + (1 - tau) * target, elementwise."""
    if target.keys() != source.keys():
        raise DimensionError("polyak_blend: parameter manifests differ")
    for name, src in source.items():
        tgt = target[name]
        tgt.data *= (1.0 - tau)
        tgt.data += tau * src.data
