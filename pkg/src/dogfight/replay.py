"""FIFO replay of trajectory-pair transitions.

Storage is float32 ring arrays that grow geometrically up to the configured
capacity; batches come back as float64 for the networks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class TransitionRecord:
    s_s: np.ndarray          # (n_s, 33)
    s_l: np.ndarray          # (n_l, 33)
    action: np.ndarray       # (4,)
    reward: float
    next_s_s: np.ndarray
    next_s_l: np.ndarray
    done: float              # 1.0 only for true terminal states


@dataclass
class Batch:
    s_s: np.ndarray
    s_l: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_s_s: np.ndarray
    next_s_l: np.ndarray
    done: np.ndarray

    def __len__(self) -> int:
        return self.reward.shape[0]


class ReplayBuffer:
    def __init__(self, capacity: int, short_shape: tuple[int, int],
                 long_shape: tuple[int, int], action_dim: int = 4):
        if capacity < 1:
            raise ContractError("replay capacity must be >= 1")
        self.capacity = capacity
        self._short_shape = short_shape
        self._long_shape = long_shape
        self._action_dim = action_dim
        self._allocated = 0
        self._size = 0
        self._head = 0

    def _grow(self, at_least: int) -> None:
        new = max(1024, self._allocated * 2, at_least)
        new = min(new, self.capacity)
        if new <= self._allocated:
            return
        def grown(name, shape):
            fresh = np.zeros((new,) + shape, dtype=np.float32)
            if self._allocated:
                fresh[:self._size] = getattr(self, name)[:self._size]
            return fresh
        self.s_s = grown("s_s", self._short_shape)
        self.s_l = grown("s_l", self._long_shape)
        self.action = grown("action", (self._action_dim,))
        self.reward = grown("reward", ())
        self.next_s_s = grown("next_s_s", self._short_shape)
        self.next_s_l = grown("next_s_l", self._long_shape)
        self.done = grown("done", ())
        self._allocated = new

    def __len__(self) -> int:
        return self._size

    def add(self, rec: TransitionRecord) -> None:
        if self._allocated < self.capacity and self._size >= self._allocated:
            self._grow(self._size + 1)
        i = self._head
        self.s_s[i] = rec.s_s
        self.s_l[i] = rec.s_l
        self.action[i] = rec.action
        self.reward[i] = rec.reward
        self.next_s_s[i] = rec.next_s_s
        self.next_s_l[i] = rec.next_s_l
        self.done[i] = rec.done
        self._head = (self._head + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if self._size == 0:
            raise ContractError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, self._size, size=batch_size)
        return Batch(
            s_s=self.s_s[idx].astype(np.float64),
            s_l=self.s_l[idx].astype(np.float64),
            action=self.action[idx].astype(np.float64),
            reward=self.reward[idx].astype(np.float64),
            next_s_s=self.next_s_s[idx].astype(np.float64),
            next_s_l=self.next_s_l[idx].astype(np.float64),
            done=self.done[idx].astype(np.float64),
        )

    def state_arrays(self) -> dict[str, np.ndarray]:
        n = self._size
        if n == 0:
            self._grow(1)
        return {
            "replay/s_s": self.s_s[:n], "replay/s_l": self.s_l[:n],
            "replay/action": self.action[:n], "replay/reward": self.reward[:n],
            "replay/next_s_s": self.next_s_s[:n],
            "replay/next_s_l": self.next_s_l[:n], "replay/done": self.done[:n],
            "replay/head": np.array(float(self._head)),
        }

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        n = arrays["replay/reward"].shape[0]
        if n > self.capacity:
            raise ContractError(f"resume replay holds {n} records, capacity "
                                f"is {self.capacity}")
        self._grow(max(1, n))
        self._size = n
        self._head = int(arrays["replay/head"]) % max(1, self.capacity)
        for name in ("s_s", "s_l", "action", "reward", "next_s_s",
                     "next_s_l", "done"):
            getattr(self, name)[:n] = arrays[f"replay/{name}"]
