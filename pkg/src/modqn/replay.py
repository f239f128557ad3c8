"""Uniform experience replay over preallocated numpy storage.

The buffer is a ring: once full, new transitions overwrite the oldest.
Sampling is uniform with replacement and only ever touches slots that
hold real data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NotReadyError(RuntimeError):
    """Raised when sampling is requested before enough data exists."""


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: np.ndarray
    next_state: np.ndarray
    terminal: bool


@dataclass(frozen=True)
class Batch:
    """Stacked sample: states (b, *obs), actions (b,), rewards (b, n),
    next_states (b, *obs), terminals (b,)."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


class ReplayBuffer:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._cursor = 0
        self._size = 0
        self._states: np.ndarray | None = None
        self._actions: np.ndarray | None = None
        self._rewards: np.ndarray | None = None
        self._next_states: np.ndarray | None = None
        self._terminals: np.ndarray | None = None

    def __len__(self) -> int:
        return self._size

    def _allocate(self, t: Transition) -> None:
        obs_shape = np.asarray(t.state).shape
        n_obj = np.asarray(t.reward).shape[0]
        self._states = np.empty((self.capacity, *obs_shape))
        self._next_states = np.empty((self.capacity, *obs_shape))
        self._actions = np.empty(self.capacity, dtype=np.int64)
        self._rewards = np.empty((self.capacity, n_obj))
        self._terminals = np.empty(self.capacity, dtype=bool)

    def push(self, t: Transition) -> None:
        state = np.asarray(t.state, dtype=float)
        next_state = np.asarray(t.next_state, dtype=float)
        reward = np.asarray(t.reward, dtype=float)
        if reward.ndim != 1 or state.shape != next_state.shape:
            raise ValueError("malformed transition")
        if self._states is None:
            self._allocate(t)
        assert self._states is not None
        if state.shape != self._states.shape[1:] or reward.shape != self._rewards.shape[1:]:
            raise ValueError("transition shape differs from earlier transitions")
        i = self._cursor
        self._states[i] = state
        self._actions[i] = int(t.action)
        self._rewards[i] = reward
        self._next_states[i] = next_state
        self._terminals[i] = bool(t.terminal)
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _draw(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        # With-replacement draws are well-defined for any non-empty
        # buffer, batch_size included (a 1-item buffer yields copies).
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self._size == 0:
            raise NotReadyError("buffer is empty")
        return rng.integers(0, self._size, size=batch_size)

    def sample_batch(self, batch_size: int, rng: np.random.Generator) -> Batch:
        idx = self._draw(batch_size, rng)
        return Batch(
            self._states[idx],
            self._actions[idx],
            self._rewards[idx],
            self._next_states[idx],
            self._terminals[idx],
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """Same draw as ``sample_batch``, materialized one transition at
        a time."""
        idx = self._draw(batch_size, rng)
        return [
            Transition(
                self._states[i].copy(),
                int(self._actions[i]),
                self._rewards[i].copy(),
                self._next_states[i].copy(),
                bool(self._terminals[i]),
            )
            for i in idx
        ]
