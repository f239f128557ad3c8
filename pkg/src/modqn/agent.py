"""A Q-learning agent that keeps one Q-value per (action, objective)
pair and picks actions by scalarizing that matrix.

Training follows the usual online/target-network pattern. Per-objective
TD errors are summed into a single loss, so one backward pass updates
every objective's head group at once. Bootstrap targets use the target
network; by default the bootstrap action is chosen by scalarizing the
target network's Q-matrix at the next state (so all objectives
bootstrap from one coherent action), with an independent per-objective
max available behind ``target_mode``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .net import (
    Conv2D,
    Dense,
    NetworkSpec,
    Parameters,
    backward,
    forward,
    init_params,
    init_rmsprop,
    rmsprop_update,
    sync_target,
)
from .replay import Batch, NotReadyError, ReplayBuffer, Transition
from .scalarize import ScalarizationSpec, epsilon_greedy, greedy_action, scalarize

TARGET_MODES = ("scalarized_greedy", "per_objective_max")


@dataclass(frozen=True)
class AgentConfig:
    scalarization: ScalarizationSpec
    gamma: float = 0.9
    learning_rate: float = 1e-4
    epsilon_initial: float = 1.0
    epsilon_final: float = 0.0
    anneal_steps: int = 46_000
    target_sync_period: int = 1_000
    warmup_steps: int = 5_000
    batch_size: int = 32
    replay_capacity: int = 50_000
    training_steps: int = 50_000
    action_repeat: int = 1
    rms_decay: float = 0.99
    rms_epsilon: float = 1e-6
    target_mode: str = "scalarized_greedy"

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma {self.gamma} outside [0, 1]")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        for name in ("epsilon_initial", "epsilon_final"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} {v} outside [0, 1]")
        if self.anneal_steps < 1:
            raise ValueError("anneal_steps must be positive")
        if self.target_sync_period < 1:
            raise ValueError("target_sync_period must be positive")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps may not be negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.replay_capacity < self.batch_size:
            raise ValueError("replay_capacity smaller than batch_size")
        if self.training_steps < 1:
            raise ValueError("training_steps must be positive")
        if self.action_repeat < 1:
            raise ValueError("action_repeat must be >= 1")
        if self.target_mode not in TARGET_MODES:
            raise ValueError(f"target_mode must be one of {TARGET_MODES}")


def epsilon_at(step: int, config: AgentConfig) -> float:
    """Linear anneal from epsilon_initial to epsilon_final over
    anneal_steps training steps, then flat."""
    if step < 0:
        raise ValueError("step may not be negative")
    frac = min(step / config.anneal_steps, 1.0)
    return config.epsilon_initial + (config.epsilon_final - config.epsilon_initial) * frac


def default_network(
    observation_shape: tuple[int, ...], n_actions: int, n_objectives: int
) -> NetworkSpec:
    """Stock architectures: two 64-unit dense layers for flat inputs, a
    three-stage conv stack into a 512-unit dense layer for images."""
    if len(observation_shape) == 1:
        hidden: tuple[Dense | Conv2D, ...] = (Dense(64), Dense(64))
    elif len(observation_shape) == 3:
        hidden = (
            Conv2D(32, kernel=8, stride=4),
            Conv2D(64, kernel=4, stride=2),
            Conv2D(64, kernel=3, stride=1),
            Dense(512),
        )
    else:
        raise ValueError(f"no default architecture for input shape {observation_shape}")
    return NetworkSpec(tuple(observation_shape), hidden, n_actions, n_objectives)


def compute_targets(
    net_spec: NetworkSpec, target_params: Parameters, batch: Batch, config: AgentConfig
) -> np.ndarray:
    """TD targets, one row per transition: reward for terminal ones,
    reward + gamma * target-net bootstrap otherwise."""
    targets = np.array(batch.rewards, dtype=float)
    live = ~np.asarray(batch.terminals, dtype=bool)
    if live.any():
        q_next, _ = forward(net_spec, target_params, batch.next_states[live])
        if config.target_mode == "per_objective_max":
            bootstrap = q_next.max(axis=1)
        else:
            scores = scalarize(q_next, config.scalarization)
            best = np.argmax(scores, axis=1)
            bootstrap = q_next[np.arange(len(best)), best]
        targets[live] += config.gamma * bootstrap
    return targets


class Agent:
    def __init__(self, net_spec: NetworkSpec, config: AgentConfig, seed: int = 0):
        if net_spec.n_objectives != config.scalarization.n_objectives:
            raise ValueError(
                f"network has {net_spec.n_objectives} objectives but the "
                f"scalarization expects {config.scalarization.n_objectives}"
            )
        self.net_spec = net_spec
        self.config = config
        root = np.random.SeedSequence(seed)
        ss_init, ss_act, ss_sample = root.spawn(3)
        self.online = init_params(net_spec, ss_init)
        self.target = self.online.copy()
        self.optimizer = init_rmsprop(
            self.online, config.learning_rate, config.rms_decay, config.rms_epsilon
        )
        self.replay = ReplayBuffer(config.replay_capacity)
        self._act_rng = np.random.default_rng(ss_act)
        self._sample_rng = np.random.default_rng(ss_sample)
        self.step_count = 0  # completed training steps

    @property
    def epsilon(self) -> float:
        return epsilon_at(self.step_count, self.config)

    @property
    def ready(self) -> bool:
        """Enough replay data to both finish warmup and fill a batch."""
        return len(self.replay) >= max(self.config.warmup_steps, self.config.batch_size)

    def q_values(self, obs: np.ndarray) -> np.ndarray:
        """Q-matrix (n_actions, n_objectives) for one observation."""
        q, _ = forward(self.net_spec, self.online, np.asarray(obs)[np.newaxis])
        return q[0]

    def select_action(self, obs: np.ndarray) -> int:
        """Epsilon-greedy on the scalarized Q-matrix; purely random
        while the replay buffer is still warming up."""
        if len(self.replay) < self.config.warmup_steps:
            return int(self._act_rng.integers(self.net_spec.n_actions))
        scores = scalarize(self.q_values(obs), self.config.scalarization)
        return epsilon_greedy(scores, self.epsilon, self._act_rng)

    def greedy_policy_action(self, obs: np.ndarray) -> int:
        """Deterministic greedy choice; consumes no randomness and
        mutates nothing, so evaluation cannot disturb training."""
        return greedy_action(scalarize(self.q_values(obs), self.config.scalarization))

    def observe(self, transition: Transition) -> None:
        self.replay.push(transition)

    def train_step(self) -> float:
        """One gradient step on a uniform replay batch. Returns the
        scalar loss (summed over objectives, averaged over the batch)."""
        if not self.ready:
            raise NotReadyError("replay buffer still warming up")
        batch = self.replay.sample_batch(self.config.batch_size, self._sample_rng)
        targets = compute_targets(self.net_spec, self.target, batch, self.config)
        q, cache = forward(self.net_spec, self.online, batch.states)
        rows = np.arange(len(batch))
        errors = q[rows, batch.actions] - targets
        loss = float(np.mean(np.sum(errors * errors, axis=1)))
        dq = np.zeros_like(q)
        dq[rows, batch.actions] = (2.0 / len(batch)) * errors
        grads = backward(self.net_spec, self.online, cache, dq)
        rmsprop_update(self.online, grads, self.optimizer)
        self.step_count += 1
        if self.step_count % self.config.target_sync_period == 0:
            self._ensure_finite()
            sync_target(self.online, self.target)
        return loss

    def _ensure_finite(self) -> None:
        for arr in self.online.weights + self.online.biases:
            if not np.all(np.isfinite(arr)):
                raise RuntimeError(
                    "training diverged: non-finite weights at target sync"
                )
