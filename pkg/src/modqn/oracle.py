"""Ground truth for small cases: exhaustive Pareto-front enumeration on
the treasure grid, and tabular per-objective Q-learning to cross-check
what the network-based agent converges to."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import DeepSeaTreasureEnv, DstState, GridSpec, dst_reset, dst_step
from .metrics import nondominated_filter
from .scalarize import ScalarizationSpec, epsilon_greedy, greedy_action, scalarize


def enumerate_dst_front(grid: GridSpec) -> np.ndarray:
    """All achievable (treasure value, -shortest path length) returns,
    reduced to the nondominated set. Breadth-first search over the
    accessible cells gives the shortest step count to each treasure."""
    start = (0, 0)
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for row, col in frontier:
            for drow, dcol in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                cell = (row + drow, col + dcol)
                if cell not in dist and grid.accessible(*cell):
                    dist[cell] = dist[(row, col)] + 1
                    nxt.append(cell)
        frontier = nxt
    candidates = [
        (value, -dist[(row, col)])
        for row, col, value in grid.treasure_cells
        if (row, col) in dist
    ]
    return nondominated_filter(candidates)


@dataclass
class TabularQ:
    """Q-vectors indexed (cell, action, objective)."""

    values: np.ndarray
    alpha: float
    gamma: float


def tabular_moq(
    env,
    scalarization: ScalarizationSpec,
    episodes: int = 5_000,
    alpha: float = 0.1,
    gamma: float = 0.9,
    seed: int = 0,
) -> tuple[TabularQ, np.ndarray]:
    """Per-objective tabular Q-learning with scalarized-greedy action
    selection and bootstrapping (the same policy structure the network
    agent uses). Linear epsilon decay from 1 to 0 across the episode
    budget. Returns the learned table and the final greedy episode
    return."""
    if isinstance(env, GridSpec):
        grid = env
    elif isinstance(env, DeepSeaTreasureEnv):
        grid = env.grid
    else:
        raise ValueError("the tabular oracle needs a discrete-state environment")
    if episodes < 1:
        raise ValueError("episodes must be positive")
    n_cells = grid.rows * grid.cols
    n_actions = 4
    n_obj = 2
    if scalarization.n_objectives != n_obj:
        raise ValueError("scalarization dimension does not match the environment")
    q = np.zeros((n_cells, n_actions, n_obj))
    rng = np.random.default_rng(seed)

    def cell(state: DstState) -> int:
        return state.row * grid.cols + state.col

    for episode in range(episodes):
        epsilon = 1.0 - episode / episodes
        state = dst_reset(grid)
        while True:
            s = cell(state)
            action = epsilon_greedy(scalarize(q[s], scalarization), epsilon, rng)
            raw = dst_step(grid, state, action)
            done = raw.terminal or raw.truncated
            if done:
                bootstrap = 0.0
            else:
                s2 = cell(raw.next_state)
                best = greedy_action(scalarize(q[s2], scalarization))
                bootstrap = gamma * q[s2, best]
            q[s, action] += alpha * (raw.reward + bootstrap - q[s, action])
            state = raw.next_state
            if done:
                break

    table = TabularQ(q, alpha, gamma)
    state = dst_reset(grid)
    total = np.zeros(n_obj)
    while True:
        action = greedy_action(scalarize(q[cell(state)], scalarization))
        raw = dst_step(grid, state, action)
        total += raw.reward
        state = raw.next_state
        if raw.terminal or raw.truncated:
            return table, total
