"""Training orchestration.

``run_trial`` drives one agent through one environment for a fixed
number of decisions: the first ``warmup_steps`` act randomly to seed
the replay buffer, every later decision also takes a gradient step,
and every ``eval_period`` decisions the greedy policy is scored on a
separate environment instance.

``run_sequential`` chains trials end to end on one step axis (trial j's
evaluations land at offset j * training_steps), the way one run after
another would look on a shared progress plot. ``run_parallel`` runs one
worker thread per trial, all evaluating on the same step grid. Both
produce a merged history: at each global step, the set holding every
trial's best evaluation return seen so far (best by that trial's own
scalarization; completed trials keep contributing their final best).
"""

from __future__ import annotations

import csv
import queue
import threading
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agent import Agent, AgentConfig, default_network
from .envs import EnvSpec, build_env
from .net import NetworkSpec
from .replay import Transition
from .scalarize import scalarize


@dataclass(frozen=True)
class TrialSpec:
    env: EnvSpec
    agent: AgentConfig
    eval_period: int = 1_000
    seed: int = 0
    trial_id: str = ""
    network: NetworkSpec | None = None  # default architecture when None

    def __post_init__(self) -> None:
        if self.eval_period < 1:
            raise ValueError("eval_period must be positive")
        if self.agent.training_steps < self.agent.warmup_steps:
            raise ValueError("training_steps must cover the warmup")

    def make_env(self):
        return build_env(self.env, self.agent.action_repeat)


@dataclass(frozen=True)
class EvalRecord:
    step: int
    episode_return: np.ndarray
    episode_len: int  # agent decisions


@dataclass
class TrainLog:
    spec: TrialSpec
    evals: list[EvalRecord]
    trace: list[tuple[int, np.ndarray]]  # (decision step, episode return) per finished episode
    frames_train: int = 0
    frames_eval: int = 0
    failed: bool = False
    error: str | None = None
    agent: Agent | None = field(default=None, repr=False, compare=False)


def greedy_eval(env, agent) -> tuple[np.ndarray, int, int]:
    """Score one episode of the purely greedy policy. Returns (summed
    reward vector, decisions taken, frames consumed). Draws no
    randomness and writes nothing back into the agent."""
    obs = env.reset()
    frames_before = env.frames_consumed
    total = np.zeros(agent.net_spec.n_objectives)
    decisions = 0
    while True:
        result = env.step(agent.greedy_policy_action(obs))
        total += result.reward
        decisions += 1
        obs = result.obs
        if result.terminal or result.truncated:
            return total, decisions, env.frames_consumed - frames_before


def run_trial(spec: TrialSpec, on_eval=None) -> TrainLog:
    """One full training run, deterministic for a given spec + seed.
    ``on_eval`` (if given) receives each EvalRecord as it is produced."""
    env = spec.make_env()
    eval_env = spec.make_env()
    net = spec.network or default_network(
        env.observation_shape, env.n_actions, env.n_objectives
    )
    agent = Agent(net, spec.agent, spec.seed)
    log = TrainLog(spec, [], [], agent=agent)

    obs = env.reset()
    episode_return = np.zeros(env.n_objectives)
    for step in range(1, spec.agent.training_steps + 1):
        action = agent.select_action(obs)
        result = env.step(action)
        agent.observe(
            Transition(obs, action, result.reward, result.obs,
                       result.terminal or result.truncated)
        )
        episode_return += result.reward
        if agent.ready:
            agent.train_step()
        if result.terminal or result.truncated:
            log.trace.append((step, episode_return))
            episode_return = np.zeros(env.n_objectives)
            obs = env.reset()
        else:
            obs = result.obs
        if step % spec.eval_period == 0:
            ret, length, _ = greedy_eval(eval_env, agent)
            record = EvalRecord(step, ret, length)
            log.evals.append(record)
            if on_eval is not None:
                on_eval(record)
    log.frames_train = env.frames_consumed
    log.frames_eval = eval_env.frames_consumed
    return log


def _check_shared_grid(specs: list[TrialSpec]) -> None:
    if not specs:
        raise ValueError("need at least one trial")
    first = specs[0]
    for other in specs[1:]:
        if other.env != first.env:
            raise ValueError("all trials must share one environment")
        if other.eval_period != first.eval_period:
            raise ValueError("all trials must share one eval_period")


def merge_eval_history(
    per_trial: list[list[EvalRecord]],
    specs: list[TrialSpec],
    offsets: list[int],
) -> list[tuple[int, np.ndarray]]:
    """Best-so-far merge of several trials' evaluation records onto one
    step axis. Each snapshot is (global step, array of one point per
    trial that has evaluated by then)."""
    events = []  # (global step, trial index, return vector)
    for j, records in enumerate(per_trial):
        for rec in records:
            events.append((offsets[j] + rec.step, j, rec.episode_return))
    events.sort(key=lambda e: (e[0], e[1]))
    best: dict[int, np.ndarray] = {}
    best_score: dict[int, float] = {}
    merged: list[tuple[int, np.ndarray]] = []
    i = 0
    while i < len(events):
        step = events[i][0]
        while i < len(events) and events[i][0] == step:
            _, j, ret = events[i]
            score = float(
                scalarize(ret[np.newaxis, :], specs[j].agent.scalarization)[0]
            )
            if j not in best or score > best_score[j]:
                best[j] = ret
                best_score[j] = score
            i += 1
        merged.append((step, np.array([best[j] for j in sorted(best)])))
    return merged


def run_sequential(
    specs: list[TrialSpec],
) -> tuple[list[TrainLog], list[tuple[int, np.ndarray]]]:
    _check_shared_grid(specs)
    logs = [run_trial(spec) for spec in specs]
    offsets = list(np.cumsum([0] + [s.agent.training_steps for s in specs[:-1]]))
    merged = merge_eval_history([log.evals for log in logs], specs, offsets)
    return logs, merged


def run_parallel(
    specs: list[TrialSpec], workers: int | None = None
) -> tuple[list[TrainLog], list[tuple[int, np.ndarray]]]:
    """One isolated worker per trial. Each worker's log is bit-identical
    to running the trial alone; a crashed worker marks its trial failed
    (keeping whatever evaluations it had reported) without disturbing
    the others."""
    _check_shared_grid(specs)
    n = len(specs)
    workers = n if workers is None else max(1, workers)
    progress: queue.Queue = queue.Queue()
    logs: list[TrainLog | None] = [None] * n
    collected: list[list[EvalRecord]] = [[] for _ in range(n)]

    def work(idx: int) -> None:
        try:
            log = run_trial(
                specs[idx], on_eval=lambda rec: progress.put(("eval", idx, rec))
            )
            logs[idx] = log
            progress.put(("done", idx, None))
        except BaseException:
            progress.put(("failed", idx, traceback.format_exc()))

    def aggregate() -> None:
        finished = 0
        while finished < n:
            kind, idx, payload = progress.get()
            if kind == "eval":
                collected[idx].append(payload)
            elif kind == "done":
                finished += 1
            else:
                logs[idx] = TrainLog(
                    specs[idx], collected[idx], [], failed=True, error=payload
                )
                finished += 1

    aggregator = threading.Thread(target=aggregate)
    aggregator.start()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for future in [pool.submit(work, i) for i in range(n)]:
            future.result()  # work() never raises; this just joins
    aggregator.join()
    done_logs = [log for log in logs if log is not None]
    merged = merge_eval_history(
        [log.evals for log in done_logs],
        [log.spec for log in done_logs],
        [0] * len(done_logs),
    )
    return done_logs, merged


def write_trainlog_csv(log: TrainLog, path) -> None:
    n = log.spec.agent.scalarization.n_objectives
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["step", *[f"r_{i + 1}" for i in range(n)], "episode_len"])
        for rec in log.evals:
            writer.writerow(
                [rec.step, *[repr(float(v)) for v in rec.episode_return], rec.episode_len]
            )


def write_trace_csv(log: TrainLog, path) -> None:
    n = log.spec.agent.scalarization.n_objectives
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["step", *[f"r_{i + 1}" for i in range(n)]])
        for step, ret in log.trace:
            writer.writerow([step, *[repr(float(v)) for v in ret]])


def write_merged_front_csv(merged, path) -> None:
    if merged:
        n = merged[0][1].shape[1]
    else:
        n = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["step", *[f"r_{i + 1}" for i in range(n)]])
        for step, points in merged:
            for point in points:
                writer.writerow([step, *[repr(float(v)) for v in point]])
