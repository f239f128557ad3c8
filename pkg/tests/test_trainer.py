import numpy as np
import pytest

from modqn.agent import Agent, AgentConfig
from modqn.envs import EnvSpec, build_env
from modqn.metrics import hypervolume, nondominated_filter
from modqn.net import NetworkSpec
from modqn.scalarize import linear_spec, tlo_spec
from modqn.trainer import (
    EvalRecord,
    TrialSpec,
    greedy_eval,
    merge_eval_history,
    run_parallel,
    run_sequential,
    run_trial,
    write_merged_front_csv,
    write_trace_csv,
    write_trainlog_csv,
)

LIN = linear_spec([0.5, 0.5])
DST3 = EnvSpec("dst", width=3)


def small_config(**overrides):
    base = dict(
        scalarization=LIN,
        warmup_steps=50,
        batch_size=8,
        replay_capacity=500,
        training_steps=300,
        anneal_steps=250,
        target_sync_period=100,
    )
    base.update(overrides)
    return AgentConfig(**base)


def down_diving_agent():
    """An agent whose greedy policy is DOWN in every cell: head weight 1
    on the (objective 0, action 1) output unit for every input feature."""
    spec = NetworkSpec((18,), (), 4, 2)
    agent = Agent(spec, small_config(), seed=0)
    agent.online.weights[0][:, 1] = 1.0  # unit index = objective * 4 + action
    return agent


# ---------------------------------------------------------------- greedy_eval


def test_greedy_eval_straight_down_collects_nearest_treasure():
    env = build_env(DST3)
    total, decisions, frames = greedy_eval(env, down_diving_agent())
    assert total.tolist() == [1.0, -3.0]
    assert decisions == 3
    assert frames == 3


def test_greedy_eval_untrained_agent_times_out():
    # Fresh head: all Q are 0.0, ties resolve to action 0 (up), the
    # agent bumps against the surface until the frame cap.
    env = build_env(DST3)
    agent = Agent(NetworkSpec((18,), (), 4, 2), small_config(), seed=0)
    total, decisions, frames = greedy_eval(env, agent)
    assert total.tolist() == [0.0, -100.0]
    assert decisions == 100
    assert frames == 100


def test_greedy_eval_mutates_nothing():
    env = build_env(DST3)
    agent = down_diving_agent()
    replay_len = len(agent.replay)
    steps = agent.step_count
    weights_before = [w.copy() for w in agent.online.weights]
    rng_before = agent._act_rng.bit_generator.state
    greedy_eval(env, agent)
    assert len(agent.replay) == replay_len
    assert agent.step_count == steps
    assert all(np.array_equal(a, b) for a, b in zip(agent.online.weights, weights_before))
    assert agent._act_rng.bit_generator.state == rng_before


# ---------------------------------------------------------------- run_trial


def spec_for(seed, scal=LIN, **overrides):
    return TrialSpec(DST3, small_config(scalarization=scal, **overrides),
                     eval_period=100, seed=seed)


def assert_logs_equal(a, b):
    assert len(a.evals) == len(b.evals)
    for ra, rb in zip(a.evals, b.evals):
        assert ra.step == rb.step
        assert np.array_equal(ra.episode_return, rb.episode_return)
        assert ra.episode_len == rb.episode_len
    assert len(a.trace) == len(b.trace)
    for (sa, va), (sb, vb) in zip(a.trace, b.trace):
        assert sa == sb
        assert np.array_equal(va, vb)


def test_run_trial_is_deterministic():
    assert_logs_equal(run_trial(spec_for(3)), run_trial(spec_for(3)))


def test_eval_grid_covers_warmup():
    spec = TrialSpec(
        DST3, small_config(warmup_steps=100, training_steps=200), eval_period=50, seed=0
    )
    log = run_trial(spec)
    assert [rec.step for rec in log.evals] == [50, 100, 150, 200]


def test_trace_records_every_finished_episode():
    log = run_trial(spec_for(0))
    assert log.trace  # 300 random-ish decisions finish at least one episode
    steps = [s for s, _ in log.trace]
    assert steps == sorted(steps)
    assert all(1 <= s <= 300 for s in steps)
    for _, ret in log.trace:
        assert ret.shape == (2,)
        assert ret[1] <= -1.0  # every episode costs time


def test_on_eval_streams_records_in_order():
    seen = []
    log = run_trial(spec_for(1), on_eval=seen.append)
    assert len(seen) == len(log.evals)
    for got, kept in zip(seen, log.evals):
        assert got is kept


def test_frame_accounting_grid():
    log = run_trial(spec_for(2))
    assert log.frames_train == 300  # one frame per decision, repeat 1
    assert log.frames_eval == sum(rec.episode_len for rec in log.evals)


def test_frame_accounting_mountain_car():
    spec = TrialSpec(
        EnvSpec("mountain_car"),
        small_config(scalarization=linear_spec([1.0, 0.0, 0.0]), warmup_steps=20,
                     training_steps=120, action_repeat=5, replay_capacity=200),
        eval_period=60,
        seed=0,
    )
    log = run_trial(spec)
    assert 120 <= log.frames_train <= 5 * 120
    assert 2 <= log.frames_eval <= 2 * 100  # two greedy episodes, 100-frame cap


def test_trial_spec_validation():
    with pytest.raises(ValueError):
        TrialSpec(DST3, small_config(), eval_period=0)
    with pytest.raises(ValueError):
        TrialSpec(DST3, small_config(warmup_steps=400, replay_capacity=500))


# ---------------------------------------------------------------- merging


def test_merge_places_sequential_trials_end_to_end():
    specs = [spec_for(0), spec_for(1)]
    logs, merged = run_sequential(specs)
    assert [rec.step for rec in logs[0].evals] == [100, 200, 300]
    assert [rec.step for rec in logs[1].evals] == [100, 200, 300]
    assert [step for step, _ in merged] == [100, 200, 300, 400, 500, 600]
    assert merged[0][1].shape == (1, 2)  # only trial 0 has evaluated
    assert merged[-1][1].shape == (2, 2)


def test_sequential_single_trial_matches_run_trial():
    logs, merged = run_sequential([spec_for(4)])
    assert_logs_equal(logs[0], run_trial(spec_for(4)))
    assert [step for step, _ in merged] == [100, 200, 300]


def test_merge_keeps_each_trials_best_by_its_own_preference():
    specs = [spec_for(0), spec_for(0, scal=tlo_spec([20.0], [0.5, 0.5]))]
    histories = [
        [EvalRecord(100, np.array([1.0, -3.0]), 3),
         EvalRecord(200, np.array([100.0, -7.0]), 7),
         EvalRecord(300, np.array([1.0, -3.0]), 3)],
        [EvalRecord(100, np.array([26.25, -5.0]), 5),
         EvalRecord(200, np.array([1.0, -3.0]), 3)],
    ]
    merged = merge_eval_history(histories, specs, [0, 0])
    # Trial 0 scores (100,-7) highest under even weights and keeps it at
    # step 300; trial 1's TLO(20) prefers (26.25,-5) throughout.
    final = {tuple(p) for p in merged[-1][1]}
    assert final == {(100.0, -7.0), (26.25, -5.0)}


def test_merged_hypervolume_dominates_individual_trials():
    specs = [spec_for(0), spec_for(1, scal=linear_spec([0.01, 0.99]))]
    logs, merged = run_parallel(specs)
    ref = (0.0, -25.0)
    front = nondominated_filter([tuple(p) for p in merged[-1][1]])
    merged_hv = hypervolume(front, ref)
    for log in logs:
        points = [rec.episode_return for rec in log.evals]
        own = hypervolume(nondominated_filter(points), ref)
        assert merged_hv >= own - 1e-12


def test_shared_grid_validation():
    with pytest.raises(ValueError):
        run_sequential([])
    mc = TrialSpec(
        EnvSpec("mountain_car"),
        small_config(scalarization=linear_spec([1.0, 0.0, 0.0]), action_repeat=5),
        eval_period=100,
    )
    with pytest.raises(ValueError):
        run_sequential([spec_for(0), mc])
    other_grid = TrialSpec(DST3, small_config(), eval_period=50)
    with pytest.raises(ValueError):
        run_parallel([spec_for(0), other_grid])


# ---------------------------------------------------------------- parallel


def test_parallel_workers_are_isolated():
    specs = [spec_for(7), spec_for(8, scal=linear_spec([0.01, 0.99]))]
    logs, _ = run_parallel(specs)
    for spec, log in zip(specs, logs):
        assert not log.failed
        assert_logs_equal(log, run_trial(spec))


def test_failed_worker_keeps_partial_results():
    # The second trial's network does not fit the observation shape, so
    # its first post-warmup forward pass blows up before any evaluation.
    bad = TrialSpec(
        DST3,
        small_config(),
        eval_period=100,
        seed=1,
        network=NetworkSpec((5,), (), 4, 2),
    )
    logs, merged = run_parallel([spec_for(6), bad])
    good_log, bad_log = logs
    assert not good_log.failed
    assert_logs_equal(good_log, run_trial(spec_for(6)))
    assert bad_log.failed
    assert "ValueError" in bad_log.error
    assert bad_log.evals == []
    assert [step for step, _ in merged] == [100, 200, 300]
    assert all(points.shape == (1, 2) for _, points in merged)


# ---------------------------------------------------------------- csv output


def test_trainlog_csv_schema(tmp_path):
    log = run_trial(spec_for(0))
    path = tmp_path / "trainlog.csv"
    write_trainlog_csv(log, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,r_1,r_2,episode_len"
    assert len(lines) == 1 + len(log.evals)
    first = lines[1].split(",")
    assert int(first[0]) == 100
    assert float(first[1]) == log.evals[0].episode_return[0]


def test_trace_csv_schema(tmp_path):
    log = run_trial(spec_for(0))
    path = tmp_path / "trace.csv"
    write_trace_csv(log, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,r_1,r_2"
    assert len(lines) == 1 + len(log.trace)


def test_merged_front_csv_schema(tmp_path):
    _, merged = run_sequential([spec_for(0), spec_for(1)])
    path = tmp_path / "merged.csv"
    write_merged_front_csv(merged, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,r_1,r_2"
    assert len(lines) == 1 + sum(len(points) for _, points in merged)


def test_identical_runs_write_identical_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trainlog_csv(run_trial(spec_for(5)), a)
    write_trainlog_csv(run_trial(spec_for(5)), b)
    assert a.read_bytes() == b.read_bytes()
