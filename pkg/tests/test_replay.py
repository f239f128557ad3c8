import numpy as np
import pytest
from scipy import stats

from modqn.replay import Batch, NotReadyError, ReplayBuffer, Transition


def make(i, n_obj=2):
    return Transition(
        state=np.full(4, float(i)),
        action=i % 3,
        reward=np.full(n_obj, float(i)),
        next_state=np.full(4, float(i) + 0.5),
        terminal=(i % 5 == 0),
    )


def stored_ids(buf, n, rng):
    return {int(t.state[0]) for t in buf.sample(n, rng)}


def test_push_grows_to_capacity_then_evicts_fifo():
    buf = ReplayBuffer(3)
    assert len(buf) == 0
    for i in range(1, 5):
        buf.push(make(i))
        assert len(buf) == min(i, 3)
    rng = np.random.default_rng(0)
    assert stored_ids(buf, 200, rng) == {2, 3, 4}


def test_single_push():
    buf = ReplayBuffer(8)
    buf.push(make(1))
    assert len(buf) == 1


def test_size_pinned_at_capacity():
    buf = ReplayBuffer(5)
    for i in range(50):
        buf.push(make(i))
    assert len(buf) == 5
    assert stored_ids(buf, 500, np.random.default_rng(1)) == {45, 46, 47, 48, 49}


def test_singleton_buffer_samples_itself():
    buf = ReplayBuffer(4)
    buf.push(make(7))
    batch = buf.sample_batch(4, np.random.default_rng(0))
    assert np.all(batch.states[:, 0] == 7.0)
    assert np.all(batch.actions == 7 % 3)


def test_not_ready_on_empty_buffer():
    with pytest.raises(NotReadyError):
        ReplayBuffer(4).sample_batch(1, np.random.default_rng(0))
    with pytest.raises(NotReadyError):
        ReplayBuffer(4).sample(8, np.random.default_rng(0))


def test_sampling_uniformity_chi_squared():
    buf = ReplayBuffer(10)
    for i in range(10):
        buf.push(make(i))
    rng = np.random.default_rng(42)
    draws = 100_000
    ids = buf.sample_batch(draws, rng).states[:, 0].astype(int)
    counts = np.bincount(ids, minlength=10)
    _, p = stats.chisquare(counts)
    assert p > 0.01, f"chi-squared rejected uniformity (p={p:.4f}, counts={counts})"


def test_sampled_items_are_members():
    buf = ReplayBuffer(16)
    for i in range(9):
        buf.push(make(i))
    for t in buf.sample(40, np.random.default_rng(3)):
        i = int(t.state[0])
        assert 0 <= i < 9
        assert t.action == i % 3
        assert t.reward[0] == float(i)
        assert t.terminal == (i % 5 == 0)


def test_seeded_sampling_reproducible():
    buf = ReplayBuffer(32)
    for i in range(20):
        buf.push(make(i))
    a = buf.sample_batch(8, np.random.default_rng(11))
    b = buf.sample_batch(8, np.random.default_rng(11))
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.actions, b.actions)


def test_sample_and_sample_batch_share_the_draw():
    buf = ReplayBuffer(32)
    for i in range(20):
        buf.push(make(i))
    batch = buf.sample_batch(6, np.random.default_rng(5))
    singles = buf.sample(6, np.random.default_rng(5))
    for row, t in zip(batch.states, singles):
        assert np.array_equal(row, t.state)


def test_batch_len():
    buf = ReplayBuffer(8)
    for i in range(8):
        buf.push(make(i))
    assert len(buf.sample_batch(5, np.random.default_rng(0))) == 5


def test_malformed_transitions_rejected():
    buf = ReplayBuffer(4)
    with pytest.raises(ValueError):
        buf.push(Transition(np.zeros(3), 0, np.zeros((2, 2)), np.zeros(3), False))
    with pytest.raises(ValueError):
        buf.push(Transition(np.zeros(3), 0, np.zeros(2), np.zeros(4), False))
    buf.push(make(0))
    with pytest.raises(ValueError):
        buf.push(
            Transition(np.zeros(9), 0, np.zeros(2), np.zeros(9), False)
        )  # shape changed mid-stream


def test_capacity_validation():
    with pytest.raises(ValueError):
        ReplayBuffer(0)
    buf = ReplayBuffer(4)
    buf.push(make(0))
    with pytest.raises(ValueError):
        buf.sample_batch(0, np.random.default_rng(0))


def test_stored_arrays_are_copies():
    buf = ReplayBuffer(4)
    state = np.zeros(3)
    buf.push(Transition(state, 0, np.zeros(2), np.ones(3), False))
    state += 99.0  # caller mutates its array afterwards
    got = buf.sample(1, np.random.default_rng(0))[0]
    assert np.array_equal(got.state, np.zeros(3))
