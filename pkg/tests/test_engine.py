from collections import Counter, defaultdict

import numpy as np
import pytest

from herdvote.engine import (
    SimConfig,
    init_state,
    read_returns_binary,
    read_returns_text,
    rescale_returns,
    run,
    step,
    write_returns_binary,
    write_returns_text,
)
from herdvote.strategy import StrategyTable, VoteMode, poll_group, update_history
from herdvote.voting import Decision, decision_probabilities


def small_config(**kwargs):
    defaults = dict(n_agents=40, x=0.41, total_steps=20_000, seed=5)
    defaults.update(kwargs)
    return SimConfig(**defaults)


# -- config -------------------------------------------------------------------

def test_config_defaults_and_validation():
    config = SimConfig(n_agents=100, x=0.37, total_steps=1000)
    assert config.equilibration_steps == 100  # 10% default
    assert config.vote_mode is VoteMode.STRATEGY_DRIVEN
    assert config.initial_history == (1, 1)
    with pytest.raises(ValueError):
        SimConfig(n_agents=1, x=0.41, total_steps=100)
    with pytest.raises(ValueError):
        SimConfig(n_agents=10, x=1.2, total_steps=100)
    with pytest.raises(ValueError):
        SimConfig(n_agents=10, x=0.41, total_steps=100, equilibration_steps=100)
    with pytest.raises(ValueError):
        SimConfig(n_agents=10, x=0.41, total_steps=100, initial_history=(1, 1, 0))
    with pytest.raises(ValueError):
        SimConfig(n_agents=10, x=0.41, total_steps=100, initial_history=(1, 2))
    with pytest.raises(ValueError):
        SimConfig(n_agents=10, x=0.41, total_steps=100, rescale_k=0)


def test_config_accepts_mode_strings():
    config = SimConfig(n_agents=10, x=0.41, total_steps=100, vote_mode="iid")
    assert config.vote_mode is VoteMode.IID_UNIFORM


# -- determinism ----------------------------------------------------------------

@pytest.mark.parametrize("mode", [VoteMode.STRATEGY_DRIVEN, VoteMode.IID_UNIFORM])
def test_run_is_deterministic(mode):
    config = small_config(vote_mode=mode)
    r1, s1 = run(config)
    r2, s2 = run(config)
    assert np.array_equal(r1, r2)
    assert s1.decision_counts == s2.decision_counts
    assert s1.final_size_histogram == s2.final_size_histogram


def test_different_seeds_differ():
    r1, _ = run(small_config(seed=1))
    r2, _ = run(small_config(seed=2))
    assert not np.array_equal(r1, r2)


# -- step-level contracts ----------------------------------------------------------

def test_step_events_and_invariants():
    config = small_config(total_steps=4000)
    state, rng = init_state(config)
    for i in range(config.total_steps):
        event = step(state, rng)
        assert event.index == i
        if event.decision in (Decision.BUY, Decision.SELL):
            assert abs(event.net_return) == event.group_size
        else:
            assert event.net_return == 0
        if event.decision == Decision.FRAGMENT:
            assert event.group_size >= 2
        if i % 500 == 0:
            state.partition.check_invariants()
    assert sum(state.decision_counts) == config.total_steps
    state.partition.check_invariants()


def test_history_tracks_return_signs():
    config = small_config(total_steps=3000)
    state, rng = init_state(config)
    history = config.initial_history
    for _ in range(config.total_steps):
        event = step(state, rng)
        history = update_history(history, event.net_return)
    assert state.history == history


def test_group_vote_cache_matches_fresh_poll():
    """The engine's incremental tallies must equal a from-scratch poll."""
    config = small_config(total_steps=5000, n_agents=60)
    state, rng = init_state(config)
    for _ in range(config.total_steps):
        step(state, rng)
    part = state.partition
    for g in list(part.group_ids()):
        members = part.members(g)
        for history in ((0, 0), (0, 1), (1, 0), (1, 1)):
            expected = poll_group(members, state.strategies, history, VoteMode.STRATEGY_DRIVEN, None)
            if len(members) == 1:
                assert state.group_vote_matrix(g) is None
                table = state.strategies[members[0]]
                counts = [0, 0, 0]
                counts[table.action(history)] += 1
                assert tuple(counts) == tuple(expected)
            else:
                from herdvote.strategy import history_index
                row = state.group_vote_matrix(g)[history_index(history)]
                assert tuple(row) == tuple(expected)


def test_conditional_decision_frequencies_iid():
    config = SimConfig(
        n_agents=100, x=0.41, total_steps=250_000, equilibration_steps=0,
        vote_mode=VoteMode.IID_UNIFORM, seed=424242,
    )
    state, rng = init_state(config)
    by_size = defaultdict(Counter)
    for _ in range(config.total_steps):
        event = step(state, rng)
        by_size[event.group_size][event.decision] += 1
    checked = 0
    for size, counter in by_size.items():
        n = sum(counter.values())
        if n < 1000:
            continue
        probs = decision_probabilities(size, config.x)
        expected = {
            Decision.BUY: probs.buy, Decision.SELL: probs.sell,
            Decision.MERGE: probs.merge, Decision.FRAGMENT: probs.fragment,
        }
        for decision, p in expected.items():
            observed = counter.get(decision, 0)
            if p == 0.0:
                assert observed == 0
            else:
                sigma = np.sqrt(n * p * (1 - p))
                assert abs(observed - n * p) < 3.5 * sigma, (size, decision, observed, n * p)
        checked += 1
    assert checked >= 5


def test_whole_population_group_merge_is_noop():
    """At N=2 with x < 1/2 the pair can never fragment: it absorbs, then
    every later merge decision is a no-op on a whole-population group."""
    config = SimConfig(n_agents=2, x=0.40, total_steps=5000,
                       vote_mode=VoteMode.IID_UNIFORM, seed=3)
    returns, summary = run(config)
    assert summary.decision_counts["fragment"] == 0
    assert summary.final_size_histogram == {2: 1}
    assert summary.decision_counts["merge"] > 0


def test_disperse_after_trade_switch():
    """Off-model sensitivity switch: a trading group breaks into singletons."""
    config = SimConfig(n_agents=12, x=0.40, total_steps=10, seed=0,
                       disperse_after_trade=True)
    # everyone waits at history (1,1) and buys at any other history
    wait_at_11 = StrategyTable(2, (0, 0, 0, 2))
    state, rng = init_state(config)
    state.strategies = [wait_at_11] * 12
    state._rows = [list(wait_at_11.entries)] * 12
    for _ in range(200):
        step(state, rng)  # merges only: history frozen at (1,1)
    assert max(s for s in state.partition.size_histogram()) > 1
    state.history = (1, 0)
    state._hist_idx = 2
    for _ in range(200):
        event = step(state, rng)
        assert event.decision == Decision.BUY
        assert state.partition.size_histogram() == {1: 12}
        state.history = (1, 0)  # pin the history; every step is a buy
        state._hist_idx = 2
    state.partition.check_invariants()


def test_equilibration_boundary():
    config = small_config(total_steps=1000, equilibration_steps=999)
    returns, summary = run(config)
    assert len(returns) == 1
    assert summary.recorded_steps == 1


# -- rescaling -----------------------------------------------------------------

def test_rescale_examples():
    assert rescale_returns(np.array([3, 0, -5, 2]), 2).tolist() == [3, -3]
    series = np.array([1, -2, 3, 0, 7])
    assert rescale_returns(series, 1).tolist() == series.tolist()
    assert len(rescale_returns(series, 2)) == 2
    with pytest.raises(ValueError):
        rescale_returns(series, 0)


def test_rescale_is_fresh_array():
    series = np.array([1, 2, 3])
    out = rescale_returns(series, 1)
    out[0] = 99
    assert series[0] == 1


# -- series files -----------------------------------------------------------------

def test_text_round_trip(tmp_path):
    series = np.array([5, 0, -17, 2, 0, -1], dtype=np.int64)
    path = tmp_path / "returns.txt"
    write_returns_text(path, series)
    assert path.read_bytes() == b"5\n0\n-17\n2\n0\n-1\n"
    assert np.array_equal(read_returns_text(path), series)


def test_binary_round_trip_and_layout(tmp_path):
    series = np.array([1, -2, 300], dtype=np.int64)
    path = tmp_path / "returns.bin"
    write_returns_binary(path, series)
    raw = path.read_bytes()
    assert raw[:8] == (3).to_bytes(8, "little")
    assert int.from_bytes(raw[8:16], "little", signed=True) == 1
    assert int.from_bytes(raw[16:24], "little", signed=True) == -2
    assert np.array_equal(read_returns_binary(path), series)


def test_binary_truncation_detected(tmp_path):
    path = tmp_path / "short.bin"
    write_returns_binary(path, np.array([1, 2, 3], dtype=np.int64))
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(ValueError):
        read_returns_binary(path)
