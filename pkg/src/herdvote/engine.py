"""Stochastic simulation loop: pick agent, poll group, decide, act, record.

Each time step:

  1. a uniformly random agent is picked and its group (size s) is polled,
  2. the tally is classified against the threshold T = x * s,
  3. Buy  -> net return +s, group stays intact
     Sell -> net return -s, group stays intact
     Merge -> the group joins the group of a uniformly random agent outside
              itself (no-op when it already spans the whole population)
     Fragment -> the group breaks into singletons, net return 0
  4. the shared history shifts in the sign of the net return (no trade,
     no movement).

Returns are recorded only after the configured equilibration window.
A run is fully determined by its config: the seed feeds two independent
generator streams, one that draws the strategy tables (agent 0 first, then
agent 1, ...) and one that drives the dynamics.  The dynamics stream is
consumed in a fixed documented order per step: [agent pick][single-agent
vote draw, iid mode only][tie-break][merge-target rejections]; scalar
uniforms come from an internal pre-drawn block of the dynamics stream, and
multi-agent iid tallies are drawn directly as multinomials.

Trading groups staying intact is a deliberate reading of the rules: only
the no-consensus outcome disperses a group, so the balance equations in
`meanfield` carry no trade-loss term.  Herding dynamics in which trading
groups *do* disperse (as in `ez`) can be emulated for sensitivity studies
with `disperse_after_trade=True`; that switch is not part of the voting
model.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .population import Partition
from .strategy import VoteMode, assign_strategies, history_index, update_history
from .voting import Decision

_THIRDS = np.full(3, 1.0 / 3.0)
_BUF_SIZE = 1 << 16


@dataclass
class SimConfig:
    n_agents: int
    x: float
    total_steps: int
    equilibration_steps: int | None = None  # default: 10% of total_steps
    memory: int = 2
    initial_history: tuple = (1, 1)
    vote_mode: VoteMode = VoteMode.STRATEGY_DRIVEN
    seed: int = 1
    rescale_k: int = 2
    disperse_after_trade: bool = False  # sensitivity switch, off in the model

    def __post_init__(self):
        if self.equilibration_steps is None:
            self.equilibration_steps = self.total_steps // 10
        self.vote_mode = VoteMode(self.vote_mode)
        self.initial_history = tuple(int(b) for b in self.initial_history)
        self.validate()

    def validate(self) -> None:
        if self.n_agents < 2:
            raise ValueError(f"n_agents must be >= 2, got {self.n_agents}")
        if not 0.0 < self.x < 1.0:
            raise ValueError(f"x must be in (0, 1), got {self.x}")
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if not 0 <= self.equilibration_steps < self.total_steps:
            raise ValueError(
                f"equilibration_steps must be in [0, total_steps), got "
                f"{self.equilibration_steps} of {self.total_steps}"
            )
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if len(self.initial_history) != self.memory:
            raise ValueError(
                f"initial_history length {len(self.initial_history)} != memory {self.memory}"
            )
        if any(b not in (0, 1) for b in self.initial_history):
            raise ValueError("initial_history bits must be 0 or 1")
        if self.rescale_k < 1:
            raise ValueError("rescale_k must be >= 1")


class StepEvent(NamedTuple):
    index: int
    decision: Decision
    group_size: int
    net_return: int


@dataclass
class RunSummary:
    n_agents: int
    total_steps: int
    recorded_steps: int
    decision_counts: dict
    trade_fraction: float  # over the recorded (post-equilibration) window
    final_size_histogram: dict
    wall_time_s: float


class SimState:
    """Mutable simulation state; create with `init_state`, advance with `step`."""

    __slots__ = (
        "config", "partition", "strategies", "history", "step_index",
        "decision_counts", "_n", "_x", "_iid", "_disperse", "_rows",
        "_group_votes", "_hist_idx", "_ubuf", "_upos",
    )

    def __init__(self, config: SimConfig, partition: Partition, strategies):
        self.config = config
        self.partition = partition
        self.strategies = strategies
        self.history = config.initial_history
        self.step_index = 0
        self.decision_counts = [0, 0, 0, 0]  # indexed by Decision
        self._n = config.n_agents
        self._x = config.x
        self._iid = config.vote_mode == VoteMode.IID_UNIFORM
        self._disperse = config.disperse_after_trade
        # flat per-agent table rows and per-group vote matrices (strategy mode)
        self._rows = [list(st.entries) for st in strategies] if not self._iid else None
        self._group_votes: dict = {}
        self._hist_idx = history_index(self.history)
        self._ubuf: list = []
        self._upos = 0

    def group_vote_matrix(self, group: int):
        """Cached per-history tally of a group (size >= 2), strategy mode only."""
        return self._group_votes.get(group)


def init_state(config: SimConfig) -> tuple[SimState, np.random.Generator]:
    """Build the initial state and the dynamics generator for a config.

    Stream discipline: SeedSequence(seed) spawns (strategy stream, dynamics
    stream) in that order; strategy tables are drawn before anything else.
    """
    strat_seq, dyn_seq = np.random.SeedSequence(config.seed).spawn(2)
    strat_rng = np.random.Generator(np.random.PCG64(strat_seq))
    strategies = assign_strategies(config.n_agents, config.memory, strat_rng)
    state = SimState(config, Partition.singletons(config.n_agents), strategies)
    return state, np.random.Generator(np.random.PCG64(dyn_seq))


def step(state: SimState, rng: np.random.Generator) -> StepEvent:
    """Advance the simulation by one time step."""
    buf = state._ubuf
    pos = state._upos
    if pos >= len(buf) - 16:
        buf = rng.random(_BUF_SIZE).tolist()
        state._ubuf = buf
        pos = 0
    n = state._n
    part = state.partition
    group_of = part._group_of
    members = part._members

    agent = int(buf[pos] * n)
    pos += 1
    g = group_of[agent]
    mem = members[g]
    s = len(mem)

    # poll
    if state._iid:
        if s == 1:
            v = int(buf[pos] * 3)
            pos += 1
            b = 1 if v == 0 else 0
            sc = 1 if v == 1 else 0
            w = 1 if v == 2 else 0
        else:
            # plain ints: numpy scalar comparisons turn the tie count below
            # into a logical-or instead of a sum
            b, sc, w = rng.multinomial(s, _THIRDS).tolist()
    else:
        if s == 1:
            v = state._rows[agent][state._hist_idx]
            b = 1 if v == 0 else 0
            sc = 1 if v == 1 else 0
            w = 1 if v == 2 else 0
        else:
            b, sc, w = state._group_votes[g][state._hist_idx]

    # classify
    threshold = state._x * s
    mx = b if b >= sc else sc
    if w > mx:
        mx = w
    if mx < threshold:
        decision = 3
    else:
        n_tied = (b == mx) + (sc == mx) + (w == mx)
        if n_tied == 1:
            decision = 0 if b == mx else (1 if sc == mx else 2)
        else:
            pick = int(buf[pos] * n_tied)
            pos += 1
            tied = []
            if b == mx:
                tied.append(0)
            if sc == mx:
                tied.append(1)
            if w == mx:
                tied.append(2)
            decision = tied[pick]

    # act
    net = 0
    if decision == 0:
        net = s
    elif decision == 1:
        net = -s
    if decision <= 1 and state._disperse and s > 1:
        _fragment(state, g, mem)
    elif decision == 2:
        if s < n:
            while True:
                target = int(buf[pos] * n)
                pos += 1
                if group_of[target] != g:
                    break
                if pos >= len(buf):
                    buf = rng.random(_BUF_SIZE).tolist()
                    state._ubuf = buf
                    pos = 0
            _merge(state, g, mem, group_of[target])
    elif decision == 3:
        if s > 1:
            _fragment(state, g, mem)

    state._upos = pos
    state.decision_counts[decision] += 1
    index = state.step_index
    state.step_index = index + 1
    if net != 0:
        state.history = update_history(state.history, net)
        state._hist_idx = history_index(state.history)
    return StepEvent(index, Decision(decision), s, net)


def _merge(state: SimState, g: int, mem: list, g2: int) -> None:
    if state._iid:
        state.partition.merge(g, g2)
        return
    mem2 = state.partition._members[g2]
    single1 = mem[0] if len(mem) == 1 else None
    single2 = mem2[0] if len(mem2) == 1 else None
    votes = state._group_votes
    mat1 = votes.pop(g, None)
    mat2 = votes.pop(g2, None)
    survivor = state.partition.merge(g, g2)
    rows = state._rows
    if mat1 is None and mat2 is None:
        r1 = rows[single1]
        r2 = rows[single2]
        mat = [[0, 0, 0] for _ in r1]
        for h, (a1, a2) in enumerate(zip(r1, r2)):
            mat[h][a1] += 1
            mat[h][a2] += 1
    elif mat1 is None or mat2 is None:
        mat = mat2 if mat1 is None else mat1
        row = rows[single1 if mat1 is None else single2]
        for h, action in enumerate(row):
            mat[h][action] += 1
    else:
        mat = mat1
        for r1, r2 in zip(mat, mat2):
            r1[0] += r2[0]
            r1[1] += r2[1]
            r1[2] += r2[2]
    votes[survivor] = mat


def _fragment(state: SimState, g: int, mem: list) -> None:
    if not state._iid:
        state._group_votes.pop(g, None)
    state.partition.fragment(g)


def run(config: SimConfig) -> tuple[np.ndarray, RunSummary]:
    """Full simulation: returns (post-equilibration return series, summary)."""
    t0 = time.perf_counter()
    state, rng = init_state(config)
    equil = config.equilibration_steps
    recorded = config.total_steps - equil
    returns = np.zeros(recorded, dtype=np.int64)
    trades = 0
    for i in range(config.total_steps):
        event = step(state, rng)
        if i >= equil:
            r = event.net_return
            returns[i - equil] = r
            if r != 0:
                trades += 1
        if i % 10_000 == 9_999:
            # cheap running checksum; full scans live in the test suite
            covered = sum(len(m) for m in state.partition._members.values())
            if covered != config.n_agents:
                raise AssertionError(
                    f"partition corrupted at step {i}: {covered} of {config.n_agents} agents"
                )
    counts = state.decision_counts
    summary = RunSummary(
        n_agents=config.n_agents,
        total_steps=config.total_steps,
        recorded_steps=recorded,
        decision_counts={
            "buy": counts[Decision.BUY],
            "sell": counts[Decision.SELL],
            "merge": counts[Decision.MERGE],
            "fragment": counts[Decision.FRAGMENT],
        },
        trade_fraction=trades / recorded,
        final_size_histogram=state.partition.size_histogram(),
        wall_time_s=time.perf_counter() - t0,
    )
    return returns, summary


def rescale_returns(series: np.ndarray, k: int) -> np.ndarray:
    """Sum non-overlapping windows of k consecutive returns; partial tail dropped."""
    if k < 1:
        raise ValueError(f"window length must be >= 1, got {k}")
    series = np.asarray(series)
    if k == 1:
        return series.copy()
    n = (len(series) // k) * k
    return series[:n].reshape(-1, k).sum(axis=1)


# -- return-series files -------------------------------------------------

def write_returns_text(path, series) -> None:
    """One signed integer per line, LF endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{int(v)}\n" for v in series)


def read_returns_text(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return np.array([int(line) for line in fh if line.strip()], dtype=np.int64)


def write_returns_binary(path, series) -> None:
    """Length-prefixed binary: little-endian uint64 count, then int64 values."""
    arr = np.asarray(series, dtype="<i8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(arr)))
        fh.write(arr.tobytes())


def read_returns_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        (count,) = struct.unpack("<Q", fh.read(8))
        data = np.frombuffer(fh.read(count * 8), dtype="<i8")
    if len(data) != count:
        raise ValueError(f"expected {count} values, file holds {len(data)}")
    return data.astype(np.int64)
