"""Eguiluz-Zimmermann herding baseline.

The classic dispersal-on-trade herding model, used here as the comparison
target that the voting model approaches as its consensus parameter drops
toward one third.  Each step picks a random agent; with probability `a` the
agent's whole group trades (net return +s or -s with equal probability) and
immediately disperses into singletons, otherwise the group merges with the
group of another randomly chosen agent.  For small `a` the stationary group
sizes follow a power law and the distribution of trade sizes has density
tail exponent 3/2.

In the voting model the conditional trade probability decays with group
size, so large groups essentially never trade; here it is constant, so
any particular large group trades more often than a small one.  The two
models are compared on their return-tail statistics only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .engine import RunSummary, StepEvent
from .population import Partition
from .voting import Decision


@dataclass
class EzConfig:
    n_agents: int
    a: float = 0.01  # per-step trade probability
    total_steps: int = 1_000_000
    equilibration_steps: int | None = None  # default: 10% of total_steps
    seed: int = 1

    def __post_init__(self):
        if self.equilibration_steps is None:
            self.equilibration_steps = self.total_steps // 10
        if self.n_agents < 2:
            raise ValueError(f"n_agents must be >= 2, got {self.n_agents}")
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"trade probability must be in (0, 1), got {self.a}")
        if not 0 <= self.equilibration_steps < self.total_steps:
            raise ValueError("equilibration_steps must be in [0, total_steps)")


def ez_step(partition: Partition, a: float, rng, index: int = 0) -> StepEvent:
    """One update: trade-and-disperse with probability a, else merge."""
    n = partition.n_agents
    agent = int(rng.integers(0, n))
    g, s = partition.group_of(agent)
    if rng.random() < a:
        sign = 1 if rng.random() < 0.5 else -1
        partition.fragment(g)
        decision = Decision.BUY if sign > 0 else Decision.SELL
        return StepEvent(index, decision, s, sign * s)
    # merge with the group of another agent; same group means nothing happens
    while True:
        other = int(rng.integers(0, n))
        if other != agent:
            break
    g2, _ = partition.group_of(other)
    if g2 != g:
        partition.merge(g, g2)
    return StepEvent(index, Decision.MERGE, s, 0)


def ez_run(config: EzConfig) -> tuple[np.ndarray, RunSummary]:
    """Run the baseline; mirrors `engine.run` (seeded, post-equilibration series)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    partition = Partition.singletons(config.n_agents)
    equil = config.equilibration_steps
    recorded = config.total_steps - equil
    returns = np.zeros(recorded, dtype=np.int64)
    counts = {"buy": 0, "sell": 0, "merge": 0, "fragment": 0}
    trades = 0
    for i in range(config.total_steps):
        event = ez_step(partition, config.a, rng, i)
        if event.decision == Decision.BUY:
            counts["buy"] += 1
        elif event.decision == Decision.SELL:
            counts["sell"] += 1
        else:
            counts["merge"] += 1
        if i >= equil:
            returns[i - equil] = event.net_return
            if event.net_return != 0:
                trades += 1
    summary = RunSummary(
        n_agents=config.n_agents,
        total_steps=config.total_steps,
        recorded_steps=recorded,
        decision_counts=counts,
        trade_fraction=trades / recorded,
        final_size_histogram=partition.size_histogram(),
        wall_time_s=time.perf_counter() - t0,
    )
    return returns, summary
