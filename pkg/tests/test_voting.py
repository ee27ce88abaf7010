import math
from fractions import Fraction

import numpy as np
import pytest

from herdvote.voting import (
    ConsensusParameter,
    Decision,
    VoteTally,
    consensus_probability,
    consensus_threshold,
    decide,
    decision_probabilities,
    enumerate_fragmentation_probability,
    fragmentation_probability,
)

X_GRID = (0.34, 0.35, 0.37, 0.41, 0.45, 0.47, 0.499)


# -- consensus parameter ------------------------------------------------------

@pytest.mark.parametrize("x", [0.0, 1.0, -0.2, 1.5])
def test_consensus_parameter_bounds(x):
    with pytest.raises(ValueError):
        ConsensusParameter(x)


def test_consensus_parameter_regimes():
    assert ConsensusParameter(0.30).regime == "no-fragmentation"
    assert ConsensusParameter(1 / 3).regime == "no-fragmentation"
    assert ConsensusParameter(0.40).regime == "relative-majority"
    assert ConsensusParameter(0.60).regime == "absolute-majority"
    assert not ConsensusParameter(0.30).fragmentation_possible
    assert ConsensusParameter(0.34).fragmentation_possible


def test_threshold_values():
    assert consensus_threshold(5, 0.40) == 2.0
    assert consensus_threshold(1, 0.47) == 0.47
    assert consensus_threshold(10_000, 0.37) == 3700.0
    assert consensus_threshold(5, ConsensusParameter(0.40)) == 2.0
    with pytest.raises(ValueError):
        consensus_threshold(0, 0.4)


# -- decide -------------------------------------------------------------------

def test_decide_clear_majorities():
    rng = np.random.default_rng(0)
    assert decide(VoteTally(3, 1, 1), 0.40, rng) == Decision.BUY
    assert decide(VoteTally(1, 3, 1), 0.40, rng) == Decision.SELL
    assert decide(VoteTally(1, 1, 3), 0.40, rng) == Decision.MERGE
    assert decide(VoteTally(1, 1, 1), 0.40, rng) == Decision.FRAGMENT


def test_decide_count_equal_to_threshold_wins():
    # T = 0.4 * 5 = 2.0 exactly; a strict-max count of 2 meets ">= T"
    rng = np.random.default_rng(0)
    assert decide(VoteTally(2, 1, 2), 0.40, rng) in (Decision.BUY, Decision.MERGE)
    assert decide(VoteTally(2, 0, 1), 0.40, rng) == Decision.BUY


def test_decide_tie_is_fair():
    rng = np.random.default_rng(2024)
    n = 100_000
    outcomes = np.array([decide(VoteTally(2, 2, 0), 0.40, rng) for _ in range(n)])
    n_buy = int(np.sum(outcomes == Decision.BUY))
    assert set(np.unique(outcomes)) == {Decision.BUY, Decision.SELL}
    sigma = math.sqrt(n * 0.25)
    assert abs(n_buy - n / 2) < 3 * sigma


def test_decide_three_way_tie():
    # possible only when x <= 1/3 lets the shared maximum clear the threshold
    rng = np.random.default_rng(5)
    outcomes = {decide(VoteTally(2, 2, 2), 0.30, rng) for _ in range(200)}
    assert outcomes == {Decision.BUY, Decision.SELL, Decision.MERGE}


def test_decide_is_total_on_random_tallies():
    rng = np.random.default_rng(9)
    for _ in range(2000):
        s = int(rng.integers(1, 40))
        votes = rng.multinomial(s, [1 / 3, 1 / 3, 1 / 3])
        x = float(rng.uniform(0.05, 0.95))
        assert decide(VoteTally(*votes), x, rng) in list(Decision)


def test_decide_buy_sell_relabel_symmetry():
    """Swapping the buy and sell counts swaps the decision (untied tallies)."""
    rng = np.random.default_rng(11)
    swap = {Decision.BUY: Decision.SELL, Decision.SELL: Decision.BUY,
            Decision.MERGE: Decision.MERGE, Decision.FRAGMENT: Decision.FRAGMENT}
    checked = 0
    for _ in range(800):
        s = int(rng.integers(1, 30))
        b, sc, w = (int(v) for v in rng.multinomial(s, [1 / 3, 1 / 3, 1 / 3]))
        x = float(rng.uniform(0.34, 0.49))
        if [b, sc, w].count(max(b, sc, w)) > 1:
            continue  # tie-breaking is random; only the distribution is symmetric
        d1 = decide(VoteTally(b, sc, w), x, rng)
        d2 = decide(VoteTally(sc, b, w), x, rng)
        assert d2 == swap[d1]
        checked += 1
    assert checked > 300


# -- fragmentation probability -------------------------------------------------

def test_fragmentation_probability_known_values():
    assert fragmentation_probability(1, 0.47) == 0.0
    assert fragmentation_probability(2, 0.40) == 0.0
    assert fragmentation_probability(3, 0.40) == pytest.approx(2 / 9, abs=1e-15)
    assert fragmentation_probability(6, 0.40) == pytest.approx(90 / 729, abs=1e-15)


def test_enumeration_oracle_known_values():
    assert enumerate_fragmentation_probability(3, 0.40) == Fraction(6, 27)
    assert enumerate_fragmentation_probability(1, 0.41) == 0
    assert enumerate_fragmentation_probability(2, 0.40) == 0


def test_enumeration_oracle_limits():
    with pytest.raises(ValueError):
        enumerate_fragmentation_probability(15, 0.4)
    with pytest.raises(ValueError):
        enumerate_fragmentation_probability(0, 0.4)
    with pytest.raises(ValueError):
        fragmentation_probability(0, 0.4)


@pytest.mark.parametrize("x", [0.35, 0.37, 0.41, 0.45, 0.47])
def test_fragmentation_probability_matches_enumeration(x):
    for s in range(1, 13):
        exact = float(enumerate_fragmentation_probability(s, x))
        assert fragmentation_probability(s, x) == pytest.approx(exact, abs=1e-12)


def test_large_size_path_matches_integer_sum():
    """The log-space path (s > 64) must agree with direct integer summation."""

    def reference(s, x):
        ub = math.ceil(x * s) - 1
        if 3 * ub < s:
            return 0.0
        fact = math.factorial
        total = sum(
            fact(s) // (fact(w) * fact(b) * fact(s - w - b))
            for w in range(max(0, s - 2 * ub), min(ub, s) + 1)
            for b in range(max(0, s - w - ub), min(ub, s - w) + 1)
        )
        return total / 3**s

    for s in (65, 80, 101, 150):
        for x in (0.35, 0.41, 0.47):
            assert fragmentation_probability(s, x) == pytest.approx(reference(s, x), abs=1e-12)


def test_no_overflow_at_extreme_sizes():
    for s in (10_000, 100_000):
        for x in (0.34, 0.41, 0.47, 0.499):
            p = fragmentation_probability(s, x)
            assert 0.0 <= p <= 1.0
    assert fragmentation_probability(100_000, 0.47) > 0.999999


def test_exponential_cutoff_of_trade_probability():
    """1 - p_frg decays (asymptotically) exponentially in the group size."""
    x = 0.47
    sizes = np.arange(100, 1001, 50)
    log_survive = np.array([math.log(consensus_probability(int(s), x)) for s in sizes])
    assert np.all(np.diff(log_survive) < 0)
    slope, intercept = np.polyfit(sizes, log_survive, 1)
    assert slope < 0
    fitted = slope * sizes + intercept
    ss_res = float(np.sum((log_survive - fitted) ** 2))
    ss_tot = float(np.sum((log_survive - log_survive.mean()) ** 2))
    assert 1.0 - ss_res / ss_tot > 0.99


def test_consensus_probability_complements_fragmentation():
    for s in (1, 2, 3, 10, 64, 65, 120, 500):
        for x in X_GRID:
            total = consensus_probability(s, x) + fragmentation_probability(s, x)
            assert total == pytest.approx(1.0, abs=1e-12)
    # deep in the cutoff the direct complement would be unrepresentable
    deep = consensus_probability(1000, 0.47)
    assert 0.0 < deep < 1e-15


# -- decision probabilities ------------------------------------------------------

def test_decision_probabilities_known_values():
    assert decision_probabilities(1, 0.41) == (0.0, 1 / 3, 1 / 3, 1 / 3)
    probs = decision_probabilities(3, 0.40)
    assert probs.fragment == pytest.approx(2 / 9, abs=1e-15)
    assert probs.buy == pytest.approx(7 / 27, abs=1e-15)
    assert probs.buy == probs.sell == probs.merge


def test_decision_probabilities_complete():
    for s in (1, 2, 3, 7, 20, 64, 65, 100, 1000, 10_000):
        for x in X_GRID:
            probs = decision_probabilities(s, x)
            assert sum(probs) == pytest.approx(1.0, abs=1e-12)
            assert all(0.0 <= p <= 1.0 for p in probs)


def test_decision_probabilities_match_monte_carlo():
    rng = np.random.default_rng(31337)
    s, x = 6, 0.41  # p_frg(6, 0.41) = 90/729 > 0
    n = 200_000
    counts = np.zeros(4)
    for _ in range(n):
        votes = rng.multinomial(s, [1 / 3, 1 / 3, 1 / 3])
        counts[decide(VoteTally(*(int(v) for v in votes)), x, rng)] += 1
    probs = decision_probabilities(s, x)
    expected = np.array([probs.buy, probs.sell, probs.merge, probs.fragment]) * n
    sigma = np.sqrt(expected * (1 - expected / n))
    assert np.all(np.abs(counts - expected) < 3.5 * sigma)
    assert sigma.min() > 0
