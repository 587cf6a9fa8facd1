import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quantum_dice.die import DieState
from quantum_dice.entangled import (
    BELL_BOUND,
    CHOICE_PAIRS,
    OUTCOMES,
    TSIRELSON_BOUND,
    ChshReport,
    ExperimentChoice,
    JointOutcome,
    OutcomeDistribution,
    RodState,
    chsh_value,
    coincidence_distribution,
    deterministic_assignments,
    discovery_source,
    discovery_variant_distribution,
    enumerate_deterministic_chsh,
    expectation_of,
    mixture_chsh,
    sample_coincidence,
)
from quantum_dice.hilbert import TOL
from quantum_dice.rng import derive_substream

ROLL, FLAT = ExperimentChoice.ROLL, ExperimentChoice.FLAT_CHECK
PREPARED = list(itertools.product(DieState, repeat=2))


def brute_force_chsh(values):
    """I for outcomes fixed in advance: (o_a, o_a', o_b, o_b')."""
    oa, oap, ob, obp = values
    return abs(oa * ob - oa * obp) + abs(oap * obp + oap * ob)


def test_coincidence_tables():
    assert dict(coincidence_distribution(ROLL, ROLL)) == {
        (1, 1): 0.0, (1, -1): 0.5, (-1, 1): 0.5, (-1, -1): 0.0}
    for pair in [(FLAT, FLAT), (ROLL, FLAT), (FLAT, ROLL)]:
        assert coincidence_distribution(*pair)[(1, 1)] == 1.0


def test_roll_roll_marginals_are_uniform():
    d = coincidence_distribution(ROLL, ROLL)
    assert d[(1, 1)] + d[(1, -1)] == 0.5 and d[(-1, 1)] + d[(-1, -1)] == 0.5
    assert d[(1, 1)] + d[(-1, 1)] == 0.5 and d[(1, -1)] + d[(-1, -1)] == 0.5


@pytest.mark.parametrize("pair", CHOICE_PAIRS)
def test_sample_coincidence_rod_rule(pair):
    rng = derive_substream(11, 0)
    for _ in range(2000):
        outcome, rod = sample_coincidence(*pair, rng)
        assert (rod is RodState.DETACHED) == ((pair[0] is ROLL) != (pair[1] is ROLL))
        if pair == (ROLL, ROLL):
            assert outcome.product == -1
        else:
            assert outcome == JointOutcome(1, 1)


def test_expectation_examples():
    assert expectation_of(OutcomeDistribution({(1, -1): 0.5, (-1, 1): 0.5})) == -1
    assert expectation_of(OutcomeDistribution({(1, 1): 1})) == 1
    assert expectation_of(OutcomeDistribution({o: 0.25 for o in OUTCOMES})) == 0


def test_distribution_validation():
    with pytest.raises(ValueError):
        OutcomeDistribution({(1, 1): 0.6})
    with pytest.raises(ValueError):
        OutcomeDistribution({(1, 2): 1.0})
    with pytest.raises(ValueError):
        OutcomeDistribution({(1, 1): 1.5, (-1, -1): -0.5})


def test_chsh_maximal_violation():
    r = chsh_value(coincidence_distribution)
    assert r.expectations == (-1.0, 1.0, 1.0, 1.0)
    assert r.i_value == 4.0
    assert 4.0 > TSIRELSON_BOUND > BELL_BOUND


def test_chsh_all_plus():
    r = chsh_value(lambda a, b: OutcomeDistribution({(1, 1): 1.0}))
    assert r.i_value == 2.0


def test_chsh_report_invariants():
    with pytest.raises(ValueError):
        ChshReport(1, 1, 1, 1, 3.0)
    with pytest.raises(ValueError):
        ChshReport.from_expectations(1.5, 0, 0, 0)


def test_discovery_examples():
    prep = (DieState.PLUS_X, DieState.MINUS_X)
    assert discovery_variant_distribution(prep, ROLL, ROLL)[(1, -1)] == 1.0
    assert discovery_variant_distribution(prep, ROLL, FLAT)[(1, 1)] == 1.0


@pytest.mark.parametrize("prepared", PREPARED)
def test_discovery_variant_respects_bell(prepared):
    for pair in CHOICE_PAIRS:
        assert discovery_variant_distribution(prepared, *pair).is_point_mass()
    r = chsh_value(discovery_source(prepared))
    assert r.i_value <= BELL_BOUND + TOL
    # read faces are fixed values, so the brute-force value applies
    faces = [1 if s.value[0] == "+" else -1 for s in prepared]
    assert r.i_value == brute_force_chsh((faces[0], 1, faces[1], 1))


def test_enumeration_matches_brute_force():
    values = [brute_force_chsh(v) for v in itertools.product((1, -1), repeat=4)]
    bounds = enumerate_deterministic_chsh()
    assert len(bounds.values) == 16
    assert sorted(bounds.values) == sorted(values)
    assert bounds.max_i == max(values) == 2
    assert bounds.min_i >= 0


@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=16, max_size=16).filter(lambda w: sum(w) > 1e-6))
def test_convex_mixtures_respect_bell(w):
    w = np.array(w) / sum(w)
    i = mixture_chsh(w)
    # independent route: mix the expectation values directly
    es = [0.0, 0.0, 0.0, 0.0]
    for wk, (oa, oap, ob, obp) in zip(w, deterministic_assignments()):
        for j, prod in enumerate((oa * ob, oa * obp, oap * ob, oap * obp)):
            es[j] += wk * prod
    assert i == pytest.approx(abs(es[0] - es[1]) + abs(es[3] + es[2]), abs=1e-12)
    assert i <= BELL_BOUND + TOL


def test_sampling_uses_one_draw():
    class Counting:
        calls = 0
        r = random.Random(0)

        def random(self):
            Counting.calls += 1
            return self.r.random()

    rng = Counting()
    for k, pair in enumerate(CHOICE_PAIRS * 5, start=1):
        sample_coincidence(*pair, rng)
        assert Counting.calls == k


def test_sampling_frequencies():
    rng = derive_substream(3, 0)
    n = 100_000
    plus_minus = sum(sample_coincidence(ROLL, ROLL, rng)[0] == (1, -1) for _ in range(n))
    assert abs(plus_minus / n - 0.5) <= 3 * math.sqrt(0.25 / n)
