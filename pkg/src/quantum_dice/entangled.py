"""Two dice joined by a rigid rod, played by two separated players.

Each player either rolls their die along ``x`` and reads the upper face
(``Roll``) or merely checks whether the upper face is flat (``FlatCheck``).
A joint roll keeps the rod attached and creates anti-correlated upper faces;
a single roll knocks the rod off and, by the face layout of the modified die,
always ends on a ``+`` face.  The outcome tables below encode exactly that.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, NamedTuple

import numpy as np

from .die import DieState, RandomStream, read_upper_face
from .hilbert import TOL

BELL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
MAX_CHSH = 4.0


class ExperimentChoice(enum.Enum):
    ROLL = "roll"
    FLAT_CHECK = "flat"


def _as_choice(c) -> "ExperimentChoice":
    return c if type(c) is ExperimentChoice else ExperimentChoice(c)


class RodState(enum.Enum):
    CONNECTED = "connected"
    DETACHED = "detached"


class JointOutcome(NamedTuple):
    o_a: int
    o_b: int

    @property
    def product(self) -> int:
        return self.o_a * self.o_b

    @property
    def label(self) -> str:
        return f"{self.o_a:+d},{self.o_b:+d}"


# fixed order used for sampling and for every serialized table
OUTCOMES = (JointOutcome(1, 1), JointOutcome(1, -1),
            JointOutcome(-1, 1), JointOutcome(-1, -1))

# (a, b), (a, b'), (a', b), (a', b')
CHOICE_PAIRS = (
    (ExperimentChoice.ROLL, ExperimentChoice.ROLL),
    (ExperimentChoice.ROLL, ExperimentChoice.FLAT_CHECK),
    (ExperimentChoice.FLAT_CHECK, ExperimentChoice.ROLL),
    (ExperimentChoice.FLAT_CHECK, ExperimentChoice.FLAT_CHECK),
)
PAIR_LABELS = ("ab", "ab'", "a'b", "a'b'")


class OutcomeDistribution(Mapping):
    """Probabilities of the four joint outcomes; missing outcomes have mass 0."""

    __slots__ = ("_p",)

    def __init__(self, probabilities: Mapping):
        p = {}
        for k, v in probabilities.items():
            k = JointOutcome(*k)
            if k not in OUTCOMES:
                raise ValueError(f"outcome components must be +1/-1, got {k}")
            v = float(v)
            if not -TOL <= v <= 1.0 + TOL:
                raise ValueError(f"probability {v!r} of {k} is outside [0, 1]")
            p[k] = v
        total = sum(p.values())
        if abs(total - 1.0) > TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        self._p = {o: p.get(o, 0.0) for o in OUTCOMES}

    def __getitem__(self, key) -> float:
        return self._p[JointOutcome(*key)]

    def __iter__(self) -> Iterator[JointOutcome]:
        return iter(OUTCOMES)

    def __len__(self) -> int:
        return len(OUTCOMES)

    def __repr__(self):
        inner = ", ".join(f"({o.label}): {p:g}" for o, p in self._p.items() if p)
        return f"OutcomeDistribution({{{inner}}})"

    def is_point_mass(self) -> bool:
        return any(abs(p - 1.0) <= TOL for p in self._p.values())

    def sample(self, rng: RandomStream) -> JointOutcome:
        """Draw one outcome with a single uniform draw (inverse CDF)."""
        u = rng.random()
        acc = 0.0
        last = None
        for o in OUTCOMES:
            p = self._p[o]
            if p <= 0.0:
                continue
            acc += p
            last = o
            if u < acc:
                return o
        return last


@dataclass(frozen=True)
class ChshReport:
    e_ab: float
    e_ab_prime: float
    e_aprime_b: float
    e_aprime_bprime: float
    i_value: float

    def __post_init__(self):
        for name in ("e_ab", "e_ab_prime", "e_aprime_b", "e_aprime_bprime"):
            e = getattr(self, name)
            if not -1.0 - TOL <= e <= 1.0 + TOL:
                raise ValueError(f"{name}={e!r} outside [-1, 1]")
        expected = chsh_from_expectations(
            self.e_ab, self.e_ab_prime, self.e_aprime_b, self.e_aprime_bprime)
        if abs(self.i_value - expected) > TOL:
            raise ValueError(f"i_value {self.i_value!r} != {expected!r}")
        if not 0.0 <= self.i_value <= MAX_CHSH + TOL:
            raise ValueError(f"i_value {self.i_value!r} outside [0, 4]")

    @classmethod
    def from_expectations(cls, e_ab, e_ab_prime, e_aprime_b, e_aprime_bprime):
        return cls(e_ab, e_ab_prime, e_aprime_b, e_aprime_bprime,
                   chsh_from_expectations(e_ab, e_ab_prime, e_aprime_b,
                                          e_aprime_bprime))

    @property
    def expectations(self) -> tuple[float, float, float, float]:
        return (self.e_ab, self.e_ab_prime, self.e_aprime_b, self.e_aprime_bprime)

    @property
    def violates_bell(self) -> bool:
        return self.i_value > BELL_BOUND + TOL


def chsh_from_expectations(e_ab: float, e_ab_prime: float, e_aprime_b: float,
                           e_aprime_bprime: float) -> float:
    return abs(e_ab - e_ab_prime) + abs(e_aprime_bprime + e_aprime_b)


_ANTI = OutcomeDistribution({(1, -1): 0.5, (-1, 1): 0.5})
_BOTH_PLUS = OutcomeDistribution({(1, 1): 1.0})


def coincidence_distribution(choice_a: ExperimentChoice,
                             choice_b: ExperimentChoice) -> OutcomeDistribution:
    """Joint outcome table for one coincidence experiment on the rod-linked pair."""
    choice_a, choice_b = _as_choice(choice_a), _as_choice(choice_b)
    if choice_a is ExperimentChoice.ROLL and choice_b is ExperimentChoice.ROLL:
        return _ANTI
    return _BOTH_PLUS


def rod_state_after(choice_a: ExperimentChoice,
                    choice_b: ExperimentChoice) -> RodState:
    """A lone shooter knocks the rod off; a joint roll or no roll keeps it."""
    rolls = (_as_choice(choice_a) is ExperimentChoice.ROLL) + (
        _as_choice(choice_b) is ExperimentChoice.ROLL)
    return RodState.DETACHED if rolls == 1 else RodState.CONNECTED


def sample_coincidence(choice_a: ExperimentChoice, choice_b: ExperimentChoice,
                       rng: RandomStream) -> tuple[JointOutcome, RodState]:
    """One coincidence run; consumes exactly one draw from ``rng``."""
    outcome = coincidence_distribution(choice_a, choice_b).sample(rng)
    return outcome, rod_state_after(choice_a, choice_b)


def expectation_of(dist: OutcomeDistribution) -> float:
    """Mean of ``o_a * o_b``."""
    return (dist[(1, 1)] + dist[(-1, -1)]) - (dist[(1, -1)] + dist[(-1, 1)])


DistributionSource = Callable[[ExperimentChoice, ExperimentChoice], OutcomeDistribution]


def chsh_value(dist_source: DistributionSource = coincidence_distribution) -> ChshReport:
    """CHSH quantity with ``a = b = Roll`` and ``a' = b' = FlatCheck``."""
    es = []
    for ca, cb in CHOICE_PAIRS:
        dist = dist_source(ca, cb)
        if not isinstance(dist, OutcomeDistribution):
            dist = OutcomeDistribution(dist)
        es.append(expectation_of(dist))
    return ChshReport.from_expectations(*es)


def discovery_variant_distribution(prepared: tuple[DieState, DieState],
                                   choice_a: ExperimentChoice,
                                   choice_b: ExperimentChoice) -> OutcomeDistribution:
    """Outcome table when ``Roll`` is replaced by reading the current upper face.

    Nothing is rolled, so no correlation is created: the result is a point
    mass fixed by the prepared faces.  Any pair of die states is accepted.
    """
    die_a, die_b = (DieState(s) for s in prepared)

    def outcome(die: DieState, choice: ExperimentChoice) -> int:
        if ExperimentChoice(choice) is ExperimentChoice.ROLL:
            return read_upper_face(die)
        return 1  # every face is flat

    return OutcomeDistribution(
        {(outcome(die_a, choice_a), outcome(die_b, choice_b)): 1.0})


def discovery_source(prepared: tuple[DieState, DieState]) -> DistributionSource:
    return lambda ca, cb: discovery_variant_distribution(prepared, ca, cb)


@dataclass(frozen=True)
class DeterministicChshBounds:
    min_i: float
    max_i: float
    values: tuple[float, ...]


def deterministic_assignments() -> list[tuple[int, int, int, int]]:
    """All 16 pre-existing value tuples ``(o_a, o_a', o_b, o_b')``."""
    return list(itertools.product((1, -1), repeat=4))


def _assignment_expectations(assignment) -> np.ndarray:
    oa, oap, ob, obp = assignment
    return np.array([oa * ob, oa * obp, oap * ob, oap * obp], dtype=float)


def enumerate_deterministic_chsh() -> DeterministicChshBounds:
    """CHSH value of every local deterministic assignment."""
    values = tuple(chsh_from_expectations(*_assignment_expectations(a))
                   for a in deterministic_assignments())
    return DeterministicChshBounds(min(values), max(values), values)


def mixture_chsh(weights) -> float:
    """CHSH value of a convex mixture of the 16 deterministic assignments."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (16,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be 16 non-negative numbers summing to 1")
    table = np.array([_assignment_expectations(a) for a in deterministic_assignments()])
    return chsh_from_expectations(*(w @ table))
