"""The single die as a hidden-measurement machine.

A roll is a deterministic function of the die's state, the roll direction and
one hidden impulse parameter ``lambda`` in ``[0, 1)``.  Randomness only enters
through the uniform choice of ``lambda``; the Born probabilities of
:mod:`quantum_dice.hilbert` are recovered as the Lebesgue measure of the set
of impulses producing a given reading.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Protocol

import numpy as np

from .hilbert import (
    MINUS_X,
    MINUS_Z,
    PLUS_X,
    PLUS_Z,
    Axis,
    StateVector,
)

RollDirection = Axis

# impulses below this value send a rolling die to the "+" face
ROLL_THRESHOLD = 0.5


class DieState(enum.Enum):
    """The four preparable die states, keyed by their CLI token."""

    PLUS_Z = "+z"
    MINUS_Z = "-z"
    PLUS_X = "+x"
    MINUS_X = "-x"

    @property
    def axis(self) -> Axis:
        return _AXIS_OF[self]

    @property
    def sign(self) -> int:
        return _SIGN_OF[self]

    @classmethod
    def eigenstate(cls, axis: Axis, sign: int) -> "DieState":
        return _EIGENSTATE[(Axis(axis), sign)]

    @property
    def ket(self) -> str:
        return f"|{self.value[0]}>_{self.value[1]}"


# lookups keep the per-roll hot path free of enum construction
_AXIS_OF = {s: Axis(s.value[1]) for s in DieState}
_SIGN_OF = {s: 1 if s.value[0] == "+" else -1 for s in DieState}
_EIGENSTATE = {(_AXIS_OF[s], _SIGN_OF[s]): s for s in DieState}


def _as_state(state) -> DieState:
    return state if type(state) is DieState else DieState(state)


def _as_axis(direction) -> Axis:
    return direction if type(direction) is Axis else Axis(direction)


@dataclass(frozen=True)
class HiddenVariable:
    """Uncontrollable impulse transferred by the shooter."""

    lam: float

    def __post_init__(self):
        if type(self.lam) is not float:
            object.__setattr__(self, "lam", float(self.lam))
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"lambda must lie in [0, 1), got {self.lam!r}")


class RollOutcome(NamedTuple):
    reading: int
    final_state: DieState


class RandomStream(Protocol):
    def random(self) -> float: ...


def _roll_reading(state: DieState, direction: Axis, lam):
    """Reading map shared by single rolls and vectorized grid sweeps."""
    scalar = isinstance(lam, float)
    if _AXIS_OF[state] is direction:
        # glide: the face in contact slides, nothing turns over
        sign = _SIGN_OF[state]
        return sign if scalar else np.full(np.shape(lam), sign)
    if scalar:
        return 1 if lam < ROLL_THRESHOLD else -1
    return np.where(np.asarray(lam, dtype=float) < ROLL_THRESHOLD, 1, -1)


def deterministic_roll(state: DieState, direction: Axis,
                       h: HiddenVariable) -> RollOutcome:
    """Outcome of a roll along ``direction`` for the impulse ``h``."""
    state, direction = _as_state(state), _as_axis(direction)
    reading = int(_roll_reading(state, direction, h.lam))
    if _AXIS_OF[state] is direction:
        return RollOutcome(reading, state)
    return RollOutcome(reading, _EIGENSTATE[(direction, reading)])


def sample_roll(state: DieState, direction: Axis, rng: RandomStream) -> RollOutcome:
    """Roll with an impulse drawn from ``rng``; consumes exactly one draw."""
    return deterministic_roll(state, direction, HiddenVariable(rng.random()))


_KETS = {
    DieState.PLUS_Z: PLUS_Z,
    DieState.MINUS_Z: MINUS_Z,
    DieState.PLUS_X: PLUS_X,
    DieState.MINUS_X: MINUS_X,
}


def state_vector_of(state: DieState) -> StateVector:
    return _KETS[DieState(state)]


def hidden_measurement_probability(state: DieState, direction: Axis,
                                   reading: int) -> float:
    """Measure of the impulses in ``[0, 1)`` that yield ``reading``.

    Closed form: certainty (1 or 0) when the die glides, the length of the
    threshold interval when it rolls.
    """
    state, direction = DieState(state), Axis(direction)
    if reading not in (1, -1):
        raise ValueError(f"reading must be +1 or -1, got {reading!r}")
    if state.axis is direction:
        return 1.0 if reading == state.sign else 0.0
    return ROLL_THRESHOLD if reading == 1 else 1.0 - ROLL_THRESHOLD


def grid_probability(state: DieState, direction: Axis, reading: int,
                     points: int = 1_000_000) -> float:
    """Fraction of a midpoint grid on ``[0, 1)`` whose impulse yields ``reading``."""
    lam = (np.arange(points, dtype=float) + 0.5) / points
    readings = _roll_reading(DieState(state), Axis(direction), lam)
    return float(np.count_nonzero(readings == reading)) / points


def read_upper_face(state: DieState) -> int:
    """Look at the face already on top; the die is not touched."""
    return DieState(state).sign
