"""Real two-dimensional Hilbert space for the die's face observables.

States are real unit vectors written in the ``|+>_z, |->_z`` basis.  Every
quantity the die needs (face observables, face projectors, Born
probabilities, collapse, sequential joint probabilities and the interference
term of the quantum total-probability formula) is computed here with plain
double-precision 2x2 arithmetic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

TOL = 1e-12
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class ZeroProbabilityCollapse(ValueError):
    """Raised when conditioning on an outcome that has zero probability."""


class Axis(enum.Enum):
    """Roll axis on the game table."""

    Z = "z"
    X = "x"


@dataclass(frozen=True)
class StateVector:
    """Unit vector ``a_plus |+>_z + a_minus |->_z``."""

    a_plus: float
    a_minus: float

    def __post_init__(self):
        norm2 = self.a_plus * self.a_plus + self.a_minus * self.a_minus
        if not math.isfinite(norm2) or abs(norm2 - 1.0) > TOL:
            raise ValueError(
                f"state is not normalized: |psi|^2 = {norm2!r}"
            )

    @classmethod
    def from_array(cls, v) -> "StateVector":
        a, b = (float(x) for x in np.asarray(v, dtype=float).ravel())
        return cls(a, b)

    @classmethod
    def normalized(cls, a_plus: float, a_minus: float) -> "StateVector":
        """Build a state from any nonzero pair by rescaling it to unit norm."""
        n = math.hypot(a_plus, a_minus)
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(a_plus / n, a_minus / n)

    def as_array(self) -> np.ndarray:
        return np.array([self.a_plus, self.a_minus], dtype=float)

    def isclose(self, other: "StateVector", tol: float = TOL) -> bool:
        return (abs(self.a_plus - other.a_plus) <= tol
                and abs(self.a_minus - other.a_minus) <= tol)


PLUS_Z = StateVector(1.0, 0.0)
MINUS_Z = StateVector(0.0, 1.0)
PLUS_X = StateVector(_INV_SQRT2, _INV_SQRT2)
MINUS_X = StateVector(_INV_SQRT2, -_INV_SQRT2)


@dataclass(frozen=True)
class Observable:
    """Real symmetric 2x2 matrix."""

    m00: float
    m01: float
    m10: float
    m11: float

    def __post_init__(self):
        if self.m01 != self.m10:
            raise ValueError(
                f"observable must be symmetric, got m01={self.m01!r}, "
                f"m10={self.m10!r}"
            )

    @classmethod
    def from_array(cls, m):
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.m00, self.m01], [self.m10, self.m11]], dtype=float)

    def eigenvalues(self) -> tuple[float, float]:
        """Closed-form eigenvalues (ascending) of the symmetric matrix."""
        mean = 0.5 * (self.m00 + self.m11)
        r = math.hypot(0.5 * (self.m00 - self.m11), self.m01)
        return (mean - r, mean + r)


@dataclass(frozen=True)
class Projector(Observable):
    """Symmetric idempotent 2x2 matrix."""

    def __post_init__(self):
        super().__post_init__()
        m = self.matrix
        if np.max(np.abs(m @ m - m)) > TOL:
            raise ValueError("projector must be idempotent (P @ P == P)")

    def complement(self) -> "Projector":
        """``I - P``."""
        return Projector(1.0 - self.m00, -self.m01, -self.m10, 1.0 - self.m11)


IDENTITY = Observable(1.0, 0.0, 0.0, 1.0)


def make_face_observable(direction: Axis) -> Observable:
    """Observable read off the upper face after a roll along ``direction``."""
    direction = Axis(direction)
    if direction is Axis.Z:
        return Observable(1.0, 0.0, 0.0, -1.0)
    return Observable(0.0, 1.0, 1.0, 0.0)


def projector_for(direction: Axis, sign: int) -> Projector:
    """Projector onto the ``sign`` eigenspace of the face observable."""
    direction = Axis(direction)
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    if direction is Axis.Z:
        if sign == 1:
            return Projector(1.0, 0.0, 0.0, 0.0)
        return Projector(0.0, 0.0, 0.0, 1.0)
    h = 0.5 * sign
    return Projector(0.5, h, h, 0.5)


def born_probability(state: StateVector, p: Projector) -> float:
    """``<psi|P|psi>``."""
    v = state.as_array()
    prob = float(v @ p.matrix @ v)
    # clip round-off only; anything further out signals a bad projector
    if -TOL <= prob < 0.0:
        prob = 0.0
    elif 1.0 < prob <= 1.0 + TOL:
        prob = 1.0
    return prob


def collapse(state: StateVector, p: Projector) -> StateVector:
    """Post-measurement state ``P|psi> / sqrt(<psi|P|psi>)``.

    Raises
    ------
    ZeroProbabilityCollapse
        If the outcome selected by ``p`` has probability at most ``TOL``.
    """
    prob = born_probability(state, p)
    if prob <= TOL:
        raise ZeroProbabilityCollapse(
            f"outcome has probability {prob!r}; cannot condition on it"
        )
    w = p.matrix @ state.as_array()
    w = w / math.sqrt(prob)
    # renormalize to absorb last-bit drift so the constructor check holds
    w = w / math.hypot(w[0], w[1])
    return StateVector(float(w[0]), float(w[1]))


def sequential_joint_probability(state: StateVector, first: Projector,
                                 then: Projector) -> float:
    """Probability of ``first`` and then ``then``: ``<psi|Pa Pb Pa|psi>``."""
    v = state.as_array()
    pa = first.matrix
    return float(v @ pa @ then.matrix @ pa @ v)


def interference_term(state: StateVector, p_alpha: Projector,
                      p_beta: Projector) -> float:
    """``2 Re <psi|Pa Pb (I - Pa)|psi>``; amplitudes are real so Re is a no-op."""
    v = state.as_array()
    pa = p_alpha.matrix
    pa_bar = p_alpha.complement().matrix
    return 2.0 * float(v @ pa @ p_beta.matrix @ pa_bar @ v)


@dataclass(frozen=True)
class TotalProbabilityDecomposition:
    """Marginal of ``beta`` split into the two sequential paths plus interference."""

    marginal: float
    joint_then: float
    joint_complement_then: float
    interference: float

    @property
    def classical_sum(self) -> float:
        return self.joint_then + self.joint_complement_then

    @property
    def residual(self) -> float:
        return (self.marginal - self.joint_then - self.joint_complement_then
                - self.interference)


def total_probability_decomposition(state: StateVector, p_alpha: Projector,
                                    p_beta: Projector) -> TotalProbabilityDecomposition:
    """Evaluate every term of the quantum total-probability formula."""
    dec = TotalProbabilityDecomposition(
        marginal=born_probability(state, p_beta),
        joint_then=sequential_joint_probability(state, p_alpha, p_beta),
        joint_complement_then=sequential_joint_probability(
            state, p_alpha.complement(), p_beta),
        interference=interference_term(state, p_alpha, p_beta),
    )
    assert abs(dec.residual) <= TOL, dec
    return dec


def commutator(a: Observable, b: Observable) -> np.ndarray:
    ma, mb = a.matrix, b.matrix
    return ma @ mb - mb @ ma


def commutes(a: Observable, b: Observable) -> bool:
    return bool(np.max(np.abs(commutator(a, b))) < TOL)


def expectation(state: StateVector, f: Observable) -> float:
    """``<psi|F|psi>``."""
    v = state.as_array()
    return float(v @ f.matrix @ v)
