"""Quantum-like dice: exact Hilbert-space predictions, a hidden-impulse die
model, rod-linked entangled dice and seeded Monte Carlo checks."""

from .die import (
    DieState,
    HiddenVariable,
    RollDirection,
    RollOutcome,
    deterministic_roll,
    hidden_measurement_probability,
    read_upper_face,
    sample_roll,
    state_vector_of,
)
from .entangled import (
    ChshReport,
    ExperimentChoice,
    JointOutcome,
    OutcomeDistribution,
    RodState,
    chsh_value,
    coincidence_distribution,
    discovery_variant_distribution,
    enumerate_deterministic_chsh,
    expectation_of,
    sample_coincidence,
)
from .harness import (
    ComparisonReport,
    FrequencyEstimate,
    InvalidConfig,
    RunConfig,
    run_chsh_session,
    run_from_config,
    run_sequential_session,
    run_single_die_session,
)
from .hilbert import (
    Axis,
    Observable,
    Projector,
    StateVector,
    TotalProbabilityDecomposition,
    ZeroProbabilityCollapse,
    born_probability,
    collapse,
    commutes,
    expectation,
    interference_term,
    make_face_observable,
    projector_for,
    sequential_joint_probability,
    total_probability_decomposition,
)
from .rng import Substream, derive_substream

__version__ = "0.1.0"
