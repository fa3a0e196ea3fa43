"""Adaptive estimation of a pure qubit from symmetry measurements against reference states."""

from .bloch import (
    ONE,
    ZERO,
    Qubit,
    SphereGrid,
    UnitVector3,
    fidelity,
    from_unit_vector,
    make_sphere_grid,
    rotation_to_north_pole,
    to_unit_vector,
)
from .harness import (
    ExperimentConfig,
    FidelityCurve,
    SnapshotDistribution,
    TrialResult,
    rotated_snapshot,
    run_experiment,
    run_trial,
)
from .likelihood import MeasurementRecord, MeasurementSequence, MleResult, log_likelihood, mle_estimate
from .measurement import Outcome, make_rng, p_antisymmetric, p_symmetric, sample_outcome
from .strategy import (
    AdaptionObjectiveValue,
    StrategyKind,
    expected_fidelity_objective,
    next_reference_adaptive,
    next_reference_random,
)

__version__ = "0.1.0"
