"""Measurement records, the likelihood of a record sequence, and its maximizer.

The likelihood of a candidate state is the product of the outcome
probabilities of every recorded (outcome, reference) pair. It is handled in
log space throughout; a zero factor gives ``-inf``.

Maximization is a two-stage search: a full scan of a Fibonacci grid (ties go
to the lowest grid index) followed by a local ascent on the sphere. The
search runs in compiled per-problem kernels, so a problem's result never
depends on what else is in the batch. ``loglik_points`` is a separate numpy
evaluator used for brute-force cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .bloch import Qubit, SphereGrid, angles_to_vectors, dot3, from_unit_vector, to_unit_vector
from . import _kernels as _k
from .measurement import Outcome, outcome_probability, log_outcome_prob

# refinement stops once accepted steps fall below MIN_STEP (rad)
MIN_STEP = 1e-10
MAX_ITER = 100


@dataclass(frozen=True)
class MeasurementRecord:
    outcome: Outcome
    reference: Qubit

    def __post_init__(self):
        object.__setattr__(self, "outcome", Outcome.parse(self.outcome))
        if not isinstance(self.reference, Qubit):
            raise TypeError("reference must be a Qubit")


@dataclass(frozen=True)
class MeasurementSequence:
    """Ordered, immutable list of measurement records."""

    records: tuple[MeasurementRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    @classmethod
    def of(cls, pairs: Iterable[tuple]) -> "MeasurementSequence":
        """Build from ``(outcome, reference)`` pairs, e.g. ``[("a", ZERO)]``."""
        return cls(tuple(MeasurementRecord(o, r) for o, r in pairs))

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[MeasurementRecord]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def append(self, outcome, reference: Qubit) -> "MeasurementSequence":
        return MeasurementSequence(self.records + (MeasurementRecord(outcome, reference),))

    @cached_property
    def reference_vectors(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, 3))
        return np.array([to_unit_vector(r.reference).as_tuple() for r in self.records])

    @cached_property
    def antisymmetric_mask(self) -> np.ndarray:
        return np.array([r.outcome is Outcome.ANTISYMMETRIC for r in self.records], dtype=bool)


@dataclass(frozen=True)
class MleResult:
    estimate: Qubit
    log_likelihood: float
    vector: np.ndarray = field(repr=False, compare=False)


def log_likelihood(seq: MeasurementSequence, candidate: Qubit) -> float:
    """Sum of log outcome probabilities; 0 for an empty sequence.

    Uses a correctly rounded sum, so the value is exactly invariant under
    reordering of the records.
    """
    terms = []
    for rec in seq:
        p = outcome_probability(rec.outcome, candidate, rec.reference)
        if p <= 0.0:
            return -math.inf
        terms.append(math.log(p))
    return math.fsum(terms)


# -- vectorized evaluation ---------------------------------------------------


def record_terms(points: np.ndarray, ref: np.ndarray, antisymmetric) -> np.ndarray:
    """log p_alpha(point, ref) for one record per problem.

    ``points`` has shape (..., M, 3); ``ref`` (..., 3) and ``antisymmetric``
    (...) broadcast against the leading axes. Returns shape (..., M).
    """
    ref = np.asarray(ref, dtype=float)
    anti = np.asarray(antisymmetric, dtype=bool)
    return log_outcome_prob(dot3(points, ref[..., None, :]), anti[..., None])


def loglik_points(points: np.ndarray, refs: np.ndarray, anti: np.ndarray) -> np.ndarray:
    """Log-likelihood at ``points`` (..., M, 3) for records ``refs`` (..., K, 3), ``anti`` (..., K).

    Terms are accumulated in record order.
    """
    refs = np.asarray(refs, dtype=float)
    anti = np.asarray(anti, dtype=bool)
    shape = np.broadcast_shapes(points.shape[:-1], refs.shape[:-2] + (1,))
    acc = np.zeros(shape)
    for k in range(refs.shape[-2]):
        acc = acc + record_terms(points, refs[..., k, :], anti[..., k])
    return acc


def mle_vectors(refs: np.ndarray, anti: np.ndarray, grid: SphereGrid) -> tuple[np.ndarray, np.ndarray]:
    """Maximum-likelihood Bloch vectors for B record sets, ``refs`` (B, K, 3), ``anti`` (B, K)."""
    refs = np.ascontiguousarray(refs, dtype=float)
    anti = np.ascontiguousarray(anti, dtype=bool)
    if len(grid.points) == 0:
        raise ValueError("empty grid")
    b = refs.shape[0]
    scores = np.empty((b, len(grid.points)))
    for i in range(b):
        scores[i] = _k.grid_scores(grid.points, refs[i], anti[i])
    return refine_from_scores(refs, anti, grid, scores)


def refine_from_scores(refs, anti, grid: SphereGrid, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Second stage of the search, given grid log-likelihoods ``scores`` (B, M).

    The grid winner (lowest index among ties) seeds a safeguarded Newton
    ascent in the tangent plane; only strictly improving steps are taken, so
    the result is never worse than the grid maximum.
    """
    idx = np.array([_k.first_argmax(row) for row in scores], dtype=np.int64)
    rows = np.arange(scores.shape[0])
    starts = np.ascontiguousarray(grid.points[idx])
    return _k.refine_batch(
        np.ascontiguousarray(refs, dtype=float),
        np.ascontiguousarray(anti, dtype=bool),
        starts,
        np.ascontiguousarray(scores[rows, idx]),
        grid.spacing,
        MIN_STEP,
        MAX_ITER,
    )


def mle_estimate(seq: MeasurementSequence, grid: SphereGrid) -> MleResult:
    """Maximum-likelihood estimate of the measured qubit over the sphere.

    Raises ``ValueError`` on an empty grid.
    """
    if grid is None or len(grid.points) == 0:
        raise ValueError("empty grid")
    n0, n1, n2, f = _k.mle_one(
        seq.reference_vectors, seq.antisymmetric_mask, grid.points, grid.spacing, MIN_STEP, MAX_ITER
    )
    vec = np.array([n0, n1, n2])
    return MleResult(from_unit_vector(vec), float(f), vec)


def dense_oracle_max(seq: MeasurementSequence, points: np.ndarray, chunk: int = 1 << 16) -> tuple[np.ndarray, float]:
    """Brute-force argmax of the log-likelihood over an explicit point set."""
    refs = seq.reference_vectors
    anti = seq.antisymmetric_mask
    best_val, best_pt = -math.inf, points[0]
    for lo in range(0, len(points), chunk):
        vals = loglik_points(points[lo : lo + chunk], refs, anti)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_pt = float(vals[i]), points[lo + i]
    return best_pt, best_val


def random_sequence(rng: np.random.Generator, length: int, outcomes: Sequence | None = None) -> MeasurementSequence:
    """Random references with random (or given) outcomes, for tests and checks."""
    recs = []
    for k in range(length):
        cz = 2.0 * rng.random() - 1.0
        ph = 2.0 * math.pi * rng.random()
        ref = from_unit_vector(angles_to_vectors(math.acos(cz), ph))
        o = outcomes[k] if outcomes is not None else ("a" if rng.random() < 0.5 else "s")
        recs.append(MeasurementRecord(o, ref))
    return MeasurementSequence(tuple(recs))
