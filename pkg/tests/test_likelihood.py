import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symest.bloch import (
    ONE,
    ZERO,
    Qubit,
    SphereGrid,
    fibonacci_points,
    from_unit_vector,
    great_circle_distance,
    make_sphere_grid,
    rotation_to_north_pole,
    to_unit_vector,
)
from symest.likelihood import (
    MeasurementRecord,
    MeasurementSequence,
    dense_oracle_max,
    log_likelihood,
    loglik_points,
    mle_estimate,
    mle_vectors,
    random_sequence,
)
from symest.measurement import Outcome

from .conftest import qubits

EQUATOR_X = Qubit(math.pi / 2, 0.0)

records = st.builds(MeasurementRecord, st.sampled_from(["a", "s"]), qubits)
sequences = st.builds(MeasurementSequence, st.lists(records, max_size=8).map(tuple))


def vec(q):
    return np.array(to_unit_vector(q).as_tuple())


def test_record_types():
    rec = MeasurementRecord("a", ZERO)
    assert rec.outcome is Outcome.ANTISYMMETRIC
    seq = MeasurementSequence().append("s", ZERO).append("a", ONE)
    assert len(seq) == 2 and seq[1].reference == ONE
    np.testing.assert_array_equal(seq.antisymmetric_mask, [False, True])
    with pytest.raises(ValueError):
        MeasurementRecord("x", ZERO)


def test_log_likelihood_examples():
    assert log_likelihood(MeasurementSequence(), Qubit(1.0, 2.0)) == 0.0
    assert log_likelihood(MeasurementSequence.of([("a", EQUATOR_X)]), EQUATOR_X) == -math.inf
    seq = MeasurementSequence.of([("a", ZERO), ("s", ZERO)])
    assert log_likelihood(seq, EQUATOR_X) == pytest.approx(math.log(3 / 16), abs=1e-15)


@given(sequences, qubits, st.randoms(use_true_random=False))
def test_log_likelihood_permutation_invariant(seq, cand, rnd):
    recs = list(seq.records)
    rnd.shuffle(recs)
    assert log_likelihood(MeasurementSequence(tuple(recs)), cand) == log_likelihood(seq, cand)


@given(sequences, qubits)
def test_vectorized_log_likelihood_agrees(seq, cand):
    scalar = log_likelihood(seq, cand)
    vector = loglik_points(vec(cand)[None], seq.reference_vectors, seq.antisymmetric_mask)[0]
    if math.isinf(scalar):
        # vectorized form only sees exact zeros when the dot product rounds to 1
        assert vector < 0
    else:
        assert vector == pytest.approx(scalar, abs=1e-9)


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_mle_all_symmetric_returns_reference(grid1024, n):
    res = mle_estimate(MeasurementSequence.of([("s", ZERO)] * n), grid1024)
    assert great_circle_distance(res.vector, vec(ZERO)) < 1e-3
    assert res.estimate.theta < 1e-3


def test_mle_single_antisymmetric_returns_antipode(grid1024):
    res = mle_estimate(MeasurementSequence.of([("a", ZERO)]), grid1024)
    assert abs(res.estimate.theta - math.pi) < 1e-3


def test_mle_two_antisymmetric_against_dense_lattice(grid1024):
    seq = MeasurementSequence.of([("a", ZERO), ("a", EQUATOR_X)])
    # argmax over a 10^6-point Fibonacci lattice (dense_oracle_max), frozen
    oracle = from_unit_vector(np.array([-0.70695739, -0.0012677, -0.707255]) / np.linalg.norm([-0.70695739, -0.0012677, -0.707255]))
    res = mle_estimate(seq, grid1024)
    assert great_circle_distance(res.vector, vec(oracle)) < 2e-2
    # closed form: by symmetry the maximizer is -(x + z)/sqrt(2)
    assert res.estimate.theta == pytest.approx(3 * math.pi / 4, abs=1e-6)
    assert res.estimate.phi == pytest.approx(math.pi, abs=1e-6)


def test_dense_oracle_matches_frozen_value():
    seq = MeasurementSequence.of([("a", ZERO), ("a", EQUATOR_X)])
    pt, val = dense_oracle_max(seq, fibonacci_points(1_000_000))
    np.testing.assert_allclose(pt, [-0.70695739, -0.0012677, -0.707255], atol=1e-7)
    assert val <= math.log(((1 + 1 / math.sqrt(2)) / 4) ** 2)


def test_mle_result_invariants(grid1024):
    rng = np.random.default_rng(3)
    for _ in range(30):
        seq = random_sequence(rng, int(rng.integers(0, 10)))
        res = mle_estimate(seq, grid1024)
        assert abs(res.log_likelihood - log_likelihood(seq, res.estimate)) < 1e-9
        grid_max = loglik_points(grid1024.points, seq.reference_vectors, seq.antisymmetric_mask).max()
        assert res.log_likelihood >= grid_max - 1e-12
        assert res.estimate == Qubit(res.estimate.theta, res.estimate.phi)


def test_mle_against_dense_lattice_random_sequences(grid1024):
    rng = np.random.default_rng(11)
    lattice = fibonacci_points(1_000_000)
    for _ in range(10):
        seq = random_sequence(rng, int(rng.integers(1, 6)))
        _, best = dense_oracle_max(seq, lattice)
        assert mle_estimate(seq, grid1024).log_likelihood >= best - 1e-4


def test_mle_covariance(grid1024):
    rng = np.random.default_rng(21)
    for _ in range(50):
        seq = random_sequence(rng, int(rng.integers(1, 6)))
        rot_target = from_unit_vector(_unit(rng))
        r = rotation_to_north_pole(rot_target)
        rotated = MeasurementSequence(
            tuple(MeasurementRecord(rec.outcome, from_unit_vector(r @ vec(rec.reference))) for rec in seq)
        )
        e = mle_estimate(seq, grid1024).vector
        e_rot = mle_estimate(rotated, grid1024).vector
        assert great_circle_distance(e_rot, r @ e) < 2e-2


def _unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def test_mle_is_deterministic(grid256):
    seq = random_sequence(np.random.default_rng(5), 6)
    a, b = mle_estimate(seq, grid256), mle_estimate(seq, grid256)
    np.testing.assert_array_equal(a.vector, b.vector)
    assert a.log_likelihood == b.log_likelihood


def test_batched_mle_matches_single(grid256):
    rng = np.random.default_rng(8)
    seqs = [random_sequence(rng, 4) for _ in range(6)]
    refs = np.stack([s.reference_vectors for s in seqs])
    anti = np.stack([s.antisymmetric_mask for s in seqs])
    vecs, vals = mle_vectors(refs, anti, grid256)
    for s, v, f in zip(seqs, vecs, vals):
        single = mle_estimate(s, grid256)
        np.testing.assert_array_equal(single.vector, v)
        assert single.log_likelihood == f


def test_empty_grid_rejected():
    empty = SphereGrid(np.zeros((0, 3)), 0)
    with pytest.raises(ValueError):
        mle_estimate(MeasurementSequence(), empty)


def test_empty_sequence_estimate_is_a_grid_point(grid256):
    res = mle_estimate(MeasurementSequence(), grid256)
    assert res.log_likelihood == 0.0
    np.testing.assert_array_equal(res.vector, grid256.points[0])


@settings(max_examples=25, deadline=None)
@given(sequences)
def test_refinement_never_worse_than_grid(seq):
    grid = make_sphere_grid(256)
    res = mle_estimate(seq, grid)
    grid_max = loglik_points(grid.points, seq.reference_vectors, seq.antisymmetric_mask).max()
    assert res.log_likelihood >= grid_max - 1e-12
