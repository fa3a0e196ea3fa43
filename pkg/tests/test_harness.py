import math

import numpy as np
import pytest
from scipy import stats

from symest.bloch import ZERO, Qubit, fidelity, make_sphere_grid, to_unit_vector
from symest.harness import (
    HIST_EDGES,
    ExperimentConfig,
    TrialResult,
    exponential_tail_rate,
    fidelity_curve,
    optimal_fidelity,
    rotated_snapshot,
    run_experiment,
    run_trial,
    simulate,
    snapshot_from_arrays,
    worker_count,
)
from symest.likelihood import MeasurementSequence, mle_estimate
from symest.measurement import make_rng, sample_outcome
from symest.strategy import next_reference_adaptive, next_reference_random

SMALL = dict(n_max=4, trials=12, master_seed=7)


def test_config_defaults_and_validation():
    c = ExperimentConfig()
    assert (c.n_max, c.trials, c.master_seed, c.mle_grid, c.search_grid, c.hyp_grid) == (20, 10_000, 42, 1024, 512, 256)
    assert c.snapshot_steps == (1, 5, 20)
    assert ExperimentConfig(n_max=3).snapshot_steps == (1,)
    for bad in (dict(n_max=0), dict(trials=0), dict(master_seed=-1), dict(master_seed=2**64),
                dict(strategy="greedy"), dict(snapshot_steps=(0,)), dict(n_max=4, snapshot_steps=(5,)),
                dict(mle_grid=1), dict(n_max=2.5)):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)
    assert ExperimentConfig.from_dict(c.to_dict()) == c


@pytest.mark.parametrize("strategy", ["adaptive", "random"])
def test_run_trial_deterministic(strategy):
    cfg = ExperimentConfig(strategy=strategy, **SMALL)
    a, b = run_trial(cfg, 3), run_trial(cfg, 3)
    assert a == b
    assert run_trial(cfg, 4) != a


def test_first_adaptive_reference_is_zero():
    cfg = ExperimentConfig(n_max=1, trials=5, strategy="adaptive")
    for i in range(5):
        assert run_trial(cfg, i).records[0].reference == ZERO


@pytest.mark.parametrize("strategy", ["adaptive", "random"])
def test_trial_contract(strategy):
    cfg = ExperimentConfig(strategy=strategy, **SMALL)
    for i in range(cfg.trials):
        t = run_trial(cfg, i)
        assert len(t.records) == len(t.estimates) == len(t.fidelities) == cfg.n_max
        for est, f in zip(t.estimates, t.fidelities):
            assert 0.0 <= f <= 1.0
            assert abs(f - fidelity(est, t.true_state)) < 1e-12


def test_trial_index_range():
    cfg = ExperimentConfig(**SMALL)
    with pytest.raises(ValueError):
        run_trial(cfg, cfg.trials)
    with pytest.raises(ValueError):
        run_trial(cfg, -1)


def reference_trial(cfg: ExperimentConfig, idx: int) -> TrialResult:
    """Straightforward re-implementation of one trial from library calls."""
    rng = make_rng(cfg.master_seed, idx)
    psi = next_reference_random(rng)
    grid = make_sphere_grid(cfg.mle_grid)
    kind = cfg.strategy_kind()
    seq = MeasurementSequence()
    estimates, fids = [], []
    for _ in range(cfg.n_max):
        ref = next_reference_adaptive(seq, kind) if kind.is_adaptive else next_reference_random(rng)
        seq = seq.append(sample_outcome(psi, ref, rng), ref)
        est = mle_estimate(seq, grid).estimate
        estimates.append(est)
        fids.append(fidelity(est, psi))
    return TrialResult(psi, seq, estimates, fids)


@pytest.mark.parametrize("strategy", ["adaptive", "random"])
def test_harness_matches_reference_loop(strategy):
    cfg = ExperimentConfig(strategy=strategy, **SMALL)
    arrays = simulate(cfg, workers=1)
    for i in range(cfg.trials):
        want = reference_trial(cfg, i)
        got = arrays.trial(i)
        assert [r.outcome for r in got.records] == [r.outcome for r in want.records]
        np.testing.assert_allclose(
            [to_unit_vector(r.reference).as_tuple() for r in got.records],
            [to_unit_vector(r.reference).as_tuple() for r in want.records],
            atol=1e-12,
        )
        np.testing.assert_allclose(got.fidelities, want.fidelities, atol=1e-12)


@pytest.mark.parametrize("strategy", ["adaptive", "random"])
def test_worker_count_and_chunking_invariance(strategy):
    cfg = ExperimentConfig(strategy=strategy, **SMALL)
    one = simulate(cfg, workers=1)
    two = simulate(cfg, workers=2)
    part = simulate(cfg, workers=1, indices=[5, 2, 9])
    for name in ("true_vectors", "reference_vectors", "antisymmetric", "estimate_vectors", "fidelities"):
        assert np.array_equal(getattr(one, name), getattr(two, name))
        assert np.array_equal(getattr(one, name)[[2, 5, 9]], getattr(part, name))
    assert part.trial_indices.tolist() == [2, 5, 9]


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("SYMEST_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("SYMEST_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.setenv("SYMEST_THREADS", "x")
    with pytest.raises(ValueError):
        worker_count()


def test_fidelity_curve_statistics():
    cfg = ExperimentConfig(strategy="random", n_max=3, trials=30, master_seed=1)
    arrays = simulate(cfg, workers=1)
    curve = fidelity_curve(arrays)
    assert curve.n.tolist() == [1, 2, 3]
    np.testing.assert_allclose(curve.mean, arrays.fidelities.mean(axis=0), rtol=0, atol=1e-15)
    np.testing.assert_allclose(curve.std_error, arrays.fidelities.std(axis=0, ddof=1) / math.sqrt(30), atol=1e-15)
    assert curve.optimal[0] == 2 / 3
    assert curve.optimal.tolist() == [(n + 1) / (n + 2) for n in (1, 2, 3)]
    assert optimal_fidelity(1) == 2 / 3


def test_snapshot_rotation_of_true_estimate():
    t = run_trial(ExperimentConfig(**SMALL), 0)
    fake = TrialResult(t.true_state, t.records, [t.true_state] * SMALL["n_max"], [1.0] * SMALL["n_max"])
    snap = rotated_snapshot([fake], 2)
    assert snap.estimate_cos[0] == pytest.approx(1.0, abs=1e-12)


def test_snapshot_consistency_and_errors():
    cfg = ExperimentConfig(**SMALL)
    arrays = simulate(cfg, workers=1)
    trials = [arrays.trial(i) for i in range(cfg.trials)]
    for step in range(1, cfg.n_max + 1):
        snap = snapshot_from_arrays(arrays, step)
        assert snap.estimate_counts.sum() == snap.reference_counts.sum() == cfg.trials
        assert np.array_equal(snap.bin_edges, HIST_EDGES) and len(snap.bin_edges) == 41
        other = rotated_snapshot(trials, step)
        np.testing.assert_allclose(other.estimate_cos, snap.estimate_cos, atol=1e-12)
        np.testing.assert_allclose(other.reference_cos, snap.reference_cos, atol=1e-12)
        # the rotated cosine is the cosine to the true state
        cos_direct = np.einsum("ij,ij->i", arrays.true_vectors, arrays.estimate_vectors[:, step - 1])
        np.testing.assert_allclose(snap.estimate_cos, cos_direct, atol=1e-12)
    for bad in (0, cfg.n_max + 1):
        with pytest.raises(ValueError):
            rotated_snapshot(trials, bad)
        with pytest.raises(ValueError):
            snapshot_from_arrays(arrays, bad)
    with pytest.raises(ValueError):
        rotated_snapshot([], 1)


def test_run_experiment_shapes():
    cfg = ExperimentConfig(n_max=5, trials=6, master_seed=3)
    curve, snaps = run_experiment(cfg, workers=1)
    assert len(curve.mean) == 5 and [s.step for s in snaps] == [1, 5]


def test_first_step_fidelity_small_sample():
    # a fast check of the 7/12 mean; the full 10^4-trial check lives in the acceptance suite
    curve = fidelity_curve(simulate(ExperimentConfig(strategy="random", n_max=1, trials=2000, master_seed=11), workers=1))
    assert abs(curve.mean[0] - 7 / 12) < 4 * curve.std_error[0]


def test_exponential_tail_rate_recovers_rate():
    rng = np.random.default_rng(0)
    for k in (0.5, 2.0, 6.0):
        # sample x = 1 - cos from exp(-k x) truncated to [0, 2]
        u = rng.random(200_000)
        x = -np.log1p(-u * -np.expm1(-2 * k)) / k
        assert exponential_tail_rate(1 - x) == pytest.approx(k, rel=0.03)
    assert exponential_tail_rate(np.full(10, -1.0)) == 0.0
