"""Monte Carlo engine for the estimation scheme.

Each trial draws a uniformly distributed unknown qubit, then measures it
``n_max`` times against references chosen by the strategy, re-estimating
after every step. Mean fidelities over trials stand in for the average over
the Bloch sphere and over measurement outcomes.

Trial ``i`` draws from its own stream ``make_rng(master_seed, i)``: two
uniforms for the unknown state, then per step two more for a random
reference (random strategy only) and one for the outcome. Results are thus
fixed by (config, trial index) regardless of how trials are split between
workers.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as _k
from .bloch import (
    Qubit,
    ZERO,
    from_unit_vector,
    make_sphere_grid,
    rotate_to_north_pole,
    to_unit_vector,
    vectors_to_angles,
)
from .likelihood import MAX_ITER, MIN_STEP, MeasurementRecord, MeasurementSequence
from .measurement import MAX_SEED, Outcome, make_rng, outcome_from_uniform, p_antisymmetric
from .strategy import AdaptiveSearch, StrategyKind, StrategyTag, adaptive_search, next_reference_random

log = logging.getLogger(__name__)

DEFAULT_SNAPSHOT_STEPS = (1, 5, 20)
HIST_BINS = 40
HIST_EDGES = np.linspace(-1.0, 1.0, HIST_BINS + 1)
THREADS_ENV = "SYMEST_THREADS"


@dataclass(frozen=True)
class ExperimentConfig:
    n_max: int = 20
    trials: int = 10_000
    strategy: str = "adaptive"
    master_seed: int = 42
    mle_grid: int = 1024
    search_grid: int = 512
    hyp_grid: int = 256
    # None picks the default steps that fit within n_max
    snapshot_steps: tuple[int, ...] | None = None

    def __post_init__(self):
        for name in ("n_max", "trials", "mle_grid", "search_grid", "hyp_grid", "master_seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ValueError(f"{name} must be an integer, got {v!r}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.master_seed <= MAX_SEED:
            raise ValueError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        for name in ("mle_grid", "search_grid", "hyp_grid"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2")
        object.__setattr__(self, "strategy", StrategyTag(self.strategy).value)
        if self.snapshot_steps is None:
            steps = tuple(s for s in DEFAULT_SNAPSHOT_STEPS if s <= self.n_max)
        else:
            steps = tuple(sorted({int(s) for s in self.snapshot_steps}))
            bad = [s for s in steps if not 1 <= s <= self.n_max]
            if bad:
                raise ValueError(f"snapshot steps {bad} outside [1, {self.n_max}]")
        object.__setattr__(self, "snapshot_steps", steps)

    def strategy_kind(self) -> StrategyKind:
        if self.strategy == StrategyTag.ADAPTIVE.value:
            return StrategyKind.adaptive(self.search_grid, self.hyp_grid)
        return StrategyKind.random()

    def with_strategy(self, strategy: str) -> "ExperimentConfig":
        return ExperimentConfig(**{**asdict(self), "strategy": strategy})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snapshot_steps"] = list(self.snapshot_steps)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if d.get("snapshot_steps") is not None:
            d["snapshot_steps"] = tuple(d["snapshot_steps"])
        return cls(**d)


@dataclass
class TrialResult:
    true_state: Qubit
    records: MeasurementSequence
    estimates: list[Qubit]
    fidelities: list[float]


@dataclass
class TrialArrays:
    """Results of many trials as arrays; axis 0 is the trial index, axis 1 the step."""

    true_vectors: np.ndarray  # (T, 3)
    reference_vectors: np.ndarray  # (T, n, 3)
    antisymmetric: np.ndarray  # (T, n) bool
    estimate_vectors: np.ndarray  # (T, n, 3)
    fidelities: np.ndarray  # (T, n)
    trial_indices: np.ndarray = field(default=None)

    @property
    def n_trials(self) -> int:
        return self.true_vectors.shape[0]

    @property
    def n_max(self) -> int:
        return self.fidelities.shape[1]

    def trial(self, i: int) -> TrialResult:
        refs = [from_unit_vector(v) for v in self.reference_vectors[i]]
        recs = tuple(
            MeasurementRecord(Outcome.ANTISYMMETRIC if a else Outcome.SYMMETRIC, r)
            for a, r in zip(self.antisymmetric[i], refs)
        )
        return TrialResult(
            true_state=from_unit_vector(self.true_vectors[i]),
            records=MeasurementSequence(recs),
            estimates=[from_unit_vector(v) for v in self.estimate_vectors[i]],
            fidelities=[float(f) for f in self.fidelities[i]],
        )

    @classmethod
    def concatenate(cls, parts: Sequence["TrialArrays"]) -> "TrialArrays":
        return cls(
            *(np.concatenate([getattr(p, name) for p in parts]) for name in (
                "true_vectors", "reference_vectors", "antisymmetric", "estimate_vectors", "fidelities", "trial_indices"
            ))
        )


def _vec(q: Qubit) -> tuple[float, float, float]:
    return to_unit_vector(q).as_tuple()


class AdaptivePolicy:
    """Adaptive references and estimates, memoized by outcome history.

    With the first reference fixed and each later one a deterministic
    function of the history, the whole record sequence is determined by
    its outcome string, e.g. ``"ssa"``.
    """

    def __init__(self, search: AdaptiveSearch, mle_grid):
        self.search = search
        self.mle_grid = mle_grid
        self._refs: dict[str, Qubit] = {"": ZERO}
        self._est: dict[str, np.ndarray] = {}

    def history(self, key: str) -> tuple[np.ndarray, np.ndarray]:
        refs = np.array([_vec(self.reference(key[:i])) for i in range(len(key))]).reshape(len(key), 3)
        anti = np.array([c == "a" for c in key], dtype=bool)
        return refs, anti

    def reference(self, key: str) -> Qubit:
        """Reference measured after the outcome history ``key``."""
        ref = self._refs.get(key)
        if ref is None:
            refs, anti = self.history(key)
            ref = self._refs[key] = self.search.candidates[self.search.best_index(refs, anti)]
        return ref

    def estimate(self, key: str) -> np.ndarray:
        est = self._est.get(key)
        if est is None:
            refs, anti = self.history(key)
            g = self.mle_grid
            n0, n1, n2, _ = _k.mle_one(refs, anti, g.points, g.spacing, MIN_STEP, MAX_ITER)
            est = self._est[key] = np.array([n0, n1, n2])
        return est

    @property
    def n_nodes(self) -> int:
        return len(self._refs)


def _simulate_chunk(config: ExperimentConfig, indices: Sequence[int]) -> TrialArrays:
    n = config.n_max
    t = len(indices)
    true_v = np.empty((t, 3))
    refs = np.empty((t, n, 3))
    anti = np.zeros((t, n), dtype=bool)
    est = np.empty((t, n, 3))
    grid = make_sphere_grid(config.mle_grid)
    adaptive = config.strategy == StrategyTag.ADAPTIVE.value
    policy = AdaptivePolicy(adaptive_search(config.strategy_kind()), grid) if adaptive else None

    for row, idx in enumerate(indices):
        rng = make_rng(config.master_seed, idx)
        psi = next_reference_random(rng)
        true_v[row] = _vec(psi)
        key = ""
        for step in range(n):
            ref_q = policy.reference(key) if adaptive else next_reference_random(rng)
            refs[row, step] = _vec(ref_q)
            outcome = outcome_from_uniform(rng.random(), p_antisymmetric(psi, ref_q))
            anti[row, step] = outcome is Outcome.ANTISYMMETRIC
            key += outcome.value
            if adaptive:
                est[row, step] = policy.estimate(key)
        if not adaptive:
            est[row], _ = _k.incremental_estimates(refs[row], anti[row], grid.points, grid.spacing, MIN_STEP, MAX_ITER)

    fid = np.clip(
        0.5 * (1.0 + (true_v[:, None, 0] * est[..., 0] + true_v[:, None, 1] * est[..., 1] + true_v[:, None, 2] * est[..., 2])),
        0.0,
        1.0,
    )
    if policy is not None:
        log.debug("adaptive policy evaluated %d histories", policy.n_nodes)
    return TrialArrays(true_v, refs, anti, est, fid, np.asarray(indices, dtype=np.int64))


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if workers < 0:
        raise ValueError("worker count must be >= 0")
    return workers or (os.cpu_count() or 1)


def simulate(config: ExperimentConfig, workers: int | None = None, indices: Sequence[int] | None = None) -> TrialArrays:
    """Run trials (all of ``range(config.trials)`` by default), ordered by trial index."""
    if indices is None:
        indices = range(config.trials)
    indices = sorted(int(i) for i in indices)
    for i in indices:
        if not 0 <= i < config.trials:
            raise ValueError(f"trial index {i} outside [0, {config.trials})")
    workers = min(worker_count(workers), max(1, len(indices)))
    if workers == 1:
        return _simulate_chunk(config, indices)
    chunks = [c.tolist() for c in np.array_split(np.asarray(indices), workers) if len(c)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_simulate_chunk, [config] * len(chunks), chunks))
    return TrialArrays.concatenate(parts)


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialResult:
    return simulate(config, workers=1, indices=[trial_index]).trial(0)


# -- aggregation -------------------------------------------------------------


def optimal_fidelity(n) -> np.ndarray:
    """Best mean fidelity reachable by a collective measurement on n copies, (n+1)/(n+2)."""
    n = np.asarray(n, dtype=float)
    return (n + 1.0) / (n + 2.0)


@dataclass
class FidelityCurve:
    n: np.ndarray
    mean: np.ndarray
    std_error: np.ndarray
    optimal: np.ndarray
    trials: int

    def rows(self):
        for i in range(len(self.n)):
            yield int(self.n[i]), float(self.mean[i]), float(self.std_error[i]), float(self.optimal[i])


def fidelity_curve(arrays: TrialArrays) -> FidelityCurve:
    f = arrays.fidelities
    t = f.shape[0]
    mean = f.mean(axis=0)
    se = f.std(axis=0, ddof=1) / math.sqrt(t) if t > 1 else np.zeros(f.shape[1])
    n = np.arange(1, f.shape[1] + 1)
    return FidelityCurve(n, mean, se, optimal_fidelity(n), t)


@dataclass
class SnapshotDistribution:
    step: int
    estimate_cos: np.ndarray
    estimate_phi: np.ndarray
    reference_cos: np.ndarray
    reference_phi: np.ndarray
    bin_edges: np.ndarray
    estimate_counts: np.ndarray
    reference_counts: np.ndarray


def _rotated(true_v: np.ndarray, vecs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rot = rotate_to_north_pole(true_v, vecs)
    cos = np.clip(rot[:, 2], -1.0, 1.0)
    _, phi = vectors_to_angles(rot)
    return cos, phi


def histogram(cos_values: np.ndarray) -> np.ndarray:
    counts, _ = np.histogram(cos_values, bins=HIST_EDGES)
    return counts


def snapshot_from_arrays(arrays: TrialArrays, step: int) -> SnapshotDistribution:
    if not 1 <= step <= arrays.n_max:
        raise ValueError(f"step {step} outside [1, {arrays.n_max}]")
    ec, ep = _rotated(arrays.true_vectors, arrays.estimate_vectors[:, step - 1])
    rc, rp = _rotated(arrays.true_vectors, arrays.reference_vectors[:, step - 1])
    return SnapshotDistribution(step, ec, ep, rc, rp, HIST_EDGES.copy(), histogram(ec), histogram(rc))


def rotated_snapshot(trials: Sequence[TrialResult], step: int) -> SnapshotDistribution:
    """Estimates and references at ``step`` in frames putting each true state at +z."""
    if not trials:
        raise ValueError("no trials")
    n_max = len(trials[0].estimates)
    if not 1 <= step <= n_max:
        raise ValueError(f"step {step} outside [1, {n_max}]")
    true_v = np.array([_vec(t.true_state) for t in trials])
    est = np.array([_vec(t.estimates[step - 1]) for t in trials])
    ref = np.array([_vec(t.records[step - 1].reference) for t in trials])
    ec, ep = _rotated(true_v, est)
    rc, rp = _rotated(true_v, ref)
    return SnapshotDistribution(step, ec, ep, rc, rp, HIST_EDGES.copy(), histogram(ec), histogram(rc))


def exponential_tail_rate(cos_values: np.ndarray) -> float:
    """Rate k of the density ~ exp(-k (1 - cos)) on cos in [-1, 1], fitted by maximum likelihood.

    Diagnostic only. Solves mean(1 - cos) = 1/k - 2/(e^{2k} - 1).
    """
    from scipy.optimize import brentq

    x = 1.0 - np.asarray(cos_values, dtype=float)
    m = float(x.mean())
    if m >= 1.0:
        return 0.0

    def mean_gap(k):
        return 1.0 / k - 2.0 / math.expm1(2.0 * k) - m

    hi = 1.0
    while mean_gap(hi) > 0.0:
        hi *= 2.0
    return brentq(mean_gap, 1e-9, hi)


def run_experiment(config: ExperimentConfig, workers: int | None = None):
    """Run all trials; returns the fidelity curve and the configured snapshots."""
    arrays = simulate(config, workers)
    return fidelity_curve(arrays), [snapshot_from_arrays(arrays, s) for s in config.snapshot_steps]
