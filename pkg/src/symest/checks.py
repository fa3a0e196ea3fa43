"""Reduced-scale oracle checks behind ``symest verify``.

Each check compares a production code path against an independent
computation (quadrature, brute-force lattice, exact probabilities) and
reports the worst deviation seen.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .bloch import ZERO, Qubit, fibonacci_points, make_sphere_grid, to_unit_vector
from .harness import ExperimentConfig, fidelity_curve, simulate
from .likelihood import MeasurementSequence, dense_oracle_max, mle_estimate, random_sequence
from .measurement import Outcome, make_rng, p_antisymmetric, p_antisymmetric_trig, p_symmetric, sample_outcome
from .strategy import analytic_objective, hypothetical_estimates, next_reference_random, objective_by_quadrature

MUTATIONS = ("objective-sign",)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _random_qubits(rng: np.random.Generator, n: int) -> list[Qubit]:
    return [next_reference_random(rng) for _ in range(n)]


def check_probability_forms(seed: int = 1, pairs: int = 10_000) -> CheckResult:
    rng = make_rng(seed, 1)
    qs = _random_qubits(rng, 2 * pairs)
    worst = 0.0
    ok = True
    for a, b in zip(qs[::2], qs[1::2]):
        pa = p_antisymmetric(a, b)
        worst = max(worst, abs(pa - p_antisymmetric_trig(a, b)))
        ok &= pa + p_symmetric(a, b) == 1.0 and 0.0 <= pa <= 0.5
    ok &= p_antisymmetric(ZERO, ZERO) == 0.0 and p_antisymmetric(ZERO, Qubit(math.pi)) == 0.5
    ok &= worst < 1e-12
    return CheckResult("probability forms", ok, f"max |trig - dot| = {worst:.2e} over {pairs} pairs")


def check_sampling(seed: int = 2, draws: int = 100_000) -> CheckResult:
    cases = [(ZERO, Qubit(math.pi), 0.5), (Qubit(math.pi / 2, 0.0), ZERO, 0.25)]
    parts = []
    ok = True
    for k, (psi, ref, p) in enumerate(cases):
        rng = make_rng(seed, k)
        hits = sum(sample_outcome(psi, ref, rng) is Outcome.ANTISYMMETRIC for _ in range(draws))
        freq = hits / draws
        ok &= abs(freq - p) <= 0.005
        parts.append(f"p={p}: {freq:.4f}")
    return CheckResult("binomial sampling", ok, ", ".join(parts))


def check_random_references(seed: int = 3, draws: int = 100_000) -> CheckResult:
    rng = make_rng(seed, 0)
    vs = np.array([to_unit_vector(q).as_tuple() for q in _random_qubits(rng, draws)])
    mean_norm = float(np.linalg.norm(vs.mean(axis=0)))
    ks = stats.kstest(vs[:, 2], stats.uniform(loc=-1, scale=2).cdf)
    ok = mean_norm < 0.02 and ks.pvalue > 0.01
    return CheckResult("uniform references", ok, f"|mean n| = {mean_norm:.4f}, KS p = {ks.pvalue:.3f}")


def check_grid_spacing(resolution: int = 1024) -> CheckResult:
    pts = make_sphere_grid(resolution).points
    cos = np.clip(pts @ pts.T, -1.0, 1.0)
    np.fill_diagonal(cos, -2.0)
    nn = float(np.arccos(cos.max(axis=1)).max())
    return CheckResult("grid spacing", nn < 0.25, f"max nearest-neighbour angle {nn:.4f} rad at {resolution} points")


def check_objective_quadrature(seed: int = 4, cases: int = 30, hyp_grid: int = 256, sign: float = 1.0) -> CheckResult:
    """Closed-form lookahead objective vs. product quadrature of the raw integrand."""
    rng = make_rng(seed, 0)
    grid = make_sphere_grid(hyp_grid)
    worst = 0.0
    for i in range(cases):
        hist = random_sequence(rng, int(rng.integers(0, 5)))
        cand = next_reference_random(rng)
        e_a, e_s = hypothetical_estimates(hist, cand, grid)
        c = np.array(to_unit_vector(cand).as_tuple())
        value = analytic_objective(c, e_a, e_s)
        if sign != 1.0:
            value = 0.5 + sign * (value - 0.5)
        worst = max(worst, abs(value - objective_by_quadrature(c, e_a, e_s)))
    # no history: estimates are the copy and antipode of the candidate, value 7/12
    c = np.array(to_unit_vector(cand).as_tuple())
    e_a, e_s = hypothetical_estimates(MeasurementSequence(), cand, grid)
    empty_ok = np.allclose(e_a, -c, atol=1e-6) and np.allclose(e_s, c, atol=1e-6)
    empty_dev = abs(objective_by_quadrature(c, e_a, e_s) - 7.0 / 12.0)
    ok = worst < 1e-6 and empty_ok and empty_dev < 1e-9
    return CheckResult("objective vs quadrature", ok, f"max |analytic - quadrature| = {worst:.2e} over {cases} cases")


def check_mle_oracle(seed: int = 5, cases: int = 10, lattice: int = 1_000_000, grid: int = 1024) -> CheckResult:
    rng = make_rng(seed, 0)
    pts = fibonacci_points(lattice)
    g = make_sphere_grid(grid)
    worst = -math.inf
    for _ in range(cases):
        seq = random_sequence(rng, int(rng.integers(1, 6)))
        _, best = dense_oracle_max(seq, pts)
        res = mle_estimate(seq, g)
        worst = max(worst, best - res.log_likelihood)
    return CheckResult("MLE vs dense lattice", worst <= 1e-4, f"max (lattice - estimator) = {worst:.2e} over {cases} sequences")


def check_first_step_fidelity(trials: int = 10_000, seed: int = 42) -> CheckResult:
    parts = []
    ok = True
    for strategy in ("adaptive", "random"):
        curve = fidelity_curve(simulate(ExperimentConfig(n_max=1, trials=trials, strategy=strategy, master_seed=seed)))
        m = float(curve.mean[0])
        ok &= abs(m - 7.0 / 12.0) <= 0.01
        parts.append(f"{strategy} {m:.4f}")
    return CheckResult("<F_1> = 7/12", ok, ", ".join(parts))


def all_checks(mutation: str | None = None) -> list[Callable[[], CheckResult]]:
    if mutation is not None and mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}")
    sign = -1.0 if mutation == "objective-sign" else 1.0
    return [
        check_probability_forms,
        check_sampling,
        check_random_references,
        check_grid_spacing,
        lambda: check_objective_quadrature(sign=sign),
        check_mle_oracle,
        check_first_step_fidelity,
    ]


def run_checks(mutation: str | None = None) -> list[CheckResult]:
    results = []
    for check in all_checks(mutation):
        t0 = time.perf_counter()
        res = check()
        res.seconds = time.perf_counter() - t0
        results.append(res)
    return results
