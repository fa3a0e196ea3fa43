"""Reference-state selection: uniform random baseline and one-step lookahead.

The adaptive rule picks the next reference r maximizing the expected fidelity
after one more measurement, averaged uniformly over the unknown state:

    G(r) = avg_psi [ p_a(r, psi) F(e_a, psi) + p_s(r, psi) F(e_s, psi) ]

where e_a, e_s are the estimates the history would yield with outcome a or s
against r. With p_a = (1 - r.n)/4, p_s = (3 + r.n)/4, F(e, psi) = (1 + e.n)/2
and the sphere moments avg(n) = 0, avg((a.n)(b.n)) = a.b/3 this is

    G(r) = 1/2 + r . (e_s - e_a) / 24.

``objective_by_quadrature`` integrates the unreduced expression numerically
and is kept as the cross-check for that reduction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels as _k
from .bloch import ZERO, Qubit, SphereGrid, from_unit_vector, make_sphere_grid, to_unit_vector
from .likelihood import MAX_ITER, MIN_STEP, MeasurementSequence, mle_estimate

DEFAULT_SEARCH_GRID = 512
DEFAULT_HYP_GRID = 256


class StrategyTag(str, enum.Enum):
    RANDOM = "random"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class StrategyKind:
    tag: StrategyTag
    adaptive_search_grid: SphereGrid | None = None
    hypothetical_mle_grid: SphereGrid | None = None

    def __post_init__(self):
        object.__setattr__(self, "tag", StrategyTag(self.tag))
        if self.tag is StrategyTag.ADAPTIVE and (
            self.adaptive_search_grid is None or self.hypothetical_mle_grid is None
        ):
            raise ValueError("adaptive strategy needs a search grid and a hypothetical MLE grid")

    @classmethod
    def random(cls) -> "StrategyKind":
        return cls(StrategyTag.RANDOM)

    @classmethod
    def adaptive(cls, search: int = DEFAULT_SEARCH_GRID, hypothetical: int = DEFAULT_HYP_GRID) -> "StrategyKind":
        return cls(StrategyTag.ADAPTIVE, make_sphere_grid(search), make_sphere_grid(hypothetical))

    @property
    def is_adaptive(self) -> bool:
        return self.tag is StrategyTag.ADAPTIVE


@dataclass(frozen=True)
class AdaptionObjectiveValue:
    value: float
    candidate: Qubit


def next_reference_random(rng: np.random.Generator) -> Qubit:
    """Uniformly distributed reference; uses exactly two draws (cos theta, then phi)."""
    cz = 2.0 * rng.random() - 1.0
    phi = 2.0 * math.pi * rng.random()
    return Qubit(math.acos(min(max(cz, -1.0), 1.0)), phi)


def analytic_objective(candidate: np.ndarray, e_a: np.ndarray, e_s: np.ndarray) -> float:
    ea = np.ascontiguousarray(e_a, dtype=float)
    es = np.ascontiguousarray(e_s, dtype=float)
    c = np.asarray(candidate, dtype=float)
    return float(_k.objective_value(c[0], c[1], c[2], ea, es))


def hypothetical_estimates(history: MeasurementSequence, candidate: Qubit, grid: SphereGrid):
    """Bloch vectors of the estimates after appending outcome a, resp. s, against ``candidate``."""
    e_a = mle_estimate(history.append("a", candidate), grid).vector
    e_s = mle_estimate(history.append("s", candidate), grid).vector
    return e_a, e_s


def expected_fidelity_objective(
    history: MeasurementSequence, candidate: Qubit, hypothetical_mle_grid: SphereGrid
) -> AdaptionObjectiveValue:
    e_a, e_s = hypothetical_estimates(history, candidate, hypothetical_mle_grid)
    c = np.array(to_unit_vector(candidate).as_tuple())
    return AdaptionObjectiveValue(analytic_objective(c, e_a, e_s), candidate)


@lru_cache(maxsize=8)
def quadrature_nodes(n_cos: int = 100, n_phi: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on the sphere: Gauss-Legendre in cos(theta), equispaced phi.

    Weights sum to one (normalized sphere average). Exact for polynomials in
    the Bloch components up to degree min(2 n_cos - 1, n_phi - 1).
    """
    x, w = np.polynomial.legendre.leggauss(n_cos)
    phi = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    c, p = np.meshgrid(x, phi, indexing="ij")
    s = np.sqrt(1.0 - c * c)
    nodes = np.stack([s * np.cos(p), s * np.sin(p), c], axis=-1).reshape(-1, 3)
    weights = (np.repeat(w, n_phi) / (2.0 * n_phi)).reshape(-1)
    return nodes, weights


def objective_by_quadrature(candidate: np.ndarray, e_a: np.ndarray, e_s: np.ndarray, n_cos: int = 100, n_phi: int = 100) -> float:
    """Numerical sphere average of p_a F_a + p_s F_s over the unknown state."""
    nodes, weights = quadrature_nodes(n_cos, n_phi)
    r = np.asarray(candidate, dtype=float)
    rn = nodes @ r
    pa = 0.25 * (1.0 - rn)
    ps = 1.0 - pa
    fa = 0.5 * (1.0 + nodes @ np.asarray(e_a, dtype=float))
    fs = 0.5 * (1.0 + nodes @ np.asarray(e_s, dtype=float))
    return float(np.dot(weights, pa * fa + ps * fs))


# -- adaptive search ---------------------------------------------------------


class AdaptiveSearch:
    """Precomputed tables for the candidate scan of one (search grid, hypothetical grid) pair."""

    def __init__(self, search_grid: SphereGrid, hyp_grid: SphereGrid):
        self.search_grid = search_grid
        self.hyp_grid = hyp_grid
        self.candidates = [from_unit_vector(p) for p in search_grid.points]
        # records store references as canonical qubits; scan the same vectors
        self.candidate_vectors = np.array([to_unit_vector(q).as_tuple() for q in self.candidates])
        self.table_a, self.table_s = _k.outcome_tables(hyp_grid.points, self.candidate_vectors)

    def objectives(self, refs: np.ndarray, anti: np.ndarray) -> np.ndarray:
        return _k.adaptive_objectives(
            np.ascontiguousarray(refs, dtype=float),
            np.ascontiguousarray(anti, dtype=bool),
            self.hyp_grid.points,
            self.candidate_vectors,
            self.table_a,
            self.table_s,
            self.hyp_grid.spacing,
            MIN_STEP,
            MAX_ITER,
        )

    def best_index(self, refs: np.ndarray, anti: np.ndarray) -> int:
        return int(_k.first_argmax(self.objectives(refs, anti)))


_SEARCHES: dict[tuple, AdaptiveSearch] = {}


def adaptive_search(strategy: StrategyKind) -> AdaptiveSearch:
    key = (strategy.adaptive_search_grid.resolution, strategy.hypothetical_mle_grid.resolution)
    search = _SEARCHES.get(key)
    if search is None:
        search = _SEARCHES[key] = AdaptiveSearch(strategy.adaptive_search_grid, strategy.hypothetical_mle_grid)
    return search


def next_reference_adaptive(history: MeasurementSequence, strategy: StrategyKind) -> Qubit:
    """Reference maximizing the expected next-step fidelity; |0> for an empty history."""
    if not strategy.is_adaptive:
        raise ValueError("next_reference_adaptive needs an adaptive strategy")
    if len(history) == 0:
        return ZERO
    search = adaptive_search(strategy)
    return search.candidates[search.best_index(history.reference_vectors, history.antisymmetric_mask)]
