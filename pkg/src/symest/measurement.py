"""Symmetry measurement of an unknown qubit against a reference qubit.

The pair |psi>|r> is projected onto the antisymmetric (singlet) subspace or
its symmetric complement. With Bloch vectors n_psi, n_r:

    p_a = (1 - cos t cos t_r - cos(p - p_r) sin t sin t_r) / 4 = (1 - n_psi . n_r) / 4
    p_s = 1 - p_a
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .bloch import Qubit, to_unit_vector

MAX_SEED = 2**64 - 1


class Outcome(str, enum.Enum):
    ANTISYMMETRIC = "a"
    SYMMETRIC = "s"

    @classmethod
    def parse(cls, value) -> "Outcome":
        if isinstance(value, Outcome):
            return value
        return cls(str(value).lower())

    def __str__(self):
        return self.value


def p_antisymmetric(psi: Qubit, reference: Qubit) -> float:
    """Probability of the antisymmetric outcome, in [0, 1/2]."""
    if psi == reference:
        return 0.0
    a, b = to_unit_vector(psi), to_unit_vector(reference)
    d = a.x * b.x + a.y * b.y + a.z * b.z
    return min(max(0.25 * (1.0 - d), 0.0), 0.5)


def p_antisymmetric_trig(psi: Qubit, reference: Qubit) -> float:
    """Same probability written in polar angles; kept as an independent cross-check."""
    t, p = psi.theta, psi.phi
    tr, pr = reference.theta, reference.phi
    return 0.25 * (1.0 - math.cos(t) * math.cos(tr) - math.cos(p - pr) * math.sin(t) * math.sin(tr))


def p_symmetric(psi: Qubit, reference: Qubit) -> float:
    return 1.0 - p_antisymmetric(psi, reference)


def outcome_probability(outcome: Outcome, psi: Qubit, reference: Qubit) -> float:
    if Outcome.parse(outcome) is Outcome.ANTISYMMETRIC:
        return p_antisymmetric(psi, reference)
    return p_symmetric(psi, reference)


def log_outcome_prob(dots: np.ndarray, antisymmetric) -> np.ndarray:
    """Elementwise log p_alpha given Bloch dot products ``dots``.

    ``antisymmetric`` is a bool (or bool array broadcastable to ``dots``).
    A zero probability maps to -inf.
    """
    dots = np.asarray(dots, dtype=float)
    pa = np.clip(0.25 * (1.0 - dots), 0.0, 0.5)
    with np.errstate(divide="ignore"):
        return np.log(np.where(antisymmetric, pa, 1.0 - pa))


# -- random streams ----------------------------------------------------------


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for ``seed``, optionally split by stream indices.

    ``make_rng(seed, i)`` gives the stream of trial ``i``; streams for distinct
    indices are statistically independent and do not depend on evaluation order.
    """
    seq = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(seq))


def outcome_from_uniform(u: float, pa: float) -> Outcome:
    return Outcome.ANTISYMMETRIC if u < pa else Outcome.SYMMETRIC


def sample_outcome(psi: Qubit, reference: Qubit, rng: np.random.Generator) -> Outcome:
    """Draw one measurement outcome; consumes exactly one uniform from ``rng``."""
    return outcome_from_uniform(rng.random(), p_antisymmetric(psi, reference))
