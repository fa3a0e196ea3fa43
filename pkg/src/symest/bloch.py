"""Bloch-sphere geometry for pure qubits.

A pure qubit cos(theta/2)|0> + e^{i phi} sin(theta/2)|1> is handled through
its Bloch vector n = (sin theta cos phi, sin theta sin phi, cos theta).
Overlaps and outcome probabilities then reduce to dot products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

TWO_PI = 2.0 * math.pi
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Qubit:
    """Pure qubit given by polar angle ``theta`` and azimuth ``phi`` (radians).

    Construction canonicalizes: ``phi`` is wrapped into [0, 2pi) and set to
    zero at the poles.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        theta = float(self.theta)
        phi = float(self.phi)
        if not (math.isfinite(theta) and math.isfinite(phi)):
            raise ValueError(f"non-finite angles ({theta}, {phi})")
        if theta < 0.0 or theta > math.pi:
            raise ValueError(f"theta={theta} outside [0, pi]")
        if theta == 0.0 or theta == math.pi:
            phi = 0.0
        else:
            phi = math.fmod(phi, TWO_PI)
            if phi < 0.0:
                phi += TWO_PI
            if phi >= TWO_PI:  # fmod of a tiny negative can round up to 2pi
                phi = 0.0
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @property
    def vector(self) -> np.ndarray:
        return np.array(to_unit_vector(self).as_tuple())

    def __repr__(self):
        return f"Qubit(theta={self.theta!r}, phi={self.phi!r})"


ZERO = Qubit(0.0, 0.0)
ONE = Qubit(math.pi, 0.0)


@dataclass(frozen=True)
class UnitVector3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(norm) or abs(norm - 1.0) > UNIT_TOL:
            raise ValueError(f"vector norm {norm} deviates from 1 by more than {UNIT_TOL}")
        if norm != 1.0:
            object.__setattr__(self, "x", self.x / norm)
            object.__setattr__(self, "y", self.y / norm)
            object.__setattr__(self, "z", self.z / norm)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.as_tuple(), dtype=dtype)


VectorLike = Union[UnitVector3, Sequence[float], np.ndarray]


def to_unit_vector(q: Qubit) -> UnitVector3:
    if q.theta == math.pi:
        return UnitVector3(0.0, 0.0, -1.0)  # sin(pi) is not exactly zero in floating point
    st = math.sin(q.theta)
    return UnitVector3(st * math.cos(q.phi), st * math.sin(q.phi), math.cos(q.theta))


def from_unit_vector(v: VectorLike) -> Qubit:
    """Inverse of :func:`to_unit_vector`.

    Raises ``ValueError`` if the input norm deviates from one by more than 1e-9.
    """
    x, y, z = (float(c) for c in np.asarray(v, dtype=float).reshape(3))
    norm = math.sqrt(x * x + y * y + z * z)
    if not math.isfinite(norm) or abs(norm - 1.0) > UNIT_TOL:
        raise ValueError(f"vector norm {norm} deviates from 1 by more than {UNIT_TOL}")
    x, y, z = x / norm, y / norm, z / norm
    # atan2 keeps full precision near the poles, unlike acos(z)
    theta = math.atan2(math.hypot(x, y), z)
    phi = math.atan2(y, x)
    return Qubit(min(max(theta, 0.0), math.pi), phi)


def vectors_to_angles(vecs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (theta, phi) of unit vectors with shape (..., 3), phi in [0, 2pi)."""
    vecs = np.asarray(vecs, dtype=float)
    x, y, z = vecs[..., 0], vecs[..., 1], vecs[..., 2]
    theta = np.arctan2(np.hypot(x, y), z)
    phi = np.mod(np.arctan2(y, x), TWO_PI)
    phi = np.where(phi >= TWO_PI, 0.0, phi)
    phi = np.where((theta == 0.0) | (theta == math.pi), 0.0, phi)
    return theta, phi


def angles_to_vectors(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def dot3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Componentwise dot product over the last axis.

    Written out term by term so each result depends only on its own inputs,
    whatever the batch shape (BLAS paths do not guarantee that).
    """
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def fidelity(a: Qubit, b: Qubit) -> float:
    """|<a|b>|^2 = (1 + n_a . n_b) / 2."""
    if a == b:
        return 1.0
    va, vb = to_unit_vector(a), to_unit_vector(b)
    d = va.x * vb.x + va.y * vb.y + va.z * vb.z
    return min(max(0.5 * (1.0 + d), 0.0), 1.0)


def fidelity_vec(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.clip(0.5 * (1.0 + dot3(a, b)), 0.0, 1.0)


def great_circle_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.cross(a, b)
    return np.arctan2(np.linalg.norm(cross, axis=-1), dot3(a, b))


# -- rotations ---------------------------------------------------------------


def rotate_to_north_pole(targets: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Apply, row by row, the rotation taking ``targets[i]`` to +z to ``vectors[i]``.

    The rotation turns about n x z by the angle between n and z. The exact
    south pole maps by a pi turn about x.
    """
    n = np.asarray(targets, dtype=float)
    w = np.asarray(vectors, dtype=float)
    n, w = np.broadcast_arrays(n, w)
    c = n[..., 2]
    # axis (unnormalized) v = n x z, |v| = sin(angle)
    vx, vy = n[..., 1], -n[..., 0]
    s2 = vx * vx + vy * vy
    with np.errstate(divide="ignore", invalid="ignore"):
        # v x (v x w) scales as |v|^2; pick the stable form of (1 - c) / s^2
        factor = np.where(c > 0.0, 1.0 / (1.0 + c), (1.0 - c) / s2)
    # v x w with v = (vx, vy, 0)
    cx = vy * w[..., 2]
    cy = -vx * w[..., 2]
    cz = vx * w[..., 1] - vy * w[..., 0]
    # v x (v x w)
    ccx = vy * cz
    ccy = -vx * cz
    ccz = vx * cy - vy * cx
    with np.errstate(invalid="ignore"):  # inf * 0 at the south pole, replaced below
        out = np.stack(
            [w[..., 0] + cx + factor * ccx, w[..., 1] + cy + factor * ccy, w[..., 2] + cz + factor * ccz],
            axis=-1,
        )
    pole = s2 == 0.0
    if np.any(pole):
        south = pole & (c < 0.0)
        north = pole & ~south
        flipped = np.stack([w[..., 0], -w[..., 1], -w[..., 2]], axis=-1)
        out = np.where(north[..., None], w, out)
        out = np.where(south[..., None], flipped, out)
    return out


def rotation_to_north_pole(target: Qubit) -> np.ndarray:
    """3x3 proper rotation matrix R with R @ n_target = (0, 0, 1)."""
    n = np.array(to_unit_vector(target).as_tuple())
    basis = np.eye(3)
    # columns are the images of the basis vectors
    return rotate_to_north_pole(np.broadcast_to(n, (3, 3)), basis).T


# -- grids -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Deterministic Fibonacci lattice of ``resolution`` unit vectors, shape (resolution, 3)."""

    points: np.ndarray
    resolution: int

    def __len__(self):
        return self.resolution

    def __eq__(self, other):
        return (
            isinstance(other, SphereGrid)
            and self.resolution == other.resolution
            and np.array_equal(self.points, other.points)
        )

    def __hash__(self):
        return hash((self.resolution, self.points.tobytes()))

    @property
    def spacing(self) -> float:
        """Typical nearest-neighbour angle, sqrt(4 pi / resolution)."""
        return math.sqrt(4.0 * math.pi / self.resolution)


def fibonacci_points(n: int) -> np.ndarray:
    i = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.mod(i * GOLDEN_ANGLE, TWO_PI)
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    return pts / np.sqrt(dot3(pts, pts))[:, None]


_GRID_CACHE: dict[int, SphereGrid] = {}


def make_sphere_grid(resolution: int) -> SphereGrid:
    if isinstance(resolution, bool) or int(resolution) != resolution or resolution < 2:
        raise ValueError(f"grid resolution must be an integer >= 2, got {resolution!r}")
    resolution = int(resolution)
    grid = _GRID_CACHE.get(resolution)
    if grid is None:
        pts = fibonacci_points(resolution)
        pts.setflags(write=False)
        grid = SphereGrid(pts, resolution)
        if resolution <= 1 << 16:
            _GRID_CACHE[resolution] = grid
    return grid
