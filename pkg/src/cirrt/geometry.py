"""Vectors, convex obstacles and the point queries used by the collision detector."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

# Point-to-obstacle distances below this make the separation normal meaningless.
MIN_SEPARATION = 1e-9

BOX, SPHERE = 0, 1


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    @classmethod
    def of(cls, seq: Sequence[float]) -> "Vec3":
        if len(seq) != 3:
            raise ValueError(f"expected 3 components, got {len(seq)}")
        v = cls(float(seq[0]), float(seq[1]), float(seq[2]))
        if not all(math.isfinite(c) for c in v):
            raise ValueError(f"non-finite vector {v}")
        return v


ZERO = Vec3(0.0, 0.0, 0.0)


def add(a: Sequence[float], b: Sequence[float]) -> Vec3:
    return Vec3(a[0] + b[0], a[1] + b[1], a[2] + b[2])


def sub(a: Sequence[float], b: Sequence[float]) -> Vec3:
    return Vec3(a[0] - b[0], a[1] - b[1], a[2] - b[2])


def scale(a: Sequence[float], s: float) -> Vec3:
    return Vec3(a[0] * s, a[1] * s, a[2] * s)


def dot(a: Sequence[float], b: Sequence[float]) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def norm(a: Sequence[float]) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def unit(a: Sequence[float]) -> Vec3:
    n = norm(a)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return Vec3(a[0] / n, a[1] / n, a[2] / n)


@dataclass(frozen=True)
class Plane:
    """The set ``{p : normal . p == offset}``; ``normal`` points toward the query side."""

    normal: Vec3
    offset: float

    def signed_distance(self, point: Sequence[float]) -> float:
        return dot(self.normal, point) - self.offset


@dataclass(frozen=True)
class AxisAlignedBox:
    min_corner: Vec3
    max_corner: Vec3

    def __post_init__(self):
        lo, hi = Vec3.of(self.min_corner), Vec3.of(self.max_corner)
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"box min corner {lo} must be below max corner {hi}")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)


@dataclass(frozen=True)
class Sphere:
    center: Vec3
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", Vec3.of(self.center))
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"sphere radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))


ConvexObstacle = Union[AxisAlignedBox, Sphere]


def contains(obstacle: ConvexObstacle, point: Sequence[float]) -> bool:
    """Whether ``point`` lies in the closed obstacle set."""
    if isinstance(obstacle, AxisAlignedBox):
        lo, hi = obstacle.min_corner, obstacle.max_corner
        return all(lo[i] <= point[i] <= hi[i] for i in range(3))
    d = sub(point, obstacle.center)
    return dot(d, d) <= obstacle.radius * obstacle.radius


def closest_point(obstacle: ConvexObstacle, point: Sequence[float]) -> Vec3:
    """Point of the obstacle nearest to ``point`` (which must not be interior)."""
    if isinstance(obstacle, AxisAlignedBox):
        lo, hi = obstacle.min_corner, obstacle.max_corner
        return Vec3(*(min(max(point[i], lo[i]), hi[i]) for i in range(3)))
    d = sub(point, obstacle.center)
    n = norm(d)
    if n == 0.0:
        raise ValueError("closest point undefined at the sphere center")
    return add(obstacle.center, scale(d, obstacle.radius / n))


def distance(obstacle: ConvexObstacle, point: Sequence[float]) -> float:
    """Euclidean distance from ``point`` to the obstacle, 0 inside."""
    if isinstance(obstacle, AxisAlignedBox):
        lo, hi = obstacle.min_corner, obstacle.max_corner
        s = 0.0
        for i in range(3):
            e = max(lo[i] - point[i], 0.0, point[i] - hi[i])
            s += e * e
        return math.sqrt(s)
    return max(norm(sub(point, obstacle.center)) - obstacle.radius, 0.0)


def separation_plane(obstacle: ConvexObstacle, point: Sequence[float]) -> Plane:
    """Tangent plane through the closest obstacle point, facing ``point``.

    The whole obstacle lies in ``normal . q <= offset`` and ``point`` is
    strictly on the positive side.

    Raises:
        ValueError: ``point`` is within ``MIN_SEPARATION`` of the obstacle.
    """
    if contains(obstacle, point):
        raise ValueError("point is inside the obstacle")
    p = closest_point(obstacle, point)
    gap = sub(point, p)
    if norm(gap) < MIN_SEPARATION:
        raise ValueError("point too close to the obstacle for a separation plane")
    n = unit(gap)
    return Plane(n, dot(n, p))


def inflate(obstacle: ConvexObstacle, margin: float) -> ConvexObstacle:
    """Grow the obstacle by ``margin``; boxes get padded faces (a superset of the
    exact rounded box)."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    if margin == 0:
        return obstacle
    if isinstance(obstacle, Sphere):
        return Sphere(obstacle.center, obstacle.radius + margin)
    m = (margin, margin, margin)
    return AxisAlignedBox(sub(obstacle.min_corner, m), add(obstacle.max_corner, m))


def pack_obstacles(obstacles: Sequence[ConvexObstacle]) -> np.ndarray:
    """Flat ``(n, 7)`` float array consumed by the kernels.

    Rows are ``[BOX, lo(3), hi(3)]`` or ``[SPHERE, center(3), radius, 0, 0]``.
    """
    rows = np.zeros((len(obstacles), 7))
    for i, ob in enumerate(obstacles):
        if isinstance(ob, AxisAlignedBox):
            rows[i] = (BOX, *ob.min_corner, *ob.max_corner)
        elif isinstance(ob, Sphere):
            rows[i] = (SPHERE, *ob.center, ob.radius, 0.0, 0.0)
        else:
            raise TypeError(f"unsupported obstacle {ob!r}")
    return rows


class ObstacleSet:
    """Obstacles together with their packed kernel representation."""

    __slots__ = ("obstacles", "packed")

    def __init__(self, obstacles: Sequence[ConvexObstacle] = ()):
        self.obstacles = tuple(obstacles)
        self.packed = pack_obstacles(self.obstacles)

    @classmethod
    def coerce(cls, obstacles) -> "ObstacleSet":
        return obstacles if isinstance(obstacles, cls) else cls(obstacles)

    def __len__(self):
        return len(self.obstacles)

    def __iter__(self):
        return iter(self.obstacles)

    def __getitem__(self, i):
        return self.obstacles[i]
