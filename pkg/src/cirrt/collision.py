"""Primitive-versus-obstacle collision checking, collision timing and the impact model."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels
from .geometry import ZERO, ObstacleSet, Plane, Vec3, dot, norm
from .primitives import MotionPrimitive, VehicleState


@dataclass(frozen=True)
class CollisionParams:
    """Impact model constants and the bisection time threshold.

    ``restitution_e`` and ``kappa`` default to experimentally identified
    values for a cage-protected vehicle.
    """

    restitution_e: float = 0.43
    kappa: float = 0.20
    time_threshold: float = 1e-3

    def __post_init__(self):
        if not 0 < self.restitution_e <= 1:
            raise ValueError(f"restitution must be in (0, 1], got {self.restitution_e}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa}")
        if not self.time_threshold > 0:
            raise ValueError(f"time_threshold must be positive, got {self.time_threshold}")


DEFAULT_PARAMS = CollisionParams()


@dataclass(frozen=True)
class CollisionReport:
    hit: bool
    time: float = math.nan
    obstacle_index: int = -1
    surface_normal: Vec3 = ZERO


def min_on_interval(p: MotionPrimitive, plane: Plane, ta: float, tb: float) -> tuple[float, float]:
    """Exact minimum of the signed plane distance along ``p`` over ``[ta, tb]``.

    Returns ``(min_value, argmin_t)`` in absolute time.
    """
    if not (p.t0 <= ta <= tb <= p.tf):
        raise ValueError(f"[{ta}, {tb}] is not inside [{p.t0}, {p.tf}]")
    n = plane.normal
    value, tau = kernels.min_on_interval(p.coeffs, n[0], n[1], n[2], plane.offset, ta - p.t0, tb - p.t0)
    return value, tau + p.t0


def _window(p: MotionPrimitive, skip_start: float, skip_end: float) -> tuple[float, float]:
    return skip_start, p.duration - skip_end


def collision_time(
    p: MotionPrimitive,
    obstacles,
    params: CollisionParams = DEFAULT_PARAMS,
    *,
    skip_start: float = 0.0,
    skip_end: float = 0.0,
) -> CollisionReport:
    """First collision of ``p`` with any obstacle.

    The primitive is bisected, earliest section first, until the section
    crossing a separation plane is shorter than ``params.time_threshold``;
    the start of that section is the reported time. ``skip_start`` and
    ``skip_end`` exclude leading/trailing intervals, used for primitives that
    start or end on an obstacle surface.
    """
    obs = ObstacleSet.coerce(obstacles)
    ta, tb = _window(p, skip_start, skip_end)
    hit, tau, idx, nx, ny, nz = kernels.first_hit(p.coeffs, ta, tb, obs.packed, params.time_threshold, True)
    if not hit:
        return CollisionReport(False)
    return CollisionReport(True, p.t0 + tau, idx, Vec3(nx, ny, nz))


def collision_free(
    p: MotionPrimitive,
    obstacles,
    params: CollisionParams = DEFAULT_PARAMS,
    *,
    skip_start: float = 0.0,
    skip_end: float = 0.0,
) -> bool:
    obs = ObstacleSet.coerce(obstacles)
    ta, tb = _window(p, skip_start, skip_end)
    return not kernels.first_hit(p.coeffs, ta, tb, obs.packed, params.time_threshold, False)[0]


def collision_model(
    s: VehicleState, normal: Vec3, params: CollisionParams = DEFAULT_PARAMS
) -> VehicleState:
    """Post-impact state: position kept, normal speed reversed and scaled by the
    restitution, tangential speed reduced in proportion to the incidence angle,
    acceleration reset to hover.

    Raises:
        ValueError: the velocity does not point into the surface.
    """
    v = s.velocity
    vn = dot(v, normal)
    if not vn < 0:
        raise ValueError(f"velocity {v} is not approaching the surface with normal {normal}")
    e, kappa = params.restitution_e, params.kappa
    vt_vec = Vec3(v[0] - vn * normal[0], v[1] - vn * normal[1], v[2] - vn * normal[2])
    vt = norm(vt_vec)
    vn_post = -e * vn
    if vt < 1e-9:
        return VehicleState(s.position, Vec3(*(vn_post * c for c in normal)), ZERO)
    vt_post = vt + kappa * (-e - 1.0) * math.atan(vt / vn) * vn
    k = vt_post / vt
    post = Vec3(*(vn_post * normal[i] + k * vt_vec[i] for i in range(3)))
    return VehicleState(s.position, post, ZERO)

