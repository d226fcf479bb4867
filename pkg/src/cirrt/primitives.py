"""Minimum-jerk quintic motion primitives and their input-feasibility check."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .geometry import ZERO, Vec3

# Durations below this make the terminal-condition solve ill-conditioned.
MIN_DURATION = 1e-6


class VehicleState(NamedTuple):
    position: Vec3
    velocity: Vec3 = ZERO
    acceleration: Vec3 = ZERO

    @classmethod
    def of(cls, position, velocity=ZERO, acceleration=ZERO) -> "VehicleState":
        return cls(Vec3.of(position), Vec3.of(velocity), Vec3.of(acceleration))

    @classmethod
    def from_flat(cls, flat: Sequence[float]) -> "VehicleState":
        return cls(Vec3(*flat[0:3]), Vec3(*flat[3:6]), Vec3(*flat[6:9]))

    def flat(self) -> tuple:
        return (*self.position, *self.velocity, *self.acceleration)


@dataclass(frozen=True)
class FeasibilityLimits:
    """Total mass-normalized thrust bounds and the angular-rate bound."""

    f_min: float = 2.0
    f_max: float = 25.0
    omega_max: float = 20.0
    gravity: Vec3 = Vec3(0.0, 0.0, -9.81)

    def __post_init__(self):
        if not (0 <= self.f_min < self.f_max):
            raise ValueError(f"need 0 <= f_min < f_max, got {self.f_min}, {self.f_max}")
        if not self.omega_max > 0:
            raise ValueError(f"omega_max must be positive, got {self.omega_max}")
        object.__setattr__(self, "gravity", Vec3.of(self.gravity))

    def args(self) -> tuple:
        return (self.f_min, self.f_max, self.omega_max, *self.gravity)


class MotionPrimitive:
    """Quintic trajectory ``x(t) = a0 tau^5 + a1 tau^4 + a2 tau^3 + a/2 tau^2 + v tau + p``
    with ``tau = t - t0``, valid on ``[t0, tf]``."""

    __slots__ = ("t0", "tf", "coeffs")

    def __init__(self, t0: float, tf: float, coeffs: Sequence[float]):
        if not tf > t0:
            raise ValueError(f"primitive needs tf > t0, got [{t0}, {tf}]")
        self.t0 = float(t0)
        self.tf = float(tf)
        self.coeffs = tuple(coeffs)

    @property
    def duration(self) -> float:
        return self.tf - self.t0

    def _axis_coeff(self, k: int) -> Vec3:
        c = self.coeffs
        return Vec3(c[k], c[6 + k], c[12 + k])

    @property
    def a0(self) -> Vec3:
        return self._axis_coeff(0)

    @property
    def a1(self) -> Vec3:
        return self._axis_coeff(1)

    @property
    def a2(self) -> Vec3:
        return self._axis_coeff(2)

    @property
    def initial_state(self) -> VehicleState:
        c = self.coeffs
        return VehicleState(
            self._axis_coeff(5),
            self._axis_coeff(4),
            Vec3(2.0 * c[3], 2.0 * c[9], 2.0 * c[15]),
        )

    def state(self, t: float) -> VehicleState:
        return VehicleState.from_flat(kernels.state_at(self.coeffs, self._local(t)))

    def _local(self, t: float) -> float:
        if not (self.t0 <= t <= self.tf):
            raise ValueError(f"time {t} outside primitive interval [{self.t0}, {self.tf}]")
        return t - self.t0

    def shifted(self, dt: float) -> "MotionPrimitive":
        return MotionPrimitive(self.t0 + dt, self.tf + dt, self.coeffs)

    def __repr__(self):
        return f"MotionPrimitive(t0={self.t0!r}, tf={self.tf!r}, a0={self.a0}, a1={self.a1}, a2={self.a2})"


def generate_primitive(s0: VehicleState, t0: float, sf: VehicleState, tf: float) -> MotionPrimitive:
    """Minimum-jerk primitive from ``s0`` at ``t0`` to ``sf`` at ``tf``."""
    T = tf - t0
    if not T > 0:
        raise ValueError(f"need tf > t0, got t0={t0}, tf={tf}")
    if T < MIN_DURATION:
        raise ValueError(f"primitive duration {T} s is below {MIN_DURATION} s")
    return MotionPrimitive(t0, tf, kernels.solve_coeffs(s0.flat(), sf.flat(), T))


def evaluate(p: MotionPrimitive, t: float, order: int = 0) -> Vec3:
    """Position (order 0) through jerk (order 3) at absolute time ``t``."""
    if order not in (0, 1, 2, 3):
        raise ValueError(f"order must be 0..3, got {order}")
    return Vec3(*kernels.evaluate(p.coeffs, p._local(t), order))


def cost(p: MotionPrimitive) -> float:
    """Integral of the squared jerk norm over the primitive."""
    return kernels.jerk_cost(p.coeffs, p.duration)


def input_feasible(p: MotionPrimitive, limits: FeasibilityLimits = FeasibilityLimits()) -> bool:
    """Whether thrust stays in ``[f_min, f_max]`` and ``||j|| / f <= omega_max``.

    Extrema are taken at the endpoints and at exactly isolated stationary
    points, so the check is not a sampled approximation. Near free fall
    (thrust below 1e-6) the primitive is rejected.
    """
    return bool(kernels.input_feasible(p.coeffs, p.duration, *limits.args()))


def thrust(p: MotionPrimitive, t: float, limits: FeasibilityLimits = FeasibilityLimits()) -> float:
    a = evaluate(p, t, 2)
    g = limits.gravity
    return math.sqrt((a[0] - g[0]) ** 2 + (a[1] - g[1]) ** 2 + (a[2] - g[2]) ** 2)


def omega_bound(p: MotionPrimitive, t: float, limits: FeasibilityLimits = FeasibilityLimits()) -> float:
    """Upper bound ``||j|| / f`` on the body rate magnitude."""
    j = evaluate(p, t, 3)
    return math.sqrt(j[0] ** 2 + j[1] ** 2 + j[2] ** 2) / thrust(p, t, limits)


def sample(p: MotionPrimitive, times, order: int = 0):
    """Vectorized ``evaluate``: an ``(n, 3)`` array at absolute ``times``."""
    tau = np.asarray(times, dtype=float) - p.t0
    c = np.asarray(p.coeffs).reshape(3, 6)
    factors = (
        (1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
        (5.0, 4.0, 3.0, 2.0, 1.0),
        (20.0, 12.0, 6.0, 2.0),
        (60.0, 24.0, 6.0),
    )[order]
    out = np.zeros(tau.shape + (3,))
    for k, fk in enumerate(factors):
        out = out * tau[..., None] + fk * c[:, k]
    return out


def screen(S0, S1, durations, limits: FeasibilityLimits = FeasibilityLimits()):
    """Costs and feasibility flags for many primitives at once.

    Args:
        S0: ``(n, 9)`` initial states, position/velocity/acceleration.
        S1: ``(n, 9)`` final states.
        durations: ``(n,)`` primitive durations.
        limits: input limits for the feasibility check.

    Returns:
        ``(costs, feasible)`` arrays, identical to calling ``cost`` and
        ``input_feasible`` on each generated primitive.
    """
    return kernels.screen(S0, S1, durations, *limits.args())
