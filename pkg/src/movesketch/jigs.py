"""Virtual material jigs: dynamical filters over an input pose stream.

Each filter renders the feel of a physical object held while puppeteering:

* ``WeightJig`` - a mass on a spring-damper chasing the hand, adding lag and
  overshoot like holding a set of weights
* ``PendulumJig`` - a bob dangling from the hand on a rigid link under
  gravity, like a controller hung from fabric
* ``StickJig`` - motion constrained to a polyline path, like sliding along
  a rigid bar
* ``BandJig`` - two hands coupled by a stretchy band (two-device filter)

Steps are pure: (config, state, input, dt) -> (new state, filtered output).
Integration is semi-implicit (position-based for the pendulum) and substeps
internally, so filters stay stable at stiff settings and the pendulum never
gains mechanical energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from movesketch.geom import Pose, Vec3

MAX_STEP_DT = 0.05  # s; the engine clamps tick dt before stepping jigs
SUBSTEP_DT = 0.002  # s; internal integrator substep ceiling

GRAVITY_DEFAULT = 9.81  # m/s^2


class NonFiniteInput(ValueError):
    pass


class WrongVariant(TypeError):
    """Operation does not apply to this jig variant."""


@dataclass(frozen=True)
class WeightJig:
    mass: float = 1.0  # kg
    stiffness: float = 120.0  # N/m
    damping: float = 14.0  # N*s/m

    def __post_init__(self) -> None:
        if self.mass <= 0 or self.stiffness <= 0 or self.damping < 0:
            raise ValueError("mass and stiffness must be > 0, damping >= 0")


@dataclass(frozen=True)
class PendulumJig:
    length: float = 0.4  # m
    gravity: float = GRAVITY_DEFAULT  # m/s^2
    damping: float = 0.3  # 1/s

    def __post_init__(self) -> None:
        if self.length <= 0 or self.gravity < 0 or self.damping < 0:
            raise ValueError("length must be > 0; gravity and damping >= 0")


@dataclass(frozen=True)
class StickJig:
    path: tuple[Vec3, ...]

    def __post_init__(self) -> None:
        if len(self.path) < 2:
            raise ValueError("stick path needs >= 2 points")
        if not all(p.is_finite() for p in self.path):
            raise ValueError("stick path must be finite")


@dataclass(frozen=True)
class BandJig:
    rest_length: float = 0.5  # m
    stiffness: float = 60.0  # N/m
    damping: float = 6.0  # N*s/m

    def __post_init__(self) -> None:
        if self.rest_length <= 0 or self.stiffness <= 0 or self.damping < 0:
            raise ValueError("rest length and stiffness must be > 0, damping >= 0")


JigConfig = Union[WeightJig, PendulumJig, StickJig, BandJig]


@dataclass(frozen=True)
class JigState:
    positions: tuple[Vec3, ...] = ()
    velocities: tuple[Vec3, ...] = ()

    def is_finite(self) -> bool:
        return all(p.is_finite() for p in self.positions) and all(
            v.is_finite() for v in self.velocities
        )


def initial_state(config: JigConfig, inputs: Pose | tuple[Pose, Pose]) -> JigState:
    """State with no stored motion: filters start at rest at the input."""
    if isinstance(config, WeightJig):
        return JigState((inputs.position,), (Vec3.zero(),))
    if isinstance(config, PendulumJig):
        bob = inputs.position + Vec3(0.0, -config.length, 0.0)
        return JigState((bob,), (Vec3.zero(),))
    if isinstance(config, StickJig):
        return JigState((), ())
    if isinstance(config, BandJig):
        a, b = inputs
        return JigState((a.position, b.position), (Vec3.zero(), Vec3.zero()))
    raise WrongVariant(type(config).__name__)


def _check_dt(dt: float) -> None:
    if not (math.isfinite(dt) and 0.0 < dt <= MAX_STEP_DT):
        raise ValueError(f"dt must be in (0, {MAX_STEP_DT}], got {dt}")


def _substeps(dt: float) -> tuple[int, float]:
    n = max(1, int(math.ceil(dt / SUBSTEP_DT - 1e-12)))
    return n, dt / n


def jig_step(
    config: JigConfig,
    state: JigState,
    inputs: Pose | tuple[Pose, Pose],
    dt: float,
) -> tuple[JigState, Pose | tuple[Pose, Pose]]:
    """Advance the filter by dt and return (new state, filtered pose(s)).

    The filtered pose keeps the input orientation; jigs act on position.
    Band takes and returns a pair of poses, one per device.
    """
    _check_dt(dt)
    if isinstance(config, BandJig):
        pa, pb = inputs
        if not (pa.is_finite() and pb.is_finite()):
            raise NonFiniteInput("band inputs must be finite")
        return _step_band(config, state, pa, pb, dt)
    pose = inputs
    if not pose.is_finite():
        raise NonFiniteInput("jig input must be finite")
    if isinstance(config, WeightJig):
        return _step_weight(config, state, pose, dt)
    if isinstance(config, PendulumJig):
        return _step_pendulum(config, state, pose, dt)
    if isinstance(config, StickJig):
        return _step_stick(config, state, pose)
    raise WrongVariant(type(config).__name__)


def _step_weight(config: WeightJig, state: JigState, pose: Pose, dt: float) -> tuple[JigState, Pose]:
    (y,), (v,) = state.positions, state.velocities
    u = pose.position
    n, h = _substeps(dt)
    inv_m = 1.0 / config.mass
    k, c = config.stiffness, config.damping
    for _ in range(n):
        ax = (k * (u.x - y.x) - c * v.x) * inv_m
        ay = (k * (u.y - y.y) - c * v.y) * inv_m
        az = (k * (u.z - y.z) - c * v.z) * inv_m
        v = Vec3(v.x + ax * h, v.y + ay * h, v.z + az * h)
        y = Vec3(y.x + v.x * h, y.y + v.y * h, y.z + v.z * h)
    new = JigState((y,), (v,))
    return new, Pose(y, pose.orientation)


def _step_pendulum(config: PendulumJig, state: JigState, pose: Pose, dt: float) -> tuple[JigState, Pose]:
    (p,), (v,) = state.positions, state.velocities
    pivot = pose.position
    n, h = _substeps(dt)
    length = config.length
    g = config.gravity
    decay = math.exp(-config.damping * h)
    for _ in range(n):
        vx, vy, vz = v.x * decay, (v.y * decay) - g * h, v.z * decay
        qx, qy, qz = p.x + vx * h, p.y + vy * h, p.z + vz * h
        dx, dy, dz = qx - pivot.x, qy - pivot.y, qz - pivot.z
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dist < 1e-12:
            nx, ny, nz = pivot.x, pivot.y - length, pivot.z
        else:
            s = length / dist
            nx, ny, nz = pivot.x + dx * s, pivot.y + dy * s, pivot.z + dz * s
        # velocity from positions keeps the constrained step dissipative
        v = Vec3((nx - p.x) / h, (ny - p.y) / h, (nz - p.z) / h)
        p = Vec3(nx, ny, nz)
    new = JigState((p,), (v,))
    return new, Pose(p, pose.orientation)


def _step_stick(config: StickJig, state: JigState, pose: Pose) -> tuple[JigState, Pose]:
    out = project_to_path(config.path, pose.position)
    return state, Pose(out, pose.orientation)


def project_to_path(path: tuple[Vec3, ...], point: Vec3) -> Vec3:
    """Closest point on the polyline; ties resolve to the earliest segment."""
    best = None
    best_d2 = math.inf
    for a, b in zip(path, path[1:]):
        ab = b - a
        denom = ab.norm_sq()
        if denom == 0.0:
            candidate = a
        else:
            t = (point - a).dot(ab) / denom
            t = min(1.0, max(0.0, t))
            candidate = a + ab * t
        d2 = (point - candidate).norm_sq()
        if d2 < best_d2 - 1e-18:
            best_d2 = d2
            best = candidate
    return best


def _step_band(
    config: BandJig, state: JigState, pa: Pose, pb: Pose, dt: float
) -> tuple[JigState, tuple[Pose, Pose]]:
    (y1, y2), (v1, v2) = state.positions, state.velocities
    u1, u2 = pa.position, pb.position
    n, h = _substeps(dt)
    k, c, rest = config.stiffness, config.damping, config.rest_length
    for _ in range(n):
        d = y2 - y1
        dist = d.norm()
        if dist > 1e-12:
            band = d * (k * (dist - rest) / dist)
        else:
            band = Vec3.zero()
        a1 = (u1 - y1) * k - v1 * c + band
        a2 = (u2 - y2) * k - v2 * c - band
        v1 = v1 + a1 * h
        v2 = v2 + a2 * h
        y1 = y1 + v1 * h
        y2 = y2 + v2 * h
    new = JigState((y1, y2), (v1, v2))
    return new, (Pose(y1, pa.orientation), Pose(y2, pb.orientation))


def settle_time(config: JigConfig) -> float:
    """Analytic 2% settling estimate 4/(zeta*omega) for spring-based jigs.

    Returns infinity for undamped configs; raises for variants without a
    spring (pendulum, stick).
    """
    if isinstance(config, WeightJig):
        mass, damping = config.mass, config.damping
    elif isinstance(config, BandJig):
        mass, damping = 1.0, config.damping  # unit-mass tracking
    else:
        raise WrongVariant(f"settle time undefined for {type(config).__name__}")
    if damping == 0.0:
        return math.inf
    # zeta*omega = c / (2 m), so 4/(zeta*omega) = 8 m / c
    return 8.0 * mass / damping


def mechanical_energy(config: PendulumJig, state: JigState, pivot: Vec3) -> float:
    """Per-unit-mass energy of the bob relative to the pivot height."""
    if not isinstance(config, PendulumJig):
        raise WrongVariant(type(config).__name__)
    (p,), (v,) = state.positions, state.velocities
    return 0.5 * v.norm_sq() + config.gravity * (p.y - pivot.y)
