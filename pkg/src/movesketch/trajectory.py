"""Timed motion trajectories: fixed-rate recording, editing, replay, layering.

A trajectory is an ordered run of waypoints sampled at a fixed period, so
slow hand movement packs waypoints close together in space and fast movement
spreads them out. Edits (translate / rotate / zoom) return new values and
never touch timestamps; replay interpolates positions by the original
timing, exposing a small window of upcoming waypoints for display.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from movesketch.geom import Quat, Vec3

SAMPLE_PERIOD_DEFAULT = 1.0 / 60.0  # s; configurable 30-120 Hz
REPLAY_WINDOW = 5  # upcoming waypoints kept opaque during replay

# Per-tap edit magnitudes used by UIs; the library takes explicit arguments.
ROTATE_TAP_RADIANS = math.radians(5.0)
ZOOM_TAP_FACTOR = 1.1

_GAP_TOL = 1e-6

_AXES = {"x": Vec3(1, 0, 0), "y": Vec3(0, 1, 0), "z": Vec3(0, 0, 1)}


class TooShort(ValueError):
    """Fewer than two retained samples (an accidental double trigger tap)."""


class NonPositiveFactor(ValueError):
    """Zoom factor must be > 0."""


@dataclass(frozen=True)
class Waypoint:
    position: Vec3
    time: float  # s, session clock

    def __post_init__(self) -> None:
        if not (self.position.is_finite() and math.isfinite(self.time)):
            raise ValueError("waypoint must be finite")
        if self.time < 0.0:
            raise ValueError(f"waypoint time must be >= 0, got {self.time}")


@dataclass(frozen=True)
class Trajectory:
    id: str
    waypoints: tuple[Waypoint, ...]
    sample_period: float = SAMPLE_PERIOD_DEFAULT

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise TooShort(f"trajectory needs >= 2 waypoints, got {len(self.waypoints)}")
        if self.sample_period <= 0.0:
            raise ValueError("sample period must be > 0")
        prev = None
        for wp in self.waypoints:
            if prev is not None:
                gap = wp.time - prev
                if gap <= 0.0:
                    raise ValueError("waypoint times must be strictly increasing")
                if abs(gap - self.sample_period) > _GAP_TOL:
                    raise ValueError(
                        f"waypoint gap {gap!r} differs from sample period {self.sample_period!r}"
                    )
            prev = wp.time

    @property
    def start_time(self) -> float:
        return self.waypoints[0].time

    @property
    def duration(self) -> float:
        return self.waypoints[-1].time - self.waypoints[0].time

    def centroid(self) -> Vec3:
        acc = Vec3.zero()
        for wp in self.waypoints:
            acc = acc + wp.position
        return acc * (1.0 / len(self.waypoints))

    def arc_length(self) -> float:
        return sum(
            a.position.distance(b.position)
            for a, b in zip(self.waypoints, self.waypoints[1:])
        )


class TrajectoryRecorder:
    """Fixed-rate downsampling recorder.

    Samples may arrive faster than the waypoint rate; each waypoint takes the
    most recent sample at or before its grid time (the first sample back-fills
    the start). Waypoint times sit exactly on the period grid.
    """

    def __init__(self, traj_id: str, begin_time: float, sample_period: float = SAMPLE_PERIOD_DEFAULT):
        if sample_period <= 0.0:
            raise ValueError("sample period must be > 0")
        self.traj_id = traj_id
        self.begin_time = begin_time
        self.sample_period = sample_period
        self._samples: list[tuple[float, Vec3]] = []

    def add_sample(self, position: Vec3, clock_t: float) -> None:
        if clock_t < self.begin_time:
            raise ValueError("sample precedes record_begin")
        if self._samples and clock_t < self._samples[-1][0]:
            raise ValueError("samples must arrive in time order")
        self._samples.append((clock_t, position))

    def finish(self, end_time: float) -> Trajectory:
        if not self._samples:
            raise TooShort("no samples recorded")
        duration = end_time - self.begin_time
        count = int(math.floor(duration / self.sample_period + 1e-9)) + 1
        if count < 2:
            raise TooShort("recording shorter than one sample period")
        times = [t for t, _ in self._samples]
        waypoints = []
        for i in range(count):
            grid_t = self.begin_time + i * self.sample_period
            j = bisect.bisect_right(times, grid_t + 1e-12) - 1
            pos = self._samples[max(j, 0)][1]
            waypoints.append(Waypoint(pos, grid_t))
        return Trajectory(self.traj_id, tuple(waypoints), self.sample_period)


def record(
    traj_id: str,
    samples: list[tuple[float, Vec3]],
    sample_period: float = SAMPLE_PERIOD_DEFAULT,
) -> Trajectory:
    """One-shot begin/sample.../end over a prepared (time, position) list."""
    if not samples:
        raise TooShort("no samples recorded")
    rec = TrajectoryRecorder(traj_id, samples[0][0], sample_period)
    for t, p in samples:
        rec.add_sample(p, t)
    return rec.finish(samples[-1][0])


def translate(traj: Trajectory, delta: Vec3) -> Trajectory:
    wps = tuple(Waypoint(wp.position + delta, wp.time) for wp in traj.waypoints)
    return Trajectory(traj.id, wps, traj.sample_period)


def rotate(traj: Trajectory, axis: str, angle: float) -> Trajectory:
    """Rotate about the waypoint centroid around a world axis ('x'|'y'|'z')."""
    try:
        axis_vec = _AXES[axis.lower()]
    except KeyError:
        raise ValueError(f"axis must be one of x/y/z, got {axis!r}") from None
    q = Quat.from_axis_angle(axis_vec, angle)
    c = traj.centroid()
    wps = tuple(Waypoint(c + q.rotate(wp.position - c), wp.time) for wp in traj.waypoints)
    return Trajectory(traj.id, wps, traj.sample_period)


def zoom(traj: Trajectory, factor: float) -> Trajectory:
    """Expand/contract waypoints away from or toward the centroid."""
    if not (math.isfinite(factor) and factor > 0.0):
        raise NonPositiveFactor(f"zoom factor must be > 0, got {factor}")
    c = traj.centroid()
    wps = tuple(Waypoint(c + (wp.position - c) * factor, wp.time) for wp in traj.waypoints)
    return Trajectory(traj.id, wps, traj.sample_period)


@dataclass(frozen=True)
class ReplayCursor:
    trajectory_id: str
    start_time: float  # session clock at replay start
    speed: float = 1.0
    window: int = REPLAY_WINDOW

    def __post_init__(self) -> None:
        if self.speed <= 0.0:
            raise ValueError("replay speed must be > 0")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class ReplaySample:
    position: Vec3
    visible: range  # waypoint indices strictly ahead, at most `window`
    finished: bool


def replay_eval(cursor: ReplayCursor, traj: Trajectory, clock_t: float) -> ReplaySample:
    """Evaluate one cursor at a session time >= its start time.

    Local time runs at `speed` times the original drawing speed; the position
    interpolates linearly between the bracketing waypoints by their original
    timestamps, and the visible window covers the next waypoints strictly
    ahead of the cursor.
    """
    if clock_t < cursor.start_time:
        raise ValueError("clock precedes cursor start")
    u = (clock_t - cursor.start_time) * cursor.speed
    rel = [wp.time - traj.start_time for wp in traj.waypoints]
    duration = rel[-1]
    finished = u >= duration

    if u <= 0.0:
        pos = traj.waypoints[0].position
    elif finished:
        pos = traj.waypoints[-1].position
    else:
        i = bisect.bisect_right(rel, u)
        t0, t1 = rel[i - 1], rel[i]
        frac = (u - t0) / (t1 - t0)
        pos = traj.waypoints[i - 1].position.lerp(traj.waypoints[i].position, frac)

    first_ahead = bisect.bisect_right(rel, u)
    last = min(first_ahead + cursor.window, len(rel))
    return ReplaySample(pos, range(first_ahead, last), finished)


def layered_schedule(
    cursors: list[ReplayCursor],
    trajectories: dict[str, Trajectory],
    clock_t: float,
) -> list[tuple[str, ReplaySample]]:
    """Evaluate every active cursor independently at one session time.

    A cursor is active from its start time until its trajectory finishes;
    cursors never influence one another, so overlapping replays layer freely.
    """
    out = []
    for cur in cursors:
        if clock_t < cur.start_time:
            continue
        traj = trajectories[cur.trajectory_id]
        u = (clock_t - cur.start_time) * cur.speed
        if u > traj.duration:
            continue
        out.append((cur.trajectory_id, replay_eval(cur, traj, clock_t)))
    return out
