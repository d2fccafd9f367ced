"""Recorded takes and the layered timeline.

A take is one recorded pass of motion: per-bone keyframe channels (position
and orientation) for the bones a binding session can move. Takes layer onto
a timeline by override-merge: while a later take is active it owns its bones
outright; outside any active take the most recently ended take holds its
last value, so characters never snap back to rest mid-review.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable

from movesketch.geom import Pose, Quat, Vec3, slerp
from movesketch.rig import Armature, PoseState

POSITION = "position"
ORIENTATION = "orientation"


class NoBindings(ValueError):
    """Recording a take needs at least one active binding."""


@dataclass(frozen=True)
class Channel:
    bone: str
    prop: str  # POSITION or ORIENTATION
    times: tuple[float, ...]  # s, relative to take start, strictly increasing
    values: tuple  # Vec3 for position, Quat for orientation

    def __post_init__(self) -> None:
        if self.prop not in (POSITION, ORIENTATION):
            raise ValueError(f"unknown channel property {self.prop!r}")
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("times and values must be non-empty and parallel")
        want = Vec3 if self.prop == POSITION else Quat
        if not all(isinstance(v, want) for v in self.values):
            raise ValueError(f"{self.prop} channel values must be {want.__name__}")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("keyframe times must be strictly increasing")

    def value_at(self, t: float):
        """Interpolated value; exact stored value at keyframe times, ends held."""
        times = self.times
        if t <= times[0]:
            return self.values[0]
        if t >= times[-1]:
            return self.values[-1]
        i = bisect.bisect_left(times, t)
        if times[i] == t:
            return self.values[i]
        t0, t1 = times[i - 1], times[i]
        u = (t - t0) / (t1 - t0)
        if self.prop == POSITION:
            return self.values[i - 1].lerp(self.values[i], u)
        return slerp(self.values[i - 1], self.values[i], u)


@dataclass(frozen=True)
class Take:
    id: str
    channels: tuple[Channel, ...]
    bound_bones: frozenset[str]
    duration: float
    sample_period: float

    def __post_init__(self) -> None:
        for ch in self.channels:
            if ch.bone not in self.bound_bones:
                raise ValueError(f"channel bone {ch.bone!r} not in bound bones")
        max_t = max((ch.times[-1] for ch in self.channels), default=0.0)
        if abs(self.duration - max_t) > 1e-9:
            raise ValueError("duration must equal the last keyframe time")

    def channel(self, bone: str, prop: str) -> Channel | None:
        for ch in self.channels:
            if ch.bone == bone and ch.prop == prop:
                return ch
        return None


@dataclass(frozen=True)
class TimelineEntry:
    take: Take
    offset: float  # s, session start of the take

    def __post_init__(self) -> None:
        if self.offset < 0.0:
            raise ValueError("offset must be >= 0")

    @property
    def end(self) -> float:
        return self.offset + self.take.duration


@dataclass(frozen=True)
class Timeline:
    entries: tuple[TimelineEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def end(self) -> float:
        return max((e.end for e in self.entries), default=0.0)

    def bones(self) -> set[str]:
        out: set[str] = set()
        for e in self.entries:
            out |= set(e.take.bound_bones)
        return out


def layer_takes(timeline: Timeline, take: Take, offset: float) -> Timeline:
    """Append a take; later layers override earlier ones on their bones."""
    return Timeline(timeline.entries + (TimelineEntry(take, offset),))


def _winning_entry(entries: Iterable[TimelineEntry], bone: str, t: float) -> TimelineEntry | None:
    """Override-merge rule for one bone at one time.

    The topmost take active at t wins; when none is active, the started take
    that ended most recently holds its last value (ties go to the top layer).
    Takes that have not started yet are invisible.
    """
    active = None
    held = None
    for e in entries:
        if bone not in e.take.bound_bones or t < e.offset:
            continue
        if t <= e.end:
            active = e
        elif held is None or e.end >= held.end:
            held = e
    return active or held


def sample_timeline(timeline: Timeline, armature: Armature, t: float) -> PoseState:
    """Pose at session time t; bones with no channel anywhere stay at rest."""
    if t < 0.0:
        raise ValueError("timeline time must be >= 0")
    pose = PoseState(armature)
    for bone in timeline.bones():
        entry = _winning_entry(timeline.entries, bone, t)
        if entry is None:
            continue
        local_t = t - entry.offset
        idx = armature.index(bone)
        rest = armature.bones[idx].rest_local
        pos_ch = entry.take.channel(bone, POSITION)
        ori_ch = entry.take.channel(bone, ORIENTATION)
        pos = pos_ch.value_at(local_t) if pos_ch else rest.position
        ori = ori_ch.value_at(local_t) if ori_ch else rest.orientation
        pose.locals[idx] = Pose(pos, ori)
    return pose


class TakeRecorder:
    """Samples solved local poses of the bound-bone set, one key per tick."""

    def __init__(self, take_id: str, bones: Iterable[str], start_clock: float, sample_period: float):
        self.take_id = take_id
        self.bones = sorted(set(bones))
        if not self.bones:
            raise NoBindings("no bones to record; bind a device first")
        self.start_clock = start_clock
        self.sample_period = sample_period
        self._times: list[float] = []
        self._positions: dict[str, list[Vec3]] = {b: [] for b in self.bones}
        self._orientations: dict[str, list[Quat]] = {b: [] for b in self.bones}

    def add_tick(self, clock: float, pose: PoseState) -> None:
        t = clock - self.start_clock
        if self._times and t <= self._times[-1]:
            raise ValueError("ticks must advance the clock")
        self._times.append(t)
        for b in self.bones:
            local = pose.get(b)
            self._positions[b].append(local.position)
            self._orientations[b].append(local.orientation)

    def finish(self) -> Take:
        if not self._times:
            raise ValueError("nothing recorded")
        times = tuple(self._times)
        channels = []
        for b in self.bones:
            channels.append(Channel(b, POSITION, times, tuple(self._positions[b])))
            channels.append(Channel(b, ORIENTATION, times, tuple(self._orientations[b])))
        return Take(
            self.take_id,
            tuple(channels),
            frozenset(self.bones),
            duration=times[-1],
            sample_period=self.sample_period,
        )
