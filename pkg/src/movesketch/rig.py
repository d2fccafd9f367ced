"""Armatures, forward kinematics, IK solving, and device-to-bone bindings.

A bone's local Y axis points head to tail, so a bone of length L has its tip
at head + orientation * (0, L, 0). Bones are stored topologically sorted
(parents before children), which makes the hierarchy acyclic by construction.

Constraints are evaluated in declaration order, one pass per tick:

* ``IkChain`` solves joint orientations so a chain's tail reaches a target
  point (analytic two-bone solve, FABRIK for longer chains), optionally bent
  toward a pole point
* ``CopyLocation`` pins a bone's head to a source point plus an offset
* ``KeepOffsetParent`` makes a bone follow another bone rigidly through an
  offset captured at rig time

IK targets, poles, and copy-location sources name *external points*: world
poses keyed by control-bone name, normally fed by device bindings and
defaulting to the control bone's own pose when nothing is bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence, Union

import numpy as np

from movesketch.geom import Pose, Quat, Vec3

LOCATION_ONLY = "location_only"
FULL_POSE = "full_pose"

DEFAULT_MAX_DEVICES = 2  # two handheld controllers

IK_ITERATIONS_DEFAULT = 20
IK_TOLERANCE_DEFAULT = 1e-5

_Y = Vec3(0.0, 1.0, 0.0)


class UnknownBone(KeyError):
    pass


class DeviceAlreadyBound(ValueError):
    pass


class TooManyDevices(ValueError):
    pass


class MissingExternal(KeyError):
    """A constraint references an external point nobody provides; bind first."""


@dataclass(frozen=True)
class Bone:
    name: str
    parent: int | None
    rest_local: Pose
    length: float

    def __post_init__(self) -> None:
        if self.length <= 0.0:
            raise ValueError(f"bone {self.name!r} length must be > 0")


@dataclass(frozen=True)
class IkChain:
    bone: str  # chain tip
    chain_length: int
    target: str  # external point name
    pole: str | None = None
    iterations: int = IK_ITERATIONS_DEFAULT
    tolerance: float = IK_TOLERANCE_DEFAULT

    def __post_init__(self) -> None:
        if self.chain_length < 1:
            raise ValueError("chain_length must be >= 1")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be > 0")


@dataclass(frozen=True)
class CopyLocation:
    bone: str
    source: str  # external point name
    offset: Vec3 = Vec3()


@dataclass(frozen=True)
class KeepOffsetParent:
    bone: str
    source_bone: str
    offset: Pose = Pose()  # captured child pose in the source bone's frame


Constraint = Union[IkChain, CopyLocation, KeepOffsetParent]


class Armature:
    """Bone hierarchy plus an ordered constraint stack. Immutable after load."""

    def __init__(self, bones: Sequence[Bone], constraints: Sequence[Constraint] = ()):
        self.bones: tuple[Bone, ...] = tuple(bones)
        self.constraints: tuple[Constraint, ...] = tuple(constraints)
        names = [b.name for b in self.bones]
        if len(set(names)) != len(names):
            raise ValueError("bone names must be unique")
        self._index = {name: i for i, name in enumerate(names)}
        self.children: tuple[tuple[int, ...], ...] = self._build_children()
        for i, bone in enumerate(self.bones):
            if bone.parent is not None and not 0 <= bone.parent < i:
                raise ValueError(f"bone {bone.name!r}: parent index must precede the bone")
        self._validate_constraints()

    def _build_children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.bones]
        for i, bone in enumerate(self.bones):
            if bone.parent is not None:
                kids[bone.parent].append(i)
        return tuple(tuple(k) for k in kids)

    def _validate_constraints(self) -> None:
        for c in self.constraints:
            idx = self.index(c.bone)
            if isinstance(c, IkChain):
                depth = 1
                j = idx
                while self.bones[j].parent is not None:
                    depth += 1
                    j = self.bones[j].parent
                if c.chain_length > depth:
                    raise ValueError(
                        f"ik chain on {c.bone!r}: chain_length {c.chain_length} exceeds depth {depth}"
                    )
            elif isinstance(c, KeepOffsetParent):
                self.index(c.source_bone)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownBone(name) from None

    def __len__(self) -> int:
        return len(self.bones)

    def root_indices(self) -> list[int]:
        return [i for i, b in enumerate(self.bones) if b.parent is None]

    def descendants(self, idx: int) -> list[int]:
        out = []
        stack = list(self.children[idx])
        while stack:
            j = stack.pop()
            out.append(j)
            stack.extend(self.children[j])
        return out

    def chain_indices(self, constraint: IkChain) -> list[int]:
        """Chain bone indices root-first, ending at the constraint's tip."""
        idx = self.index(constraint.bone)
        chain = [idx]
        for _ in range(constraint.chain_length - 1):
            parent = self.bones[chain[-1]].parent
            chain.append(parent)
        chain.reverse()
        return chain

    def affected_bones(self, bound: set[str]) -> set[str]:
        """Bones whose local pose the given bound control bones can change.

        Closure over the constraint graph: a constraint fires when its source
        (external point or source bone) is already in the set, contributing
        the bones it writes.
        """
        driven = set(bound)
        for name in bound:
            self.index(name)
        changed = True
        while changed:
            changed = False
            for c in self.constraints:
                if isinstance(c, IkChain):
                    refs = {c.target} | ({c.pole} if c.pole else set())
                    writes = {self.bones[i].name for i in self.chain_indices(c)}
                elif isinstance(c, CopyLocation):
                    refs = {c.source}
                    writes = {c.bone}
                else:
                    refs = {c.source_bone}
                    writes = {c.bone}
                if refs & driven and not writes <= driven:
                    driven |= writes
                    changed = True
        return driven


class PoseState:
    """Per-bone local pose overrides; defaults to the rest pose."""

    def __init__(self, armature: Armature, locals_: Sequence[Pose] | None = None):
        self.armature = armature
        if locals_ is None:
            self.locals = [b.rest_local for b in armature.bones]
        else:
            if len(locals_) != len(armature.bones):
                raise ValueError("one local pose per bone required")
            self.locals = list(locals_)

    def get(self, name: str) -> Pose:
        return self.locals[self.armature.index(name)]

    def set(self, name: str, pose: Pose) -> None:
        self.locals[self.armature.index(name)] = pose

    def copy(self) -> PoseState:
        return PoseState(self.armature, list(self.locals))


def fk_world(armature: Armature, pose: PoseState) -> list[Pose]:
    """World pose per bone: root world = root local, child = parent o local."""
    worlds: list[Pose] = []
    for bone, local in zip(armature.bones, pose.locals):
        if bone.parent is None:
            worlds.append(local)
        else:
            worlds.append(worlds[bone.parent].compose(local))
    return worlds


def bone_tip(world: Pose, length: float) -> Vec3:
    return world.position + world.orientation.rotate(Vec3(0.0, length, 0.0))


def _refresh_world(armature: Armature, pose: PoseState, worlds: list[Pose], idx: int) -> None:
    bone = armature.bones[idx]
    if bone.parent is None:
        worlds[idx] = pose.locals[idx]
    else:
        worlds[idx] = worlds[bone.parent].compose(pose.locals[idx])
    for child in armature.descendants(idx):
        parent = armature.bones[child].parent
        worlds[child] = worlds[parent].compose(pose.locals[child])


def _perpendicular_toward(reference: Vec3, axis: Vec3) -> Vec3 | None:
    """Unit component of `reference` perpendicular to unit `axis`."""
    radial = reference - axis * reference.dot(axis)
    n = radial.norm()
    if n < 1e-9:
        return None
    return radial * (1.0 / n)


def _fallback_perpendicular(axis: Vec3) -> Vec3:
    for basis in (_Y, Vec3(1.0, 0.0, 0.0)):
        perp = _perpendicular_toward(basis, axis)
        if perp is not None:
            return perp
    return Vec3(0.0, 0.0, 1.0)


def solve_ik_two_bone(
    root_world: Pose,
    l1: float,
    l2: float,
    target: Vec3,
    pole: Vec3 | None = None,
) -> tuple[Quat, Quat]:
    """Analytic law-of-cosines solve for a two-bone chain.

    Returns world orientations for the two bones. Unreachable targets clamp
    the chain straight toward the target (reach clamped to the annulus
    [|l1-l2|, l1+l2]); the mid joint bends inside the plane spanned by
    root->target and root->pole when a pole is given.
    """
    if l1 <= 0.0 or l2 <= 0.0:
        raise ValueError("bone lengths must be > 0")
    root = root_world.position
    to_target = target - root
    dist = to_target.norm()
    if dist < 1e-12:
        axis = root_world.orientation.rotate(_Y)
    else:
        axis = to_target * (1.0 / dist)

    reach = min(max(dist, abs(l1 - l2)), l1 + l2)
    if pole is not None:
        bend = _perpendicular_toward(pole - root, axis)
    else:
        bend = None
    if bend is None:
        bend = _fallback_perpendicular(axis)

    cos_root = (l1 * l1 + reach * reach - l2 * l2) / (2.0 * l1 * reach)
    cos_root = min(1.0, max(-1.0, cos_root))
    # snap straight/folded configurations so sqrt does not amplify rounding
    if cos_root > 1.0 - 1e-12:
        cos_root = 1.0
    elif cos_root < -1.0 + 1e-12:
        cos_root = -1.0
    sin_root = math.sqrt(max(0.0, 1.0 - cos_root * cos_root))

    dir1 = axis * cos_root + bend * sin_root
    mid = root + dir1 * l1
    effector = root + axis * reach
    dir2 = (effector - mid) * (1.0 / l2)
    n2 = dir2.norm()
    dir2 = dir2 * (1.0 / n2) if n2 > 1e-12 else dir1

    return _frame_from_direction(dir1, bend, axis), _frame_from_direction(dir2, bend, axis)


def _frame_from_direction(direction: Vec3, bend: Vec3, axis: Vec3) -> Quat:
    """Orientation whose Y axis is `direction`, roll fixed by the bend plane."""
    normal = axis.cross(bend)
    n = normal.norm()
    if n < 1e-12:
        normal = _fallback_perpendicular(direction)
    else:
        normal = normal * (1.0 / n)
    x_axis = direction.cross(normal)
    m = np.array(
        [
            [x_axis.x, direction.x, normal.x],
            [x_axis.y, direction.y, normal.y],
            [x_axis.z, direction.z, normal.z],
        ]
    )
    return Quat.from_matrix(m)


def solve_ik_fabrik(
    positions: Sequence[Vec3],
    lengths: Sequence[float],
    target: Vec3,
    pole: Vec3 | None = None,
    iterations: int = IK_ITERATIONS_DEFAULT,
    tolerance: float = IK_TOLERANCE_DEFAULT,
) -> list[Vec3]:
    """Forward-and-backward reaching IK over joint positions.

    The first position is the pinned chain root; returns new joint positions
    with every segment length preserved. Unreachable targets produce a
    straight chain toward the target. With a pole, the interior joints are
    rotated about the root-effector axis into the pole's bend plane after
    the position solve.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if tolerance <= 0.0:
        raise ValueError("tolerance must be > 0")
    if len(positions) != len(lengths) + 1:
        raise ValueError("need one more position than segment lengths")

    pts = list(positions)
    root = pts[0]
    n = len(pts)
    total = sum(lengths)
    to_target = target - root

    if to_target.norm() >= total:
        direction = to_target.normalized() if to_target.norm() > 1e-12 else _Y
        for i in range(1, n):
            pts[i] = pts[i - 1] + direction * lengths[i - 1]
    else:
        for _ in range(iterations):
            if pts[-1].distance(target) <= tolerance:
                break
            # backward: drag the tip onto the target
            pts[-1] = target
            for i in range(n - 2, -1, -1):
                d = pts[i] - pts[i + 1]
                nn = d.norm()
                step = d * (lengths[i] / nn) if nn > 1e-12 else Vec3(0.0, lengths[i], 0.0)
                pts[i] = pts[i + 1] + step
            # forward: re-pin the root
            pts[0] = root
            for i in range(1, n):
                d = pts[i] - pts[i - 1]
                nn = d.norm()
                step = d * (lengths[i - 1] / nn) if nn > 1e-12 else Vec3(0.0, lengths[i - 1], 0.0)
                pts[i] = pts[i - 1] + step

    if pole is not None and n >= 3:
        pts = _rotate_into_pole_plane(pts, pole)
    return pts


def _rotate_into_pole_plane(pts: list[Vec3], pole: Vec3) -> list[Vec3]:
    root, end = pts[0], pts[-1]
    span = end - root
    nn = span.norm()
    if nn < 1e-12:
        return pts
    axis = span * (1.0 / nn)
    pole_dir = _perpendicular_toward(pole - root, axis)
    if pole_dir is None:
        return pts
    # average radial direction of the interior joints, radius-weighted
    acc = Vec3.zero()
    for p in pts[1:-1]:
        w = p - root
        acc = acc + (w - axis * w.dot(axis))
    bend_dir = _perpendicular_toward(acc, axis) if acc.norm() > 1e-12 else None
    if bend_dir is None:
        return pts
    sin_a = bend_dir.cross(pole_dir).dot(axis)
    cos_a = bend_dir.dot(pole_dir)
    angle = math.atan2(sin_a, cos_a)
    rot = Quat.from_axis_angle(axis, angle)
    return [pts[0]] + [root + rot.rotate(p - root) for p in pts[1:-1]] + [pts[-1]]


@dataclass(frozen=True)
class Binding:
    device: str
    bone: str
    mode: str = LOCATION_ONLY
    # Offset from the device pose to the bone's world pose, captured on the
    # first sample after binding so the bone never jumps.
    grab_offset: Pose | None = None

    def __post_init__(self) -> None:
        if self.mode not in (LOCATION_ONLY, FULL_POSE):
            raise ValueError(f"unknown binding mode {self.mode!r}")


class DeviceBindings:
    """Device-to-bone binding table with grab-offset capture."""

    def __init__(self, armature: Armature, max_devices: int = DEFAULT_MAX_DEVICES):
        self.armature = armature
        self.max_devices = max_devices
        self._bindings: dict[str, Binding] = {}

    def bind(self, device: str, bone: str, mode: str = LOCATION_ONLY) -> Binding:
        self.armature.index(bone)
        if device in self._bindings:
            raise DeviceAlreadyBound(device)
        if len(self._bindings) >= self.max_devices:
            raise TooManyDevices(f"at most {self.max_devices} devices may be bound")
        binding = Binding(device, bone, mode)
        self._bindings[device] = binding
        return binding

    def unbind(self, device: str) -> None:
        if device not in self._bindings:
            raise KeyError(device)
        del self._bindings[device]

    def __contains__(self, device: str) -> bool:
        return device in self._bindings

    def __len__(self) -> int:
        return len(self._bindings)

    def bindings(self) -> list[Binding]:
        return list(self._bindings.values())

    def bound_bones(self) -> set[str]:
        return {b.bone for b in self._bindings.values()}

    def drive(self, device: str, sample: Pose, bone_world: Pose) -> Pose:
        """Source pose for this device's bone given a filtered input sample.

        Captures the grab offset on the first sample so the bone's world pose
        at that instant is unchanged.
        """
        binding = self._bindings[device]
        if binding.grab_offset is None:
            if binding.mode == FULL_POSE:
                offset = sample.inverse().compose(bone_world)
            else:
                offset = Pose(bone_world.position - sample.position, Quat.identity())
            binding = replace(binding, grab_offset=offset)
            self._bindings[device] = binding
        if binding.mode == FULL_POSE:
            return sample.compose(binding.grab_offset)
        return Pose(sample.position + binding.grab_offset.position, bone_world.orientation)


def resolve_externals(
    armature: Armature,
    worlds: Sequence[Pose],
    driven: Mapping[str, Pose] | None = None,
) -> dict[str, Pose]:
    """External points for the constraint pass.

    Every unparented bone publishes its current world pose under its own
    name (an idle control bone just holds position); device-driven sources
    override those entries.
    """
    externals = {
        bone.name: worlds[i]
        for i, bone in enumerate(armature.bones)
        if bone.parent is None
    }
    if driven:
        externals.update(driven)
    return externals


def apply_constraints(
    armature: Armature,
    pose: PoseState,
    externals: Mapping[str, Pose],
) -> PoseState:
    """Evaluate the constraint stack in declaration order, one pass.

    Mutates and returns `pose`. Raises :class:`MissingExternal` when a
    constraint names an external point that is not provided.
    """
    worlds = fk_world(armature, pose)
    for c in armature.constraints:
        if isinstance(c, IkChain):
            _apply_ik_chain(armature, pose, worlds, c, externals)
        elif isinstance(c, CopyLocation):
            _apply_copy_location(armature, pose, worlds, c, externals)
        elif isinstance(c, KeepOffsetParent):
            _apply_keep_offset(armature, pose, worlds, c)
        else:
            raise TypeError(f"unknown constraint {c!r}")
    return pose


def _external(externals: Mapping[str, Pose], name: str) -> Pose:
    try:
        return externals[name]
    except KeyError:
        raise MissingExternal(name) from None


def _apply_ik_chain(armature, pose, worlds, c: IkChain, externals) -> None:
    chain = armature.chain_indices(c)
    target = _external(externals, c.target).position
    pole = _external(externals, c.pole).position if c.pole else None
    lengths = [armature.bones[i].length for i in chain]
    pts = [worlds[i].position for i in chain]
    pts.append(bone_tip(worlds[chain[-1]], lengths[-1]))

    if len(chain) == 2:
        q1, q2 = solve_ik_two_bone(worlds[chain[0]], lengths[0], lengths[1], target, pole)
        new_worlds = [q1, q2]
        for idx, world_q in zip(chain, new_worlds):
            parent = armature.bones[idx].parent
            parent_q = worlds[parent].orientation if parent is not None else Quat.identity()
            local = pose.locals[idx]
            pose.locals[idx] = Pose(local.position, parent_q.conjugate() * world_q)
            _refresh_world(armature, pose, worlds, idx)
    else:
        solved = solve_ik_fabrik(pts, lengths, target, pole, c.iterations, c.tolerance)
        for k, idx in enumerate(chain):
            current = worlds[idx].orientation
            old_dir = current.rotate(_Y)
            seg = solved[k + 1] - solved[k]
            nn = seg.norm()
            if nn < 1e-12:
                continue
            delta = Quat.shortest_arc(old_dir, seg * (1.0 / nn))
            world_q = (delta * current).normalized()
            parent = armature.bones[idx].parent
            parent_q = worlds[parent].orientation if parent is not None else Quat.identity()
            local = pose.locals[idx]
            pose.locals[idx] = Pose(local.position, parent_q.conjugate() * world_q)
            _refresh_world(armature, pose, worlds, idx)


def _apply_copy_location(armature, pose, worlds, c: CopyLocation, externals) -> None:
    idx = armature.index(c.bone)
    head = _external(externals, c.source).position + c.offset
    parent = armature.bones[idx].parent
    if parent is None:
        local_pos = head
    else:
        local_pos = worlds[parent].inverse().transform_point(head)
    pose.locals[idx] = Pose(local_pos, pose.locals[idx].orientation)
    _refresh_world(armature, pose, worlds, idx)


def _apply_keep_offset(armature, pose, worlds, c: KeepOffsetParent) -> None:
    idx = armature.index(c.bone)
    src = armature.index(c.source_bone)
    desired = worlds[src].compose(c.offset)
    parent = armature.bones[idx].parent
    local = desired if parent is None else worlds[parent].inverse().compose(desired)
    pose.locals[idx] = local
    _refresh_world(armature, pose, worlds, idx)


def capture_keep_offset(armature: Armature, pose: PoseState, bone: str, source_bone: str) -> KeepOffsetParent:
    """Build a keep-offset constraint from the current relative placement."""
    worlds = fk_world(armature, pose)
    child = worlds[armature.index(bone)]
    src = worlds[armature.index(source_bone)]
    return KeepOffsetParent(bone, source_bone, src.inverse().compose(child))
