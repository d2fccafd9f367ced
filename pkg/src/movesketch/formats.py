"""File formats: stream CSV, JSON persistence, and BVH interchange.

All JSON schemas carry a ``"v": 1`` field. Writers are deterministic: the
same values always produce byte-identical text.

BVH conventions (BVH is under-standardized, so ours are spelled out here):

* offsets are centimeters (engine meters x 100)
* the root joint has 6 channels ``Xposition Yposition Zposition Zrotation
  Xrotation Yrotation``; every other joint has ``Zrotation Xrotation
  Yrotation``
* rotations are intrinsic Z-X-Y Euler angles in degrees; near the X = +-90
  degree singularity the pitch is clamped just inside it and a module-wide
  warning counter is bumped
* only the skeleton under the armature's first root bone is exported;
  unparented control bones are rig machinery whose effect is already baked
  into the solved joint channels
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

from movesketch.calibration import CoordinateMap
from movesketch.geom import Pose, Quat, SimilarityTransform, Vec3
from movesketch.jigs import BandJig, JigConfig, PendulumJig, StickJig, WeightJig
from movesketch.rig import Armature, Bone, Constraint, CopyLocation, IkChain, KeepOffsetParent
from movesketch.takes import Channel, Take, Timeline, TimelineEntry, layer_takes, sample_timeline
from movesketch.trajectory import Trajectory, Waypoint

SCHEMA_VERSION = 1

STREAM_HEADER = "t,device,px,py,pz,qw,qx,qy,qz"

METERS_TO_BVH = 100.0  # centimeter offsets

ROOT_CHANNELS = ("Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation", "Yrotation")
JOINT_CHANNELS = ("Zrotation", "Xrotation", "Yrotation")

PITCH_LIMIT_DEG = 90.0 - 1e-4


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class NonMonotonicTime(ValueError):
    def __init__(self, device: str, line: int):
        self.device = device
        self.line = line
        super().__init__(f"time went backwards for device {device!r} (line {line})")


class EmptyTimeline(ValueError):
    pass


class GimbalWarnings:
    """Counts pitch clamps applied during Euler extraction."""

    def __init__(self) -> None:
        self.count = 0


gimbal_warnings = GimbalWarnings()


# ---------------------------------------------------------------------------
# stream CSV


@dataclass(frozen=True)
class StreamSample:
    t: float
    device: str
    position: Vec3
    orientation: Quat


def read_stream_csv(text: str) -> list[StreamSample]:
    """Parse a `t,device,px,py,pz,qw,qx,qy,qz` stream; per-device times must
    be non-decreasing and quaternions are renormalized on read."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != STREAM_HEADER:
        raise ParseError(f"expected header {STREAM_HEADER!r}", line=1)
    samples: list[StreamSample] = []
    last_t: dict[str, float] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 9:
            raise ParseError(f"expected 9 fields, got {len(parts)}", line=lineno)
        device = parts[1].strip()
        if not device:
            raise ParseError("empty device id", line=lineno)
        try:
            nums = [float(p) for p in parts[:1] + parts[2:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if not all(math.isfinite(v) for v in nums):
            raise ParseError("non-finite value", line=lineno)
        t, px, py, pz, qw, qx, qy, qz = nums
        qn = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
        if qn < 1e-9:
            raise ParseError("zero-norm quaternion", line=lineno)
        if device in last_t and t < last_t[device]:
            raise NonMonotonicTime(device, lineno)
        last_t[device] = t
        samples.append(
            StreamSample(t, device, Vec3(px, py, pz), Quat(qw / qn, qx / qn, qy / qn, qz / qn))
        )
    return samples


def _g9(x: float) -> str:
    return format(x, ".9g")


def write_stream_csv(samples: list[StreamSample]) -> str:
    out = [STREAM_HEADER]
    for s in samples:
        q = s.orientation
        p = s.position
        out.append(
            ",".join([_g9(s.t), s.device] + [_g9(v) for v in (p.x, p.y, p.z, q.w, q.x, q.y, q.z)])
        )
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# JSON persistence

def to_text(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _require_version(obj: dict, what: str) -> None:
    if obj.get("v") != SCHEMA_VERSION:
        raise ParseError(f"{what}: unsupported or missing schema version {obj.get('v')!r}")


def trajectory_to_json(traj: Trajectory) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "id": traj.id,
        "sample_period": float(traj.sample_period),
        "waypoints": [{"t": float(w.time), "p": w.position.to_list()} for w in traj.waypoints],
    }


def trajectory_from_json(obj: dict) -> Trajectory:
    _require_version(obj, "trajectory")
    wps = tuple(Waypoint(Vec3.from_seq(w["p"]), float(w["t"])) for w in obj["waypoints"])
    return Trajectory(str(obj["id"]), wps, float(obj["sample_period"]))


def _pose_to_json(p: Pose) -> dict:
    return {"p": p.position.to_list(), "q": p.orientation.to_list()}


def _pose_from_json(obj: dict) -> Pose:
    return Pose(Vec3.from_seq(obj["p"]), Quat.from_seq(obj["q"]))


def _constraint_to_json(c: Constraint) -> dict:
    if isinstance(c, IkChain):
        return {
            "type": "ik_chain",
            "bone": c.bone,
            "chain_length": c.chain_length,
            "target": c.target,
            "pole": c.pole,
            "iterations": c.iterations,
            "tolerance": c.tolerance,
        }
    if isinstance(c, CopyLocation):
        return {"type": "copy_location", "bone": c.bone, "source": c.source, "offset": c.offset.to_list()}
    if isinstance(c, KeepOffsetParent):
        return {
            "type": "keep_offset_parent",
            "bone": c.bone,
            "source_bone": c.source_bone,
            "offset": _pose_to_json(c.offset),
        }
    raise TypeError(f"unknown constraint {c!r}")


def _constraint_from_json(obj: dict) -> Constraint:
    kind = obj.get("type")
    if kind == "ik_chain":
        return IkChain(
            obj["bone"],
            int(obj["chain_length"]),
            obj["target"],
            obj.get("pole"),
            int(obj.get("iterations", 20)),
            float(obj.get("tolerance", 1e-5)),
        )
    if kind == "copy_location":
        return CopyLocation(obj["bone"], obj["source"], Vec3.from_seq(obj.get("offset", (0, 0, 0))))
    if kind == "keep_offset_parent":
        return KeepOffsetParent(obj["bone"], obj["source_bone"], _pose_from_json(obj["offset"]))
    raise ParseError(f"unknown constraint type {kind!r}")


def armature_to_json(arm: Armature) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "bones": [
            {
                "name": b.name,
                "parent": b.parent,
                "rest": _pose_to_json(b.rest_local),
                "length": float(b.length),
            }
            for b in arm.bones
        ],
        "constraints": [_constraint_to_json(c) for c in arm.constraints],
    }


def armature_from_json(obj: dict) -> Armature:
    _require_version(obj, "armature")
    bones = [
        Bone(
            str(b["name"]),
            None if b["parent"] is None else int(b["parent"]),
            _pose_from_json(b["rest"]),
            float(b["length"]),
        )
        for b in obj["bones"]
    ]
    constraints = [_constraint_from_json(c) for c in obj.get("constraints", [])]
    return Armature(bones, constraints)


def take_to_json(take: Take) -> dict:
    channels = []
    for ch in take.channels:
        keys = [[float(t)] + v.to_list() for t, v in zip(ch.times, ch.values)]
        channels.append({"bone": ch.bone, "prop": ch.prop, "keys": keys})
    return {
        "v": SCHEMA_VERSION,
        "id": take.id,
        "duration": float(take.duration),
        "sample_period": float(take.sample_period),
        "bound_bones": sorted(take.bound_bones),
        "channels": channels,
    }


def take_from_json(obj: dict) -> Take:
    _require_version(obj, "take")
    channels = []
    for ch in obj["channels"]:
        times = tuple(float(k[0]) for k in ch["keys"])
        if ch["prop"] == "position":
            values = tuple(Vec3.from_seq(k[1:]) for k in ch["keys"])
        else:
            values = tuple(Quat.from_seq(k[1:]) for k in ch["keys"])
        channels.append(Channel(ch["bone"], ch["prop"], times, values))
    return Take(
        str(obj["id"]),
        tuple(channels),
        frozenset(obj["bound_bones"]),
        float(obj["duration"]),
        float(obj["sample_period"]),
    )


def timeline_to_json(timeline: Timeline) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "entries": [{"take": take_to_json(e.take), "offset": float(e.offset)} for e in timeline.entries],
    }


def timeline_from_json(obj: dict) -> Timeline:
    _require_version(obj, "timeline")
    tl = Timeline()
    for e in obj["entries"]:
        tl = layer_takes(tl, take_from_json(e["take"]), float(e["offset"]))
    return tl


def map_to_json(m: CoordinateMap | SimilarityTransform) -> dict:
    if isinstance(m, CoordinateMap):
        return {
            "v": SCHEMA_VERSION,
            "form": "projection",
            "x0": m.origin.to_list(),
            "a1": m.axis1.to_list(),
            "a2": m.axis2.to_list(),
            "a3": m.axis3.to_list(),
            "t": float(m.spacing),
        }
    return {
        "v": SCHEMA_VERSION,
        "form": "similarity",
        "k": float(m.scale),
        "A": [float(x) for x in m.rotation.reshape(-1)],
        "b": m.translation.to_list(),
    }


def map_from_json(obj: dict) -> CoordinateMap | SimilarityTransform:
    _require_version(obj, "map")
    form = obj.get("form")
    if form == "projection":
        return CoordinateMap(
            Vec3.from_seq(obj["x0"]),
            Vec3.from_seq(obj["a1"]),
            Vec3.from_seq(obj["a2"]),
            Vec3.from_seq(obj["a3"]),
            float(obj["t"]),
        )
    if form == "similarity":
        a = obj["A"]
        rot = [[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]]
        return SimilarityTransform(float(obj["k"]), rot, Vec3.from_seq(obj["b"]))
    raise ParseError(f"unknown map form {form!r}")


_JIG_KINDS = {"weight": WeightJig, "pendulum": PendulumJig, "stick": StickJig, "band": BandJig}


def jig_to_json(config: JigConfig) -> dict:
    if isinstance(config, WeightJig):
        return {"v": SCHEMA_VERSION, "kind": "weight", "mass": float(config.mass),
                "stiffness": float(config.stiffness), "damping": float(config.damping)}
    if isinstance(config, PendulumJig):
        return {"v": SCHEMA_VERSION, "kind": "pendulum", "length": float(config.length),
                "gravity": float(config.gravity), "damping": float(config.damping)}
    if isinstance(config, StickJig):
        return {"v": SCHEMA_VERSION, "kind": "stick", "path": [p.to_list() for p in config.path]}
    if isinstance(config, BandJig):
        return {"v": SCHEMA_VERSION, "kind": "band", "rest_length": float(config.rest_length),
                "stiffness": float(config.stiffness), "damping": float(config.damping)}
    raise TypeError(f"unknown jig config {config!r}")


def jig_from_json(obj: dict) -> JigConfig:
    _require_version(obj, "jig")
    kind = obj.get("kind")
    if kind == "weight":
        return WeightJig(float(obj["mass"]), float(obj["stiffness"]), float(obj["damping"]))
    if kind == "pendulum":
        return PendulumJig(float(obj["length"]), float(obj["gravity"]), float(obj["damping"]))
    if kind == "stick":
        return StickJig(tuple(Vec3.from_seq(p) for p in obj["path"]))
    if kind == "band":
        return BandJig(float(obj["rest_length"]), float(obj["stiffness"]), float(obj["damping"]))
    raise ParseError(f"unknown jig kind {kind!r}")


# ---------------------------------------------------------------------------
# Euler angles (intrinsic Z-X-Y, degrees)


def euler_zxy_from_quat(q: Quat) -> tuple[float, float, float]:
    """(z, x, y) intrinsic Z-X-Y angles in degrees, pitch clamped inside 90."""
    m = q.to_matrix()
    s = min(1.0, max(-1.0, float(m[2, 1])))
    x = math.degrees(math.asin(s))
    if abs(x) > PITCH_LIMIT_DEG:
        # gimbal lock: only z +- y is determined; put all of it on z
        x = math.copysign(PITCH_LIMIT_DEG, x)
        gimbal_warnings.count += 1
        if s > 0.0:
            z = math.degrees(math.atan2(float(m[0, 2]), float(m[0, 0])))
        else:
            z = math.degrees(math.atan2(-float(m[0, 2]), float(m[0, 0])))
        return z, x, 0.0
    z = math.degrees(math.atan2(-m[0, 1], m[1, 1]))
    y = math.degrees(math.atan2(-m[2, 0], m[2, 2]))
    return z, x, y


def quat_from_euler_zxy(z: float, x: float, y: float) -> Quat:
    qz = Quat.from_axis_angle(Vec3(0, 0, 1), math.radians(z))
    qx = Quat.from_axis_angle(Vec3(1, 0, 0), math.radians(x))
    qy = Quat.from_axis_angle(Vec3(0, 1, 0), math.radians(y))
    return qz * qx * qy


# ---------------------------------------------------------------------------
# BVH


@dataclass(frozen=True)
class BvhJoint:
    name: str
    parent: int | None  # joint index
    offset: Vec3  # cm, in the parent joint frame
    channels: tuple[str, ...]
    end_site: Vec3 | None = None  # cm, leaf tip offset


@dataclass
class BvhDocument:
    joints: list[BvhJoint]
    frame_time: float
    frames: list[list[float]]

    def __post_init__(self) -> None:
        if self.frame_time <= 0.0:
            raise ValueError("frame time must be > 0")
        width = sum(len(j.channels) for j in self.joints)
        for row in self.frames:
            if len(row) != width:
                raise ValueError(f"frame width {len(row)} != channel count {width}")

    @property
    def channel_count(self) -> int:
        return sum(len(j.channels) for j in self.joints)


def export_bvh(armature: Armature, timeline: Timeline, frame_rate: float) -> BvhDocument:
    """Sample the timeline into a BVH document for the primary skeleton."""
    if len(timeline) == 0:
        raise EmptyTimeline("cannot export an empty timeline")
    if frame_rate <= 0.0:
        raise ValueError("frame rate must be > 0")

    roots = armature.root_indices()
    root = roots[0]
    subtree = [root] + sorted(armature.descendants(root))
    joint_of_bone = {b: j for j, b in enumerate(subtree)}

    joints = []
    for j, b in enumerate(subtree):
        bone = armature.bones[b]
        parent = None if b == root else joint_of_bone[bone.parent]
        channels = ROOT_CHANNELS if j == 0 else JOINT_CHANNELS
        end_site = None
        if not any(armature.bones[c].parent == b for c in subtree):
            end_site = Vec3(0.0, bone.length * METERS_TO_BVH, 0.0)
        joints.append(
            BvhJoint(bone.name, parent, bone.rest_local.position * METERS_TO_BVH, channels, end_site)
        )

    n_frames = int(round(timeline.end * frame_rate)) + 1
    frames = []
    for i in range(n_frames):
        t = i / frame_rate
        pose = sample_timeline(timeline, armature, t)
        row: list[float] = []
        for j, b in enumerate(subtree):
            local = pose.locals[b]
            if j == 0:
                p = local.position * METERS_TO_BVH
                row.extend((p.x, p.y, p.z))
            zxy = euler_zxy_from_quat(local.orientation)
            row.extend(zxy)
        frames.append(row)
    return BvhDocument(joints, 1.0 / frame_rate, frames)


def _write_joint(out: io.StringIO, doc: BvhDocument, j: int, depth: int) -> None:
    joint = doc.joints[j]
    kind = "ROOT" if joint.parent is None else "JOINT"
    pad = "\t" * depth
    out.write(f"{pad}{kind} {joint.name}\n{pad}{{\n")
    o = joint.offset
    out.write(f"{pad}\tOFFSET {o.x:.6f} {o.y:.6f} {o.z:.6f}\n")
    out.write(f"{pad}\tCHANNELS {len(joint.channels)} {' '.join(joint.channels)}\n")
    children = [k for k, cand in enumerate(doc.joints) if cand.parent == j]
    if joint.end_site is not None:
        e = joint.end_site
        out.write(f"{pad}\tEnd Site\n{pad}\t{{\n")
        out.write(f"{pad}\t\tOFFSET {e.x:.6f} {e.y:.6f} {e.z:.6f}\n")
        out.write(f"{pad}\t}}\n")
    for k in children:
        _write_joint(out, doc, k, depth + 1)
    out.write(f"{pad}}}\n")


def bvh_to_text(doc: BvhDocument) -> str:
    out = io.StringIO()
    out.write("HIERARCHY\n")
    _write_joint(out, doc, 0, 0)
    out.write("MOTION\n")
    out.write(f"Frames: {len(doc.frames)}\n")
    out.write(f"Frame Time: {doc.frame_time:.7f}\n")
    for row in doc.frames:
        out.write(" ".join(f"{v:.6f}" for v in row) + "\n")
    return out.getvalue()


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, int]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            for tok in line.split():
                self.items.append((tok, lineno))
        self.pos = 0

    def peek(self) -> str | None:
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    def next(self, expect: str | None = None) -> str:
        if self.pos >= len(self.items):
            raise ParseError("unexpected end of file")
        tok, line = self.items[self.pos]
        self.pos += 1
        if expect is not None and tok != expect:
            raise ParseError(f"expected {expect!r}, got {tok!r}", line=line)
        return tok

    def next_float(self) -> float:
        tok, line = self.items[self.pos] if self.pos < len(self.items) else (None, -1)
        try:
            v = float(self.next())
        except (ValueError, TypeError):
            raise ParseError(f"expected a number, got {tok!r}", line=line) from None
        return v

    @property
    def line(self) -> int:
        idx = min(self.pos, len(self.items) - 1)
        return self.items[idx][1] if self.items else 0


def parse_bvh(text: str) -> BvhDocument:
    toks = _Tokens(text)
    toks.next("HIERARCHY")
    joints: list[BvhJoint] = []

    def parse_joint(parent: int | None) -> None:
        kind = toks.next()
        if kind not in ("ROOT", "JOINT"):
            raise ParseError(f"expected ROOT or JOINT, got {kind!r}", line=toks.line)
        name = toks.next()
        toks.next("{")
        toks.next("OFFSET")
        offset = Vec3(toks.next_float(), toks.next_float(), toks.next_float())
        toks.next("CHANNELS")
        n = int(toks.next_float())
        channels = tuple(toks.next() for _ in range(n))
        me = len(joints)
        joints.append(BvhJoint(name, parent, offset, channels))
        end_site = None
        while True:
            nxt = toks.peek()
            if nxt == "}":
                toks.next()
                break
            if nxt == "JOINT":
                parse_joint(me)
            elif nxt == "End":
                toks.next("End")
                toks.next("Site")
                toks.next("{")
                toks.next("OFFSET")
                end_site = Vec3(toks.next_float(), toks.next_float(), toks.next_float())
                toks.next("}")
            else:
                raise ParseError(f"unexpected token {nxt!r}", line=toks.line)
        if end_site is not None:
            joints[me] = BvhJoint(name, parent, offset, channels, end_site)

    parse_joint(None)
    toks.next("MOTION")
    toks.next("Frames:")
    n_frames = int(toks.next_float())
    toks.next("Frame")
    toks.next("Time:")
    frame_time = toks.next_float()
    width = sum(len(j.channels) for j in joints)
    frames = []
    for _ in range(n_frames):
        frames.append([toks.next_float() for _ in range(width)])
    if toks.peek() is not None:
        raise ParseError(f"trailing data {toks.peek()!r}", line=toks.line)
    return BvhDocument(joints, frame_time, frames)
