"""Shipped rig and jig presets.

Four armature archetypes, smallest to richest:

* ``simple_abstract`` - one body bone rigidly following one control, an
  almost direct mapping to the device
* ``legs`` - a pelvis with two 2-bone leg chains, ankle controls, and knee
  pole targets
* ``complex_abstract`` - a stacked 3-segment character whose head control
  drives two bones through IK
* ``humanoid`` - full biped: five control bones (root, hands, ankles) and
  four pole targets (elbows, knees)

The presets live as JSON data files inside the package; the builder
functions here are the source they were generated from and keep a test
honest about the files staying in sync.
"""

from __future__ import annotations

import json
import math
from importlib import resources

from movesketch.geom import Pose, Quat, Vec3
from movesketch.jigs import BandJig, JigConfig, PendulumJig, StickJig, WeightJig
from movesketch.rig import Armature, Bone, CopyLocation, IkChain, capture_keep_offset, PoseState

ARMATURE_PRESETS = ("simple_abstract", "legs", "complex_abstract", "humanoid")

_ROT_Z = lambda deg: Quat.from_axis_angle(Vec3(0, 0, 1), math.radians(deg))  # noqa: E731

JIG_PRESETS: dict[str, JigConfig] = {
    "weight:default": WeightJig(mass=1.0, stiffness=120.0, damping=14.0),
    "weight:heavy": WeightJig(mass=3.0, stiffness=80.0, damping=22.0),
    "pendulum:default": PendulumJig(length=0.4, gravity=9.81, damping=0.3),
    "pendulum:long": PendulumJig(length=0.8, gravity=9.81, damping=0.15),
    "stick:line": StickJig((Vec3(-0.5, 1.0, 0.0), Vec3(0.5, 1.0, 0.0))),
    "stick:arc": StickJig(
        tuple(
            Vec3(0.5 * math.cos(a), 1.0 + 0.2 * math.sin(a), 0.0)
            for a in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi)
        )
    ),
    "band:default": BandJig(rest_length=0.5, stiffness=60.0, damping=6.0),
}


def build_simple_abstract() -> Armature:
    bones = [
        Bone("body", None, Pose(Vec3(0, 0.5, 0), Quat.identity()), 0.3),
        Bone("ctrl_body", None, Pose(Vec3(0, 0.5, 0), Quat.identity()), 0.05),
    ]
    bare = Armature(bones)
    follow = capture_keep_offset(bare, PoseState(bare), "body", "ctrl_body")
    return Armature(bones, [follow])


def build_legs() -> Armature:
    down = _ROT_Z(180.0)
    bones = [
        Bone("pelvis", None, Pose(Vec3(0, 0.9, 0), Quat.identity()), 0.15),
        Bone("thigh_l", 0, Pose(Vec3(0.1, 0, 0), down), 0.4),
        Bone("shin_l", 1, Pose(Vec3(0, 0.4, 0), Quat.identity()), 0.4),
        Bone("thigh_r", 0, Pose(Vec3(-0.1, 0, 0), down), 0.4),
        Bone("shin_r", 3, Pose(Vec3(0, 0.4, 0), Quat.identity()), 0.4),
        Bone("ctrl_ankle_l", None, Pose(Vec3(0.1, 0.1, 0), Quat.identity()), 0.05),
        Bone("ctrl_ankle_r", None, Pose(Vec3(-0.1, 0.1, 0), Quat.identity()), 0.05),
        Bone("pole_knee_l", None, Pose(Vec3(0.1, 0.5, 0.5), Quat.identity()), 0.05),
        Bone("pole_knee_r", None, Pose(Vec3(-0.1, 0.5, 0.5), Quat.identity()), 0.05),
    ]
    constraints = [
        IkChain("shin_l", 2, "ctrl_ankle_l", "pole_knee_l"),
        IkChain("shin_r", 2, "ctrl_ankle_r", "pole_knee_r"),
    ]
    return Armature(bones, constraints)


def build_complex_abstract() -> Armature:
    bones = [
        Bone("base", None, Pose(Vec3(0, 0, 0), Quat.identity()), 0.3),
        Bone("seg1", 0, Pose(Vec3(0, 0.3, 0), Quat.identity()), 0.3),
        Bone("seg2", 1, Pose(Vec3(0, 0.3, 0), Quat.identity()), 0.3),
        Bone("head", 2, Pose(Vec3(0, 0.3, 0), Quat.identity()), 0.15),
        Bone("ctrl_head", None, Pose(Vec3(0, 0.9, 0), Quat.identity()), 0.05),
    ]
    bare = Armature(bones)
    follow = capture_keep_offset(bare, PoseState(bare), "head", "ctrl_head")
    constraints = [IkChain("seg2", 2, "ctrl_head", iterations=30, tolerance=1e-6), follow]
    return Armature(bones, constraints)


def build_humanoid() -> Armature:
    down = _ROT_Z(180.0)
    arm_l = _ROT_Z(-90.0)
    arm_r = _ROT_Z(90.0)
    bones = [
        Bone("hips", None, Pose(Vec3(0, 0.9, 0), Quat.identity()), 0.15),
        Bone("spine", 0, Pose(Vec3(0, 0.15, 0), Quat.identity()), 0.2),
        Bone("chest", 1, Pose(Vec3(0, 0.2, 0), Quat.identity()), 0.15),
        Bone("neck", 2, Pose(Vec3(0, 0.15, 0), Quat.identity()), 0.1),
        Bone("head", 3, Pose(Vec3(0, 0.1, 0), Quat.identity()), 0.15),
        Bone("upperarm_l", 2, Pose(Vec3(0.2, 0.15, 0), arm_l), 0.25),
        Bone("forearm_l", 5, Pose(Vec3(0, 0.25, 0), Quat.identity()), 0.25),
        Bone("upperarm_r", 2, Pose(Vec3(-0.2, 0.15, 0), arm_r), 0.25),
        Bone("forearm_r", 7, Pose(Vec3(0, 0.25, 0), Quat.identity()), 0.25),
        Bone("thigh_l", 0, Pose(Vec3(0.1, 0, 0), down), 0.4),
        Bone("shin_l", 9, Pose(Vec3(0, 0.4, 0), Quat.identity()), 0.4),
        Bone("thigh_r", 0, Pose(Vec3(-0.1, 0, 0), down), 0.4),
        Bone("shin_r", 11, Pose(Vec3(0, 0.4, 0), Quat.identity()), 0.4),
        Bone("ctrl_root", None, Pose(Vec3(0, 0.9, 0), Quat.identity()), 0.05),
        Bone("ctrl_hand_l", None, Pose(Vec3(0.7, 1.4, 0), Quat.identity()), 0.05),
        Bone("ctrl_hand_r", None, Pose(Vec3(-0.7, 1.4, 0), Quat.identity()), 0.05),
        Bone("ctrl_ankle_l", None, Pose(Vec3(0.1, 0.1, 0), Quat.identity()), 0.05),
        Bone("ctrl_ankle_r", None, Pose(Vec3(-0.1, 0.1, 0), Quat.identity()), 0.05),
        Bone("pole_elbow_l", None, Pose(Vec3(0.45, 1.4, -0.5), Quat.identity()), 0.05),
        Bone("pole_elbow_r", None, Pose(Vec3(-0.45, 1.4, -0.5), Quat.identity()), 0.05),
        Bone("pole_knee_l", None, Pose(Vec3(0.1, 0.5, 0.5), Quat.identity()), 0.05),
        Bone("pole_knee_r", None, Pose(Vec3(-0.1, 0.5, 0.5), Quat.identity()), 0.05),
    ]
    constraints = [
        CopyLocation("hips", "ctrl_root"),
        IkChain("forearm_l", 2, "ctrl_hand_l", "pole_elbow_l"),
        IkChain("forearm_r", 2, "ctrl_hand_r", "pole_elbow_r"),
        IkChain("shin_l", 2, "ctrl_ankle_l", "pole_knee_l"),
        IkChain("shin_r", 2, "ctrl_ankle_r", "pole_knee_r"),
    ]
    return Armature(bones, constraints)


_BUILDERS = {
    "simple_abstract": build_simple_abstract,
    "legs": build_legs,
    "complex_abstract": build_complex_abstract,
    "humanoid": build_humanoid,
}


def build_armature(name: str) -> Armature:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown armature preset {name!r}; have {ARMATURE_PRESETS}") from None


def _data_text(filename: str) -> str:
    return resources.files("movesketch").joinpath("data").joinpath(filename).read_text()


def load_armature_preset(name: str) -> Armature:
    """Load a shipped armature preset from its package data file."""
    from movesketch.formats import armature_from_json

    if name not in ARMATURE_PRESETS:
        raise KeyError(f"unknown armature preset {name!r}; have {ARMATURE_PRESETS}")
    return armature_from_json(json.loads(_data_text(f"{name}.json")))


def load_jig_preset(name: str) -> JigConfig:
    """Jig preset by name; a bare kind like "weight" means "<kind>:default"."""
    from movesketch.formats import jig_from_json

    key = name if ":" in name else f"{name}:default"
    data = json.loads(_data_text("jigs.json"))
    presets = data["presets"]
    if key not in presets:
        raise KeyError(f"unknown jig preset {name!r}; have {sorted(presets)}")
    return jig_from_json(presets[key])


def jig_preset_names() -> list[str]:
    data = json.loads(_data_text("jigs.json"))
    return sorted(data["presets"])
