import json

import pytest

from movesketch.formats import armature_to_json, to_text
from movesketch.geom import Pose, Quat, Vec3
from movesketch.jigs import BandJig, PendulumJig, StickJig, WeightJig
from movesketch.presets import (
    ARMATURE_PRESETS,
    JIG_PRESETS,
    build_armature,
    jig_preset_names,
    load_armature_preset,
    load_jig_preset,
)
from movesketch.rig import PoseState, apply_constraints, bone_tip, fk_world, resolve_externals


class TestArmaturePresets:
    def test_data_files_match_builders(self):
        for name in ARMATURE_PRESETS:
            shipped = load_armature_preset(name)
            built = build_armature(name)
            assert shipped.bones == built.bones
            assert shipped.constraints == built.constraints

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            load_armature_preset("nope")

    def test_humanoid_shape(self):
        arm = load_armature_preset("humanoid")
        controls = [b for b in arm.bones if b.name.startswith("ctrl_")]
        poles = [b for b in arm.bones if b.name.startswith("pole_")]
        assert len(controls) >= 5
        assert len(poles) >= 2

    def test_simple_abstract_follows_control(self):
        arm = load_armature_preset("simple_abstract")
        pose = PoseState(arm)
        moved = Pose(Vec3(0.4, 1.0, -0.2), Quat.from_axis_angle(Vec3(1, 0, 0), 0.6))
        pose.set("ctrl_body", moved)
        apply_constraints(arm, pose, resolve_externals(arm, fk_world(arm, pose)))
        world = fk_world(arm, pose)[arm.index("body")]
        assert world.position.distance(moved.position) < 1e-12
        assert abs(world.orientation.dot(moved.orientation)) > 1.0 - 1e-12

    def test_rest_solve_is_stable(self):
        # applying constraints at rest must not move anything visibly
        for name in ARMATURE_PRESETS:
            arm = load_armature_preset(name)
            pose = PoseState(arm)
            before = fk_world(arm, pose)
            apply_constraints(arm, pose, resolve_externals(arm, before))
            after = fk_world(arm, pose)
            for b, a in zip(before, after):
                assert b.position.distance(a.position) < 1e-9

    def test_humanoid_chains_reach_controls(self):
        arm = load_armature_preset("humanoid")
        pose = PoseState(arm)
        driven = {
            "ctrl_hand_l": Pose(Vec3(0.45, 1.1, 0.2), Quat.identity()),
            "ctrl_ankle_r": Pose(Vec3(-0.2, 0.3, 0.1), Quat.identity()),
        }
        apply_constraints(arm, pose, resolve_externals(arm, fk_world(arm, pose), driven))
        worlds = fk_world(arm, pose)
        hand = bone_tip(worlds[arm.index("forearm_l")], 0.25)
        ankle = bone_tip(worlds[arm.index("shin_r")], 0.4)
        assert hand.distance(driven["ctrl_hand_l"].position) < 1e-6
        assert ankle.distance(driven["ctrl_ankle_r"].position) < 1e-6


class TestJigPresets:
    def test_all_presets_load(self):
        for name in jig_preset_names():
            config = load_jig_preset(name)
            assert config == JIG_PRESETS[name]

    def test_bare_kind_means_default(self):
        assert load_jig_preset("weight") == JIG_PRESETS["weight:default"]
        assert load_jig_preset("pendulum") == JIG_PRESETS["pendulum:default"]

    def test_kinds(self):
        assert isinstance(load_jig_preset("weight:heavy"), WeightJig)
        assert isinstance(load_jig_preset("pendulum:long"), PendulumJig)
        assert isinstance(load_jig_preset("stick:line"), StickJig)
        assert isinstance(load_jig_preset("band:default"), BandJig)

    def test_unknown_jig(self):
        with pytest.raises(KeyError):
            load_jig_preset("anvil")
