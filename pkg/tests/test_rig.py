import math

import numpy as np
import pytest

from movesketch.geom import Pose, Quat, Vec3
from movesketch.rig import (
    Armature,
    Bone,
    CopyLocation,
    DeviceAlreadyBound,
    DeviceBindings,
    IkChain,
    KeepOffsetParent,
    MissingExternal,
    PoseState,
    TooManyDevices,
    UnknownBone,
    apply_constraints,
    bone_tip,
    capture_keep_offset,
    fk_world,
    resolve_externals,
    solve_ik_fabrik,
    solve_ik_two_bone,
)

ROT_Z_PI = Quat.from_axis_angle(Vec3(0, 0, 1), math.pi)


def three_bone_chain() -> Armature:
    return Armature(
        [
            Bone("a", None, Pose(Vec3(0, 0, 0), Quat.identity()), 1.0),
            Bone("b", 0, Pose(Vec3(0, 1.0, 0), Quat.identity()), 1.0),
            Bone("c", 1, Pose(Vec3(0, 1.0, 0), Quat.identity()), 1.0),
        ]
    )


def legs_armature() -> Armature:
    bones = [
        Bone("pelvis", None, Pose(Vec3(0, 0.9, 0), Quat.identity()), 0.15),
        Bone("thigh_l", 0, Pose(Vec3(0.1, 0, 0), ROT_Z_PI), 0.4),
        Bone("shin_l", 1, Pose(Vec3(0, 0.4, 0), Quat.identity()), 0.4),
        Bone("thigh_r", 0, Pose(Vec3(-0.1, 0, 0), ROT_Z_PI), 0.4),
        Bone("shin_r", 3, Pose(Vec3(0, 0.4, 0), Quat.identity()), 0.4),
        Bone("ctrl_l", None, Pose(Vec3(0.1, 0.1, 0), Quat.identity()), 0.05),
        Bone("ctrl_r", None, Pose(Vec3(-0.1, 0.1, 0), Quat.identity()), 0.05),
        Bone("pole_l", None, Pose(Vec3(0.1, 0.5, 0.5), Quat.identity()), 0.05),
        Bone("pole_r", None, Pose(Vec3(-0.1, 0.5, 0.5), Quat.identity()), 0.05),
    ]
    constraints = [
        IkChain("shin_l", 2, "ctrl_l", "pole_l"),
        IkChain("shin_r", 2, "ctrl_r", "pole_r"),
    ]
    return Armature(bones, constraints)


def pose_matrix(p: Pose) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = p.orientation.to_matrix()
    m[:3, 3] = p.position.to_array()
    return m


class TestForwardKinematics:
    def test_rest_pose_accumulates_rest_transforms(self):
        arm = legs_armature()
        pose = PoseState(arm)
        worlds = fk_world(arm, pose)
        # matrix-chain oracle
        mats = []
        for bone, local in zip(arm.bones, pose.locals):
            m = pose_matrix(local)
            mats.append(m if bone.parent is None else mats[bone.parent] @ m)
        for w, m in zip(worlds, mats):
            assert np.allclose(pose_matrix(w), m, atol=1e-12)

    def test_single_bone_translation(self):
        arm = Armature([Bone("only", None, Pose(Vec3(0, 0, 0), Quat.identity()), 1.0)])
        pose = PoseState(arm)
        pose.set("only", Pose(Vec3(1, 0, 0), Quat.identity()))
        assert fk_world(arm, pose)[0].position == Vec3(1, 0, 0)

    def test_middle_bone_rotation_oracle(self):
        arm = three_bone_chain()
        pose = PoseState(arm)
        q = Quat.from_axis_angle(Vec3(0, 0, 1), math.pi / 2)
        pose.set("b", Pose(Vec3(0, 1.0, 0), q))
        worlds = fk_world(arm, pose)
        tip = bone_tip(worlds[2], 1.0)
        # hand-computed: b head at (0,1,0), rotated 90deg about Z sends +Y to -X,
        # so c head is (-1,1,0) and the c tip is (-2,1,0)
        mats = [pose_matrix(p) for p in pose.locals]
        world_c = mats[0] @ mats[1] @ mats[2]
        expect_tip = (world_c @ np.array([0, 1.0, 0, 1.0]))[:3]
        assert np.allclose(tip.to_array(), expect_tip, atol=1e-12)
        assert tip.distance(Vec3(-2.0, 1.0, 0.0)) < 1e-12

    def test_fk_deterministic(self):
        arm = legs_armature()
        pose = PoseState(arm)
        w1 = fk_world(arm, pose)
        w2 = fk_world(arm, pose.copy())
        assert w1 == w2


class TestTwoBoneIk:
    def effector(self, root: Vec3, q1: Quat, q2: Quat, l1: float, l2: float) -> Vec3:
        return root + q1.rotate(Vec3(0, l1, 0)) + q2.rotate(Vec3(0, l2, 0))

    def test_full_extension(self):
        q1, q2 = solve_ik_two_bone(Pose.identity(), 1.0, 1.0, Vec3(0, 0, 2.0))
        d1 = q1.rotate(Vec3(0, 1, 0))
        d2 = q2.rotate(Vec3(0, 1, 0))
        assert d1.distance(d2) < 1e-9  # straight: elbow angle pi
        assert self.effector(Vec3.zero(), q1, q2, 1, 1).distance(Vec3(0, 0, 2)) < 1e-9

    def test_right_angle_law_of_cosines(self):
        target = Vec3(1.0, 1.0, 0.0)
        q1, q2 = solve_ik_two_bone(Pose.identity(), 1.0, 1.0, target)
        eff = self.effector(Vec3.zero(), q1, q2, 1, 1)
        assert eff.distance(target) < 1e-9
        d1 = q1.rotate(Vec3(0, 1, 0))
        d2 = q2.rotate(Vec3(0, 1, 0))
        interior = math.acos(min(1, max(-1, (-1 * d1).dot(d2))))
        assert abs(interior - math.pi / 2) < 1e-9

    def test_unreachable_clamps_straight(self):
        q1, q2 = solve_ik_two_bone(Pose.identity(), 1.0, 1.0, Vec3(3.0, 0, 0))
        eff = self.effector(Vec3.zero(), q1, q2, 1, 1)
        assert eff.distance(Vec3(2.0, 0, 0)) < 1e-9

    def test_reachable_targets_hit_exactly(self):
        rng = np.random.default_rng(12)
        for _ in range(300):
            l1, l2 = rng.uniform(0.2, 1.5, size=2)
            root = Vec3.from_seq(rng.uniform(-1, 1, size=3))
            lo, hi = abs(l1 - l2), l1 + l2
            r = rng.uniform(lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo))
            direction = Vec3.from_seq(rng.normal(size=3)).normalized()
            target = root + direction * r
            pole = root + Vec3.from_seq(rng.normal(size=3))
            q1, q2 = solve_ik_two_bone(Pose(root, Quat.identity()), l1, l2, target, pole)
            assert self.effector(root, q1, q2, l1, l2).distance(target) < 1e-9

    def test_pole_coplanarity(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            root = Vec3.from_seq(rng.uniform(-1, 1, size=3))
            target = root + Vec3.from_seq(rng.normal(size=3)).normalized() * 1.2
            pole = root + Vec3.from_seq(rng.normal(size=3))
            q1, _ = solve_ik_two_bone(Pose(root, Quat.identity()), 1.0, 1.0, target, pole)
            mid = root + q1.rotate(Vec3(0, 1, 0))
            normal = (target - root).cross(pole - root)
            if normal.norm() < 1e-6:
                continue
            assert abs(normal.normalized().dot(mid - root)) < 1e-6
            # mid bends toward the pole's side: radial components align
            axis = (target - root).normalized()
            mid_radial = (mid - root) - axis * (mid - root).dot(axis)
            pole_radial = (pole - root) - axis * (pole - root).dot(axis)
            if mid_radial.norm() > 1e-9 and pole_radial.norm() > 1e-9:
                assert mid_radial.normalized().dot(pole_radial.normalized()) > 0.999


class TestFabrik:
    def chain(self, n: int, length: float = 0.5):
        pts = [Vec3(0, i * length, 0) for i in range(n + 1)]
        return pts, [length] * n

    def test_fixed_point(self):
        pts, lengths = self.chain(4)
        out = solve_ik_fabrik(pts, lengths, pts[-1], iterations=50, tolerance=1e-6)
        for a, b in zip(pts, out):
            assert a.distance(b) < 1e-6

    def test_monte_carlo_convergence(self):
        rng = np.random.default_rng(99)
        failures = 0
        for _ in range(1000):
            pts, lengths = self.chain(4, 0.5)
            total = sum(lengths)
            r = rng.uniform(0.3, 0.95) * total
            direction = Vec3.from_seq(rng.normal(size=3)).normalized()
            target = pts[0] + direction * r
            out = solve_ik_fabrik(pts, lengths, target, iterations=50, tolerance=1e-4)
            if out[-1].distance(target) > 1e-4:
                failures += 1
            for i, L in enumerate(lengths):
                assert abs(out[i].distance(out[i + 1]) - L) < 1e-6
        assert failures <= 10  # >= 99% of seeds converge

    def test_unreachable_matches_analytic_clamp(self):
        pts, lengths = self.chain(2, 1.0)
        target = Vec3(3.0, 0.0, 0.0)
        out = solve_ik_fabrik(pts, lengths, target)
        assert out[-1].distance(Vec3(2.0, 0, 0)) < 1e-9
        assert out[1].distance(Vec3(1.0, 0, 0)) < 1e-9

    def test_root_stays_pinned(self):
        rng = np.random.default_rng(7)
        pts, lengths = self.chain(5, 0.3)
        for _ in range(50):
            target = Vec3.from_seq(rng.uniform(-1.2, 1.2, size=3))
            out = solve_ik_fabrik(pts, lengths, target)
            assert out[0].distance(pts[0]) < 1e-12

    def test_pole_plane_for_three_point_chain(self):
        pts, lengths = self.chain(2, 1.0)
        target = Vec3(1.2, 0.6, 0.0)
        pole = Vec3(0.5, 0.0, 2.0)
        out = solve_ik_fabrik(pts, lengths, target, pole=pole, iterations=50, tolerance=1e-6)
        root, mid, end = out
        normal = (end - root).cross(pole - root)
        assert abs(normal.normalized().dot(mid - root)) < 1e-6
        # bend leans toward the pole half-plane
        axis = (end - root).normalized()
        radial = (mid - root) - axis * (mid - root).dot(axis)
        pole_radial = (pole - root) - axis * (pole - root).dot(axis)
        if radial.norm() > 1e-9:
            assert radial.normalized().dot(pole_radial.normalized()) > 0.99


class TestConstraints:
    def test_no_constraints_pose_unchanged(self):
        arm = three_bone_chain()
        pose = PoseState(arm)
        before = list(pose.locals)
        apply_constraints(arm, pose, {})
        assert pose.locals == before

    def test_copy_location_zero_offset(self):
        arm = Armature(
            [
                Bone("root", None, Pose(Vec3(0, 0, 0), Quat.identity()), 0.2),
                Bone("ctrl", None, Pose(Vec3(0.5, 0.5, 0.5), Quat.identity()), 0.05),
            ],
            [CopyLocation("root", "ctrl")],
        )
        pose = PoseState(arm)
        target = Pose(Vec3(1.0, 2.0, 3.0), Quat.identity())
        apply_constraints(arm, pose, {"ctrl": target})
        worlds = fk_world(arm, pose)
        assert worlds[0].position == target.position

    def test_copy_location_on_parented_bone(self):
        arm = Armature(
            [
                Bone("root", None, Pose(Vec3(0, 1, 0), Quat.from_axis_angle(Vec3(0, 0, 1), 0.4)), 0.2),
                Bone("child", 0, Pose(Vec3(0, 0.2, 0), Quat.identity()), 0.2),
            ],
            [CopyLocation("child", "pt", offset=Vec3(0, 0.1, 0))],
        )
        pose = PoseState(arm)
        apply_constraints(arm, pose, {"pt": Pose(Vec3(0.3, 0.4, 0.5), Quat.identity())})
        worlds = fk_world(arm, pose)
        assert worlds[1].position.distance(Vec3(0.3, 0.5, 0.5)) < 1e-12

    def test_missing_external(self):
        arm = Armature(
            [Bone("root", None, Pose(), 0.2)],
            [CopyLocation("root", "nowhere")],
        )
        with pytest.raises(MissingExternal):
            apply_constraints(arm, PoseState(arm), {})

    def test_keep_offset_parent_follows_rigidly(self):
        bones = [
            Bone("ctrl", None, Pose(Vec3(0, 1, 0), Quat.identity()), 0.1),
            Bone("body", None, Pose(Vec3(0.2, 0.8, 0), Quat.identity()), 0.3),
        ]
        arm0 = Armature(bones)
        captured = capture_keep_offset(arm0, PoseState(arm0), "body", "ctrl")
        arm = Armature(bones, [captured])
        pose = PoseState(arm)
        moved = Pose(Vec3(1.0, 1.5, -0.5), Quat.from_axis_angle(Vec3(0, 1, 0), 0.8))
        pose.set("ctrl", moved)
        apply_constraints(arm, pose, resolve_externals(arm, fk_world(arm, pose)))
        worlds = fk_world(arm, pose)
        expect = moved.compose(captured.offset)
        assert worlds[1].position.distance(expect.position) < 1e-12
        assert abs(worlds[1].orientation.dot(expect.orientation)) > 1.0 - 1e-12

    def test_ik_chain_traces_dragged_control(self):
        # complex-abstract style rig: control drives a 2-bone chain's tail
        arm = Armature(
            [
                Bone("base", None, Pose(Vec3(0, 0, 0), Quat.identity()), 0.3),
                Bone("seg1", 0, Pose(Vec3(0, 0.3, 0), Quat.identity()), 0.3),
                Bone("seg2", 1, Pose(Vec3(0, 0.3, 0), Quat.identity()), 0.3),
                Bone("ctrl", None, Pose(Vec3(0, 0.9, 0), Quat.identity()), 0.05),
            ],
            [IkChain("seg2", 2, "ctrl", iterations=30, tolerance=1e-6)],
        )
        pose = PoseState(arm)
        chain_root = Vec3(0, 0.3, 0)
        for k in range(120):
            a = 2.0 * math.pi * k / 120.0
            target = chain_root + Vec3(0.45 * math.cos(a), 0.2, 0.45 * math.sin(a))
            apply_constraints(arm, pose, {"ctrl": Pose(target, Quat.identity())})
            worlds = fk_world(arm, pose)
            eff = bone_tip(worlds[2], 0.3)
            assert eff.distance(target) < 1e-6
            # chain stays connected and lengths hold
            assert worlds[2].position.distance(bone_tip(worlds[1], 0.3)) < 1e-9

    def test_long_chain_ik_with_fabrik(self):
        bones = [Bone("b0", None, Pose(Vec3(0, 0, 0), Quat.identity()), 0.25)]
        for i in range(1, 5):
            bones.append(Bone(f"b{i}", i - 1, Pose(Vec3(0, 0.25, 0), Quat.identity()), 0.25))
        bones.append(Bone("ctrl", None, Pose(Vec3(0, 1.25, 0), Quat.identity()), 0.05))
        arm = Armature(bones, [IkChain("b4", 4, "ctrl", iterations=50, tolerance=1e-5)])
        pose = PoseState(arm)
        target = Vec3(0.5, 0.6, 0.2)
        apply_constraints(arm, pose, {"ctrl": Pose(target, Quat.identity())})
        worlds = fk_world(arm, pose)
        assert bone_tip(worlds[4], 0.25).distance(target) < 1e-4
        for i in range(1, 5):
            # connected chain: each head sits on its parent's tip
            assert worlds[i].position.distance(bone_tip(worlds[i - 1], 0.25)) < 1e-9


class TestBindings:
    def test_no_jump_at_bind(self):
        arm = legs_armature()
        table = DeviceBindings(arm)
        table.bind("dev1", "ctrl_l")
        worlds = fk_world(arm, PoseState(arm))
        bone_world = worlds[arm.index("ctrl_l")]
        sample = Pose(Vec3(3.0, 2.0, 1.0), Quat.from_axis_angle(Vec3(1, 0, 0), 0.3))
        source = table.drive("dev1", sample, bone_world)
        assert source.position.distance(bone_world.position) < 1e-12

    def test_rigid_follow(self):
        arm = legs_armature()
        table = DeviceBindings(arm)
        table.bind("dev1", "ctrl_l")
        bone_world = fk_world(arm, PoseState(arm))[arm.index("ctrl_l")]
        s0 = Pose(Vec3(3.0, 2.0, 1.0), Quat.identity())
        table.drive("dev1", s0, bone_world)
        s1 = Pose(Vec3(3.3, 2.0, 1.0), Quat.identity())
        source = table.drive("dev1", s1, bone_world)
        assert source.position.distance(bone_world.position + Vec3(0.3, 0, 0)) < 1e-12

    def test_full_pose_mode_carries_orientation(self):
        arm = legs_armature()
        table = DeviceBindings(arm)
        table.bind("dev1", "ctrl_l", mode="full_pose")
        bone_world = fk_world(arm, PoseState(arm))[arm.index("ctrl_l")]
        s0 = Pose(Vec3(1, 1, 1), Quat.identity())
        first = table.drive("dev1", s0, bone_world)
        assert first.position.distance(bone_world.position) < 1e-12
        spin = Quat.from_axis_angle(Vec3(0, 1, 0), 0.7)
        s1 = Pose(Vec3(1, 1, 1), spin)
        out = table.drive("dev1", s1, bone_world)
        assert abs(out.orientation.dot(spin * bone_world.orientation)) > 1.0 - 1e-12

    def test_binding_errors(self):
        arm = legs_armature()
        table = DeviceBindings(arm, max_devices=2)
        with pytest.raises(UnknownBone):
            table.bind("dev1", "no_such_bone")
        table.bind("dev1", "ctrl_l")
        with pytest.raises(DeviceAlreadyBound):
            table.bind("dev1", "ctrl_r")
        table.bind("dev2", "ctrl_r")
        with pytest.raises(TooManyDevices):
            table.bind("dev3", "pelvis")

    def test_two_devices_drive_legs_independently(self):
        arm = legs_armature()

        def run(drive_left: bool, drive_right: bool) -> list[Vec3]:
            pose = PoseState(arm)
            ankles = []
            for k in range(60):
                worlds = fk_world(arm, pose)
                driven = {}
                if drive_left:
                    driven["ctrl_l"] = Pose(Vec3(0.1 + 0.002 * k, 0.1 + 0.003 * k, 0.002 * k), Quat.identity())
                if drive_right:
                    driven["ctrl_r"] = Pose(Vec3(-0.1 - 0.001 * k, 0.1 + 0.004 * k, -0.001 * k), Quat.identity())
                apply_constraints(arm, pose, resolve_externals(arm, worlds, driven))
                worlds = fk_world(arm, pose)
                ankles.append(bone_tip(worlds[arm.index("shin_l")], 0.4))
            return ankles

        solo = run(True, False)
        dual = run(True, True)
        for a, b in zip(solo, dual):
            assert a.distance(b) < 1e-12


class TestArmatureValidation:
    def test_affected_bones_closure(self):
        arm = legs_armature()
        affected = arm.affected_bones({"ctrl_l"})
        assert affected == {"ctrl_l", "thigh_l", "shin_l"}
        both = arm.affected_bones({"ctrl_l", "ctrl_r"})
        assert both == {"ctrl_l", "ctrl_r", "thigh_l", "shin_l", "thigh_r", "shin_r"}

    def test_rejects_bad_parent_order(self):
        with pytest.raises(ValueError):
            Armature(
                [
                    Bone("a", 1, Pose(), 0.1),
                    Bone("b", None, Pose(), 0.1),
                ]
            )

    def test_rejects_chain_deeper_than_hierarchy(self):
        with pytest.raises(ValueError):
            Armature(
                [Bone("a", None, Pose(), 0.1)],
                [IkChain("a", 2, "ctrl")],
            )

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError):
            Armature([Bone("a", None, Pose(), 0.1), Bone("a", None, Pose(), 0.1)])
