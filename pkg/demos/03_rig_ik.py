"""Driving a rigged character with inverse kinematics.

Loads the shipped two-leg preset, drags an ankle control along a path, and
shows the knee bending toward its pole target while the foot tracks the
control exactly.
"""

import math

from movesketch.geom import Pose, Quat, Vec3
from movesketch.presets import load_armature_preset
from movesketch.rig import PoseState, apply_constraints, bone_tip, fk_world, resolve_externals

arm = load_armature_preset("legs")
print(f"rig: {len(arm.bones)} bones, {len(arm.constraints)} constraints")
for c in arm.constraints:
    print(f"  {type(c).__name__}: {c.bone} -> target {c.target}, pole {c.pole}")

pose = PoseState(arm)
print("\nlifting the left ankle control in a small arc:")
for k in range(5):
    t = k / 4.0
    target = Vec3(0.1 + 0.15 * math.sin(math.pi * t), 0.1 + 0.3 * t, 0.1 * t)
    driven = {"ctrl_ankle_l": Pose(target, Quat.identity())}
    apply_constraints(arm, pose, resolve_externals(arm, fk_world(arm, pose), driven))
    worlds = fk_world(arm, pose)
    ankle = bone_tip(worlds[arm.index("shin_l")], 0.4)
    knee = worlds[arm.index("shin_l")].position
    print(
        f"  target=({target.x:+.3f},{target.y:+.3f},{target.z:+.3f})"
        f"  foot error {ankle.distance(target):.1e}"
        f"  knee at ({knee.x:+.3f},{knee.y:+.3f},{knee.z:+.3f})"
    )

# The pole target keeps the knee bending forward (+Z side).
print("\nknee z stays positive (bending toward the pole target):")
for k in range(3):
    target = Vec3(0.1, 0.35 - 0.1 * k, 0.0)
    apply_constraints(arm, pose, resolve_externals(arm, fk_world(arm, pose), {"ctrl_ankle_l": Pose(target, Quat.identity())}))
    knee = fk_world(arm, pose)[arm.index("shin_l")].position
    print(f"  ankle height {target.y:.2f} -> knee z {knee.z:+.4f}")
