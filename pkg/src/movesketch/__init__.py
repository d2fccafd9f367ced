"""movesketch: a movement-sketching engine for 3D character animation.

Capture 6-DOF input streams, calibrate coordinate frames, drive rigged
armatures through IK bindings, record/edit/replay/layer motion takes and
trajectories, and filter input through simulated "material jigs".
"""

from movesketch.geom import Pose, Quat, SimilarityTransform, Vec3, slerp

__version__ = "0.1.0"

__all__ = [
    "Vec3",
    "Quat",
    "Pose",
    "SimilarityTransform",
    "slerp",
    "__version__",
]
