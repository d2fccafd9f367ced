"""Layered takes: record body parts separately, collage them afterwards.

Records a base take that moves both legs, then overlays a second take that
re-performs only the left leg. Inside the overlay's interval the left leg
follows the new performance; everywhere else the base shows through.
"""

import math

from movesketch.engine import EngineConfig, EngineSession, run_stream
from movesketch.formats import StreamSample, export_bvh, bvh_to_text
from movesketch.geom import Quat, Vec3
from movesketch.presets import load_armature_preset
from movesketch.takes import Timeline, layer_takes, sample_timeline

RATE = 60.0


def leg_stream(device, rest, amp, hz, duration, phase=0.0):
    out = []
    for i in range(int(duration * RATE) + 1):
        t = i / RATE
        out.append(
            StreamSample(
                t, device,
                rest + Vec3(0.0, amp * (1 - math.cos(2 * math.pi * hz * t + phase)) / 2, 0.0),
                Quat.identity(),
            )
        )
    return out


arm = load_armature_preset("legs")

# Base take: both ankles bobbing gently for 2 s.
engine = EngineSession(arm, EngineConfig(tick_rate=RATE))
engine.bind("dev1", "ctrl_ankle_l")
engine.bind("dev2", "ctrl_ankle_r")
engine.record_start("take")
run_stream(engine, leg_stream("dev1", Vec3(0.1, 0.1, 0), 0.15, 1.0, 2.0)
           + leg_stream("dev2", Vec3(-0.1, 0.1, 0), 0.15, 1.0, 2.0, phase=math.pi))
base = engine.takes[engine.record_stop()]
print(f"base take: {sorted(base.bound_bones)} for {base.duration:.2f}s")

# Overlay: a sharper left-leg kick, recorded on its own.
engine2 = EngineSession(load_armature_preset("legs"), EngineConfig(tick_rate=RATE))
engine2.bind("dev1", "ctrl_ankle_l")
engine2.record_start("take")
run_stream(engine2, leg_stream("dev1", Vec3(0.1, 0.1, 0), 0.3, 3.0, 0.5))
overlay = engine2.takes[engine2.record_stop()]
print(f"overlay take: {sorted(overlay.bound_bones)} for {overlay.duration:.2f}s")

timeline = layer_takes(layer_takes(Timeline(), base, 0.0), overlay, 0.75)
print("\nsampling the timeline (left shin local Y rotation as a proxy):")
for t in (0.25, 0.8, 1.0, 1.5):
    pose = sample_timeline(timeline, arm, t)
    left = pose.get("ctrl_ankle_l").position
    right = pose.get("ctrl_ankle_r").position
    owner = "overlay" if 0.75 <= t <= 0.75 + overlay.duration else "base"
    print(f"  t={t:4.2f}s left ankle y={left.y:+.3f} ({owner}), right ankle y={right.y:+.3f} (base)")

doc = export_bvh(arm, timeline, 30.0)
text = bvh_to_text(doc)
print(f"\nexported BVH: {len(doc.joints)} joints, {len(doc.frames)} frames, {len(text)} bytes")
