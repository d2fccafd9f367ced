"""Sketching motion trajectories: record, edit, replay, layer.

A trajectory is drawn by moving a controller; waypoints land on a fixed time
grid, so drawing slowly packs them close together in space. Afterwards the
sketch can be translated, rotated about its centroid, zoomed, and replayed
with a window of upcoming waypoints highlighted.
"""

import math

from movesketch.geom import Vec3
from movesketch.trajectory import (
    ReplayCursor,
    layered_schedule,
    record,
    replay_eval,
    rotate,
    translate,
    zoom,
)

RATE = 60.0

# Draw a spiral for two seconds: fast at the start, slow at the end.
samples = []
for i in range(121):
    t = i / RATE
    speed_taper = 1.0 - 0.4 * t
    a = 2.0 * math.pi * speed_taper * t
    samples.append((t, Vec3(0.3 * math.cos(a), 0.1 * t, 0.3 * math.sin(a))))
spiral = record("spiral", samples)

gaps = [a.position.distance(b.position) for a, b in zip(spiral.waypoints, spiral.waypoints[1:])]
print(f"recorded {len(spiral.waypoints)} waypoints over {spiral.duration:.2f}s")
print(f"  spacing first 10 avg {sum(gaps[:10]) / 10 * 1000:.1f} mm, last 10 avg {sum(gaps[-10:]) / 10 * 1000:.1f} mm")

# Edits return new trajectories; timestamps never change.
lifted = translate(spiral, Vec3(0, 0.5, 0))
turned = rotate(lifted, "y", math.radians(45))
grown = zoom(turned, 1.5)
print(f"after translate/rotate/zoom the centroid is {grown.centroid().to_list()}")

# Replay at double speed: the cursor traces the original timing, compressed.
cursor = ReplayCursor("spiral", start_time=0.0, speed=2.0)
for clock in (0.0, 0.25, 0.5, 0.95):
    out = replay_eval(cursor, spiral, clock)
    print(
        f"  t={clock:4.2f}s pos=({out.position.x:+.3f},{out.position.y:+.3f},{out.position.z:+.3f})"
        f" visible={list(out.visible)} finished={out.finished}"
    )

# Layering: a second sketch starts halfway through the first replay.
zigzag = record(
    "zigzag",
    [(i / RATE, Vec3(0.05 * (i % 8), 0.0, 0.02 * i)) for i in range(61)],
)
cursors = [ReplayCursor("spiral", 0.0), ReplayCursor("zigzag", 0.5)]
trajs = {"spiral": spiral, "zigzag": zigzag}
active_at = {t: [tid for tid, _ in layered_schedule(cursors, trajs, t)] for t in (0.25, 0.75, 1.6)}
print(f"layered replays active over time: {active_at}")
