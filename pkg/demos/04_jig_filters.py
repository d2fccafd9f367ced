"""Material jigs as input filters.

Each jig turns a raw hand path into a filtered one with its own character:
a weight lags and settles, a pendulum swings under the hand, a stick pins
motion to a path, a band couples two hands with tension.
"""

import math

from movesketch.geom import Pose, Quat, Vec3
from movesketch.jigs import (
    BandJig,
    PendulumJig,
    StickJig,
    WeightJig,
    initial_state,
    jig_step,
    settle_time,
)

DT = 1.0 / 60.0


def drive(config, path, two_handed=False):
    state = initial_state(config, path[0])
    outs = []
    for pose in path:
        state, out = jig_step(config, state, pose, DT)
        outs.append(out)
    return outs


# A jerky one-dimensional hand path: three sudden jumps.
hand = []
for i in range(181):
    x = 0.2 * (i // 60)
    hand.append(Pose(Vec3(x, 1.0, 0.0), Quat.identity()))

weight = WeightJig(mass=2.0, stiffness=60.0, damping=12.0)
outs = drive(weight, hand)
overshoot = max(o.position.x for o in outs)
print(f"weight jig: settle estimate {settle_time(weight):.2f}s")
print(f"  raw path jumps to 0.400; filtered peak {overshoot:.3f}, end {outs[-1].position.x:.3f}")

pend = PendulumJig(length=0.4, damping=0.1)
state = initial_state(pend, hand[0])
lows, highs = 1e9, -1e9
for i in range(600):
    t = i * DT
    pivot = Pose(Vec3(0.3 * math.sin(2.5 * t), 1.0, 0.0), Quat.identity())
    state, out = jig_step(pend, state, pivot, DT)
    lows, highs = min(lows, out.position.x), max(highs, out.position.x)
print(f"pendulum jig: stirring the pivot +-0.3 swings the bob through [{lows:+.3f}, {highs:+.3f}]")

stick = StickJig((Vec3(-0.5, 1.0, 0.0), Vec3(0.5, 1.0, 0.0)))
wild = [Pose(Vec3(math.sin(3 * i * DT), 1.0 + 0.4 * math.cos(2 * i * DT), 0.3), Quat.identity()) for i in range(60)]
outs = drive(stick, wild)
print(f"stick jig: wild 3D input collapses to the bar; all outputs have y=1, z=0: "
      f"{all(abs(o.position.y - 1) < 1e-9 and abs(o.position.z) < 1e-9 for o in outs)}")

band = BandJig(rest_length=0.3, stiffness=60.0, damping=6.0)
pair = (Pose(Vec3(-0.4, 1, 0), Quat.identity()), Pose(Vec3(0.4, 1, 0), Quat.identity()))
state = initial_state(band, pair)
for _ in range(240):
    state, (a, b) = jig_step(band, state, pair, DT)
print(f"band jig: hands 0.8 apart, rest length 0.3 -> filtered gap {a.position.distance(b.position):.3f} "
      "(the band pulls the motion inward)")
