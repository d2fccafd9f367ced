"""A whole scripted session through the wire-command surface.

Drives the engine exactly the way a UI would - calibrate, bind, set a jig,
record, layer, replay - using command messages with sequence numbers, then
exports the result. Run twice, the bytes match: the engine is deterministic
under scripted input.
"""

import math

from movesketch.engine import EngineConfig, EngineSession, run_stream
from movesketch.formats import StreamSample, bvh_to_text, export_bvh
from movesketch.geom import Quat, Vec3
from movesketch.presets import load_armature_preset

RATE = 60.0


def session() -> bytes:
    engine = EngineSession(load_armature_preset("complex_abstract"), EngineConfig(tick_rate=RATE))
    seq = iter(range(1, 10_000))

    def command(**payload):
        msg = {"type": "command", "seq": next(seq), **payload}
        reply = engine.handle_command(msg)
        label = f"{payload['cmd']:13s}"
        if reply["type"] == "ack":
            extras = {k: v for k, v in reply.items() if k not in ("type", "seq", "cmd")}
            print(f"  {label} ack  {extras or ''}")
        else:
            print(f"  {label} ERROR {reply['code']}: {reply['message']}")
        return reply

    command(cmd="calibrate", readings=[[0, 0, 0], [0.1, 0, 0], [0, 0.1, 0], [0, 0, 0.1]], t=0.1)
    command(cmd="bind", device="dev1", bone="ctrl_head")
    command(cmd="set_jig", devices=["dev1"], kind="pendulum", preset="pendulum:default")
    command(cmd="record_start", kind="take")

    samples = []
    for i in range(121):
        t = i / RATE
        samples.append(
            StreamSample(
                t, "dev1",
                Vec3(0.25 * math.sin(2 * t), 0.9 + 0.1 * math.sin(5 * t), 0.25 * math.cos(2 * t) - 0.25),
                Quat.identity(),
            )
        )
    run_stream(engine, samples)
    reply = command(cmd="record_stop")
    take_id = reply["id"]
    command(cmd="layer", take=take_id, offset=0.0)

    # sketch a quick trajectory and replay it at double speed
    command(cmd="record_start", kind="trajectory", device="dev1")
    sketch_start = engine.clock + 1.0 / RATE  # strictly after the take's stream
    run_stream(engine, [
        StreamSample(sketch_start + i / RATE, "dev1", Vec3(0.01 * i, 1.0, 0.0), Quat.identity())
        for i in range(31)
    ])
    reply = command(cmd="record_stop")
    command(cmd="replay", ids=[reply["id"]], speed=2.0)
    while engine.mode == "replaying":
        engine.tick()

    doc = export_bvh(engine.armature, engine.timeline, 30.0)
    return bvh_to_text(doc).encode()


print("run 1:")
first = session()
print("run 2:")
second = session()
print(f"\nexports byte-identical across runs: {first == second}  ({len(first)} bytes)")
