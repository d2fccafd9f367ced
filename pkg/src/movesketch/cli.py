"""Headless command-line driver for the whole pipeline.

Every subcommand is a thin shell over library calls with a virtual clock, so
file outputs are deterministic and identical to direct library use. Exit
codes: 0 success, 1 data errors, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from movesketch import calibration as cal
from movesketch import formats, presets
from movesketch import trajectory as trajmod
from movesketch.engine import EngineConfig, EngineSession, run_stream
from movesketch.geom import Pose, Vec3
from movesketch.jigs import BandJig
from movesketch.rig import Armature
from movesketch.takes import Timeline, layer_takes

BIND_MODES = ("location_only", "full_pose")


class CliError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from None


def _vec(text: str) -> Vec3:
    parts = text.split(",")
    if len(parts) != 3:
        raise CliError(f"expected x,y,z - got {text!r}")
    try:
        return Vec3(*(float(p) for p in parts))
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _labeled_rows(text: str) -> dict[str, Vec3]:
    rows: dict[str, Vec3] = {}
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if lines and lines[0].lower().replace(" ", "") == "label,x,y,z":
        lines = lines[1:]
    for n, line in enumerate(lines, start=1):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise CliError(f"row {n}: expected label,x,y,z")
        try:
            rows[parts[0]] = Vec3(float(parts[1]), float(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise CliError(f"row {n}: {exc}") from None
    return rows


def load_rig(value: str) -> Armature:
    if value in presets.ARMATURE_PRESETS:
        return presets.load_armature_preset(value)
    return formats.armature_from_json(json.loads(_read(value)))


def _load_map(path: str):
    return formats.map_from_json(json.loads(_read(path)))


# -- subcommands -------------------------------------------------------------


def cmd_calibrate(args) -> int:
    rows = _labeled_rows(_read(args.probe))
    try:
        readings = tuple(rows[f"x{i}"] for i in range(4))
    except KeyError as exc:
        raise CliError(f"probe CSV needs labels x0..x3 (missing {exc})") from None
    probe = cal.CalibrationProbe(readings, args.t)
    coord_map = cal.calibrate_four_point(probe)
    out = coord_map if args.form == "projection" else cal.map_to_similarity(coord_map)
    _write(args.output, formats.to_text(formats.map_to_json(out)))
    return 0


def cmd_fit_lsq(args) -> int:
    rows = _labeled_rows(_read(args.pairs))
    pairs = []
    i = 0
    while f"src{i}" in rows:
        if f"dst{i}" not in rows:
            raise CliError(f"pair {i}: src{i} has no dst{i}")
        pairs.append((rows[f"src{i}"], rows[f"dst{i}"]))
        i += 1
    if not pairs:
        raise CliError("pairs CSV needs labels src0/dst0, src1/dst1, ...")
    transform = cal.fit_similarity_lsq(cal.CorrespondenceSet(tuple(pairs)))
    _write(args.output, formats.to_text(formats.map_to_json(transform)))
    return 0


def _parse_bind(spec: str) -> tuple[str, str, str]:
    if "=" not in spec:
        raise CliError(f"--bind expects device=bone[:mode], got {spec!r}")
    device, bone = spec.split("=", 1)
    mode = "location_only"
    if ":" in bone:
        bone_part, tail = bone.rsplit(":", 1)
        if tail in BIND_MODES:
            bone, mode = bone_part, tail
    return device, bone, mode


def _parse_jig(spec: str) -> tuple[list[str] | None, str]:
    if "=" in spec:
        devices, name = spec.split("=", 1)
        return devices.split("+"), name
    return None, spec


def build_record_engine(args) -> tuple[EngineSession, list]:
    arm = load_rig(args.rig)
    engine = EngineSession(arm, EngineConfig(tick_rate=args.rate, max_devices=args.max_devices))
    if args.map:
        engine.set_calibration(_load_map(args.map))
    samples = formats.read_stream_csv(_read(args.stream))
    if not samples:
        raise CliError("stream is empty")
    t0 = min(s.t for s in samples)
    if t0 != 0.0:
        samples = [
            formats.StreamSample(s.t - t0, s.device, s.position, s.orientation) for s in samples
        ]
    for spec in args.bind or []:
        device, bone, mode = _parse_bind(spec)
        engine.bind(device, bone, mode)
    devices_in_stream = sorted({s.device for s in samples})
    for spec in args.jig or []:
        devices, name = _parse_jig(spec)
        config = presets.load_jig_preset(name)
        if devices is None:
            if isinstance(config, BandJig):
                if len(devices_in_stream) != 2:
                    raise CliError("band jig needs exactly 2 devices in the stream")
                engine.set_jig(devices_in_stream, config)
            else:
                bound = [b.device for b in engine.bindings.bindings()] or devices_in_stream
                for d in bound:
                    engine.set_jig([d], config)
        else:
            engine.set_jig(devices, config)
    return engine, samples


def cmd_record(args) -> int:
    engine, samples = build_record_engine(args)
    if args.kind == "take":
        engine.record_start("take")
    else:
        device = args.device or (
            engine.bindings.bindings()[0].device
            if len(engine.bindings)
            else sorted({s.device for s in samples})[0]
        )
        engine.record_start("trajectory", device=device)
    run_stream(engine, samples)
    out_id = engine.record_stop()
    if args.kind == "take":
        _write(args.output, formats.to_text(formats.take_to_json(engine.takes[out_id])))
    else:
        _write(args.output, formats.to_text(formats.trajectory_to_json(engine.trajectories[out_id])))
    return 0


def cmd_edit(args) -> int:
    traj = formats.trajectory_from_json(json.loads(_read(args.traj)))
    if args.op == "translate":
        if args.delta is None:
            raise CliError("translate needs --delta x,y,z")
        out = trajmod.translate(traj, _vec(args.delta))
    elif args.op == "rotate":
        if args.axis is None or args.angle_deg is None:
            raise CliError("rotate needs --axis and --angle-deg")
        out = trajmod.rotate(traj, args.axis, math.radians(args.angle_deg))
    elif args.op == "zoom":
        if args.factor is None:
            raise CliError("zoom needs --factor")
        out = trajmod.zoom(traj, args.factor)
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown op {args.op!r}")
    _write(args.output, formats.to_text(formats.trajectory_to_json(out)))
    return 0


def replay_rows(
    trajectories: list, speed: float, rate: float
) -> list[tuple[float, str, Vec3]]:
    """Evaluate all cursors from t=0 on a virtual clock until every one ends."""
    cursors = [trajmod.ReplayCursor(t.id, 0.0, speed) for t in trajectories]
    table = {t.id: t for t in trajectories}
    rows = []
    dt = 1.0 / rate
    clock = 0.0
    horizon = max(t.duration for t in trajectories) / speed
    while clock <= horizon + dt / 2:
        for traj_id, sample in trajmod.layered_schedule(cursors, table, clock):
            rows.append((clock, traj_id, sample.position))
        clock += dt
    return rows


def cmd_replay(args) -> int:
    trajectories = [formats.trajectory_from_json(json.loads(_read(p))) for p in args.traj]
    rows = replay_rows(trajectories, args.speed, args.rate)
    lines = ["t,id,x,y,z"]
    for t, traj_id, pos in rows:
        lines.append(
            ",".join([format(t, ".9g"), traj_id] + [format(v, ".9g") for v in pos.to_list()])
        )
    _write(args.output, "\n".join(lines) + "\n")
    return 0


def cmd_simulate_jig(args) -> int:
    from movesketch.jigs import initial_state, jig_step, MAX_STEP_DT

    config = presets.load_jig_preset(args.jig)
    samples = formats.read_stream_csv(_read(args.input))
    if not samples:
        raise CliError("input stream is empty")
    by_device: dict[str, list] = {}
    for s in samples:
        by_device.setdefault(s.device, []).append(s)
    out = []
    if isinstance(config, BandJig):
        devices = sorted(by_device)
        if len(devices) != 2:
            raise CliError(f"band jig needs exactly 2 devices, stream has {len(devices)}")
        a_run, b_run = by_device[devices[0]], by_device[devices[1]]
        if len(a_run) != len(b_run):
            raise CliError("band jig needs equal-length streams per device")
        state = None
        prev_t = None
        for sa, sb in zip(a_run, b_run):
            pair = (
                Pose(sa.position, sa.orientation),
                Pose(sb.position, sb.orientation),
            )
            if state is None:
                state = initial_state(config, pair)
            dt = min(MAX_STEP_DT, sa.t - prev_t) if prev_t is not None and sa.t > prev_t else 1e-3
            state, (fa, fb) = jig_step(config, state, pair, dt)
            prev_t = sa.t
            out.append(formats.StreamSample(sa.t, sa.device, fa.position, fa.orientation))
            out.append(formats.StreamSample(sb.t, sb.device, fb.position, fb.orientation))
    else:
        for device in sorted(by_device):
            state = None
            prev_t = None
            for s in by_device[device]:
                pose = Pose(s.position, s.orientation)
                if state is None:
                    state = initial_state(config, pose)
                dt = min(MAX_STEP_DT, s.t - prev_t) if prev_t is not None and s.t > prev_t else 1e-3
                state, filtered = jig_step(config, state, pose, dt)
                prev_t = s.t
                out.append(formats.StreamSample(s.t, device, filtered.position, filtered.orientation))
    _write(args.output, formats.write_stream_csv(out))
    return 0


def cmd_export_bvh(args) -> int:
    arm = load_rig(args.rig)
    if args.timeline:
        timeline = formats.timeline_from_json(json.loads(_read(args.timeline)))
    else:
        timeline = Timeline()
        for spec in args.take or []:
            if "@" in spec:
                path, offset_text = spec.rsplit("@", 1)
                offset = float(offset_text)
            else:
                path, offset = spec, 0.0
            take = formats.take_from_json(json.loads(_read(path)))
            timeline = layer_takes(timeline, take, offset)
    doc = formats.export_bvh(arm, timeline, args.fps)
    _write(args.output, formats.bvh_to_text(doc))
    return 0


def cmd_serve(args) -> int:
    from movesketch.server import serve

    arm = load_rig(args.rig)
    engine = EngineSession(
        arm,
        EngineConfig(
            tick_rate=args.tick_rate,
            snapshot_rate=args.snapshot_rate,
            max_devices=args.max_devices,
        ),
    )
    if args.map:
        engine.set_calibration(_load_map(args.map))
    serve(engine, host=args.host, port=args.port, udp_port=args.udp_port, static_dir=args.static)
    return 0


def cmd_presets(args) -> int:
    if args.dump:
        out_dir = Path(args.dump)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in presets.ARMATURE_PRESETS:
            arm = presets.load_armature_preset(name)
            _write(str(out_dir / f"{name}.json"), formats.to_text(formats.armature_to_json(arm)))
        jig_doc = {
            "v": formats.SCHEMA_VERSION,
            "presets": {k: formats.jig_to_json(v) for k, v in presets.JIG_PRESETS.items()},
        }
        _write(str(out_dir / "jigs.json"), formats.to_text(jig_doc))
        return 0
    print("armature presets:")
    for name in presets.ARMATURE_PRESETS:
        arm = presets.load_armature_preset(name)
        print(f"  {name}: {len(arm.bones)} bones, {len(arm.constraints)} constraints")
    print("jig presets:")
    for name in presets.jig_preset_names():
        print(f"  {name}")
    return 0


# -- argument parsing ----------------------------------------------------------


def _env(name: str, default, cast):
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        return default


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="movesketch",
        description="Movement sketching engine: calibrate, record, edit, replay, simulate, export, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="four-point calibration from a probe CSV (labels x0..x3)")
    p.add_argument("--probe", required=True, help="CSV of label,x,y,z rows")
    p.add_argument("--t", type=float, default=cal.DEFAULT_CUBE_SPACING, help="cube spacing in meters")
    p.add_argument("--form", choices=("projection", "similarity"), default="projection")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("fit-lsq", help="least-squares similarity fit from correspondence CSV (src<i>/dst<i>)")
    p.add_argument("--pairs", required=True, help="CSV of label,x,y,z rows")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_fit_lsq)

    p = sub.add_parser("record", help="drive a rig from a stream CSV and record a take or trajectory")
    p.add_argument("--stream", required=True, help="input stream CSV")
    p.add_argument("--rig", required=True, help="preset name or armature JSON path")
    p.add_argument("--bind", action="append", metavar="DEV=BONE[:MODE]", help="repeatable device binding")
    p.add_argument("--jig", action="append", metavar="[DEV[+DEV]=]NAME", help="jig preset (repeatable)")
    p.add_argument("--kind", choices=("take", "trajectory"), default="take")
    p.add_argument("--device", help="device to sketch from (trajectory kind)")
    p.add_argument("--map", help="calibration map JSON applied to sample positions")
    p.add_argument("--rate", type=float, default=60.0, help="tick rate in Hz")
    p.add_argument("--max-devices", type=int, default=2)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("edit", help="translate/rotate/zoom a trajectory file")
    p.add_argument("--traj", required=True)
    p.add_argument("--op", choices=("translate", "rotate", "zoom"), required=True)
    p.add_argument("--delta", help="x,y,z for translate")
    p.add_argument("--axis", choices=("x", "y", "z"), help="axis for rotate")
    p.add_argument("--angle-deg", type=float, help="angle for rotate")
    p.add_argument("--factor", type=float, help="factor for zoom")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("replay", help="evaluate trajectories on a virtual clock to CSV t,id,x,y,z")
    p.add_argument("--traj", action="append", required=True, help="trajectory JSON (repeatable)")
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=60.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("simulate-jig", help="filter a stream CSV through a jig preset")
    p.add_argument("--jig", required=True, help="jig preset name, e.g. weight:default")
    p.add_argument("--input", required=True, help="input stream CSV")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate_jig)

    p = sub.add_parser("export-bvh", help="sample a timeline into a BVH file")
    p.add_argument("--rig", required=True)
    p.add_argument("--timeline", help="timeline JSON")
    p.add_argument("--take", action="append", metavar="PATH[@OFFSET]", help="layer takes instead of --timeline")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_export_bvh)

    p = sub.add_parser("serve", help="run the live engine with the WebSocket/UDP service")
    p.add_argument("--rig", default="humanoid")
    p.add_argument("--host", default=os.environ.get("MOVESKETCH_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=_env("MOVESKETCH_PORT", 8765, int))
    p.add_argument("--udp-port", type=int, default=_env("MOVESKETCH_UDP_PORT", None, int))
    p.add_argument("--tick-rate", type=float, default=_env("MOVESKETCH_TICK_RATE", 60.0, float))
    p.add_argument("--snapshot-rate", type=float, default=_env("MOVESKETCH_SNAPSHOT_RATE", 30.0, float))
    p.add_argument("--max-devices", type=int, default=2)
    p.add_argument("--map", help="calibration map JSON")
    p.add_argument("--static", help="directory of viewport assets to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("presets", help="list shipped presets or dump them to a directory")
    p.add_argument("--dump", metavar="DIR")
    p.set_defaults(func=cmd_presets)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
