"""The live session engine: one authoritative fixed-timestep loop.

Everything mutable flows through this single object. Network readers and UIs
never touch state directly: samples and commands are queued, the tick drains
them in timestamp order, and snapshots are plain dicts built between ticks,
so no snapshot can observe a half-applied command.

Per-tick pipeline, in order: drain input samples, apply the calibration map,
apply jig filters, update constraint sources from bindings, solve the
constraint stack, advance recordings and replays.

With scripted input and a fixed dt the whole session is deterministic:
recorded takes, trajectories, and exports come out byte-identical run to
run. Wall-clock pacing lives in the server layer, not here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from movesketch import calibration as cal
from movesketch import jigs as jigmod
from movesketch import presets
from movesketch import trajectory as trajmod
from movesketch.formats import StreamSample, jig_from_json
from movesketch.geom import Pose, Quat, SimilarityTransform, Vec3
from movesketch.rig import (
    Armature,
    DeviceBindings,
    PoseState,
    apply_constraints,
    bone_tip,
    fk_world,
    resolve_externals,
)
from movesketch.takes import NoBindings, Take, TakeRecorder, Timeline, layer_takes
from movesketch.trajectory import ReplayCursor, Trajectory, TrajectoryRecorder, layered_schedule

IDLE = "idle"
RECORDING_TRAJECTORY = "recording_trajectory"
RECORDING_TAKE = "recording_take"
REPLAYING = "replaying"

PROTOCOL_VERSION = 1


class BadMode(RuntimeError):
    pass


class UnknownId(KeyError):
    pass


class MalformedCommand(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    tick_rate: float = 60.0  # Hz
    snapshot_rate: float = 30.0  # Hz, used by the broadcast layer
    max_devices: int = 2
    sample_period: float | None = None  # recording rate; defaults to the tick period

    def __post_init__(self) -> None:
        if self.tick_rate <= 0 or self.snapshot_rate <= 0:
            raise ValueError("rates must be > 0")

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate

    @property
    def record_period(self) -> float:
        return self.sample_period if self.sample_period is not None else self.dt

    @property
    def snapshot_every(self) -> int:
        return max(1, int(round(self.tick_rate / self.snapshot_rate)))


@dataclass
class _JigInstance:
    devices: tuple[str, ...]
    config: jigmod.JigConfig
    state: jigmod.JigState | None = None


class EngineSession:
    """Authoritative engine state plus the tick that advances it."""

    def __init__(self, armature: Armature | None = None, config: EngineConfig = EngineConfig()):
        self.config = config
        self.clock = 0.0
        self.ticks = 0
        self.mode = IDLE
        self.armature: Armature | None = None
        self.pose: PoseState | None = None
        self.bindings: DeviceBindings | None = None
        self.cal_map: cal.CoordinateMap | SimilarityTransform | None = None
        self.jigs: list[_JigInstance] = []
        self.trajectories: dict[str, Trajectory] = {}
        self.takes: dict[str, Take] = {}
        self.timeline = Timeline()
        self.cursors: list[ReplayCursor] = []
        self._pending: list[tuple[float, int, StreamSample]] = []
        self._arrivals = 0
        self._latest_raw: dict[str, Pose] = {}
        self._filtered: dict[str, Pose] = {}
        self._last_sample_t: dict[str, float] = {}
        self._traj_recorder: TrajectoryRecorder | None = None
        self._traj_device: str | None = None
        self._take_recorder: TakeRecorder | None = None
        self._next_id = {"traj": 0, "take": 0}
        if armature is not None:
            self.load_armature(armature)

    # -- setup ------------------------------------------------------------

    def load_armature(self, armature: Armature) -> None:
        self.armature = armature
        self.pose = PoseState(armature)
        self.bindings = DeviceBindings(armature, self.config.max_devices)

    def _fresh_id(self, kind: str) -> str:
        self._next_id[kind] += 1
        return f"{kind}-{self._next_id[kind]}"

    # -- input ------------------------------------------------------------

    def ingest_sample(self, sample: StreamSample) -> None:
        """Queue one device sample; per-device times must not go backwards."""
        last = self._last_sample_t.get(sample.device)
        if last is not None and sample.t < last:
            raise ValueError(f"sample time went backwards for {sample.device!r}")
        self._last_sample_t[sample.device] = sample.t
        self._pending.append((sample.t, self._arrivals, sample))
        self._arrivals += 1

    def _drain_due(self, until: float) -> None:
        if not self._pending:
            return
        self._pending.sort(key=lambda item: (item[0], item[1]))
        due = 0
        for t, _, _ in self._pending:
            # 1e-9 slack: accumulated tick clocks sit a few ulps under the
            # sample grid they were generated on
            if t > until + 1e-9:
                break
            due += 1
        for _, _, sample in self._pending[:due]:
            self._latest_raw[sample.device] = Pose(sample.position, sample.orientation)
        del self._pending[:due]

    # -- commands (engine methods; the wire layer wraps these) -------------

    def _require_armature(self) -> Armature:
        if self.armature is None:
            raise BadMode("no armature loaded")
        return self.armature

    def _require_mode(self, *modes: str) -> None:
        if self.mode not in modes:
            raise BadMode(f"not allowed in mode {self.mode!r}")

    def bind(self, device: str, bone: str, mode: str = "location_only"):
        self._require_mode(IDLE)
        self._require_armature()
        return self.bindings.bind(device, bone, mode)

    def unbind(self, device: str) -> None:
        self._require_mode(IDLE)
        if self.bindings is None or device not in self.bindings:
            raise UnknownId(device)
        self.bindings.unbind(device)

    def set_jig(self, devices: list[str], config: jigmod.JigConfig | None) -> None:
        self._require_mode(IDLE)
        devices = list(devices)
        if not devices:
            raise MalformedCommand("set_jig needs at least one device")
        self.jigs = [j for j in self.jigs if not set(j.devices) & set(devices)]
        if config is None:
            return
        need = 2 if isinstance(config, jigmod.BandJig) else 1
        if len(devices) != need:
            raise MalformedCommand(
                f"{type(config).__name__} covers {need} device(s), got {len(devices)}"
            )
        self.jigs.append(_JigInstance(tuple(devices), config))

    def calibrate(self, readings: list[Vec3], spacing: float = cal.DEFAULT_CUBE_SPACING) -> None:
        self._require_mode(IDLE)
        probe = cal.CalibrationProbe(tuple(readings), spacing)
        self.cal_map = cal.calibrate_four_point(probe)

    def set_calibration(self, m: cal.CoordinateMap | SimilarityTransform | None) -> None:
        self.cal_map = m

    def record_start(self, kind: str, device: str | None = None) -> None:
        self._require_mode(IDLE)
        arm = self._require_armature()
        if kind == "trajectory":
            if device is None:
                raise MalformedCommand("trajectory recording needs a device")
            self._traj_recorder = TrajectoryRecorder(
                self._fresh_id("traj"), self.clock, self.config.record_period
            )
            self._traj_device = device
            if device in self._filtered:
                self._traj_recorder.add_sample(self._filtered[device].position, self.clock)
            self.mode = RECORDING_TRAJECTORY
        elif kind == "take":
            if self.bindings is None or len(self.bindings) == 0:
                raise NoBindings("bind a device before recording a take")
            bones = arm.affected_bones(self.bindings.bound_bones())
            self._take_recorder = TakeRecorder(
                self._fresh_id("take"), bones, self.clock, self.config.record_period
            )
            self._take_recorder.add_tick(self.clock, self.pose)  # key at the start instant
            self.mode = RECORDING_TAKE
        else:
            raise MalformedCommand(f"unknown record kind {kind!r}")

    def record_stop(self) -> str:
        if self.mode == RECORDING_TRAJECTORY:
            rec, self._traj_recorder = self._traj_recorder, None
            self._traj_device = None
            self.mode = IDLE
            traj = rec.finish(self.clock)
            self.trajectories[traj.id] = traj
            return traj.id
        if self.mode == RECORDING_TAKE:
            rec, self._take_recorder = self._take_recorder, None
            self.mode = IDLE
            take = rec.finish()
            self.takes[take.id] = take
            return take.id
        raise BadMode("not recording")

    def replay(self, ids: list[str], speed: float = 1.0) -> list[str]:
        self._require_mode(IDLE, REPLAYING)
        if not (math.isfinite(speed) and speed > 0.0):
            raise MalformedCommand(f"replay speed must be > 0, got {speed}")
        for traj_id in ids:
            if traj_id not in self.trajectories:
                raise UnknownId(traj_id)
        for traj_id in ids:
            self.cursors.append(ReplayCursor(traj_id, self.clock, speed))
        self.mode = REPLAYING
        return list(ids)

    def stop_replay(self) -> None:
        self._require_mode(REPLAYING)
        self.cursors = []
        self.mode = IDLE

    def edit(self, traj_id: str, op: str, **params) -> str:
        self._require_mode(IDLE)
        if traj_id not in self.trajectories:
            raise UnknownId(traj_id)
        traj = self.trajectories[traj_id]
        try:
            if op == "translate":
                out = trajmod.translate(traj, Vec3.from_seq(params["delta"]))
            elif op == "rotate":
                out = trajmod.rotate(traj, params["axis"], math.radians(float(params["angle_deg"])))
            elif op == "zoom":
                out = trajmod.zoom(traj, float(params["factor"]))
            else:
                raise MalformedCommand(f"unknown edit op {op!r}")
        except (KeyError, TypeError) as exc:
            raise MalformedCommand(f"bad edit params: {exc}") from None
        except (ValueError) as exc:
            raise MalformedCommand(str(exc)) from None
        self.trajectories[traj_id] = out
        return traj_id

    def layer(self, take_id: str, offset: float) -> None:
        if take_id not in self.takes:
            raise UnknownId(take_id)
        if offset < 0.0:
            raise MalformedCommand("layer offset must be >= 0")
        self.timeline = layer_takes(self.timeline, self.takes[take_id], offset)

    # -- the tick ----------------------------------------------------------

    def tick(self, dt: float | None = None) -> None:
        dt = self.config.dt if dt is None else dt
        if dt <= 0.0:
            raise ValueError("dt must be > 0")
        next_clock = self.clock + dt
        self._drain_due(next_clock)

        calibrated = dict(self._filtered)  # hold last outputs for quiet devices
        for device, raw in self._latest_raw.items():
            calibrated[device] = Pose(self._map_position(raw.position), raw.orientation)

        filtered = calibrated
        jig_dt = min(dt, jigmod.MAX_STEP_DT)
        for jig in self.jigs:
            if not all(d in calibrated for d in jig.devices):
                continue
            if len(jig.devices) == 1:
                pose_in = calibrated[jig.devices[0]]
                if jig.state is None:
                    jig.state = jigmod.initial_state(jig.config, pose_in)
                jig.state, out = jigmod.jig_step(jig.config, jig.state, pose_in, jig_dt)
                filtered[jig.devices[0]] = out
            else:
                pair = (calibrated[jig.devices[0]], calibrated[jig.devices[1]])
                if jig.state is None:
                    jig.state = jigmod.initial_state(jig.config, pair)
                jig.state, (out_a, out_b) = jigmod.jig_step(jig.config, jig.state, pair, jig_dt)
                filtered[jig.devices[0]] = out_a
                filtered[jig.devices[1]] = out_b
        self._filtered = filtered

        # until the first sample ever arrives there is nothing to solve, and
        # an untouched session stays bit-identical tick to tick
        if self.armature is not None and (self._latest_raw or filtered):
            self._solve(filtered)

        if self.mode == RECORDING_TRAJECTORY and self._traj_device in filtered:
            self._traj_recorder.add_sample(filtered[self._traj_device].position, next_clock)
        if self.mode == RECORDING_TAKE:
            self._take_recorder.add_tick(next_clock, self.pose)
        if self.mode == REPLAYING and self.cursors:
            done = all(
                (next_clock - c.start_time) * c.speed >= self.trajectories[c.trajectory_id].duration
                for c in self.cursors
            )
            if done:
                self.cursors = []
                self.mode = IDLE

        self.clock = next_clock
        self.ticks += 1

    def _map_position(self, p: Vec3) -> Vec3:
        if self.cal_map is None:
            return p
        if isinstance(self.cal_map, SimilarityTransform):
            return self.cal_map.apply(p)
        return cal.map_point(self.cal_map, p)

    def _solve(self, filtered: dict[str, Pose]) -> None:
        arm = self.armature
        worlds = fk_world(arm, self.pose)
        driven: dict[str, Pose] = {}
        for binding in self.bindings.bindings():
            if binding.device not in filtered:
                continue
            idx = arm.index(binding.bone)
            source = self.bindings.drive(binding.device, filtered[binding.device], worlds[idx])
            driven[binding.bone] = source
            parent = arm.bones[idx].parent
            local = self.pose.locals[idx]
            if binding.mode == "full_pose":
                new_local = source if parent is None else worlds[parent].inverse().compose(source)
            else:
                pos = (
                    source.position
                    if parent is None
                    else worlds[parent].inverse().transform_point(source.position)
                )
                new_local = Pose(pos, local.orientation)
            self.pose.locals[idx] = new_local
        if driven:
            worlds = fk_world(arm, self.pose)
        externals = resolve_externals(arm, worlds, driven)
        apply_constraints(arm, self.pose, externals)

    # -- snapshots ----------------------------------------------------------

    def snapshot(self) -> dict:
        bones = []
        if self.armature is not None:
            worlds = fk_world(self.armature, self.pose)
            for bone, world in zip(self.armature.bones, worlds):
                bones.append(
                    {
                        "name": bone.name,
                        "head": world.position.to_list(),
                        "tail": bone_tip(world, bone.length).to_list(),
                        "q": world.orientation.to_list(),
                    }
                )
        cursor_rows = []
        schedule = dict(layered_schedule(self.cursors, self.trajectories, self.clock))
        for c in self.cursors:
            if c.start_time > self.clock:
                continue
            sample = schedule.get(c.trajectory_id)
            if sample is None:
                traj = self.trajectories[c.trajectory_id]
                cursor_rows.append(
                    {
                        "id": c.trajectory_id,
                        "pos": traj.waypoints[-1].position.to_list(),
                        "visible": [],
                        "finished": True,
                    }
                )
            else:
                cursor_rows.append(
                    {
                        "id": c.trajectory_id,
                        "pos": sample.position.to_list(),
                        "visible": list(sample.visible),
                        "finished": sample.finished,
                    }
                )
        jig_rows = []
        for jig in self.jigs:
            row = {
                "devices": list(jig.devices),
                "kind": type(jig.config).__name__.removesuffix("Jig").lower(),
            }
            if jig.state is not None:
                row["positions"] = [p.to_list() for p in jig.state.positions]
            if isinstance(jig.config, jigmod.StickJig):
                row["path"] = [p.to_list() for p in jig.config.path]
            jig_rows.append(row)
        return {
            "type": "snapshot",
            "v": PROTOCOL_VERSION,
            "clock": self.clock,
            "mode": self.mode,
            "bones": bones,
            "cursors": cursor_rows,
            "jigs": jig_rows,
            "bindings": [
                {"device": b.device, "bone": b.bone, "mode": b.mode}
                for b in (self.bindings.bindings() if self.bindings else [])
            ],
            "trajectories": [
                {"id": t.id, "waypoints": [w.position.to_list() for w in t.waypoints]}
                for t in self.trajectories.values()
            ],
            "takes": sorted(self.takes),
            "timeline": [
                {"take": e.take.id, "offset": e.offset} for e in self.timeline.entries
            ],
        }

    # -- wire command layer --------------------------------------------------

    def handle_command(self, msg: dict) -> dict:
        """Apply one wire command between ticks; returns the ack or error."""
        seq = msg.get("seq")
        try:
            if msg.get("type") != "command":
                raise MalformedCommand("not a command message")
            if seq is None:
                raise MalformedCommand("command missing seq")
            cmd = msg.get("cmd")
            extra = self._dispatch(cmd, msg)
            ack = {"type": "ack", "seq": seq, "cmd": cmd}
            ack.update(extra)
            return ack
        except Exception as exc:  # every command gets exactly one reply
            return {
                "type": "error",
                "seq": seq,
                "code": type(exc).__name__,
                "message": str(exc),
            }

    def _dispatch(self, cmd: str, msg: dict) -> dict:
        if cmd == "bind":
            self.bind(self._str(msg, "device"), self._str(msg, "bone"), msg.get("mode", "location_only"))
            return {"device": msg["device"], "bone": msg["bone"]}
        if cmd == "unbind":
            self.unbind(self._str(msg, "device"))
            return {}
        if cmd == "set_jig":
            devices = msg.get("devices") or ([msg["device"]] if "device" in msg else [])
            kind = msg.get("kind")
            if kind is None:
                self.set_jig(devices, None)
                return {}
            config = self._jig_config(kind, msg)
            self.set_jig(devices, config)
            return {}
        if cmd == "record_start":
            self.record_start(self._str(msg, "kind"), msg.get("device"))
            return {}
        if cmd == "record_stop":
            return {"id": self.record_stop()}
        if cmd == "replay":
            ids = msg.get("ids")
            if not isinstance(ids, list) or not ids:
                raise MalformedCommand("replay needs a non-empty ids list")
            started = self.replay([str(i) for i in ids], float(msg.get("speed", 1.0)))
            return {"started": started}
        if cmd == "stop_replay":
            self.stop_replay()
            return {}
        if cmd == "edit":
            op = self._str(msg, "op")
            params = {k: msg[k] for k in ("delta", "axis", "angle_deg", "factor") if k in msg}
            return {"id": self.edit(self._str(msg, "id"), op, **params)}
        if cmd == "layer":
            self.layer(self._str(msg, "take"), float(msg.get("offset", 0.0)))
            return {}
        if cmd == "calibrate":
            readings = msg.get("readings")
            if not isinstance(readings, list) or len(readings) != 4:
                raise MalformedCommand("calibrate needs exactly 4 readings")
            vecs = [Vec3.from_seq(r) for r in readings]
            self.calibrate(vecs, float(msg.get("t", cal.DEFAULT_CUBE_SPACING)))
            return {}
        raise MalformedCommand(f"unknown command {cmd!r}")

    @staticmethod
    def _str(msg: dict, key: str) -> str:
        value = msg.get(key)
        if not isinstance(value, str) or not value:
            raise MalformedCommand(f"missing or invalid {key!r}")
        return value

    def _jig_config(self, kind: str, msg: dict) -> jigmod.JigConfig:
        if "preset" in msg:
            try:
                return presets.load_jig_preset(str(msg["preset"]))
            except KeyError as exc:
                raise MalformedCommand(str(exc)) from None
        params = dict(msg.get("params", {}))
        params["kind"] = kind
        params["v"] = 1
        try:
            return jig_from_json(params)
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedCommand(f"bad jig params: {exc}") from None

    def ingest_sample_message(self, msg: dict) -> None:
        """Accept a wire `sample` message (or a bare StreamSample-shaped dict)."""
        try:
            sample = StreamSample(
                float(msg["t"]),
                str(msg["device"]),
                Vec3.from_seq(msg["pos"]),
                Quat.from_seq(msg["quat"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedCommand(f"bad sample: {exc}") from None
        self.ingest_sample(sample)


def run_stream(engine: EngineSession, samples: list[StreamSample], trailing: float = 0.0) -> None:
    """Feed a scripted stream and tick the virtual clock through it.

    Ticks from the engine's current clock until every sample has been
    consumed, plus an optional trailing run-out.
    """
    if samples:
        for s in samples:
            engine.ingest_sample(s)
        end = max(s.t for s in samples) + trailing
    else:
        end = engine.clock + trailing
    while engine.clock < end - 1e-9 or engine._pending:
        engine.tick()
