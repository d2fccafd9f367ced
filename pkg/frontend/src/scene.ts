// Pure render model: snapshot in, drawable primitives out.
//
// Keeping this a plain function of the snapshot is what makes the UI
// stateless with respect to engine truth: reload, resync, and the scene is
// identical. It is also what the protocol-conformance tests check - the
// waypoints drawn opaque are exactly the snapshot's visibility window.

import type { Snapshot } from "./protocol.js";
import type { Vec3 } from "./camera.js";

export const OPAQUE = 1.0;
export const TRANSLUCENT = 0.18;

export interface SceneLine {
  a: Vec3;
  b: Vec3;
  color: string;
  alpha: number;
  width: number;
}

export interface ScenePoint {
  p: Vec3;
  color: string;
  alpha: number;
  size: number; // px radius at the reference depth
  key?: string; // identity for tests: "traj-1:wp:4", "cursor:traj-1", ...
}

export interface SceneModel {
  lines: SceneLine[];
  points: ScenePoint[];
}

const BONE_COLOR = "#e8e6e3";
const CONTROL_COLOR = "#ffb454";
const POLE_COLOR = "#9a7ecc";
const WAYPOINT_COLOR = "#59c2ff";
const CURSOR_COLOR = "#ff6666";
const JIG_COLOR = "#7fd962";

function boneColor(name: string): string {
  if (name.startsWith("ctrl_")) return CONTROL_COLOR;
  if (name.startsWith("pole_")) return POLE_COLOR;
  return BONE_COLOR;
}

export function buildScene(snapshot: Snapshot): SceneModel {
  const lines: SceneLine[] = [];
  const points: ScenePoint[] = [];

  for (const bone of snapshot.bones) {
    lines.push({
      a: bone.head,
      b: bone.tail,
      color: boneColor(bone.name),
      alpha: OPAQUE,
      width: bone.name.startsWith("ctrl_") || bone.name.startsWith("pole_") ? 1.5 : 3,
    });
    points.push({ p: bone.head, color: boneColor(bone.name), alpha: OPAQUE, size: 3, key: `bone:${bone.name}` });
  }

  // trajectories: waypoints in a replay cursor's window draw opaque, the
  // rest translucent; idle trajectories draw translucent throughout
  const windows = new Map<string, Set<number>>();
  for (const cur of snapshot.cursors) {
    windows.set(cur.id, new Set(cur.visible));
  }
  for (const traj of snapshot.trajectories) {
    const visible = windows.get(traj.id);
    for (let i = 0; i + 1 < traj.waypoints.length; i++) {
      lines.push({
        a: traj.waypoints[i],
        b: traj.waypoints[i + 1],
        color: WAYPOINT_COLOR,
        alpha: TRANSLUCENT,
        width: 1,
      });
    }
    traj.waypoints.forEach((p, i) => {
      const opaque = visible !== undefined && visible.has(i);
      points.push({
        p,
        color: WAYPOINT_COLOR,
        alpha: opaque ? OPAQUE : TRANSLUCENT,
        size: opaque ? 4 : 2.5,
        key: `${traj.id}:wp:${i}`,
      });
    });
  }

  for (const cur of snapshot.cursors) {
    points.push({
      p: cur.pos,
      color: CURSOR_COLOR,
      alpha: cur.finished ? TRANSLUCENT : OPAQUE,
      size: 6,
      key: `cursor:${cur.id}`,
    });
  }

  for (const jig of snapshot.jigs) {
    const deviceOf = new Map(snapshot.bindings.map((b) => [b.device, b.bone]));
    const bones = new Map(snapshot.bones.map((b) => [b.name, b]));
    const anchors: Vec3[] = jig.devices.map((device) => {
      const bone = bones.get(deviceOf.get(device) ?? "");
      return bone ? bone.head : [0, 0, 0];
    });
    const state = jig.positions ?? [];
    if (jig.kind === "stick" && jig.path) {
      for (let i = 0; i + 1 < jig.path.length; i++) {
        lines.push({ a: jig.path[i], b: jig.path[i + 1], color: JIG_COLOR, alpha: OPAQUE, width: 2 });
      }
    }
    if (jig.kind === "band" && state.length === 2) {
      lines.push({ a: state[0], b: state[1], color: JIG_COLOR, alpha: OPAQUE, width: 2 });
    }
    state.forEach((p, i) => {
      points.push({ p, color: JIG_COLOR, alpha: OPAQUE, size: 5, key: `jig:${jig.kind}:${i}` });
      if (jig.kind === "pendulum" || jig.kind === "weight") {
        const anchor = anchors[i] ?? anchors[0];
        if (anchor) {
          lines.push({ a: anchor, b: p, color: JIG_COLOR, alpha: 0.6, width: 1 });
        }
      }
    });
  }

  return { lines, points };
}

/** Waypoint indices of one trajectory drawn opaque - the tested surface. */
export function opaqueWaypoints(scene: SceneModel, trajId: string): number[] {
  const out: number[] = [];
  for (const pt of scene.points) {
    if (pt.key && pt.key.startsWith(`${trajId}:wp:`) && pt.alpha === OPAQUE) {
      out.push(Number(pt.key.split(":wp:")[1]));
    }
  }
  return out.sort((a, b) => a - b);
}
