import { describe, expect, it } from "vitest";

import { OPAQUE, TRANSLUCENT, buildScene, opaqueWaypoints } from "../src/scene.js";
import type { Snapshot } from "../src/protocol.js";

function baseSnapshot(): Snapshot {
  return {
    type: "snapshot",
    v: 1,
    clock: 1.0,
    mode: "idle",
    bones: [
      { name: "pelvis", head: [0, 0.9, 0], tail: [0, 1.05, 0], q: [1, 0, 0, 0] },
      { name: "ctrl_ankle_l", head: [0.1, 0.1, 0], tail: [0.1, 0.15, 0], q: [1, 0, 0, 0] },
    ],
    cursors: [],
    jigs: [],
    bindings: [],
    trajectories: [],
    takes: [],
    timeline: [],
  };
}

function waypoints(n: number): [number, number, number][] {
  return Array.from({ length: n }, (_, i) => [i * 0.1, 0.5, 0] as [number, number, number]);
}

describe("buildScene", () => {
  it("draws bones as head-to-tail segments", () => {
    const scene = buildScene(baseSnapshot());
    const boneLines = scene.lines.filter((l) => l.alpha === OPAQUE);
    expect(boneLines.length).toBe(2);
    expect(boneLines[0].a).toEqual([0, 0.9, 0]);
    expect(boneLines[0].b).toEqual([0, 1.05, 0]);
  });

  it("marks exactly the visibility window opaque during replay", () => {
    const snap = baseSnapshot();
    snap.mode = "replaying";
    snap.trajectories = [{ id: "traj-1", waypoints: waypoints(12) }];
    snap.cursors = [{ id: "traj-1", pos: [0.25, 0.5, 0], visible: [3, 4, 5, 6, 7], finished: false }];
    const scene = buildScene(snap);
    expect(opaqueWaypoints(scene, "traj-1")).toEqual([3, 4, 5, 6, 7]);
    const others = scene.points.filter(
      (p) => p.key?.startsWith("traj-1:wp:") && p.alpha !== OPAQUE,
    );
    expect(others.length).toBe(12 - 5);
    for (const p of others) expect(p.alpha).toBe(TRANSLUCENT);
  });

  it("renders idle trajectories fully translucent", () => {
    const snap = baseSnapshot();
    snap.trajectories = [{ id: "traj-2", waypoints: waypoints(6) }];
    const scene = buildScene(snap);
    expect(opaqueWaypoints(scene, "traj-2")).toEqual([]);
  });

  it("draws the band jig as a line between the two filtered points", () => {
    const snap = baseSnapshot();
    snap.jigs = [
      { devices: ["sim1", "sim2"], kind: "band", positions: [[0, 1, 0], [0.4, 1, 0]] },
    ];
    const scene = buildScene(snap);
    const band = scene.lines.find(
      (l) => l.a[0] === 0 && l.b[0] === 0.4 && l.a[1] === 1 && l.b[1] === 1,
    );
    expect(band).toBeDefined();
  });

  it("draws the stick jig path", () => {
    const snap = baseSnapshot();
    snap.jigs = [
      { devices: ["sim1"], kind: "stick", positions: [[0, 1, 0]], path: [[-0.5, 1, 0], [0.5, 1, 0]] },
    ];
    const scene = buildScene(snap);
    expect(scene.lines.some((l) => l.a[0] === -0.5 && l.b[0] === 0.5)).toBe(true);
  });

  it("marks finished cursors translucent", () => {
    const snap = baseSnapshot();
    snap.trajectories = [{ id: "t", waypoints: waypoints(6) }];
    snap.cursors = [{ id: "t", pos: [0.5, 0.5, 0], visible: [], finished: true }];
    const scene = buildScene(snap);
    const cursor = scene.points.find((p) => p.key === "cursor:t");
    expect(cursor?.alpha).toBe(TRANSLUCENT);
  });

  it("is a pure function of the snapshot", () => {
    const snap = baseSnapshot();
    snap.trajectories = [{ id: "t", waypoints: waypoints(9) }];
    snap.cursors = [{ id: "t", pos: [0, 0.5, 0], visible: [1, 2, 3, 4, 5], finished: false }];
    expect(buildScene(snap)).toEqual(buildScene(snap));
  });
});
