// Mouse-driven simulated 6-DOF controller.
//
// While driving, the pointer's screen position maps onto a camera-facing
// plane whose depth the wheel adjusts; holding Shift rotates instead of
// translating. Samples go out as wire `sample` messages at most 60 times a
// second with a strictly monotone per-device clock - indistinguishable on
// the wire from hardware ingestion.

import type { OrbitCamera, Vec3 } from "./camera.js";
import type { SampleMsg } from "./protocol.js";

export type Quat = [number, number, number, number]; // (w, x, y, z)

const MAX_RATE_HZ = 60;
const MIN_INTERVAL = 1 / MAX_RATE_HZ;

function quatMul(a: Quat, b: Quat): Quat {
  const [w1, x1, y1, z1] = a;
  const [w2, x2, y2, z2] = b;
  return [
    w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
    w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
    w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
    w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
  ];
}

function axisAngle(axis: Vec3, angle: number): Quat {
  const h = angle / 2;
  const s = Math.sin(h);
  const n = Math.hypot(...axis) || 1;
  return [Math.cos(h), (axis[0] / n) * s, (axis[1] / n) * s, (axis[2] / n) * s];
}

export class SimController {
  readonly device: string;
  depth = 2.2; // m in front of the eye
  pose: { pos: Vec3; quat: Quat } = { pos: [0, 0.9, 0], quat: [1, 0, 0, 0] };
  private lastSentT = -Infinity;
  private clock: () => number;

  constructor(device: string, clock: () => number = () => performance.now() / 1000) {
    this.device = device;
    this.clock = clock;
  }

  /** Move on the drag plane; returns a sample message if one is due. */
  pointerMove(
    camera: OrbitCamera,
    sx: number,
    sy: number,
    width: number,
    height: number,
    rotating: boolean,
    dx = 0,
    dy = 0,
  ): SampleMsg | null {
    if (rotating) {
      const spin = quatMul(
        axisAngle([0, 1, 0], dx * 0.01),
        axisAngle([1, 0, 0], dy * 0.01),
      );
      this.pose = { pos: this.pose.pos, quat: quatMul(spin, this.pose.quat) };
    } else {
      this.pose = {
        pos: camera.unproject(sx, sy, this.depth, width, height),
        quat: this.pose.quat,
      };
    }
    return this.maybeSample();
  }

  /** Wheel input pushes the drag plane away or pulls it closer. */
  wheel(deltaY: number): SampleMsg | null {
    this.depth = Math.min(8, Math.max(0.3, this.depth * (deltaY > 0 ? 1.06 : 1 / 1.06)));
    return this.maybeSample();
  }

  /** Rate-limited, strictly monotone sample emission. */
  maybeSample(): SampleMsg | null {
    const now = this.clock();
    if (now - this.lastSentT < MIN_INTERVAL) return null;
    this.lastSentT = now;
    const q = this.pose.quat;
    const n = Math.hypot(...q) || 1;
    return {
      type: "sample",
      t: now,
      device: this.device,
      pos: [...this.pose.pos] as Vec3,
      quat: [q[0] / n, q[1] / n, q[2] / n, q[3] / n],
    };
  }
}
