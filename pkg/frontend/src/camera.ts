// Orbit camera and the 3D -> 2D projection used by the canvas renderer.
// Y is up; the camera orbits a target point at a fixed distance.

export type Vec3 = [number, number, number];

export interface Projected {
  x: number;
  y: number;
  depth: number; // camera-space distance along the view axis, > 0 if visible
  scale: number; // pixels per meter at this depth
}

export class OrbitCamera {
  yaw = 0.6; // radians around +Y
  pitch = 0.35; // radians above the horizon
  distance = 2.6; // m from the target
  target: Vec3 = [0, 0.8, 0];
  fov = Math.PI / 4;

  rotate(dyaw: number, dpitch: number): void {
    this.yaw += dyaw;
    const limit = Math.PI / 2 - 0.05;
    this.pitch = Math.min(limit, Math.max(-limit, this.pitch + dpitch));
  }

  zoom(factor: number): void {
    this.distance = Math.min(20, Math.max(0.3, this.distance * factor));
  }

  pan(dx: number, dy: number): void {
    // shift the target in the camera's screen plane
    const [rx, , rz] = this.rightAxis();
    this.target = [
      this.target[0] + rx * dx,
      this.target[1] + dy,
      this.target[2] + rz * dx,
    ];
  }

  position(): Vec3 {
    const cp = Math.cos(this.pitch);
    return [
      this.target[0] + this.distance * cp * Math.sin(this.yaw),
      this.target[1] + this.distance * Math.sin(this.pitch),
      this.target[2] + this.distance * cp * Math.cos(this.yaw),
    ];
  }

  private rightAxis(): Vec3 {
    return [Math.cos(this.yaw), 0, -Math.sin(this.yaw)];
  }

  /** Perspective-project a world point onto a width x height canvas. */
  project(p: Vec3, width: number, height: number): Projected {
    const eye = this.position();
    const d: Vec3 = [p[0] - eye[0], p[1] - eye[1], p[2] - eye[2]];
    // camera basis: forward toward the target, right in the XZ plane, up
    const f: Vec3 = [
      this.target[0] - eye[0],
      this.target[1] - eye[1],
      this.target[2] - eye[2],
    ];
    const fl = Math.hypot(f[0], f[1], f[2]) || 1;
    const fw: Vec3 = [f[0] / fl, f[1] / fl, f[2] / fl];
    const r = this.rightAxis();
    const up: Vec3 = [
      r[1] * fw[2] - r[2] * fw[1],
      r[2] * fw[0] - r[0] * fw[2],
      r[0] * fw[1] - r[1] * fw[0],
    ];
    const cx = d[0] * r[0] + d[1] * r[1] + d[2] * r[2];
    const cy = d[0] * up[0] + d[1] * up[1] + d[2] * up[2];
    const cz = d[0] * fw[0] + d[1] * fw[1] + d[2] * fw[2];
    const depth = cz;
    const focal = height / (2 * Math.tan(this.fov / 2));
    const safe = Math.max(depth, 0.05);
    return {
      x: width / 2 + (cx / safe) * focal,
      y: height / 2 - (cy / safe) * focal,
      depth,
      scale: focal / safe,
    };
  }

  /**
   * Inverse of project at a given camera depth: where is the pointer in
   * world space if it sits on the plane `depth` meters in front of the eye?
   * Used by the simulated controller's drag plane.
   */
  unproject(sx: number, sy: number, depth: number, width: number, height: number): Vec3 {
    const eye = this.position();
    const f: Vec3 = [
      this.target[0] - eye[0],
      this.target[1] - eye[1],
      this.target[2] - eye[2],
    ];
    const fl = Math.hypot(f[0], f[1], f[2]) || 1;
    const fw: Vec3 = [f[0] / fl, f[1] / fl, f[2] / fl];
    const r = this.rightAxis();
    const up: Vec3 = [
      r[1] * fw[2] - r[2] * fw[1],
      r[2] * fw[0] - r[0] * fw[2],
      r[0] * fw[1] - r[1] * fw[0],
    ];
    const focal = height / (2 * Math.tan(this.fov / 2));
    const cx = ((sx - width / 2) * depth) / focal;
    const cy = ((height / 2 - sy) * depth) / focal;
    return [
      eye[0] + r[0] * cx + up[0] * cy + fw[0] * depth,
      eye[1] + r[1] * cx + up[1] * cy + fw[1] * depth,
      eye[2] + r[2] * cx + up[2] * cy + fw[2] * depth,
    ];
  }
}
