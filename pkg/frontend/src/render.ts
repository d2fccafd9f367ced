// Canvas 2D painter for a SceneModel: project, depth-sort, stroke.

import type { OrbitCamera } from "./camera.js";
import type { SceneModel } from "./scene.js";

const GRID_COLOR = "#2a2f3a";
const GRID_EXTENT = 1.5;
const GRID_STEP = 0.25;

export function drawScene(
  ctx: CanvasRenderingContext2D,
  camera: OrbitCamera,
  scene: SceneModel,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);

  ctx.lineWidth = 1;
  ctx.strokeStyle = GRID_COLOR;
  ctx.globalAlpha = 1;
  for (let g = -GRID_EXTENT; g <= GRID_EXTENT + 1e-9; g += GRID_STEP) {
    strokeSegment(ctx, camera, [g, 0, -GRID_EXTENT], [g, 0, GRID_EXTENT], width, height);
    strokeSegment(ctx, camera, [-GRID_EXTENT, 0, g], [GRID_EXTENT, 0, g], width, height);
  }

  type Item = { depth: number; draw: () => void };
  const items: Item[] = [];

  for (const line of scene.lines) {
    const a = camera.project(line.a, width, height);
    const b = camera.project(line.b, width, height);
    if (a.depth <= 0 && b.depth <= 0) continue;
    items.push({
      depth: (a.depth + b.depth) / 2,
      draw: () => {
        ctx.globalAlpha = line.alpha;
        ctx.strokeStyle = line.color;
        ctx.lineWidth = line.width;
        ctx.beginPath();
        ctx.moveTo(a.x, a.y);
        ctx.lineTo(b.x, b.y);
        ctx.stroke();
      },
    });
  }
  for (const pt of scene.points) {
    const p = camera.project(pt.p, width, height);
    if (p.depth <= 0) continue;
    const radius = Math.max(1.5, pt.size * Math.min(1.6, p.scale / 400));
    items.push({
      depth: p.depth,
      draw: () => {
        ctx.globalAlpha = pt.alpha;
        ctx.fillStyle = pt.color;
        ctx.beginPath();
        ctx.arc(p.x, p.y, radius, 0, 2 * Math.PI);
        ctx.fill();
      },
    });
  }

  items.sort((a, b) => b.depth - a.depth); // far first
  for (const item of items) item.draw();
  ctx.globalAlpha = 1;
}

function strokeSegment(
  ctx: CanvasRenderingContext2D,
  camera: OrbitCamera,
  a: [number, number, number],
  b: [number, number, number],
  width: number,
  height: number,
): void {
  const pa = camera.project(a, width, height);
  const pb = camera.project(b, width, height);
  if (pa.depth <= 0 || pb.depth <= 0) return;
  ctx.beginPath();
  ctx.moveTo(pa.x, pa.y);
  ctx.lineTo(pb.x, pb.y);
  ctx.stroke();
}
