// First-person wireframe view on a 2D canvas. Enough to aim by: corridor
// walls and board as outlined quads, grid floor, marker disc, target
// spheres, the sampled arc, and the hold-time arrow. Objects listed as
// translucent by the kernel drop to a faint stroke.

import { V3, vAdd, yawRotate, DEG } from './math.js';
import { ArcSamples } from './arc.js';
import { SceneWire, StateWire } from './protocol.js';

export interface Camera {
  eye: V3;
  yawDeg: number;
  pitchDeg: number; // fixed slight down-tilt so the floor is visible
}

export function project(
  cam: Camera,
  w: V3,
  width: number,
  height: number
): [number, number] | null {
  const rel = yawRotate(-cam.yawDeg, [w[0] - cam.eye[0], w[1] - cam.eye[1], w[2] - cam.eye[2]]);
  // camera basis tilted down by pitchDeg about x
  const p = cam.pitchDeg * DEG;
  const y = rel[1] * Math.cos(p) + rel[2] * Math.sin(p);
  const z = -rel[1] * Math.sin(p) + rel[2] * Math.cos(p);
  if (z < 0.05) return null;
  const f = height / (2 * Math.tan((60 / 2) * DEG)); // 60 degree vertical fov
  return [width / 2 + (rel[0] * f) / z, height / 2 - (y * f) / z];
}

/** Screen point back to a world-space ray direction (for the gaze pointer). */
export function unproject(cam: Camera, sx: number, sy: number, width: number, height: number): V3 {
  const f = height / (2 * Math.tan((60 / 2) * DEG));
  const x = (sx - width / 2) / f;
  const yc = (height / 2 - sy) / f;
  const p = cam.pitchDeg * DEG;
  const y = yc * Math.cos(p) - Math.sin(p);
  const z = yc * Math.sin(p) + Math.cos(p);
  const d = yawRotate(cam.yawDeg, [x, y, z]);
  const n = Math.hypot(d[0], d[1], d[2]);
  return [d[0] / n, d[1] / n, d[2] / n];
}

type Ctx = CanvasRenderingContext2D;

function polyline(ctx: Ctx, cam: Camera, pts: V3[], w: number, h: number): void {
  ctx.beginPath();
  let pen = false;
  for (const pt of pts) {
    const s = project(cam, pt, w, h);
    if (!s) {
      pen = false;
      continue;
    }
    if (pen) ctx.lineTo(s[0], s[1]);
    else ctx.moveTo(s[0], s[1]);
    pen = true;
  }
  ctx.stroke();
}

function quadCorners(center: V3, yawDeg: number, width: number, height: number): V3[] {
  const c = (x: number, y: number): V3 => vAdd(center, yawRotate(yawDeg, [x, y, 0]));
  return [
    c(-width / 2, -height / 2),
    c(width / 2, -height / 2),
    c(width / 2, height / 2),
    c(-width / 2, height / 2),
  ];
}

function groundCircle(center: V3, r: number, segments = 24): V3[] {
  const pts: V3[] = [];
  for (let i = 0; i <= segments; i++) {
    const a = (2 * Math.PI * i) / segments;
    pts.push([center[0] + r * Math.cos(a), center[1], center[2] + r * Math.sin(a)]);
  }
  return pts;
}

export function drawScene(
  ctx: Ctx,
  cam: Camera,
  scene: SceneWire,
  state: StateWire,
  arc: ArcSamples | null,
  arcValid: boolean,
  ink: V3[][]
): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  ctx.fillStyle = '#10141a';
  ctx.fillRect(0, 0, w, h);
  ctx.lineWidth = 1;

  // floor grid
  ctx.strokeStyle = 'rgba(110, 130, 150, 0.35)';
  for (let x = -4; x <= 4; x += 2) polyline(ctx, cam, [[x, 0, -10], [x, 0, 40]], w, h);
  for (let z = -10; z <= 40; z += 2) polyline(ctx, cam, [[-4, 0, z], [4, 0, z]], w, h);

  const faded = new Set(state.translucent);
  for (const obj of scene.objects) {
    if (obj.shape.type === 'ground') continue;
    const alpha = faded.has(obj.id) ? 0.18 : Math.min(1, obj.alpha);
    ctx.strokeStyle = `rgba(168, 190, 210, ${alpha})`;
    if (obj.shape.type === 'quad') {
      const corners = quadCorners(obj.pose.p, obj.pose.yaw_deg, obj.shape.width, obj.shape.height);
      polyline(ctx, cam, [...corners, corners[0]], w, h);
      if (obj.permeable) {
        ctx.fillStyle = `rgba(120, 150, 180, ${alpha * 0.25})`;
        const s = corners.map((c) => project(cam, c, w, h));
        if (s.every(Boolean)) {
          ctx.beginPath();
          ctx.moveTo(s[0]![0], s[0]![1]);
          for (const p of s.slice(1)) ctx.lineTo(p![0], p![1]);
          ctx.closePath();
          ctx.fill();
        }
      }
    } else if (obj.shape.type === 'box') {
      const [hx, hy, hz] = obj.shape.half_extents;
      const corner = (sx: number, sy: number, sz: number): V3 =>
        vAdd(obj.pose.p, yawRotate(obj.pose.yaw_deg, [sx * hx, sy * hy, sz * hz]));
      const bottom = [corner(-1, -1, -1), corner(1, -1, -1), corner(1, -1, 1), corner(-1, -1, 1)];
      const top = [corner(-1, 1, -1), corner(1, 1, -1), corner(1, 1, 1), corner(-1, 1, 1)];
      polyline(ctx, cam, [...bottom, bottom[0]], w, h);
      polyline(ctx, cam, [...top, top[0]], w, h);
      for (let i = 0; i < 4; i++) polyline(ctx, cam, [bottom[i], top[i]], w, h);
    }
  }

  // landing marker and the two stroke spheres
  ctx.strokeStyle = 'rgba(240, 200, 80, 0.9)';
  polyline(ctx, cam, groundCircle(scene.marker, 0.2), w, h);
  for (const sphere of scene.spheres) {
    const s = project(cam, sphere, w, h);
    if (!s) continue;
    const edge = project(cam, vAdd(sphere, [0.05, 0, 0]), w, h);
    const r = edge ? Math.max(2, Math.hypot(edge[0] - s[0], edge[1] - s[1])) : 2;
    ctx.beginPath();
    ctx.arc(s[0], s[1], r, 0, 2 * Math.PI);
    ctx.stroke();
  }

  // drawn ink
  ctx.strokeStyle = 'rgba(90, 220, 140, 0.9)';
  ctx.lineWidth = 2;
  for (const stroke of ink) if (stroke.length > 1) polyline(ctx, cam, stroke, w, h);
  ctx.lineWidth = 1;

  // teleport arc, landing disc, orientation arrow
  if (arc && state.mode === 'teleport') {
    ctx.lineWidth = 2;
    ctx.strokeStyle = arcValid ? 'rgba(80, 220, 255, 0.95)' : 'rgba(235, 80, 80, 0.95)';
    polyline(ctx, cam, arc.points, w, h);
    ctx.lineWidth = 1;
  }

  const phase = state.phase;
  const cursor =
    phase.kind === 'aiming' ? phase.cursor : phase.kind === 'orient_hold' ? phase.cursor : null;
  if (cursor && state.mode === 'teleport') {
    ctx.strokeStyle = 'rgba(80, 220, 255, 0.95)';
    polyline(ctx, cam, groundCircle(cursor, 0.3), w, h);
  }

  if (phase.kind === 'orient_hold' && phase.classified && phase.preview_yaw !== null && cursor) {
    const yaw = phase.preview_yaw;
    const base = vAdd(cursor, [0, 1.2, 0]);
    const tipPt = vAdd(base, yawRotate(yaw, [0, 0, 0.5]));
    const left = vAdd(base, yawRotate(yaw, [-0.12, 0, 0.25]));
    const right = vAdd(base, yawRotate(yaw, [0.12, 0, 0.25]));
    ctx.strokeStyle = 'rgba(255, 170, 60, 0.95)';
    ctx.lineWidth = 2;
    polyline(ctx, cam, [base, tipPt], w, h);
    polyline(ctx, cam, [left, tipPt, right], w, h);
    if (phase.orient_cursor) polyline(ctx, cam, [phase.orient_cursor, base], w, h);
    ctx.lineWidth = 1;
  }
}
