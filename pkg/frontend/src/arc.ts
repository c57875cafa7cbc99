// Display-side sampling of the teleport parabola. The server remains the
// authority on what the arc actually hit; these samples only pick the pixels.
// Ground-crossing detection mirrors the kernel formula so the drawn endpoint
// sits on the reported cursor when the destination is valid.

import { V3, vAdd, vScale } from './math.js';

export interface ParabolaParams {
  speed: number;
  gravity: number;
  max_fall_time: number;
  march_step: number;
}

export function parabolaPoint(origin: V3, dir: V3, p: ParabolaParams, t: number): V3 {
  const pt = vAdd(origin, vScale(dir, p.speed * t));
  pt[1] -= 0.5 * p.gravity * t * t;
  return pt;
}

export interface ArcSamples {
  points: V3[]; // 32 points from launch to the arc end
  hit: V3 | null; // ground-level crossing, if the arc reaches y=0 in time
  tEnd: number;
}

const SAMPLES = 32;

/** March the arc against the ground plane and sample it for rendering. */
export function sampleArc(origin: V3, dir: V3, p: ParabolaParams): ArcSamples {
  let hit: V3 | null = null;
  let tEnd = p.max_fall_time;

  if (origin[1] > 0) {
    let tPrev = 0;
    for (let t = p.march_step; t <= p.max_fall_time + 1e-12; t += p.march_step) {
      const tc = Math.min(t, p.max_fall_time);
      if (parabolaPoint(origin, dir, p, tc)[1] <= 0) {
        // bisect the crossing segment down to 0.1 mm of height
        let lo = tPrev;
        let hi = tc;
        while ((hi - lo) * p.speed > 1e-4) {
          const mid = (lo + hi) / 2;
          if (parabolaPoint(origin, dir, p, mid)[1] <= 0) hi = mid;
          else lo = mid;
        }
        tEnd = hi;
        const pt = parabolaPoint(origin, dir, p, hi);
        hit = [pt[0], 0, pt[2]];
        break;
      }
      tPrev = tc;
      if (tc >= p.max_fall_time) break;
    }
  }

  const points: V3[] = [];
  for (let i = 0; i < SAMPLES; i++) {
    points.push(parabolaPoint(origin, dir, p, (tEnd * i) / (SAMPLES - 1)));
  }
  if (hit) points[SAMPLES - 1] = hit;
  return { points, hit, tEnd };
}
