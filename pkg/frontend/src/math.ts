// Minimal vector/quaternion kit matching the wire conventions:
// y-up right-handed, yaw 0 along +z, yaw = atan2(x, z), degrees,
// quaternions scalar-first [w, x, y, z].

export type V3 = [number, number, number];
export type Quat = [number, number, number, number];

export const DEG = Math.PI / 180;

export const vAdd = (a: V3, b: V3): V3 => [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
export const vSub = (a: V3, b: V3): V3 => [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
export const vScale = (a: V3, s: number): V3 => [a[0] * s, a[1] * s, a[2] * s];
export const vNorm = (a: V3): number => Math.hypot(a[0], a[1], a[2]);
export const vDot = (a: V3, b: V3): number => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];

export function vNormalize(a: V3): V3 {
  const n = vNorm(a);
  if (n === 0) throw new Error('cannot normalize a zero vector');
  return [a[0] / n, a[1] / n, a[2] / n];
}

export function qMul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function qFromAxisAngle(axis: V3, angleDeg: number): Quat {
  const [x, y, z] = vNormalize(axis);
  const half = (angleDeg * DEG) / 2;
  const s = Math.sin(half);
  return [Math.cos(half), x * s, y * s, z * s];
}

export const qFromYaw = (yawDeg: number): Quat => qFromAxisAngle([0, 1, 0], yawDeg);

export function qRotate(q: Quat, v: V3): V3 {
  // q * (0, v) * q^-1 expanded
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  const tx = 2 * (y * vz - z * vy);
  const ty = 2 * (z * vx - x * vz);
  const tz = 2 * (x * vy - y * vx);
  return [
    vx + w * tx + y * tz - z * ty,
    vy + w * ty + z * tx - x * tz,
    vz + w * tz + x * ty - y * tx,
  ];
}

/** Rotate v about +y by yawDeg (cheap special case of qRotate). */
export function yawRotate(yawDeg: number, v: V3): V3 {
  const a = yawDeg * DEG;
  const c = Math.cos(a);
  const s = Math.sin(a);
  return [v[0] * c + v[2] * s, v[1], -v[0] * s + v[2] * c];
}

export const yawOf = (v: V3): number => Math.atan2(v[0], v[2]) / DEG;

export function wrapDeg(a: number): number {
  let r = a % 360;
  if (r <= -180) r += 360;
  if (r > 180) r -= 360;
  return r;
}
