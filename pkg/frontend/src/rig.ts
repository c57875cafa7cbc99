// Desktop stand-in for the 6-DoF stylus. Pointer motion aims the stylus in
// teleport mode and drags the pen tip in draw mode; the wheel rolls the
// stylus during an orientation hold and pushes the tip toward/away from the
// user otherwise; F flips the stylus, animated through the latch threshold
// rather than snapping, so the hysteresis behaves as it would in the hand.
//
// The rig never decides interaction outcomes. Mode, phase, and the user pose
// all come back from the server via applyState; the rig only turns pointer
// and key gestures into the next input frame.

import { Quat, V3, qFromAxisAngle, qFromYaw, qMul, vAdd, yawRotate } from './math.js';
import { StateWire, WireFrame } from './protocol.js';

export const STYLUS_HOME: V3 = [0.15, 1.1, 0.25];
export const EYE_HEIGHT = 1.6;

const FLIP_RATE_DEG_S = 700; // crosses the threshold well inside 250 ms
const AIM_PITCH_MIN = 3;
const AIM_PITCH_MAX = 80;
// flipped-grip tilt band: past the 120 degree latch with room to range the arc
const FLIP_TILT_MIN = 128;
const FLIP_TILT_MAX = 195;

export class DesktopRig {
  // mirrors of the last server snapshot
  userP: V3 = [0, 0, 0];
  userYawDeg = 0;
  mode: 'draw' | 'teleport' = 'draw';
  phaseKind: 'idle' | 'aiming' | 'orient_hold' = 'idle';

  // input-side state
  aimYawDeg = 0; // stylus yaw relative to the user
  aimPitchDeg = 15; // downward launch tilt
  tiltDeg = 15; // actual tilt; animated toward aimPitchDeg or the flip pose
  flipHeld = false;
  flipTiltDeg = 150; // flipped-grip tilt; pointer pitch adjusts it for range
  rollDeg = 0;
  tip = { x: 0, y: 0, depth: 0 }; // pen tip offset from the home pose, user-local
  front = false;
  rear = false;
  gazeDir: V3 | null = null;

  applyState(state: StateWire): void {
    this.userP = state.user.p;
    this.userYawDeg = state.user.yaw_deg;
    this.mode = state.mode;
    this.phaseKind = state.phase.kind;
    if (state.phase.kind !== 'orient_hold') this.rollDeg = 0;
  }

  get holding(): boolean {
    return this.phaseKind === 'orient_hold';
  }

  pointerMove(dxDeg: number, dyDeg: number): void {
    if (this.mode === 'teleport') {
      this.aimYawDeg += dxDeg;
      if (this.flipHeld) {
        this.flipTiltDeg = Math.min(
          FLIP_TILT_MAX,
          Math.max(FLIP_TILT_MIN, this.flipTiltDeg + dyDeg)
        );
      } else {
        this.aimPitchDeg = Math.min(
          AIM_PITCH_MAX,
          Math.max(AIM_PITCH_MIN, this.aimPitchDeg + dyDeg)
        );
        this.tiltDeg = this.aimPitchDeg;
      }
    } else {
      // pen on an invisible easel: 1 deg of pointer motion = 5 mm of tip
      this.tip.x += dxDeg * 0.005;
      this.tip.y -= dyDeg * 0.005;
    }
  }

  wheel(steps: number): void {
    if (this.holding) this.rollDeg += steps * 5;
    else this.tip.depth = Math.min(1.0, Math.max(-0.2, this.tip.depth + steps * 0.02));
  }

  setFlip(on: boolean): void {
    this.flipHeld = on;
    // recenter so the tilt alone decides which side of the latch we are on
    this.aimYawDeg = 0;
  }

  /** Advance the flip animation by one frame interval. */
  advance(dtMs: number): void {
    const target = this.flipHeld ? this.flipTiltDeg : this.aimPitchDeg;
    const maxStep = (FLIP_RATE_DEG_S * dtMs) / 1000;
    const d = target - this.tiltDeg;
    this.tiltDeg += Math.abs(d) <= maxStep ? d : Math.sign(d) * maxStep;
  }

  stylusWorld(): { p: V3; q: Quat } {
    const local: V3 = [
      STYLUS_HOME[0] + this.tip.x,
      STYLUS_HOME[1] + this.tip.y,
      STYLUS_HOME[2] + this.tip.depth,
    ];
    const p = vAdd(this.userP, yawRotate(this.userYawDeg, local));
    let q = qMul(
      qFromYaw(this.userYawDeg + this.aimYawDeg),
      qFromAxisAngle([1, 0, 0], this.tiltDeg)
    );
    if (this.rollDeg !== 0) q = qMul(q, qFromAxisAngle([0, 0, 1], this.rollDeg));
    return { p, q };
  }

  headWorld(): { p: V3; q: Quat } {
    return {
      p: vAdd(this.userP, [0, EYE_HEIGHT, 0]),
      q: qFromYaw(this.userYawDeg),
    };
  }

  /** Place the pen tip at a world point (used when tracing a stroke). */
  setTipWorld(w: V3): void {
    const local = yawRotate(-this.userYawDeg, [
      w[0] - this.userP[0],
      w[1] - this.userP[1],
      w[2] - this.userP[2],
    ]);
    this.tip.x = local[0] - STYLUS_HOME[0];
    this.tip.y = local[1] - STYLUS_HOME[1];
    this.tip.depth = local[2] - STYLUS_HOME[2];
  }

  frame(t: number): WireFrame {
    const stylus = this.stylusWorld();
    const head = this.headWorld();
    const frame: WireFrame = {
      t,
      stylus: { p: stylus.p, q: stylus.q, front: this.front, rear: this.rear },
      head: { p: head.p, q: head.q },
    };
    if (this.gazeDir) {
      frame.gaze = { o: head.p, d: this.gazeDir, valid: true };
    }
    return frame;
  }
}
