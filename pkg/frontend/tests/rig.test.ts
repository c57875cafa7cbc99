// Rig behavior that the scripted sessions lean on: the flip gesture must
// cross the latch threshold quickly, inputs must route by mode, and the
// frames it emits must be well formed for the strict server parser.

import { describe, expect, test } from 'vitest';
import { DesktopRig, EYE_HEIGHT, STYLUS_HOME } from '../src/rig.js';
import { StateWire } from '../src/protocol.js';

const FRAME_MS = 1000 / 60;

function stateWith(partial: Partial<StateWire>): StateWire {
  return {
    mode: 'draw',
    flipped: false,
    phase: { kind: 'idle' },
    user: { p: [0, 0, 0], yaw_deg: 0 },
    translucent: [],
    ...partial,
  };
}

describe('desktop rig', () => {
  test('flip tilt crosses the 120 degree latch inside 250 ms', () => {
    const rig = new DesktopRig();
    rig.applyState(stateWith({ mode: 'teleport', phase: { kind: 'aiming', cursor: null } }));
    rig.setFlip(true);
    let ms = 0;
    while (rig.tiltDeg < 120 && ms < 1000) {
      rig.advance(FRAME_MS);
      ms += FRAME_MS;
    }
    expect(rig.tiltDeg).toBeGreaterThanOrEqual(120);
    expect(ms).toBeLessThanOrEqual(250);
    expect(rig.aimYawDeg).toBe(0); // flip recenters the aim
  });

  test('pointer motion drags the pen tip in draw mode only', () => {
    const rig = new DesktopRig();
    rig.pointerMove(10, -4);
    expect(rig.tip.x).toBeCloseTo(0.05, 12);
    expect(rig.tip.y).toBeCloseTo(0.02, 12);
    expect(rig.aimYawDeg).toBe(0);

    rig.applyState(stateWith({ mode: 'teleport', phase: { kind: 'aiming', cursor: null } }));
    const tipBefore = { ...rig.tip };
    rig.pointerMove(10, 5);
    expect(rig.aimYawDeg).toBe(10);
    expect(rig.aimPitchDeg).toBe(20);
    expect(rig.tip).toEqual(tipBefore);
  });

  test('wheel rolls during a hold and pushes the tip otherwise', () => {
    const rig = new DesktopRig();
    rig.wheel(2);
    expect(rig.tip.depth).toBeCloseTo(0.04, 12);
    expect(rig.rollDeg).toBe(0);

    rig.applyState(
      stateWith({
        mode: 'teleport',
        phase: {
          kind: 'orient_hold',
          cursor: [0, 0, 3],
          press_t: 0,
          classified: true,
          preview_yaw: 0,
          orient_cursor: null,
        },
      })
    );
    rig.wheel(3);
    expect(rig.rollDeg).toBe(15);
    expect(rig.tip.depth).toBeCloseTo(0.04, 12);

    // leaving the hold clears the twist
    rig.applyState(stateWith({ mode: 'teleport', phase: { kind: 'aiming', cursor: null } }));
    expect(rig.rollDeg).toBe(0);
  });

  test('emitted frames carry unit quaternions and optional gaze', () => {
    const rig = new DesktopRig();
    rig.applyState(stateWith({ user: { p: [1, 0, -2], yaw_deg: 137 }, mode: 'teleport', phase: { kind: 'aiming', cursor: null } }));
    rig.pointerMove(33, 12);
    rig.wheel(4);
    const frame = rig.frame(16.5);
    for (const q of [frame.stylus.q, frame.head.q]) {
      const n = Math.hypot(q[0], q[1], q[2], q[3]);
      expect(Math.abs(n - 1)).toBeLessThanOrEqual(1e-9);
    }
    expect(frame.gaze).toBeUndefined();
    expect(frame.head.p).toEqual([1, EYE_HEIGHT, -2]);

    rig.gazeDir = [0, 0, 1];
    const withGaze = rig.frame(33);
    expect(withGaze.gaze).toEqual({ o: [1, EYE_HEIGHT, -2], d: [0, 0, 1], valid: true });
  });

  test('setTipWorld inverts the stylus placement exactly', () => {
    const rig = new DesktopRig();
    rig.applyState(stateWith({ user: { p: [0.2, 0, 3.5], yaw_deg: 180 } }));
    const target: [number, number, number] = [0.05, 1.0, 3.0];
    rig.setTipWorld(target);
    const p = rig.stylusWorld().p;
    expect(Math.hypot(p[0] - target[0], p[1] - target[1], p[2] - target[2])).toBeLessThanOrEqual(
      1e-12
    );
    // home position restores when the offsets are zeroed
    rig.tip = { x: 0, y: 0, depth: 0 };
    rig.applyState(stateWith({}));
    expect(rig.stylusWorld().p).toEqual(STYLUS_HOME);
  });
});
