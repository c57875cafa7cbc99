// The playground draws the arc from the same parabola parameters the server
// echoes back in its config reply. This test pins the local sampler to the
// server's cursor: aim at a few floor spots, read cursor_updated positions,
// and check the locally computed endpoint lands within a millimeter.

import { afterAll, beforeAll, describe, expect, test } from 'vitest';
import { sampleArc } from '../src/arc.js';
import { vDot, vSub } from '../src/math.js';
import { ServeHandle, spawnServe } from './serve.js';
import { Session } from './session.js';

let server: ServeHandle;

beforeAll(async () => {
  server = await spawnServe(['--heartbeat', '120']);
}, 30000);

afterAll(() => server?.stop());

describe('local arc sampling matches the server cursor', () => {
  test('floor landings agree within 1e-3 m', async () => {
    const s = await Session.start(
      server.port,
      { switch_method: 'button', orientation_method: 'roll' },
      { depth: 3.0, rotation_deg: 180.0 }
    );
    try {
      await s.step(2);
      await s.switchMode('teleport');

      // pitches that keep the landing on the open floor, clear of walls
      for (const pitch of [12, 20, 35]) {
        s.rig.aimYawDeg = 0;
        s.rig.pointerMove(0, pitch - s.rig.aimPitchDeg);
        expect(s.rig.aimPitchDeg).toBeCloseTo(pitch, 9);
        await s.step(2);

        const cursor = s.cursor();
        expect(cursor, `server cursor at pitch ${pitch}`).not.toBeNull();
        const local = s.localArcEndpoint();
        expect(local, `local hit at pitch ${pitch}`).not.toBeNull();
        const err = Math.hypot(
          local![0] - cursor![0],
          local![1] - cursor![1],
          local![2] - cursor![2]
        );
        expect(err).toBeLessThanOrEqual(1e-3);
      }
    } finally {
      s.close();
    }
  }, 30000);

  test('32 samples, last snapped to the hit', () => {
    const arc = sampleArc([0, 1.2, 0], [0, 0, 1], {
      speed: 10.0,
      gravity: 9.81,
      max_fall_time: 1.5,
      march_step: 1 / 90,
    });
    expect(arc.points).toHaveLength(32);
    expect(arc.hit).not.toBeNull();
    expect(arc.points[31]).toEqual(arc.hit);
    // monotone forward progress along the launch direction
    for (let i = 1; i < 32; i++) {
      const d = vDot(vSub(arc.points[i], arc.points[i - 1]), [0, 0, 1]);
      expect(d).toBeGreaterThan(0);
    }
  });

  test('skyward aim never lands', () => {
    const arc = sampleArc([0, 1.2, 0], [0, 1, 0], {
      speed: 10.0,
      gravity: 9.81,
      max_fall_time: 1.5,
      march_step: 1 / 90,
    });
    expect(arc.hit).toBeNull();
    expect(arc.points).toHaveLength(32);
  });
});
