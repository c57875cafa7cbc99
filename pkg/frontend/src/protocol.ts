// Wire types for the serve NDJSON protocol, plus transport-agnostic framing.
// The browser talks WebSocket; tests talk raw TCP. Both carry one JSON
// object per message/line and the kernel never sees the difference.

import { Quat, V3 } from './math.js';
import { ParabolaParams } from './arc.js';

export interface WireFrame {
  t: number;
  stylus: { p: V3; q: Quat; front: boolean; rear: boolean };
  head: { p: V3; q: Quat };
  gaze?: { o: V3; d: V3; valid: boolean };
}

export interface KernelConfigWire {
  switch_method: 'button' | 'flip';
  orientation_method: 'roll' | 'stylus_point' | 'gaze_point';
  flip_on_deg: number;
  flip_off_deg: number;
  hold_threshold_ms: number;
  roll_gain: number;
  gaze_window: number;
  parabola: ParabolaParams;
}

export interface SceneObjectWire {
  id: string;
  shape:
    | { type: 'ground' }
    | { type: 'box'; half_extents: V3 }
    | { type: 'quad'; width: number; height: number };
  pose: { p: V3; yaw_deg: number };
  permeable: boolean;
  alpha: number;
}

export interface SceneWire {
  objects: SceneObjectWire[];
  marker: V3;
  spheres: [V3, V3];
}

export type PhaseWire =
  | { kind: 'idle' }
  | { kind: 'aiming'; cursor: V3 | null }
  | {
      kind: 'orient_hold';
      cursor: V3;
      press_t: number;
      classified: boolean;
      preview_yaw: number | null;
      orient_cursor: V3 | null;
    };

export interface StateWire {
  mode: 'draw' | 'teleport';
  flipped: boolean;
  phase: PhaseWire;
  user: { p: V3; yaw_deg: number };
  translucent: string[];
}

export type EventWire =
  | { kind: 'mode_switched'; mode: string }
  | { kind: 'switch_denied'; reason: string }
  | { kind: 'cursor_updated'; position: V3 | null }
  | { kind: 'hold_started' }
  | { kind: 'orientation_preview'; yaw_deg: number }
  | { kind: 'teleport_committed'; position: V3; yaw_deg: number; orientation_changed: boolean }
  | { kind: 'session_reset' };

export type ServerMsg =
  | {
      kind: 'state';
      state: StateWire;
      events: EventWire[];
      config?: KernelConfigWire;
      scene?: SceneWire;
    }
  | { kind: 'events'; events: EventWire[] }
  | { kind: 'error'; msg: string };

export type ClientMsg =
  | { kind: 'config'; config?: object; study?: { depth: number; rotation_deg: number } }
  | ({ kind: 'frame' } & WireFrame)
  | { kind: 'reset' };

/** Splits a byte/text stream into newline-delimited JSON values. */
export class NdjsonDecoder {
  private buffer = '';

  push(chunk: string): unknown[] {
    this.buffer += chunk;
    const out: unknown[] = [];
    let nl;
    while ((nl = this.buffer.indexOf('\n')) >= 0) {
      const line = this.buffer.slice(0, nl).trim();
      this.buffer = this.buffer.slice(nl + 1);
      if (line) out.push(JSON.parse(line));
    }
    return out;
  }
}

export const encodeLine = (msg: ClientMsg): string => JSON.stringify(msg) + '\n';
