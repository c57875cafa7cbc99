// Browser entry point: WebSocket session against `teleportkit serve`,
// a 60 Hz input loop from the desktop rig, and the canvas view.
//
// Bindings: move mouse = aim stylus (teleport) / drag pen tip (draw),
// wheel = roll during a hold / pen depth otherwise, F = flip gesture,
// left button = front, right button = rear, pointer = gaze ray.

import { sampleArc, ArcSamples } from './arc.js';
import { V3, qRotate, vAdd } from './math.js';
import { EventWire, KernelConfigWire, NdjsonDecoder, SceneWire, ServerMsg, StateWire, encodeLine } from './protocol.js';
import { DesktopRig, EYE_HEIGHT } from './rig.js';
import { Camera, drawScene, unproject } from './render.js';

const FRAME_MS = 1000 / 60;

const canvas = document.getElementById('view') as HTMLCanvasElement;
const ctx = canvas.getContext('2d')!;
const banner = document.getElementById('banner')!;
const overlay = {
  mode: document.getElementById('ov-mode')!,
  phase: document.getElementById('ov-phase')!,
  hold: document.getElementById('ov-hold')!,
  preview: document.getElementById('ov-preview')!,
  flip: document.getElementById('ov-flip')!,
};
const eventLog = document.getElementById('events')!;
const form = {
  url: document.getElementById('f-url') as HTMLInputElement,
  switch: document.getElementById('f-switch') as HTMLSelectElement,
  orient: document.getElementById('f-orient') as HTMLSelectElement,
  depth: document.getElementById('f-depth') as HTMLSelectElement,
  rotation: document.getElementById('f-rotation') as HTMLSelectElement,
  apply: document.getElementById('f-apply') as HTMLButtonElement,
};

const rig = new DesktopRig();
let ws: WebSocket | null = null;
let wantReconnect = false;
let configured = false;
let frameIndex = 0;
let config: KernelConfigWire | null = null;
let scene: SceneWire | null = null;
let state: StateWire | null = null;
let lastFrameSent: ReturnType<DesktopRig['frame']> | null = null;
let pointer = { x: 0, y: 0 };
let ink: V3[][] = [];
let penWasDown = false;

function camera(): Camera {
  return { eye: vAdd(rig.userP, [0, EYE_HEIGHT, 0]), yawDeg: rig.userYawDeg, pitchDeg: 12 };
}

function logEvent(e: EventWire): void {
  if (e.kind === 'cursor_updated') return; // one per frame, too chatty for a log
  const li = document.createElement('li');
  li.textContent = JSON.stringify(e);
  eventLog.prepend(li);
  while (eventLog.children.length > 12) eventLog.lastChild!.remove();
}

function applyServer(msg: ServerMsg): void {
  if (msg.kind === 'error') {
    banner.textContent = `server error: ${msg.msg}`;
    banner.className = 'warn';
    return;
  }
  for (const e of msg.events) logEvent(e);
  if (msg.kind === 'events') return; // session reset notice; next reply carries state
  state = msg.state;
  if (msg.config) config = msg.config;
  if (msg.scene) scene = msg.scene;
  rig.applyState(msg.state);
}

function connect(): void {
  wantReconnect = true;
  configured = false;
  banner.textContent = 'connecting...';
  banner.className = 'warn';
  const decoder = new NdjsonDecoder();
  const sock = new WebSocket(form.url.value);
  ws = sock;
  sock.onopen = () => {
    banner.textContent = 'connected';
    banner.className = 'ok';
    sendConfig();
  };
  sock.onmessage = (ev) => {
    // one JSON object per message, but tolerate newline batching
    for (const msg of decoder.push(String(ev.data) + '\n')) applyServer(msg as ServerMsg);
  };
  sock.onclose = () => {
    ws = null;
    configured = false;
    if (wantReconnect) {
      banner.textContent = 'disconnected, reconnecting... (input paused)';
      banner.className = 'warn';
      setTimeout(() => {
        if (wantReconnect && !ws) connect();
      }, 1000);
    }
  };
  sock.onerror = () => sock.close();
}

function sendConfig(): void {
  if (!ws || ws.readyState !== WebSocket.OPEN) return;
  ws.send(
    encodeLine({
      kind: 'config',
      config: {
        switch_method: form.switch.value,
        orientation_method: form.orient.value,
      },
      study: {
        depth: Number(form.depth.value),
        rotation_deg: Number(form.rotation.value),
      },
    })
  );
  configured = true;
  ink = [];
  frameIndex = 0;
}

form.apply.onclick = () => (ws && ws.readyState === WebSocket.OPEN ? sendConfig() : connect());

canvas.addEventListener('mousemove', (e) => {
  pointer = { x: e.offsetX, y: e.offsetY };
  if (e.buttons || document.pointerLockElement === canvas) {
    rig.pointerMove(e.movementX * 0.25, e.movementY * 0.25);
  }
});
canvas.addEventListener('mousedown', (e) => {
  if (e.button === 0) rig.front = true;
  if (e.button === 2) rig.rear = true;
});
window.addEventListener('mouseup', (e) => {
  if (e.button === 0) rig.front = false;
  if (e.button === 2) rig.rear = false;
});
canvas.addEventListener('contextmenu', (e) => e.preventDefault());
canvas.addEventListener(
  'wheel',
  (e) => {
    e.preventDefault();
    rig.wheel(Math.sign(e.deltaY));
  },
  { passive: false }
);
window.addEventListener('keydown', (e) => {
  if (e.repeat) return;
  if (e.key === 'f' || e.key === 'F') rig.setFlip(!rig.flipHeld);
});

setInterval(() => {
  rig.advance(FRAME_MS);
  if (config?.orientation_method === 'gaze_point') {
    rig.gazeDir = unproject(camera(), pointer.x, pointer.y, canvas.width, canvas.height);
  } else {
    rig.gazeDir = null;
  }

  if (ws && ws.readyState === WebSocket.OPEN && configured) {
    const frame = rig.frame(frameIndex * FRAME_MS);
    frameIndex += 1;
    lastFrameSent = frame;
    ws.send(encodeLine({ kind: 'frame', ...frame }));

    // client-side ink preview while the pen is down in draw mode
    if (state?.mode === 'draw' && frame.stylus.front) {
      if (!penWasDown) ink.push([]);
      ink[ink.length - 1].push(frame.stylus.p);
      penWasDown = true;
    } else {
      penWasDown = false;
    }
  }

  // render from the latest server state; arc sampling is display-only
  if (scene && state) {
    let arc: ArcSamples | null = null;
    let arcValid = false;
    if (state.mode === 'teleport' && config && lastFrameSent) {
      const axis = qRotate(lastFrameSent.stylus.q, [0, 0, 1]);
      const dir: V3 = state.flipped ? [-axis[0], -axis[1], -axis[2]] : axis;
      arc = sampleArc(lastFrameSent.stylus.p, dir, config.parabola);
      const phase = state.phase;
      arcValid =
        (phase.kind === 'aiming' && phase.cursor !== null) || phase.kind === 'orient_hold';
    }
    drawScene(ctx, camera(), scene, state, arc, arcValid, ink);
  }

  // overlay readouts mirror the last snapshot
  if (state) {
    overlay.mode.textContent = state.mode;
    overlay.phase.textContent = state.phase.kind;
    overlay.flip.textContent = state.flipped ? 'flipped' : 'upright';
    if (state.phase.kind === 'orient_hold' && lastFrameSent) {
      overlay.hold.textContent = `${Math.max(0, lastFrameSent.t - state.phase.press_t).toFixed(0)} ms`;
      overlay.preview.textContent =
        state.phase.preview_yaw === null ? '-' : `${state.phase.preview_yaw.toFixed(1)} deg`;
    } else {
      overlay.hold.textContent = '-';
      overlay.preview.textContent = '-';
    }
  }
}, FRAME_MS);

connect();
