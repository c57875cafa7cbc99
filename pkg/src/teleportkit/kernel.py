"""Deterministic interaction kernel: one input frame in, events out.

step() is a pure transition on (state, frame, config, scene). Feeding the
same inputs always yields the same state and the same event list, which is
what makes traces replayable bit for bit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Union

from .geom import (
    DegenerateDirectionError,
    Hit,
    ParabolaParams,
    UNIT_Z,
    UnitQuat,
    Vec3,
    angle_between,
    intersect_parabola,
    intersect_ray,
    twist_delta,
    wrap_deg,
    yaw_of,
)
from .scene import Scene, StudyScene

__all__ = [
    "SwitchMethod",
    "OrientationMethod",
    "Mode",
    "PressKind",
    "KernelConfig",
    "Pose",
    "GazeSample",
    "InputFrame",
    "Idle",
    "Aiming",
    "OrientHold",
    "KernelState",
    "ModeSwitched",
    "SwitchDenied",
    "CursorUpdated",
    "HoldStarted",
    "OrientationPreview",
    "TeleportCommitted",
    "KernelEvent",
    "initial_state",
    "detect_flip",
    "classify_press",
    "roll_controller",
    "preview_yaw_from_cursor",
    "point_controller",
    "gaze_controller",
    "smoothed_gaze_dir",
    "step",
    "config_to_json",
    "config_from_json",
    "event_to_json",
    "state_to_json",
]


class SwitchMethod(enum.Enum):
    BUTTON = "button"
    FLIP = "flip"


class OrientationMethod(enum.Enum):
    ROLL = "roll"
    STYLUS_POINT = "stylus_point"
    GAZE_POINT = "gaze_point"


class Mode(enum.Enum):
    DRAW = "draw"
    TELEPORT = "teleport"


class PressKind(enum.Enum):
    CLICK = "click"
    HOLD = "hold"


@dataclass(frozen=True)
class KernelConfig:
    switch_method: SwitchMethod = SwitchMethod.BUTTON
    orientation_method: OrientationMethod = OrientationMethod.ROLL
    flip_on_deg: float = 120.0
    flip_off_deg: float = 110.0
    hold_threshold_ms: float = 200.0
    roll_gain: float = 1.5
    gaze_window: int = 10
    parabola: ParabolaParams = ParabolaParams()

    def __post_init__(self) -> None:
        if not (0.0 < self.flip_off_deg < self.flip_on_deg < 180.0):
            raise ValueError("need 0 < flip_off_deg < flip_on_deg < 180")
        if self.hold_threshold_ms <= 0.0:
            raise ValueError("hold_threshold_ms must be positive")
        if self.roll_gain <= 0.0:
            raise ValueError("roll_gain must be positive")
        if self.gaze_window < 1:
            raise ValueError("gaze_window must be at least 1")


@dataclass(frozen=True)
class Pose:
    position: Vec3
    orientation: UnitQuat


@dataclass(frozen=True)
class GazeSample:
    origin: Vec3
    direction: Vec3
    valid: bool


@dataclass(frozen=True)
class InputFrame:
    """One tracked frame. t is milliseconds, strictly increasing."""

    t: float
    stylus: Pose
    head: Pose
    front_button: bool
    rear_button: bool
    gaze: Optional[GazeSample] = None


@dataclass(frozen=True)
class Idle:
    """Draw mode; the kernel is not casting."""


@dataclass(frozen=True)
class Aiming:
    cursor: Optional[Vec3] = None


@dataclass(frozen=True)
class OrientHold:
    press_t: float
    cursor: Vec3
    button: str
    classified: bool = False
    preview_yaw: Optional[float] = None
    orient_cursor: Optional[Vec3] = None
    initial_head_yaw: Optional[float] = None
    accumulated_twist_deg: float = 0.0
    prev_stylus_q: Optional[UnitQuat] = None


Phase = Union[Idle, Aiming, OrientHold]


@dataclass(frozen=True)
class KernelState:
    mode: Mode = Mode.DRAW
    flipped: bool = False
    phase: Phase = Idle()
    user_position: Vec3 = Vec3(0.0, 0.0, 0.0)
    user_yaw_deg: float = 0.0
    translucent_ids: frozenset[str] = frozenset()
    gaze_dirs: tuple[Vec3, ...] = ()
    prev_front: bool = False
    prev_rear: bool = False
    last_t: Optional[float] = None


@dataclass(frozen=True)
class ModeSwitched:
    mode: Mode


@dataclass(frozen=True)
class SwitchDenied:
    reason: str


@dataclass(frozen=True)
class CursorUpdated:
    """position None means the arc found no valid ground destination."""

    position: Optional[Vec3]


@dataclass(frozen=True)
class HoldStarted:
    """The press crossed the hold threshold; orientation control is live."""


@dataclass(frozen=True)
class OrientationPreview:
    yaw_deg: float


@dataclass(frozen=True)
class TeleportCommitted:
    position: Vec3
    yaw_deg: float
    orientation_changed: bool


KernelEvent = Union[
    ModeSwitched, SwitchDenied, CursorUpdated, HoldStarted, OrientationPreview, TeleportCommitted
]


def initial_state(scene: Scene) -> KernelState:
    if isinstance(scene, StudyScene):
        return KernelState(
            user_position=scene.start_position, user_yaw_deg=scene.start_yaw_deg
        )
    return KernelState()


def detect_flip(
    stylus_dir: Vec3, cam_forward: Vec3, flipped: bool, config: KernelConfig
) -> bool:
    """Hysteresis latch on the tail-to-tip vs camera-forward angle.

    Flips when the angle exceeds flip_on_deg, releases only when it drops
    strictly below flip_off_deg; inside the band the latch keeps its value.
    """
    angle = angle_between(stylus_dir, cam_forward)
    if flipped:
        return not (angle < config.flip_off_deg)
    return angle > config.flip_on_deg


def classify_press(duration_ms: float, config: KernelConfig) -> PressKind:
    """Hold at or above the threshold, click below it."""
    if duration_ms < 0.0:
        raise ValueError("duration_ms must be non-negative")
    return PressKind.HOLD if duration_ms >= config.hold_threshold_ms else PressKind.CLICK


def roll_controller(initial_head_yaw: float, accumulated_twist_deg: float, gain: float) -> float:
    """Preview yaw from accumulated stylus twist about its long axis."""
    return wrap_deg(initial_head_yaw + gain * accumulated_twist_deg)


def preview_yaw_from_cursor(destination: Vec3, cursor: Vec3) -> Optional[float]:
    """Horizontal bearing from the destination to the orientation cursor.

    Only x and z enter the bearing, so raising or lowering the cursor never
    changes the preview. A cursor directly above the destination has no
    bearing and yields None.
    """
    try:
        return yaw_of(cursor - destination)
    except DegenerateDirectionError:
        return None


def point_controller(
    destination: Vec3,
    origin: Vec3,
    direction: Vec3,
    config: KernelConfig,
    scene: Scene,
    pass_through: frozenset[str],
) -> Optional[tuple[Vec3, float]]:
    """Second arc from the stylus; its contact point sets the preview yaw.

    The arc sails through the objects the positioning arc made translucent
    and may land on any other surface. Returns None when the arc ends in
    the air or the contact sits directly above the destination.
    """
    hit = intersect_parabola(
        origin,
        direction,
        config.parabola,
        scene,
        respect_permeability=False,
        pass_through=pass_through,
    )
    if hit is None:
        return None
    yaw = preview_yaw_from_cursor(destination, hit.point)
    if yaw is None:
        return None
    return hit.point, yaw


def smoothed_gaze_dir(dirs: tuple[Vec3, ...]) -> Optional[Vec3]:
    """Renormalized mean of the buffered gaze directions."""
    if not dirs:
        return None
    total = Vec3(0.0, 0.0, 0.0)
    for d in dirs:
        total = total + d
    try:
        return total.normalized()
    except DegenerateDirectionError:
        return None


def gaze_controller(
    destination: Vec3,
    origin: Vec3,
    dirs: tuple[Vec3, ...],
    scene: Scene,
    pass_through: frozenset[str],
) -> Optional[tuple[Vec3, float]]:
    """Smoothed gaze ray cast; its surface hit sets the preview yaw."""
    direction = smoothed_gaze_dir(dirs)
    if direction is None:
        return None
    hit = intersect_ray(origin, direction, scene, pass_through=pass_through)
    if hit is None:
        return None
    yaw = preview_yaw_from_cursor(destination, hit.point)
    if yaw is None:
        return None
    return hit.point, yaw


def _emitter(frame: InputFrame, config: KernelConfig) -> tuple[Vec3, Vec3]:
    """Cast origin and direction: tip forward normally, tail forward flipped."""
    axis = frame.stylus.orientation.rotate(UNIT_Z)
    if config.switch_method is SwitchMethod.FLIP:
        return frame.stylus.position, -axis
    return frame.stylus.position, axis


def _head_yaw(frame: InputFrame, fallback: float) -> float:
    try:
        return yaw_of(frame.head.orientation.rotate(UNIT_Z))
    except DegenerateDirectionError:
        return fallback


def _teleport_buttons(config: KernelConfig) -> tuple[str, ...]:
    if config.switch_method is SwitchMethod.FLIP:
        return ("front", "rear")
    return ("front",)


def _update_controller(
    state: KernelState,
    hold: OrientHold,
    frame: InputFrame,
    config: KernelConfig,
    scene: Scene,
) -> OrientHold:
    method = config.orientation_method
    if method is OrientationMethod.ROLL:
        axis = hold.prev_stylus_q.rotate(UNIT_Z)
        delta = twist_delta(hold.prev_stylus_q, frame.stylus.orientation, axis)
        twist = hold.accumulated_twist_deg + delta
        return replace(
            hold,
            accumulated_twist_deg=twist,
            prev_stylus_q=frame.stylus.orientation,
            preview_yaw=roll_controller(hold.initial_head_yaw, twist, config.roll_gain),
        )
    if method is OrientationMethod.STYLUS_POINT:
        origin, direction = _emitter(frame, config)
        result = point_controller(
            hold.cursor, origin, direction, config, scene, state.translucent_ids
        )
    else:
        if frame.gaze is None or not frame.gaze.valid:
            return hold
        result = gaze_controller(
            hold.cursor, frame.gaze.origin, state.gaze_dirs, scene, state.translucent_ids
        )
    if result is None:
        return hold  # miss or degenerate: previous preview stands
    return replace(hold, orient_cursor=result[0], preview_yaw=result[1])


def _start_controller(
    state: KernelState, hold: OrientHold, frame: InputFrame, config: KernelConfig, scene: Scene
) -> OrientHold:
    hold = replace(hold, classified=True)
    if config.orientation_method is OrientationMethod.ROLL:
        hold = replace(
            hold,
            initial_head_yaw=_head_yaw(frame, state.user_yaw_deg),
            accumulated_twist_deg=0.0,
            prev_stylus_q=frame.stylus.orientation,
        )
        return replace(
            hold,
            preview_yaw=roll_controller(hold.initial_head_yaw, 0.0, config.roll_gain),
        )
    return _update_controller(state, hold, frame, config, scene)


def step(
    state: KernelState, frame: InputFrame, config: KernelConfig, scene: Scene
) -> tuple[KernelState, list[KernelEvent]]:
    """Advance one frame; returns the new state and the events it produced."""
    if state.last_t is not None and frame.t <= state.last_t:
        raise ValueError(f"frame t={frame.t} not after previous t={state.last_t}")
    events: list[KernelEvent] = []

    gaze_dirs = state.gaze_dirs
    if frame.gaze is not None and frame.gaze.valid:
        gaze_dirs = (gaze_dirs + (frame.gaze.direction,))[-config.gaze_window :]
    state = replace(state, gaze_dirs=gaze_dirs)

    in_hold = isinstance(state.phase, OrientHold)

    # Mode switching. The latch and the rear toggle are both inert while a
    # teleport press is in progress.
    if config.switch_method is SwitchMethod.BUTTON:
        if frame.rear_button and not state.prev_rear:
            if in_hold:
                events.append(SwitchDenied("teleport press in progress"))
            else:
                state = _toggle_mode(state)
                events.append(ModeSwitched(state.mode))
    else:
        if not in_hold:
            stylus_dir = frame.stylus.orientation.rotate(UNIT_Z)
            cam_forward = frame.head.orientation.rotate(UNIT_Z)
            flipped = detect_flip(stylus_dir, cam_forward, state.flipped, config)
            if flipped != state.flipped:
                state = _toggle_mode(replace(state, flipped=flipped))
                events.append(ModeSwitched(state.mode))

    if state.mode is Mode.TELEPORT:
        state = _step_teleport(state, frame, config, scene, events)
    return replace(state, prev_front=frame.front_button, prev_rear=frame.rear_button, last_t=frame.t), events


def _toggle_mode(state: KernelState) -> KernelState:
    if state.mode is Mode.DRAW:
        return replace(state, mode=Mode.TELEPORT, phase=Aiming())
    return replace(state, mode=Mode.DRAW, phase=Idle(), translucent_ids=frozenset())


def _pressed_edge(state: KernelState, frame: InputFrame, buttons: tuple[str, ...]) -> Optional[str]:
    for name in buttons:
        now = frame.front_button if name == "front" else frame.rear_button
        before = state.prev_front if name == "front" else state.prev_rear
        if now and not before:
            return name
    return None


def _step_teleport(
    state: KernelState,
    frame: InputFrame,
    config: KernelConfig,
    scene: Scene,
    events: list[KernelEvent],
) -> KernelState:
    if isinstance(state.phase, Aiming):
        origin, direction = _emitter(frame, config)
        hit = intersect_parabola(
            origin, direction, config.parabola, scene, respect_permeability=True
        )
        cursor: Optional[Vec3] = None
        penetrated: tuple[str, ...] = ()
        if hit is not None:
            penetrated = hit.penetrated_ids
            if hit.object_id == scene.ground_id:
                cursor = hit.point
        events.append(CursorUpdated(cursor))
        state = replace(
            state, phase=Aiming(cursor), translucent_ids=frozenset(penetrated)
        )
        pressed = _pressed_edge(state, frame, _teleport_buttons(config))
        if pressed is not None:
            if cursor is None:
                events.append(SwitchDenied("no valid destination"))
            else:
                state = replace(
                    state, phase=OrientHold(press_t=frame.t, cursor=cursor, button=pressed)
                )
        return state

    if isinstance(state.phase, OrientHold):
        hold = state.phase
        held = frame.front_button if hold.button == "front" else frame.rear_button
        if not held:
            duration = frame.t - hold.press_t
            kind = classify_press(duration, config)
            if kind is PressKind.HOLD and hold.preview_yaw is not None:
                yaw, changed = hold.preview_yaw, True
            else:
                yaw, changed = state.user_yaw_deg, False
            events.append(TeleportCommitted(hold.cursor, yaw, changed))
            return replace(
                state,
                phase=Aiming(),
                user_position=hold.cursor,
                user_yaw_deg=yaw,
                translucent_ids=frozenset(),
            )
        if not hold.classified:
            if frame.t - hold.press_t >= config.hold_threshold_ms:
                events.append(HoldStarted())
                hold = _start_controller(state, hold, frame, config, scene)
                if hold.preview_yaw is not None:
                    events.append(OrientationPreview(hold.preview_yaw))
                return replace(state, phase=hold)
            return state
        hold = _update_controller(state, hold, frame, config, scene)
        if hold.preview_yaw is not None:
            events.append(OrientationPreview(hold.preview_yaw))
        return replace(state, phase=hold)

    return state


# -- wire helpers -----------------------------------------------------------

def _number(value: object, where: str) -> float:
    # bool is an int subclass and must not pass as a number on the wire
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{where}: expected a number")
    return float(value)


def config_to_json(config: KernelConfig) -> dict:
    return {
        "switch_method": config.switch_method.value,
        "orientation_method": config.orientation_method.value,
        "flip_on_deg": config.flip_on_deg,
        "flip_off_deg": config.flip_off_deg,
        "hold_threshold_ms": config.hold_threshold_ms,
        "roll_gain": config.roll_gain,
        "gaze_window": config.gaze_window,
        "parabola": {
            "speed": config.parabola.speed,
            "gravity": config.parabola.gravity,
            "max_fall_time": config.parabola.max_fall_time,
            "march_step": config.parabola.march_step,
        },
    }


def config_from_json(data: object) -> KernelConfig:
    if not isinstance(data, dict):
        raise ValueError("config: expected a JSON object")
    allowed = {
        "switch_method",
        "orientation_method",
        "flip_on_deg",
        "flip_off_deg",
        "hold_threshold_ms",
        "roll_gain",
        "gaze_window",
        "parabola",
    }
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"config: unknown field {sorted(unknown)[0]!r}")
    kwargs: dict = {}
    if "switch_method" in data:
        kwargs["switch_method"] = SwitchMethod(data["switch_method"])
    if "orientation_method" in data:
        kwargs["orientation_method"] = OrientationMethod(data["orientation_method"])
    for name in ("flip_on_deg", "flip_off_deg", "hold_threshold_ms", "roll_gain"):
        if name in data:
            kwargs[name] = _number(data[name], f"config.{name}")
    if "gaze_window" in data:
        window = data["gaze_window"]
        if isinstance(window, bool) or not isinstance(window, int):
            raise ValueError("config.gaze_window: expected an integer")
        kwargs["gaze_window"] = window
    if "parabola" in data:
        p = data["parabola"]
        if not isinstance(p, dict):
            raise ValueError("config.parabola: expected a JSON object")
        p_allowed = {"speed", "gravity", "max_fall_time", "march_step"}
        p_unknown = set(p) - p_allowed
        if p_unknown:
            raise ValueError(f"config.parabola: unknown field {sorted(p_unknown)[0]!r}")
        kwargs["parabola"] = ParabolaParams(
            **{k: _number(v, f"config.parabola.{k}") for k, v in p.items()}
        )
    return KernelConfig(**kwargs)


def _vec(v: Optional[Vec3]) -> Optional[list[float]]:
    return None if v is None else [v.x, v.y, v.z]


def event_to_json(event: KernelEvent) -> dict:
    if isinstance(event, ModeSwitched):
        return {"kind": "mode_switched", "mode": event.mode.value}
    if isinstance(event, SwitchDenied):
        return {"kind": "switch_denied", "reason": event.reason}
    if isinstance(event, CursorUpdated):
        return {"kind": "cursor_updated", "position": _vec(event.position)}
    if isinstance(event, HoldStarted):
        return {"kind": "hold_started"}
    if isinstance(event, OrientationPreview):
        return {"kind": "orientation_preview", "yaw_deg": event.yaw_deg}
    if isinstance(event, TeleportCommitted):
        return {
            "kind": "teleport_committed",
            "position": _vec(event.position),
            "yaw_deg": event.yaw_deg,
            "orientation_changed": event.orientation_changed,
        }
    raise TypeError(f"not a kernel event: {event!r}")


def state_to_json(state: KernelState) -> dict:
    phase = state.phase
    if isinstance(phase, Idle):
        phase_json: dict = {"kind": "idle"}
    elif isinstance(phase, Aiming):
        phase_json = {"kind": "aiming", "cursor": _vec(phase.cursor)}
    else:
        phase_json = {
            "kind": "orient_hold",
            "cursor": _vec(phase.cursor),
            "press_t": phase.press_t,
            "classified": phase.classified,
            "preview_yaw": phase.preview_yaw,
            "orient_cursor": _vec(phase.orient_cursor),
        }
    return {
        "mode": state.mode.value,
        "flipped": state.flipped,
        "phase": phase_json,
        "user": {"p": _vec(state.user_position), "yaw_deg": state.user_yaw_deg},
        "translucent": sorted(state.translucent_ids),
    }
