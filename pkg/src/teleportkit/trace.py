"""Input traces: JSONL serialization and a seeded synthetic trial performer.

A trace is a header (kernel config, study scene parameters, seed) followed by
one InputFrame per line. The synthetic generator scripts a full trial: switch
into teleport mode, aim the arc at the ground marker, press and hold, steer
the orientation preview toward the sphere midpoint, release, switch back, and
draw one stroke through both spheres. With noise parameters at zero the
scripted poses are solved in closed form, so the kernel's commit lands on the
marker to within the cast refinement tolerance.
"""

from __future__ import annotations

import json
import math
import os
import random
from dataclasses import dataclass
from typing import IO, Iterator, Optional, Union

from .geom import (
    UNIT_X,
    UNIT_Y,
    UNIT_Z,
    ParabolaParams,
    UnitQuat,
    Vec3,
    angle_between,
    slerp,
    wrap_deg,
    yaw_of,
)
from .kernel import (
    GazeSample,
    InputFrame,
    KernelConfig,
    OrientationMethod,
    Pose,
    SwitchMethod,
    config_from_json,
    config_to_json,
)
from .scene import StudyScene, TrialSceneSpec, build_study_scene
from .harness import TrialSpec

__all__ = [
    "Trace",
    "TraceFormatError",
    "TraceHeader",
    "SyntheticUserParams",
    "frame_from_json",
    "frame_to_json",
    "read_trace",
    "solve_launch_dir",
    "synth_trace",
    "write_trace",
]

# Fixed body geometry of the scripted user, in the world frame before any
# teleport: eye height and a natural right-hand stylus rest position.
EYE_OFFSET = Vec3(0.0, 1.6, 0.0)
STYLUS_HOME = Vec3(0.15, 1.1, 0.25)


class TraceFormatError(ValueError):
    """Trace input that violates the JSONL wire format."""


@dataclass(frozen=True)
class TraceHeader:
    """Everything needed to replay the frames: config, scene recipe, seed."""

    config: KernelConfig
    depth: float
    rotation_deg: float
    seed: int

    def scene(self) -> StudyScene:
        return build_study_scene(
            TrialSceneSpec(depth=self.depth, rotation_deg=self.rotation_deg)
        )


@dataclass(frozen=True)
class Trace:
    header: TraceHeader
    frames: tuple[InputFrame, ...]

    def __post_init__(self) -> None:
        if not self.frames:
            raise ValueError("trace has no frames")
        if self.frames[0].t != 0.0:
            raise ValueError(f"first frame must be at t=0, got {self.frames[0].t}")
        prev = self.frames[0].t
        for f in self.frames[1:]:
            if f.t <= prev:
                raise ValueError(f"frame times must increase, got {f.t} after {prev}")
            prev = f.t


@dataclass(frozen=True)
class SyntheticUserParams:
    """Motor and sensory model of the scripted participant.

    gaze_noise_deg is the angular error sd of a single gaze sample; the
    default matches the 2.68 degree mean accuracy typical of a headset eye
    tracker. aim_noise_deg perturbs each launch solution once per trial.
    Zero noise makes every trial geometrically exact.
    """

    reaction_mean_ms: float = 300.0
    reaction_sd_ms: float = 60.0
    aim_noise_deg: float = 1.0
    gaze_noise_deg: float = 2.68
    hold_mean_ms: float = 500.0
    hold_sd_ms: float = 80.0
    frame_rate: float = 90.0

    def __post_init__(self) -> None:
        for name in ("reaction_mean_ms", "hold_mean_ms", "frame_rate"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        for name in ("reaction_sd_ms", "aim_noise_deg", "gaze_noise_deg", "hold_sd_ms"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")


# -- JSONL wire format -------------------------------------------------------

def _vec_json(v: Vec3) -> list[float]:
    return [v.x, v.y, v.z]


def frame_to_json(frame: InputFrame) -> dict:
    data: dict = {
        "t": frame.t,
        "stylus": {
            "p": _vec_json(frame.stylus.position),
            "q": list(frame.stylus.orientation.as_tuple()),
            "front": frame.front_button,
            "rear": frame.rear_button,
        },
        "head": {
            "p": _vec_json(frame.head.position),
            "q": list(frame.head.orientation.as_tuple()),
        },
    }
    if frame.gaze is not None:
        data["gaze"] = {
            "o": _vec_json(frame.gaze.origin),
            "d": _vec_json(frame.gaze.direction),
            "valid": frame.gaze.valid,
        }
    return data


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _parse_vec(value: object, where: str) -> Vec3:
    if not isinstance(value, list) or len(value) != 3 or not all(map(_is_number, value)):
        raise TraceFormatError(f"{where}: expected [x, y, z] numbers")
    return Vec3(float(value[0]), float(value[1]), float(value[2]))


def _parse_quat(value: object, where: str) -> UnitQuat:
    if not isinstance(value, list) or len(value) != 4 or not all(map(_is_number, value)):
        raise TraceFormatError(f"{where}: expected [w, x, y, z] numbers")
    try:
        return UnitQuat(float(value[0]), float(value[1]), float(value[2]), float(value[3]))
    except ValueError as exc:
        raise TraceFormatError(f"{where}: {exc}") from exc


def _check_keys(data: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise TraceFormatError(f"{where}: unknown field {sorted(unknown)[0]!r}")
    missing = required - set(data)
    if missing:
        raise TraceFormatError(f"{where}: missing field {sorted(missing)[0]!r}")


def frame_from_json(data: object, where: str = "frame") -> InputFrame:
    """Parse one frame object, rejecting unknown or missing fields."""
    if not isinstance(data, dict):
        raise TraceFormatError(f"{where}: expected a JSON object")
    _check_keys(data, {"t", "stylus", "head", "gaze"}, {"t", "stylus", "head"}, where)
    if not _is_number(data["t"]):
        raise TraceFormatError(f"{where}.t: expected a number")
    stylus = data["stylus"]
    if not isinstance(stylus, dict):
        raise TraceFormatError(f"{where}.stylus: expected an object")
    _check_keys(
        stylus, {"p", "q", "front", "rear"}, {"p", "q", "front", "rear"}, f"{where}.stylus"
    )
    if not isinstance(stylus["front"], bool) or not isinstance(stylus["rear"], bool):
        raise TraceFormatError(f"{where}.stylus: front and rear must be booleans")
    head = data["head"]
    if not isinstance(head, dict):
        raise TraceFormatError(f"{where}.head: expected an object")
    _check_keys(head, {"p", "q"}, {"p", "q"}, f"{where}.head")
    gaze: Optional[GazeSample] = None
    if "gaze" in data:
        g = data["gaze"]
        if not isinstance(g, dict):
            raise TraceFormatError(f"{where}.gaze: expected an object")
        _check_keys(g, {"o", "d", "valid"}, {"o", "d", "valid"}, f"{where}.gaze")
        if not isinstance(g["valid"], bool):
            raise TraceFormatError(f"{where}.gaze.valid: expected a boolean")
        gaze = GazeSample(
            origin=_parse_vec(g["o"], f"{where}.gaze.o"),
            direction=_parse_vec(g["d"], f"{where}.gaze.d"),
            valid=g["valid"],
        )
    return InputFrame(
        t=float(data["t"]),
        stylus=Pose(
            position=_parse_vec(stylus["p"], f"{where}.stylus.p"),
            orientation=_parse_quat(stylus["q"], f"{where}.stylus.q"),
        ),
        head=Pose(
            position=_parse_vec(head["p"], f"{where}.head.p"),
            orientation=_parse_quat(head["q"], f"{where}.head.q"),
        ),
        front_button=stylus["front"],
        rear_button=stylus["rear"],
        gaze=gaze,
    )


def _header_to_json(header: TraceHeader) -> dict:
    return {
        "kind": "header",
        "config": config_to_json(header.config),
        "scene": {"study": {"depth": header.depth, "rotation_deg": header.rotation_deg}},
        "seed": header.seed,
    }


def _header_from_json(data: object) -> TraceHeader:
    if not isinstance(data, dict):
        raise TraceFormatError("header: expected a JSON object")
    _check_keys(data, {"kind", "config", "scene", "seed"}, {"kind", "config", "scene", "seed"}, "header")
    if data["kind"] != "header":
        raise TraceFormatError(f"header: kind must be 'header', got {data['kind']!r}")
    try:
        config = config_from_json(data["config"])
    except ValueError as exc:
        raise TraceFormatError(f"header.config: {exc}") from exc
    scene = data["scene"]
    if not isinstance(scene, dict):
        raise TraceFormatError("header.scene: expected an object")
    _check_keys(scene, {"study"}, {"study"}, "header.scene")
    study = scene["study"]
    if not isinstance(study, dict):
        raise TraceFormatError("header.scene.study: expected an object")
    _check_keys(study, {"depth", "rotation_deg"}, {"depth", "rotation_deg"}, "header.scene.study")
    if not (_is_number(study["depth"]) and _is_number(study["rotation_deg"])):
        raise TraceFormatError("header.scene.study: depth and rotation_deg must be numbers")
    if not isinstance(data["seed"], int) or isinstance(data["seed"], bool):
        raise TraceFormatError("header.seed: expected an integer")
    return TraceHeader(
        config=config,
        depth=float(study["depth"]),
        rotation_deg=float(study["rotation_deg"]),
        seed=data["seed"],
    )


Source = Union[str, os.PathLike, IO[str]]


def write_trace(trace: Trace, dest: Source) -> None:
    """Write the header line followed by one frame per line."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            write_trace(trace, fh)
        return
    dest.write(json.dumps(_header_to_json(trace.header), separators=(",", ":")) + "\n")
    for frame in trace.frames:
        dest.write(json.dumps(frame_to_json(frame), separators=(",", ":")) + "\n")


def _numbered_lines(source: Source) -> Iterator[tuple[int, str]]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from enumerate(fh, start=1)
        return
    yield from enumerate(source, start=1)


def read_trace(source: Source) -> Trace:
    """Parse a JSONL trace; every error names the offending line."""
    header: Optional[TraceHeader] = None
    frames: list[InputFrame] = []
    prev_t: Optional[float] = None
    for lineno, raw in _numbered_lines(source):
        line = raw.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
        try:
            if header is None:
                header = _header_from_json(data)
                continue
            frame = frame_from_json(data)
        except TraceFormatError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from exc
        if prev_t is not None and frame.t <= prev_t:
            raise TraceFormatError(
                f"line {lineno}: t must increase, got {frame.t} after {prev_t}"
            )
        if prev_t is None and frame.t != 0.0:
            raise TraceFormatError(f"line {lineno}: first frame must be at t=0")
        prev_t = frame.t
        frames.append(frame)
    if header is None:
        raise TraceFormatError("empty trace: missing header line")
    if not frames:
        raise TraceFormatError("empty trace: no frames after the header")
    return Trace(header=header, frames=tuple(frames))


# -- synthetic user ----------------------------------------------------------

def solve_launch_dir(origin: Vec3, target: Vec3, params: ParabolaParams) -> Vec3:
    """Unit launch direction whose arc passes through target (low branch).

    Solves the inverse ballistic problem for the flatter of the two firing
    solutions and checks the flight stays inside max_fall_time.
    """
    dx = target.x - origin.x
    dz = target.z - origin.z
    reach = math.hypot(dx, dz)
    if reach < 1e-9:
        raise ValueError("target is directly above or below the origin")
    dy = target.y - origin.y
    s = params.speed
    a = params.gravity * reach * reach / (2.0 * s * s)
    disc = reach * reach - 4.0 * a * (dy + a)
    if disc < 0.0:
        raise ValueError(f"target {target} out of ballistic reach from {origin}")
    pitch = math.atan((reach - math.sqrt(disc)) / (2.0 * a))
    flight = reach / (s * math.cos(pitch))
    if flight > params.max_fall_time:
        raise ValueError(f"flight time {flight:.3f}s exceeds the arc cap")
    cos_p = math.cos(pitch)
    return Vec3(dx / reach * cos_p, math.sin(pitch), dz / reach * cos_p)


def _aim_quat(direction: Vec3) -> UnitQuat:
    """Minimal rotation taking local +z onto the given unit direction."""
    c = UNIT_Z.dot(direction)
    axis = UNIT_Z.cross(direction)
    s = axis.norm()
    if s < 1e-12:
        if c > 0.0:
            return UnitQuat.identity()
        return UnitQuat.from_axis_angle(UNIT_X, 180.0)
    return UnitQuat.from_axis_angle(axis, math.degrees(math.atan2(s, c)))


def _smooth(u: float) -> float:
    # quintic ease: zero velocity and acceleration at both ends, exact at u=1
    return u * u * u * (10.0 + u * (6.0 * u - 15.0))


def _perturb_dir(rng: random.Random, direction: Vec3, sd_deg: float) -> Vec3:
    """Tilt a unit direction by independent gaussian angles on two axes."""
    if sd_deg == 0.0:
        return direction
    helper = UNIT_Y if abs(direction.y) < 0.9 else UNIT_X
    u = direction.cross(helper).normalized()
    v = direction.cross(u)
    e1 = rng.gauss(0.0, math.radians(sd_deg))
    e2 = rng.gauss(0.0, math.radians(sd_deg))
    return (direction + u.scaled(e1) + v.scaled(e2)).normalized()


def _yaw_dir(yaw_deg: float) -> Vec3:
    r = math.radians(yaw_deg)
    return Vec3(math.sin(r), 0.0, math.cos(r))


def _orientation_target(scene: StudyScene, rotation_deg: float) -> Vec3:
    """Surface point whose bearing from the marker equals the trial rotation.

    At the 45 degree rotations the sphere midpoint on the blackboard face is
    aimed at directly. The other rotations use a stand-in on the ground one
    meter out along the target bearing: at 180 an arc bound for the midpoint
    would clip the board front-on before reaching it, and at |90| the board
    stands edge-on to the user, so the gaze ray runs inside its plane and
    cannot strike it while the second arc grazes it at an angle where tiny
    aim errors sweep the contact point across the whole face.
    """
    psi = yaw_of(scene.sphere_midpoint - scene.marker)
    if rotation_deg == 180.0 or abs(rotation_deg) == 90.0:
        return scene.marker + _yaw_dir(psi)
    return scene.sphere_midpoint


@dataclass
class _FrameDraft:
    stylus_p: Vec3
    stylus_q: UnitQuat
    head_p: Vec3
    head_q: UnitQuat
    front: bool = False
    rear: bool = False
    gaze_d: Optional[Vec3] = None
    gaze_o: Optional[Vec3] = None


def synth_trace(trial: TrialSpec, user: SyntheticUserParams, seed: int) -> Trace:
    """Deterministic scripted performance of one study trial."""
    config = KernelConfig(
        switch_method=trial.switch, orientation_method=trial.orient
    )
    scene = build_study_scene(
        TrialSceneSpec(depth=trial.depth, rotation_deg=trial.rotation_deg)
    )
    rng = random.Random(seed)
    frame_ms = 1000.0 / user.frame_rate
    flip = trial.switch is SwitchMethod.FLIP
    gaze_method = trial.orient is OrientationMethod.GAZE_POINT

    def frames_for(duration_ms: float, minimum: int) -> int:
        return max(minimum, round(duration_ms / frame_ms))

    n_react = frames_for(rng.gauss(user.reaction_mean_ms, user.reaction_sd_ms), 2)
    n_hold_wanted = frames_for(rng.gauss(user.hold_mean_ms, user.hold_sd_ms), 1)

    # Launch solution for the positioning arc, from the fixed stylus rest
    # position to the ground marker. aim_noise tilts it once per trial.
    dir_pos = solve_launch_dir(STYLUS_HOME, scene.marker, config.parabola)
    dir_pos = _perturb_dir(rng, dir_pos, user.aim_noise_deg)

    psi = yaw_of(scene.sphere_midpoint - scene.marker)
    target = _orientation_target(scene, trial.rotation_deg)
    roll_twist = 0.0
    dir_orient = dir_pos
    gaze_dir = UNIT_Z
    if trial.orient is OrientationMethod.ROLL:
        psi_cmd = psi if user.aim_noise_deg == 0.0 else wrap_deg(
            psi + rng.gauss(0.0, user.aim_noise_deg)
        )
        # initial head yaw is 0 pre-teleport, so the needed twist is psi/gain
        roll_twist = wrap_deg(psi_cmd) / config.roll_gain
        yaw_hat = psi_cmd
    elif trial.orient is OrientationMethod.STYLUS_POINT:
        dir_orient = solve_launch_dir(STYLUS_HOME, target, config.parabola)
        dir_orient = _perturb_dir(rng, dir_orient, user.aim_noise_deg)
        yaw_hat = psi
    else:
        gaze_dir = (target - EYE_OFFSET).normalized()
        yaw_hat = psi

    gaze_sd = user.gaze_noise_deg / math.sqrt(2.0)
    eye_pre = EYE_OFFSET
    board_center = Vec3(0.0, 1.05, trial.depth)
    gaze_rest = (board_center - eye_pre).normalized()

    q_rest = _aim_quat(Vec3(0.1, -0.25, 0.96).normalized())
    q_aim = _aim_quat(-dir_pos) if flip else _aim_quat(dir_pos)
    q_orient_end = _aim_quat(-dir_orient) if flip else _aim_quat(dir_orient)

    drafts: list[_FrameDraft] = []

    def rest_frame() -> _FrameDraft:
        return _FrameDraft(
            stylus_p=STYLUS_HOME,
            stylus_q=q_rest,
            head_p=eye_pre,
            head_q=UnitQuat.identity(),
        )

    for _ in range(n_react):
        drafts.append(rest_frame())

    if flip:
        # Rotate the tip straight away from the head's +z by a fixed 145
        # degrees, so the latch angle climbs monotonically through flip_on.
        tip_rest = q_rest.rotate(UNIT_Z)
        axis_in = UNIT_Z.cross(tip_rest).normalized()
        q_before_aim = q_rest
        for i in range(8):
            d = rest_frame()
            d.stylus_q = (
                UnitQuat.from_axis_angle(axis_in, 145.0 * _smooth((i + 1) / 8.0))
                * q_rest
            )
            drafts.append(d)
            q_before_aim = d.stylus_q
    else:
        d = rest_frame()
        d.rear = True
        drafts.append(d)
        drafts.append(rest_frame())
        q_before_aim = q_rest

    for _ in range(3):
        d = rest_frame()
        d.stylus_q = q_before_aim
        drafts.append(d)

    n_aim = 24
    for i in range(n_aim):
        d = rest_frame()
        d.stylus_q = slerp(q_before_aim, q_aim, _smooth((i + 1) / n_aim))
        drafts.append(d)

    # Hold phase. The kernel classifies the press as a hold on the first
    # frame at or past the threshold; replicate that scan on the actual
    # timestamp grid so the orientation ramp starts exactly at classification.
    press_index = len(drafts)
    t_press = press_index * frame_ms
    classify_k = 1
    while (press_index + classify_k) * frame_ms - t_press < config.hold_threshold_ms:
        classify_k += 1
    n_hold = max(n_hold_wanted, classify_k + 3)

    for j in range(n_hold):
        d = rest_frame()
        d.front = True
        d.stylus_q = q_aim
        if j >= classify_k:
            u = _smooth((j - classify_k) / (n_hold - 1 - classify_k))
            if trial.orient is OrientationMethod.ROLL:
                d.stylus_q = q_aim * UnitQuat.from_axis_angle(UNIT_Z, roll_twist * u)
            elif trial.orient is OrientationMethod.STYLUS_POINT:
                d.stylus_q = slerp(q_aim, q_orient_end, u)
        drafts.append(d)

    release = rest_frame()
    release.stylus_q = drafts[-1].stylus_q
    drafts.append(release)

    # Gaze stream: at the board before the press, on the orientation target
    # from the press frame on, one noisy sample per frame.
    if gaze_method:
        for idx, d in enumerate(drafts):
            base = gaze_dir if idx >= press_index else gaze_rest
            d.gaze_o = eye_pre
            d.gaze_d = _perturb_dir(rng, base, gaze_sd)

    # After the commit the virtual user stands at the marker facing yaw_hat,
    # so every tracked world pose jumps with them.
    user_q = UnitQuat.from_yaw(yaw_hat)
    eye_post = scene.marker + EYE_OFFSET
    stylus_post = scene.marker + user_q.rotate(STYLUS_HOME)

    def post_frame(stylus_q: UnitQuat) -> _FrameDraft:
        d = _FrameDraft(
            stylus_p=stylus_post,
            stylus_q=stylus_q,
            head_p=eye_post,
            head_q=user_q,
        )
        if gaze_method:
            d.gaze_o = eye_post
            d.gaze_d = user_q.rotate(UNIT_Z)
        return d

    q_settle = drafts[-1].stylus_q
    for _ in range(2):
        drafts.append(post_frame(q_settle))

    if flip:
        # Rotate the tip onto the new forward direction about a fixed axis;
        # the angle to the head's forward falls monotonically through
        # flip_off. If the commit already left the tip inside the release
        # cone the mode switched on the settle frames and these are inert.
        fwd = user_q.rotate(UNIT_Z)
        tip_now = q_settle.rotate(UNIT_Z)
        swing = angle_between(tip_now, fwd)
        axis_cross = tip_now.cross(fwd)
        if axis_cross.norm() < 1e-9:
            axis_out = fwd.cross(UNIT_Y)
            axis_out = axis_out if axis_out.norm() > 1e-9 else UNIT_X
        else:
            axis_out = axis_cross
        axis_out = axis_out.normalized()
        for i in range(6):
            q = UnitQuat.from_axis_angle(axis_out, swing * _smooth((i + 1) / 6.0))
            drafts.append(post_frame(q * q_settle))
    else:
        d = post_frame(q_settle)
        d.rear = True
        drafts.append(d)
        drafts.append(post_frame(q_settle))

    for _ in range(2):
        drafts.append(post_frame(user_q))

    n_stroke = 12
    stroke_sd = user.aim_noise_deg * 0.005
    for i in range(n_stroke):
        d = post_frame(user_q)
        p = scene.sphere_a.lerp(scene.sphere_b, i / (n_stroke - 1))
        if stroke_sd > 0.0:
            p = p + Vec3(
                rng.gauss(0.0, stroke_sd),
                rng.gauss(0.0, stroke_sd),
                rng.gauss(0.0, stroke_sd),
            )
        d.stylus_p = p
        d.front = True
        drafts.append(d)

    for _ in range(2):
        drafts.append(post_frame(user_q))

    frames = tuple(
        InputFrame(
            t=i * frame_ms,
            stylus=Pose(position=d.stylus_p, orientation=d.stylus_q),
            head=Pose(position=d.head_p, orientation=d.head_q),
            front_button=d.front,
            rear_button=d.rear,
            gaze=(
                GazeSample(origin=d.gaze_o, direction=d.gaze_d, valid=True)
                if d.gaze_d is not None
                else None
            ),
        )
        for i, d in enumerate(drafts)
    )
    return Trace(
        header=TraceHeader(
            config=config, depth=trial.depth, rotation_deg=trial.rotation_deg, seed=seed
        ),
        frames=frames,
    )
