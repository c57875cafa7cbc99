"""Trial harness: study design, trace replay, metrics, and summary stats.

The study crosses 2 switch methods x 3 orientation methods x 2 depths x
5 board rotations with 2 repetitions, blocked by technique pair. Replaying a
trace through the kernel yields a TrialLog of timestamped events; metrics
split the trial into switch-in, positioning, orientation, and switch-out
segments and score the final pose against the scene targets.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import t as _student_t

from .geom import Vec3, wrap_deg, yaw_of
from .kernel import (
    InputFrame,
    KernelConfig,
    KernelEvent,
    KernelState,
    Mode,
    ModeSwitched,
    OrientHold,
    OrientationMethod,
    SwitchMethod,
    TeleportCommitted,
    initial_state,
    step,
)
from .scene import STUDY_DEPTHS, STUDY_ROTATIONS, Scene, TrialSceneSpec, build_study_scene

if TYPE_CHECKING:
    from .trace import Trace

__all__ = [
    "ConditionSummary",
    "Stroke",
    "TrialLog",
    "TrialMetrics",
    "TrialSpec",
    "aggregate",
    "check_stroke",
    "generate_design",
    "holm_bonferroni",
    "iqr_filter",
    "run_frames",
    "run_trial",
]

_ORIENT_CYCLE = (
    OrientationMethod.ROLL,
    OrientationMethod.STYLUS_POINT,
    OrientationMethod.GAZE_POINT,
)


@dataclass(frozen=True)
class TrialSpec:
    participant: int
    switch: SwitchMethod
    orient: OrientationMethod
    depth: float
    rotation_deg: float
    rep: int

    def __post_init__(self) -> None:
        if self.participant < 0:
            raise ValueError("participant index must be non-negative")
        if self.depth not in STUDY_DEPTHS:
            raise ValueError(f"depth must be one of {STUDY_DEPTHS}, got {self.depth}")
        if self.rotation_deg not in STUDY_ROTATIONS:
            raise ValueError(
                f"rotation_deg must be one of {STUDY_ROTATIONS}, got {self.rotation_deg}"
            )
        if self.rep not in (0, 1):
            raise ValueError(f"rep must be 0 or 1, got {self.rep}")


def generate_design(participant: int) -> list[TrialSpec]:
    """All 120 trials for one participant, in presentation order.

    Orientation blocks follow the participant's row of a cyclic 3x3 Latin
    square; within each, the two switch methods alternate starting order by
    participant parity. Every block shuffles its 20 trials (2 depths x 5
    rotations x 2 reps) with a seed derived from participant and block, so
    the same index always yields the same plan.
    """
    if participant < 0:
        raise ValueError("participant index must be non-negative")
    row = participant % 3
    orient_order = [_ORIENT_CYCLE[(row + i) % 3] for i in range(3)]
    if participant % 2 == 0:
        switch_order = (SwitchMethod.BUTTON, SwitchMethod.FLIP)
    else:
        switch_order = (SwitchMethod.FLIP, SwitchMethod.BUTTON)

    trials: list[TrialSpec] = []
    block = 0
    for orient in orient_order:
        for switch in switch_order:
            cells = [
                (depth, rot)
                for depth in STUDY_DEPTHS
                for rot in STUDY_ROTATIONS
                for _ in range(2)
            ]
            rng = random.Random(1009 * (participant + 1) + block)
            rng.shuffle(cells)
            seen: dict[tuple[float, float], int] = {}
            for depth, rot in cells:
                rep = seen.get((depth, rot), 0)
                seen[(depth, rot)] = rep + 1
                trials.append(
                    TrialSpec(
                        participant=participant,
                        switch=switch,
                        orient=orient,
                        depth=depth,
                        rotation_deg=rot,
                        rep=rep,
                    )
                )
            block += 1
    return trials


# -- replay ------------------------------------------------------------------

@dataclass(frozen=True)
class Stroke:
    start_t: float
    points: tuple[Vec3, ...]


@dataclass(frozen=True)
class TrialLog:
    """Timestamped kernel events plus draw strokes and press times."""

    events: tuple[tuple[float, KernelEvent], ...]
    presses: tuple[float, ...]
    strokes: tuple[Stroke, ...]
    final_state: KernelState


def run_frames(
    frames: Sequence[InputFrame], config: KernelConfig, scene: Scene
) -> TrialLog:
    """Feed frames through the kernel and log everything a trial needs."""
    state = initial_state(scene)
    events: list[tuple[float, KernelEvent]] = []
    presses: list[float] = []
    strokes: list[Stroke] = []
    pen_down: Optional[tuple[float, list[Vec3]]] = None

    for frame in frames:
        was_holding = isinstance(state.phase, OrientHold)
        state, evs = step(state, frame, config, scene)
        events.extend((frame.t, e) for e in evs)
        if not was_holding and isinstance(state.phase, OrientHold):
            presses.append(frame.t)
        drawing = state.mode is Mode.DRAW and frame.front_button
        if drawing:
            if pen_down is None:
                pen_down = (frame.t, [])
            pen_down[1].append(frame.stylus.position)
        elif pen_down is not None:
            strokes.append(Stroke(start_t=pen_down[0], points=tuple(pen_down[1])))
            pen_down = None
    if pen_down is not None:
        strokes.append(Stroke(start_t=pen_down[0], points=tuple(pen_down[1])))

    return TrialLog(
        events=tuple(events),
        presses=tuple(presses),
        strokes=tuple(strokes),
        final_state=state,
    )


@dataclass(frozen=True)
class TrialMetrics:
    """Per-trial timing split and accuracy scores.

    Timing fields are None when the trace never finished the trial (no
    teleport, no commit, or no switch back to draw mode); such a trial is
    marked incomplete rather than raising.
    """

    complete: bool
    switch_in_ms: Optional[float]
    positioning_ms: Optional[float]
    orientation_ms: Optional[float]
    switch_out_ms: Optional[float]
    task_ms: Optional[float]
    pos_err_m: Optional[float]
    ori_err_deg: Optional[float]
    success: bool


def check_stroke(points: Sequence[Vec3], center: Vec3, radius: float) -> bool:
    """True if the polyline passes within radius of center (boundary counts)."""
    if not points:
        return False
    best = (points[0] - center).norm()
    for a, b in zip(points, points[1:]):
        ab = b - a
        denom = ab.dot(ab)
        if denom > 0.0:
            s = min(1.0, max(0.0, (center - a).dot(ab) / denom))
            candidate = (a + ab.scaled(s) - center).norm()
        else:
            candidate = (a - center).norm()
        best = min(best, candidate)
    return best <= radius


def _incomplete() -> TrialMetrics:
    return TrialMetrics(
        complete=False,
        switch_in_ms=None,
        positioning_ms=None,
        orientation_ms=None,
        switch_out_ms=None,
        task_ms=None,
        pos_err_m=None,
        ori_err_deg=None,
        success=False,
    )


def run_trial(
    spec: TrialSpec, trace: "Trace", config: Optional[KernelConfig] = None
) -> tuple[TrialLog, TrialMetrics]:
    """Replay a trace against the spec's scene and score it.

    The timing split is switch-in (start to teleport mode), positioning
    (to the press), orientation (to the commit), and switch-out (back to
    draw mode); task time is their sum, excluding the drawing that follows.
    """
    if config is None:
        config = KernelConfig(switch_method=spec.switch, orientation_method=spec.orient)
    scene_spec = TrialSceneSpec(depth=spec.depth, rotation_deg=spec.rotation_deg)
    scene = build_study_scene(scene_spec)
    log = run_frames(trace.frames, config, scene)

    switch_in_t: Optional[float] = None
    commit_t: Optional[float] = None
    commit: Optional[TeleportCommitted] = None
    switch_out_t: Optional[float] = None
    for t, event in log.events:
        if isinstance(event, ModeSwitched):
            if event.mode is Mode.TELEPORT and switch_in_t is None:
                switch_in_t = t
            elif event.mode is Mode.DRAW and commit_t is not None and switch_out_t is None:
                switch_out_t = t
        elif isinstance(event, TeleportCommitted) and commit_t is None:
            commit_t = t
            commit = event

    press_t: Optional[float] = None
    if commit_t is not None:
        before = [p for p in log.presses if p <= commit_t]
        press_t = before[-1] if before else None

    if None in (switch_in_t, press_t, commit_t, switch_out_t) or commit is None:
        return log, _incomplete()

    dx = commit.position.x - scene.marker.x
    dz = commit.position.z - scene.marker.z
    pos_err = math.hypot(dx, dz)
    bearing = yaw_of(scene.sphere_midpoint - commit.position)
    ori_err = abs(wrap_deg(commit.yaw_deg - bearing))
    success = any(
        stroke.start_t > commit_t
        and check_stroke(stroke.points, scene.sphere_a, scene_spec.sphere_radius)
        and check_stroke(stroke.points, scene.sphere_b, scene_spec.sphere_radius)
        for stroke in log.strokes
    )
    return log, TrialMetrics(
        complete=True,
        switch_in_ms=switch_in_t,
        positioning_ms=press_t - switch_in_t,
        orientation_ms=commit_t - press_t,
        switch_out_ms=switch_out_t - commit_t,
        task_ms=switch_out_t,
        pos_err_m=pos_err,
        ori_err_deg=ori_err,
        success=success,
    )


# -- statistics --------------------------------------------------------------

def iqr_filter(values: Sequence[float]) -> list[bool]:
    """Keep-mask under Tukey fences at 1.5 IQR, quartiles per type-7.

    Values on a fence are kept. Needs at least four observations for the
    quartiles to mean anything.
    """
    if len(values) < 4:
        raise ValueError("iqr_filter needs at least 4 values")
    arr = np.asarray(values, dtype=np.float64)
    q1, q3 = np.quantile(arr, [0.25, 0.75])
    spread = q3 - q1
    lo = q1 - 1.5 * spread
    hi = q3 + 1.5 * spread
    return [bool(lo <= v <= hi) for v in arr]


def holm_bonferroni(
    pvalues: Sequence[float], alpha: float = 0.05
) -> tuple[list[float], list[bool]]:
    """Step-down Holm adjustment; returns adjusted p-values and rejections.

    Rejection means adjusted p <= alpha. Input order is preserved.
    """
    m = len(pvalues)
    if m == 0:
        return [], []
    for p in pvalues:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value out of range: {p}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha out of range: {alpha}")
    order = sorted(range(m), key=lambda i: pvalues[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, (m - rank) * pvalues[i])
        adjusted[i] = min(1.0, running)
    reject = [adj <= alpha for adj in adjusted]
    return adjusted, reject


@dataclass(frozen=True)
class ConditionSummary:
    key: tuple
    n: int
    mean: float
    sd: float
    ci_half_width: float


def aggregate(groups: Mapping[tuple, Sequence[float]]) -> list[ConditionSummary]:
    """Mean, sample sd, and 95 percent t-interval half-width per group.

    Every group needs at least two observations; a singleton has no spread
    to estimate and is reported as an error instead of a zero.
    """
    summaries: list[ConditionSummary] = []
    for key in sorted(groups):
        data = np.asarray(groups[key], dtype=np.float64)
        n = data.shape[0]
        if n < 2:
            raise ValueError(f"group {key!r} has fewer than 2 observations")
        mean = float(np.mean(data))
        sd = float(np.std(data, ddof=1))
        half = float(_student_t.ppf(0.975, n - 1) * sd / math.sqrt(n))
        summaries.append(
            ConditionSummary(key=key, n=n, mean=mean, sd=sd, ci_half_width=half)
        )
    return summaries
