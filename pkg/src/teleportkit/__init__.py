"""Deterministic stylus teleportation kernel with a study harness and CLI."""

from .geom import (
    DegenerateDirectionError,
    Hit,
    ParabolaParams,
    UnitQuat,
    Vec3,
    angle_between,
    intersect_parabola,
    intersect_ray,
    parabola_point,
    slerp,
    twist_delta,
    wrap_deg,
    yaw_of,
)
from .scene import (
    Box,
    GroundPlane,
    Quad,
    Scene,
    SceneFormatError,
    SceneObject,
    StudyScene,
    TrialSceneSpec,
    build_study_scene,
    mark_penetrated,
    scene_from_json,
    scene_to_json,
)
from .kernel import (
    CursorUpdated,
    GazeSample,
    HoldStarted,
    InputFrame,
    KernelConfig,
    KernelEvent,
    KernelState,
    Mode,
    ModeSwitched,
    OrientationMethod,
    OrientationPreview,
    Pose,
    PressKind,
    SwitchDenied,
    SwitchMethod,
    TeleportCommitted,
    classify_press,
    config_from_json,
    config_to_json,
    detect_flip,
    event_to_json,
    initial_state,
    step,
)
from .trace import (
    SyntheticUserParams,
    Trace,
    TraceFormatError,
    TraceHeader,
    read_trace,
    synth_trace,
    write_trace,
)
from .harness import (
    ConditionSummary,
    TrialLog,
    TrialMetrics,
    TrialSpec,
    aggregate,
    check_stroke,
    generate_design,
    holm_bonferroni,
    iqr_filter,
    run_frames,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateDirectionError",
    "Hit",
    "ParabolaParams",
    "UnitQuat",
    "Vec3",
    "angle_between",
    "intersect_parabola",
    "intersect_ray",
    "parabola_point",
    "slerp",
    "twist_delta",
    "wrap_deg",
    "yaw_of",
    "Box",
    "GroundPlane",
    "Quad",
    "Scene",
    "SceneFormatError",
    "SceneObject",
    "StudyScene",
    "TrialSceneSpec",
    "build_study_scene",
    "mark_penetrated",
    "scene_from_json",
    "scene_to_json",
    "CursorUpdated",
    "GazeSample",
    "HoldStarted",
    "InputFrame",
    "KernelConfig",
    "KernelEvent",
    "KernelState",
    "Mode",
    "ModeSwitched",
    "OrientationMethod",
    "OrientationPreview",
    "Pose",
    "PressKind",
    "SwitchDenied",
    "SwitchMethod",
    "TeleportCommitted",
    "classify_press",
    "config_from_json",
    "config_to_json",
    "detect_flip",
    "event_to_json",
    "initial_state",
    "step",
    "SyntheticUserParams",
    "Trace",
    "TraceFormatError",
    "TraceHeader",
    "read_trace",
    "synth_trace",
    "write_trace",
    "ConditionSummary",
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
    "__version__",
]
