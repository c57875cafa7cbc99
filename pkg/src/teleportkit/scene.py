"""Scene model: corridor study geometry, permeability, JSON round-trip."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Iterable, Union

from .geom import Collider, ColliderSet, UnitQuat, Vec3, wrap_deg

__all__ = [
    "GroundPlane",
    "Box",
    "Quad",
    "Shape",
    "SceneObject",
    "Scene",
    "StudyScene",
    "TrialSceneSpec",
    "SceneFormatError",
    "build_study_scene",
    "mark_penetrated",
    "scene_to_json",
    "scene_from_json",
]

STUDY_DEPTHS = (3.0, 6.0)
STUDY_ROTATIONS = (45.0, -45.0, 90.0, -90.0, 180.0)


@dataclass(frozen=True)
class GroundPlane:
    """Infinite horizontal plane, normal +y."""


@dataclass(frozen=True)
class Box:
    half_extents: Vec3

    def __post_init__(self) -> None:
        h = self.half_extents
        if min(h.x, h.y, h.z) <= 0.0:
            raise ValueError("box half_extents must be positive")


@dataclass(frozen=True)
class Quad:
    """Bounded vertical rectangle; local normal +z, width along local x."""

    width: float
    height: float

    def __post_init__(self) -> None:
        if self.width <= 0.0 or self.height <= 0.0:
            raise ValueError("quad width and height must be positive")


Shape = Union[GroundPlane, Box, Quad]


@dataclass(frozen=True)
class SceneObject:
    """A posed shape. Orientation is yaw-only, which is all the wire format
    carries; the full rotation is available as a quaternion property."""

    id: str
    shape: Shape
    position: Vec3
    yaw_deg: float = 0.0
    permeable: bool = False
    alpha: float = 1.0
    translucent_now: bool = False

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("object id must be non-empty")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"object {self.id!r}: alpha must be in (0, 1]")

    @property
    def rotation(self) -> UnitQuat:
        return UnitQuat.from_yaw(self.yaw_deg)


def _compile_object(obj: SceneObject) -> list[Collider]:
    yaw = math.radians(obj.yaw_deg)
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    ax_x = Vec3(cos_y, 0.0, -sin_y)   # local +x in world
    ax_z = Vec3(sin_y, 0.0, cos_y)    # local +z in world
    if isinstance(obj.shape, GroundPlane):
        return [
            Collider(obj.id, obj.permeable, "plane", obj.position, Vec3(0.0, 1.0, 0.0))
        ]
    if isinstance(obj.shape, Quad):
        return [
            Collider(
                obj.id,
                obj.permeable,
                "quad",
                obj.position,
                normal=ax_z,
                u_axis=ax_x,
                v_axis=Vec3(0.0, 1.0, 0.0),
                half_u=obj.shape.width * 0.5,
                half_v=obj.shape.height * 0.5,
            )
        ]
    # Box: six bounded faces, so casts only ever intersect planes.
    h = obj.shape.half_extents
    ax_y = Vec3(0.0, 1.0, 0.0)
    faces = [
        (ax_x, h.x, ax_z, h.z, ax_y, h.y),
        (-ax_x, h.x, ax_z, h.z, ax_y, h.y),
        (ax_y, h.y, ax_x, h.x, ax_z, h.z),
        (-ax_y, h.y, ax_x, h.x, ax_z, h.z),
        (ax_z, h.z, ax_x, h.x, ax_y, h.y),
        (-ax_z, h.z, ax_x, h.x, ax_y, h.y),
    ]
    out = []
    for normal, dist, u, half_u, v, half_v in faces:
        out.append(
            Collider(
                obj.id,
                obj.permeable,
                "quad",
                obj.position + normal.scaled(dist),
                normal=normal,
                u_axis=u,
                v_axis=v,
                half_u=half_u,
                half_v=half_v,
            )
        )
    return out


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]

    def __post_init__(self) -> None:
        seen = set()
        grounds = []
        for obj in self.objects:
            if obj.id in seen:
                raise ValueError(f"duplicate object id {obj.id!r}")
            seen.add(obj.id)
            if isinstance(obj.shape, GroundPlane):
                grounds.append(obj)
        if len(grounds) != 1:
            raise ValueError(f"scene needs exactly one ground plane, found {len(grounds)}")
        if grounds[0].position.y != 0.0:
            raise ValueError("ground plane must sit at y=0")

    @cached_property
    def colliders(self) -> ColliderSet:
        out: list[Collider] = []
        for obj in self.objects:
            out.extend(_compile_object(obj))
        return ColliderSet(out)

    @cached_property
    def _by_id(self) -> dict[str, SceneObject]:
        return {obj.id: obj for obj in self.objects}

    def object_by_id(self, object_id: str) -> SceneObject:
        try:
            return self._by_id[object_id]
        except KeyError:
            raise KeyError(f"no object with id {object_id!r}") from None

    @cached_property
    def ground_id(self) -> str:
        for obj in self.objects:
            if isinstance(obj.shape, GroundPlane):
                return obj.id
        raise ValueError("scene has no ground plane")


@dataclass(frozen=True)
class StudyScene(Scene):
    """Corridor trial scene plus its task anchors and start pose."""

    marker: Vec3 = Vec3(0.0, 0.0, 0.0)
    sphere_a: Vec3 = Vec3(0.0, 0.0, 0.0)
    sphere_b: Vec3 = Vec3(0.0, 0.0, 0.0)
    start_position: Vec3 = Vec3(0.0, 0.0, 0.0)
    start_yaw_deg: float = 0.0

    @property
    def sphere_midpoint(self) -> Vec3:
        return self.sphere_a.lerp(self.sphere_b, 0.5)


@dataclass(frozen=True)
class TrialSceneSpec:
    """Parameters of one corridor trial scene."""

    depth: float
    rotation_deg: float
    corridor_length: float = 70.0
    corridor_width: float = 8.0
    corridor_height: float = 3.0
    board_width: float = 2.0
    board_height: float = 1.5
    board_center_height: float = 1.05
    board_alpha: float = 0.88
    marker_offset: float = 0.5
    sphere_height: float = 1.0
    sphere_gap: float = 0.3
    sphere_radius: float = 0.05

    def __post_init__(self) -> None:
        if self.depth not in STUDY_DEPTHS:
            raise ValueError(f"depth must be one of {STUDY_DEPTHS}, got {self.depth}")
        if self.rotation_deg not in STUDY_ROTATIONS:
            raise ValueError(
                f"rotation_deg must be one of {STUDY_ROTATIONS}, got {self.rotation_deg}"
            )
        for name in (
            "corridor_length",
            "corridor_width",
            "corridor_height",
            "board_width",
            "board_height",
            "board_center_height",
            "marker_offset",
            "sphere_height",
            "sphere_gap",
            "sphere_radius",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@lru_cache(maxsize=64)
def build_study_scene(spec: TrialSceneSpec) -> StudyScene:
    """Corridor with a rotated permeable blackboard, marker, and spheres.

    rotation_deg is how far the board front is turned away from facing the
    user: at 180 the front (with its spheres and marker) is on the far side,
    so the teleport arc has to cross the board. The marker sits on the ground
    marker_offset in front of the board face; sphere centers ride on the face,
    sphere_height above the floor, sphere_gap apart.
    """
    rot = math.radians(spec.rotation_deg)
    front = Vec3(-math.sin(rot), 0.0, -math.cos(rot))
    board_yaw = wrap_deg(spec.rotation_deg + 180.0)
    board_ground = Vec3(0.0, 0.0, spec.depth)
    yaw_r = math.radians(board_yaw)
    board_u = Vec3(math.cos(yaw_r), 0.0, -math.sin(yaw_r))

    half_w = spec.corridor_width * 0.5
    half_l = spec.corridor_length * 0.5
    half_h = spec.corridor_height * 0.5
    objects = (
        SceneObject("floor", GroundPlane(), Vec3(0.0, 0.0, 0.0)),
        SceneObject(
            "wall_left",
            Quad(spec.corridor_length, spec.corridor_height),
            Vec3(-half_w, half_h, 0.0),
            yaw_deg=90.0,
        ),
        SceneObject(
            "wall_right",
            Quad(spec.corridor_length, spec.corridor_height),
            Vec3(half_w, half_h, 0.0),
            yaw_deg=-90.0,
        ),
        SceneObject(
            "wall_near",
            Quad(spec.corridor_width, spec.corridor_height),
            Vec3(0.0, half_h, -half_l),
            yaw_deg=0.0,
        ),
        SceneObject(
            "wall_far",
            Quad(spec.corridor_width, spec.corridor_height),
            Vec3(0.0, half_h, half_l),
            yaw_deg=180.0,
        ),
        SceneObject(
            "ceiling",
            Box(Vec3(half_w, 0.25, half_l)),
            Vec3(0.0, spec.corridor_height + 0.25, 0.0),
        ),
        SceneObject(
            "blackboard",
            Quad(spec.board_width, spec.board_height),
            Vec3(0.0, spec.board_center_height, spec.depth),
            yaw_deg=board_yaw,
            permeable=True,
            alpha=spec.board_alpha,
        ),
    )
    half_gap = spec.sphere_gap * 0.5
    lift = Vec3(0.0, spec.sphere_height, 0.0)
    return StudyScene(
        objects=objects,
        marker=board_ground + front.scaled(spec.marker_offset),
        sphere_a=board_ground + board_u.scaled(-half_gap) + lift,
        sphere_b=board_ground + board_u.scaled(half_gap) + lift,
        start_position=Vec3(0.0, 0.0, 0.0),
        start_yaw_deg=0.0,
    )


def mark_penetrated(scene: Scene, ids: Iterable[str]) -> Scene:
    """Scene with translucency set on exactly the given permeable objects."""
    wanted = set(ids)
    known = {obj.id for obj in scene.objects}
    for object_id in sorted(wanted):
        if object_id not in known:
            raise ValueError(f"unknown object id {object_id!r}")
        if not scene.object_by_id(object_id).permeable:
            raise ValueError(f"object {object_id!r} is not permeable")
    objects = tuple(
        replace(obj, translucent_now=obj.id in wanted) for obj in scene.objects
    )
    return replace(scene, objects=objects)


class SceneFormatError(ValueError):
    """Scene JSON that does not match the wire format."""


def _shape_to_json(shape: Shape) -> dict:
    if isinstance(shape, GroundPlane):
        return {"type": "ground"}
    if isinstance(shape, Box):
        return {"type": "box", "half_extents": list(shape.half_extents.as_tuple())}
    return {"type": "quad", "width": shape.width, "height": shape.height}


def scene_to_json(scene: StudyScene) -> dict:
    objects = []
    for obj in scene.objects:
        objects.append(
            {
                "id": obj.id,
                "shape": _shape_to_json(obj.shape),
                "pose": {"p": list(obj.position.as_tuple()), "yaw_deg": obj.yaw_deg},
                "permeable": obj.permeable,
                "alpha": obj.alpha,
            }
        )
    return {
        "objects": objects,
        "marker": list(scene.marker.as_tuple()),
        "spheres": [list(scene.sphere_a.as_tuple()), list(scene.sphere_b.as_tuple())],
    }


def _is_number(value: object) -> bool:
    # bool is an int subclass and must not pass as a number on the wire
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _vec3_from_json(value: object, where: str) -> Vec3:
    if not isinstance(value, list) or len(value) != 3 or not all(map(_is_number, value)):
        raise SceneFormatError(f"{where}: expected [x, y, z] numbers")
    return Vec3(float(value[0]), float(value[1]), float(value[2]))


def _require_keys(data: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise SceneFormatError(f"{where}: unknown field {sorted(unknown)[0]!r}")
    missing = required - set(data)
    if missing:
        raise SceneFormatError(f"{where}: missing field {sorted(missing)[0]!r}")


def _shape_from_json(data: object, where: str) -> Shape:
    if not isinstance(data, dict):
        raise SceneFormatError(f"{where}: shape must be an object")
    kind = data.get("type")
    if kind == "ground":
        _require_keys(data, {"type"}, {"type"}, where)
        return GroundPlane()
    if kind == "box":
        _require_keys(data, {"type", "half_extents"}, {"type", "half_extents"}, where)
        return Box(_vec3_from_json(data["half_extents"], f"{where}.half_extents"))
    if kind == "quad":
        _require_keys(data, {"type", "width", "height"}, {"type", "width", "height"}, where)
        if not all(_is_number(data[k]) for k in ("width", "height")):
            raise SceneFormatError(f"{where}: width and height must be numbers")
        return Quad(float(data["width"]), float(data["height"]))
    raise SceneFormatError(f"{where}: unknown shape type {kind!r}")


def scene_from_json(data: object) -> StudyScene:
    """Parse and validate the scene wire format; errors name the bad field."""
    if not isinstance(data, dict):
        raise SceneFormatError("scene: expected a JSON object")
    _require_keys(data, {"objects", "marker", "spheres"}, {"objects", "marker", "spheres"}, "scene")
    if not isinstance(data["objects"], list):
        raise SceneFormatError("scene.objects: expected a list")
    objects = []
    for i, entry in enumerate(data["objects"]):
        where = f"scene.objects[{i}]"
        if not isinstance(entry, dict):
            raise SceneFormatError(f"{where}: expected an object")
        _require_keys(
            entry,
            {"id", "shape", "pose", "permeable", "alpha"},
            {"id", "shape", "pose", "permeable", "alpha"},
            where,
        )
        if not isinstance(entry["id"], str):
            raise SceneFormatError(f"{where}.id: expected a string")
        pose = entry["pose"]
        if not isinstance(pose, dict):
            raise SceneFormatError(f"{where}.pose: expected an object")
        _require_keys(pose, {"p", "yaw_deg"}, {"p", "yaw_deg"}, f"{where}.pose")
        if not _is_number(pose["yaw_deg"]):
            raise SceneFormatError(f"{where}.pose.yaw_deg: expected a number")
        if not isinstance(entry["permeable"], bool):
            raise SceneFormatError(f"{where}.permeable: expected a bool")
        if not _is_number(entry["alpha"]):
            raise SceneFormatError(f"{where}.alpha: expected a number")
        try:
            objects.append(
                SceneObject(
                    id=entry["id"],
                    shape=_shape_from_json(entry["shape"], f"{where}.shape"),
                    position=_vec3_from_json(pose["p"], f"{where}.pose.p"),
                    yaw_deg=float(pose["yaw_deg"]),
                    permeable=entry["permeable"],
                    alpha=float(entry["alpha"]),
                )
            )
        except ValueError as exc:
            if isinstance(exc, SceneFormatError):
                raise
            raise SceneFormatError(f"{where}: {exc}") from exc
    spheres = data["spheres"]
    if not isinstance(spheres, list) or len(spheres) != 2:
        raise SceneFormatError("scene.spheres: expected exactly two centers")
    try:
        return StudyScene(
            objects=tuple(objects),
            marker=_vec3_from_json(data["marker"], "scene.marker"),
            sphere_a=_vec3_from_json(spheres[0], "scene.spheres[0]"),
            sphere_b=_vec3_from_json(spheres[1], "scene.spheres[1]"),
            start_position=Vec3(0.0, 0.0, 0.0),
            start_yaw_deg=0.0,
        )
    except ValueError as exc:
        if isinstance(exc, SceneFormatError):
            raise
        raise SceneFormatError(str(exc)) from exc
