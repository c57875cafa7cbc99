"""3D math for arc-based teleportation: vectors, quaternions, parabolic casts.

Conventions: y is up, the frame is right-handed, yaw 0 faces +z and grows
clockwise seen from above (yaw = atan2(x, z)). Angles are degrees throughout.
Quaternions are scalar-first (w, x, y, z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

__all__ = [
    "DegenerateDirectionError",
    "Vec3",
    "UnitQuat",
    "ParabolaParams",
    "Collider",
    "ColliderSet",
    "Hit",
    "UNIT_X",
    "UNIT_Y",
    "UNIT_Z",
    "ZERO",
    "wrap_deg",
    "yaw_of",
    "angle_between",
    "slerp",
    "twist_delta",
    "parabola_point",
    "intersect_parabola",
    "intersect_ray",
]

_DEGENERATE_EPS = 1e-6


class DegenerateDirectionError(ValueError):
    """A direction too short to define the requested quantity."""


@dataclass(frozen=True, slots=True)
class Vec3:
    """Immutable 3D vector of floats."""

    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def scaled(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n < _DEGENERATE_EPS:
            raise DegenerateDirectionError(f"cannot normalize near-zero vector {self}")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def lerp(self, other: "Vec3", s: float) -> "Vec3":
        return Vec3(
            self.x + (other.x - self.x) * s,
            self.y + (other.y - self.y) * s,
            self.z + (other.z - self.z) * s,
        )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


ZERO = Vec3(0.0, 0.0, 0.0)
UNIT_X = Vec3(1.0, 0.0, 0.0)
UNIT_Y = Vec3(0.0, 1.0, 0.0)
UNIT_Z = Vec3(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class UnitQuat:
    """Unit rotation quaternion, scalar-first (w, x, y, z).

    Inputs more than 1e-6 away from unit length are rejected as corrupt.
    Values within 1e-9 of unit are kept bit-for-bit (so serialization round
    trips are lossless); anything between is renormalized once, which is
    idempotent because the result lands inside the keep band.
    """

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        n = math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
        if not (abs(n - 1.0) <= 1e-6):
            raise ValueError(f"quaternion norm {n} too far from 1")
        if abs(n - 1.0) > 1e-9:
            object.__setattr__(self, "w", self.w / n)
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)

    @staticmethod
    def identity() -> "UnitQuat":
        return UnitQuat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle_deg: float) -> "UnitQuat":
        a = axis.normalized()
        half = math.radians(angle_deg) * 0.5
        s = math.sin(half)
        return UnitQuat(math.cos(half), a.x * s, a.y * s, a.z * s)

    @staticmethod
    def from_yaw(yaw_deg: float) -> "UnitQuat":
        half = math.radians(yaw_deg) * 0.5
        return UnitQuat(math.cos(half), 0.0, math.sin(half), 0.0)

    def __mul__(self, other: "UnitQuat") -> "UnitQuat":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return UnitQuat(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def conjugate(self) -> "UnitQuat":
        return UnitQuat(self.w, -self.x, -self.y, -self.z)

    def rotate(self, v: Vec3) -> Vec3:
        # q v q* via the two-cross expansion
        qv = Vec3(self.x, self.y, self.z)
        t = qv.cross(v).scaled(2.0)
        return v + t.scaled(self.w) + qv.cross(t)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)


def slerp(a: UnitQuat, b: UnitQuat, s: float) -> UnitQuat:
    """Spherical interpolation from a (s=0) to b (s=1) along the short way."""
    dot = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z
    bw, bx, by, bz = b.w, b.x, b.y, b.z
    if dot < 0.0:
        dot, bw, bx, by, bz = -dot, -bw, -bx, -by, -bz
    if dot > 1.0 - 1e-12:
        w = a.w + (bw - a.w) * s
        x = a.x + (bx - a.x) * s
        y = a.y + (by - a.y) * s
        z = a.z + (bz - a.z) * s
        n = math.sqrt(w * w + x * x + y * y + z * z)
        return UnitQuat(w / n, x / n, y / n, z / n)
    theta = math.acos(min(1.0, dot))
    sin_theta = math.sin(theta)
    ka = math.sin((1.0 - s) * theta) / sin_theta
    kb = math.sin(s * theta) / sin_theta
    return UnitQuat(
        a.w * ka + bw * kb, a.x * ka + bx * kb, a.y * ka + by * kb, a.z * ka + bz * kb
    )


@dataclass(frozen=True)
class ParabolaParams:
    """Launch parameters of the teleport arc."""

    speed: float = 10.0
    gravity: float = 9.81
    max_fall_time: float = 1.5
    march_step: float = 1.0 / 90.0

    def __post_init__(self) -> None:
        for name in ("speed", "gravity", "max_fall_time", "march_step"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


def wrap_deg(angle: float) -> float:
    """Wrap an angle in degrees to (-180, 180]."""
    r = math.fmod(angle + 180.0, 360.0)
    if r < 0.0:
        r += 360.0
    r -= 180.0
    return 180.0 if r == -180.0 else r


def yaw_of(v: Vec3) -> float:
    """Yaw in degrees of the horizontal projection of v; 0 faces +z."""
    if math.hypot(v.x, v.z) < _DEGENERATE_EPS:
        raise DegenerateDirectionError(f"horizontal magnitude of {v} below {_DEGENERATE_EPS}")
    return math.degrees(math.atan2(v.x, v.z))


def angle_between(a: Vec3, b: Vec3) -> float:
    """Unsigned 3D angle between two vectors, degrees in [0, 180]."""
    d = a.normalized().dot(b.normalized())
    return math.degrees(math.acos(max(-1.0, min(1.0, d))))


def twist_delta(prev: UnitQuat, curr: UnitQuat, axis: Vec3) -> float:
    """Signed twist of curr relative to prev about axis, in (-180, 180].

    Swing-twist decomposition of curr * prev^-1: positive means clockwise
    looking along the axis. Per-call rotation must stay under 180 degrees.
    """
    a = axis.normalized()
    r = curr * prev.conjugate()
    if r.w < 0.0:
        r = UnitQuat(-r.w, -r.x, -r.y, -r.z)
    p = r.x * a.x + r.y * a.y + r.z * a.z
    return math.degrees(2.0 * math.atan2(p, r.w))


def parabola_point(origin: Vec3, direction: Vec3, params: ParabolaParams, t: float) -> Vec3:
    """Point on the arc at flight time t in [0, max_fall_time]."""
    if not (0.0 <= t <= params.max_fall_time):
        raise ValueError(f"t={t} outside [0, {params.max_fall_time}]")
    _require_unit(direction)
    s = params.speed
    return Vec3(
        origin.x + s * direction.x * t,
        origin.y + s * direction.y * t - 0.5 * params.gravity * t * t,
        origin.z + s * direction.z * t,
    )


def _require_unit(direction: Vec3) -> None:
    n = direction.norm()
    if n < _DEGENERATE_EPS:
        raise DegenerateDirectionError("direction is near zero")
    if abs(n - 1.0) > 1e-6:
        raise ValueError(f"direction norm {n} is not unit within 1e-6")


@dataclass(frozen=True)
class Hit:
    """Result of a cast: first blocking surface contact."""

    point: Vec3
    normal: Vec3
    object_id: str
    time_of_flight: Optional[float]
    penetrated_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class Collider:
    """One bounded plane patch (or infinite plane) a cast can cross.

    kind is "plane" (infinite, e.g. the ground) or "quad" (bounded patch with
    in-plane axes u, v and half sizes). Boxes are compiled into six quads
    upstream, so casts only ever deal with planes.
    """

    object_id: str
    permeable: bool
    kind: str
    center: Vec3
    normal: Vec3
    u_axis: Optional[Vec3] = None
    v_axis: Optional[Vec3] = None
    half_u: float = 0.0
    half_v: float = 0.0


class ColliderSet:
    """Colliders of one scene with precomputed tables for vectorized casts."""

    def __init__(self, colliders: Sequence[Collider]):
        self.colliders: tuple[Collider, ...] = tuple(colliders)
        k = len(self.colliders)
        self._normals = np.empty((k, 3), dtype=np.float64)
        self._offsets = np.empty(k, dtype=np.float64)
        for j, c in enumerate(self.colliders):
            self._normals[j] = c.normal.as_tuple()
            self._offsets[j] = c.normal.dot(c.center)

    def __len__(self) -> int:
        return len(self.colliders)


class SupportsColliders(Protocol):
    @property
    def colliders(self) -> ColliderSet: ...


_GRID_CACHE: dict[tuple[float, float], np.ndarray] = {}


def _march_grid(params: ParabolaParams) -> np.ndarray:
    """Uniform flight-time grid 0..max_fall_time at march_step or finer."""
    key = (params.max_fall_time, params.march_step)
    grid = _GRID_CACHE.get(key)
    if grid is None:
        n = max(1, math.ceil(params.max_fall_time / params.march_step - 1e-9))
        grid = np.linspace(0.0, params.max_fall_time, n + 1)
        _GRID_CACHE[key] = grid
    return grid


def _quad_contains(c: Collider, p: Vec3, tol: float = 1e-9) -> bool:
    if c.kind != "quad":
        return True
    d = p - c.center
    return (
        abs(d.dot(c.u_axis)) <= c.half_u + tol
        and abs(d.dot(c.v_axis)) <= c.half_v + tol
    )


def _bisect_arc_plane(
    origin: Vec3,
    direction: Vec3,
    params: ParabolaParams,
    c: Collider,
    t_lo: float,
    t_hi: float,
    pos_lo: bool,
    tol: float = 1e-4,
) -> tuple[float, Vec3]:
    """Refine a bracketed plane crossing on the arc to tol meters."""
    s = params.speed
    ox, oy, oz = origin.x, origin.y, origin.z
    dx, dy, dz = direction.x, direction.y, direction.z
    nx, ny, nz = c.normal.x, c.normal.y, c.normal.z
    off = c.normal.dot(c.center)
    half_g = 0.5 * params.gravity

    def point_at(t: float) -> tuple[float, float, float]:
        return (ox + s * dx * t, oy + s * dy * t - half_g * t * t, oz + s * dz * t)

    ax, ay, az = point_at(t_lo)
    bx, by, bz = point_at(t_hi)
    while (bx - ax) ** 2 + (by - ay) ** 2 + (bz - az) ** 2 > tol * tol:
        t_mid = 0.5 * (t_lo + t_hi)
        mx, my, mz = point_at(t_mid)
        mid_pos = (mx * nx + my * ny + mz * nz - off) > 0.0
        if mid_pos == pos_lo:
            t_lo, (ax, ay, az) = t_mid, (mx, my, mz)
        else:
            t_hi, (bx, by, bz) = t_mid, (mx, my, mz)
    t_mid = 0.5 * (t_lo + t_hi)
    return t_mid, Vec3(*point_at(t_mid))


def intersect_parabola(
    origin: Vec3,
    direction: Vec3,
    params: ParabolaParams,
    scene: SupportsColliders,
    respect_permeability: bool = True,
    pass_through: frozenset[str] = frozenset(),
) -> Optional[Hit]:
    """First blocking contact of the arc with the scene, or None at arc end.

    The arc is marched at march_step and each bracketing interval is bisected
    to a positional tolerance of 1e-4 m. With respect_permeability set,
    permeable objects crossed before the blocking contact are collected into
    penetrated_ids instead of stopping the arc; without it they block like
    anything else. Objects named in pass_through are ignored entirely.
    """
    _require_unit(direction)
    cs = scene.colliders
    if len(cs) == 0:
        return None

    ts = _march_grid(params)
    s = params.speed
    pts = np.empty((ts.shape[0], 3), dtype=np.float64)
    pts[:, 0] = origin.x + s * direction.x * ts
    pts[:, 1] = origin.y + s * direction.y * ts - 0.5 * params.gravity * ts * ts
    pts[:, 2] = origin.z + s * direction.z * ts

    dist = pts @ cs._normals.T - cs._offsets
    positive = dist > 0.0
    flips = positive[:-1] != positive[1:]

    candidates: list[tuple[float, Vec3, Vec3, Collider]] = []
    for j in np.nonzero(flips.any(axis=0))[0]:
        c = cs.colliders[j]
        if c.object_id in pass_through:
            continue
        for i in np.nonzero(flips[:, j])[0]:
            pos_lo = bool(positive[i, j])
            t_hit, p_hit = _bisect_arc_plane(
                origin, direction, params, c, float(ts[i]), float(ts[i + 1]), pos_lo
            )
            if not _quad_contains(c, p_hit):
                continue
            facing = c.normal if pos_lo else -c.normal
            candidates.append((t_hit, p_hit, facing, c))

    candidates.sort(key=lambda item: item[0])
    penetrated: list[str] = []
    for t_hit, p_hit, facing, c in candidates:
        if c.permeable and respect_permeability:
            if c.object_id not in penetrated:
                penetrated.append(c.object_id)
            continue
        return Hit(
            point=p_hit,
            normal=facing,
            object_id=c.object_id,
            time_of_flight=t_hit,
            penetrated_ids=tuple(penetrated),
        )
    return None


def intersect_ray(
    origin: Vec3,
    direction: Vec3,
    scene: SupportsColliders,
    pass_through: frozenset[str] = frozenset(),
    max_range: float = 200.0,
) -> Optional[Hit]:
    """Nearest surface hit of a straight ray within max_range, or None."""
    d = direction.normalized()
    best: Optional[tuple[float, Vec3, Vec3, Collider]] = None
    for c in scene.colliders.colliders:
        if c.object_id in pass_through:
            continue
        denom = d.dot(c.normal)
        if abs(denom) < 1e-12:
            continue
        t = (c.normal.dot(c.center) - origin.dot(c.normal)) / denom
        if t <= 1e-9 or t > max_range:
            continue
        if best is not None and t >= best[0]:
            continue
        p = origin + d.scaled(t)
        if not _quad_contains(c, p):
            continue
        facing = c.normal if denom < 0.0 else -c.normal
        best = (t, p, facing, c)
    if best is None:
        return None
    t, p, facing, c = best
    return Hit(point=p, normal=facing, object_id=c.object_id, time_of_flight=None)
