import math

import pytest

from teleportkit import (
    DegenerateDirectionError,
    GroundPlane,
    ParabolaParams,
    Quad,
    Scene,
    SceneObject,
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
from teleportkit.geom import UNIT_X, UNIT_Y, UNIT_Z

PARAMS = ParabolaParams()


def ground_scene(*extra):
    objects = (SceneObject(id="floor", shape=GroundPlane(), position=Vec3(0, 0, 0)),) + extra
    return Scene(objects=objects)


class TestVec3:
    def test_arithmetic(self):
        a = Vec3(1.0, 2.0, 3.0)
        b = Vec3(-2.0, 0.5, 1.0)
        assert a + b == Vec3(-1.0, 2.5, 4.0)
        assert a - b == Vec3(3.0, 1.5, 2.0)
        assert -a == Vec3(-1.0, -2.0, -3.0)
        assert a.scaled(2.0) == Vec3(2.0, 4.0, 6.0)
        assert a.dot(b) == -2.0 + 1.0 + 3.0

    def test_cross_follows_right_hand_rule(self):
        assert UNIT_X.cross(UNIT_Y) == UNIT_Z
        assert UNIT_Y.cross(UNIT_Z) == UNIT_X

    def test_norm_and_normalized(self):
        v = Vec3(3.0, 0.0, 4.0)
        assert v.norm() == 5.0
        assert v.normalized() == Vec3(0.6, 0.0, 0.8)

    def test_normalizing_near_zero_raises(self):
        with pytest.raises(DegenerateDirectionError):
            Vec3(1e-7, 0.0, 0.0).normalized()

    def test_lerp_endpoints_exact(self):
        a, b = Vec3(1, 2, 3), Vec3(-4, 0, 9)
        assert a.lerp(b, 0.0) == a
        assert a.lerp(b, 1.0) == b
        assert a.lerp(b, 0.5) == Vec3(-1.5, 1.0, 6.0)


class TestUnitQuat:
    def test_identity_rotates_nothing(self):
        v = Vec3(0.3, -1.2, 4.0)
        assert UnitQuat.identity().rotate(v) == v

    def test_axis_angle_quarter_turn(self):
        q = UnitQuat.from_axis_angle(UNIT_Y, 90.0)
        r = q.rotate(UNIT_Z)
        assert abs(r.x - 1.0) < 1e-15
        assert abs(r.y) < 1e-15
        assert abs(r.z) < 1e-15

    def test_yaw_composition_adds(self):
        q = UnitQuat.from_yaw(30.0) * UnitQuat.from_yaw(40.0)
        assert abs(yaw_of(q.rotate(UNIT_Z)) - 70.0) < 1e-12

    def test_conjugate_inverts(self):
        q = UnitQuat.from_axis_angle(Vec3(1, 2, 3).normalized(), 77.0)
        v = Vec3(0.5, -0.25, 2.0)
        back = q.conjugate().rotate(q.rotate(v))
        assert (back - v).norm() < 1e-14

    def test_norm_invariant_enforced(self):
        with pytest.raises(ValueError):
            UnitQuat(1.1, 0.0, 0.0, 0.0)

    def test_near_unit_components_kept_bit_exact(self):
        # values inside the keep band round-trip untouched, so serialized
        # quats replay identically
        w = 1.0 + 5e-10
        q = UnitQuat(w, 0.0, 0.0, 0.0)
        assert q.w == w

    def test_slerp_endpoints(self):
        a = UnitQuat.from_yaw(10.0)
        b = UnitQuat.from_axis_angle(UNIT_X, 140.0)
        assert slerp(a, b, 0.0) == a
        assert slerp(a, b, 1.0) == b

    def test_slerp_midpoint_is_unit_and_between(self):
        a = UnitQuat.from_yaw(0.0)
        b = UnitQuat.from_yaw(90.0)
        mid = slerp(a, b, 0.5)
        n = math.sqrt(mid.w**2 + mid.x**2 + mid.y**2 + mid.z**2)
        assert abs(n - 1.0) < 1e-12
        assert abs(yaw_of(mid.rotate(UNIT_Z)) - 45.0) < 1e-9

    def test_slerp_takes_short_way(self):
        a = UnitQuat.from_yaw(170.0)
        b = UnitQuat.from_yaw(-170.0)
        mid = slerp(a, b, 0.5)
        assert abs(abs(yaw_of(mid.rotate(UNIT_Z))) - 180.0) < 1e-9


class TestAngles:
    def test_wrap_deg(self):
        assert wrap_deg(0.0) == 0.0
        assert wrap_deg(180.0) == 180.0
        assert wrap_deg(-180.0) == 180.0
        assert wrap_deg(540.0) == 180.0
        assert abs(wrap_deg(181.0) + 179.0) < 1e-12
        assert abs(wrap_deg(-190.0) - 170.0) < 1e-12

    def test_yaw_is_clockwise_from_plus_z(self):
        assert yaw_of(Vec3(0, 0, 1)) == 0.0
        assert yaw_of(Vec3(1, 0, 0)) == 90.0
        assert yaw_of(Vec3(0, 0, -1)) == 180.0
        assert yaw_of(Vec3(-1, 0, 0)) == -90.0

    def test_yaw_ignores_height(self):
        assert yaw_of(Vec3(3.0, 1.0, 3.0)) == 45.0
        assert yaw_of(Vec3(3.0, -50.0, 3.0)) == 45.0

    def test_yaw_of_vertical_raises(self):
        with pytest.raises(DegenerateDirectionError):
            yaw_of(Vec3(0.0, 1.0, 0.0))

    def test_angle_between(self):
        assert angle_between(UNIT_X, UNIT_Y) == 90.0
        assert angle_between(UNIT_Z, UNIT_Z) == 0.0
        assert angle_between(UNIT_Z, -UNIT_Z) == 180.0


class TestTwist:
    def test_pure_body_roll_recovered(self):
        base = UnitQuat.from_axis_angle(Vec3(1, 1, 0).normalized(), 35.0)
        axis = base.rotate(UNIT_Z)
        for deg in (5.0, -20.0, 90.0, 179.0):
            curr = base * UnitQuat.from_axis_angle(UNIT_Z, deg)
            assert abs(twist_delta(base, curr, axis) - deg) < 1e-9

    def test_swing_contributes_no_twist(self):
        base = UnitQuat.identity()
        swung = UnitQuat.from_axis_angle(UNIT_X, 40.0)
        assert abs(twist_delta(base, swung, UNIT_Z)) < 1e-9


class TestParabola:
    def test_point_at_zero_is_origin(self):
        origin = Vec3(1.0, 2.0, 3.0)
        assert parabola_point(origin, UNIT_Z, PARAMS, 0.0) == origin

    def test_point_matches_ballistics(self):
        # p = o + s*d*t with 0.5*g*t^2 subtracted from y
        p = parabola_point(Vec3(0, 1, 0), UNIT_Z, PARAMS, 0.5)
        assert abs(p.z - 5.0) < 1e-12
        assert abs(p.y - (1.0 - 0.5 * 9.81 * 0.25)) < 1e-12

    def test_point_validates_time_and_direction(self):
        with pytest.raises(ValueError):
            parabola_point(Vec3(0, 1, 0), UNIT_Z, PARAMS, -0.1)
        with pytest.raises(ValueError):
            parabola_point(Vec3(0, 1, 0), UNIT_Z, PARAMS, 1.6)
        with pytest.raises(ValueError):
            parabola_point(Vec3(0, 1, 0), Vec3(0, 0, 0.5), PARAMS, 0.1)

    def test_params_validated(self):
        with pytest.raises(ValueError):
            ParabolaParams(speed=0.0)
        with pytest.raises(ValueError):
            ParabolaParams(march_step=-1.0)


class TestIntersectParabola:
    def test_level_launch_lands_at_closed_form_point(self):
        # from y=1 level: 1 = 0.5*9.81*t^2, so t = sqrt(2/9.81) and the
        # landing sits 10*t meters downrange
        t_exact = math.sqrt(2.0 / 9.81)
        hit = intersect_parabola(Vec3(0, 1, 0), UNIT_Z, PARAMS, ground_scene())
        assert hit is not None
        assert hit.object_id == "floor"
        assert abs(hit.point.z - 10.0 * t_exact) < 1e-4
        assert abs(hit.point.x) < 1e-6
        assert abs(hit.point.y) < 1e-4
        assert abs(hit.time_of_flight - t_exact) < 1e-4

    def test_arc_ending_in_air_returns_none(self):
        hit = intersect_parabola(Vec3(0, 0.5, 0), UNIT_Y, PARAMS, ground_scene())
        assert hit is None

    def test_landing_past_fall_cap_returns_none(self):
        # a 42 degree launch from y=1 grounds at t = 1.50009 s, just past
        # the 1.5 s cap, so the arc ends mid-air
        pitch = math.radians(42.0)
        d = Vec3(0.0, math.sin(pitch), math.cos(pitch))
        assert intersect_parabola(Vec3(0, 1, 0), d, PARAMS, ground_scene()) is None

    def test_permeable_collected_not_blocking(self):
        wall = SceneObject(
            id="curtain",
            shape=Quad(width=10.0, height=10.0),
            position=Vec3(0, 5, 2),
            permeable=True,
        )
        hit = intersect_parabola(Vec3(0, 1, 0), UNIT_Z, PARAMS, ground_scene(wall))
        assert hit is not None
        assert hit.object_id == "floor"
        assert hit.penetrated_ids == ("curtain",)

    def test_permeable_blocks_when_not_respected(self):
        wall = SceneObject(
            id="curtain",
            shape=Quad(width=10.0, height=10.0),
            position=Vec3(0, 5, 2),
            permeable=True,
        )
        hit = intersect_parabola(
            Vec3(0, 1, 0), UNIT_Z, PARAMS, ground_scene(wall),
            respect_permeability=False,
        )
        assert hit is not None
        assert hit.object_id == "curtain"

    def test_pass_through_ignores_object_entirely(self):
        wall = SceneObject(
            id="curtain",
            shape=Quad(width=10.0, height=10.0),
            position=Vec3(0, 5, 2),
        )
        blocked = intersect_parabola(Vec3(0, 1, 0), UNIT_Z, PARAMS, ground_scene(wall))
        assert blocked is not None and blocked.object_id == "curtain"
        free = intersect_parabola(
            Vec3(0, 1, 0), UNIT_Z, PARAMS, ground_scene(wall),
            pass_through=frozenset({"curtain"}),
        )
        assert free is not None
        assert free.object_id == "floor"
        assert free.penetrated_ids == ()

    def test_quad_bounds_respected(self):
        # narrow quad 1m wide centered on x=3: an arc down the z axis misses
        post = SceneObject(
            id="post", shape=Quad(width=1.0, height=10.0), position=Vec3(3, 5, 2)
        )
        hit = intersect_parabola(Vec3(0, 1, 0), UNIT_Z, PARAMS, ground_scene(post))
        assert hit is not None
        assert hit.object_id == "floor"

    def test_refinement_tolerance_is_sub_tenth_millimeter(self):
        pitch = math.radians(30.0)
        d = Vec3(0.0, math.sin(pitch), math.cos(pitch))
        hit = intersect_parabola(Vec3(0, 1.3, 0), d, PARAMS, ground_scene())
        assert hit is not None
        # residual height at the reported contact bounds the bisect error
        assert abs(hit.point.y) <= 1e-4


class TestIntersectRay:
    def test_direct_hit_is_exact(self):
        wall = SceneObject(
            id="wall", shape=Quad(width=4.0, height=4.0), position=Vec3(0, 1, 5)
        )
        hit = intersect_ray(Vec3(0, 1, 0), UNIT_Z, ground_scene(wall))
        assert hit is not None
        assert hit.object_id == "wall"
        assert (hit.point - Vec3(0, 1, 5)).norm() < 1e-12
        assert hit.time_of_flight is None

    def test_parallel_ray_misses(self):
        wall = SceneObject(
            id="wall", shape=Quad(width=4.0, height=4.0), position=Vec3(0, 1, 5)
        )
        hit = intersect_ray(Vec3(0, 1, 0), UNIT_X, ground_scene(wall))
        assert hit is None or hit.object_id != "wall"

    def test_surface_behind_origin_ignored(self):
        wall = SceneObject(
            id="wall", shape=Quad(width=4.0, height=4.0), position=Vec3(0, 1, -5)
        )
        assert intersect_ray(Vec3(0, 1, 0), UNIT_Z, ground_scene(wall)) is None

    def test_max_range_bounds_the_ray(self):
        far = SceneObject(
            id="far", shape=Quad(width=500.0, height=500.0), position=Vec3(0, 1, 300)
        )
        assert intersect_ray(Vec3(0, 1, 0), UNIT_Z, ground_scene(far)) is None
        near = intersect_ray(
            Vec3(0, 1, 0), UNIT_Z, ground_scene(far), max_range=400.0
        )
        assert near is not None and near.object_id == "far"

    def test_nearest_surface_wins(self):
        near = SceneObject(
            id="near", shape=Quad(width=4.0, height=4.0), position=Vec3(0, 1, 3)
        )
        far = SceneObject(
            id="far", shape=Quad(width=4.0, height=4.0), position=Vec3(0, 1, 7)
        )
        hit = intersect_ray(Vec3(0, 1, 0), UNIT_Z, ground_scene(far, near))
        assert hit is not None and hit.object_id == "near"

    def test_pass_through_skips_named_objects(self):
        near = SceneObject(
            id="near", shape=Quad(width=4.0, height=4.0), position=Vec3(0, 1, 3)
        )
        hit = intersect_ray(
            Vec3(0, 1, 0), UNIT_Z, ground_scene(near),
            pass_through=frozenset({"near"}),
        )
        assert hit is None
