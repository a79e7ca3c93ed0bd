"""Geometry tests against independent oracles.

Oracles used here:
  * ray-plane depth: solve the 3x3 linear system [K^-1 ray, plane] for the
    intersection instead of the closed form;
  * plane from points: direct numpy cross product;
  * homography: rotate camera-frame points explicitly.
"""

import math

import numpy as np
import pytest

from gpk.errors import (
    BehindCamera,
    CollinearPoints,
    DegeneratePlane,
    HorizonRay,
    NonPositiveDepth,
)
from gpk.geometry import (
    BBox3D,
    CameraAttitude,
    CameraExtrinsics,
    CameraIntrinsics,
    GroundPlane,
    Pixel,
    apply_homography,
    attitude_to_plane,
    back_project,
    bottom_center,
    ground_depth_at_pixel,
    ground_homography,
    perturb_extrinsics,
    perturbation_rotation,
    plane_from_three_points,
    plane_to_attitude,
    project_point,
    rotate_plane,
    rotation_pitch,
    rotation_roll,
)

K = CameraIntrinsics(fx=1000.0, fy=1000.0, cx=464.0, cy=256.0)


def random_plane(rng) -> GroundPlane:
    att = CameraAttitude(
        roll=rng.uniform(-0.3, 0.3),
        pitch=rng.uniform(0.02, 0.6),
        height=rng.uniform(2.0, 12.0),
    )
    return attitude_to_plane(att)


def ray_plane_oracle(px: Pixel, k: CameraIntrinsics, g: GroundPlane) -> float:
    """Depth via an explicit linear solve: find t with n.(t*ray) + d = 0."""
    ray = np.linalg.inv(k.matrix()) @ np.array([px.u, px.v, 1.0])
    denom = g.normal @ ray
    t = -g.d / denom
    return t * ray[2]


class TestIntrinsics:
    def test_matrix_inverse_consistency(self):
        assert np.allclose(K.matrix() @ K.inverse_matrix(), np.eye(3), atol=1e-12)

    def test_rejects_nonpositive_focal(self):
        with pytest.raises(Exception):
            CameraIntrinsics(fx=0.0, fy=1.0, cx=0.0, cy=0.0)


class TestGroundPlane:
    def test_from_raw_normalizes(self):
        g = GroundPlane.from_raw(0.0, -2.0, 0.0, 10.0)
        assert g.beta == -1.0 and g.d == 5.0

    def test_from_raw_flips_sign_for_positive_d(self):
        g = GroundPlane.from_raw(0.0, 1.0, 0.0, -5.0)
        assert g.beta == -1.0 and g.d == 5.0

    def test_rejects_zero_normal(self):
        with pytest.raises(DegeneratePlane):
            GroundPlane.from_raw(0.0, 0.0, 0.0, 1.0)

    def test_rejects_origin_on_plane(self):
        with pytest.raises(DegeneratePlane):
            GroundPlane.from_raw(0.0, -1.0, 0.0, 0.0)

    def test_signed_distance(self):
        g = GroundPlane(0.0, -1.0, 0.0, 5.0)
        assert g.signed_distance([0.0, 5.0, 0.0]) == 0.0
        assert g.signed_distance([0.0, 0.0, 0.0]) == 5.0


class TestProjection:
    def test_principal_point(self):
        px = project_point([0.0, 0.0, 10.0], K)
        assert (px.u, px.v) == (K.cx, K.cy)

    def test_rejects_nonpositive_depth(self):
        with pytest.raises(NonPositiveDepth):
            project_point([0.0, 0.0, 0.0], K)

    def test_back_project_round_trip(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            p = np.array([rng.uniform(-20, 20), rng.uniform(-5, 10),
                          rng.uniform(1, 200)])
            px = project_point(p, K)
            assert np.allclose(back_project(px, K, p[2]), p, atol=1e-9)


class TestGroundDepth:
    def test_matches_linear_system_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            g = random_plane(rng)
            px = Pixel(rng.uniform(0, 928), rng.uniform(0, 512))
            try:
                z = ground_depth_at_pixel(px, K, g)
            except (HorizonRay, BehindCamera):
                continue
            assert z == pytest.approx(ray_plane_oracle(px, K, g), rel=1e-9)

    def test_level_camera_below_horizon(self):
        # Camera looking straight ahead 1.5 m above flat ground: a pixel
        # 100 rows below the principal point sees the ground at z = 15.
        g = GroundPlane(0.0, -1.0, 0.0, 1.5)
        z = ground_depth_at_pixel(Pixel(K.cx, K.cy + 100.0), K, g)
        assert z == pytest.approx(1.5 * 1000.0 / 100.0, rel=1e-12)

    def test_horizon_ray_raises(self):
        g = GroundPlane(0.0, -1.0, 0.0, 1.5)
        with pytest.raises(HorizonRay):
            ground_depth_at_pixel(Pixel(K.cx, K.cy), K, g)

    def test_sky_pixel_raises_behind_camera(self):
        g = GroundPlane(0.0, -1.0, 0.0, 1.5)
        with pytest.raises(BehindCamera):
            ground_depth_at_pixel(Pixel(K.cx, K.cy - 50.0), K, g)

    def test_monotone_in_v_below_horizon(self):
        g = attitude_to_plane(CameraAttitude(roll=0.0, pitch=0.175, height=6.0))
        vs = np.linspace(470.0, 511.0, 40)
        zs = [ground_depth_at_pixel(Pixel(K.cx, v), K, g) for v in vs]
        assert all(a > b for a, b in zip(zs, zs[1:]))

    def test_intersection_lies_on_plane(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            g = random_plane(rng)
            px = Pixel(rng.uniform(0, 928), rng.uniform(0, 512))
            try:
                z = ground_depth_at_pixel(px, K, g)
            except (HorizonRay, BehindCamera):
                continue
            assert abs(g.signed_distance(back_project(px, K, z))) < 1e-8


class TestPlaneFit:
    def test_matches_cross_product_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            pts = rng.uniform(-10, 10, size=(3, 3)) + [0, 5, 30]
            try:
                g = plane_from_three_points(*pts)
            except (CollinearPoints, DegeneratePlane):
                continue
            n = np.cross(pts[1] - pts[0], pts[2] - pts[0])
            n /= np.linalg.norm(n)
            if n @ pts[0] > 0:  # orient so that d = -n.p is positive
                n = -n
            assert np.allclose(g.normal, n, atol=1e-9)
            for p in pts:
                assert abs(g.signed_distance(p)) < 1e-9

    def test_collinear_rejected(self):
        with pytest.raises(CollinearPoints):
            plane_from_three_points([0, 1, 1], [0, 1, 2], [0, 1, 3])

    def test_near_collinear_scale_invariant(self):
        # Collinearity is judged relative to edge lengths, not absolutely.
        pts = np.array([[0.0, 5.0, 10.0], [1e-3, 5.0, 10.0], [0.0, 5.0, 10.001]])
        g = plane_from_three_points(*pts)
        assert abs(abs(g.beta) - 1.0) < 1e-9


class TestAttitude:
    def test_round_trip_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            att = CameraAttitude(
                roll=rng.uniform(-1.2, 1.2),
                pitch=rng.uniform(-1.2, 1.2),
                height=rng.uniform(0.5, 20.0),
            )
            back = plane_to_attitude(attitude_to_plane(att))
            assert back.roll == pytest.approx(att.roll, abs=1e-12)
            assert back.pitch == pytest.approx(att.pitch, abs=1e-12)
            assert back.height == pytest.approx(att.height, abs=1e-12)

    def test_level_camera(self):
        att = plane_to_attitude(GroundPlane(0.0, -1.0, 0.0, 6.0))
        assert (att.roll, att.pitch, att.height) == (0.0, 0.0, 6.0)

    def test_pitch_only(self):
        g = attitude_to_plane(CameraAttitude(roll=0.0, pitch=0.2, height=6.0))
        assert g.alpha == 0.0
        assert g.gamma == pytest.approx(-math.sin(0.2), abs=1e-15)

    def test_normal_matches_rotation_composition(self):
        att = CameraAttitude(roll=0.07, pitch=0.21, height=4.0)
        n = rotation_roll(att.roll) @ rotation_pitch(att.pitch) @ [0.0, -1.0, 0.0]
        assert np.allclose(attitude_to_plane(att).normal, n, atol=1e-15)


class TestBottomCenter:
    def test_level_ground(self):
        g = GroundPlane(0.0, -1.0, 0.0, 6.0)
        b = BBox3D(x=1.0, y=5.25, z=40.0, l=4.0, w=2.0, h=1.5, theta=0.0)
        assert np.allclose(bottom_center(b, g), [1.0, 6.0, 40.0])

    def test_offset_is_half_height_along_normal(self):
        rng = np.random.default_rng(9)
        g = random_plane(rng)
        b = BBox3D(x=2.0, y=3.0, z=50.0, l=4.0, w=2.0, h=1.6, theta=0.3)
        p = bottom_center(b, g)
        assert np.linalg.norm(p - b.center()) == pytest.approx(0.8, abs=1e-12)


class TestPerturbation:
    def test_zero_offsets_identity(self):
        e = CameraExtrinsics(rotation=np.eye(3), translation=np.zeros(3))
        assert perturb_extrinsics(e, 0.0, 0.0) is e

    def test_translation_unchanged(self):
        e = CameraExtrinsics(
            rotation=rotation_pitch(0.2), translation=np.array([1.0, 2.0, 3.0])
        )
        e2 = perturb_extrinsics(e, 0.05, -0.03)
        assert np.array_equal(e2.translation, e.translation)

    def test_inverse_composition(self):
        e = CameraExtrinsics(rotation=rotation_roll(0.1) @ rotation_pitch(0.2),
                             translation=np.array([0.0, -6.0, 0.0]))
        fwd = perturb_extrinsics(e, 0.04, 0.0)
        back = perturb_extrinsics(fwd, -0.04, 0.0)
        assert np.allclose(back.rotation, e.rotation, atol=1e-12)

    def test_rotate_plane_preserves_distance(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            g = random_plane(rng)
            g2 = rotate_plane(g, rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3))
            assert g2.d == pytest.approx(g.d, abs=1e-12)
            assert np.linalg.norm(g2.normal) == pytest.approx(1.0, abs=1e-12)

    def test_rotate_plane_moves_normal_by_rotation(self):
        g = GroundPlane(0.0, -1.0, 0.0, 6.0)
        g2 = rotate_plane(g, 0.0, 0.25)
        expected = rotation_pitch(0.25) @ g.normal
        assert np.allclose(g2.normal, expected, atol=1e-12)


class TestHomography:
    def test_identity_for_zero_offsets(self):
        g = GroundPlane(0.0, -1.0, 0.0, 6.0)
        h = ground_homography(K, g, 0.0, 0.0)
        assert np.allclose(h, np.eye(3), atol=1e-12)

    def test_matches_point_rotation(self):
        rng = np.random.default_rng(13)
        g = attitude_to_plane(CameraAttitude(roll=0.01, pitch=0.18, height=6.0))
        for _ in range(200):
            droll = rng.uniform(-0.2, 0.2)
            dpitch = rng.uniform(-0.2, 0.2)
            h = ground_homography(K, g, droll, dpitch)
            p = np.array([rng.uniform(-15, 15), rng.uniform(0, 8),
                          rng.uniform(20, 150)])
            p_rot = perturbation_rotation(droll, dpitch) @ p
            if p_rot[2] <= 0:
                continue
            direct = project_point(p_rot, K)
            via_h = apply_homography(h, project_point(p, K))
            assert direct.u == pytest.approx(via_h.u, abs=1e-7)
            assert direct.v == pytest.approx(via_h.v, abs=1e-7)
