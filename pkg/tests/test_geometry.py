import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roadworld.geometry import (
    Box3D,
    CameraModel,
    HDMapLayerSet,
    RigidTransform,
    Z_NEAR,
    convex_hull,
    ego_camera,
    hull_mask,
    integrate_ego,
    project_box,
    rasterize_hdmap,
)


def identity_camera(f=100.0, c=(64.0, 64.0), size=(128, 128)):
    """World frame == camera frame (x right, y down, z forward)."""
    return CameraModel(f, c, size, RigidTransform.identity())


def pinhole_oracle(point, f, cx, cy):
    """Scalar pinhole projection, written independently of CameraModel."""
    x, y, z = point
    return (f * x / z + cx, f * y / z + cy)


def scripted_corners(center, size, heading):
    """Corner enumeration oracle: lexicographic sign order, then z-rotation."""
    l, w, h = size
    out = []
    for sx, sy, sz in itertools.product((-1, 1), repeat=3):
        px, py, pz = sx * l / 2, sy * w / 2, sz * h / 2
        rx = math.cos(heading) * px - math.sin(heading) * py
        ry = math.sin(heading) * px + math.cos(heading) * py
        out.append((center[0] + rx, center[1] + ry, center[2] + pz))
    return out


class TestProjectBox:
    def test_degenerate_box_projects_to_principal_point(self):
        cam = identity_camera()
        box = Box3D(np.array([0.0, 0.0, 5.0]), np.array([1e-9, 1e-9, 1e-9]), 0.0, 1)
        pb = project_box(box, cam)
        assert pb.valid
        uv = pb.corners_uv.reshape(8, 2) * np.array([128, 128])
        assert np.allclose(uv, [64.0, 64.0], atol=1e-6)

    def test_unit_cube_matches_hand_computed_pinhole(self):
        cam = identity_camera()
        box = Box3D(np.array([0.0, 0.0, 10.0]), np.array([1.0, 1.0, 1.0]), 0.0, 1)
        uv = project_box(box, cam).corners_uv.reshape(8, 2) * 128
        near = 64 + 100 * 0.5 / 9.5
        far = 64 + 100 * 0.5 / 10.5
        us = np.sort(np.unique(np.round(uv[:, 0], 6)))
        assert np.allclose(us, [128 - near, 128 - far, far, near], atol=1e-9)

    def test_behind_camera_is_all_zero(self):
        cam = identity_camera()
        box = Box3D(np.array([0.0, 0.0, -5.0]), np.array([1.0, 1.0, 1.0]), 0.0, 2)
        pb = project_box(box, cam)
        assert not pb.valid
        assert np.all(pb.corners_uv == 0.0)
        assert pb.category_id == 0

    def test_matches_scalar_oracle_on_random_boxes(self):
        rng = np.random.default_rng(0)
        cam = identity_camera(f=90.0, c=(60.0, 30.0), size=(128, 64))
        checked = 0
        for _ in range(1000):
            center = rng.uniform([-20, -20, 2], [20, 20, 60])
            size = rng.uniform(0.3, 5.0, size=3)
            heading = rng.uniform(-math.pi, math.pi * 0.999)
            box = Box3D(center, size, heading, int(rng.integers(1, 6)))
            corners = scripted_corners(center, size, heading)
            pb = project_box(box, cam)
            if any(c[2] <= Z_NEAR for c in corners):
                assert not pb.valid
                continue
            expected = np.array(
                [pinhole_oracle(c, 90.0, 60.0, 30.0) for c in corners]
            ) / np.array([128.0, 64.0])
            assert np.allclose(pb.corners_uv.reshape(8, 2), expected, atol=1e-9)
            checked += 1
        assert checked > 800

    @given(du=st.floats(-20, 20), dv=st.floats(-20, 20))
    @settings(max_examples=25, deadline=None)
    def test_principal_point_shift_equivariance(self, du, dv):
        box = Box3D(np.array([1.0, -0.5, 12.0]), np.array([2.0, 1.0, 1.5]), 0.3, 1)
        base = project_box(box, identity_camera()).corners_uv.reshape(8, 2)
        shifted = project_box(
            box, identity_camera(c=(64.0 + du, 64.0 + dv))
        ).corners_uv.reshape(8, 2)
        assert np.allclose(shifted - base, [du / 128, dv / 128], atol=1e-12)

    def test_all_finite_or_all_zero(self):
        rng = np.random.default_rng(1)
        cam = identity_camera()
        for _ in range(300):
            center = rng.uniform([-5, -5, -10], [5, 5, 20])
            box = Box3D(center, rng.uniform(0.5, 4.0, 3), 0.0, 1)
            pb = project_box(box, cam)
            if pb.valid:
                assert np.all(np.isfinite(pb.corners_uv))
            else:
                assert np.all(pb.corners_uv == 0.0)


class TestRasterizeHDMap:
    def test_empty_layers_all_zero(self):
        cam = ego_camera((0.0, 0.0, 0.0))
        r = rasterize_hdmap(HDMapLayerSet(), cam)
        assert r.pixels.shape == (64, 128, 3)
        assert not r.pixels.any()

    def test_center_divider_draws_vertical_stroke_in_channel_1(self):
        cam = ego_camera((0.0, 0.0, 0.0))
        line = np.array([[5.0, 0.0], [40.0, 0.0]])
        r = rasterize_hdmap(HDMapLayerSet(lane_divider=(line,)), cam)
        assert not r.pixels[:, :, 0].any() and not r.pixels[:, :, 2].any()
        ys, xs = np.nonzero(r.pixels[:, :, 1])
        assert len(ys) > 0
        # endpoints within 1 px of the pinhole projections of the endpoints
        for endpoint in line:
            uv, z = cam.project(np.array([[endpoint[0], endpoint[1], 0.0]]))
            assert z[0] > 0
            d = np.hypot(xs - uv[0, 0], ys - uv[0, 1])
            assert d.min() <= 1.0
        # vertical-ish: single center column band
        assert xs.max() - xs.min() <= 1
        assert abs(xs.mean() - 64) <= 1.0
        # connected: every drawn row gap is at most 1
        rows = np.unique(ys)
        assert np.all(np.diff(rows) <= 1)

    def test_behind_camera_polyline_is_dropped(self):
        cam = ego_camera((0.0, 0.0, 0.0))
        line = np.array([[-5.0, 0.0], [-40.0, 0.0]])
        r = rasterize_hdmap(HDMapLayerSet(lane_boundary=(line,)), cam)
        assert not r.pixels.any()

    def test_deterministic(self):
        cam = ego_camera((1.0, 2.0, 0.2))
        lines = HDMapLayerSet(
            lane_boundary=(np.array([[0.0, -3.5], [50.0, -3.5]]),),
            lane_divider=(np.array([[0.0, 0.0], [50.0, 2.0]]),),
        )
        a = rasterize_hdmap(lines, cam)
        b = rasterize_hdmap(lines, cam)
        assert np.array_equal(a.pixels, b.pixels)


class TestIntegrateEgo:
    def test_zero_speed_keeps_pose(self):
        actions = [(0.0, 0.3)] * 5
        poses = integrate_ego(actions, 0.5, (1.0, 2.0, 0.3))
        assert np.allclose(poses[:, 0], 1.0)
        assert np.allclose(poses[:, 1], 2.0)

    def test_constant_velocity_closed_form(self):
        actions = [(10.0, 0.0)] * 4
        poses = integrate_ego(actions, 0.5, (0.0, 0.0, 0.0))
        assert np.allclose(poses[:, 0], [0, 5, 10, 15, 20])
        assert np.allclose(poses[:, 1], 0.0)

    def test_matches_cumulative_sum_oracle(self):
        actions = [(5.0, 0.1 * (i + 1)) for i in range(8)]
        poses = integrate_ego(actions, 0.5, (0.0, 0.0, 0.0))
        # independent oracle: cumulative sums of per-step displacements
        dx = np.cumsum([0.5 * 5.0 * math.cos(0.1 * (i + 1)) for i in range(8)])
        dy = np.cumsum([0.5 * 5.0 * math.sin(0.1 * (i + 1)) for i in range(8)])
        assert abs(poses[-1, 0] - dx[-1]) < 1e-9
        assert abs(poses[-1, 1] - dy[-1]) < 1e-9
        assert np.allclose(poses[1:, 0], dx, atol=1e-9)
        assert np.allclose(poses[1:, 1], dy, atol=1e-9)

    @given(
        st.lists(
            st.tuples(st.floats(0, 30), st.floats(-3.1, 3.1)), min_size=1, max_size=12
        )
    )
    @settings(max_examples=40, deadline=None)
    def test_negated_yaw_mirrors_trajectory(self, actions):
        fwd = integrate_ego(actions, 0.25, (0.0, 0.0, 0.0))
        mirrored = integrate_ego([(s, -y) for s, y in actions], 0.25, (0.0, 0.0, 0.0))
        assert np.array_equal(fwd[:, 0], mirrored[:, 0])
        assert np.array_equal(fwd[:, 1], -mirrored[:, 1])

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            integrate_ego([(1.0, 0.0)], 0.0, (0.0, 0.0, 0.0))


class TestHullHelpers:
    def test_square_hull_mask_area(self):
        pts = np.array([[10, 10], [20, 10], [20, 20], [10, 20]], dtype=float)
        mask = hull_mask(pts, 32, 32)
        assert mask.sum() == 11 * 11
        assert mask[15, 15] and not mask[5, 5]

    def test_hull_of_collinear_points_is_empty_mask(self):
        pts = np.array([[1, 1], [5, 5], [9, 9]], dtype=float)
        assert hull_mask(pts, 16, 16).sum() == 0

    @given(st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_hull_contains_all_points(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(0, 30, size=(8, 2))
        hull = convex_hull(pts)
        assert len(hull) >= 3
        for p in pts:
            inside = True
            for i in range(len(hull)):
                a, b = hull[i], hull[(i + 1) % len(hull)]
                e = b - a
                if (p - a)[0] * e[1] - (p - a)[1] * e[0] > 1e-7:
                    inside = False
            assert inside
