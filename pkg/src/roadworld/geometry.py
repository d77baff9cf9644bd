"""Projective geometry: world-space traffic structure -> image-plane conditions.

Conventions
-----------
World frame: x east, y north, z up; the ground plane is z = 0.
Camera frame: x right, y down, z forward (pinhole, no distortion).
Projection: u = f * x / z + cx, v = f * y / z + cy, with (u, v) then
normalized by (width, height).

Everything here is a pure function over immutable inputs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

Z_NEAR = 0.1  # meters; camera-frame points with z <= Z_NEAR are treated as behind

LAYER_NAMES = ("lane_boundary", "lane_divider", "pedestrian_crossing")


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation, mapping points p -> R @ p + t."""

    rotation: np.ndarray   # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self) -> None:
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation length 3")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-6):
            raise ValueError("rotation is not orthonormal")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return points @ self.rotation.T + self.translation

    def compose(self, inner: "RigidTransform") -> "RigidTransform":
        """self o inner: first apply inner, then self."""
        return RigidTransform(
            self.rotation @ inner.rotation,
            self.rotation @ inner.translation + self.translation,
        )

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class CameraModel:
    focal_length_px: float
    principal_point: tuple[float, float]
    image_size: tuple[int, int]           # (width, height)
    pose: RigidTransform                  # world -> camera

    def __post_init__(self) -> None:
        if self.focal_length_px <= 0:
            raise ValueError("focal length must be positive")
        w, h = self.image_size
        if w < 16 or h < 16:
            raise ValueError("image size components must be >= 16")

    def project(self, points_world: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project (N, 3) world points; returns (N, 2) pixels and camera-frame z."""
        pts = self.pose.apply(np.atleast_2d(points_world).astype(np.float64))
        z = pts[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.focal_length_px * pts[:, 0] / z + self.principal_point[0]
            v = self.focal_length_px * pts[:, 1] / z + self.principal_point[1]
        return np.stack([u, v], axis=1), z


@dataclass(frozen=True)
class Box3D:
    center: np.ndarray      # (3,) meters, world frame
    size: np.ndarray        # (l, w, h) meters
    heading: float          # radians about world z
    category_id: int

    def __post_init__(self) -> None:
        c = np.asarray(self.center, dtype=np.float64)
        s = np.asarray(self.size, dtype=np.float64)
        if np.any(s <= 0):
            raise ValueError("box size components must be positive")
        if not (-math.pi <= self.heading < math.pi):
            raise ValueError("heading must lie in [-pi, pi)")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "size", s)

    def corners_world(self) -> np.ndarray:
        """8 corners as center +/- rotated half extents, lexicographic sign order."""
        l, w, h = self.size
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=3)))
        local = signs * np.array([l / 2, w / 2, h / 2])
        c, s = math.cos(self.heading), math.sin(self.heading)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return local @ rot.T + self.center


@dataclass(frozen=True)
class ProjectedBox:
    """Image-plane box: 8 corners x (u, v) normalized to [0, 1] by image size.

    Invalid boxes are the zero-padding representation: all 16 values exactly
    zero and category 0.
    """

    corners_uv: np.ndarray  # (16,)
    category_id: int
    valid: bool

    @staticmethod
    def padding() -> "ProjectedBox":
        return ProjectedBox(np.zeros(16), 0, False)


@dataclass(frozen=True)
class HDMapLayerSet:
    """World-frame polylines per layer; each polyline is an (N, 2) array, N >= 2."""

    lane_boundary: tuple[np.ndarray, ...] = ()
    lane_divider: tuple[np.ndarray, ...] = ()
    pedestrian_crossing: tuple[np.ndarray, ...] = ()

    def __post_init__(self) -> None:
        for name in LAYER_NAMES:
            lines = tuple(np.asarray(p, dtype=np.float64) for p in getattr(self, name))
            for p in lines:
                if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 2:
                    raise ValueError(f"{name} polyline must be (N>=2, 2)")
            object.__setattr__(self, name, lines)

    def layers(self) -> tuple[tuple[np.ndarray, ...], ...]:
        return tuple(getattr(self, name) for name in LAYER_NAMES)


@dataclass(frozen=True)
class ConditionRaster:
    """H x W x 3 binary raster; channel c holds layer type c."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.pixels)
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValueError("raster must be HxWx3")
        object.__setattr__(self, "pixels", p.astype(np.uint8))


def project_box(box: Box3D, cam: CameraModel) -> ProjectedBox:
    """Pinhole-project the 8 corners; any corner behind the camera invalidates the box."""
    uv, z = cam.project(box.corners_world())
    if np.any(z <= Z_NEAR):
        return ProjectedBox.padding()
    w, h = cam.image_size
    norm = uv / np.array([w, h], dtype=np.float64)
    return ProjectedBox(norm.reshape(16).copy(), box.category_id, True)


def _draw_segment(channel: np.ndarray, cam: CameraModel, p0: np.ndarray, p1: np.ndarray) -> None:
    """Rasterize one camera-visible 3D segment as a 1-px binary stroke.

    Subdivides until consecutive projected samples are <= 0.5 px apart, which
    keeps strokes connected under perspective.
    """
    w, h = cam.image_size

    def put(uv: np.ndarray) -> None:
        px, py = int(round(uv[0])), int(round(uv[1]))
        if 0 <= px < w and 0 <= py < h:
            channel[py, px] = 1

    stack = [(p0, p1, 0)]
    while stack:
        a, b, depth = stack.pop()
        uv, _ = cam.project(np.stack([a, b]))
        gap = float(np.hypot(uv[1, 0] - uv[0, 0], uv[1, 1] - uv[0, 1]))
        if gap <= 0.5 or depth >= 32:
            put(uv[0])
            put(uv[1])
        else:
            mid = (a + b) / 2
            stack.append((a, mid, depth + 1))
            stack.append((mid, b, depth + 1))


def rasterize_hdmap(layers: HDMapLayerSet, cam: CameraModel, ground_height: float = 0.0) -> ConditionRaster:
    """Project ground-plane polylines into a 3-channel binary raster.

    Segments behind the camera are clipped at Z_NEAR; fully-behind segments
    are dropped.  Output is deterministic for identical inputs.
    """
    w, h = cam.image_size
    pixels = np.zeros((h, w, 3), dtype=np.uint8)
    for ch, polylines in enumerate(layers.layers()):
        for line in polylines:
            pts = np.column_stack([line, np.full(len(line), ground_height)])
            z = cam.pose.apply(pts)[:, 2]
            for i in range(len(pts) - 1):
                a, b, za, zb = pts[i], pts[i + 1], z[i], z[i + 1]
                if za <= Z_NEAR and zb <= Z_NEAR:
                    continue
                if za <= Z_NEAR or zb <= Z_NEAR:
                    t = (Z_NEAR + 1e-9 - za) / (zb - za)
                    crossing = a + t * (b - a)
                    a, b = (crossing, b) if za <= Z_NEAR else (a, crossing)
                _draw_segment(pixels[:, :, ch], cam, a, b)
    return ConditionRaster(pixels)


def integrate_ego(actions, dt: float, init_pose: tuple[float, float, float]) -> np.ndarray:
    """Forward kinematics: actions (speed, yaw) -> (len(actions)+1, 3) poses.

    pose_{t+1} = pose_t + dt * speed_t * (cos yaw_t, sin yaw_t); heading of
    pose_{t+1} is yaw_t.  Pose rows are (x, y, heading).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    poses = np.zeros((len(actions) + 1, 3), dtype=np.float64)
    poses[0] = init_pose
    x, y = float(init_pose[0]), float(init_pose[1])
    for i, a in enumerate(actions):
        speed, yaw = float(a[0]), float(a[1])
        x += dt * speed * math.cos(yaw)
        y += dt * speed * math.sin(yaw)
        poses[i + 1] = (x, y, yaw)
    return poses


def ego_camera(
    ego_pose: tuple[float, float, float],
    yaw_offset: float = 0.0,
    height: float = 1.6,
    focal_length_px: float = 90.0,
    image_size: tuple[int, int] = (128, 64),
) -> CameraModel:
    """Camera rigidly mounted on the ego vehicle, level with the horizon.

    Looks along the ego heading plus yaw_offset; camera x is image-right,
    y is image-down (world -z).
    """
    x, y, heading = ego_pose
    psi = heading + yaw_offset
    forward = np.array([math.cos(psi), math.sin(psi), 0.0])
    right = np.array([math.sin(psi), -math.cos(psi), 0.0])
    down = np.array([0.0, 0.0, -1.0])
    r_wc = np.stack([right, down, forward])     # camera axes as rows
    center = np.array([x, y, height])
    pose = RigidTransform(r_wc, -r_wc @ center)
    w, h = image_size
    return CameraModel(focal_length_px, (w / 2.0, h / 2.0), image_size, pose)


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew monotone chain; returns hull vertices in counter-clockwise order."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(seq):
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2:
                d1, d2 = out[-1] - out[-2], p - out[-2]
                if d1[0] * d2[1] - d1[1] * d2[0] <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def hull_mask(points_px: np.ndarray, height: int, width: int) -> np.ndarray:
    """Boolean mask of pixels whose centers lie inside the convex hull of points."""
    hull = convex_hull(points_px)
    mask = np.zeros((height, width), dtype=bool)
    if len(hull) < 3:
        return mask
    x0 = max(int(np.floor(hull[:, 0].min())), 0)
    x1 = min(int(np.ceil(hull[:, 0].max())), width - 1)
    y0 = max(int(np.floor(hull[:, 1].min())), 0)
    y1 = min(int(np.ceil(hull[:, 1].max())), height - 1)
    if x0 > x1 or y0 > y1:
        return mask
    xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    inside = np.ones(len(pts), dtype=bool)
    for i in range(len(hull)):
        a, b = hull[i], hull[(i + 1) % len(hull)]
        edge = b - a
        inside &= (pts - a)[:, 0] * edge[1] - (pts - a)[:, 1] * edge[0] <= 1e-9
    mask[ys.ravel()[inside], xs.ravel()[inside]] = True
    return mask
