"""Deterministic toy renderer for the synthetic road world.

Painter's order: sky/ground split, map strokes, then agents far-to-near as
solid filled hulls of their projected corners.  Style (weather, time of day)
multiplies the background only; agent bodies render at full color so the
hull-vs-surround contrast margin holds under every style.
"""

from __future__ import annotations

import math

import numpy as np

from ..geometry import CameraModel, ego_camera, hull_mask, integrate_ego, project_box, rasterize_hdmap
from .scenario import Scenario

SKY_COLOR = (0.55, 0.70, 0.92)
GROUND_COLOR = (0.30, 0.30, 0.32)
LAYER_COLORS = (
    (0.95, 0.95, 0.95),   # lane_boundary
    (0.95, 0.65, 0.15),   # lane_divider
    (0.85, 0.85, 0.70),   # pedestrian_crossing
)
CATEGORY_COLORS = {
    1: (0.95, 0.12, 0.10),   # car
    2: (0.10, 0.45, 0.95),   # truck
    3: (0.98, 0.76, 0.10),   # bus
    4: (0.15, 0.90, 0.30),   # pedestrian
    5: (0.90, 0.20, 0.90),   # cyclist
}
WEATHER_TINTS = (
    (1.00, 1.00, 1.00),      # sunny
    (0.68, 0.72, 0.80),      # rain
    (0.55, 0.58, 0.75),      # night_clear
)
TIMEOFDAY_BRIGHTNESS = (1.0, 0.45)   # day, night

# Guaranteed max-channel contrast between an agent hull and its surround.
RENDER_CONTRAST_MARGIN = 0.2


def ego_poses(scenario: Scenario) -> np.ndarray:
    """(duration+1, 3) ego poses integrated from the action script."""
    return integrate_ego(scenario.action_array(), scenario.dt, (0.0, 0.0, 0.0))


def camera_for(scenario: Scenario, t: int, view: int) -> CameraModel:
    cfg = scenario.config
    pose = ego_poses(scenario)[t]
    return ego_camera(
        tuple(pose),
        cfg.view_yaw_offsets[view],
        cfg.camera_height,
        cfg.focal_length_px,
        cfg.image_size,
    )


def style_multiplier(style: tuple[int, int]) -> np.ndarray:
    weather, tod = style
    tint = np.array(WEATHER_TINTS[weather])
    return tint * TIMEOFDAY_BRIGHTNESS[tod]


def render_frame(scenario: Scenario, t: int, view: int = 0) -> np.ndarray:
    """(H, W, 3) float32 pixels in [0, 1] for frame t of the given view."""
    if not 0 <= t < scenario.duration_frames:
        raise IndexError(f"frame {t} out of range [0, {scenario.duration_frames})")
    cfg = scenario.config
    cam = camera_for(scenario, t, view)
    w, h = cfg.image_size
    horizon = int(round(cam.principal_point[1]))

    pixels = np.empty((h, w, 3), dtype=np.float64)
    pixels[:horizon] = SKY_COLOR
    pixels[horizon:] = GROUND_COLOR

    raster = rasterize_hdmap(scenario.map, cam).pixels
    for ch, color in enumerate(LAYER_COLORS):
        pixels[raster[:, :, ch] == 1] = color

    pixels *= style_multiplier(scenario.style)

    time_s = t * scenario.dt
    boxes = [agent.box_at(time_s) for agent in scenario.agents]
    depths = []
    for box in boxes:
        z = cam.pose.apply(box.center.reshape(1, 3))[0, 2]
        depths.append(z)
    for idx in np.argsort(depths)[::-1]:   # far to near
        box = boxes[int(idx)]
        pb = project_box(box, cam)
        if not pb.valid:
            continue
        corners_px = pb.corners_uv.reshape(8, 2) * np.array([w, h])
        mask = hull_mask(corners_px, h, w)
        pixels[mask] = CATEGORY_COLORS[box.category_id]

    return np.clip(pixels, 0.0, 1.0).astype(np.float32)
