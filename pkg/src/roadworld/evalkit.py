"""Desk-scale evaluation: trajectory error, collision rate, condition
adherence, and pixel metrics.

All functions are pure.  Distribution metrics against real data are out of
scope here; the distances reported by the original evaluation protocol on
real driving data are referenced in the README only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation

from .geometry import hull_mask, integrate_ego
from .synthworld.render import RENDER_CONTRAST_MARGIN
from .synthworld.scenario import Scenario

EGO_FOOTPRINT = (4.0, 1.8)       # length, width in meters
HORIZON_S = 3.0
PSNR_CAP_DB = 99.0


@dataclass(frozen=True)
class TrajectoryEval:
    l2_avg: float          # meters
    collision_avg: float   # fraction in [0, 1]
    horizon_s: float

    def __post_init__(self) -> None:
        if self.l2_avg < 0 or not 0.0 <= self.collision_avg <= 1.0:
            raise ValueError("invalid trajectory metrics")


def _fit_horizon(actions: np.ndarray, n: int) -> np.ndarray:
    """Truncate or repeat-last-pad to exactly n actions."""
    actions = np.asarray(actions, dtype=np.float64)
    if len(actions) >= n:
        return actions[:n]
    pad = np.repeat(actions[-1:], n - len(actions), axis=0)
    return np.concatenate([actions, pad], axis=0)


def trajectory_l2(
    pred_actions, gt_actions, dt: float, horizon_s: float = HORIZON_S
) -> float:
    """Mean waypoint distance between the two integrated trajectories."""
    pred = np.asarray(pred_actions, dtype=np.float64)
    gt = np.asarray(gt_actions, dtype=np.float64)
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(gt)}")
    n = int(round(horizon_s / dt))
    pred, gt = _fit_horizon(pred, n), _fit_horizon(gt, n)
    wp_pred = integrate_ego(pred, dt, (0.0, 0.0, 0.0))[1:, :2]
    wp_gt = integrate_ego(gt, dt, (0.0, 0.0, 0.0))[1:, :2]
    return float(np.mean(np.linalg.norm(wp_pred - wp_gt, axis=1)))


def _rect_corners(center, half_l, half_w, heading) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    axes = np.array([[c, s], [-s, c]])
    offsets = np.array(
        [[half_l, half_w], [half_l, -half_w], [-half_l, -half_w], [-half_l, half_w]]
    )
    return np.asarray(center) + offsets @ axes


def rects_overlap(c1, size1, heading1, c2, size2, heading2) -> bool:
    """Oriented-rectangle intersection via the separating-axis theorem."""
    r1 = _rect_corners(c1, size1[0] / 2, size1[1] / 2, heading1)
    r2 = _rect_corners(c2, size2[0] / 2, size2[1] / 2, heading2)
    for heading in (heading1, heading2):
        c, s = math.cos(heading), math.sin(heading)
        for axis in ((c, s), (-s, c)):
            p1 = r1 @ axis
            p2 = r2 @ axis
            if p1.max() < p2.min() or p2.max() < p1.min():
                return False
    return True


def collision_rate(pred_actions, scenario: Scenario, dt: float,
                   horizon_s: float = HORIZON_S) -> float:
    """Fraction of predicted waypoints whose ego footprint hits an agent."""
    pred = _fit_horizon(np.asarray(pred_actions, dtype=np.float64), int(round(horizon_s / dt)))
    poses = integrate_ego(pred, dt, (0.0, 0.0, 0.0))[1:]
    if len(poses) == 0:
        return 0.0
    hits = 0
    for k, pose in enumerate(poses, start=1):
        t = k * dt
        for agent in scenario.agents:
            x, y, heading = agent.script.pose_at(t)
            if rects_overlap(
                pose[:2], EGO_FOOTPRINT, pose[2],
                (x, y), agent.size[:2], heading,
            ):
                hits += 1
                break
    return hits / len(poses)


def _box_contrast(frame: np.ndarray, corners16: np.ndarray,
                  occupied: np.ndarray) -> float | None:
    """Max-channel |hull mean - surround mean|; None when unmeasurable."""
    h, w = frame.shape[:2]
    corners_px = corners16.reshape(8, 2) * np.array([w, h])
    mask = hull_mask(corners_px, h, w)
    if mask.sum() < 4:
        return None
    ring = binary_dilation(mask, iterations=3) & ~occupied
    if ring.sum() < 4:
        return None
    diff = np.abs(frame[mask].mean(axis=0) - frame[ring].mean(axis=0))
    return float(diff.max())


def conditional_adherence(frames: np.ndarray, boxes: np.ndarray,
                          categories: np.ndarray) -> float:
    """Fraction of valid boxes whose hull contrasts with its surround.

    frames (N, H, W, 3) in [0, 1]; boxes (N, N_B, 16) normalized uv;
    categories (N, N_B).  The pass threshold is half the renderer's
    guaranteed contrast margin.  Boxes too small to measure are skipped;
    a box-free input scores 1.0 (vacuously adherent).
    """
    if len(frames) != len(boxes):
        raise ValueError("frames and boxsets must align")
    threshold = RENDER_CONTRAST_MARGIN / 2.0
    measured = 0
    passed = 0
    for n in range(len(frames)):
        frame = np.asarray(frames[n], dtype=np.float64)
        h, w = frame.shape[:2]
        valid = [
            i for i in range(boxes.shape[1])
            if categories[n, i] != 0 or np.any(boxes[n, i] != 0.0)
        ]
        occupied = np.zeros(frame.shape[:2], dtype=bool)
        for i in valid:
            corners_px = boxes[n, i].reshape(8, 2) * np.array([w, h])
            occupied |= hull_mask(corners_px, h, w)
        for i in valid:
            contrast = _box_contrast(frame, boxes[n, i], occupied)
            if contrast is None:
                continue
            measured += 1
            if contrast > threshold:
                passed += 1
    return passed / measured if measured else 1.0


def pixel_metrics(pred: np.ndarray, gt: np.ndarray) -> dict[str, float]:
    """MSE and PSNR (10 log10(1/mse), capped at 99 dB) between clips."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    mse = float(np.mean((pred - gt) ** 2))
    if mse < 10 ** (-PSNR_CAP_DB / 10):
        psnr = PSNR_CAP_DB
    else:
        psnr = min(10.0 * math.log10(1.0 / mse), PSNR_CAP_DB)
    return {"mse": mse, "psnr": psnr}
