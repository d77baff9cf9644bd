"""Episode assembly and the on-disk episode directory format.

Layout (one directory per episode):
    manifest.json            shapes, style, scenario seed, config + hash
    actions.json             [[speed, yaw], ...]
    cameras.json             per-view rig parameters
    view{v}/frame_{t:03d}.png     rendered pixels, 8-bit RGB
    view{v}/raster_{t:03d}.png    binary condition raster (0 or 255)
    view{v}/boxes.json            boxes [N][N_B][16] and categories [N][N_B]

Rasters, boxes and actions round-trip bit-exactly; frames within 1/255.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ..geometry import ProjectedBox, project_box
from .render import camera_for, render_frame
from .scenario import GenConfig, Scenario, gen_config_from_dict, generate_scenario
from ..geometry import rasterize_hdmap

SCHEMA = "roadworld-episode/v1"


class EpisodeLoadError(RuntimeError):
    pass


@dataclass
class Episode:
    frames: np.ndarray       # (V, N, H, W, 3) float32 in [0, 1]
    rasters: np.ndarray      # (V, N, H, W, 3) uint8 in {0, 1}
    boxes: np.ndarray        # (V, N, N_B, 16) float64
    categories: np.ndarray   # (V, N, N_B) int64
    actions: np.ndarray      # (N, 2) float64
    style: tuple[int, int]
    cameras: list[dict]      # per-view rig parameters
    scenario_seed: int
    gen_config: GenConfig

    @property
    def n_views(self) -> int:
        return self.frames.shape[0]

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]

    def scenario(self) -> Scenario:
        return generate_scenario(self.scenario_seed, self.gen_config)


def _boxset_for_frame(scenario: Scenario, t: int, view: int) -> tuple[np.ndarray, np.ndarray]:
    """Zero-padded (N_B, 16) boxes and (N_B,) categories, nearest first."""
    cfg = scenario.config
    cam = camera_for(scenario, t, view)
    time_s = t * scenario.dt
    projected: list[tuple[float, ProjectedBox]] = []
    for agent in scenario.agents:
        box = agent.box_at(time_s)
        pb = project_box(box, cam)
        if pb.valid:
            depth = float(cam.pose.apply(box.center.reshape(1, 3))[0, 2])
            projected.append((depth, pb))
    projected.sort(key=lambda p: p[0])
    boxes = np.zeros((cfg.n_boxes, 16), dtype=np.float64)
    cats = np.zeros(cfg.n_boxes, dtype=np.int64)
    for i, (_, pb) in enumerate(projected[: cfg.n_boxes]):
        boxes[i] = pb.corners_uv
        cats[i] = pb.category_id
    return boxes, cats


def build_episode(scenario: Scenario) -> Episode:
    cfg = scenario.config
    v_count = len(cfg.view_yaw_offsets)
    n = scenario.duration_frames
    w, h = cfg.image_size
    frames = np.zeros((v_count, n, h, w, 3), dtype=np.float32)
    rasters = np.zeros((v_count, n, h, w, 3), dtype=np.uint8)
    boxes = np.zeros((v_count, n, cfg.n_boxes, 16), dtype=np.float64)
    cats = np.zeros((v_count, n, cfg.n_boxes), dtype=np.int64)
    for v in range(v_count):
        for t in range(n):
            frames[v, t] = render_frame(scenario, t, v)
            cam = camera_for(scenario, t, v)
            rasters[v, t] = rasterize_hdmap(scenario.map, cam).pixels
            boxes[v, t], cats[v, t] = _boxset_for_frame(scenario, t, v)
    cameras = [
        {
            "yaw_offset": cfg.view_yaw_offsets[v],
            "height": cfg.camera_height,
            "focal_length_px": cfg.focal_length_px,
            "image_size": list(cfg.image_size),
        }
        for v in range(v_count)
    ]
    return Episode(
        frames, rasters, boxes, cats, scenario.action_array(),
        scenario.style, cameras, scenario.seed, cfg,
    )


def _write_png(path: Path, array_u8: np.ndarray) -> None:
    Image.fromarray(array_u8, mode="RGB").save(path)


def export_episode(episode: Episode, path: str | Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    cfg_dict = episode.gen_config.to_dict()
    manifest = {
        "schema": SCHEMA,
        "n_views": episode.n_views,
        "n_frames": episode.n_frames,
        "image_size": list(episode.gen_config.image_size),
        "n_boxes": episode.gen_config.n_boxes,
        "style": list(episode.style),
        "scenario_seed": episode.scenario_seed,
        "gen_config": cfg_dict,
        "config_hash": hashlib.sha256(json.dumps(cfg_dict, sort_keys=True).encode()).hexdigest()[:16],
        "frame_rate_hz": episode.gen_config.frame_rate_hz,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=1))
    (path / "actions.json").write_text(json.dumps(episode.actions.tolist()))
    (path / "cameras.json").write_text(json.dumps(episode.cameras))
    for v in range(episode.n_views):
        vdir = path / f"view{v}"
        vdir.mkdir(exist_ok=True)
        for t in range(episode.n_frames):
            _write_png(vdir / f"frame_{t:03d}.png", np.round(episode.frames[v, t] * 255).astype(np.uint8))
            _write_png(vdir / f"raster_{t:03d}.png", episode.rasters[v, t] * 255)
        (vdir / "boxes.json").write_text(
            json.dumps({"boxes": episode.boxes[v].tolist(), "categories": episode.categories[v].tolist()})
        )
    return path


def load_episode(path: str | Path) -> Episode:
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise EpisodeLoadError(f"manifest missing in {path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("schema") != SCHEMA:
        raise EpisodeLoadError(f"unknown episode schema {manifest.get('schema')!r}")
    for name in ("actions.json", "cameras.json"):
        if not (path / name).exists():
            raise EpisodeLoadError(f"{name.split('.')[0]} missing in {path}")
    actions = np.array(json.loads((path / "actions.json").read_text()), dtype=np.float64)
    cameras = json.loads((path / "cameras.json").read_text())
    n_views, n = manifest["n_views"], manifest["n_frames"]
    w, h = manifest["image_size"]
    nb = manifest["n_boxes"]
    frames = np.zeros((n_views, n, h, w, 3), dtype=np.float32)
    rasters = np.zeros((n_views, n, h, w, 3), dtype=np.uint8)
    boxes = np.zeros((n_views, n, nb, 16), dtype=np.float64)
    cats = np.zeros((n_views, n, nb), dtype=np.int64)
    for v in range(n_views):
        vdir = path / f"view{v}"
        boxes_path = vdir / "boxes.json"
        if not boxes_path.exists():
            raise EpisodeLoadError(f"boxes missing for view {v} in {path}")
        data = json.loads(boxes_path.read_text())
        boxes[v] = np.array(data["boxes"], dtype=np.float64)
        cats[v] = np.array(data["categories"], dtype=np.int64)
        for t in range(n):
            f_path = vdir / f"frame_{t:03d}.png"
            r_path = vdir / f"raster_{t:03d}.png"
            if not f_path.exists():
                raise EpisodeLoadError(f"frames missing for view {v} frame {t} in {path}")
            if not r_path.exists():
                raise EpisodeLoadError(f"rasters missing for view {v} frame {t} in {path}")
            frames[v, t] = np.asarray(Image.open(f_path), dtype=np.float32) / 255.0
            rasters[v, t] = (np.asarray(Image.open(r_path)) > 127).astype(np.uint8)
    return Episode(
        frames, rasters, boxes, cats, actions,
        tuple(manifest["style"]), cameras, manifest["scenario_seed"],
        gen_config_from_dict(manifest["gen_config"]),
    )


def generate_dataset(seed: int, episodes: int, out_dir: str | Path, config: GenConfig) -> list[Path]:
    """Write `episodes` episode directories under out_dir; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(episodes):
        scenario = generate_scenario(seed + i, config)
        ep = build_episode(scenario)
        paths.append(export_episode(ep, out_dir / f"episode_{i:04d}"))
    return paths
