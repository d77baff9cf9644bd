"""Procedural scenario generation with analytic ground truth.

Every scenario is a pure function of (seed, config): road polylines from a
small template set, scripted agents whose poses are closed-form in time, an
ego action script drawn from maneuver templates, and a discrete style.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..geometry import Box3D, HDMapLayerSet

WEATHER_NAMES = ("sunny", "rain", "night_clear")
TIMEOFDAY_NAMES = ("day", "night")
CATEGORY_NAMES = ("padding", "car", "truck", "bus", "pedestrian", "cyclist")
CATEGORY_SIZES = {
    1: (4.5, 1.9, 1.6),
    2: (7.5, 2.5, 3.0),
    3: (11.0, 2.9, 3.2),
    4: (0.6, 0.6, 1.7),
    5: (1.8, 0.6, 1.7),
}

ROAD_TEMPLATES = ("straight", "curve_left", "curve_right", "intersection")
MANEUVERS = ("cruise", "turn_left", "turn_right", "stop")

LANE_HALF_WIDTH = 3.5


@dataclass(frozen=True)
class Action:
    speed: float   # m/s, [0, 30]
    yaw: float     # rad, absolute heading in [-pi, pi)

    def __post_init__(self) -> None:
        if not 0.0 <= self.speed <= 30.0:
            raise ValueError("speed must lie in [0, 30]")
        if not -math.pi <= self.yaw < math.pi:
            raise ValueError("yaw must lie in [-pi, pi)")


@dataclass(frozen=True)
class GenConfig:
    road_templates: tuple[str, ...] = ROAD_TEMPLATES
    maneuvers: tuple[str, ...] = MANEUVERS
    agent_count_range: tuple[int, int] = (1, 4)
    duration_frames: int = 16
    frame_rate_hz: float = 4.0
    image_size: tuple[int, int] = (128, 64)
    focal_length_px: float = 90.0
    camera_height: float = 1.6
    view_yaw_offsets: tuple[float, ...] = (-0.6981317007977318, 0.0, 0.6981317007977318)
    n_boxes: int = 16

    def __post_init__(self) -> None:
        if not self.road_templates:
            raise ValueError("configuration error: empty road template set")
        if not self.maneuvers:
            raise ValueError("configuration error: empty maneuver set")
        unknown = set(self.road_templates) - set(ROAD_TEMPLATES)
        if unknown:
            raise ValueError(f"configuration error: unknown road templates {sorted(unknown)}")
        unknown = set(self.maneuvers) - set(MANEUVERS)
        if unknown:
            raise ValueError(f"configuration error: unknown maneuvers {sorted(unknown)}")
        if self.duration_frames < 2:
            raise ValueError("duration_frames must be >= 2")

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate_hz

    def to_dict(self) -> dict:
        return asdict(self)


def gen_config_from_dict(d: dict) -> GenConfig:
    d = dict(d)
    for k in ("road_templates", "maneuvers", "agent_count_range", "image_size", "view_yaw_offsets"):
        if k in d:
            d[k] = tuple(d[k])
    return GenConfig(**d)


@dataclass(frozen=True)
class MotionScript:
    """Closed-form agent motion.

    kind "constant_velocity": pose(t) = origin + velocity * t, fixed heading.
    kind "arc": circular motion about center with radius and angular rate.
    """

    kind: str
    origin: tuple[float, float] = (0.0, 0.0)
    velocity: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    angle0: float = 0.0
    angular_rate: float = 0.0

    def pose_at(self, t: float) -> tuple[float, float, float]:
        if self.kind == "constant_velocity":
            return (
                self.origin[0] + self.velocity[0] * t,
                self.origin[1] + self.velocity[1] * t,
                self.heading,
            )
        if self.kind == "arc":
            ang = self.angle0 + self.angular_rate * t
            x = self.center[0] + self.radius * math.cos(ang)
            y = self.center[1] + self.radius * math.sin(ang)
            heading = ang + math.copysign(math.pi / 2, self.angular_rate or 1.0)
            return (x, y, _wrap_angle(heading))
        raise ValueError(f"unknown motion kind {self.kind!r}")


@dataclass(frozen=True)
class AgentSpec:
    category_id: int
    size: tuple[float, float, float]
    script: MotionScript

    def box_at(self, t: float) -> Box3D:
        x, y, heading = self.script.pose_at(t)
        l, w, h = self.size
        return Box3D(
            np.array([x, y, h / 2.0]), np.array([l, w, h]), _wrap_angle(heading), self.category_id
        )


@dataclass(frozen=True)
class Scenario:
    seed: int
    map: HDMapLayerSet
    agents: tuple[AgentSpec, ...]
    ego_script: tuple[Action, ...]
    style: tuple[int, int]           # (weather_id, timeofday_id)
    duration_frames: int
    frame_rate_hz: float
    road_template: str
    maneuver: str
    config: GenConfig

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate_hz

    def action_array(self) -> np.ndarray:
        return np.array([[a.speed, a.yaw] for a in self.ego_script])


def _wrap_angle(a: float) -> float:
    return float(math.atan2(math.sin(a), math.cos(a)))


def _line(p0, p1, step: float = 2.0) -> np.ndarray:
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    n = max(2, int(np.ceil(np.hypot(*(p1 - p0)) / step)) + 1)
    return np.linspace(p0, p1, n)


def _arc(center, radius, a0, a1, step: float = 0.05) -> np.ndarray:
    n = max(2, int(abs(a1 - a0) / step) + 1)
    ang = np.linspace(a0, a1, n)
    return np.stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)], axis=1)


def _road_polylines(template: str) -> tuple[HDMapLayerSet, list[MotionScript]]:
    """Map layers plus per-lane constant-speed scripts for agents to follow."""
    lanes: list[MotionScript] = []

    def lane(y: float, speed: float = 0.0):
        return MotionScript("constant_velocity", origin=(0.0, y), velocity=(speed, 0.0), heading=0.0)

    if template == "straight":
        boundary = (_line((-10, -LANE_HALF_WIDTH), (90, -LANE_HALF_WIDTH)),
                    _line((-10, LANE_HALF_WIDTH), (90, LANE_HALF_WIDTH)))
        divider = (_line((-10, 0), (90, 0)),)
        layers = HDMapLayerSet(lane_boundary=boundary, lane_divider=divider)
        lanes = [lane(-1.75), lane(1.75)]
    elif template in ("curve_left", "curve_right"):
        sign = 1.0 if template == "curve_left" else -1.0
        r = 45.0
        center = (0.0, sign * r)
        a0 = -sign * math.pi / 2
        a1 = a0 + sign * 1.5
        boundary = (_arc(center, r + LANE_HALF_WIDTH, a0, a1),
                    _arc(center, r - LANE_HALF_WIDTH, a0, a1))
        divider = (_arc(center, r, a0, a1),)
        layers = HDMapLayerSet(lane_boundary=boundary, lane_divider=divider)
        for off in (-1.75, 1.75):
            lanes.append(MotionScript("arc", center=center, radius=r + sign * off,
                                      angle0=a0, angular_rate=0.0))
    else:  # intersection
        boundary = (
            _line((-10, -LANE_HALF_WIDTH), (90, -LANE_HALF_WIDTH)),
            _line((-10, LANE_HALF_WIDTH), (90, LANE_HALF_WIDTH)),
            _line((30 - LANE_HALF_WIDTH, -45), (30 - LANE_HALF_WIDTH, 45)),
            _line((30 + LANE_HALF_WIDTH, -45), (30 + LANE_HALF_WIDTH, 45)),
        )
        divider = (_line((-10, 0), (90, 0)), _line((30, -45), (30, 45)))
        stripes = tuple(
            _line((24.0, y), (26.0, y)) for y in (-3.0, -1.5, 0.0, 1.5, 3.0)
        )
        layers = HDMapLayerSet(lane_boundary=boundary, lane_divider=divider,
                               pedestrian_crossing=stripes)
        lanes = [lane(-1.75), lane(1.75)]
    return layers, lanes


def ego_maneuver_script(maneuver: str, n_frames: int, dt: float, rng: np.random.Generator) -> tuple[Action, ...]:
    """Action sequence for one maneuver template.

    Turns hold heading for a short lead-in, then ramp yaw at a constant
    per-frame rate (strictly monotone over the turn segment).
    """
    if maneuver == "cruise":
        speed = float(rng.uniform(6.0, 10.0))
        return tuple(Action(speed, 0.0) for _ in range(n_frames))
    if maneuver in ("turn_left", "turn_right"):
        sign = 1.0 if maneuver == "turn_left" else -1.0
        speed = float(rng.uniform(4.0, 7.0))
        lead_in = int(rng.integers(2, 5))
        rate = float(rng.uniform(0.04, 0.08)) * sign
        actions = []
        yaw = 0.0
        for i in range(n_frames):
            if i >= lead_in:
                yaw += rate
            actions.append(Action(speed, _wrap_angle(yaw)))
        return tuple(actions)
    if maneuver == "stop":
        v0 = float(rng.uniform(6.0, 10.0))
        return tuple(
            Action(max(0.0, v0 * (1.0 - i / max(1, n_frames - 4))), 0.0) for i in range(n_frames)
        )
    raise ValueError(f"unknown maneuver {maneuver!r}")


def generate_scenario(seed: int, config: GenConfig) -> Scenario:
    """Deterministic scenario draw; all randomness flows from the seed."""
    rng = np.random.default_rng(seed)
    template = config.road_templates[int(rng.integers(len(config.road_templates)))]
    layers, lanes = _road_polylines(template)

    maneuver = config.maneuvers[int(rng.integers(len(config.maneuvers)))]
    ego_script = ego_maneuver_script(maneuver, config.duration_frames, config.dt, rng)

    lo, hi = config.agent_count_range
    n_agents = int(rng.integers(lo, hi + 1))
    agents = []
    # spread agents longitudinally so projected hulls rarely overlap
    xs = 12.0 + np.cumsum(rng.uniform(10.0, 18.0, size=max(n_agents, 1)))
    for i in range(n_agents):
        category = int(rng.integers(1, len(CATEGORY_NAMES)))
        size = CATEGORY_SIZES[category]
        lane_script = lanes[int(rng.integers(len(lanes)))]
        speed = float(rng.uniform(0.0, 6.0)) if category in (1, 2, 3) else 0.0
        if lane_script.kind == "constant_velocity":
            script = MotionScript(
                "constant_velocity",
                origin=(float(xs[i]), lane_script.origin[1]),
                velocity=(speed, 0.0),
                heading=0.0,
            )
        else:
            s0 = float(xs[i]) / lane_script.radius
            sign = 1.0 if lane_script.angle0 < 0 else -1.0
            ang = lane_script.angle0 + sign * s0
            if speed == 0.0:
                x0 = lane_script.center[0] + lane_script.radius * math.cos(ang)
                y0 = lane_script.center[1] + lane_script.radius * math.sin(ang)
                script = MotionScript(
                    "constant_velocity",
                    origin=(x0, y0),
                    heading=_wrap_angle(ang + sign * math.pi / 2),
                )
            else:
                script = MotionScript(
                    "arc",
                    center=lane_script.center,
                    radius=lane_script.radius,
                    angle0=ang,
                    angular_rate=sign * speed / lane_script.radius,
                )
        agents.append(AgentSpec(category, size, script))

    style = (int(rng.integers(len(WEATHER_NAMES))), int(rng.integers(len(TIMEOFDAY_NAMES))))
    return Scenario(
        seed=seed,
        map=layers,
        agents=tuple(agents),
        ego_script=ego_script,
        style=style,
        duration_frames=config.duration_frames,
        frame_rate_hz=config.frame_rate_hz,
        road_template=template,
        maneuver=maneuver,
        config=config,
    )
