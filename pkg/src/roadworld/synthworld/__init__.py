from .episodes import (
    Episode,
    EpisodeLoadError,
    build_episode,
    export_episode,
    generate_dataset,
    load_episode,
)
from .render import (
    CATEGORY_COLORS,
    RENDER_CONTRAST_MARGIN,
    camera_for,
    ego_poses,
    render_frame,
)
from .scenario import (
    Action,
    AgentSpec,
    GenConfig,
    MotionScript,
    Scenario,
    WEATHER_NAMES,
    TIMEOFDAY_NAMES,
    CATEGORY_NAMES,
    gen_config_from_dict,
    generate_scenario,
)

__all__ = [
    "Action",
    "AgentSpec",
    "CATEGORY_COLORS",
    "CATEGORY_NAMES",
    "Episode",
    "EpisodeLoadError",
    "GenConfig",
    "MotionScript",
    "RENDER_CONTRAST_MARGIN",
    "Scenario",
    "TIMEOFDAY_NAMES",
    "WEATHER_NAMES",
    "build_episode",
    "camera_for",
    "ego_poses",
    "export_episode",
    "gen_config_from_dict",
    "generate_dataset",
    "generate_scenario",
    "load_episode",
    "render_frame",
]
