"""gridarena: deterministic multi-agent gridworld arenas and evaluation.

Four n-player games (HarvestPatch, Traffic Navigation, Overcooked,
Capture the Flag) with seeded procedural level generators, a scripted
policy zoo, the expected-action-variation diversity metric, cross-play /
Elo evaluation, and a classical statistics pipeline.
"""

from .core import (
    EpisodeConfig,
    GridPos,
    Observation,
    StepRecord,
    Trajectory,
    discounted_return,
    read_trajectory_log,
    run_episode,
    write_trajectory_log,
)
from .envs import ENV_IDS, generate_level, load_level, make
from .errors import ConfigurationError, GenerationError, GridArenaError, LevelParseError

__version__ = "0.1.0"

__all__ = [
    "ENV_IDS",
    "ConfigurationError",
    "EpisodeConfig",
    "GenerationError",
    "GridArenaError",
    "GridPos",
    "LevelParseError",
    "Observation",
    "StepRecord",
    "Trajectory",
    "discounted_return",
    "generate_level",
    "load_level",
    "make",
    "read_trajectory_log",
    "run_episode",
    "write_trajectory_log",
    "__version__",
]
