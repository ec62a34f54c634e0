"""Environment registry keyed by env id string."""

from __future__ import annotations

from ..errors import ConfigurationError
from .ctf import CtfEnv, CtfLevel, generate_ctf_level
from .harvest import (
    HarvestLevel,
    HarvestPatchEnv,
    generate_harvest_level,
    sample_harvest_params,
)
from .overcooked import KitchenEnv, KitchenLevel, generate_kitchen_level
from .traffic import TrafficEnv, TrafficLevel, generate_traffic_level

ENV_IDS = ("harvest_patch", "traffic_navigation", "overcooked", "capture_the_flag")

_ENV_CLASSES = {
    "harvest_patch": HarvestPatchEnv,
    "traffic_navigation": TrafficEnv,
    "overcooked": KitchenEnv,
    "capture_the_flag": CtfEnv,
}
_LEVEL_CLASSES = {
    "harvest_patch": HarvestLevel,
    "traffic_navigation": TrafficLevel,
    "overcooked": KitchenLevel,
    "capture_the_flag": CtfLevel,
}


def env_class(env_id: str):
    try:
        return _ENV_CLASSES[env_id]
    except KeyError:
        raise ConfigurationError(f"unknown env id {env_id!r}; choose from {ENV_IDS}") from None


def level_class(env_id: str):
    try:
        return _LEVEL_CLASSES[env_id]
    except KeyError:
        raise ConfigurationError(f"unknown env id {env_id!r}; choose from {ENV_IDS}") from None


def make(env_id: str, level):
    """Instantiate the environment for `env_id` on the given level."""
    return env_class(env_id)(level)


def generate_level(env_id: str, seed: int, **params):
    """Run the procedural generator for `env_id` with the given seed."""
    if env_id == "harvest_patch":
        if params:
            return generate_harvest_level(
                params["patches"], params["radius"], params["density"], seed
            )
        return generate_harvest_level(*sample_harvest_params(seed), seed)
    if env_id == "traffic_navigation":
        return generate_traffic_level(seed)
    if env_id == "overcooked":
        return generate_kitchen_level(seed)
    if env_id == "capture_the_flag":
        return generate_ctf_level(seed)
    raise ConfigurationError(f"unknown env id {env_id!r}; choose from {ENV_IDS}")


def load_level(text: str):
    """Parse a level file, dispatching on its env header."""
    from ..procgen import parse_level_text

    header = parse_level_text(text)
    return level_class(header.get("env", "")).from_text(text)
