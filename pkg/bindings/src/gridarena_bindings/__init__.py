"""Embedding layer for external training stacks.

Exposes the engine through a minimal handle-based surface — `make`,
`BoundEnv.reset/step/observe/close` — plus expected-action-variation and
Elo entry points that accept plain callables. The layer consumes only the
host package's public API and adds no simulation logic of its own, so a
bound rollout is bit-identical to a native one.

Observation pixel buffers are exposed as read-only numpy views (zero-copy
from the engine's render buffers); copy before mutating.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from gridarena import load_level, make as _make_env
from gridarena.errors import GridArenaError
from gridarena.eav import expected_action_variation
from gridarena.evaluation import MatchResult, elo_update, fit_elo
from gridarena.policies import ACTION_COUNTS, Policy, Population

__all__ = ["BoundEnv", "make", "eav", "elo_update", "fit_elo", "MatchResult",
            "ClosedHandleError"]


class ClosedHandleError(GridArenaError):
    """Operation on a handle after close()."""


def _freeze(obs):
    if obs.pixels is None:
        return obs
    pixels = obs.pixels.view()
    pixels.flags.writeable = False
    return type(obs)(pixels=pixels, aux=obs.aux)


class BoundEnv:
    """Handle to one environment instance.

    `reset` accepts level text, bytes, or a path; `step` takes one action
    id per player and returns (observations, rewards, done) with `done`
    true exactly at the episode horizon. The handle is single-threaded;
    operations after `close()` raise ClosedHandleError.
    """

    def __init__(self, env_id: str):
        self.env_id = env_id
        self._env = None
        self._closed = False
        self._horizon = None
        self._t = 0

    @property
    def num_players(self) -> int:
        self._check_open()
        if self._env is None:
            raise ClosedHandleError("reset() the handle before querying players")
        return self._env.num_players

    def reset(self, level, seed: int, horizon: int | None = None):
        """Load a level (text / bytes / path) and start an episode."""
        self._check_open()
        text = _level_text(level)
        parsed = load_level(text)
        if parsed.env_id != self.env_id:
            raise GridArenaError(
                f"handle is for {self.env_id!r} but level is {parsed.env_id!r}"
            )
        self._env = _make_env(self.env_id, parsed)
        self._env.reset(seed)
        self._horizon = horizon if horizon is not None else self._env.default_horizon
        self._t = 0
        return [_freeze(self._env.observe(i)) for i in range(self._env.num_players)]

    def step(self, actions):
        self._check_open()
        if self._env is None:
            raise ClosedHandleError("reset() the handle before stepping")
        if len(actions) != self._env.num_players:
            raise ValueError(
                f"expected {self._env.num_players} actions, got {len(actions)}"
            )
        rewards = self._env.step(actions)
        self._t += 1
        obs = [_freeze(self._env.observe(i)) for i in range(self._env.num_players)]
        return obs, rewards, self._t >= self._horizon

    def observe(self, player: int):
        self._check_open()
        if self._env is None:
            raise ClosedHandleError("reset() the handle before observing")
        return _freeze(self._env.observe(player))

    def state_digest(self) -> bytes:
        self._check_open()
        if self._env is None:
            raise ClosedHandleError("reset() the handle first")
        return self._env.state_digest()

    def close(self) -> None:
        self._env = None
        self._closed = True

    def _check_open(self):
        if self._closed:
            raise ClosedHandleError("handle is closed")

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make(env_id: str) -> BoundEnv:
    """Create a handle for the given environment id."""
    if env_id not in ACTION_COUNTS:
        raise GridArenaError(f"unknown env id {env_id!r}")
    return BoundEnv(env_id)


def _level_text(level) -> str:
    if isinstance(level, bytes):
        return level.decode("utf-8")
    if isinstance(level, str) and level.startswith("gridarena-level"):
        return level
    if isinstance(level, (str, Path)):
        return Path(level).read_text()
    raise GridArenaError(f"cannot interpret level source of type {type(level)!r}")


class _CallablePolicy(Policy):
    """Adapter: a callable observation -> action distribution becomes a
    memoryless policy. Queries pass straight through (in-process, so there
    is no boundary worth batching over beyond the engine's own loop)."""

    needs_pixels = True

    def __init__(self, fn):
        self._fn = fn

    def act(self, observation, memory):
        return np.asarray(self._fn(observation), dtype=float), memory


def eav(populations_of_callables, level_sources, E: int = 10, J: int = 10,
        R: int | None = 100, seed: int = 0, horizon: int | None = None) -> dict:
    """Expected action variation for populations given as callables.

    `populations_of_callables` maps population id -> list of callables,
    each taking an observation and returning an action distribution;
    `level_sources` is a list of level texts/bytes/paths sharing one env.
    Returns {population id: value in [0, 1]}.
    """
    levels = [load_level(_level_text(src)) for src in level_sources]
    populations = [
        Population(pop_id, [_CallablePolicy(fn) for fn in fns])
        for pop_id, fns in populations_of_callables.items()
    ]
    report = expected_action_variation(populations, levels, E=E, J=J, R=R,
                                       seed=seed, horizon=horizon)
    return dict(report.eav)
