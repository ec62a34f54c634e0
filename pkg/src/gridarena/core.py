"""Engine core: the shared Markov-game contract and episode loop.

All four environments implement the same small surface (reset / step /
observe / state_digest); `run_episode` drives any of them with a list of
policies and produces a fully reproducible `Trajectory`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .seeding import derive_seed, make_rng

TRAJECTORY_LOG_VERSION = 1


class GridPos(NamedTuple):
    """A cell coordinate. Row 0 is the top row, column 0 the left column."""

    row: int
    col: int


@dataclass(frozen=True)
class EpisodeConfig:
    """Episode parameters: player count, horizon, discount factor, seed."""

    num_players: int
    horizon: int
    discount: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.num_players < 1:
            raise ConfigurationError(f"num_players must be >= 1, got {self.num_players}")
        if self.horizon < 0:
            raise ConfigurationError(f"horizon must be >= 0, got {self.horizon}")
        if not (0.0 <= self.discount < 1.0):
            raise ConfigurationError(f"discount must lie in [0, 1), got {self.discount}")


@dataclass(frozen=True)
class Observation:
    """One player's view: an RGB pixel tensor plus named auxiliary scalars.

    `pixels` is an (H, W, 3) uint8 array whose dimensions are fixed per
    environment. `aux` carries environment-specific scalar channels in the
    order declared by the environment's `aux_channel_names`. Environments
    can skip rendering (``pixels=None``) for policies that declare they do
    not read pixels; every externally recorded observation has pixels.
    """

    pixels: Optional[np.ndarray]
    aux: tuple = ()


@dataclass(frozen=True)
class StepRecord:
    """One simultaneous step: digest of the post-step state, the joint
    action, per-player rewards, and (optionally) per-player observations."""

    state_hash: bytes
    joint_action: tuple
    rewards: tuple
    observations: Optional[tuple] = None


@dataclass
class Trajectory:
    """An episode transcript plus per-player undiscounted returns."""

    env_id: str
    level_id: str
    config: EpisodeConfig
    records: list = field(default_factory=list)

    @property
    def returns(self) -> tuple:
        totals = [0.0] * self.config.num_players
        for rec in self.records:
            for i, r in enumerate(rec.rewards):
                totals[i] += r
        return tuple(totals)

    def __len__(self):
        return len(self.records)


def discounted_return(rewards: Sequence[float], discount: float) -> float:
    """Sum of discount**t * rewards[t]. Requires discount in [0, 1)."""
    if not (0.0 <= discount < 1.0):
        raise ValueError(f"discount must lie in [0, 1), got {discount}")
    total = 0.0
    weight = 1.0
    for r in rewards:
        total += weight * r
        weight *= discount
    return total


def run_episode(env, policies, config: EpisodeConfig, record_observations: bool = False) -> Trajectory:
    """Run one fixed-horizon episode and return its trajectory.

    Every policy is queried every step, including players that are
    currently tagged out (they see whatever the environment renders for
    them). Identical (env level, policies, config) inputs produce a
    bit-identical trajectory: the environment draws from its own seeded
    stream and action sampling draws from a stream derived from
    ``config.seed``.

    With ``record_observations=False`` (the default) step records carry
    ``observations=None`` to keep memory bounded; pass True to retain the
    full per-player observation tensors.
    """
    n = env.num_players
    if len(policies) != n:
        raise ConfigurationError(
            f"{env.env_id} needs {n} policies, got {len(policies)}"
        )
    if config.num_players != n:
        raise ConfigurationError(
            f"config.num_players={config.num_players} but {env.env_id} has n={n}"
        )
    env.reset(config.seed)
    action_rng = make_rng(derive_seed(config.seed, "actions"))
    memories = [p.initial_memory() for p in policies]
    want_pixels = record_observations or any(p.needs_pixels for p in policies)

    traj = Trajectory(env_id=env.env_id, level_id=env.level_id, config=config)
    for _ in range(config.horizon):
        obs = [env.observe(i, include_pixels=want_pixels) for i in range(n)]
        actions = []
        uniforms = action_rng.random(n)
        for i, policy in enumerate(policies):
            dist, memories[i] = policy.act(obs[i], memories[i])
            actions.append(_sample_from_dist(dist, uniforms[i]))
        rewards = env.step(actions)
        traj.records.append(
            StepRecord(
                state_hash=env.state_digest(),
                joint_action=tuple(actions),
                rewards=tuple(rewards),
                observations=tuple(obs) if record_observations else None,
            )
        )
    return traj


def _sample_from_dist(dist, u: float) -> int:
    acc = 0.0
    last = 0
    for a, p in enumerate(dist):
        acc += p
        last = a
        if u < acc:
            return a
    return last


def write_trajectory_log(traj: Trajectory) -> str:
    """Serialize a trajectory as line-delimited text.

    Format (versioned): one header line, then one line per step::

        #gridarena-trajectory v1 env=<id> level=<id> n=<n> T=<horizon> seed=<seed>
        <step> <a1,...,an> <r1,...,rn> <state-hash-hex>

    Rewards are formatted with repr so integers round-trip exactly.
    """
    lines = [
        f"#gridarena-trajectory v{TRAJECTORY_LOG_VERSION} "
        f"env={traj.env_id} level={traj.level_id} n={traj.config.num_players} "
        f"T={traj.config.horizon} seed={traj.config.seed}"
    ]
    for t, rec in enumerate(traj.records):
        acts = ",".join(str(a) for a in rec.joint_action)
        rews = ",".join(repr(float(r)) for r in rec.rewards)
        lines.append(f"{t} {acts} {rews} {rec.state_hash.hex()}")
    return "\n".join(lines) + "\n"


def read_trajectory_log(text: str) -> Trajectory:
    """Parse the output of `write_trajectory_log` (observations are not logged)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0]
    if not header.startswith("#gridarena-trajectory v"):
        raise ValueError("not a gridarena trajectory log")
    fields = dict(part.split("=", 1) for part in header.split()[2:])
    config = EpisodeConfig(
        num_players=int(fields["n"]),
        horizon=int(fields["T"]),
        seed=int(fields["seed"]),
    )
    traj = Trajectory(env_id=fields["env"], level_id=fields["level"], config=config)
    for ln in lines[1:]:
        _, acts, rews, digest = ln.split()
        traj.records.append(
            StepRecord(
                state_hash=bytes.fromhex(digest),
                joint_action=tuple(int(a) for a in acts.split(",")),
                rewards=tuple(float(r) for r in rews.split(",")),
            )
        )
    return traj
