"""Shared environment machinery: base class, movement resolution, digests.

Joint actions resolve simultaneously. Movement conflicts are settled by a
fixed-point pass with one of two rules: "priority" (lowest player index
wins a contested cell, losers stay) or "bounce" (everybody contesting a
cell stays). Position swaps through each other are always refused; longer
move cycles (three or more players rotating) are allowed since every
player enters a freshly vacated cell.
"""

from __future__ import annotations

import hashlib
from array import array

from ..core import Observation
from ..errors import ConfigurationError
from ..seeding import derive_seed, make_rng


class GridEnv:
    """Base for the four environments: seeded, instance-confined state."""

    env_id: str = ""
    num_players: int = 0
    num_actions: int = 0
    default_horizon: int = 0
    aux_channel_names: tuple = ()
    obs_shape: tuple = ()

    def __init__(self, level):
        self.level = level
        self.level_id = level.level_id
        self.step_count = 0
        self.rng = make_rng(0)

    def reset(self, seed: int) -> None:
        self.rng = make_rng(derive_seed(seed, self.env_id, "episode"))
        self.step_count = 0
        self._reset_state()

    def _reset_state(self) -> None:
        raise NotImplementedError

    def step(self, actions) -> list:
        raise NotImplementedError

    def observe(self, player: int, include_pixels: bool = True) -> Observation:
        raise NotImplementedError

    def state_digest(self) -> bytes:
        raise NotImplementedError

    def _check_actions(self, actions) -> list:
        if len(actions) != self.num_players:
            raise ConfigurationError(
                f"{self.env_id} expects {self.num_players} actions, got {len(actions)}"
            )
        acts = [int(a) for a in actions]
        for a in acts:
            if not 0 <= a < self.num_actions:
                raise ValueError(f"action id {a} outside [0, {self.num_actions})")
        return acts


def resolve_moves(current: list, wanted: list, rule: str):
    """Resolve simultaneous moves; returns (positions, collision_events).

    `current` and `wanted` are per-player cells (wanted == current for
    players that hold still or were blocked by walls). Collision events
    are frozensets of the players involved; they are only meaningful under
    the "bounce" rule (Traffic Navigation charges -1 per event).
    """
    n = len(current)
    bounced = set()
    events = []

    moving = [i for i in range(n) if wanted[i] != current[i]]
    for ai in range(len(moving)):
        for bi in range(ai + 1, len(moving)):
            i, j = moving[ai], moving[bi]
            if wanted[i] == current[j] and wanted[j] == current[i]:
                bounced.add(i)
                bounced.add(j)
                events.append(frozenset((i, j)))

    while True:
        target = [
            current[i] if (i in bounced or wanted[i] == current[i]) else wanted[i]
            for i in range(n)
        ]
        stayers = {current[i]: i for i in range(n) if target[i] == current[i]}
        claims: dict = {}
        for i in range(n):
            if target[i] != current[i]:
                claims.setdefault(target[i], []).append(i)

        newly = []
        for cell in sorted(claims):
            claimants = claims[cell]
            if cell in stayers:
                newly.extend(claimants)
                events.append(frozenset(claimants + [stayers[cell]]))
            elif len(claimants) >= 2:
                if rule == "priority":
                    newly.extend(claimants[1:])  # lowest index wins
                else:
                    newly.extend(claimants)
                    events.append(frozenset(claimants))
        if not newly:
            break
        bounced.update(newly)

    final = [current[i] if i in bounced or wanted[i] == current[i] else wanted[i] for i in range(n)]
    if rule == "priority":
        events = []
    return final, events


def state_digest_of(*int_chunks) -> bytes:
    """8-byte BLAKE2b digest of integer sequences, in argument order."""
    h = hashlib.blake2b(digest_size=8)
    for chunk in int_chunks:
        h.update(array("q", chunk).tobytes())
    return h.digest()
