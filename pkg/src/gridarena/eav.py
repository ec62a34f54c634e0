"""Expected action variation: a task-agnostic behavioral diversity score.

Pipeline: simulate episodes per population to pool representative agent
states, estimate every member's action distribution on every pooled
state, then average the pairwise total variation distance over member
pairs and states. The score lives in [0, 1]: 0 for a behaviorally
homogeneous population, 1 when members pick disjoint actions everywhere.

A pooled state is the focal player's observation plus a snapshot of its
policy memory at that timestep; every member of every population is
prompted with that same snapshot.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .core import _sample_from_dist
from .envs import make
from .seeding import derive_seed, make_rng

DEFAULT_E = 10  # episodes per population
DEFAULT_J = 10  # states drawn per episode
DEFAULT_R = 100  # action samples per (member, state)


@dataclass(frozen=True)
class PoolEntry:
    observation: object
    memory: object
    level_id: str
    timestep: int
    seat: int


@dataclass
class StatePool:
    entries: list
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)


@dataclass
class PolicyDistTable:
    """Per population id: array (members, pool entries, actions)."""

    dists: dict
    samples: int | None  # None marks exact mode
    pool_size: int


@dataclass
class EavReport:
    eav: dict  # population id -> value in [0, 1]
    pair_count: dict
    provenance: dict = field(default_factory=dict)

    def text(self) -> str:
        prov = self.provenance
        lines = [
            "# expected action variation "
            f"(E={prov.get('E')} J={prov.get('J')} n={prov.get('n')} "
            f"R={prov.get('R')} seed={prov.get('seed')})"
        ]
        for pop_id in sorted(self.eav):
            lines.append(f"{pop_id}\t{self.eav[pop_id]:.4f}\tpairs={self.pair_count[pop_id]}")
        return "\n".join(lines) + "\n"


def build_state_pool(populations, levels, E: int, J: int, n: int, seed: int,
                     horizon: int | None = None) -> StatePool:
    """Simulate E episodes per population on the shared level set and pool
    J uniformly drawn (timestep, focal seat) states per episode.

    Each episode samples n members with replacement and one level; the
    pool therefore holds len(populations) * E * J entries. Fully
    deterministic in `seed`.
    """
    if E < 1 or J < 1:
        raise ValueError(f"E and J must be >= 1, got E={E}, J={J}")
    if not levels:
        raise ValueError("level set is empty")
    entries = []
    for pop in populations:
        for e in range(E):
            ep_rng = make_rng(derive_seed(seed, "pool", pop.id, e))
            member_idx = ep_rng.integers(0, len(pop.members), size=n)
            level = levels[int(ep_rng.integers(len(levels)))]
            env = make(level.env_id, level)
            if n != env.num_players:
                raise ValueError(
                    f"n={n} does not match {env.env_id} player count {env.num_players}"
                )
            T = horizon if horizon is not None else env.default_horizon
            times = ep_rng.integers(0, T, size=J)
            seats = ep_rng.integers(0, n, size=J)
            capture: dict = {}
            for t, s in zip(times, seats):
                capture.setdefault(int(t), []).append(int(s))
            policies = [pop.members[int(k)] for k in member_idx]
            episode_seed = derive_seed(seed, "pool-episode", pop.id, e)
            entries.extend(
                _simulate_with_capture(env, policies, T, episode_seed, capture)
            )
    return StatePool(
        entries=entries,
        provenance={
            "E": E, "J": J, "n": n, "seed": seed,
            "populations": [pop.id for pop in populations],
            "levels": [lvl.level_id for lvl in levels],
        },
    )


def _simulate_with_capture(env, policies, horizon, seed, capture):
    env.reset(seed)
    n = env.num_players
    action_rng = make_rng(derive_seed(seed, "actions"))
    memories = [p.initial_memory() for p in policies]
    want_pixels = any(p.needs_pixels for p in policies)
    captured = []
    for t in range(horizon):
        for seat in capture.get(t, ()):
            captured.append(PoolEntry(
                observation=env.observe(seat, include_pixels=True),
                memory=copy.deepcopy(memories[seat]),
                level_id=env.level_id,
                timestep=t,
                seat=seat,
            ))
        uniforms = action_rng.random(n)
        actions = []
        for i, policy in enumerate(policies):
            obs = env.observe(i, include_pixels=want_pixels and policy.needs_pixels)
            dist, memories[i] = policy.act(obs, memories[i])
            actions.append(_sample_from_dist(dist, uniforms[i]))
        env.step(actions)
    return captured


def approximate_policy_dists(populations, R: int | None, pool: StatePool,
                             seed: int | None = None) -> PolicyDistTable:
    """Estimate each member's action distribution on each pooled state.

    With integer R, draws R action samples per (member, state) and

    normalizes the histogram, as a black-box evaluation would; with
    R=None the policy's exact distribution is stored directly.
    """
    if R is not None and R < 1:
        raise ValueError(f"R must be >= 1 or None for exact mode, got {R}")
    if seed is None:
        seed = derive_seed(pool.provenance.get("seed", 0), "dists")
    dists = {}
    for pop in populations:
        rows = []
        for m, member in enumerate(pop.members):
            rng = make_rng(derive_seed(seed, pop.id, m))
            per_entry = []
            for entry in pool.entries:
                dist, _ = member.act(entry.observation, copy.deepcopy(entry.memory))
                dist = np.asarray(dist, dtype=float)
                if R is None:
                    per_entry.append(dist)
                else:
                    counts = rng.multinomial(R, dist / dist.sum())
                    per_entry.append(counts / R)
            rows.append(per_entry)
        dists[pop.id] = np.asarray(rows)
    return PolicyDistTable(dists=dists, samples=R, pool_size=len(pool.entries))


def total_variation_distance(p, q, strict_pseudocode: bool = False) -> float:
    """0.5 * sum |p - q| (range [0, 1]); `strict_pseudocode` drops the 0.5
    factor, matching a plain absolute-difference sum (range [0, 2])."""
    s = float(np.abs(np.asarray(p) - np.asarray(q)).sum())
    return s if strict_pseudocode else 0.5 * s


def intra_population_variation(population, pool: StatePool, table: PolicyDistTable,
                               strict_pseudocode: bool = False) -> float:
    """Mean pairwise TVD over all unordered member pairs and pool states.

    Single-member populations have no pairs and score 0 by convention.
    Identically repeated members count as distinct pair partners.
    """
    dists = table.dists[population.id]
    m = len(population.members)
    if m < 2:
        return 0.0
    total = 0.0
    pairs = 0
    for i in range(m):
        for j in range(i + 1, m):
            diff = np.abs(dists[i] - dists[j]).sum(axis=1)
            tvd = diff if strict_pseudocode else 0.5 * diff
            total += float(tvd.mean())
            pairs += 1
    return total / pairs


def expected_action_variation(populations, levels, E: int = DEFAULT_E,
                              J: int = DEFAULT_J, n: int | None = None,
                              R: int | None = DEFAULT_R, seed: int = 0,
                              horizon: int | None = None,
                              strict_pseudocode: bool = False) -> EavReport:
    """End-to-end expected action variation for multiple populations."""
    if n is None:
        env = make(levels[0].env_id, levels[0])
        n = env.num_players
    pool = build_state_pool(populations, levels, E, J, n, seed, horizon=horizon)
    table = approximate_policy_dists(populations, R, pool)
    eav = {}
    pair_count = {}
    for pop in populations:
        eav[pop.id] = intra_population_variation(pop, pool, table,
                                                 strict_pseudocode=strict_pseudocode)
        m = len(pop.members)
        pair_count[pop.id] = m * (m - 1) // 2
    provenance = dict(pool.provenance)
    provenance["R"] = R
    return EavReport(eav=eav, pair_count=pair_count, provenance=provenance)
