"""Cross-play evaluation: groupings, match execution, Elo, and matrices.

Groups mix members of two populations in fixed seat counts per
environment (1+5, 1+7, 1+1, 2+2). Non-team environments report the mean
individual reward of the agents sampled from population A; Capture the
Flag scores sides by team captures, which feed the iterative Elo fit.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .core import EpisodeConfig, run_episode
from .envs import make
from .errors import ConfigurationError
from .policies import Population
from .seeding import derive_seed, make_rng

DEFAULT_GROUPINGS = {
    "harvest_patch": (1, 5),
    "traffic_navigation": (1, 7),
    "overcooked": (1, 1),
    "capture_the_flag": (2, 2),
}
DEFAULT_MATCHES_PER_PAIRING = 100
PLAYER_COUNTS = {
    "harvest_patch": 6,
    "traffic_navigation": 8,
    "overcooked": 2,
    "capture_the_flag": 4,
}


@dataclass(frozen=True)
class CrossPlayGrouping:
    """Seat counts for populations A and B; must sum to the env's players."""

    env_id: str
    count_a: int
    count_b: int

    def __post_init__(self):
        n = PLAYER_COUNTS.get(self.env_id)
        if n is None:
            raise ConfigurationError(f"unknown env id {self.env_id!r}")
        if self.count_a < 1 or self.count_b < 0 or self.count_a + self.count_b != n:
            raise ConfigurationError(
                f"grouping {self.count_a}+{self.count_b} does not fill {n} seats"
            )

    @classmethod
    def default(cls, env_id: str) -> "CrossPlayGrouping":
        a, b = DEFAULT_GROUPINGS[env_id]
        return cls(env_id, a, b)


@dataclass(frozen=True)
class MatchResult:
    env_id: str
    level_id: str
    pop_a: str
    pop_b: str
    score_a: float
    score_b: float
    focal_rewards: tuple

    def to_json_line(self) -> str:
        d = {
            "env": self.env_id, "level": self.level_id,
            "pop_a": self.pop_a, "pop_b": self.pop_b,
            "score_a": self.score_a, "score_b": self.score_b,
            "focal_rewards": list(self.focal_rewards),
        }
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json_line(cls, line: str) -> "MatchResult":
        d = json.loads(line)
        return cls(d["env"], d["level"], d["pop_a"], d["pop_b"],
                   float(d["score_a"]), float(d["score_b"]),
                   tuple(d["focal_rewards"]))


@dataclass
class RatingTable:
    ratings: dict
    k: float
    iterations: int

    def text(self) -> str:
        lines = [f"# elo ratings (K={self.k}, sweeps={self.iterations})"]
        for pop_id, rating in sorted(self.ratings.items(), key=lambda kv: -kv[1]):
            lines.append(f"{pop_id}\t{rating:.2f}")
        return "\n".join(lines) + "\n"


def cross_play_match(pop_a: Population, pop_b: Population, grouping: CrossPlayGrouping,
                     level, seed: int, horizon: int | None = None) -> MatchResult:
    """Run one seeded match: population A fills the first `count_a` seats
    (the red team in Capture the Flag), B the rest, members sampled with
    replacement. Self-play (pop_a is pop_b) is a valid pairing."""
    if level.env_id != grouping.env_id:
        raise ConfigurationError(
            f"grouping is for {grouping.env_id}, level is {level.env_id}"
        )
    env = make(level.env_id, level)
    rng = make_rng(derive_seed(seed, "match-sampling"))
    picks_a = [int(k) for k in rng.integers(0, len(pop_a.members), size=grouping.count_a)]
    picks_b = [int(k) for k in rng.integers(0, len(pop_b.members), size=grouping.count_b)]
    policies = [pop_a.members[k] for k in picks_a] + [pop_b.members[k] for k in picks_b]
    config = EpisodeConfig(
        num_players=env.num_players,
        horizon=horizon if horizon is not None else env.default_horizon,
        seed=derive_seed(seed, "match-episode"),
    )
    traj = run_episode(env, policies, config)
    returns = traj.returns
    focal = tuple(returns[: grouping.count_a])
    if level.env_id == "capture_the_flag":
        score_a, score_b = float(env.captures[0]), float(env.captures[1])
    else:
        score_a = sum(focal) / len(focal)
        rest = returns[grouping.count_a:]
        score_b = sum(rest) / len(rest) if rest else 0.0
    return MatchResult(env.env_id, level.level_id, pop_a.id, pop_b.id,
                       score_a, score_b, focal)


def elo_update(r_i: float, r_j: float, s_i: float, s_j: float, k: float = 2.0):
    """One zero-sum Elo update from a match between sides i and j.

    The match outcome enters through the sign of the score difference
    (win 1, draw 0.5, loss 0); the expected score is the logistic
    1 / (1 + 10**((r_j - r_i) / 400)).
    """
    if k <= 0:
        raise ValueError(f"K must be positive, got {k}")
    diff = s_i - s_j
    sign = (diff > 0) - (diff < 0)
    s = (sign + 1) / 2
    s_elo = 1.0 / (1.0 + 10.0 ** ((r_j - r_i) / 400.0))
    delta = k * (s - s_elo)
    return r_i + delta, r_j - delta


def fit_elo(results, k: float = 2.0, init: float = 1000.0, tol: float = 1e-6,
            max_sweeps: int = 10**6) -> RatingTable:
    """Sweep all match results in input order until the largest per-sweep
    rating change drops below `tol`. Self-play results are skipped (their
    updates would cancel on a single rating). Ratings stay zero-sum: the
    sum is always init * number of populations."""
    if not results:
        raise ValueError("fit_elo needs at least one match result")
    ratings: dict = {}
    for res in results:
        ratings.setdefault(res.pop_a, init)
        ratings.setdefault(res.pop_b, init)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        before = dict(ratings)
        for res in results:
            if res.pop_a == res.pop_b:
                continue
            ratings[res.pop_a], ratings[res.pop_b] = elo_update(
                ratings[res.pop_a], ratings[res.pop_b],
                res.score_a, res.score_b, k=k,
            )
        if max(abs(ratings[p] - before[p]) for p in ratings) < tol:
            break
    return RatingTable(ratings=ratings, k=k, iterations=sweeps)


def win_matrix(results, pop_ids=None):
    """(ids, matrix): entry (i, j) is i's win rate over j among their
    matches, draws counting half. entry(i,j) + entry(j,i) == 1 whenever
    both directions aggregate the same matches."""
    if pop_ids is None:
        pop_ids = sorted({r.pop_a for r in results} | {r.pop_b for r in results})
    index = {pid: k for k, pid in enumerate(pop_ids)}
    size = len(pop_ids)
    wins = [[0.0] * size for _ in range(size)]
    counts = [[0] * size for _ in range(size)]
    for res in results:
        a, b = index[res.pop_a], index[res.pop_b]
        if res.score_a > res.score_b:
            w_a = 1.0
        elif res.score_a < res.score_b:
            w_a = 0.0
        else:
            w_a = 0.5
        wins[a][b] += w_a
        counts[a][b] += 1
        wins[b][a] += 1.0 - w_a
        counts[b][a] += 1
    matrix = [
        [wins[i][j] / counts[i][j] if counts[i][j] else float("nan") for j in range(size)]
        for i in range(size)
    ]
    return pop_ids, matrix


def mean_focal_matrix(results, pop_ids=None):
    """(ids, matrix): entry (i, j) is the mean focal (population A) reward
    over matches with A=i, B=j."""
    if pop_ids is None:
        pop_ids = sorted({r.pop_a for r in results} | {r.pop_b for r in results})
    index = {pid: k for k, pid in enumerate(pop_ids)}
    size = len(pop_ids)
    total = [[0.0] * size for _ in range(size)]
    counts = [[0] * size for _ in range(size)]
    for res in results:
        a, b = index[res.pop_a], index[res.pop_b]
        focal = sum(res.focal_rewards) / len(res.focal_rewards)
        total[a][b] += focal
        counts[a][b] += 1
    matrix = [
        [total[i][j] / counts[i][j] if counts[i][j] else float("nan") for j in range(size)]
        for i in range(size)
    ]
    return pop_ids, matrix


def generalization_gap(train_perf: float, test_perf: float, signed: bool = False) -> float:
    """Gap between training-set and held-out performance; absolute by
    default, signed (train - test) on request."""
    gap = train_perf - test_perf
    return gap if signed else abs(gap)


# ---------------------------------------------------------------------------
# Tournament grid
# ---------------------------------------------------------------------------


def _match_task(args):
    pop_a, pop_b, grouping, level, seed, horizon = args
    return cross_play_match(pop_a, pop_b, grouping, level, seed, horizon=horizon)


def run_pairing_grid(populations, levels, grouping: CrossPlayGrouping,
                     matches_per_pairing: int = DEFAULT_MATCHES_PER_PAIRING,
                     seed: int = 0, workers: int | None = None,
                     horizon: int | None = None):
    """Every ordered population pair (self-pairings included) plays
    `matches_per_pairing` seeded matches; each match draws its level from
    the shared set. Tasks are independently seeded and merged in task
    order, so the worker count never changes the output."""
    if not populations:
        raise ConfigurationError("no populations to evaluate")
    if not levels:
        raise ConfigurationError("no levels to evaluate on")
    if workers is None:
        workers = int(os.environ.get("GRIDARENA_WORKERS", "1"))
    tasks = []
    for pop_a in populations:
        for pop_b in populations:
            for m in range(matches_per_pairing):
                match_seed = derive_seed(seed, "grid", pop_a.id, pop_b.id, m)
                level = levels[int(make_rng(derive_seed(match_seed, "level")).integers(len(levels)))]
                tasks.append((pop_a, pop_b, grouping, level, match_seed, horizon))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_match_task, tasks, chunksize=8))
    return [_match_task(t) for t in tasks]
