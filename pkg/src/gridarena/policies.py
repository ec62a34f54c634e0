"""Policy interface, scripted baseline zoo, and the social-value utility.

A policy maps (observation, memory) to a full probability distribution
over the environment's discrete actions plus updated memory; all behavior
randomness lives in that distribution (the episode loop does the
sampling), so a policy is a pure function of its parameters and inputs.
The zoo stands in for trained agents in desk-scale experiments: every
baseline is parameterized so that random parameter draws give
behaviorally distinct population members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GridPos
from .errors import ConfigurationError
from .procgen import shortest_path
from .seeding import derive_seed, make_rng

ACTION_COUNTS = {
    "harvest_patch": 8,
    "traffic_navigation": 5,
    "overcooked": 6,
    "capture_the_flag": 8,
}


class Policy:
    """Base policy. Subclasses override `act`; memory defaults to None."""

    needs_pixels = True
    population_id = ""
    member_index = 0

    def initial_memory(self):
        return None

    def act(self, observation, memory):
        raise NotImplementedError


def validate_distribution(dist, num_actions: int, tol: float = 1e-9) -> None:
    arr = np.asarray(dist, dtype=float)
    if arr.shape != (num_actions,):
        raise ValueError(f"distribution shape {arr.shape} != ({num_actions},)")
    if (arr < -tol).any():
        raise ValueError("distribution has negative mass")
    if abs(arr.sum() - 1.0) > tol:
        raise ValueError(f"distribution sums to {arr.sum()}, not 1")


@dataclass
class Population:
    """A named set of policies evaluated together."""

    id: str
    members: list
    level_set_id: str = ""

    def __post_init__(self):
        if len(self.members) < 1:
            raise ConfigurationError("a population needs at least one member")
        for k, member in enumerate(self.members):
            member.population_id = self.id
            member.member_index = k

    def __len__(self):
        return len(self.members)


# ---------------------------------------------------------------------------
# Generic baselines
# ---------------------------------------------------------------------------


class UniformRandomPolicy(Policy):
    needs_pixels = False

    def __init__(self, num_actions: int):
        self.num_actions = num_actions
        self._dist = np.full(num_actions, 1.0 / num_actions)

    def act(self, observation, memory):
        return self._dist, memory


class BiasedRandomPolicy(Policy):
    """Observation-independent policy with a fixed action distribution."""

    needs_pixels = False

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if (w < 0).any() or w.sum() <= 0:
            raise ValueError("weights must be non-negative with positive sum")
        self._dist = w / w.sum()
        self.num_actions = len(w)

    def act(self, observation, memory):
        return self._dist, memory


class ActionSequencePolicy(Policy):
    """Replays a fixed action list (one-hot distributions); pads with a
    fill action past the end, or loops when `loop=True`. Memory is the
    step index."""

    needs_pixels = False

    def __init__(self, sequence, num_actions: int, fill_action: int = 0, loop: bool = False):
        self.sequence = [int(a) for a in sequence]
        self.num_actions = num_actions
        self.fill_action = fill_action
        self.loop = loop

    def initial_memory(self):
        return 0

    def act(self, observation, memory):
        t = memory
        if self.loop and self.sequence:
            a = self.sequence[t % len(self.sequence)]
        elif t < len(self.sequence):
            a = self.sequence[t]
        else:
            a = self.fill_action
        dist = np.zeros(self.num_actions)
        dist[a] = 1.0
        return dist, t + 1


# ---------------------------------------------------------------------------
# Traffic Navigation
# ---------------------------------------------------------------------------


class GoalSeekerPolicy(Policy):
    """Moves toward the goal offset from the aux channels; with
    probability epsilon acts uniformly instead. `row_first` breaks ties
    between the two axes."""

    needs_pixels = False
    NUM_ACTIONS = 5

    def __init__(self, epsilon: float = 0.1, row_first: bool = True):
        self.epsilon = float(epsilon)
        self.row_first = bool(row_first)

    def act(self, observation, memory):
        dr, dc = observation.aux
        axes = []
        if dr < 0:
            axes.append((abs(dr), 1))  # north
        elif dr > 0:
            axes.append((abs(dr), 2))  # south
        if dc < 0:
            axes.append((abs(dc), 3))  # west
        elif dc > 0:
            axes.append((abs(dc), 4))  # east
        if not axes:
            greedy = 0
        elif len(axes) == 1:
            greedy = axes[0][1]
        else:
            key = (axes[0], axes[1]) if self.row_first else (axes[1], axes[0])
            greedy = max(key, key=lambda t: t[0])[1]
        dist = np.full(self.NUM_ACTIONS, self.epsilon / self.NUM_ACTIONS)
        dist[greedy] += 1.0 - self.epsilon
        return dist, memory


# ---------------------------------------------------------------------------
# HarvestPatch
# ---------------------------------------------------------------------------


def _window_cell_colors(pixels: np.ndarray, sprite: int) -> np.ndarray:
    """Sample the center pixel of every sprite cell: (cells_h, cells_w, 3)."""
    half = sprite // 2
    return pixels[half::sprite, half::sprite, :]


class _HarvestBase(Policy):
    NUM_ACTIONS = 8
    APPLE_COLOR = (20, 190, 20)
    SPRITE = 8
    SELF_CELL = (9, 5)  # window row/col of the player (9 front, 1 back, 5 side)

    def _visible_apples(self, pixels):
        cells = _window_cell_colors(pixels, self.SPRITE)
        mask = np.all(cells == self.APPLE_COLOR, axis=-1)
        return np.argwhere(mask)

    def _toward(self, wr: int, wc: int) -> int:
        # window rows shrink toward the front; columns grow to the right
        fwd = self.SELF_CELL[0] - wr
        lat = wc - self.SELF_CELL[1]
        if abs(fwd) >= abs(lat):
            return 1 if fwd >= 0 else 2  # forward / backward
        return 4 if lat > 0 else 3  # step right / step left


class GreedyHarvesterPolicy(_HarvestBase):
    """Heads for the nearest visible apple; wanders forward otherwise."""

    def __init__(self, epsilon: float = 0.1, turn_bias: float = 0.5):
        self.epsilon = float(epsilon)
        self.turn_bias = float(turn_bias)

    def act(self, observation, memory):
        apples = self._visible_apples(observation.pixels)
        dist = np.full(self.NUM_ACTIONS, self.epsilon / self.NUM_ACTIONS)
        if len(apples):
            d = np.abs(apples - self.SELF_CELL).sum(axis=1)
            wr, wc = apples[int(np.argmin(d))]
            dist[self._toward(int(wr), int(wc))] += 1.0 - self.epsilon
        else:
            dist[1] += (1.0 - self.epsilon) * (1.0 - self.turn_bias)
            dist[5] += (1.0 - self.epsilon) * self.turn_bias / 2
            dist[6] += (1.0 - self.epsilon) * self.turn_bias / 2
        return dist, memory


class AbstentiousHarvesterPolicy(_HarvestBase):
    """Harvests only while the local patch looks plentiful: with at most
    `threshold` apples in view it walks away from the nearest one."""

    def __init__(self, threshold: int = 3, epsilon: float = 0.1):
        self.threshold = int(threshold)
        self.epsilon = float(epsilon)

    def act(self, observation, memory):
        apples = self._visible_apples(observation.pixels)
        dist = np.full(self.NUM_ACTIONS, self.epsilon / self.NUM_ACTIONS)
        if len(apples) == 0:
            dist[1] += 1.0 - self.epsilon
        else:
            d = np.abs(apples - self.SELF_CELL).sum(axis=1)
            wr, wc = apples[int(np.argmin(d))]
            toward = self._toward(int(wr), int(wc))
            if len(apples) > self.threshold:
                dist[toward] += 1.0 - self.epsilon
            else:
                away = {1: 2, 2: 1, 3: 4, 4: 3}[toward]
                dist[away] += 1.0 - self.epsilon
        return dist, memory


# ---------------------------------------------------------------------------
# Overcooked
# ---------------------------------------------------------------------------


class ScriptedCookPolicy(ActionSequencePolicy):
    """Open-loop cook: compiles one full soup cycle for a given kitchen and
    seat (fetch three tomatoes, deposit, fetch a dish, wait out the cook,
    collect, deliver) and replays it in a loop. The partner can disturb the
    route; the script is a baseline, not an optimum."""

    NUM_ACTIONS = 6

    def __init__(self, level, seat: int):
        sequence = _compile_cook_route(level, seat)
        super().__init__(sequence, self.NUM_ACTIONS, fill_action=0, loop=True)
        self.seat = seat


def _compile_cook_route(level, seat: int):
    grid = level.grid
    start = GridPos(*level.spawn_points[seat])
    move_of_delta = {(-1, 0): 1, (1, 0): 2, (0, -1): 3, (0, 1): 4}

    def nearest_adjacent(from_cell, stations):
        best = None
        for station in stations:
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                cell = GridPos(station[0] + dr, station[1] + dc)
                if not grid.is_open(*cell):
                    continue
                path = shortest_path(grid, from_cell, cell)
                if path is not None and (best is None or len(path) < len(best[0])):
                    best = (path, station)
        return best

    def extend(actions, path, station):
        for prev, nxt in zip(path, path[1:]):
            actions.append(move_of_delta[(nxt.row - prev.row, nxt.col - prev.col)])
        here = path[-1]
        face = move_of_delta[(station[0] - here[0], station[1] - here[1])]
        actions.append(face)  # blocked move: orients without moving
        actions.append(5)  # interact
        return here

    actions: list[int] = []
    here = start
    deposit_steps = []
    for _ in range(3):
        leg = nearest_adjacent(here, level.tomato_stations)
        if leg is None:
            return [0]
        here = extend(actions, *leg)
        leg = nearest_adjacent(here, level.pots)
        if leg is None:
            return [0]
        here = extend(actions, *leg)
        deposit_steps.append(len(actions) - 1)
        pot = leg[1]
    leg = nearest_adjacent(here, level.dish_stations)
    if leg is None:
        return [0]
    here = extend(actions, *leg)
    leg = nearest_adjacent(here, [pot])
    if leg is None:
        return [0]
    path, station = leg
    for prev, nxt in zip(path, path[1:]):
        actions.append(move_of_delta[(nxt.row - prev.row, nxt.col - prev.col)])
    here = path[-1]
    # wait by the pot until the soup is done (20 steps after third deposit)
    ready_step = deposit_steps[-1] + 20
    while len(actions) < ready_step + 1:
        actions.append(0)
    actions.append(move_of_delta[(station[0] - here[0], station[1] - here[1])])
    actions.append(5)
    leg = nearest_adjacent(here, level.delivery_stations)
    if leg is None:
        return [0]
    extend(actions, *leg)
    return actions


# ---------------------------------------------------------------------------
# Capture the Flag
# ---------------------------------------------------------------------------


class _CtfBase(Policy):
    NUM_ACTIONS = 8
    SPRITE = 8
    FOE_COLOR = (230, 120, 60)
    WALL_COLOR = (120, 120, 120)
    SELF_CELL = (9, 5)

    def _cells(self, pixels):
        return _window_cell_colors(pixels, self.SPRITE)

    def _foe_in_beam(self, cells) -> bool:
        lane = cells[: self.SELF_CELL[0], self.SELF_CELL[1], :]
        for row in range(lane.shape[0] - 1, -1, -1):  # nearest first
            color = tuple(lane[row])
            if color == self.FOE_COLOR:
                return True
            if color == self.WALL_COLOR:
                return False
        return False

    def _wall_ahead(self, cells) -> bool:
        ahead = tuple(cells[self.SELF_CELL[0] - 1, self.SELF_CELL[1]])
        return ahead == self.WALL_COLOR


class FlagRusherPolicy(_CtfBase):
    """Pushes forward, fires on any enemy in the beam lane, turns at walls."""

    def __init__(self, epsilon: float = 0.15, turn_right_bias: float = 0.5):
        self.epsilon = float(epsilon)
        self.turn_right_bias = float(turn_right_bias)

    def act(self, observation, memory):
        dist = np.full(self.NUM_ACTIONS, self.epsilon / self.NUM_ACTIONS)
        if not observation.pixels.any():  # tagged out: all-black view
            dist[0] += 1.0 - self.epsilon
            return dist, memory
        cells = self._cells(observation.pixels)
        if self._foe_in_beam(cells):
            dist[7] += 1.0 - self.epsilon
        elif self._wall_ahead(cells):
            dist[6] += (1.0 - self.epsilon) * self.turn_right_bias
            dist[5] += (1.0 - self.epsilon) * (1.0 - self.turn_right_bias)
        else:
            dist[1] += 1.0 - self.epsilon
        return dist, memory


class FlagDefenderPolicy(_CtfBase):
    """Holds position near its spawn, scanning and firing at enemies."""

    def __init__(self, patrol: float = 0.3, epsilon: float = 0.15):
        self.patrol = float(patrol)
        self.epsilon = float(epsilon)

    def act(self, observation, memory):
        dist = np.full(self.NUM_ACTIONS, self.epsilon / self.NUM_ACTIONS)
        if not observation.pixels.any():
            dist[0] += 1.0 - self.epsilon
            return dist, memory
        cells = self._cells(observation.pixels)
        if self._foe_in_beam(cells):
            dist[7] += 1.0 - self.epsilon
        else:
            main = 1.0 - self.epsilon
            dist[6] += main * (1.0 - self.patrol)  # keep scanning in place
            dist[1] += main * self.patrol
        return dist, memory


# ---------------------------------------------------------------------------
# Social value orientation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SvoParams:
    """Target reward angle in degrees; 0 is selfish, 90 fully prosocial."""

    theta_degrees: float

    def __post_init__(self):
        if not 0.0 <= self.theta_degrees <= 90.0:
            raise ValueError(f"theta {self.theta_degrees} outside [0, 90] degrees")


def svo_utility(own_reward: float, mean_others_reward: float, params: SvoParams) -> float:
    """Reward-angle projection: own*cos(theta) + others*sin(theta)."""
    theta = math.radians(params.theta_degrees)
    return own_reward * math.cos(theta) + mean_others_reward * math.sin(theta)


def svo_population_presets(kind: str) -> list:
    """The two four-member target-angle presets: identical (all 45 deg) and
    heterogeneous (0/30/60/90 deg)."""
    if kind == "identical":
        return [SvoParams(45.0)] * 4
    if kind == "heterogeneous":
        return [SvoParams(0.0), SvoParams(30.0), SvoParams(60.0), SvoParams(90.0)]
    raise ValueError(f"unknown SVO preset {kind!r} (identical|heterogeneous)")


# ---------------------------------------------------------------------------
# Population factories
# ---------------------------------------------------------------------------


def diverse_population(env_id: str, size: int, seed: int, pop_id: str = "") -> Population:
    """Population of persona policies with graded behavioral spread.

    Member j mixes the uniform distribution with a one-hot signature
    action, with mixing weight climbing along the member ladder (plus a
    seeded jitter). Later members are therefore more opinionated and
    mutually distinct, mimicking the niching that larger trained
    populations exhibit, so mean pairwise divergence grows with size.
    """
    num_actions = ACTION_COUNTS[env_id]
    rng = make_rng(derive_seed(seed, "diverse-pop", env_id, size))
    base = int(rng.integers(num_actions))
    members = []
    for j in range(size):
        ladder = 0.1 + 0.7 * (j / 7.0 if size > 1 else 0.0)
        alpha = float(np.clip(ladder + rng.uniform(-0.05, 0.05), 0.02, 0.95))
        signature = (base + j) % num_actions
        weights = np.full(num_actions, (1.0 - alpha) / num_actions)
        weights[signature] += alpha
        members.append(BiasedRandomPolicy(weights))
    return Population(id=pop_id or f"diverse-{env_id}-N{size}-s{seed}", members=members)


def uniform_population(env_id: str, size: int, pop_id: str = "") -> Population:
    num_actions = ACTION_COUNTS[env_id]
    members = [UniformRandomPolicy(num_actions) for _ in range(size)]
    return Population(id=pop_id or f"uniform-{env_id}-N{size}", members=members)


def zoo_population(env_id: str, size: int, seed: int, level=None, pop_id: str = "") -> Population:
    """Environment-flavored scripted members with randomized parameters."""
    rng = make_rng(derive_seed(seed, "zoo-pop", env_id, size))
    members = []
    for j in range(size):
        eps = float(rng.uniform(0.05, 0.4))
        if env_id == "traffic_navigation":
            members.append(GoalSeekerPolicy(epsilon=eps, row_first=bool(rng.integers(2))))
        elif env_id == "harvest_patch":
            if rng.random() < 0.5:
                members.append(GreedyHarvesterPolicy(epsilon=eps,
                                                     turn_bias=float(rng.uniform(0.2, 0.8))))
            else:
                members.append(AbstentiousHarvesterPolicy(threshold=int(rng.integers(1, 6)),
                                                          epsilon=eps))
        elif env_id == "capture_the_flag":
            if rng.random() < 0.5:
                members.append(FlagRusherPolicy(epsilon=eps,
                                                turn_right_bias=float(rng.uniform(0.2, 0.8))))
            else:
                members.append(FlagDefenderPolicy(patrol=float(rng.uniform(0.1, 0.6)),
                                                  epsilon=eps))
        elif env_id == "overcooked":
            if level is None:
                members.append(UniformRandomPolicy(ACTION_COUNTS[env_id]))
            else:
                members.append(ScriptedCookPolicy(level, seat=j % 2))
        else:
            raise ConfigurationError(f"unknown env id {env_id!r}")
    return Population(id=pop_id or f"zoo-{env_id}-N{size}-s{seed}", members=members)


POPULATION_KINDS = {
    "uniform": lambda env_id, size, seed, level=None, pop_id="": uniform_population(env_id, size, pop_id),
    "diverse": lambda env_id, size, seed, level=None, pop_id="": diverse_population(env_id, size, seed, pop_id),
    "zoo": lambda env_id, size, seed, level=None, pop_id="": zoo_population(env_id, size, seed, level, pop_id),
}


def build_population(env_id: str, spec: dict, level=None) -> Population:
    """Build a population from a manifest entry: {id?, kind, size, seed?}."""
    kind = spec.get("kind", "uniform")
    if kind not in POPULATION_KINDS:
        raise ConfigurationError(
            f"unknown population kind {kind!r}; choose from {sorted(POPULATION_KINDS)}"
        )
    return POPULATION_KINDS[kind](
        env_id,
        int(spec.get("size", 1)),
        int(spec.get("seed", 0)),
        level=level,
        pop_id=spec.get("id", ""),
    )
