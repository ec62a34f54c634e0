"""HarvestPatch: six-player commons game with regrowing apple patches.

Players harvest apples (+1 each) that regrow at a rate set by how many
live apples remain in the same patch; a fully depleted patch never
regrows. A short tag beam knocks opponents out of play for 50 steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import GridPos, Observation
from ..errors import LevelParseError
from ..procgen import GridMask, rejection_sample, write_level_text, parse_level_text
from ..render import (
    FORWARD,
    RIGHT,
    gather_window_types,
    oriented_window_coords,
    render_cells,
    window_cell_of,
)
from ..seeding import derive_seed, make_rng
from .common import GridEnv, resolve_moves, state_digest_of

GRID_SIZE = 35
NUM_PLAYERS = 6
NUM_SPAWN_POINTS = 10
TAG_TIMEOUT = 50
TAG_COOLDOWN = 4
BEAM_DEPTH = 3

NOOP, FWD, BACK, LEFT, RIGHT_STEP, TURN_L, TURN_R, TAG = range(8)

# Per-step regrowth probability by number of live apples in the patch.
REGROWTH_RATES = (0.0, 0.001, 0.005, 0.025)

# window geometry: one cell behind, five to each side, nine in front
OBS_FRONT, OBS_BACK, OBS_SIDE = 9, 1, 5
SPRITE = 8

T_PAD, T_OPEN, T_APPLE, T_SELF, T_OTHER = range(5)
PALETTE = np.array(
    [(40, 40, 40), (20, 20, 20), (20, 190, 20), (235, 235, 235), (200, 120, 30)],
    dtype=np.uint8,
)


def regrowth_probability(live_apples_in_patch: int) -> float:
    """Regrowth probability for a harvested apple given its patch's live count."""
    if live_apples_in_patch < 0:
        raise ValueError(f"live apple count must be >= 0, got {live_apples_in_patch}")
    return REGROWTH_RATES[min(live_apples_in_patch, 3)]


@dataclass
class HarvestLevel:
    """A 35x35 map: apple patches plus ten spawn points on apple-free cells."""

    env_id = "harvest_patch"

    grid: GridMask
    apple_cells: tuple
    patch_of: tuple  # patch index per apple cell
    patch_centers: tuple
    radius: int
    density: float
    spawn_points: tuple
    seed: int = 0
    level_id: str = ""

    def __post_init__(self):
        if not self.level_id:
            self.level_id = f"harvest_patch-{self.seed & (2**64 - 1):016x}"
        # canonical row-major apple order: a parsed level file and the
        # generator's in-memory object must drive identical episodes
        order = sorted(range(len(self.apple_cells)),
                       key=lambda k: tuple(self.apple_cells[k]))
        self.apple_cells = tuple(GridPos(*self.apple_cells[k]) for k in order)
        self.patch_of = tuple(self.patch_of[k] for k in order)
        self.validate()

    def validate(self):
        if (self.grid.height, self.grid.width) != (GRID_SIZE, GRID_SIZE):
            raise ValueError("HarvestPatch levels are 35x35")
        p = len(self.patch_centers)
        if not 1 <= p <= 14:
            raise ValueError(f"patch count {p} outside [1, 14]")
        if not 3 <= self.radius <= 7:
            raise ValueError(f"patch radius {self.radius} outside [3, 7]")
        for i in range(p):
            for j in range(i + 1, p):
                if _euclid(self.patch_centers[i], self.patch_centers[j]) < 3 * self.radius:
                    raise ValueError("patch centers closer than 3 * radius")
        apple_set = set(map(tuple, self.apple_cells))
        for cell, patch in zip(self.apple_cells, self.patch_of):
            if _euclid(cell, self.patch_centers[patch]) > self.radius + 1e-9:
                raise ValueError(f"apple {cell} outside its patch radius")
        if len(self.spawn_points) != NUM_SPAWN_POINTS:
            raise ValueError("HarvestPatch levels carry exactly 10 spawn points")
        for s in self.spawn_points:
            if tuple(s) in apple_set:
                raise ValueError(f"spawn point {s} sits on an apple cell")

    @property
    def apple_count(self) -> int:
        return len(self.apple_cells)

    def to_text(self) -> str:
        rows = []
        apple_set = set(map(tuple, self.apple_cells))
        for r in range(GRID_SIZE):
            rows.append(
                "".join(
                    "a" if (r, c) in apple_set else ("." if self.grid.cells[r, c] else "#")
                    for c in range(GRID_SIZE)
                )
            )
        meta = {
            "patch_centers": [list(p) for p in self.patch_centers],
            "spawn_points": [list(p) for p in self.spawn_points],
        }
        params = {"patches": len(self.patch_centers), "radius": self.radius,
                  "density": self.density}
        features = {"apple_count": self.apple_count}
        return write_level_text("harvest_patch", self.level_id, self.seed,
                                params, features, meta, rows)

    @classmethod
    def from_text(cls, text: str) -> "HarvestLevel":
        header = parse_level_text(text)
        if header.get("env") != "harvest_patch":
            raise LevelParseError(f"expected env harvest_patch, got {header.get('env')}")
        rows = header["grid_rows"]
        grid = GridMask(len(rows), len(rows[0]),
                        cells=[[ch != "#" for ch in row] for row in rows])
        centers = [GridPos(*p) for p in header["meta"]["patch_centers"]]
        radius = int(header["params"]["radius"])
        apples, patch_of = [], []
        for r, row in enumerate(rows):
            for c, ch in enumerate(row):
                if ch == "a":
                    cell = GridPos(r, c)
                    owner = min(range(len(centers)), key=lambda k: _euclid(cell, centers[k]))
                    apples.append(cell)
                    patch_of.append(owner)
        return cls(
            grid=grid,
            apple_cells=tuple(apples),
            patch_of=tuple(patch_of),
            patch_centers=tuple(centers),
            radius=radius,
            density=float(header["params"]["density"]),
            spawn_points=tuple(GridPos(*p) for p in header["meta"]["spawn_points"]),
            seed=header["seed"],
            level_id=header["id"],
        )


def _euclid(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


# Patch counts that random dart-throwing placement reaches reliably given
# the 3*r center spacing inside the 35x35 area; larger counts stay legal
# through generate_harvest_level but mostly exhaust the retry budget.
_MAX_PATCHES_BY_RADIUS = {3: 10, 4: 6, 5: 4, 6: 3, 7: 2}


def sample_harvest_params(seed: int) -> tuple:
    """Draw (patches, radius, density) for one level, keeping the patch
    count within what the spacing constraint can actually fit."""
    rng = make_rng(derive_seed(seed, "harvest-params"))
    radius = int(rng.integers(3, 8))
    patches = int(rng.integers(1, _MAX_PATCHES_BY_RADIUS[radius] + 1))
    density = float(rng.uniform(0.90, 1.00))
    return patches, radius, density


def generate_harvest_level(patches: int, radius: int, density: float, seed: int) -> HarvestLevel:
    """Place `patches` apple discs of the given radius and density, plus ten
    spawn points, retrying with derived sub-seeds until placement succeeds."""
    if not 1 <= patches <= 14:
        raise ValueError(f"patch count {patches} outside [1, 14]")
    if not 3 <= radius <= 7:
        raise ValueError(f"patch radius {radius} outside [3, 7]")
    if not 0.90 <= density <= 1.00:
        raise ValueError(f"density {density} outside [0.90, 1.00]")

    def attempt(sub_seed):
        rng = make_rng(sub_seed)
        centers = []
        for _ in range(patches):
            placed = False
            for _ in range(200):
                r = int(rng.integers(radius, GRID_SIZE - radius))
                c = int(rng.integers(radius, GRID_SIZE - radius))
                if all(_euclid((r, c), other) >= 3 * radius for other in centers):
                    centers.append(GridPos(r, c))
                    placed = True
                    break
            if not placed:
                return None
        apples, patch_of = [], []
        for k, center in enumerate(centers):
            count_before = len(apples)
            for r in range(center.row - radius, center.row + radius + 1):
                for c in range(center.col - radius, center.col + radius + 1):
                    if _euclid((r, c), center) <= radius and rng.random() < density:
                        apples.append(GridPos(r, c))
                        patch_of.append(k)
            if len(apples) == count_before:
                return None  # empty patch: retry
        apple_set = set(map(tuple, apples))
        free = [GridPos(r, c) for r in range(GRID_SIZE) for c in range(GRID_SIZE)
                if (r, c) not in apple_set]
        idx = rng.choice(len(free), size=NUM_SPAWN_POINTS, replace=False)
        spawns = tuple(free[int(i)] for i in sorted(idx))
        return HarvestLevel(
            grid=GridMask(GRID_SIZE, GRID_SIZE, fill=True),
            apple_cells=tuple(apples),
            patch_of=tuple(patch_of),
            patch_centers=tuple(centers),
            radius=radius,
            density=density,
            spawn_points=spawns,
            seed=seed,
        )

    return rejection_sample(attempt, seed)


class HarvestPatchEnv(GridEnv):
    """Engine for one HarvestPatch level.

    Step phases, in fixed order: tag-out bookkeeping and respawns, beam
    cooldown bookkeeping, turning, simultaneous movement (lowest player
    index wins contested cells), beams, harvesting, regrowth. All
    stochasticity (spawn draws, respawn cells, regrowth) comes from the
    per-episode stream seeded at reset.
    """

    env_id = "harvest_patch"
    num_players = NUM_PLAYERS
    num_actions = 8
    default_horizon = 1000
    obs_shape = (88, 88, 3)

    def __init__(self, level: HarvestLevel):
        super().__init__(level)
        self._apple_index = {tuple(cell): i for i, cell in enumerate(level.apple_cells)}
        self._patch_of = np.array(level.patch_of, dtype=np.int32)
        self._num_patches = len(level.patch_centers)
        apple_set = set(self._apple_index)
        self._respawn_cells = [
            (r, c)
            for r in range(GRID_SIZE)
            for c in range(GRID_SIZE)
            if level.grid.cells[r, c] and (r, c) not in apple_set
        ]
        self._reset_state()

    def _reset_state(self):
        level = self.level
        idx = self.rng.choice(NUM_SPAWN_POINTS, size=NUM_PLAYERS, replace=False)
        self.pos = [tuple(level.spawn_points[int(i)]) for i in idx]
        self.facing = [int(f) for f in self.rng.integers(0, 4, size=NUM_PLAYERS)]
        self.tag_timer = [0] * NUM_PLAYERS
        self.cooldown = [0] * NUM_PLAYERS
        self.active = [True] * NUM_PLAYERS
        self.apple_present = np.ones(len(level.apple_cells), dtype=bool)
        self.patch_live = np.bincount(self._patch_of, minlength=self._num_patches).astype(np.int64)
        self._occupied = {p: i for i, p in enumerate(self.pos)}
        self._types = np.full((GRID_SIZE, GRID_SIZE), T_OPEN, dtype=np.int8)
        for cell in level.apple_cells:
            self._types[cell[0], cell[1]] = T_APPLE

    def step(self, actions):
        acts = self._check_actions(actions)
        rewards = [0.0] * NUM_PLAYERS

        # tag-out timers; a respawned player stands still this step
        for i in range(NUM_PLAYERS):
            if self.tag_timer[i] > 0:
                acts[i] = NOOP
                self.tag_timer[i] -= 1
                if self.tag_timer[i] == 0:
                    self._respawn(i)

        fire_blocked = [self.cooldown[i] > 0 for i in range(NUM_PLAYERS)]
        for i in range(NUM_PLAYERS):
            if self.cooldown[i] > 0:
                self.cooldown[i] -= 1

        for i in range(NUM_PLAYERS):
            if acts[i] == TURN_L:
                self.facing[i] = (self.facing[i] - 1) % 4
            elif acts[i] == TURN_R:
                self.facing[i] = (self.facing[i] + 1) % 4

        self._move_players(acts)

        shooters = [
            i for i in range(NUM_PLAYERS)
            if self.active[i] and acts[i] == TAG and not fire_blocked[i]
        ]
        victims = set()
        for i in shooters:
            victims.update(self._beam_victims(i))
            self.cooldown[i] = TAG_COOLDOWN
        for j in victims:
            self.tag_timer[j] = TAG_TIMEOUT
            self.active[j] = False
            del self._occupied[self.pos[j]]

        for i in range(NUM_PLAYERS):
            if not self.active[i]:
                continue
            a = self._apple_index.get(self.pos[i])
            if a is not None and self.apple_present[a]:
                rewards[i] += 1.0
                self.apple_present[a] = False
                self.patch_live[self._patch_of[a]] -= 1
                self._types[self.pos[i]] = T_OPEN

        self._apply_regrowth()
        self.step_count += 1
        return rewards

    def _move_players(self, acts):
        current = list(self.pos)
        wanted = list(self.pos)
        movers = []
        for i in range(NUM_PLAYERS):
            if not self.active[i] or acts[i] not in (FWD, BACK, LEFT, RIGHT_STEP):
                continue
            f = self.facing[i]
            if acts[i] == FWD:
                dr, dc = FORWARD[f]
            elif acts[i] == BACK:
                dr, dc = -FORWARD[f][0], -FORWARD[f][1]
            elif acts[i] == LEFT:
                dr, dc = -RIGHT[f][0], -RIGHT[f][1]
            else:
                dr, dc = RIGHT[f]
            r, c = current[i][0] + dr, current[i][1] + dc
            if self.level.grid.is_open(r, c):
                wanted[i] = (r, c)
                movers.append(i)
        # inactive players sit off-grid: exclude them from conflict resolution
        active_ids = [i for i in range(NUM_PLAYERS) if self.active[i]]
        sub_cur = [current[i] for i in active_ids]
        sub_want = [wanted[i] for i in active_ids]
        resolved, _ = resolve_moves(sub_cur, sub_want, rule="priority")
        for k, i in enumerate(active_ids):
            self.pos[i] = resolved[k]
        self._occupied = {self.pos[i]: i for i in active_ids}

    def _beam_victims(self, shooter: int):
        """Players inside the 3-wide, 3-deep beam; each lane stops at the
        first wall or player it reaches."""
        f = self.facing[shooter]
        fr, fc = FORWARD[f]
        rr, rc = RIGHT[f]
        r0, c0 = self.pos[shooter]
        hits = []
        for lane in (-1, 0, 1):
            for depth in range(1, BEAM_DEPTH + 1):
                r = r0 + depth * fr + lane * rr
                c = c0 + depth * fc + lane * rc
                if not self.level.grid.is_open(r, c):
                    break
                j = self._occupied.get((r, c))
                if j is not None and j != shooter:
                    hits.append(j)
                    break
        return hits

    def _respawn(self, i: int):
        candidates = [cell for cell in self._respawn_cells if cell not in self._occupied]
        cell = candidates[int(self.rng.integers(len(candidates)))]
        self.pos[i] = cell
        self.facing[i] = int(self.rng.integers(0, 4))
        self.active[i] = True
        self._occupied[cell] = i

    def _apply_regrowth(self):
        """Each harvested apple regrows with the probability given by its
        patch's current live count, except on occupied cells; a depleted
        patch (zero live) has rate 0 and can never recover."""
        absent = np.nonzero(~self.apple_present)[0]
        if absent.size == 0:
            return
        live = self.patch_live.copy()  # simultaneous: rates from the pre-pass counts
        rates = np.array([REGROWTH_RATES[min(int(live[self._patch_of[a]]), 3)] for a in absent])
        draws = self.rng.random(absent.size)
        for k, a in enumerate(absent):
            if draws[k] < rates[k]:
                cell = tuple(self.level.apple_cells[a])
                if cell in self._occupied:
                    continue
                self.apple_present[a] = True
                self.patch_live[self._patch_of[a]] += 1
                self._types[cell] = T_APPLE

    def observe(self, player: int, include_pixels: bool = True) -> Observation:
        if not 0 <= player < NUM_PLAYERS:
            raise ValueError(f"bad player index {player}")
        if not include_pixels:
            return Observation(pixels=None)
        # A tagged-out player keeps seeing a view from its last position;
        # its own avatar is absent while off-grid.
        r, c = self.pos[player]
        f = self.facing[player]
        rows, cols = oriented_window_coords(r, c, f, OBS_FRONT, OBS_BACK, OBS_SIDE)
        window = gather_window_types(self._types, rows, cols, T_PAD)
        for j in range(NUM_PLAYERS):
            if not self.active[j]:
                continue
            hit = window_cell_of(self.pos[j][0], self.pos[j][1], r, c, f,
                                 OBS_FRONT, OBS_BACK, OBS_SIDE)
            if hit is not None:
                window[hit] = T_SELF if j == player else T_OTHER
        return Observation(pixels=render_cells(window, PALETTE, SPRITE))

    def state_digest(self) -> bytes:
        flat_pos = [x for p in self.pos for x in p]
        return state_digest_of(
            flat_pos,
            self.facing,
            self.tag_timer,
            self.cooldown,
            [int(a) for a in self.active],
            np.packbits(self.apple_present).tolist(),
            [self.step_count],
        )
