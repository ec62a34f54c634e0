"""Overcooked: two cooks deposit tomatoes, cook soup, plate, and deliver.

Depositing a tomato into a pot pays the depositing player +1; a delivered
soup pays both players +20. A pot holding three tomatoes cooks for 20
steps before the soup can be collected with a dish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import GridPos, Observation
from ..errors import LevelParseError
from ..procgen import (
    GridMask,
    bfs_distance,
    parse_level_text,
    reachable,
    rejection_sample,
    write_level_text,
)
from ..render import (
    centered_window_coords,
    draw_bottom_bar,
    draw_center_patch,
    gather_window_types,
    render_cells,
    window_cell_of,
)
from ..seeding import make_rng
from .common import GridEnv, resolve_moves, state_digest_of

NUM_PLAYERS = 2
NOOP, NORTH, SOUTH, WEST, EAST, INTERACT = range(6)
MOVE_DELTAS = {NORTH: (-1, 0), SOUTH: (1, 0), WEST: (0, -1), EAST: (0, 1)}
FACING_OF_MOVE = {NORTH: 0, EAST: 1, SOUTH: 2, WEST: 3}
FACING_DELTAS = ((-1, 0), (0, 1), (1, 0), (0, -1))

HELD_NONE, HELD_TOMATO, HELD_DISH, HELD_SOUP = range(4)
COOK_TIME = 20
POT_CAPACITY = 3

OBS_RADIUS = 3  # 7x7 cells, centered
SPRITE = 8

T_PAD, T_FLOOR, T_COUNTER, T_POT, T_TOMATO_ST, T_DISH_ST, T_DELIVERY, T_SELF, T_OTHER = range(9)
PALETTE = np.array(
    [
        (40, 40, 40),     # padding
        (24, 24, 24),     # floor
        (140, 100, 60),   # counter
        (90, 90, 105),    # cooking pot
        (200, 40, 40),    # tomato station
        (225, 225, 225),  # dish station
        (240, 190, 40),   # delivery station
        (250, 250, 250),  # self
        (70, 200, 200),   # other player
    ],
    dtype=np.uint8,
)
ITEM_COLORS = {
    HELD_TOMATO: (255, 60, 60),
    HELD_DISH: (255, 255, 255),
    HELD_SOUP: (255, 140, 40),
}
COOK_BAR_COLOR = (250, 250, 100)
READY_BAR_COLOR = (60, 255, 60)

GLYPHS = {"#": T_COUNTER, ".": T_FLOOR, "P": T_POT, "T": T_TOMATO_ST,
          "D": T_DISH_ST, "X": T_DELIVERY}
GLYPH_OF = {v: k for k, v in GLYPHS.items()}
OBJECT_KINDS = ("pots", "tomato_stations", "dish_stations", "delivery_stations")


@dataclass
class KitchenLevel:
    """Counter-ringed kitchen with one to three instances of each object."""

    env_id = "overcooked"

    grid: GridMask  # True = walkable floor; stations and counters are closed
    pots: tuple
    tomato_stations: tuple
    dish_stations: tuple
    delivery_stations: tuple
    spawn_points: tuple
    seed: int = 0
    level_id: str = ""

    def __post_init__(self):
        if not self.level_id:
            self.level_id = f"overcooked-{self.seed & (2**64 - 1):016x}"
        # canonical scan order keeps parsed and generated levels equivalent
        for kind in OBJECT_KINDS:
            cells = sorted(map(tuple, getattr(self, kind)))
            setattr(self, kind, tuple(GridPos(*c) for c in cells))
        self.validate()

    def validate(self):
        h, w = self.grid.height, self.grid.width
        if not (4 <= w <= 9 and 4 <= h <= 9):
            raise ValueError(f"kitchen dims {w}x{h} outside [4, 9]")
        for kind in OBJECT_KINDS:
            cells = getattr(self, kind)
            if not 1 <= len(cells) <= 3:
                raise ValueError(f"{kind} count {len(cells)} outside [1, 3]")
            for cell in cells:
                if self.grid.is_open(*cell):
                    raise ValueError(f"{kind} cell {cell} must be a closed cell")
        if len(self.spawn_points) != NUM_PLAYERS:
            raise ValueError("kitchens carry exactly 2 spawn points")
        for s in self.spawn_points:
            if not self.grid.is_open(*s):
                raise ValueError(f"spawn {s} is not floor")

    def object_cells(self) -> dict:
        return {kind: set(map(tuple, getattr(self, kind))) for kind in OBJECT_KINDS}

    def to_text(self) -> str:
        typed = self.type_grid()
        rows = ["".join(GLYPH_OF[typed[r, c]] for c in range(self.grid.width))
                for r in range(self.grid.height)]
        meta = {"spawn_points": [list(p) for p in self.spawn_points]}
        features = kitchen_features(self)
        return write_level_text("overcooked", self.level_id, self.seed, {},
                                features, meta, rows)

    def type_grid(self) -> np.ndarray:
        typed = np.where(self.grid.cells, T_FLOOR, T_COUNTER).astype(np.int8)
        for kind, t in (("pots", T_POT), ("tomato_stations", T_TOMATO_ST),
                        ("dish_stations", T_DISH_ST), ("delivery_stations", T_DELIVERY)):
            for cell in getattr(self, kind):
                typed[cell[0], cell[1]] = t
        return typed

    @classmethod
    def from_text(cls, text: str) -> "KitchenLevel":
        header = parse_level_text(text)
        if header.get("env") != "overcooked":
            raise LevelParseError(f"expected env overcooked, got {header.get('env')}")
        rows = header["grid_rows"]
        cells = [[ch == "." for ch in row] for row in rows]
        kinds = {kind: [] for kind in OBJECT_KINDS}
        glyph_kind = {"P": "pots", "T": "tomato_stations", "D": "dish_stations",
                      "X": "delivery_stations"}
        for r, row in enumerate(rows):
            for c, ch in enumerate(row):
                if ch in glyph_kind:
                    kinds[glyph_kind[ch]].append(GridPos(r, c))
                elif ch not in GLYPHS:
                    raise LevelParseError(f"unknown glyph {ch!r}", line=r + 1)
        return cls(
            grid=GridMask(len(rows), len(rows[0]), cells=cells),
            pots=tuple(kinds["pots"]),
            tomato_stations=tuple(kinds["tomato_stations"]),
            dish_stations=tuple(kinds["dish_stations"]),
            delivery_stations=tuple(kinds["delivery_stations"]),
            spawn_points=tuple(GridPos(*p) for p in header["meta"]["spawn_points"]),
            seed=header["seed"],
            level_id=header["id"],
        )


def kitchen_solvable(level: KitchenLevel) -> bool:
    """Each player alone must be able to finish a soup: from its spawn it
    must reach cells adjacent to at least one pot, tomato station, dish
    station, and delivery station."""
    for spawn in level.spawn_points:
        component = reachable(level.grid, spawn)
        for kind in OBJECT_KINDS:
            cells = getattr(level, kind)
            if not any(
                GridPos(cell[0] + dr, cell[1] + dc) in component
                for cell in cells
                for dr, dc in FACING_DELTAS
            ):
                return False
    return True


def kitchen_features(level: KitchenLevel) -> dict:
    """Estimated movement cost of one soup cycle plus openness.

    The canonical cycle is three tomato-station-to-pot legs, one
    dish-station-to-pot leg, and one pot-to-delivery leg; each leg is the
    shortest floor path between cells adjacent to the two objects,
    minimized over object instances.
    """
    def leg(kind_a: str, kind_b: str) -> int:
        best = -1
        for a in getattr(level, kind_a):
            for b in getattr(level, kind_b):
                for ar, ac in _adjacent_floor(level, a):
                    for br, bc in _adjacent_floor(level, b):
                        d = bfs_distance(level.grid, GridPos(ar, ac), GridPos(br, bc))
                        if d >= 0 and (best < 0 or d < best):
                            best = d
        if best < 0:
            raise ValueError(f"no path between {kind_a} and {kind_b}")
        return best

    est = 3 * leg("tomato_stations", "pots") + leg("dish_stations", "pots") \
        + leg("pots", "delivery_stations")
    total = level.grid.width * level.grid.height
    return {"est_path_length": est, "openness": level.grid.count_open() / total}


def _adjacent_floor(level: KitchenLevel, cell):
    for dr, dc in FACING_DELTAS:
        r, c = cell[0] + dr, cell[1] + dc
        if level.grid.is_open(r, c):
            yield r, c


def generate_kitchen_level(seed: int) -> KitchenLevel:
    """Counter ring around a floor area, optional interior counters (one
    mid block or scattered), one to three of each station converted from
    counters, two spawns; retried until both players can cook solo."""

    def attempt(sub_seed):
        rng = make_rng(sub_seed)
        w = int(rng.integers(4, 10))
        h = int(rng.integers(4, 10))
        grid = GridMask(h, w, fill=False)
        grid.cells[1:h - 1, 1:w - 1] = True

        interior = [(r, c) for r in range(1, h - 1) for c in range(1, w - 1)]
        if rng.random() < 0.5 and h >= 6 and w >= 6:
            bw = int(rng.integers(1, w - 4))
            bh = int(rng.integers(1, h - 4))
            r0 = (h - bh) // 2
            c0 = (w - bw) // 2
            grid.cells[r0:r0 + bh, c0:c0 + bw] = False
        else:
            extra = int(rng.integers(0, max(1, len(interior) // 5) + 1))
            for k in rng.permutation(len(interior))[:extra]:
                grid.cells[interior[int(k)]] = False

        counters = [
            (r, c) for r in range(h) for c in range(w)
            if not grid.cells[r, c]
            and any(grid.is_open(r + dr, c + dc) for dr, dc in FACING_DELTAS)
        ]
        assigned = {}
        kinds = {}
        for kind in OBJECT_KINDS:
            count = int(rng.integers(1, 4))
            free = [cell for cell in counters if cell not in assigned]
            if len(free) < count:
                return None
            picks = rng.choice(len(free), size=count, replace=False)
            kinds[kind] = tuple(GridPos(*free[int(k)]) for k in sorted(picks))
            for cell in kinds[kind]:
                assigned[tuple(cell)] = kind

        floor = [(r, c) for r in range(h) for c in range(w) if grid.cells[r, c]]
        if len(floor) < NUM_PLAYERS:
            return None
        picks = rng.choice(len(floor), size=NUM_PLAYERS, replace=False)
        spawns = tuple(GridPos(*floor[int(k)]) for k in sorted(picks))

        level = KitchenLevel(grid=grid, spawn_points=spawns, seed=seed, **kinds)
        if not kitchen_solvable(level):
            return None
        return level

    return rejection_sample(attempt, seed)


class KitchenEnv(GridEnv):
    """Engine for one Overcooked kitchen.

    Step phases: pot timers tick, then movement (a move action orients the
    player even when the step itself is blocked), then interactions in
    player-index order. Interaction outcomes, by held item and faced cell:
    pick up from a loaded counter; place any held item on an empty
    counter; deposit a tomato into a non-full pot (+1, starts cooking on
    the third); collect ready soup with a dish; deliver soup (+20 to both
    players); take from tomato/dish stations when empty-handed. Anything
    else is a no-op. Items never leave a pot, and a cooking pot cannot be
    interrupted.
    """

    env_id = "overcooked"
    num_players = NUM_PLAYERS
    num_actions = 6
    default_horizon = 540
    obs_shape = (56, 56, 3)

    def __init__(self, level: KitchenLevel):
        super().__init__(level)
        self._base_types = level.type_grid()
        self._pot_cells = [tuple(p) for p in level.pots]
        self._pot_index = {cell: k for k, cell in enumerate(self._pot_cells)}
        self._kind_at = {}
        for kind in OBJECT_KINDS:
            for cell in getattr(level, kind):
                self._kind_at[tuple(cell)] = kind
        self._plain_counters = {
            (r, c)
            for r in range(level.grid.height)
            for c in range(level.grid.width)
            if not level.grid.cells[r, c] and (r, c) not in self._kind_at
        }
        self._reset_state()

    def _reset_state(self):
        self.pos = [tuple(p) for p in self.level.spawn_points]
        self.facing = [2, 2]  # both start facing south
        self.held = [HELD_NONE, HELD_NONE]
        self.counter_item = {}
        n_pots = len(self._pot_cells)
        self.pot_count = [0] * n_pots
        self.pot_timer = [0] * n_pots
        self.pot_ready = [False] * n_pots
        self.step_count = 0

    def step(self, actions):
        acts = self._check_actions(actions)
        rewards = [0.0] * NUM_PLAYERS

        for k in range(len(self._pot_cells)):
            if self.pot_count[k] == POT_CAPACITY and not self.pot_ready[k]:
                self.pot_timer[k] += 1
                if self.pot_timer[k] >= COOK_TIME:
                    self.pot_ready[k] = True

        current = list(self.pos)
        wanted = list(current)
        for i, a in enumerate(acts):
            if a in MOVE_DELTAS:
                self.facing[i] = FACING_OF_MOVE[a]
                dr, dc = MOVE_DELTAS[a]
                r, c = current[i][0] + dr, current[i][1] + dc
                if self.level.grid.is_open(r, c):
                    wanted[i] = (r, c)
        self.pos, _ = resolve_moves(current, wanted, rule="priority")

        for i in range(NUM_PLAYERS):
            if acts[i] == INTERACT:
                self._interact(i, rewards)

        self.step_count += 1
        return rewards

    def _interact(self, i: int, rewards):
        dr, dc = FACING_DELTAS[self.facing[i]]
        cell = (self.pos[i][0] + dr, self.pos[i][1] + dc)
        held = self.held[i]
        kind = self._kind_at.get(cell)
        if cell in self._plain_counters:
            item = self.counter_item.get(cell)
            if held == HELD_NONE and item is not None:
                self.held[i] = item
                del self.counter_item[cell]
            elif held != HELD_NONE and item is None:
                self.counter_item[cell] = held
                self.held[i] = HELD_NONE
        elif kind == "pots":
            k = self._pot_index[cell]
            if held == HELD_TOMATO and self.pot_count[k] < POT_CAPACITY:
                self.pot_count[k] += 1
                self.held[i] = HELD_NONE
                rewards[i] += 1.0
                if self.pot_count[k] == POT_CAPACITY:
                    self.pot_timer[k] = 0
            elif held == HELD_DISH and self.pot_ready[k]:
                self.held[i] = HELD_SOUP
                self.pot_count[k] = 0
                self.pot_timer[k] = 0
                self.pot_ready[k] = False
        elif kind == "tomato_stations":
            if held == HELD_NONE:
                self.held[i] = HELD_TOMATO
        elif kind == "dish_stations":
            if held == HELD_NONE:
                self.held[i] = HELD_DISH
        elif kind == "delivery_stations":
            if held == HELD_SOUP:
                self.held[i] = HELD_NONE
                for j in range(NUM_PLAYERS):
                    rewards[j] += 20.0

    def observe(self, player: int, include_pixels: bool = True) -> Observation:
        if not 0 <= player < NUM_PLAYERS:
            raise ValueError(f"bad player index {player}")
        if not include_pixels:
            return Observation(pixels=None)
        r, c = self.pos[player]
        rows, cols = centered_window_coords(r, c, OBS_RADIUS)
        window = gather_window_types(self._base_types, rows, cols, T_PAD)
        for j in range(NUM_PLAYERS):
            hit = window_cell_of(self.pos[j][0], self.pos[j][1], r, c, 0,
                                 OBS_RADIUS, OBS_RADIUS, OBS_RADIUS)
            if hit is not None:
                window[hit] = T_SELF if j == player else T_OTHER
        pixels = render_cells(window, PALETTE, SPRITE)

        def cell_window_pos(cell):
            return window_cell_of(cell[0], cell[1], r, c, 0,
                                  OBS_RADIUS, OBS_RADIUS, OBS_RADIUS)

        for cell, item in self.counter_item.items():
            hit = cell_window_pos(cell)
            if hit is not None:
                draw_center_patch(pixels, hit[0], hit[1], SPRITE, ITEM_COLORS[item])
        for k, cell in enumerate(self._pot_cells):
            hit = cell_window_pos(cell)
            if hit is None:
                continue
            if self.pot_ready[k]:
                draw_bottom_bar(pixels, hit[0], hit[1], SPRITE, 1.0, READY_BAR_COLOR)
            elif self.pot_count[k] == POT_CAPACITY:
                draw_bottom_bar(pixels, hit[0], hit[1], SPRITE,
                                self.pot_timer[k] / COOK_TIME, COOK_BAR_COLOR)
            elif self.pot_count[k] > 0:
                draw_center_patch(pixels, hit[0], hit[1], SPRITE,
                                  ITEM_COLORS[HELD_TOMATO])
        for j in range(NUM_PLAYERS):
            if self.held[j] != HELD_NONE:
                hit = cell_window_pos(self.pos[j])
                if hit is not None:
                    draw_center_patch(pixels, hit[0], hit[1], SPRITE,
                                      ITEM_COLORS[self.held[j]])
        return Observation(pixels=pixels)

    def state_digest(self) -> bytes:
        counters = sorted((cell, item) for cell, item in self.counter_item.items())
        return state_digest_of(
            [x for p in self.pos for x in p],
            self.facing,
            self.held,
            self.pot_count,
            self.pot_timer,
            [int(x) for x in self.pot_ready],
            [v for (cell, item) in counters for v in (*cell, item)],
            [self.step_count],
        )
