"""Traffic Navigation: eight players race to edge goals without colliding.

Reaching the current goal pays +1 and draws a fresh goal from the edge
candidates; every player involved in a collision event is charged -1 and
stays put. Walls block movement silently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import GridPos, Observation
from ..errors import LevelParseError
from ..procgen import (
    GridMask,
    all_connected,
    parse_level_text,
    rejection_sample,
    write_level_text,
)
from ..render import centered_window_coords, gather_window_types, render_cells, window_cell_of
from ..seeding import make_rng
from .common import GridEnv, resolve_moves, state_digest_of

NUM_PLAYERS = 8
NOOP, NORTH, SOUTH, WEST, EAST = range(5)
MOVE_DELTAS = {NORTH: (-1, 0), SOUTH: (1, 0), WEST: (0, -1), EAST: (0, 1)}

OBS_RADIUS = 5  # 11x11 cells, centered
SPRITE = 3

T_PAD, T_OPEN, T_WALL, T_SELF, T_OTHER = range(5)
PALETTE = np.array(
    [(40, 40, 40), (20, 20, 20), (120, 120, 120), (235, 235, 235), (60, 130, 230)],
    dtype=np.uint8,
)


@dataclass
class TrafficLevel:
    """Walled arena with two adjacent edge gaps per player; the gap cells
    double as spawn candidates and goal candidates."""

    env_id = "traffic_navigation"

    grid: GridMask
    gap_pairs: tuple  # 8 pairs of adjacent edge cells, one pair per player
    seed: int = 0
    level_id: str = ""

    def __post_init__(self):
        if not self.level_id:
            self.level_id = f"traffic_navigation-{self.seed & (2**64 - 1):016x}"
        self.validate()

    def validate(self):
        h, w = self.grid.height, self.grid.width
        if not (10 <= w <= 20 and 10 <= h <= 20):
            raise ValueError(f"traffic level dims {w}x{h} outside [10, 20]")
        if len(self.gap_pairs) != NUM_PLAYERS:
            raise ValueError("traffic levels carry one gap pair per player (8)")
        seen = set()
        for a, b in self.gap_pairs:
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
                raise ValueError(f"gap cells {a}, {b} are not neighbours")
            for cell in (a, b):
                if not self._on_edge(cell):
                    raise ValueError(f"gap cell {cell} is not on the outer edge")
                if not self.grid.is_open(*cell):
                    raise ValueError(f"gap cell {cell} is walled")
                if tuple(cell) in seen:
                    raise ValueError(f"gap cell {cell} reused")
                seen.add(tuple(cell))

    def _on_edge(self, cell) -> bool:
        r, c = cell
        return r in (0, self.grid.height - 1) or c in (0, self.grid.width - 1)

    @property
    def spawn_points(self) -> tuple:
        return tuple(GridPos(*pair[0]) for pair in self.gap_pairs)

    @property
    def goal_candidates(self) -> tuple:
        return tuple(GridPos(*cell) for pair in self.gap_pairs for cell in pair)

    def to_text(self) -> str:
        rows = [
            "".join("." if self.grid.cells[r, c] else "#" for c in range(self.grid.width))
            for r in range(self.grid.height)
        ]
        meta = {"gap_pairs": [[list(a), list(b)] for a, b in self.gap_pairs]}
        features = traffic_features(self)
        return write_level_text("traffic_navigation", self.level_id, self.seed,
                                {}, features, meta, rows)

    @classmethod
    def from_text(cls, text: str) -> "TrafficLevel":
        header = parse_level_text(text)
        if header.get("env") != "traffic_navigation":
            raise LevelParseError(f"expected env traffic_navigation, got {header.get('env')}")
        rows = header["grid_rows"]
        grid = GridMask(len(rows), len(rows[0]),
                        cells=[[ch != "#" for ch in row] for row in rows])
        pairs = tuple(
            (GridPos(*a), GridPos(*b)) for a, b in header["meta"]["gap_pairs"]
        )
        return cls(grid=grid, gap_pairs=pairs, seed=header["seed"], level_id=header["id"])


def traffic_features(level: TrafficLevel) -> dict:
    """Openness (non-wall fraction) and wall count; they satisfy
    openness + num_walls / (w*h) == 1 exactly."""
    total = level.grid.width * level.grid.height
    open_cells = level.grid.count_open()
    return {"openness": open_cells / total, "num_walls": total - open_cells}


def generate_traffic_level(seed: int) -> TrafficLevel:
    """Walled rectangle in [10,20]^2, two adjacent edge gaps per player, a
    few 3x3 wall blocks (majority pairwise more than two cells apart),
    scattered single walls, retried until all gap cells interconnect."""

    def attempt(sub_seed):
        rng = make_rng(sub_seed)
        w = int(rng.integers(10, 21))
        h = int(rng.integers(10, 21))
        grid = GridMask(h, w, fill=True)
        grid.cells[0, :] = False
        grid.cells[-1, :] = False
        grid.cells[:, 0] = False
        grid.cells[:, -1] = False

        candidates = []
        for c in range(1, w - 2):
            candidates.append(((0, c), (0, c + 1)))
            candidates.append(((h - 1, c), (h - 1, c + 1)))
        for r in range(1, h - 2):
            candidates.append(((r, 0), (r + 1, 0)))
            candidates.append(((r, w - 1), (r + 1, w - 1)))
        order = rng.permutation(len(candidates))
        pairs, used = [], set()
        for k in order:
            a, b = candidates[int(k)]
            if a in used or b in used:
                continue
            pairs.append((GridPos(*a), GridPos(*b)))
            used.update((a, b))
            if len(pairs) == NUM_PLAYERS:
                break
        if len(pairs) < NUM_PLAYERS:
            return None
        for a, b in pairs:
            grid.cells[a] = True
            grid.cells[b] = True

        # 3x3 blocks: two block top-left corners 5+ apart (Chebyshev) leave
        # a gap of more than two cells; reject a block that would drop the
        # far-pair fraction below one half.
        blocks = []
        far_pairs = 0
        num_blocks = int(rng.integers(0, max(2, (w * h) // 64) + 1))
        for _ in range(num_blocks):
            r = int(rng.integers(1, h - 3))
            c = int(rng.integers(1, w - 3))
            new_far = sum(1 for (br, bc) in blocks if max(abs(br - r), abs(bc - c)) >= 5)
            total_pairs = len(blocks) * (len(blocks) + 1) // 2
            if total_pairs and (far_pairs + new_far) / total_pairs < 0.5:
                continue
            far_pairs += new_far
            blocks.append((r, c))
            grid.cells[r:r + 3, c:c + 3] = False

        num_single = int(rng.integers(0, max(2, (w * h) // 25) + 1))
        for _ in range(num_single):
            r = int(rng.integers(1, h - 1))
            c = int(rng.integers(1, w - 1))
            grid.cells[r, c] = False
        for a, b in pairs:  # scattered walls never close a gap
            grid.cells[a] = True
            grid.cells[b] = True

        level = TrafficLevel(grid=grid, gap_pairs=tuple(pairs), seed=seed)
        if not all_connected(grid, level.goal_candidates):
            return None
        return level

    return rejection_sample(attempt, seed)


class TrafficEnv(GridEnv):
    """Engine for one Traffic Navigation level.

    Collision semantics: (a) two or more players moving into the same
    cell, (b) pairwise swaps, and (c) moving into a player that stays put
    all count as collision events; every participant takes -1 and movers
    bounce back. Goal checks are state-based: a player standing on its
    goal collects +1 and immediately draws a new goal.
    """

    env_id = "traffic_navigation"
    num_players = NUM_PLAYERS
    num_actions = 5
    default_horizon = 1000
    obs_shape = (33, 33, 3)
    aux_channel_names = ("goal_row_offset", "goal_col_offset")

    def __init__(self, level: TrafficLevel):
        super().__init__(level)
        self._candidates = list(level.goal_candidates)
        self._types = np.where(level.grid.cells, T_OPEN, T_WALL).astype(np.int8)
        self._reset_state()

    def _reset_state(self):
        self.pos = [tuple(p) for p in self.level.spawn_points]
        draws = self.rng.integers(0, len(self._candidates), size=NUM_PLAYERS)
        self.goal = [tuple(self._candidates[int(k)]) for k in draws]
        self.step_count = 0

    def step(self, actions):
        acts = self._check_actions(actions)
        rewards = [0.0] * NUM_PLAYERS
        current = list(self.pos)
        wanted = list(current)
        for i, a in enumerate(acts):
            if a == NOOP:
                continue
            dr, dc = MOVE_DELTAS[a]
            r, c = current[i][0] + dr, current[i][1] + dc
            if self.level.grid.is_open(r, c):
                wanted[i] = (r, c)
        resolved, events = resolve_moves(current, wanted, rule="bounce")
        self.pos = resolved
        for event in events:
            for i in event:
                rewards[i] -= 1.0
        for i in range(NUM_PLAYERS):
            if self.pos[i] == self.goal[i]:
                rewards[i] += 1.0
                self.goal[i] = tuple(
                    self._candidates[int(self.rng.integers(len(self._candidates)))]
                )
        self.step_count += 1
        return rewards

    def observe(self, player: int, include_pixels: bool = True) -> Observation:
        if not 0 <= player < NUM_PLAYERS:
            raise ValueError(f"bad player index {player}")
        r, c = self.pos[player]
        gr, gc = self.goal[player]
        aux = (float(gr - r), float(gc - c))
        if not include_pixels:
            return Observation(pixels=None, aux=aux)
        rows, cols = centered_window_coords(r, c, OBS_RADIUS)
        window = gather_window_types(self._types, rows, cols, T_PAD)
        for j in range(NUM_PLAYERS):
            hit = window_cell_of(self.pos[j][0], self.pos[j][1], r, c, 0,
                                 OBS_RADIUS, OBS_RADIUS, OBS_RADIUS)
            if hit is not None:
                window[hit] = T_SELF if j == player else T_OTHER
        return Observation(pixels=render_cells(window, PALETTE, SPRITE), aux=aux)

    def state_digest(self) -> bytes:
        return state_digest_of(
            [x for p in self.pos for x in p],
            [x for g in self.goal for x in g],
            [self.step_count],
        )
