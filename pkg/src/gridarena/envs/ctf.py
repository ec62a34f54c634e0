"""Capture the Flag: 2v2 team competition with health, beams, and flags.

Event rewards follow the Quake-style table: capture +6, pickup +1, return
+1, teammate capture +5, tagging a flag carrier +2, tagging anyone else
+1. Beam hits from the opposing team cost one health; at zero health the
player is tagged out for 20 steps, drops any carried flag, and later
respawns at its team base with full health.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import GridPos, Observation
from ..errors import LevelParseError
from ..procgen import (
    GridMask,
    all_connected,
    backtracking_maze,
    bfs_distance,
    mirror180_concat,
    parse_level_text,
    rejection_sample,
    remove_deadends_and_horseshoes,
    write_level_text,
)
from ..render import (
    FORWARD,
    RIGHT,
    draw_center_patch,
    gather_window_types,
    oriented_window_coords,
    render_cells,
    window_cell_of,
)
from ..seeding import make_rng
from .common import GridEnv, resolve_moves, state_digest_of

NUM_PLAYERS = 4
TEAM_OF = (0, 0, 1, 1)  # seats 0,1 red; seats 2,3 blue
TEAM_SEATS = ((0, 1), (2, 3))
NOOP, FWD, BACK, LEFT, RIGHT_STEP, TURN_L, TURN_R, TAG = range(8)

MAX_HEALTH = 3
TAG_TIMEOUT = 20
TAG_COOLDOWN = 3
SPAWNS_PER_TEAM = 3
MIN_FLAG_SEPARATION = 6.0

REWARD_CAPTURE = 6.0
REWARD_PICKUP = 1.0
REWARD_RETURN = 1.0
REWARD_TEAMMATE_CAPTURE = 5.0
REWARD_TAG_CARRIER = 2.0
REWARD_TAG_PLAIN = 1.0

FLAG_HOME, FLAG_CARRIED, FLAG_DROPPED = range(3)

OBS_FRONT, OBS_BACK, OBS_SIDE = 9, 1, 5
SPRITE = 8

(T_PAD, T_OPEN, T_WALL, T_OWN_BASE, T_ENEMY_BASE, T_OWN_FLAG, T_ENEMY_FLAG,
 T_SELF, T_ALLY, T_FOE) = range(10)
PALETTE = np.array(
    [
        (40, 40, 40), (20, 20, 20), (120, 120, 120),
        (60, 90, 60), (90, 60, 60),          # base markers (flag away)
        (90, 230, 90), (230, 90, 90),        # own / enemy flag
        (250, 250, 250), (120, 230, 120), (230, 120, 60),
    ],
    dtype=np.uint8,
)
CARRY_MARK = (255, 255, 0)


@dataclass
class CtfLevel:
    """Rotation-symmetric arena: one base room, flag, and three spawn
    points per team, with the blue side the 180-degree image of the red."""

    env_id = "capture_the_flag"

    grid: GridMask
    red_flag: GridPos
    blue_flag: GridPos
    red_spawns: tuple
    blue_spawns: tuple
    seed: int = 0
    level_id: str = ""

    def __post_init__(self):
        self.red_flag = GridPos(*self.red_flag)
        self.blue_flag = GridPos(*self.blue_flag)
        self.red_spawns = tuple(GridPos(*p) for p in self.red_spawns)
        self.blue_spawns = tuple(GridPos(*p) for p in self.blue_spawns)
        if not self.level_id:
            self.level_id = f"capture_the_flag-{self.seed & (2**64 - 1):016x}"
        self.validate()

    def validate(self):
        h, w = self.grid.height, self.grid.width
        if w % 2 != 1 or not 15 <= w <= 25:
            raise ValueError(f"width {w} must be odd and within [15, 25]")
        if not 9 <= h <= 15:
            raise ValueError(f"height {h} outside [9, 15]")
        if len(self.red_spawns) != SPAWNS_PER_TEAM or len(self.blue_spawns) != SPAWNS_PER_TEAM:
            raise ValueError("each team needs exactly 3 spawn points")
        rot = self.rotated180()
        if not np.array_equal(rot.cells, self.grid.cells):
            raise ValueError("grid is not 180-degree symmetric")
        if self._rot(self.red_flag) != self.blue_flag:
            raise ValueError("flags are not 180-degree images of each other")
        if tuple(sorted(self._rot(p) for p in self.red_spawns)) != tuple(sorted(self.blue_spawns)):
            raise ValueError("spawn sets are not 180-degree images of each other")
        all_spawns = [tuple(p) for p in (*self.red_spawns, *self.blue_spawns)]
        if len(set(all_spawns)) != 2 * SPAWNS_PER_TEAM:
            raise ValueError("spawn cells must be distinct across both teams")
        if flag_crow_distance(self) < MIN_FLAG_SEPARATION:
            raise ValueError("flags closer than six cells")
        anchors = [self.red_flag, self.blue_flag, *self.red_spawns, *self.blue_spawns]
        if not all_connected(self.grid, anchors):
            raise ValueError("flags and spawns are not mutually reachable")

    def _rot(self, pos) -> GridPos:
        return GridPos(self.grid.height - 1 - pos[0], self.grid.width - 1 - pos[1])

    def rotated180(self) -> GridMask:
        return GridMask(0, 0, cells=self.grid.cells[::-1, ::-1])

    def to_text(self) -> str:
        rows = []
        for r in range(self.grid.height):
            row = []
            for c in range(self.grid.width):
                if (r, c) == tuple(self.red_flag):
                    row.append("r")
                elif (r, c) == tuple(self.blue_flag):
                    row.append("b")
                else:
                    row.append("." if self.grid.cells[r, c] else "#")
            rows.append("".join(row))
        meta = {
            "red_spawns": [list(p) for p in self.red_spawns],
            "blue_spawns": [list(p) for p in self.blue_spawns],
        }
        return write_level_text("capture_the_flag", self.level_id, self.seed, {},
                                ctf_features(self), meta, rows)

    @classmethod
    def from_text(cls, text: str) -> "CtfLevel":
        header = parse_level_text(text)
        if header.get("env") != "capture_the_flag":
            raise LevelParseError(f"expected env capture_the_flag, got {header.get('env')}")
        rows = header["grid_rows"]
        cells = [[ch != "#" for ch in row] for row in rows]
        red = blue = None
        for r, row in enumerate(rows):
            for c, ch in enumerate(row):
                if ch == "r":
                    red = GridPos(r, c)
                elif ch == "b":
                    blue = GridPos(r, c)
        if red is None or blue is None:
            raise LevelParseError("level must mark both flags with 'r' and 'b'")
        return cls(
            grid=GridMask(len(rows), len(rows[0]), cells=cells),
            red_flag=red,
            blue_flag=blue,
            red_spawns=tuple(GridPos(*p) for p in header["meta"]["red_spawns"]),
            blue_spawns=tuple(GridPos(*p) for p in header["meta"]["blue_spawns"]),
            seed=header["seed"],
            level_id=header["id"],
        )


def flag_crow_distance(level: CtfLevel) -> float:
    return math.hypot(level.red_flag[0] - level.blue_flag[0],
                      level.red_flag[1] - level.blue_flag[1])


def ctf_features(level: CtfLevel) -> dict:
    """Crow (Euclidean) and path distances between flags, their ratio
    (path complexity, in (0, 1]), and open-cell fraction."""
    crow = flag_crow_distance(level)
    path = bfs_distance(level.grid, level.red_flag, level.blue_flag)
    if path < 0:
        raise ValueError("flags are not connected")
    total = level.grid.width * level.grid.height
    return {
        "crow": crow,
        "path": path,
        "complexity": crow / path if path else 1.0,
        "openness": level.grid.count_open() / total,
    }


def generate_ctf_level(seed: int) -> CtfLevel:
    """Rooms plus backtracking-maze corridors on the left half, mirrored
    through 180 degrees onto the right, deadends and horseshoes removed,
    flags at least six cells apart and mutually capturable."""

    def attempt(sub_seed):
        rng = make_rng(sub_seed)
        w = int(rng.choice(np.arange(15, 26, 2)))
        h = int(rng.integers(9, 16))
        half_w = (w + 1) // 2
        half = GridMask(h, half_w, fill=False)

        rooms = []
        num_rooms = int(rng.integers(1, 4))
        for _ in range(num_rooms):
            rw = int(rng.integers(3, 6))
            rh = int(rng.integers(3, min(6, h - 2)))
            if half_w - 1 - rw < 2 or h - 1 - rh < 1:
                continue
            r0 = int(rng.integers(1, h - rh))
            c0 = int(rng.integers(1, half_w - 1 - rw))
            box = (r0, c0, rh, rw)
            if any(_boxes_touch(box, other) for other in rooms):
                continue
            rooms.append(box)
        if not rooms:
            return None
        for r0, c0, rh, rw in rooms:
            half.cells[r0:r0 + rh, c0:c0 + rw] = True

        region = GridMask(h, half_w, fill=False)
        region.cells[1:h - 1, 1:half_w] = True
        for r0, c0, rh, rw in rooms:
            region.cells[max(0, r0 - 1):r0 + rh + 1, max(0, c0 - 1):c0 + rw + 1] = False
        maze = backtracking_maze(region, int(rng.integers(2**63)))
        half.cells |= maze.cells

        for r0, c0, rh, rw in rooms:
            if not _punch_doors(half, (r0, c0, rh, rw), rng):
                return None

        seam = half.cells[:, half_w - 1]
        half.cells[:, half_w - 1] = seam | seam[::-1]

        # base room: first room encountered scanning from the top left
        base = min(rooms, key=lambda box: (box[0], box[1]))
        r0, c0, rh, rw = base
        room_cells = [(r, c) for r in range(r0, r0 + rh) for c in range(c0, c0 + rw)]
        center = (r0 + (rh - 1) / 2, c0 + (rw - 1) / 2)
        room_cells.sort(key=lambda p: (abs(p[0] - center[0]) + abs(p[1] - center[1]), p))
        flag = GridPos(*room_cells[0])
        spawn_pool = [p for p in room_cells[1:] if p != tuple(flag)]
        if len(spawn_pool) < SPAWNS_PER_TEAM:
            return None
        picks = rng.choice(len(spawn_pool), size=SPAWNS_PER_TEAM, replace=False)
        spawns = [GridPos(*spawn_pool[int(k)]) for k in sorted(picks)]

        full, entities = mirror180_concat(
            half, {"red_flag": flag, "red_spawns": spawns}
        )

        # cleanup must keep the rotation symmetry: alternate removal with
        # an AND-merge of the grid and its own rotation until stable
        for _ in range(20):
            cleaned = remove_deadends_and_horseshoes(full)
            merged = cleaned.cells & cleaned.cells[::-1, ::-1]
            if np.array_equal(merged, full.cells):
                full = cleaned
                break
            full = GridMask(0, 0, cells=merged)
        else:
            return None

        anchor_cells = [entities["red_flag"], entities["blue_flag"],
                        *entities["red_spawns"], *entities["blue_spawns"]]
        if not all(full.is_open(*p) for p in anchor_cells):
            return None
        if not all_connected(full, anchor_cells):
            return None
        if math.hypot(entities["red_flag"][0] - entities["blue_flag"][0],
                      entities["red_flag"][1] - entities["blue_flag"][1]) < MIN_FLAG_SEPARATION:
            return None
        return CtfLevel(
            grid=full,
            red_flag=entities["red_flag"],
            blue_flag=entities["blue_flag"],
            red_spawns=tuple(entities["red_spawns"]),
            blue_spawns=tuple(entities["blue_spawns"]),
            seed=seed,
        )

    return rejection_sample(attempt, seed)


def _boxes_touch(a, b) -> bool:
    ar, ac, ah, aw = a
    br, bc, bh, bw = b
    return not (ar + ah + 1 <= br or br + bh + 1 <= ar
                or ac + aw + 1 <= bc or bc + bw + 1 <= ac)


def _punch_doors(half: GridMask, box, rng) -> bool:
    r0, c0, rh, rw = box
    candidates = []
    for c in range(c0, c0 + rw):
        for wall_r, out_r in ((r0 - 1, r0 - 2), (r0 + rh, r0 + rh + 1)):
            if half.in_bounds(out_r, c) and half.cells[out_r, c] and not half.cells[wall_r, c]:
                candidates.append((wall_r, c))
    for r in range(r0, r0 + rh):
        for wall_c, out_c in ((c0 - 1, c0 - 2), (c0 + rw, c0 + rw + 1)):
            if half.in_bounds(r, out_c) and half.cells[r, out_c] and not half.cells[r, wall_c]:
                candidates.append((r, wall_c))
    if not candidates:
        return False
    doors = 1 + int(rng.integers(0, 2))
    picks = rng.choice(len(candidates), size=min(doors, len(candidates)), replace=False)
    for k in picks:
        half.cells[candidates[int(k)]] = True
    return True


@dataclass(frozen=True)
class MatchOutcome:
    red_captures: int
    blue_captures: int

    @property
    def winner(self) -> str:
        if self.red_captures > self.blue_captures:
            return "red"
        if self.blue_captures > self.red_captures:
            return "blue"
        return "draw"


class CtfEnv(GridEnv):
    """Engine for one Capture the Flag level.

    Step phases: tag-out bookkeeping and respawns, cooldown bookkeeping,
    turning, simultaneous movement (contested cells bounce everyone, so
    neither team enjoys priority), flag touches and captures, then beams.
    The engine is team-fair by construction: running the mirrored joint
    actions on the mirrored seats reproduces the mirrored episode.
    """

    env_id = "capture_the_flag"
    num_players = NUM_PLAYERS
    num_actions = 8
    default_horizon = 2400
    obs_shape = (88, 88, 3)
    aux_channel_names = ("own_flag_taken", "enemy_flag_taken")

    def __init__(self, level: CtfLevel):
        super().__init__(level)
        self._flag_home = (tuple(level.red_flag), tuple(level.blue_flag))
        self._spawns = (tuple(map(tuple, level.red_spawns)),
                        tuple(map(tuple, level.blue_spawns)))
        self._base_types = np.where(level.grid.cells, T_OPEN, T_WALL).astype(np.int8)
        self._reset_state()

    def _reset_state(self):
        idx = [int(k) for k in self.rng.choice(SPAWNS_PER_TEAM, size=2, replace=False)]
        self.pos = [None] * NUM_PLAYERS
        for team in (0, 1):
            for slot, seat in enumerate(TEAM_SEATS[team]):
                self.pos[seat] = self._spawns[team][idx[slot]]
        self.facing = [1, 1, 3, 3]  # red faces east, blue faces west
        self.health = [MAX_HEALTH] * NUM_PLAYERS
        self.tag_timer = [0] * NUM_PLAYERS
        self.cooldown = [0] * NUM_PLAYERS
        self.active = [True] * NUM_PLAYERS
        self.carrying = [None] * NUM_PLAYERS  # flag team id or None
        # per team flag: (state, payload) payload = carrier seat or drop cell
        self.flag_state = [(FLAG_HOME, None), (FLAG_HOME, None)]
        self.captures = [0, 0]
        self.last_events = []
        self._occupied = {p: i for i, p in enumerate(self.pos)}
        self.step_count = 0

    def step(self, actions):
        acts = self._check_actions(actions)
        rewards = [0.0] * NUM_PLAYERS
        events = []

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
        self._flag_touches(rewards, events)
        self._captures(rewards, events)
        self._beams(acts, fire_blocked, rewards, events)

        self.step_count += 1
        self.last_events = events
        return rewards

    # -- step phases -------------------------------------------------

    def _move_players(self, acts):
        current = list(self.pos)
        wanted = list(current)
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
        active_ids = [i for i in range(NUM_PLAYERS) if self.active[i]]
        sub = resolve_moves([current[i] for i in active_ids],
                            [wanted[i] for i in active_ids], rule="bounce")[0]
        for k, i in enumerate(active_ids):
            self.pos[i] = sub[k]
        self._occupied = {self.pos[i]: i for i in active_ids}

    def _flag_touches(self, rewards, events):
        for i in range(NUM_PLAYERS):
            if not self.active[i]:
                continue
            team = TEAM_OF[i]
            enemy = 1 - team
            cell = self.pos[i]
            state, payload = self.flag_state[enemy]
            if self.carrying[i] is None and (
                (state == FLAG_HOME and cell == self._flag_home[enemy])
                or (state == FLAG_DROPPED and cell == payload)
            ):
                self.flag_state[enemy] = (FLAG_CARRIED, i)
                self.carrying[i] = enemy
                rewards[i] += REWARD_PICKUP
                events.append(("pickup", i))
            own_state, own_payload = self.flag_state[team]
            if own_state == FLAG_DROPPED and cell == own_payload:
                self.flag_state[team] = (FLAG_HOME, None)
                rewards[i] += REWARD_RETURN
                events.append(("return", i))

    def _captures(self, rewards, events):
        for i in range(NUM_PLAYERS):
            if not self.active[i] or self.carrying[i] is None:
                continue
            team = TEAM_OF[i]
            if self.pos[i] != self._flag_home[team]:
                continue
            if self.flag_state[team][0] != FLAG_HOME:
                continue
            enemy = self.carrying[i]
            self.flag_state[enemy] = (FLAG_HOME, None)
            self.carrying[i] = None
            self.captures[team] += 1
            rewards[i] += REWARD_CAPTURE
            events.append(("capture", i))
            for j in TEAM_SEATS[team]:
                if j != i:
                    rewards[j] += REWARD_TEAMMATE_CAPTURE
                    events.append(("teammate_capture", j))

    def _beams(self, acts, fire_blocked, rewards, events):
        hits = []
        for i in range(NUM_PLAYERS):
            if not self.active[i] or acts[i] != TAG or fire_blocked[i]:
                continue
            self.cooldown[i] = TAG_COOLDOWN
            victim = self._beam_first_hit(i)
            if victim is not None:
                hits.append((i, victim))
        damage = [0] * NUM_PLAYERS
        for shooter, victim in hits:
            if TEAM_OF[shooter] == TEAM_OF[victim]:
                continue  # friendly fire: beam stops but has no effect
            damage[victim] += 1
            if self.carrying[victim] is not None:
                rewards[shooter] += REWARD_TAG_CARRIER
                events.append(("tag_carrier", shooter, victim))
            else:
                rewards[shooter] += REWARD_TAG_PLAIN
                events.append(("tag", shooter, victim))
        for victim in range(NUM_PLAYERS):
            if damage[victim] == 0:
                continue
            self.health[victim] -= damage[victim]
            if self.health[victim] <= 0:
                self.health[victim] = 0
                self.tag_timer[victim] = TAG_TIMEOUT
                self.active[victim] = False
                del self._occupied[self.pos[victim]]
                if self.carrying[victim] is not None:
                    flag = self.carrying[victim]
                    self.flag_state[flag] = (FLAG_DROPPED, self.pos[victim])
                    self.carrying[victim] = None
                    events.append(("flag_dropped", victim))

    def _beam_first_hit(self, shooter: int):
        fr, fc = FORWARD[self.facing[shooter]]
        r, c = self.pos[shooter]
        while True:
            r += fr
            c += fc
            if not self.level.grid.is_open(r, c):
                return None
            j = self._occupied.get((r, c))
            if j is not None:
                return j

    def _respawn(self, i: int):
        team = TEAM_OF[i]
        cell = None
        for candidate in self._spawns[team]:
            if candidate not in self._occupied:
                cell = candidate
                break
        if cell is None:
            # base fully blocked: take the nearest free cell to the flag home
            from collections import deque

            queue = deque([self._flag_home[team]])
            seen = {self._flag_home[team]}
            while queue:
                cur = queue.popleft()
                if cur not in self._occupied and self.level.grid.is_open(*cur):
                    cell = cur
                    break
                for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    nxt = (cur[0] + dr, cur[1] + dc)
                    if nxt not in seen and self.level.grid.is_open(*nxt):
                        seen.add(nxt)
                        queue.append(nxt)
        self.pos[i] = cell
        self.facing[i] = 1 if team == 0 else 3
        self.health[i] = MAX_HEALTH
        self.active[i] = True
        self._occupied[cell] = i

    # -- observation ---------------------------------------------------

    def observe(self, player: int, include_pixels: bool = True) -> Observation:
        if not 0 <= player < NUM_PLAYERS:
            raise ValueError(f"bad player index {player}")
        team = TEAM_OF[player]
        enemy = 1 - team
        aux = (
            float(self.flag_state[team][0] == FLAG_CARRIED),
            float(self.flag_state[enemy][0] == FLAG_CARRIED),
        )
        if not include_pixels:
            return Observation(pixels=None, aux=aux)
        if not self.active[player]:
            # tagged out: all-black visual observation, aux stays live
            return Observation(pixels=np.zeros(self.obs_shape, dtype=np.uint8), aux=aux)
        r, c = self.pos[player]
        f = self.facing[player]
        rows, cols = oriented_window_coords(r, c, f, OBS_FRONT, OBS_BACK, OBS_SIDE)
        window = gather_window_types(self._base_types, rows, cols, T_PAD)

        def place(cell, t):
            hit = window_cell_of(cell[0], cell[1], r, c, f, OBS_FRONT, OBS_BACK, OBS_SIDE)
            if hit is not None:
                window[hit] = t
            return hit

        for flag_team in (0, 1):
            own = flag_team == team
            place(self._flag_home[flag_team], T_OWN_BASE if own else T_ENEMY_BASE)
            state, payload = self.flag_state[flag_team]
            if state == FLAG_HOME:
                place(self._flag_home[flag_team], T_OWN_FLAG if own else T_ENEMY_FLAG)
            elif state == FLAG_DROPPED:
                place(payload, T_OWN_FLAG if own else T_ENEMY_FLAG)
        carrier_cells = []
        for j in range(NUM_PLAYERS):
            if not self.active[j]:
                continue
            t = T_SELF if j == player else (T_ALLY if TEAM_OF[j] == team else T_FOE)
            hit = place(self.pos[j], t)
            if hit is not None and self.carrying[j] is not None:
                carrier_cells.append(hit)
        pixels = render_cells(window, PALETTE, SPRITE)
        for hit in carrier_cells:
            draw_center_patch(pixels, hit[0], hit[1], SPRITE, CARRY_MARK)
        return Observation(pixels=pixels, aux=aux)

    def state_digest(self) -> bytes:
        flag_enc = []
        for state, payload in self.flag_state:
            if state == FLAG_HOME:
                flag_enc.extend((0, -1, -1))
            elif state == FLAG_CARRIED:
                flag_enc.extend((1, payload, -1))
            else:
                flag_enc.extend((2, payload[0], payload[1]))
        return state_digest_of(
            [x for p in self.pos for x in p],
            self.facing,
            self.health,
            self.tag_timer,
            self.cooldown,
            [int(a) for a in self.active],
            [-1 if cf is None else cf for cf in self.carrying],
            flag_enc,
            self.captures,
            [self.step_count],
        )

    def outcome(self) -> MatchOutcome:
        return MatchOutcome(red_captures=self.captures[0], blue_captures=self.captures[1])
