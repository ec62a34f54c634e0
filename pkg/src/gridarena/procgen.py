"""Shared procedural-generation machinery.

Seeded maze carving, reachability, deadend/horseshoe cleanup, 180-degree
symmetrization, and the common level text format used by all four
generators. Connectivity is 4-neighbor throughout; movement in every
environment is cardinal.
"""

from __future__ import annotations

import json
from collections import deque
from typing import Iterable

import numpy as np

from .core import GridPos
from .errors import GenerationError, LevelParseError
from .seeding import make_rng

NEIGHBORS4 = ((-1, 0), (1, 0), (0, -1), (0, 1))

# Generators retry with a derived sub-seed until their solvability checks
# pass; past this many attempts they raise GenerationError.
RETRY_CAP = 10_000
LEVEL_FORMAT_VERSION = 1


class GridMask:
    """A boolean grid: True cells are open, False cells are walls."""

    __slots__ = ("cells",)

    def __init__(self, height: int, width: int, fill: bool = False, cells=None):
        if cells is not None:
            self.cells = np.array(cells, dtype=bool)
        else:
            self.cells = np.full((height, width), fill, dtype=bool)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def is_open(self, row: int, col: int) -> bool:
        return self.in_bounds(row, col) and bool(self.cells[row, col])

    def open_positions(self) -> list[GridPos]:
        rows, cols = np.nonzero(self.cells)
        return [GridPos(int(r), int(c)) for r, c in zip(rows, cols)]

    def count_open(self) -> int:
        return int(self.cells.sum())

    def open_degree(self, row: int, col: int) -> int:
        return sum(1 for dr, dc in NEIGHBORS4 if self.is_open(row + dr, col + dc))

    def copy(self) -> "GridMask":
        return GridMask(0, 0, cells=self.cells)

    def __eq__(self, other):
        return isinstance(other, GridMask) and np.array_equal(self.cells, other.cells)

    def __repr__(self):
        return f"GridMask({self.height}x{self.width}, open={self.count_open()})"


def reachable(grid: GridMask, start: GridPos) -> set[GridPos]:
    """Exact 4-connected BFS closure of `start` over open cells."""
    if not grid.is_open(start[0], start[1]):
        raise ValueError(f"reachable() start {start} is not an open cell")
    seen = {GridPos(*start)}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        for dr, dc in NEIGHBORS4:
            nr, nc = r + dr, c + dc
            pos = GridPos(nr, nc)
            if pos not in seen and grid.is_open(nr, nc):
                seen.add(pos)
                queue.append(pos)
    return seen


def bfs_distance(grid: GridMask, start: GridPos, goal: GridPos) -> int:
    """Shortest 4-connected path length in moves, or -1 if unreachable."""
    if not grid.is_open(start[0], start[1]) or not grid.is_open(goal[0], goal[1]):
        return -1
    if tuple(start) == tuple(goal):
        return 0
    dist = {GridPos(*start): 0}
    queue = deque([GridPos(*start)])
    goal = GridPos(*goal)
    while queue:
        pos = queue.popleft()
        d = dist[pos]
        for dr, dc in NEIGHBORS4:
            nxt = GridPos(pos.row + dr, pos.col + dc)
            if nxt not in dist and grid.is_open(nxt.row, nxt.col):
                if nxt == goal:
                    return d + 1
                dist[nxt] = d + 1
                queue.append(nxt)
    return -1


def shortest_path(grid: GridMask, start: GridPos, goal: GridPos):
    """Cells along one shortest 4-connected path, start and goal included;
    None when unreachable. Ties break toward north, south, west, east."""
    if not grid.is_open(start[0], start[1]) or not grid.is_open(goal[0], goal[1]):
        return None
    start, goal = GridPos(*start), GridPos(*goal)
    if start == goal:
        return [start]
    parent = {start: None}
    queue = deque([start])
    while queue:
        pos = queue.popleft()
        for dr, dc in NEIGHBORS4:
            nxt = GridPos(pos.row + dr, pos.col + dc)
            if nxt in parent or not grid.is_open(nxt.row, nxt.col):
                continue
            parent[nxt] = pos
            if nxt == goal:
                path = [nxt]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(nxt)
    return None


def all_connected(grid: GridMask, positions: Iterable[GridPos]) -> bool:
    """True if every given position is open and mutually reachable."""
    positions = [GridPos(*p) for p in positions]
    if not positions:
        return True
    if not grid.is_open(positions[0].row, positions[0].col):
        return False
    closure = reachable(grid, positions[0])
    return all(p in closure for p in positions)


def backtracking_maze(region: GridMask, seed: int) -> GridMask:
    """Carve corridors through the open (carvable) cells of `region`.

    Classic randomized depth-first backtracker on a 2-spaced lattice
    anchored at the first carvable cell, run once per lattice cluster so
    disjoint carvable areas each receive corridors. Cells outside `region`
    are never touched.
    """
    out = GridMask(region.height, region.width, fill=False)
    carvable = region.cells
    anchor = np.argwhere(carvable)
    if anchor.size == 0:
        return out
    rng = make_rng(seed)
    ar, ac = int(anchor[0][0]), int(anchor[0][1])
    nodes = [
        (r, c)
        for r in range(ar % 2, region.height, 2)
        for c in range(ac % 2, region.width, 2)
        if carvable[r, c]
    ]
    unvisited = set(nodes)
    while unvisited:
        start = min(unvisited)
        unvisited.discard(start)
        out.cells[start] = True
        stack = [start]
        while stack:
            r, c = stack[-1]
            options = []
            for dr, dc in NEIGHBORS4:
                nr, nc = r + 2 * dr, c + 2 * dc
                if (nr, nc) in unvisited and carvable[r + dr, c + dc]:
                    options.append((nr, nc, r + dr, c + dc))
            if options:
                nr, nc, mr, mc = options[rng.integers(len(options))]
                out.cells[mr, mc] = True
                out.cells[nr, nc] = True
                unvisited.discard((nr, nc))
                stack.append((nr, nc))
            else:
                stack.pop()
    return out


def remove_deadends_and_horseshoes(grid: GridMask) -> GridMask:
    """Wall off deadends and 3-cell horseshoe pockets, preserving connectivity.

    A deadend is an open cell with open-degree <= 1; all are walled
    simultaneously and the pass repeats to a fixed point. A horseshoe is
    the apex of a 1-wide U-turn around a wall-stub tip: an open cell whose
    only open neighbors are the two cells straight through it, with the
    corridor wrapping over the perpendicular wall stub. Filling an apex is
    simulated first (apex walled, deadends eroded to a fixed point) and
    kept only when the result is non-empty and still connected, so pure
    loops survive untouched and genuine pockets erode back to their
    junction. Cells are only ever closed, so the procedure terminates.
    """
    out = grid.copy()
    _wall_deadends(out)
    for _ in range(out.height * out.width):
        apex = next(
            (
                (r, c)
                for r in range(out.height)
                for c in range(out.width)
                if out.cells[r, c] and _is_horseshoe_apex(out, r, c)
                and _fill_is_safe(out, r, c)
            ),
            None,
        )
        if apex is None:
            break
        out.cells[apex] = False
        _wall_deadends(out)
    return out


def _fill_is_safe(grid: GridMask, r: int, c: int) -> bool:
    trial = grid.copy()
    trial.cells[r, c] = False
    _wall_deadends(trial)
    return trial.count_open() > 0 and _open_cells_connected(trial)


def _wall_deadends(grid: GridMask) -> bool:
    changed_any = False
    while True:
        doomed = [
            (r, c)
            for r in range(grid.height)
            for c in range(grid.width)
            if grid.cells[r, c] and grid.open_degree(r, c) <= 1
        ]
        if not doomed:
            return changed_any
        for r, c in doomed:
            grid.cells[r, c] = False
        changed_any = True


def _is_horseshoe_apex(grid: GridMask, r: int, c: int) -> bool:
    # Straight corridor cell whose only open neighbors are the two cells
    # straight through it, where the corridor also wraps over the wall on
    # one perpendicular side: the bottom of a pointless 1-wide 180° turn.
    if grid.open_degree(r, c) != 2:
        return False
    for (ar, ac), (br, bc) in (((0, -1), (0, 1)), ((-1, 0), (1, 0))):
        a = (r + ar, c + ac)
        b = (r + br, c + bc)
        if not (grid.is_open(*a) and grid.is_open(*b)):
            continue
        perpendicular = ((1, 0), (-1, 0)) if ar == 0 else ((0, 1), (0, -1))
        for sr, sc in perpendicular:
            stub = (r + sr, c + sc)
            if grid.is_open(*stub) or not grid.in_bounds(*stub):
                continue
            if grid.is_open(r + 2 * sr, c + 2 * sc):
                continue  # free-standing pillar, not a wall-stub tip
            if grid.is_open(a[0] + sr, a[1] + sc) and grid.is_open(b[0] + sr, b[1] + sc):
                return True
    return False


def _open_cells_connected(grid: GridMask) -> bool:
    opens = np.argwhere(grid.cells)
    if len(opens) == 0:
        return True
    start = GridPos(int(opens[0][0]), int(opens[0][1]))
    return len(reachable(grid, start)) == len(opens)


def mirror180_concat(half: GridMask, entities: dict) -> tuple[GridMask, dict]:
    """Build a full level by concatenating a left half with its 180-rotation.

    `half` spans columns 0..mid of the final level (mid = width-1 of the
    half); the full level has odd width 2*half.width - 1. The seam column
    must already be vertically symmetric. Entity lists are mapped through
    the rotation (r, c) -> (H-1-r, W-1-c) with "red"/"blue" swapped in
    their keys, so the output is invariant under rotation-plus-color-swap.
    """
    height = half.height
    full_width = 2 * half.width - 1
    seam = half.width - 1
    seam_col = half.cells[:, seam]
    if not np.array_equal(seam_col, seam_col[::-1]):
        raise ValueError("half's seam column is not vertically symmetric")
    full = GridMask(height, full_width, fill=False)
    full.cells[:, : half.width] = half.cells
    full.cells[:, seam:] = half.cells[::-1, ::-1]

    def rotate(pos):
        return GridPos(height - 1 - pos[0], full_width - 1 - pos[1])

    def swap_color(key: str) -> str:
        if "red" in key:
            return key.replace("red", "blue")
        return key.replace("blue", "red")

    out_entities = {}
    for key, value in entities.items():
        out_entities[key] = value
    for key, value in entities.items():
        if isinstance(value, list):
            out_entities[swap_color(key)] = [rotate(p) for p in value]
        else:
            out_entities[swap_color(key)] = rotate(value)
    return full, out_entities


def rejection_sample(build, seed: int, cap: int = RETRY_CAP):
    """Call `build(attempt_seed)` with derived sub-seeds until it returns
    non-None; raise GenerationError when the retry cap is exhausted."""
    from .seeding import derive_seed

    for attempt in range(cap):
        result = build(derive_seed(seed, "attempt", attempt))
        if result is not None:
            return result
    raise GenerationError(f"no valid level after {cap} attempts (seed={seed})")


# ---------------------------------------------------------------------------
# Level text format
#
# One header block of "key: value" lines (JSON values for structured keys),
# then "grid:" and one row of glyphs per line. Round-trips losslessly; each
# environment documents its glyph set and meta keys.
# ---------------------------------------------------------------------------


def write_level_text(env_id: str, level_id: str, seed: int, params: dict,
                     features: dict, meta: dict, glyph_rows: list[str]) -> str:
    lines = [
        f"gridarena-level v{LEVEL_FORMAT_VERSION}",
        f"env: {env_id}",
        f"id: {level_id}",
        f"seed: {seed}",
        f"params: {json.dumps(params, sort_keys=True)}",
        f"features: {json.dumps(features, sort_keys=True)}",
        f"meta: {json.dumps(meta, sort_keys=True)}",
        "grid:",
    ]
    lines.extend(glyph_rows)
    return "\n".join(lines) + "\n"


def parse_level_text(text: str) -> dict:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("gridarena-level v"):
        raise LevelParseError("missing gridarena-level header", line=1)
    header = {}
    grid_rows = []
    in_grid = False
    for i, line in enumerate(lines[1:], start=2):
        if in_grid:
            if line.strip():
                grid_rows.append(line)
            continue
        if line.strip() == "grid:":
            in_grid = True
            continue
        if ":" not in line:
            raise LevelParseError(f"expected 'key: value', got {line!r}", line=i)
        key, value = line.split(":", 1)
        header[key.strip()] = value.strip()
    for key in ("params", "features", "meta"):
        if key in header:
            try:
                header[key] = json.loads(header[key])
            except json.JSONDecodeError as exc:
                raise LevelParseError(f"bad JSON in {key}: {exc}") from exc
    if "seed" in header:
        header["seed"] = int(header["seed"])
    if not grid_rows:
        raise LevelParseError("level has no grid rows")
    widths = {len(row) for row in grid_rows}
    if len(widths) != 1:
        raise LevelParseError(f"ragged grid rows (widths {sorted(widths)})")
    header["grid_rows"] = grid_rows
    return header
