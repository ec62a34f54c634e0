"""Shared fixtures: hand-authored levels and state-poking helpers.

The fixture levels are small, fully specified layouts used for golden
reward traces; helper functions overwrite player state after reset so
traces do not depend on spawn sampling.
"""

import pytest

from gridarena.core import GridPos
from gridarena.envs.ctf import CtfLevel
from gridarena.envs.harvest import HarvestLevel
from gridarena.envs.overcooked import KitchenLevel
from gridarena.envs.traffic import TrafficLevel
from gridarena.procgen import GridMask


@pytest.fixture
def kitchen_5x5():
    """5x5 kitchen: tomato station top, pot top-right, dish station left,
    delivery bottom, 3x3 open floor."""
    rows = [
        "#T#P#",
        "#...#",
        "D...#",
        "#...#",
        "##X##",
    ]
    cells = [[ch == "." for ch in row] for row in rows]
    return KitchenLevel(
        grid=GridMask(5, 5, cells=cells),
        pots=(GridPos(0, 3),),
        tomato_stations=(GridPos(0, 1),),
        dish_stations=(GridPos(2, 0),),
        delivery_stations=(GridPos(4, 2),),
        spawn_points=(GridPos(1, 1), GridPos(3, 1)),
        seed=0,
        level_id="overcooked-fixture-5x5",
    )


@pytest.fixture
def harvest_fixture():
    """One radius-3 patch centered at (17, 17), density 1 (29 apples)."""
    center = GridPos(17, 17)
    apples = []
    for r in range(14, 21):
        for c in range(14, 21):
            if (r - 17) ** 2 + (c - 17) ** 2 <= 9:
                apples.append(GridPos(r, c))
    spawns = tuple(GridPos(1, 2 * k + 1) for k in range(10))
    return HarvestLevel(
        grid=GridMask(35, 35, fill=True),
        apple_cells=tuple(apples),
        patch_of=tuple(0 for _ in apples),
        patch_centers=(center,),
        radius=3,
        density=1.0,
        spawn_points=spawns,
        seed=0,
        level_id="harvest_patch-fixture-1patch",
    )


@pytest.fixture
def ctf_arena():
    """15x9 open arena with a wall ring; flags on the mid row, six cells
    from either side wall; spawns flank the flags."""
    grid = GridMask(9, 15, fill=True)
    grid.cells[0, :] = False
    grid.cells[-1, :] = False
    grid.cells[:, 0] = False
    grid.cells[:, -1] = False
    return CtfLevel(
        grid=grid,
        red_flag=GridPos(4, 2),
        blue_flag=GridPos(4, 12),
        red_spawns=(GridPos(3, 1), GridPos(4, 1), GridPos(5, 1)),
        blue_spawns=(GridPos(5, 13), GridPos(4, 13), GridPos(3, 13)),
        seed=0,
        level_id="capture_the_flag-fixture-arena",
    )


@pytest.fixture
def traffic_10x10():
    """Minimal legal traffic level: 10x10 ring with 8 gap pairs."""
    grid = GridMask(10, 10, fill=True)
    grid.cells[0, :] = False
    grid.cells[-1, :] = False
    grid.cells[:, 0] = False
    grid.cells[:, -1] = False
    pairs = (
        (GridPos(0, 1), GridPos(0, 2)),
        (GridPos(0, 4), GridPos(0, 5)),
        (GridPos(0, 7), GridPos(0, 8)),
        (GridPos(9, 1), GridPos(9, 2)),
        (GridPos(9, 4), GridPos(9, 5)),
        (GridPos(9, 7), GridPos(9, 8)),
        (GridPos(3, 0), GridPos(4, 0)),
        (GridPos(3, 9), GridPos(4, 9)),
    )
    for a, b in pairs:
        grid.cells[a] = True
        grid.cells[b] = True
    return TrafficLevel(grid=grid, gap_pairs=pairs, seed=0,
                        level_id="traffic_navigation-fixture-10x10")


def force_player(env, player: int, pos, facing=None):
    """Pin one player's position (and facing) after reset; keeps the
    occupancy map consistent. Test-only state surgery."""
    pos = tuple(pos)
    if hasattr(env, "_occupied"):
        occupant = env._occupied.get(pos)
        if occupant is not None and occupant != player:
            raise AssertionError(f"cell {pos} already occupied by player {occupant}")
        env._occupied.pop(tuple(env.pos[player]), None)
        env._occupied[pos] = player
    env.pos[player] = pos
    if facing is not None and hasattr(env, "facing"):
        env.facing[player] = facing


def force_goal(env, player: int, goal):
    env.goal[player] = tuple(goal)
