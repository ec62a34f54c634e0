"""Overcooked: generator, interaction table, cooking timing, features."""

import numpy as np
import pytest

from gridarena.envs import make
from gridarena.envs.overcooked import (
    HELD_DISH,
    HELD_NONE,
    HELD_SOUP,
    HELD_TOMATO,
    generate_kitchen_level,
    kitchen_features,
)
from gridarena.procgen import GridMask

from conftest import force_player

NOOP, NORTH, SOUTH, WEST, EAST, INTERACT = range(6)
FACING = {"N": 0, "E": 1, "S": 2, "W": 3}


def kitchen_env(level, p0, p1):
    env = make("overcooked", level)
    env.reset(0)
    force_player(env, 0, p0[0], facing=FACING[p0[1]])
    force_player(env, 1, p1[0], facing=FACING[p1[1]])
    return env


def independent_solvability_oracle(level):
    """Flood-fill floor from each spawn; every object type must border the
    filled region. Independently coded against the reachability module."""
    h, w = level.grid.height, level.grid.width
    for spawn in level.spawn_points:
        seen = np.zeros((h, w), dtype=bool)
        stack = [tuple(spawn)]
        seen[spawn[0], spawn[1]] = True
        while stack:
            r, c = stack.pop()
            for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= nr < h and 0 <= nc < w and level.grid.cells[nr, nc] \
                        and not seen[nr, nc]:
                    seen[nr, nc] = True
                    stack.append((nr, nc))
        for kind in ("pots", "tomato_stations", "dish_stations", "delivery_stations"):
            ok = False
            for cell in getattr(level, kind):
                for nr, nc in ((cell[0] - 1, cell[1]), (cell[0] + 1, cell[1]),
                               (cell[0], cell[1] - 1), (cell[0], cell[1] + 1)):
                    if 0 <= nr < h and 0 <= nc < w and seen[nr, nc]:
                        ok = True
            if not ok:
                return False
    return True


class TestGenerator:
    def test_dims_and_counts(self):
        for seed in range(30):
            level = generate_kitchen_level(seed)
            assert 4 <= level.grid.width <= 9
            assert 4 <= level.grid.height <= 9
            for kind in ("pots", "tomato_stations", "dish_stations",
                         "delivery_stations"):
                assert 1 <= len(getattr(level, kind)) <= 3
            assert len(level.spawn_points) == 2

    def test_solvability_oracle(self):
        for seed in range(80):
            level = generate_kitchen_level(seed)
            assert independent_solvability_oracle(level), f"seed {seed}"

    def test_deterministic(self):
        assert generate_kitchen_level(3).to_text() == generate_kitchen_level(3).to_text()


class TestInteractionTable:
    def test_take_deposit_and_cook_timing(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 1), "N"), ((3, 3), "S"))
        pot = 0
        for _ in range(2):
            env.step([INTERACT, NOOP])     # take tomato at T
            assert env.held[0] == HELD_TOMATO
            env.step([EAST, NOOP])
            env.step([EAST, NOOP])
            env.step([NORTH, NOOP])        # orient into the pot
            r, _ = env.step([INTERACT, NOOP])
            env.step([WEST, NOOP]), env.step([WEST, NOOP]), env.step([NORTH, NOOP])
        # two tomatoes in, not cooking yet
        assert env.pot_count[pot] == 2 and not env.pot_ready[pot]
        env.step([INTERACT, NOOP])
        env.step([EAST, NOOP]), env.step([EAST, NOOP]), env.step([NORTH, NOOP])
        rewards = env.step([INTERACT, NOOP])
        deposit_step = env.step_count - 1
        assert rewards == [1.0, 0.0], "deposit pays the depositing player only"
        assert env.pot_count[pot] == 3
        # ready exactly 20 steps after the third deposit
        for _ in range(19):
            env.step([NOOP, NOOP])
            assert not env.pot_ready[pot]
        env.step([NOOP, NOOP])
        assert env.step_count == deposit_step + 20 + 1
        assert env.pot_ready[pot]

    def test_deposit_rewards_each_deposit(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 3), "N"), ((3, 3), "S"))
        env.held[0] = HELD_TOMATO
        r, _ = env.step([INTERACT, NOOP])
        assert r == 1.0
        assert env.held[0] == HELD_NONE

    def test_full_pot_refuses_fourth_tomato(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 3), "N"), ((3, 3), "S"))
        env.pot_count[0] = 3
        env.pot_timer[0] = 5
        env.held[0] = HELD_TOMATO
        rewards = env.step([INTERACT, NOOP])
        assert rewards == [0.0, 0.0]
        assert env.held[0] == HELD_TOMATO
        assert env.pot_count[0] == 3

    def test_collect_soup_requires_ready_and_dish(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 3), "N"), ((3, 3), "S"))
        env.pot_count[0] = 3
        env.pot_timer[0] = 10
        env.held[0] = HELD_DISH
        env.step([INTERACT, NOOP])
        assert env.held[0] == HELD_DISH, "mid-cook pot cannot be emptied"
        env.pot_timer[0] = 20
        env.pot_ready[0] = True
        env.step([INTERACT, NOOP])
        assert env.held[0] == HELD_SOUP
        assert env.pot_count[0] == 0 and not env.pot_ready[0]

    def test_delivery_rewards_both(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((3, 2), "S"), ((1, 1), "N"))
        env.held[0] = HELD_SOUP
        rewards = env.step([INTERACT, NOOP])
        assert rewards == [20.0, 20.0]
        assert env.held[0] == HELD_NONE

    def test_counter_place_and_pickup(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 1), "W"), ((3, 3), "S"))
        env.held[0] = HELD_TOMATO
        env.step([INTERACT, NOOP])  # place tomato on counter (1,0)
        assert env.held[0] == HELD_NONE
        assert env.counter_item[(1, 0)] == HELD_TOMATO
        env.step([INTERACT, NOOP])  # pick it back up
        assert env.held[0] == HELD_TOMATO
        assert (1, 0) not in env.counter_item

    def test_soup_can_rest_on_counter(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 1), "W"), ((3, 3), "S"))
        env.held[0] = HELD_SOUP
        env.step([INTERACT, NOOP])
        assert env.counter_item[(1, 0)] == HELD_SOUP

    def test_occupied_counter_blocks_place(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 1), "W"), ((3, 3), "S"))
        env.counter_item[(1, 0)] = HELD_DISH
        env.held[0] = HELD_TOMATO
        env.step([INTERACT, NOOP])
        assert env.held[0] == HELD_TOMATO
        assert env.counter_item[(1, 0)] == HELD_DISH

    def test_station_needs_empty_hands(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 1), "N"), ((3, 3), "S"))
        env.held[0] = HELD_DISH
        env.step([INTERACT, NOOP])
        assert env.held[0] == HELD_DISH, "tomato station refuses a full hand"

    def test_movement_orients_even_when_blocked(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 1), "S"), ((3, 3), "S"))
        env.step([NORTH, NOOP])  # (0,1) is the tomato station: blocked
        assert env.pos[0] == (1, 1)
        assert env.facing[0] == FACING["N"]

    def test_players_never_overlap(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 1), "S"), ((1, 3), "S"))
        env.step([EAST, WEST])  # both want (1,2): lower index wins
        assert env.pos[0] == (1, 2)
        assert env.pos[1] == (1, 3)
        env.step([EAST, NOOP])  # moving onto the stationary player: blocked
        assert env.pos[0] == (1, 2)

    def test_tomato_conservation_under_random_play(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 1), "S"), ((3, 3), "S"))
        rng = np.random.default_rng(4)
        taken = delivered = 0
        for _ in range(400):
            held_before = list(env.held)
            pots_before = list(env.pot_count)
            ready_before = list(env.pot_ready)
            rewards = env.step([int(a) for a in rng.integers(0, 6, size=2)])
            for i in range(2):
                if held_before[i] == HELD_NONE and env.held[i] == HELD_TOMATO \
                        and env.pot_count == pots_before:
                    taken += 1
            delivered += sum(1 for r in rewards if r >= 20) // 2
            for k in range(len(env.pot_count)):
                assert 0 <= env.pot_count[k] <= 3
                if env.pot_ready[k] and not ready_before[k]:
                    assert env.pot_timer[k] >= 20

    def test_malformed_action(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 1), "S"), ((3, 3), "S"))
        with pytest.raises(ValueError):
            env.step([6, 0])


class TestObservation:
    def test_dims(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((2, 2), "N"), ((1, 1), "N"))
        obs = env.observe(0)
        assert obs.pixels.shape == (56, 56, 3)
        assert obs.pixels.dtype == np.uint8

    def test_loading_bar_varies_with_timer(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 3), "N"), ((3, 3), "S"))
        env.pot_count[0] = 3
        env.pot_timer[0] = 4
        early = env.observe(0).pixels.copy()
        env.pot_timer[0] = 16
        late = env.observe(0).pixels.copy()
        assert not np.array_equal(early, late)

    def test_padding_outside_kitchen(self, kitchen_5x5):
        env = kitchen_env(kitchen_5x5, ((1, 1), "N"), ((3, 3), "S"))
        obs = env.observe(0)
        assert tuple(obs.pixels[4, 4]) == (40, 40, 40)  # window corner: padding


class TestFeatures:
    def test_hand_bfs_fixture(self, kitchen_5x5):
        feats = kitchen_features(kitchen_5x5)
        # tomato->pot 2 moves, dish->pot 3, pot->delivery 3: 3*2+3+3
        assert feats["est_path_length"] == 12
        assert feats["openness"] == pytest.approx(9 / 25)

    def test_open_room_openness(self):
        grid = GridMask(6, 6, fill=False)
        grid.cells[1:5, 1:5] = True
        from gridarena.core import GridPos
        from gridarena.envs.overcooked import KitchenLevel

        level = KitchenLevel(
            grid=grid,
            pots=(GridPos(0, 2),),
            tomato_stations=(GridPos(2, 0),),
            dish_stations=(GridPos(5, 2),),
            delivery_stations=(GridPos(2, 5),),
            spawn_points=(GridPos(1, 1), GridPos(4, 4)),
        )
        feats = kitchen_features(level)
        assert feats["openness"] == pytest.approx(16 / 36)

    def test_same_level_same_metrics(self, kitchen_5x5):
        assert kitchen_features(kitchen_5x5) == kitchen_features(kitchen_5x5)
