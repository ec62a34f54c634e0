"""Pixel rendering for egocentric observation windows.

Levels render as a grid of square sprites (8x8 for HarvestPatch /
Overcooked / Capture the Flag, 3x3 for Traffic Navigation). Sprites are
flat-colored blocks from a fixed palette with small overlay patches for
items and progress bars; the exact pixel values are artifact-defined and
frozen by golden-image tests.
"""

from __future__ import annotations

import numpy as np

# facing: 0=N, 1=E, 2=S, 3=W
FORWARD = ((-1, 0), (0, 1), (1, 0), (0, -1))
RIGHT = ((0, 1), (1, 0), (0, -1), (-1, 0))

_coords_cache: dict = {}


def oriented_window_coords(row: int, col: int, facing: int, front: int, back: int, side: int):
    """(rows, cols) int arrays of the world cells covered by an egocentric
    window that extends `front` cells ahead, `back` behind, `side` each way.

    Window row 0 is the farthest-forward rank; the player sits at window
    cell (front, side). Window columns run left-to-right from the player's
    point of view.
    """
    key = (facing, front, back, side)
    grids = _coords_cache.get(key)
    if grids is None:
        h = front + back + 1
        w = 2 * side + 1
        fr, fc = FORWARD[facing]
        rr, rc = RIGHT[facing]
        wr = np.arange(h)[:, None]
        wc = np.arange(w)[None, :]
        steps_fwd = front - wr
        lateral = wc - side
        grids = (steps_fwd * fr + lateral * rr, steps_fwd * fc + lateral * rc)
        _coords_cache[key] = grids
    drow, dcol = grids
    return drow + row, dcol + col


def centered_window_coords(row: int, col: int, radius: int):
    """(rows, cols) for a north-up window centered on the player."""
    return oriented_window_coords(row, col, 0, radius, radius, radius)


def window_cell_of(world_row: int, world_col: int, row: int, col: int,
                   facing: int, front: int, back: int, side: int):
    """Window cell showing the given world cell, or None if outside."""
    dr, dc = world_row - row, world_col - col
    fr, fc = FORWARD[facing]
    rr, rc = RIGHT[facing]
    steps_fwd = dr * fr + dc * fc
    lateral = dr * rr + dc * rc
    wr = front - steps_fwd
    wc = side + lateral
    if 0 <= wr <= front + back and 0 <= wc <= 2 * side:
        return wr, wc
    return None


def gather_window_types(type_grid: np.ndarray, rows: np.ndarray, cols: np.ndarray,
                        pad_type: int) -> np.ndarray:
    """Look up cell types for window coords, padding out-of-bounds cells."""
    h, w = type_grid.shape
    valid = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    out = np.full(rows.shape, pad_type, dtype=type_grid.dtype)
    out[valid] = type_grid[rows[valid], cols[valid]]
    return out


def render_cells(cell_types: np.ndarray, palette: np.ndarray, sprite: int) -> np.ndarray:
    """Expand a (h, w) cell-type grid into (h*sprite, w*sprite, 3) uint8 pixels."""
    base = palette[cell_types]
    return base.repeat(sprite, axis=0).repeat(sprite, axis=1)


def draw_center_patch(pixels: np.ndarray, wr: int, wc: int, sprite: int, color) -> None:
    """Overlay a small centered square on one sprite cell (item markers)."""
    q = max(1, sprite // 4)
    r0 = wr * sprite + (sprite - 2 * q) // 2
    c0 = wc * sprite + (sprite - 2 * q) // 2
    pixels[r0:r0 + 2 * q, c0:c0 + 2 * q] = color


def draw_bottom_bar(pixels: np.ndarray, wr: int, wc: int, sprite: int,
                    fraction: float, color) -> None:
    """Overlay a progress bar along the bottom row of one sprite cell."""
    filled = int(round(fraction * sprite))
    if filled <= 0:
        return
    r = (wr + 1) * sprite - 1
    c0 = wc * sprite
    pixels[r, c0:c0 + filled] = color
