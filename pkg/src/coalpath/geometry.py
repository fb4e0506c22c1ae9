"""Line of sight over a grid and small planar helpers.

Segments join cell centers.  A segment is blocked when it crosses the
interior of a blocked cell.  Where it passes exactly through a cell corner
it only grazes the two cells on either side; that is allowed unless both of
them are blocked (no squeezing through a diagonal gap).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numba
import numpy as np


class Segment(NamedTuple):
    a: tuple
    b: tuple


@numba.njit(cache=True, nogil=True)
def los_kernel(blocked, x0, y0, x1, y1):
    """Supercover walk from the center of (x0, y0) to the center of (x1, y1).

    Pure integer arithmetic: the k-th vertical grid line is crossed at
    t = (2k+1) / (2|dx|) and the m-th horizontal one at (2m+1) / (2|dy|),
    so the two crossings are ordered by comparing (2k+1)|dy| with (2m+1)|dx|.
    Endpoints are not checked.
    """
    adx = abs(x1 - x0)
    ady = abs(y1 - y0)
    sx = 1 if x1 > x0 else -1
    sy = 1 if y1 > y0 else -1
    x = x0
    y = y0
    kx = 0
    ky = 0
    steps = adx + ady
    while kx + ky < steps:
        tx = (2 * kx + 1) * ady
        ty = (2 * ky + 1) * adx
        if tx < ty:
            x += sx
            kx += 1
        elif tx > ty:
            y += sy
            ky += 1
        else:
            # exact corner: the two grazed cells may not both be blocked
            if blocked[y, x + sx] and blocked[y + sy, x]:
                return False
            x += sx
            y += sy
            kx += 1
            ky += 1
        if (x != x1 or y != y1) and blocked[y, x]:
            return False
    return True


def _check_endpoint(grid, cell):
    if not grid.in_bounds(cell):
        raise ValueError(f"cell {tuple(cell)} is outside the {grid.width}x{grid.height} grid")
    if grid.is_blocked(cell):
        raise ValueError(f"cell {tuple(cell)} is blocked")


def line_of_sight(grid, a, b) -> bool:
    """True if the segment between the centers of ``a`` and ``b`` is clear."""
    _check_endpoint(grid, a)
    _check_endpoint(grid, b)
    return bool(los_kernel(grid.blocked, int(a[0]), int(a[1]), int(b[0]), int(b[1])))


def supercover(a, b) -> list[tuple[int, int]]:
    """Cells whose interior the center-to-center segment crosses, in order.

    Corner-grazed cells are not included.
    """
    x0, y0 = a
    x1, y1 = b
    adx, ady = abs(x1 - x0), abs(y1 - y0)
    sx = 1 if x1 > x0 else -1
    sy = 1 if y1 > y0 else -1
    x, y, kx, ky = x0, y0, 0, 0
    cells = [(x, y)]
    while kx + ky < adx + ady:
        tx, ty = (2 * kx + 1) * ady, (2 * ky + 1) * adx
        if tx <= ty:
            x += sx
            kx += 1
        if tx >= ty:
            y += sy
            ky += 1
        cells.append((x, y))
    return cells


def euclid(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def point_segment_distance(p, seg: Segment) -> float:
    """Distance from ``p`` to the closest point of the closed segment."""
    (ax, ay), (bx, by) = seg
    px, py = p
    vx, vy = bx - ax, by - ay
    denom = vx * vx + vy * vy
    if denom == 0:
        return euclid(p, (ax, ay))
    t = ((px - ax) * vx + (py - ay) * vy) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * vx), py - (ay + t * vy))
