"""Theta* that also counts how often the search bumps into each obstacle.

Every time an expanded cell tries to generate a blocked neighbor, the
obstacle owning that neighbor gets one more hit.  The resulting histogram
is returned whether or not a path was found and drives the choice of which
obstacles are worth destroying.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np

from .geometry import euclid, los_kernel
from .grid import Cell, Grid, ObstacleLabels

# 8-neighborhood, orthogonal moves first
_DX = np.array([1, 0, -1, 0, 1, -1, -1, 1], dtype=np.int64)
_DY = np.array([0, 1, 0, -1, 1, 1, -1, -1], dtype=np.int64)


@dataclass(frozen=True)
class Path:
    vertices: tuple
    length: float

    @classmethod
    def of(cls, vertices) -> "Path":
        vs = tuple(Cell(int(x), int(y)) for x, y in vertices)
        return cls(vs, path_length(vs))

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]

    def __len__(self):
        return len(self.vertices)


def path_length(vertices) -> float:
    """Sum of the Euclidean lengths of consecutive segments."""
    return math.fsum(euclid(a, b) for a, b in zip(vertices, vertices[1:]))


@dataclass(frozen=True)
class PlanResult:
    found: bool
    path: Path | None
    hits: dict = field(repr=False)
    nodes_created: int
    nodes_expanded: int
    elapsed: float

    def same_outcome(self, other: "PlanResult") -> bool:
        """Equality ignoring the timing field."""
        return (self.found == other.found and self.path == other.path
                and self.hits == other.hits
                and self.nodes_created == other.nodes_created
                and self.nodes_expanded == other.nodes_expanded)


@numba.njit(cache=True, nogil=True)
def update_vertex(blocked, parent, g, s, s2):
    """Relax ``s2`` from ``s``, or from ``parent[s]`` when it sees ``s2``.

    Cells are flat row-major indices.  Returns True if ``g[s2]`` improved,
    in which case ``g`` and ``parent`` have been updated in place.
    """
    width = blocked.shape[1]
    p = parent[s]
    px = p % width
    py = p // width
    x2 = s2 % width
    y2 = s2 // width
    base = s
    if los_kernel(blocked, px, py, x2, y2):
        base = p
    bx = base % width
    by = base // width
    cand = g[base] + math.sqrt((bx - x2) ** 2 + (by - y2) ** 2)
    if cand < g[s2]:
        g[s2] = cand
        parent[s2] = base
        return True
    return False


@numba.njit(cache=True, nogil=True)
def _search(blocked, label, n_obstacles, start, goal, weight, dxs, dys):
    height, width = blocked.shape
    size = height * width
    g = np.full(size, np.inf)
    parent = np.full(size, -1, dtype=np.int64)
    closed = np.zeros(size, dtype=np.bool_)
    opened = np.zeros(size, dtype=np.bool_)
    hits = np.zeros(n_obstacles + 1, dtype=np.int64)
    gx = goal % width
    gy = goal // width

    g[start] = 0.0
    parent[start] = start
    sx0 = start % width
    sy0 = start // width
    h0 = math.sqrt((sx0 - gx) ** 2 + (sy0 - gy) ** 2)
    # key: (f, -g, row-major index) gives min f, then max g, then row-major
    heap = [(weight * h0, -0.0, start)]
    opened[start] = True
    created = 1
    expanded = 0
    found = False

    while len(heap) > 0:
        item = heapq.heappop(heap)
        s = item[2]
        if closed[s] or -item[1] != g[s]:
            continue  # stale entry
        closed[s] = True
        expanded += 1
        if s == goal:
            found = True
            break
        x = s % width
        y = s // width
        for k in range(8):
            nx = x + dxs[k]
            ny = y + dys[k]
            if nx < 0 or ny < 0 or nx >= width or ny >= height:
                continue
            if blocked[ny, nx]:
                hits[label[ny, nx]] += 1
                continue
            if k >= 4 and blocked[y, nx] and blocked[ny, x]:
                continue  # no squeezing between diagonal blocks
            s2 = ny * width + nx
            if closed[s2]:
                continue
            if update_vertex(blocked, parent, g, s, s2):
                h = math.sqrt((nx - gx) ** 2 + (ny - gy) ** 2)
                heapq.heappush(heap, (g[s2] + weight * h, -g[s2], s2))
                if not opened[s2]:
                    opened[s2] = True
                    created += 1
    return found, parent, hits, created, expanded


_warm = False


def _warmup():
    # compile (or load from cache) outside of any timed region
    global _warm
    if not _warm:
        b = np.zeros((1, 2), dtype=np.bool_)
        lab = np.zeros((1, 2), dtype=np.int32)
        b.setflags(write=False)
        lab.setflags(write=False)
        _search(b, lab, 0, 0, 1, 1.0, _DX, _DY)
        _warm = True


def _check_cell(grid: Grid, cell, what: str) -> Cell:
    try:
        x, y = int(cell[0]), int(cell[1])
    except (TypeError, ValueError, IndexError):
        raise ValueError(f"{what} must be an (x, y) pair, got {cell!r}") from None
    if not grid.in_bounds((x, y)):
        raise ValueError(f"{what} {(x, y)} is outside the {grid.width}x{grid.height} grid")
    if grid.blocked[y, x]:
        raise ValueError(f"{what} {(x, y)} is blocked")
    return Cell(x, y)


def theta_star(grid: Grid, labels: ObstacleLabels, start, goal, w: float = 1.0) -> PlanResult:
    """Any-angle search from ``start`` to ``goal`` with heuristic weight ``w``.

    Returns a PlanResult holding the path (if any), the per-obstacle hit
    histogram ``{id: count}`` for ids 1..K, the number of cells ever put on
    OPEN (``nodes_created``) and the number expanded.
    """
    start = _check_cell(grid, start, "start")
    goal = _check_cell(grid, goal, "goal")
    if not w >= 1.0 or math.isinf(w):
        raise ValueError(f"heuristic weight must be a finite value >= 1, got {w}")
    if labels.label.shape != grid.blocked.shape:
        raise ValueError("labels do not match grid shape")
    _warmup()

    width = grid.width
    blocked = grid.blocked
    t0 = time.perf_counter()
    found, parent, hits, created, expanded = _search(
        blocked, labels.label, labels.count,
        start.y * width + start.x, goal.y * width + goal.x, float(w), _DX, _DY)
    elapsed = time.perf_counter() - t0

    path = None
    if found:
        s = goal.y * width + goal.x
        chain = [s]
        while parent[s] != s:
            s = parent[s]
            chain.append(s)
        path = Path.of((i % width, i // width) for i in reversed(chain))
    hist = {i: int(c) for i, c in enumerate(hits.tolist()) if i > 0}
    return PlanResult(bool(found), path, hist, int(created), int(expanded), elapsed)
