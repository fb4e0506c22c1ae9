"""Two-agent pipeline: a ground robot and a flyer that can destroy obstacles.

The ground robot is planned with hit-counting Theta*.  The most-hit
obstacles are chosen for removal, the flyer's straight path is bent so it
passes next to each of them, and the ground robot is replanned on the
cleared grid.  The flyer overflies everything, so its distances are plain
Euclidean.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .geometry import Segment, euclid, point_segment_distance
from .grid import (Cell, Grid, ObstacleLabels, boundary_cells, drop_obstacles,
                   remove_obstacles, row_major)
from .planner import Path, PlanResult, theta_star

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RemovalSelection:
    ids: tuple = ()
    requested: int = 0

    @property
    def shortfall(self) -> int:
        """How many of the requested removals had no candidate."""
        return self.requested - len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def __len__(self):
        return len(self.ids)


@dataclass(frozen=True)
class CoalitionPlan:
    start: Cell
    goal: Cell
    path_b: Path
    removed: RemovalSelection
    approach_cells: tuple
    stage1: PlanResult
    stage2: PlanResult
    grid_after: Grid = field(repr=False)

    @property
    def path_a_before(self) -> Path | None:
        return self.stage1.path

    @property
    def path_a_after(self) -> Path | None:
        return self.stage2.path

    @property
    def feasible(self) -> bool:
        return self.stage2.found

    @property
    def flowtime(self) -> float | None:
        if not self.feasible:
            return None
        return self.path_a_after.length + self.path_b.length

    @property
    def makespan(self) -> float | None:
        if not self.feasible:
            return None
        return max(self.path_a_after.length, self.path_b.length)


def select_obstacles(hits: Mapping[int, int], n: int) -> RemovalSelection:
    """Up to ``n`` obstacle ids with the most hits, most-hit first.

    Equal counts go to the smaller id.  Obstacles that were never hit are
    never chosen, so fewer than ``n`` ids may come back.
    """
    if n < 0:
        raise ValueError("removal budget must be >= 0")
    ranked = sorted((i for i, c in hits.items() if c > 0), key=lambda i: (-hits[i], i))
    return RemovalSelection(tuple(ranked[:n]), n)


def exact_detour_cell(grid: Grid, labels: ObstacleLabels, obstacle_id: int, start, goal) -> Cell:
    """Free cell next to the obstacle minimizing |start-c| + |c-goal|."""
    best = None
    best_cost = float("inf")
    # boundary_cells is row-major, so strict < keeps the first of equal costs
    for c in boundary_cells(grid, labels, obstacle_id):
        cost = euclid(start, c) + euclid(c, goal)
        if cost < best_cost:
            best, best_cost = c, cost
    return best


def project_detour_cells(grid: Grid, labels: ObstacleLabels, ids: Sequence[int],
                         start, goal) -> list[Cell]:
    """One approach cell per obstacle, the one closest to the start-goal segment.

    The cells are returned sorted by distance from ``start``.  Cheap, but
    the resulting flyer path is not the shortest possible.
    """
    seg = Segment(tuple(start), tuple(goal))
    picked = []
    for i in ids:
        best = None
        best_d = float("inf")
        for c in boundary_cells(grid, labels, i):
            d = point_segment_distance(c, seg)
            if d < best_d:
                best, best_d = c, d
        picked.append(best)
    picked.sort(key=lambda c: (euclid(start, c), row_major(c)))
    return picked


def build_flyer_path(start, waypoints: Sequence, goal) -> Path:
    verts = [tuple(start), *map(tuple, waypoints), tuple(goal)]
    collapsed = [verts[0]]
    for v in verts[1:]:
        if v != collapsed[-1]:
            collapsed.append(v)
    return Path.of(collapsed)


def detour_cells(grid: Grid, labels: ObstacleLabels, ids: Sequence[int], start, goal) -> list[Cell]:
    """Exact method for a single obstacle, projection method for several."""
    if not ids:
        return []
    if len(ids) == 1:
        return [exact_detour_cell(grid, labels, ids[0], start, goal)]
    return project_detour_cells(grid, labels, ids, start, goal)


def _select_iteratively(grid, labels, start, goal, n, w, stage1):
    # greedy: remove the current top obstacle, replan, repeat
    chosen = []
    hits = stage1.hits
    current, cur_labels = grid, labels
    while len(chosen) < n:
        top = select_obstacles(hits, 1).ids
        if not top:
            break
        # ids on a relabeled grid map back through any of the obstacle's cells
        cell = cur_labels.cells(top[0])[0]
        chosen.append(labels[cell])
        current = remove_obstacles(grid, labels, chosen)
        cur_labels = drop_obstacles(labels, chosen)
        hits = theta_star(current, cur_labels, start, goal, w).hits
    return RemovalSelection(tuple(chosen), n)


def plan_coalition(grid: Grid, labels: ObstacleLabels, start, goal, n: int, w: float = 1.0,
                   stage1: PlanResult | None = None, iterative: bool = False) -> CoalitionPlan:
    """Plan both agents with a budget of ``n`` destroyed obstacles.

    ``stage1`` may be passed in to reuse an earlier ground-robot search on
    the same grid, start, goal and weight.  With ``iterative`` the ground
    robot is replanned after each single removal and the next obstacle is
    picked from the new histogram; the default is one-shot selection.
    """
    start = Cell(*map(int, start))
    goal = Cell(*map(int, goal))
    if stage1 is None:
        stage1 = theta_star(grid, labels, start, goal, w)
    if not stage1.found:
        log.info("no stage-1 path from %s to %s; selecting from histogram anyway", start, goal)

    if iterative and n > 0:
        removed = _select_iteratively(grid, labels, start, goal, n, w, stage1)
    else:
        removed = select_obstacles(stage1.hits, n)
    if removed.shortfall and n > 0:
        log.debug("only %d of %d removals had hits", len(removed), n)

    waypoints = detour_cells(grid, labels, removed.ids, start, goal)
    path_b = build_flyer_path(start, waypoints, goal)

    if removed.ids:
        after = remove_obstacles(grid, labels, removed.ids)
        stage2 = theta_star(after, drop_obstacles(labels, removed.ids), start, goal, w)
    else:
        after, stage2 = grid, stage1
    if stage1.found and stage2.found and stage2.path.length > stage1.path.length + 1e-9:
        # Theta* is not optimal, so clearing obstacles can occasionally lengthen the path
        log.warning("path A grew after removing %s: %.6g -> %.6g (start %s, goal %s, w=%g)",
                    list(removed.ids), stage1.path.length, stage2.path.length, start, goal, w)
    return CoalitionPlan(start, goal, path_b, removed, tuple(waypoints), stage1, stage2, after)
