"""Instance generation, batch runs and result files for the coalition planner."""

from __future__ import annotations

import csv
import logging
import math
import statistics
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Iterable, Mapping, Sequence

import numpy as np

from .coalition import plan_coalition
from .geometry import euclid
from .grid import Cell, Grid, label_obstacles
from .planner import theta_star

log = logging.getLogger(__name__)

CSV_HEADER = ("map,instance,w,n,path_a_before,path_a_after,path_b,nodes_s1,nodes_s2,"
              "time_s1_ms,time_s2_ms,flowtime,makespan,makespan_norm_pct,removed_ids").split(",")

DRAWS_PER_INSTANCE = 100


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class InstanceSpec:
    map_id: str
    start: Cell
    goal: Cell
    detour_ratio: float = float("nan")

    @property
    def distance(self) -> float:
        return euclid(self.start, self.goal)


@dataclass
class MetricsRecord:
    map_id: str
    instance: int
    w: float
    n: int
    path_a_before: float | None
    path_a_after: float | None
    path_b: float
    nodes_stage1: int
    nodes_stage2: int
    time_stage1: float
    time_stage2: float
    flowtime: float | None
    makespan: float | None
    makespan_normalized: float | None
    removed_ids: tuple = ()
    error: str | None = None

    def without_timing(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self)
                     if f.name not in ("time_stage1", "time_stage2"))


def _footprint(rng, bw, bh, courtyard_prob, wall):
    piece = np.ones((bh, bw), dtype=bool)
    if courtyard_prob > 0 and min(bw, bh) >= 2 * wall + 2 and rng.random() < courtyard_prob:
        # perimeter block: hollow courtyard opening onto one street
        piece[wall:bh - wall, wall:bw - wall] = False
        side = int(rng.integers(4))
        if side == 0:
            piece[wall:bh - wall, :wall] = False
        elif side == 1:
            piece[wall:bh - wall, bw - wall:] = False
        elif side == 2:
            piece[:wall, wall:bw - wall] = False
        else:
            piece[bh - wall:, wall:bw - wall] = False
    return piece


def generate_urban_map(width: int, height: int, density: float, size_range=(3, 8),
                       seed: int = 0, courtyard_prob: float = 0.0, wall: int = 2,
                       max_failures: int = 2000) -> Grid:
    """Random axis-aligned buildings with streets at least one cell wide.

    Buildings never touch, not even diagonally, so each one is a separate
    obstacle.  By default every building is a solid rectangle; with
    ``courtyard_prob`` > 0 that share of large enough buildings becomes a
    perimeter block (walls ``wall`` cells thick) around a courtyard open on
    one side.  Placement stops once the blocked fraction is as close to
    ``density`` as another building could bring it, or after
    ``max_failures`` consecutive rejected placements.  Check
    ``Grid.density`` for the value actually reached.
    """
    if width <= 0 or height <= 0:
        raise ValueError("map dimensions must be positive")
    if not 0.0 < density < 1.0:
        raise GenerationError(f"density must lie in (0, 1), got {density}")
    lo, hi = size_range
    if lo <= 0 or hi < lo:
        raise ValueError(f"bad building size range {size_range}")
    if not 0.0 <= courtyard_prob <= 1.0 or wall < 1:
        raise ValueError("courtyard_prob must lie in [0, 1] and wall must be >= 1")

    rng = np.random.default_rng(seed)
    blocked = np.zeros((height, width), dtype=bool)
    target = density * width * height
    filled = 0
    failures = 0
    smallest = lo * lo
    if abs(smallest - target) >= target:
        return Grid(blocked)
    if lo > width or lo > height:
        raise GenerationError(f"no {lo}x{lo} building fits in a {width}x{height} map")

    while failures < max_failures:
        if abs(filled + smallest - target) >= abs(filled - target):
            break
        bw = int(rng.integers(lo, hi + 1))
        bh = int(rng.integers(lo, hi + 1))
        if bw > width or bh > height:
            failures += 1
            continue
        x = int(rng.integers(0, width - bw + 1))
        y = int(rng.integers(0, height - bh + 1))
        # keep a one-cell street all around
        if blocked[max(y - 1, 0):y + bh + 1, max(x - 1, 0):x + bw + 1].any():
            failures += 1
            continue
        piece = _footprint(rng, bw, bh, courtyard_prob, wall)
        area = int(piece.sum())
        if abs(filled + area - target) >= abs(filled - target):
            failures += 1
            continue
        blocked[y:y + bh, x:x + bw] = piece
        filled += area
        failures = 0
    if filled == 0:
        raise GenerationError("could not place any building")
    return Grid(blocked)


def generate_instances(grid: Grid, count: int, min_dist: float, detour_threshold: float = 0.10,
                       w: float = 1.0, seed: int = 0, map_id: str = "",
                       labels=None) -> list[InstanceSpec]:
    """Sample start/goal pairs whose Theta* path is noticeably longer than the straight line.

    Pairs closer than ``min_dist`` are redrawn; of the rest only those with
    Theta* length > (1 + detour_threshold) * straight-line distance are
    kept.  At most ``count * 100`` pairs are drawn, so fewer than ``count``
    instances may come back.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if detour_threshold < 0:
        raise ValueError("detour_threshold must be >= 0")
    free = grid.free_cells()
    if len(free) < 2:
        raise GenerationError("map has fewer than two free cells")
    if min_dist >= math.hypot(grid.width - 1, grid.height - 1):
        raise GenerationError(f"min_dist {min_dist} exceeds the map diagonal")
    if labels is None:
        labels = label_obstacles(grid)

    rng = np.random.default_rng(seed)
    kept = []
    seen = set()
    for _ in range(count * DRAWS_PER_INSTANCE):
        if len(kept) >= count:
            break
        i, j = rng.integers(0, len(free), size=2)
        s, g = free[int(i)], free[int(j)]
        d = euclid(s, g)
        if d < min_dist or (s, g) in seen:
            continue
        seen.add((s, g))
        res = theta_star(grid, labels, s, g, w)
        if not res.found:
            continue
        ratio = res.path.length / d
        if ratio > 1.0 + detour_threshold:
            kept.append(InstanceSpec(map_id, s, g, ratio))
    if len(kept) < count:
        log.info("kept %d of %d requested instances on map %r", len(kept), count, map_id)
    return kept


def _instance_rows(map_id, grid, index, inst, w_values, n_values, connectivity=8):
    labels = label_obstacles(grid, connectivity)
    straight = inst.distance
    rows = []
    for w in w_values:
        try:
            stage1 = theta_star(grid, labels, inst.start, inst.goal, w)
        except ValueError as exc:
            rows.extend(_error_row(map_id, index, w, n, str(exc)) for n in n_values)
            continue
        for n in n_values:
            try:
                plan = plan_coalition(grid, labels, inst.start, inst.goal, n, w, stage1=stage1)
            except ValueError as exc:
                rows.append(_error_row(map_id, index, w, n, str(exc)))
                continue
            before = plan.path_a_before.length if plan.path_a_before else None
            after = plan.path_a_after.length if plan.path_a_after else None
            makespan = plan.makespan
            rows.append(MetricsRecord(
                map_id=map_id, instance=index, w=w, n=n,
                path_a_before=before, path_a_after=after, path_b=plan.path_b.length,
                nodes_stage1=stage1.nodes_created, nodes_stage2=plan.stage2.nodes_created,
                time_stage1=stage1.elapsed, time_stage2=plan.stage2.elapsed,
                flowtime=plan.flowtime, makespan=makespan,
                makespan_normalized=(100.0 * makespan / straight
                                     if makespan is not None and straight > 0 else None),
                removed_ids=plan.removed.ids,
                error=None if plan.feasible else "no path for agent A",
            ))
    return rows


def _error_row(map_id, index, w, n, msg):
    return MetricsRecord(map_id, index, w, n, None, None, float("nan"), 0, 0, 0.0, 0.0,
                         None, None, None, (), msg)


def _run_task(args):
    return _instance_rows(*args)


def run_batch(maps: Mapping[str, Grid], instances: Sequence[InstanceSpec],
              w_values: Iterable[float] = (1.0, 2.0), n_values: Iterable[int] = range(6),
              jobs: int = 1, connectivity: int = 8) -> list[MetricsRecord]:
    """One MetricsRecord per (instance, w, n), ordered by map, instance, w, n.

    Instance numbers count per map in the order given.  Stage 1 is planned
    once per (instance, w) and shared by all removal budgets.
    """
    w_values = list(w_values)
    n_values = list(n_values)
    counters = defaultdict(int)
    tasks = []
    for inst in instances:
        index = counters[inst.map_id]
        counters[inst.map_id] += 1
        tasks.append((inst.map_id, maps[inst.map_id], index, inst, w_values, n_values, connectivity))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_task, tasks))
    else:
        chunks = [_run_task(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    order = {m: i for i, m in enumerate(dict.fromkeys(inst.map_id for inst in instances))}
    rows.sort(key=lambda r: (order[r.map_id], r.instance, w_values.index(r.w), n_values.index(r.n)))
    return rows


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def write_csv(records: Iterable[MetricsRecord], out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([
            r.map_id, r.instance, _fmt(float(r.w)), r.n,
            _fmt(r.path_a_before), _fmt(r.path_a_after), _fmt(r.path_b),
            r.nodes_stage1, r.nodes_stage2,
            _fmt(r.time_stage1 * 1e3), _fmt(r.time_stage2 * 1e3),
            _fmt(r.flowtime), _fmt(r.makespan), _fmt(r.makespan_normalized),
            ";".join(str(i) for i in r.removed_ids),
        ])


def aggregate(records: Iterable[MetricsRecord]) -> dict:
    """Mean indicators per (w, n) over rows where agent A found a path in both stages."""
    groups = defaultdict(list)
    for r in records:
        if r.path_a_before is not None and r.path_a_after is not None:
            groups[(r.w, r.n)].append(r)
    out = {}
    for key in sorted(groups):
        rs = groups[key]
        out[key] = {
            "rows": len(rs),
            "path_a_before": statistics.fmean(r.path_a_before for r in rs),
            "path_a_after": statistics.fmean(r.path_a_after for r in rs),
            "path_b": statistics.fmean(r.path_b for r in rs),
            "nodes_s1": statistics.fmean(r.nodes_stage1 for r in rs),
            "nodes_s2": statistics.fmean(r.nodes_stage2 for r in rs),
            "time_s1_ms": statistics.fmean(r.time_stage1 for r in rs) * 1e3,
            "time_s2_ms": statistics.fmean(r.time_stage2 for r in rs) * 1e3,
            "flowtime": statistics.fmean(r.flowtime for r in rs),
            "makespan": statistics.fmean(r.makespan for r in rs),
            "makespan_norm_pct": statistics.fmean(r.makespan_normalized for r in rs),
        }
    return out


def write_scen(instances: Iterable[InstanceSpec], grid: Grid, map_name: str, out) -> None:
    """Benchmark ``.scen`` layout; the last column carries the detour ratio."""
    out.write("version 1\n")
    for inst in instances:
        out.write(f"0\t{map_name}\t{grid.width}\t{grid.height}\t"
                  f"{inst.start.x}\t{inst.start.y}\t{inst.goal.x}\t{inst.goal.y}\t"
                  f"{inst.detour_ratio:.6g}\n")


def read_scen(text: str) -> list[InstanceSpec]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("version"):
        raise ValueError("line 1: expected 'version' header")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 9:
            raise ValueError(f"line {lineno}: expected 9 fields, got {len(parts)}")
        try:
            sx, sy, gx, gy = (int(p) for p in parts[4:8])
            extra = float(parts[8])
        except ValueError:
            raise ValueError(f"line {lineno}: bad numeric field") from None
        out.append(InstanceSpec(parts[1], Cell(sx, sy), Cell(gx, gy), extra))
    return out


DESK_SUITE = dict(n_maps=20, per_map=20, size=128, density=0.35, size_range=(8, 32),
                  courtyard_prob=0.5, detour_threshold=0.10, seed=0)


def desk_suite(n_maps=20, per_map=20, size=128, density=0.35, size_range=(8, 32),
               courtyard_prob=0.5, detour_threshold=0.10, min_dist=None, seed=0):
    """Seeded synthetic urban maps plus filtered instances on each.

    Stands in for the real-city benchmark at desk scale; ``min_dist``
    defaults to 0.8 of the map size.  Returns ``(maps, instances)``.
    """
    if min_dist is None:
        min_dist = 0.8 * size
    maps = {}
    instances = []
    for m in range(n_maps):
        map_id = f"urban-{m:03d}"
        grid = generate_urban_map(size, size, density, size_range, seed=seed + m,
                                  courtyard_prob=courtyard_prob)
        maps[map_id] = grid
        instances += generate_instances(grid, per_map, min_dist, detour_threshold,
                                        seed=seed + m, map_id=map_id)
    return maps, instances
