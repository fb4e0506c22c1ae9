"""Command-line front end.

Exit codes: 0 success, 1 usage / IO / generation error, 2 no path for the
ground robot (``plan``) or no successful row (``bench``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path as FsPath

from .coalition import plan_coalition
from .experiments import (DESK_SUITE, GenerationError, aggregate, desk_suite, generate_instances,
                          generate_urban_map, read_scen, run_batch, write_csv, write_scen)
from .geometry import euclid
from .grid import MapParseError, NoApproachCell, dump_grid, label_obstacles, read_grid

log = logging.getLogger("coalpath")

EXIT_OK, EXIT_USAGE, EXIT_NOPATH = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cell(text):
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}") from None
    return x, y


def _weight(text):
    w = float(text)
    if not w >= 1.0:
        raise argparse.ArgumentTypeError(f"heuristic weight must be >= 1, got {text}")
    return w


def _nonneg(text):
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return n


def _fmt(x):
    return "-" if x is None else f"{x:.6g}"


def demo_files():
    data = resources.files("coalpath") / "data"
    return data / "demo.map", data / "demo.scen"


def cmd_plan(args) -> int:
    grid = read_grid(args.map)
    labels = label_obstacles(grid, args.connectivity)
    plan = plan_coalition(grid, labels, args.start, args.goal, args.n, args.w,
                          iterative=args.iterative)
    before, after = plan.path_a_before, plan.path_a_after
    removed = ";".join(map(str, plan.removed.ids)) or "none"
    dist = euclid(args.start, args.goal)
    norm = None if plan.makespan is None or dist == 0 else 100 * plan.makespan / dist
    print(f"obstacles:        {labels.count}")
    print(f"path A before:    {_fmt(before and before.length)}")
    print(f"path A after:     {_fmt(after and after.length)}")
    print(f"path B:           {_fmt(plan.path_b.length)}")
    print(f"removed:          {removed}")
    if plan.removed.shortfall and args.n:
        print(f"shortfall:        {plan.removed.shortfall}")
    print(f"nodes stage 1/2:  {plan.stage1.nodes_created} / {plan.stage2.nodes_created}")
    print(f"flowtime:         {_fmt(plan.flowtime)}")
    print(f"makespan:         {_fmt(plan.makespan)}")
    print(f"makespan norm %:  {_fmt(norm)}")
    if args.out:
        dump = {
            "start": list(args.start), "goal": list(args.goal), "w": args.w, "n": args.n,
            "removed": list(plan.removed.ids),
            "path_a_before": [list(v) for v in before.vertices] if before else None,
            "path_a_after": [list(v) for v in after.vertices] if after else None,
            "path_b": [list(v) for v in plan.path_b.vertices],
        }
        with open(args.out, "w") as f:
            json.dump(dump, f, indent=1)
    if not plan.feasible:
        print("no path for agent A", file=sys.stderr)
        return EXIT_NOPATH
    return EXIT_OK


def _bench_inputs(args):
    if args.demo:
        map_path, scen_path = demo_files()
        grid = read_grid(map_path)
        insts = read_scen(scen_path.read_text())
        return {i.map_id: grid for i in insts}, insts
    if args.map:
        if len(args.scen or []) != len(args.map):
            raise ValueError("give one --scen per --map")
        maps, insts = {}, []
        for mp, sp in zip(args.map, args.scen):
            grid = read_grid(mp)
            for inst in read_scen(FsPath(sp).read_text()):
                maps[inst.map_id] = grid
                insts.append(inst)
        return maps, insts
    size = args.size
    return desk_suite(n_maps=args.maps, per_map=args.count, size=size, density=args.density,
                      size_range=(args.min_size, args.max_size),
                      courtyard_prob=args.courtyard, detour_threshold=args.detour_threshold,
                      min_dist=args.min_dist, seed=args.seed)


def cmd_bench(args) -> int:
    maps, insts = _bench_inputs(args)
    log.info("%d maps, %d instances", len(maps), len(insts))
    rows = run_batch(maps, insts, args.w, range(args.n + 1), jobs=args.jobs,
                     connectivity=args.connectivity)
    if args.out == "-":
        write_csv(rows, sys.stdout)
        summary = sys.stderr
    else:
        with open(args.out, "w", newline="") as f:
            write_csv(rows, f)
        summary = sys.stdout
    agg = aggregate(rows)
    print(f"{'w':>4} {'n':>2} {'rows':>5} {'pathA':>9} {'pathB':>9} {'nodes_s1':>9} "
          f"{'nodes_s2':>9} {'t_s1_ms':>8} {'t_s2_ms':>8} {'flowtime':>9} {'makespan%':>9}",
          file=summary)
    for (w, n), v in agg.items():
        print(f"{w:>4g} {n:>2} {v['rows']:>5} {v['path_a_after']:>9.2f} {v['path_b']:>9.2f} "
              f"{v['nodes_s1']:>9.1f} {v['nodes_s2']:>9.1f} {v['time_s1_ms']:>8.3f} "
              f"{v['time_s2_ms']:>8.3f} {v['flowtime']:>9.2f} {v['makespan_norm_pct']:>9.2f}",
              file=summary)
    for w in args.w:
        per_n = {n: v["makespan_norm_pct"] for (ww, n), v in agg.items() if ww == w}
        if per_n:
            best = min(per_n, key=lambda n: (per_n[n], n))
            print(f"w={w:g}: best makespan at n={best} ({per_n[best]:.2f}% of straight line)",
                  file=summary)
    ok = sum(r.error is None for r in rows)
    return EXIT_OK if ok else EXIT_NOPATH


def cmd_genmap(args) -> int:
    width = args.width or args.size
    height = args.height or args.size
    grid = generate_urban_map(width, height, args.density, (args.min_size, args.max_size),
                              seed=args.seed, courtyard_prob=args.courtyard)
    text = dump_grid(grid)
    if args.out:
        FsPath(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"density {grid.density:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_geninstances(args) -> int:
    grid = read_grid(args.map)
    min_dist = args.min_dist if args.min_dist is not None else 0.8 * grid.width
    name = FsPath(args.map).name
    insts = generate_instances(grid, args.count, min_dist, args.detour_threshold, args.w,
                               seed=args.seed, map_id=name,
                               labels=label_obstacles(grid, args.connectivity))
    if args.out:
        with open(args.out, "w") as f:
            write_scen(insts, grid, name, f)
    else:
        write_scen(insts, grid, name, sys.stdout)
    print(f"kept {len(insts)} of {args.count} requested instances", file=sys.stderr)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="coalpath", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--connectivity", type=int, choices=(4, 8), default=8,
                        help="obstacle connectivity used for labeling")

    sp = sub.add_parser("plan", help="plan one start/goal pair")
    sp.add_argument("--map", required=True)
    sp.add_argument("--start", type=_cell, required=True, help="x,y")
    sp.add_argument("--goal", type=_cell, required=True, help="x,y")
    sp.add_argument("--w", type=_weight, default=1.0)
    sp.add_argument("--n", type=_nonneg, default=0, help="obstacles the flyer may destroy")
    sp.add_argument("--iterative", action="store_true",
                    help="replan after each removal and pick the next obstacle afresh")
    sp.add_argument("--out", help="write all path vertices as JSON")
    common(sp)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("bench", help="run the experiment grid and write a CSV")
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--map", action="append", help="map file (repeat, paired with --scen)")
    src.add_argument("--demo", action="store_true", help="use the bundled demo map")
    sp.add_argument("--scen", action="append")
    sp.add_argument("--w", type=_weight, nargs="+", default=[1.0, 2.0])
    sp.add_argument("--n", type=_nonneg, default=5, help="largest removal budget; runs 0..N")
    sp.add_argument("--maps", type=int, default=DESK_SUITE["n_maps"])
    sp.add_argument("--count", type=int, default=DESK_SUITE["per_map"])
    sp.add_argument("--size", type=int, default=DESK_SUITE["size"])
    sp.add_argument("--density", type=float, default=DESK_SUITE["density"])
    sp.add_argument("--min-size", type=int, default=DESK_SUITE["size_range"][0])
    sp.add_argument("--max-size", type=int, default=DESK_SUITE["size_range"][1])
    sp.add_argument("--courtyard", type=float, default=DESK_SUITE["courtyard_prob"])
    sp.add_argument("--min-dist", type=float, default=None)
    sp.add_argument("--detour-threshold", type=float, default=DESK_SUITE["detour_threshold"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default="bench.csv", help="CSV path, '-' for stdout")
    common(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("genmap", help="generate a synthetic urban map")
    sp.add_argument("--size", type=int, default=128)
    sp.add_argument("--width", type=int)
    sp.add_argument("--height", type=int)
    sp.add_argument("--density", type=float, default=0.3)
    sp.add_argument("--min-size", type=int, default=3)
    sp.add_argument("--max-size", type=int, default=8)
    sp.add_argument("--courtyard", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_genmap)

    sp = sub.add_parser("geninstances", help="sample filtered start/goal pairs into a .scen file")
    sp.add_argument("--map", required=True)
    sp.add_argument("--count", type=int, default=20)
    sp.add_argument("--min-dist", type=float, default=None,
                    help="default: 0.8 of the map width")
    sp.add_argument("--detour-threshold", type=float, default=0.10)
    sp.add_argument("--w", type=_weight, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_geninstances)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (OSError, MapParseError, NoApproachCell, GenerationError, ValueError) as exc:
        print(f"coalpath: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
