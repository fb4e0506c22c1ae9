import csv
import io
import math

import numpy as np
import pytest

from coalpath.experiments import (CSV_HEADER, GenerationError, InstanceSpec, aggregate,
                                  generate_instances, generate_urban_map, read_scen, run_batch,
                                  write_csv, write_scen)
from coalpath.grid import Cell, Grid, label_obstacles
from coalpath.planner import theta_star


@pytest.fixture(scope="module")
def central_block():
    arr = np.zeros((40, 40), dtype=bool)
    arr[8:32, 15:25] = True
    return Grid(arr)


@pytest.fixture(scope="module")
def small_batch(central_block):
    insts = generate_instances(central_block, 2, 25, 0.10, seed=1, map_id="block")
    rows = run_batch({"block": central_block}, insts, (1.0, 2.0), range(6))
    return insts, rows


class TestUrbanMap:
    def test_tiny_density_is_empty(self):
        assert not generate_urban_map(64, 64, 1e-6, (3, 8), seed=1).blocked.any()

    def test_seeded(self):
        a = generate_urban_map(64, 64, 0.3, (3, 8), seed=5)
        b = generate_urban_map(64, 64, 0.3, (3, 8), seed=5)
        c = generate_urban_map(64, 64, 0.3, (3, 8), seed=6)
        assert a == b and a != c

    def test_density_over_seeds(self):
        d = [generate_urban_map(64, 64, 0.3, (3, 8), seed=s).density for s in range(100)]
        assert 0.2 <= min(d) and max(d) <= 0.4

    @pytest.mark.parametrize("density", [0.0, 1.0, 1.5])
    def test_bad_density(self, density):
        with pytest.raises(GenerationError):
            generate_urban_map(32, 32, density)

    def test_building_too_large(self):
        with pytest.raises(GenerationError):
            generate_urban_map(10, 10, 0.9, (12, 14))

    def test_building_would_overshoot(self):
        # one 12x12 block is further from a 50% target than an empty map
        assert not generate_urban_map(10, 10, 0.5, (12, 14)).blocked.any()

    def test_buildings_are_separate_rectangles(self):
        g = generate_urban_map(80, 60, 0.35, (3, 10), seed=2)
        lab = label_obstacles(g, 8)
        for i in range(1, lab.count + 1):
            ys, xs = np.nonzero(lab.label == i)
            box = g.blocked[ys.min():ys.max() + 1, xs.min():xs.max() + 1]
            assert box.all()
            assert box.size == len(xs)

    def test_courtyards_are_concave(self):
        g = generate_urban_map(96, 96, 0.35, (10, 20), seed=3, courtyard_prob=1.0)
        lab = label_obstacles(g, 8)
        assert lab.count > 0
        for i in range(1, lab.count + 1):
            ys, xs = np.nonzero(lab.label == i)
            box_area = (np.ptp(ys) + 1) * (np.ptp(xs) + 1)
            assert len(xs) < box_area


class TestInstances:
    def test_empty_grid_yields_nothing(self):
        assert generate_instances(Grid.empty(30, 30), 5, 10, seed=0) == []

    def test_infinite_threshold(self, central_block):
        assert generate_instances(central_block, 5, 25, math.inf, seed=0) == []

    def test_retained_instances_detour(self, central_block):
        insts = generate_instances(central_block, 10, 25, 0.10, seed=3, map_id="b")
        assert insts
        lab = label_obstacles(central_block)
        for inst in insts:
            assert inst.distance >= 25
            assert not central_block.is_blocked(inst.start) and not central_block.is_blocked(inst.goal)
            length = theta_star(central_block, lab, inst.start, inst.goal).path.length
            assert length > 1.10 * inst.distance
            assert inst.detour_ratio == pytest.approx(length / inst.distance)

    def test_seeded(self, central_block):
        a = generate_instances(central_block, 6, 25, seed=9)
        assert a == generate_instances(central_block, 6, 25, seed=9)

    def test_min_dist_beyond_diagonal(self):
        with pytest.raises(GenerationError):
            generate_instances(Grid.empty(10, 10), 3, 20)

    def test_no_free_pair(self):
        with pytest.raises(GenerationError):
            generate_instances(Grid(np.ones((4, 4), dtype=bool)), 3, 1)

    def test_budget_caps_draws(self, central_block):
        # impossible to keep anything: the sampler must still stop
        assert generate_instances(central_block, 3, 25, 10.0, seed=0) == []


class TestBatch:
    def test_cardinality_and_order(self, small_batch):
        insts, rows = small_batch
        assert len(insts) == 2
        assert len(rows) == 24
        keys = [(r.instance, r.w, r.n) for r in rows]
        assert keys == [(i, w, n) for i in range(2) for w in (1.0, 2.0) for n in range(6)]

    def test_metric_identities(self, small_batch):
        insts, rows = small_batch
        for r in rows:
            straight = insts[r.instance].distance
            assert r.flowtime == r.path_a_after + r.path_b
            assert r.makespan == max(r.path_a_after, r.path_b)
            assert r.makespan_normalized == pytest.approx(100 * r.makespan / straight)
            assert r.nodes_stage1 > 0 and r.nodes_stage2 > 0
            assert r.error is None

    def test_baseline_rows(self, small_batch):
        insts, rows = small_batch
        for r in rows:
            if r.n == 0:
                assert r.path_a_after == r.path_a_before
                assert r.path_b == pytest.approx(insts[r.instance].distance)
                assert r.removed_ids == ()

    def test_reproducible(self, central_block, small_batch):
        insts, rows = small_batch
        again = run_batch({"block": central_block}, insts, (1.0, 2.0), range(6))
        assert [r.without_timing() for r in rows] == [r.without_timing() for r in again]

    def test_jobs_same_rows(self, central_block, small_batch):
        insts, rows = small_batch
        par = run_batch({"block": central_block}, insts, (1.0, 2.0), range(6), jobs=2)
        assert [r.without_timing() for r in rows] == [r.without_timing() for r in par]

    def test_bad_instance_recorded(self, central_block):
        good = InstanceSpec("block", Cell(2, 20), Cell(37, 20))
        bad = InstanceSpec("block", Cell(20, 20), Cell(37, 20))  # start inside the block
        rows = run_batch({"block": central_block}, [bad, good], (1.0,), range(2))
        assert len(rows) == 4
        assert all(r.error and "blocked" in r.error for r in rows[:2])
        assert all(r.error is None for r in rows[2:])

    def test_mixed_maps_order(self, central_block):
        other = Grid.empty(40, 40)
        insts = [InstanceSpec("b", Cell(2, 20), Cell(37, 20)),
                 InstanceSpec("a", Cell(0, 0), Cell(39, 39)),
                 InstanceSpec("b", Cell(20, 2), Cell(20, 37))]
        rows = run_batch({"a": other, "b": central_block}, insts, (1.0,), (0,))
        assert [(r.map_id, r.instance) for r in rows] == [("b", 0), ("b", 1), ("a", 0)]


def test_csv_layout(small_batch):
    _, rows = small_batch
    buf = io.StringIO()
    write_csv(rows, buf)
    buf.seek(0)
    lines = buf.read().splitlines()
    assert lines[0] == ("map,instance,w,n,path_a_before,path_a_after,path_b,nodes_s1,nodes_s2,"
                        "time_s1_ms,time_s2_ms,flowtime,makespan,makespan_norm_pct,removed_ids")
    parsed = list(csv.DictReader(io.StringIO("\n".join(lines))))
    assert list(parsed[0]) == CSV_HEADER
    for rec, row in zip(rows, parsed):
        assert row["removed_ids"] == ";".join(map(str, rec.removed_ids))
        assert float(row["flowtime"]) == pytest.approx(rec.flowtime, rel=1e-5)
        mantissa = row["path_b"].replace(".", "").lstrip("0")
        assert len(mantissa) <= 6


def test_csv_empty_fields_for_missing_path():
    g = Grid.from_cells(5, 3, [(2, 0), (2, 1), (2, 2)])
    rows = run_batch({"wall": g}, [InstanceSpec("wall", Cell(0, 1), Cell(4, 1))], (1.0,), (0, 1))
    buf = io.StringIO()
    write_csv(rows, buf)
    first, second = buf.getvalue().splitlines()[1:]
    assert first.split(",")[4:6] == ["", ""]
    assert second.split(",")[5] == "4"
    assert second.split(",")[-1] == "1"


def test_scen_roundtrip(central_block):
    insts = generate_instances(central_block, 4, 25, seed=2, map_id="block.map")
    buf = io.StringIO()
    write_scen(insts, central_block, "block.map", buf)
    text = buf.getvalue()
    assert text.startswith("version 1\n")
    fields = text.splitlines()[1].split("\t")
    assert fields[1:4] == ["block.map", "40", "40"]
    back = read_scen(text)
    assert [(b.start, b.goal, b.map_id) for b in back] == [(i.start, i.goal, "block.map") for i in insts]
    assert [b.detour_ratio for b in back] == pytest.approx([i.detour_ratio for i in insts], rel=1e-5)


def test_scen_errors():
    with pytest.raises(ValueError, match="line 1"):
        read_scen("0\tm\t1\t1\t0\t0\t0\t0\t0\n")
    with pytest.raises(ValueError, match="line 2"):
        read_scen("version 1\n0\tm\t1\n")


def test_aggregate(small_batch):
    _, rows = small_batch
    agg = aggregate(rows)
    assert sorted(agg) == [(w, n) for w in (1.0, 2.0) for n in range(6)]
    for (w, n), v in agg.items():
        rs = [r for r in rows if r.w == w and r.n == n]
        assert v["rows"] == len(rs)
        assert v["flowtime"] == pytest.approx(np.mean([r.flowtime for r in rs]))
