import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coalpath.geometry import Segment, euclid, line_of_sight, point_segment_distance, supercover
from coalpath.grid import Grid

from oracles import random_grid, sat_los


def test_empty_grid_always_visible():
    g = Grid.empty(7, 5)
    cells = [(x, y) for x in range(7) for y in range(5)]
    rng = np.random.default_rng(0)
    for i, j in rng.integers(0, len(cells), size=(50, 2)):
        assert line_of_sight(g, cells[i], cells[j])


def test_blocked_center_on_row():
    g = Grid.from_cells(5, 5, [(2, 2)])
    assert sat_los(g.blocked, 0, 2, 4, 2) is False
    assert not line_of_sight(g, (0, 2), (4, 2))


def test_clear_row():
    g = Grid.from_cells(5, 5, [(2, 2)])
    assert line_of_sight(g, (0, 0), (4, 0))


def test_corner_graze_one_blocked_is_visible():
    # segment (0,0)->(2,2) passes exactly through the corner shared with (1,0) and (0,1)
    g = Grid.from_cells(3, 3, [(1, 0)])
    assert line_of_sight(g, (0, 0), (1, 1))
    assert line_of_sight(g, (0, 0), (2, 2))


def test_diagonal_squeeze_blocked():
    g = Grid.from_cells(3, 3, [(1, 0), (0, 1)])
    assert not line_of_sight(g, (0, 0), (1, 1))


def test_blocked_endpoint_rejected():
    g = Grid.from_cells(3, 3, [(1, 1)])
    with pytest.raises(ValueError):
        line_of_sight(g, (1, 1), (0, 0))
    with pytest.raises(ValueError):
        line_of_sight(g, (0, 0), (3, 0))


def test_supercover_cells():
    assert supercover((0, 0), (3, 0)) == [(0, 0), (1, 0), (2, 0), (3, 0)]
    assert supercover((0, 0), (2, 2)) == [(0, 0), (1, 1), (2, 2)]
    assert supercover((0, 0), (2, 1)) == [(0, 0), (1, 0), (1, 1), (2, 1)]


@pytest.mark.parametrize("a,b,d", [((0, 0), (0, 0), 0.0), ((0, 0), (3, 4), 5.0),
                                   ((1, 2), (2, 3), math.sqrt(2))])
def test_euclid(a, b, d):
    assert euclid(a, b) == pytest.approx(d)


@pytest.mark.parametrize("p,d", [((2, 0), 0.0), ((2, 3), 3.0), ((6, 0), 2.0), ((-1, -1), math.sqrt(2))])
def test_point_segment_distance(p, d):
    assert point_segment_distance(p, Segment((0, 0), (4, 0))) == pytest.approx(d)


def test_point_segment_distance_degenerate():
    assert point_segment_distance((3, 4), Segment((0, 0), (0, 0))) == pytest.approx(5.0)


def _random_pairs(seed, n_grids=150, size=14, density=0.3, pairs=40):
    rng = np.random.default_rng(seed)
    for _ in range(n_grids):
        b = random_grid(rng, size, size, density)
        free = np.argwhere(~b)
        if len(free) < 2:
            continue
        for i, j in rng.integers(0, len(free), size=(pairs, 2)):
            (y0, x0), (y1, x1) = free[i], free[j]
            yield Grid(b), (int(x0), int(y0)), (int(x1), int(y1))


def test_agrees_with_separating_axis_oracle():
    for g, a, b in _random_pairs(1):
        assert line_of_sight(g, a, b) == sat_los(g.blocked, a[0], a[1], b[0], b[1]), (a, b)


def test_symmetry_and_reflexivity():
    for g, a, b in _random_pairs(2, n_grids=60):
        assert line_of_sight(g, a, b) == line_of_sight(g, b, a)
        assert line_of_sight(g, a, a)


def test_monte_carlo_interior_points():
    rng = np.random.default_rng(5)
    for g, a, b in _random_pairs(3, n_grids=60):
        if not line_of_sight(g, a, b):
            continue
        for t in rng.random(30):
            x = a[0] + 0.5 + t * (b[0] - a[0])
            y = a[1] + 0.5 + t * (b[1] - a[1])
            if x == int(x) or y == int(y):
                continue  # on a cell edge
            assert not g.blocked[int(y), int(x)]


coords = st.tuples(st.floats(-50, 50), st.floats(-50, 50))


@settings(max_examples=200)
@given(coords, coords, coords)
def test_segment_distance_bounded_by_endpoints(p, a, b):
    d = point_segment_distance(p, Segment(a, b))
    assert d <= euclid(p, a) + 1e-9
    assert d <= euclid(p, b) + 1e-9
    assert d >= 0
