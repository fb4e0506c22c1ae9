"""Occupancy grids, obstacle labeling and obstacle removal.

Cells are addressed as ``(x, y)`` with ``x`` the column and ``y`` the row,
origin in the upper-left corner as in the common benchmark map files.  The
occupancy array itself is stored row-major, i.e. ``blocked[y, x]``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

PASSABLE_GLYPHS = frozenset(".G")
BLOCKED_GLYPHS = frozenset("@OT")

NEIGHBORS_4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
NEIGHBORS_8 = NEIGHBORS_4 + ((1, 1), (1, -1), (-1, 1), (-1, -1))


class Cell(NamedTuple):
    x: int
    y: int


def row_major(cell) -> tuple[int, int]:
    """Sort key putting cells in row-major (y first, then x) order."""
    return cell[1], cell[0]


class MapParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoApproachCell(ValueError):
    """Raised when an obstacle has no free cell next to it."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable occupancy map. ``blocked`` has shape ``(height, width)``."""

    blocked: np.ndarray

    def __post_init__(self):
        arr = np.array(self.blocked, dtype=bool, copy=True)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError(f"grid must be a non-empty 2D array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "blocked", arr)

    @classmethod
    def empty(cls, width: int, height: int) -> "Grid":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_cells(cls, width: int, height: int, cells: Iterable) -> "Grid":
        arr = np.zeros((height, width), dtype=bool)
        for x, y in cells:
            arr[y, x] = True
        return cls(arr)

    @property
    def width(self) -> int:
        return self.blocked.shape[1]

    @property
    def height(self) -> int:
        return self.blocked.shape[0]

    @property
    def density(self) -> float:
        return float(self.blocked.mean())

    def in_bounds(self, cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_blocked(self, cell) -> bool:
        x, y = cell
        return bool(self.blocked[y, x])

    def free_cells(self) -> list[Cell]:
        ys, xs = np.nonzero(~self.blocked)
        return [Cell(int(x), int(y)) for x, y in zip(xs, ys)]

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return np.array_equal(self.blocked, other.blocked)

    def __hash__(self):
        return hash((self.blocked.shape, self.blocked.tobytes()))


@dataclass(frozen=True, eq=False)
class ObstacleLabels:
    """Per-cell obstacle ids: 0 on free cells, 1..count on blocked ones."""

    label: np.ndarray
    count: int
    connectivity: int = 8

    def __post_init__(self):
        self.label.setflags(write=False)

    def __getitem__(self, cell) -> int:
        x, y = cell
        return int(self.label[y, x])

    def check_id(self, obstacle_id: int) -> None:
        if not isinstance(obstacle_id, (int, np.integer)) or not 1 <= obstacle_id <= self.count:
            raise ValueError(f"obstacle id {obstacle_id!r} out of range 1..{self.count}")

    def cells(self, obstacle_id: int) -> list[Cell]:
        self.check_id(obstacle_id)
        ys, xs = np.nonzero(self.label == obstacle_id)
        return [Cell(int(x), int(y)) for x, y in zip(xs, ys)]

    def sizes(self) -> np.ndarray:
        """Cell count per obstacle; index 0 holds the free-cell count."""
        return np.bincount(self.label.ravel(), minlength=self.count + 1)


def _parse_octile(lines: list[str]) -> Grid:
    header = {}
    expected = ("type", "height", "width", "map")
    for lineno, key in enumerate(expected, start=1):
        if lineno > len(lines):
            raise MapParseError(f"missing '{key}' header", lineno)
        parts = lines[lineno - 1].split()
        if not parts or parts[0] != key:
            raise MapParseError(f"expected '{key}' header, got {lines[lineno - 1]!r}", lineno)
        if key in ("height", "width"):
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) == 0:
                raise MapParseError(f"bad {key} value {lines[lineno - 1]!r}", lineno)
            header[key] = int(parts[1])
    rows = lines[4:]
    return _parse_rows(rows, header["width"], header["height"], first_line=5,
                       passable=PASSABLE_GLYPHS, blocked=BLOCKED_GLYPHS)


def _parse_ascii(lines: list[str]) -> Grid:
    if not lines:
        raise MapParseError("empty map", 1)
    parts = lines[0].split()
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise MapParseError(f"expected 'width height' header, got {lines[0]!r}", 1)
    width, height = int(parts[0]), int(parts[1])
    if width == 0 or height == 0:
        raise MapParseError("dimensions must be positive", 1)
    return _parse_rows(lines[1:], width, height, first_line=2,
                       passable=frozenset("."), blocked=frozenset("#"))


def _parse_rows(rows, width, height, first_line, passable, blocked) -> Grid:
    # trailing blank lines are tolerated, anything else past `height` is not
    while rows and not rows[-1].strip():
        rows = rows[:-1]
    if len(rows) != height:
        raise MapParseError(
            f"declared height {height} but found {len(rows)} rows",
            first_line + min(len(rows), height))
    arr = np.zeros((height, width), dtype=bool)
    for y, row in enumerate(rows):
        lineno = first_line + y
        if len(row) != width:
            raise MapParseError(f"row has {len(row)} cells, expected {width}", lineno)
        for x, ch in enumerate(row):
            if ch in blocked:
                arr[y, x] = True
            elif ch not in passable:
                raise MapParseError(f"unknown glyph {ch!r} at column {x}", lineno)
    return Grid(arr)


def detect_format(text: str) -> str:
    first = text.lstrip().split("\n", 1)[0].strip()
    return "octile" if first.startswith("type") else "ascii"


def load_grid(text: str, fmt: str = "auto") -> Grid:
    """Parse a map from text.

    ``fmt`` is ``"octile"`` (the ``type octile`` benchmark format),
    ``"ascii"`` (``width height`` header followed by ``.``/``#`` rows) or
    ``"auto"`` to sniff the header.
    """
    if fmt == "auto":
        fmt = detect_format(text)
    lines = [line.rstrip("\r") for line in text.split("\n")]
    if fmt == "octile":
        return _parse_octile(lines)
    if fmt == "ascii":
        return _parse_ascii(lines)
    raise ValueError(f"unknown map format {fmt!r}")


def read_grid(path, fmt: str = "auto") -> Grid:
    with open(path) as f:
        return load_grid(f.read(), fmt)


def dump_grid(grid: Grid, fmt: str = "octile") -> str:
    if fmt == "octile":
        head = f"type octile\nheight {grid.height}\nwidth {grid.width}\nmap\n"
        on, off = "@", "."
    elif fmt == "ascii":
        head = f"{grid.width} {grid.height}\n"
        on, off = "#", "."
    else:
        raise ValueError(f"unknown map format {fmt!r}")
    rows = ("".join(on if b else off for b in row) for row in grid.blocked)
    return head + "\n".join(rows) + "\n"


def label_obstacles(grid: Grid, connectivity: int = 8) -> ObstacleLabels:
    """Give every connected group of blocked cells its own id.

    Cells are scanned row by row; each unlabeled blocked cell starts a
    breadth-first fill over adjacent blocked cells, so ids follow the
    row-major order in which components are first met.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    offsets = NEIGHBORS_8 if connectivity == 8 else NEIGHBORS_4
    w, h = grid.width, grid.height
    blocked = grid.blocked.ravel().tolist()
    label = [0] * (w * h)
    count = 0
    for start in range(w * h):
        if not blocked[start] or label[start]:
            continue
        count += 1
        label[start] = count
        queue = deque([start])
        while queue:
            idx = queue.popleft()
            y, x = divmod(idx, w)
            for dx, dy in offsets:
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h:
                    j = ny * w + nx
                    if blocked[j] and not label[j]:
                        label[j] = count
                        queue.append(j)
    arr = np.array(label, dtype=np.int32).reshape(h, w)
    return ObstacleLabels(arr, count, connectivity)


def remove_obstacles(grid: Grid, labels: ObstacleLabels, ids: Iterable[int]) -> Grid:
    ids = list(ids)
    for i in ids:
        labels.check_id(i)
    if labels.label.shape != grid.blocked.shape:
        raise ValueError("labels do not match grid shape")
    arr = grid.blocked.copy()
    if ids:
        arr[np.isin(labels.label, ids)] = False
    return Grid(arr)


def remove_obstacle(grid: Grid, labels: ObstacleLabels, obstacle_id: int) -> Grid:
    """Return a copy of ``grid`` with every cell of one obstacle unblocked."""
    return remove_obstacles(grid, labels, [obstacle_id])


def drop_obstacles(labels: ObstacleLabels, ids: Iterable[int]) -> ObstacleLabels:
    """Labels of the grid left after removing ``ids``, renumbered densely.

    Removing whole components never merges or splits the others, so this
    equals relabeling the cleared grid from scratch, only cheaper.
    """
    ids = set(ids)
    for i in ids:
        labels.check_id(i)
    remap = np.zeros(labels.count + 1, dtype=np.int32)
    keep = [i for i in range(1, labels.count + 1) if i not in ids]
    remap[keep] = np.arange(1, len(keep) + 1, dtype=np.int32)
    return ObstacleLabels(remap[labels.label], len(keep), labels.connectivity)


def _dilate8(mask: np.ndarray) -> np.ndarray:
    padded = np.pad(mask, 1)
    h, w = mask.shape
    out = np.zeros_like(mask)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            out |= padded[dy:dy + h, dx:dx + w]
    return out


def boundary_cells(grid: Grid, labels: ObstacleLabels, obstacle_id: int) -> list[Cell]:
    """Free cells 8-adjacent to the obstacle, in row-major order.

    These are the cells a flyer can stand on to reach the obstacle.  Raises
    NoApproachCell if there are none.
    """
    labels.check_id(obstacle_id)
    ring = _dilate8(labels.label == obstacle_id) & ~grid.blocked
    ys, xs = np.nonzero(ring)
    if len(xs) == 0:
        raise NoApproachCell(f"obstacle {obstacle_id} has no free adjacent cell")
    return [Cell(int(x), int(y)) for x, y in zip(xs, ys)]
