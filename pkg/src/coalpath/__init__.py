"""Any-angle planning for a ground robot helped by an obstacle-destroying flyer."""

from .coalition import (CoalitionPlan, RemovalSelection, build_flyer_path, exact_detour_cell,
                        plan_coalition, project_detour_cells, select_obstacles)
from .geometry import Segment, euclid, line_of_sight, point_segment_distance
from .grid import (Cell, Grid, MapParseError, NoApproachCell, ObstacleLabels, boundary_cells,
                   label_obstacles, load_grid, read_grid, remove_obstacle, remove_obstacles)
from .planner import Path, PlanResult, path_length, theta_star

__version__ = "0.1.0"
