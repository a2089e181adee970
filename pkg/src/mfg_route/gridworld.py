"""Grid-world traffic scenario with obstacles, one origin and one destination.

Cells are numbered ``row * width + col``. Each cell links to itself and to
its in-grid north, east, south and west neighbours. Staying costs 0, moving
to a free cell costs 1, moving onto an obstacle costs 1e5. The terminal
cost is ``10 * sqrt(manhattan(i, D))`` and the reference policy is uniform
over each cell's links.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ObstacleEndpoint, ShapeMismatch
from .game import GameSpec, TrafficGraph
from .propagation import trajectory
from .solver import backward_phi, optimal_policy

STAY_COST = 0.0
MOVE_COST = 1.0
OBSTACLE_COST = 100000.0
TERMINAL_SCALE = 10.0

# Default 10x10 layout: two staggered walls between the origin (top-left)
# and the destination (bottom-right).
#
#   row 0  O . . . . . . . . .
#   row 1  . . . . . . . . . .
#   row 2  . . . . . . . . . .
#   row 3  # # # # # # . . . .
#   row 4  . . . . . . . . . .
#   row 5  . . . . . . . . . .
#   row 6  . . . . # # # # # #
#   row 7  . . . . . . . . . .
#   row 8  . . . . . . . . . .
#   row 9  . . . . . . . . . D
DEFAULT_OBSTACLES = frozenset(
    [30, 31, 32, 33, 34, 35] + [64, 65, 66, 67, 68, 69])
DEFAULT_ORIGIN = 0
DEFAULT_DESTINATION = 99


@dataclass(frozen=True)
class GridScenario:
    width: int = 10
    height: int = 10
    obstacles: frozenset = field(default=DEFAULT_OBSTACLES)
    origin: int = DEFAULT_ORIGIN
    destination: int = DEFAULT_DESTINATION
    horizon: int = 70
    alpha: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ShapeMismatch("grid dimensions must be positive")
        object.__setattr__(self, "obstacles", frozenset(int(c) for c in self.obstacles))
        n = self.width * self.height
        for c in list(self.obstacles) + [self.origin, self.destination]:
            if not 0 <= c < n:
                raise ShapeMismatch(f"cell {c} outside the {self.width}x{self.height} grid")
        if self.origin in self.obstacles or self.destination in self.obstacles:
            raise ObstacleEndpoint("origin and destination must be free cells")

    @property
    def num_cells(self):
        return self.width * self.height

    def cell(self, row, col):
        return row * self.width + col

    def manhattan(self, a, b):
        ra, ca = divmod(a, self.width)
        rb, cb = divmod(b, self.width)
        return abs(ra - rb) + abs(ca - cb)

    def obstacle_mask(self):
        mask = np.zeros(self.num_cells, dtype=bool)
        mask[list(self.obstacles)] = True
        return mask


def grid_neighbors(sc):
    """Successor lists: self plus in-grid N/E/S/W cells."""
    out = []
    for c in range(sc.num_cells):
        r, k = divmod(c, sc.width)
        nbrs = [c]
        if r > 0:
            nbrs.append(c - sc.width)
        if k < sc.width - 1:
            nbrs.append(c + 1)
        if r < sc.height - 1:
            nbrs.append(c + sc.width)
        if k > 0:
            nbrs.append(c - 1)
        out.append(tuple(nbrs))
    return out


def build_grid_game(sc):
    """Expand a :class:`GridScenario` into a :class:`GameSpec`."""
    graph = TrafficGraph(sc.num_cells, tuple(grid_neighbors(sc)))
    blocked = sc.obstacle_mask()
    cost = np.where(graph.src == graph.dst, STAY_COST,
                    np.where(blocked[graph.dst], OBSTACLE_COST, MOVE_COST))
    dist = np.array([sc.manhattan(i, sc.destination) for i in range(sc.num_cells)])
    terminal = TERMINAL_SCALE * np.sqrt(dist)
    ref = 1.0 / graph.degree[graph.src]
    P0 = np.zeros(sc.num_cells)
    P0[sc.origin] = 1.0
    return GameSpec(graph, sc.horizon, cost, terminal, ref, P0, sc.alpha)


def grid_from_dict(doc):
    """Build a scenario from the ``"grid"`` block of a game document."""
    if not isinstance(doc, Mapping):
        raise ShapeMismatch("grid block must be an object")
    kwargs = {k: doc[k] for k in ("width", "height", "origin", "destination", "horizon", "alpha")
              if k in doc}
    if "obstacles" in doc:
        kwargs["obstacles"] = frozenset(doc["obstacles"])
    return GridScenario(**kwargs)


def grid_to_dict(sc):
    return {"grid": {"width": sc.width, "height": sc.height,
                     "obstacles": sorted(sc.obstacles), "origin": sc.origin,
                     "destination": sc.destination, "horizon": sc.horizon,
                     "alpha": sc.alpha}}


def shannon_entropy(P):
    P = np.asarray(P, dtype=float)
    P = P[P > 0]
    return float(-np.dot(P, np.log(P)))


def run_figure_experiment(sc, snapshot_times=(20, 35, 50), alphas=(0.1, 1.0)):
    """Equilibrium population snapshots.

    Returns
    -------
    dict mapping ``(alpha, t)`` to the distribution over cells at time ``t``.
    """
    for t in snapshot_times:
        if not 0 <= t <= sc.horizon:
            raise ShapeMismatch(f"snapshot time {t} outside [0, {sc.horizon}]")
    base = build_grid_game(sc)
    out = {}
    for a in alphas:
        spec = base.with_alpha(a)
        P = trajectory(spec, optimal_policy(spec, backward_phi(spec)))
        for t in snapshot_times:
            out[(float(a), int(t))] = P[t].copy()
    return out
