"""Manhattan grid road network.

Four horizontal and four vertical single-lane, unidirectional roads with
alternating directions cross at 16 signalized intersections.  Every road is a
one-dimensional cellular automaton made of five 40-cell links; the last cell
of each of the first four links is the crossing cell shared with the
perpendicular road, and the cell just upstream of it is the stop line.

Positions along a road are measured in metres from the road entry
(``cell * CELL_M``).  Planar coordinates put intersection (row, col) at
``(300 * col, 300 * row)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CELL_M = 7.5
LINK_CELLS = 40
GRID_SIDE = 4

HORIZONTAL = "h"
VERTICAL = "v"


@dataclass(frozen=True)
class Road:
    id: int
    axis: str  # HORIZONTAL or VERTICAL
    index: int  # row for horizontal roads, column for vertical ones
    direction: int  # +1 east/north, -1 west/south


@dataclass(frozen=True)
class Link:
    id: int
    road: int
    index: int  # 0 = entry link ... GRID_SIDE = exit link
    first_cell: int
    n_cells: int
    upstream: int | None  # intersection id
    downstream: int | None


@dataclass(frozen=True)
class Intersection:
    id: int
    row: int
    col: int
    south_road: int  # vertical road ("from south" approach, either heading)
    south_k: int  # crossing index along that road
    west_road: int  # horizontal road ("from west" approach)
    west_k: int


@dataclass
class Topology:
    """Static description of the grid.

    Approach-indexed arrays have shape ``(n_roads, n_cross)``: entry ``[r, k]``
    refers to the ``k``-th intersection met while driving along road ``r``.
    """

    side: int = GRID_SIDE
    link_cells: int = LINK_CELLS
    cell_m: float = CELL_M
    roads: list[Road] = field(init=False)
    links: list[Link] = field(init=False)
    intersections: list[Intersection] = field(init=False)

    def __post_init__(self):
        n = self.side
        self.roads = []
        for i in range(n):
            self.roads.append(Road(len(self.roads), HORIZONTAL, i, 1 if i % 2 == 0 else -1))
        for i in range(n):
            self.roads.append(Road(len(self.roads), VERTICAL, i, 1 if i % 2 == 0 else -1))

        self.road_cells = (n + 1) * self.link_cells
        self.road_length_m = self.road_cells * self.cell_m
        self.crossing_cells = np.array([self.link_cells * (k + 1) - 1 for k in range(n)])
        self.stopline_cells = self.crossing_cells - 1
        self.stopline_m = self.stopline_cells * self.cell_m
        self.crossing_m = self.crossing_cells * self.cell_m

        # intersection id = row * side + col
        self.cross_intersection = np.zeros((self.n_roads, n), dtype=np.int64)
        for road in self.roads:
            for k in range(n):
                pos = k if road.direction > 0 else n - 1 - k
                if road.axis == HORIZONTAL:
                    row, col = road.index, pos
                else:
                    row, col = pos, road.index
                self.cross_intersection[road.id, k] = row * n + col

        self.intersections = []
        for iid in range(n * n):
            row, col = divmod(iid, n)
            h_road, h_k = np.argwhere(self.cross_intersection[:n] == iid)[0]
            v_road, v_k = np.argwhere(self.cross_intersection[n:] == iid)[0]
            self.intersections.append(
                Intersection(iid, row, col, int(v_road) + n, int(v_k), int(h_road), int(h_k))
            )

        # partner[r, k] = (road, k) of the perpendicular road at the same crossing
        self.partner_road = np.zeros((self.n_roads, n), dtype=np.int64)
        self.partner_k = np.zeros((self.n_roads, n), dtype=np.int64)
        for it in self.intersections:
            self.partner_road[it.south_road, it.south_k] = it.west_road
            self.partner_k[it.south_road, it.south_k] = it.west_k
            self.partner_road[it.west_road, it.west_k] = it.south_road
            self.partner_k[it.west_road, it.west_k] = it.south_k

        self.links = []
        for road in self.roads:
            for k in range(n + 1):
                up = int(self.cross_intersection[road.id, k - 1]) if k > 0 else None
                down = int(self.cross_intersection[road.id, k]) if k < n else None
                self.links.append(
                    Link(len(self.links), road.id, k, k * self.link_cells, self.link_cells, up, down)
                )

        self._axis_h = np.array([r.axis == HORIZONTAL for r in self.roads])
        self._dir = np.array([r.direction for r in self.roads], dtype=float)
        self._index = np.array([r.index for r in self.roads], dtype=float)
        spacing = self.link_cells * self.cell_m
        # along-road coordinate of the first crossing
        self._first_cross_m = float(self.crossing_m[0])
        self._span = spacing * (n - 1)
        self.spacing_m = spacing

    @property
    def n_roads(self) -> int:
        return len(self.roads)

    @property
    def n_cross(self) -> int:
        return self.side

    def link_of(self, road: int, cell: int) -> Link:
        k = min(cell // self.link_cells, self.side)
        return self.links[road * (self.side + 1) + k]

    def planar(self, lane, x) -> np.ndarray:
        """Map (road, metres along road) to planar coordinates, shape (..., 2)."""
        lane = np.asarray(lane, dtype=np.int64)
        x = np.asarray(x, dtype=float)
        d = self._dir[lane]
        # along-axis coordinate: first crossing sits at 0 for +1 roads, at span for -1 roads
        along = np.where(d > 0, x - self._first_cross_m, self._span + self._first_cross_m - x)
        across = self._index[lane] * self.spacing_m
        horiz = self._axis_h[lane]
        px = np.where(horiz, along, across)
        py = np.where(horiz, across, along)
        return np.stack([px, py], axis=-1)

    def dump(self) -> str:
        """Plain-text adjacency listing of links and intersections."""
        lines = [f"# grid {self.side}x{self.side}, link {self.link_cells} cells x {self.cell_m} m"]
        for road in self.roads:
            heading = {(HORIZONTAL, 1): "E", (HORIZONTAL, -1): "W", (VERTICAL, 1): "N", (VERTICAL, -1): "S"}
            lines.append(f"road {road.id} {road.axis}{road.index} heading {heading[road.axis, road.direction]}")
        for link in self.links:
            up = "entry" if link.upstream is None else f"I{link.upstream}"
            down = "exit" if link.downstream is None else f"I{link.downstream}"
            lines.append(
                f"link {link.id} road {link.road} cells {link.first_cell}-"
                f"{link.first_cell + link.n_cells - 1} {up} -> {down}"
            )
        for it in self.intersections:
            lines.append(
                f"I{it.id} row {it.row} col {it.col} south road {it.south_road}[{it.south_k}]"
                f" west road {it.west_road}[{it.west_k}]"
            )
        return "\n".join(lines) + "\n"


def default_topology() -> Topology:
    return Topology()
