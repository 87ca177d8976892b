"""Self-organizing two-phase signal control driven by trusted reports.

Each intersection serves either its vertical approach (``GREEN_SOUTH``) or its
horizontal approach (``GREEN_WEST``); on roads heading south or west the
approach actually comes from the north or east, but the phase names follow
the two-action description of the controller.

The priority rule is a stand-in for the pressure-based controller the
evaluation was run with, whose internals are not published: pressure is a
count of trusted vehicles near the stop line with stopped vehicles weighted
higher, and the green moves to the opposing approach once its pressure
exceeds the current one by a hysteresis margin.  A maximum red time keeps
every approach served within the maximum period.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .topology import Topology

SOUTH = 0
WEST = 1


class Phase(enum.Enum):
    GREEN_SOUTH = "GREEN_SOUTH"
    GREEN_WEST = "GREEN_WEST"
    INTERGREEN = "INTERGREEN"


_SERVES = {Phase.GREEN_SOUTH: SOUTH, Phase.GREEN_WEST: WEST}
_GREEN_FOR = {SOUTH: Phase.GREEN_SOUTH, WEST: Phase.GREEN_WEST}


@dataclass(frozen=True)
class SignalParams:
    min_green_s: int = 10
    intergreen_s: int = 5
    max_red_s: int = 115
    pressure_horizon_m: float = 150.0
    stopped_weight: float = 2.0
    hysteresis: float = 1.0
    stopped_speed: float = 0.5  # m/s below which a reported vehicle counts as stopped

    @classmethod
    def keys(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass
class SignalState:
    intersection: int
    phase: Phase = Phase.GREEN_WEST
    phase_age: int = 0
    # seconds since each approach last showed green, indexed SOUTH / WEST
    time_since_service: list[int] = field(default_factory=lambda: [0, 0])
    target: Phase | None = None

    def green(self, approach: int) -> bool:
        return _SERVES.get(self.phase) == approach

    def colours(self) -> tuple[str, str]:
        return tuple("green" if self.green(a) else "red" for a in (SOUTH, WEST))


def decide_phase(state: SignalState, pressures, params: SignalParams = SignalParams()) -> SignalState:
    """Choose the phase shown during the coming tick.

    ``pressures`` is indexed by approach (SOUTH, WEST).  The returned state
    already reflects the tick being displayed: ages and red timers are
    advanced past it.
    """
    st = replace(state, time_since_service=list(state.time_since_service))
    if st.phase is Phase.INTERGREEN:
        if st.phase_age >= params.intergreen_s:
            st.phase, st.target, st.phase_age = st.target, None, 0
    else:
        cur = _SERVES[st.phase]
        opp = 1 - cur
        forced = st.time_since_service[opp] + params.intergreen_s >= params.max_red_s
        wants = (
            st.phase_age >= params.min_green_s
            and pressures[opp] > pressures[cur] + params.hysteresis
        )
        if forced or wants:
            st.phase, st.target, st.phase_age = Phase.INTERGREEN, _GREEN_FOR[opp], 0

    for a in (SOUTH, WEST):
        st.time_since_service[a] = 0 if st.green(a) else st.time_since_service[a] + 1
    st.phase_age += 1
    return st


def approach_pressures(batch, topology: Topology, params: SignalParams = SignalParams()) -> np.ndarray:
    """Pressure on every approach, shape ``(n_roads, n_cross)``.

    ``batch`` must already be trust-filtered.  A vehicle counts for stop line
    ``h`` when ``h - horizon <= x < h + cell/2``.
    """
    out = np.zeros((topology.n_roads, topology.n_cross))
    if len(batch) == 0:
        return out
    h = topology.stopline_m
    d = h[None, :] - batch.x[:, None]
    inside = (d <= params.pressure_horizon_m) & (d > -topology.cell_m / 2)
    w = np.where(batch.v < params.stopped_speed, params.stopped_weight, 1.0)
    rows, ks = np.nonzero(inside)
    np.add.at(out, (batch.lane[rows], ks), w[rows])
    return out


def compute_pressure(batch, road: int, k: int, topology: Topology, params: SignalParams = SignalParams()) -> float:
    """Pressure of a single approach (road ``road``, its ``k``-th stop line)."""
    return float(approach_pressures(batch, topology, params)[road, k])


class SignalBank:
    """The 16 independent controllers of the grid."""

    def __init__(self, topology: Topology, params: SignalParams = SignalParams()):
        self.topology = topology
        self.params = params
        self.states = [SignalState(it.id) for it in topology.intersections]
        self._south = np.array([(it.south_road, it.south_k) for it in topology.intersections])
        self._west = np.array([(it.west_road, it.west_k) for it in topology.intersections])

    def step(self, pressure: np.ndarray) -> np.ndarray:
        """Decide all controllers for one tick and return the red mask."""
        ps = pressure[self._south[:, 0], self._south[:, 1]]
        pw = pressure[self._west[:, 0], self._west[:, 1]]
        self.states = [
            decide_phase(s, (ps[i], pw[i]), self.params) for i, s in enumerate(self.states)
        ]
        return self.red()

    def red(self) -> np.ndarray:
        red = np.ones((self.topology.n_roads, self.topology.n_cross), dtype=bool)
        for s, (sr, sk), (wr, wk) in zip(self.states, self._south, self._west):
            if s.phase is Phase.GREEN_SOUTH:
                red[sr, sk] = False
            elif s.phase is Phase.GREEN_WEST:
                red[wr, wk] = False
        return red
