"""Stochastic cellular-automaton traffic on the grid (ground truth).

Each tick applies, in parallel for all vehicles, acceleration, braking for the
leader / red signal / occupied crossing, random deceleration with probability
``p`` and movement.  Boundaries are open: vehicles enter at cell 0 of every
road and leave past the last cell.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import count
from typing import Iterator

import numpy as np

from .topology import Topology


@dataclass(frozen=True)
class SimParams:
    p: float = 0.15
    q: float = 0.10
    v_max: int = 2
    tick: float = 1.0
    duration: int = 600
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"deceleration probability p={self.p} outside [0, 1]")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"spawn intensity q={self.q} outside [0, 1]")
        if self.v_max < 1:
            raise ValueError("v_max must be at least 1 cell/s")


@dataclass
class NetworkState:
    """Vehicles on the grid, stored column-wise and sorted by id.

    ``departed_delay`` keeps the stop delay of vehicles that already left so
    that run totals cover every vehicle ever present.
    """

    topology: Topology
    ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    road: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    cell: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    vel: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    stop_delay: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    spawn_t: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    t: int = 0
    entered: int = 0
    departed: int = 0
    departed_delay: int = 0
    last_spawned: int = 0
    last_departed: int = 0

    def __len__(self) -> int:
        return len(self.ids)

    def copy(self) -> "NetworkState":
        return replace(
            self,
            ids=self.ids.copy(),
            road=self.road.copy(),
            cell=self.cell.copy(),
            vel=self.vel.copy(),
            stop_delay=self.stop_delay.copy(),
            spawn_t=self.spawn_t.copy(),
        )

    def add_vehicles(self, ids, road, cell, vel) -> "NetworkState":
        """Place vehicles directly (scenario setup); ids must exceed existing ones."""
        ids = np.atleast_1d(np.asarray(ids, dtype=np.int64))
        n = len(ids)
        st = self.copy()
        st.ids = np.concatenate([st.ids, ids])
        st.road = np.concatenate([st.road, np.broadcast_to(np.asarray(road, dtype=np.int64), n)])
        st.cell = np.concatenate([st.cell, np.broadcast_to(np.asarray(cell, dtype=np.int64), n)])
        st.vel = np.concatenate([st.vel, np.broadcast_to(np.asarray(vel, dtype=np.int64), n)])
        st.stop_delay = np.concatenate([st.stop_delay, np.zeros(n, dtype=np.int64)])
        st.spawn_t = np.concatenate([st.spawn_t, np.full(n, st.t, dtype=np.int64)])
        order = np.argsort(st.ids, kind="stable")
        if len(np.unique(st.ids)) != len(st.ids):
            raise ValueError("duplicate vehicle id")
        for name in _COLUMNS:
            setattr(st, name, getattr(st, name)[order])
        st.entered += n
        return st

    def occupancy(self) -> np.ndarray:
        """(n_roads, road_cells) array holding the row index of each vehicle, -1 if empty."""
        occ = np.full((self.topology.n_roads, self.topology.road_cells), -1, dtype=np.int64)
        occ[self.road, self.cell] = np.arange(len(self.ids))
        return occ

    def positions_m(self) -> np.ndarray:
        return self.cell * self.topology.cell_m


_COLUMNS = ("ids", "road", "cell", "vel", "stop_delay", "spawn_t")


class VehicleStreams:
    """Random-deceleration draws keyed by each vehicle's spawn event.

    A vehicle entering road ``r`` at tick ``s`` always sees the same sequence
    of uniforms (indexed by its age), whatever happened elsewhere in the run.
    Runs that differ only in signal decisions therefore share their traffic
    randomness.
    """

    def __init__(self, seed: int, horizon: int = 600):
        self.seed = seed
        self.horizon = horizon
        self._blocks: dict[tuple[int, int], np.ndarray] = {}

    def _block(self, road: int, spawn_t: int) -> np.ndarray:
        key = (road, spawn_t)
        block = self._blocks.get(key)
        if block is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=(road, spawn_t))
            block = np.random.default_rng(ss).random(self.horizon)
            self._blocks[key] = block
        return block

    def random(self, state: "NetworkState") -> np.ndarray:
        age = state.t - state.spawn_t
        out = np.empty(len(state.ids))
        for i, (r, s, a) in enumerate(zip(state.road.tolist(), state.spawn_t.tolist(), age.tolist())):
            block = self._block(r, s)
            if a >= len(block):
                ss = np.random.SeedSequence(self.seed, spawn_key=(r, s, a // self.horizon))
                out[i] = np.random.default_rng(ss).random(self.horizon)[a % self.horizon]
            else:
                out[i] = block[a]
        return out

    def forget(self, road, spawn_t) -> None:
        for key in zip(np.asarray(road).tolist(), np.asarray(spawn_t).tolist()):
            self._blocks.pop(key, None)


def _uniforms(rng, state: "NetworkState") -> np.ndarray:
    if isinstance(rng, VehicleStreams):
        return rng.random(state)
    return rng.random(len(state.ids))


def id_source(start: int = 0) -> Iterator[int]:
    """Shared counter handing out opaque, unique vehicle identifiers."""
    return count(start)


def gaps(state: NetworkState, red: np.ndarray, v_max: int) -> np.ndarray:
    """Free cells ahead of each vehicle up to the next obstacle.

    Obstacles are other vehicles, crossing cells whose signal is red for this
    road, and crossing cells occupied by a vehicle of the perpendicular road.
    Past the exit the road is open.
    """
    topo = state.topology
    L = topo.road_cells
    W = L + v_max + 1
    occupied = np.zeros((topo.n_roads, L), dtype=bool)
    occupied[state.road, state.cell] = True
    obst = np.zeros((topo.n_roads, W), dtype=bool)
    obst[:, :L] = occupied
    cc = topo.crossing_cells
    blocked = red | occupied[topo.partner_road, cc[topo.partner_k]]
    obst[:, cc] |= blocked
    obst[:, W - 1] = True
    flat = np.flatnonzero(obst)
    key = state.road * W + state.cell
    nxt = flat[np.searchsorted(flat, key, side="right")]
    return nxt - key - 1


def ca_step(
    state: NetworkState, red: np.ndarray, params: SimParams, rng
) -> NetworkState:
    """Advance the automaton by one tick.

    ``red[r, k]`` is True when the ``k``-th signal met along road ``r`` shows
    red (or all-red) during this tick.  ``rng`` is a numpy Generator (one draw
    per vehicle, in id order) or a :class:`VehicleStreams`.
    """
    st = state.copy()
    n = len(st.ids)
    st.t = state.t + 1
    st.last_departed = 0
    if n == 0:
        return st
    gap = gaps(state, np.asarray(red, dtype=bool), params.v_max)
    v = np.minimum(st.vel + 1, params.v_max)
    v = np.minimum(v, gap)
    dawdle = _uniforms(rng, state) < params.p
    v = np.where(dawdle, np.maximum(v - 1, 0), v)
    st.vel = v
    st.cell = st.cell + v
    st.stop_delay = st.stop_delay + (v == 0)

    gone = st.cell >= state.topology.road_cells
    if gone.any():
        st.departed += int(gone.sum())
        st.last_departed = int(gone.sum())
        st.departed_delay += int(st.stop_delay[gone].sum())
        if isinstance(rng, VehicleStreams):
            rng.forget(st.road[gone], st.spawn_t[gone])
        keep = ~gone
        for name in _COLUMNS:
            setattr(st, name, getattr(st, name)[keep])
    return st


def spawn_vehicles(
    state: NetworkState, q: float, rng: np.random.Generator, ids: Iterator[int], v_max: int = 2
) -> NetworkState:
    """Each road's entry cell receives a new vehicle with probability ``q``.

    One uniform draw per road per tick, whether or not the entry is free, so
    the spawn stream does not depend on traffic conditions.
    """
    topo = state.topology
    draws = rng.random(topo.n_roads)
    want = draws < q
    st = state.copy()
    st.last_spawned = 0
    if not want.any():
        return st
    entry_taken = np.zeros(topo.n_roads, dtype=bool)
    entry_taken[st.road[st.cell == 0]] = True
    roads = np.flatnonzero(want & ~entry_taken)
    if len(roads) == 0:
        return st
    new_ids = np.array([next(ids) for _ in roads], dtype=np.int64)
    st.ids = np.concatenate([st.ids, new_ids])
    st.road = np.concatenate([st.road, roads])
    st.cell = np.concatenate([st.cell, np.zeros(len(roads), dtype=np.int64)])
    st.vel = np.concatenate([st.vel, np.full(len(roads), v_max, dtype=np.int64)])
    st.stop_delay = np.concatenate([st.stop_delay, np.zeros(len(roads), dtype=np.int64)])
    st.spawn_t = np.concatenate([st.spawn_t, np.full(len(roads), st.t, dtype=np.int64)])
    st.entered += len(roads)
    st.last_spawned = len(roads)
    return st


def stop_delay_total(state: NetworkState) -> int:
    """Seconds at standstill summed over every vehicle that was ever present."""
    return int(state.stop_delay.sum()) + state.departed_delay
