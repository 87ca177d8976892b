"""Calibration measurements of the traffic model.

Saturation flow is measured the way it is done at a real stop line: a
standing queue is released at the start of green and the discharge
headways of the queued vehicles are recorded; the first few vehicles (start
up loss) are skipped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import Topology, default_topology
from .traffic import NetworkState, SimParams, VehicleStreams, ca_step, id_source, spawn_vehicles


@dataclass
class SaturationResult:
    flow_veh_h: float  # vehicles per hour of green
    headway_s: float
    std_veh_h: float  # spread of per-replication flows
    replications: int


def discharge_times(queue: int, seed: int, params: SimParams = SimParams(),
                    topology: Topology | None = None, road: int = 0, k: int = 1,
                    red_s: int = 30, max_green_s: int = 300) -> np.ndarray:
    """Green-time second at which each queued vehicle passes the stop line,
    front of the queue first.  Every other signal stays green."""
    topo = topology or default_topology()
    stop = int(topo.stopline_cells[k])
    if queue > stop + 1:
        raise ValueError(f"queue of {queue} does not fit upstream of crossing {k}")
    cells = stop - np.arange(queue)
    state = NetworkState(topo).add_vehicles(
        np.arange(queue), np.full(queue, road), cells, np.zeros(queue, dtype=np.int64))
    red = np.zeros((topo.n_roads, topo.n_cross), dtype=bool)
    red[road, k] = True
    rng = np.random.default_rng(seed)
    for _ in range(red_s):
        state = ca_step(state, red, params, rng)
    red[road, k] = False
    passed = np.full(queue, np.nan)
    for g in range(1, max_green_s + 1):
        state = ca_step(state, red, params, rng)
        ids = np.arange(queue)
        present = np.isin(ids, state.ids)
        cell = np.full(queue, topo.road_cells)
        cell[state.ids[state.ids < queue]] = state.cell[state.ids < queue]
        crossed = (cell > stop) | ~present
        passed[crossed & np.isnan(passed)] = g
        if crossed.all():
            break
    return passed


def saturation_flow(queue: int = 30, skip: int = 4, replications: int = 200, seed: int = 0,
                    params: SimParams = SimParams(), topology: Topology | None = None) -> SaturationResult:
    """Discharge rate of queue positions ``skip + 1 .. queue``, pooled over
    replications (vehicles over summed green time)."""
    if queue <= skip + 1:
        raise ValueError("queue must be longer than the skipped start-up vehicles")
    children = np.random.SeedSequence(seed).spawn(replications)
    spans = []
    for child in children:
        times = discharge_times(queue, child, params, topology)
        spans.append(times[-1] - times[skip - 1] if skip else times[-1])
    spans = np.asarray(spans)
    flows = 3600.0 * (queue - skip) / spans
    flow = float(3600.0 * (queue - skip) / spans.mean())
    return SaturationResult(flow, 3600.0 / flow, float(flows.std(ddof=1)), replications)


def vehicles_per_run(q: float, duration: int = 600, seeds=range(20),
                     topology: Topology | None = None) -> float:
    """Average number of vehicles entering an otherwise idle network
    (all signals green) in ``duration`` seconds."""
    topo = topology or default_topology()
    counts = []
    for s in seeds:
        rng = np.random.default_rng(s)
        state = NetworkState(topo)
        ids = id_source()
        green = np.zeros((topo.n_roads, topo.n_cross), dtype=bool)
        params = SimParams(q=q, duration=duration)
        for _ in range(duration):
            state = spawn_vehicles(state, q, rng, ids, params.v_max)
            state = ca_step(state, green, params, rng)
        counts.append(state.entered)
    return float(np.mean(counts))


def green_window_flow(queue: int = 10, red_s: int = 60, window_s: int = 20,
                      replications: int = 400, seed: int = 0,
                      params: SimParams = SimParams(), topology: Topology | None = None) -> SaturationResult:
    """Vehicles of a released queue passing the stop line in the first
    ``window_s`` seconds of green, as a rate per hour of green."""
    counts = []
    for child in np.random.SeedSequence(seed).spawn(replications):
        times = discharge_times(queue, child, params, topology, red_s=red_s, max_green_s=window_s)
        counts.append(np.sum(times <= window_s))
    counts = np.asarray(counts, dtype=float)
    flows = 3600.0 * counts / window_s
    flow = float(flows.mean())
    return SaturationResult(flow, 3600.0 / flow, float(flows.std(ddof=1)), replications)
