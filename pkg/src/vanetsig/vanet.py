"""Vehicle reports, neighbour sensing and Sybil false-vehicle injection."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np
from scipy.spatial import cKDTree

from .topology import Topology
from .traffic import NetworkState


@dataclass(frozen=True)
class VehicleReport:
    sender_id: int
    t: int
    lane: int
    x: float  # metres along the lane
    v: float  # m/s
    neighbours: tuple[tuple[float, int], ...] = ()  # (x_k, lane_k) pairs


def _empty_i():
    return np.zeros(0, dtype=np.int64)


def _empty_f():
    return np.zeros(0, dtype=float)


@dataclass
class ReportBatch:
    """All reports delivered at one tick, stored column-wise.

    Neighbour sets are kept in CSR form: the entries of row ``i`` are
    ``nb_x[nb_ptr[i]:nb_ptr[i + 1]]`` (and the matching ``nb_lane``).
    """

    t: int
    ids: np.ndarray = field(default_factory=_empty_i)
    lane: np.ndarray = field(default_factory=_empty_i)
    x: np.ndarray = field(default_factory=_empty_f)
    v: np.ndarray = field(default_factory=_empty_f)
    nb_ptr: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    nb_x: np.ndarray = field(default_factory=_empty_f)
    nb_lane: np.ndarray = field(default_factory=_empty_i)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def nb_owner(self) -> np.ndarray:
        """Row index owning each neighbour entry."""
        return np.repeat(np.arange(len(self.ids)), np.diff(self.nb_ptr))

    def neighbours(self, i: int) -> list[tuple[float, int]]:
        a, b = self.nb_ptr[i], self.nb_ptr[i + 1]
        return list(zip(self.nb_x[a:b].tolist(), self.nb_lane[a:b].tolist()))

    def subset(self, mask) -> "ReportBatch":
        """Order-preserving selection of rows (boolean mask or index array)."""
        rows = np.flatnonzero(mask) if np.asarray(mask).dtype == bool else np.asarray(mask, dtype=np.int64)
        counts = np.diff(self.nb_ptr)[rows]
        ptr = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        if counts.sum():
            starts = self.nb_ptr[rows]
            entry = np.repeat(starts - ptr[:-1], counts) + np.arange(ptr[-1])
        else:
            entry = _empty_i()
        return ReportBatch(
            self.t, self.ids[rows], self.lane[rows], self.x[rows], self.v[rows],
            ptr, self.nb_x[entry], self.nb_lane[entry],
        )

    def concat(self, other: "ReportBatch") -> "ReportBatch":
        return ReportBatch(
            self.t,
            np.concatenate([self.ids, other.ids]),
            np.concatenate([self.lane, other.lane]),
            np.concatenate([self.x, other.x]),
            np.concatenate([self.v, other.v]),
            np.concatenate([self.nb_ptr, other.nb_ptr[1:] + self.nb_ptr[-1]]),
            np.concatenate([self.nb_x, other.nb_x]),
            np.concatenate([self.nb_lane, other.nb_lane]),
        )

    def reports(self) -> list[VehicleReport]:
        return [
            VehicleReport(int(self.ids[i]), self.t, int(self.lane[i]), float(self.x[i]),
                          float(self.v[i]), tuple(self.neighbours(i)))
            for i in range(len(self))
        ]

    @classmethod
    def from_reports(cls, t: int, reports: Iterable[VehicleReport]) -> "ReportBatch":
        reports = list(reports)
        ptr = np.zeros(len(reports) + 1, dtype=np.int64)
        np.cumsum([len(r.neighbours) for r in reports], out=ptr[1:])
        nbs = [nb for r in reports for nb in r.neighbours]
        return cls(
            t,
            np.array([r.sender_id for r in reports], dtype=np.int64),
            np.array([r.lane for r in reports], dtype=np.int64),
            np.array([r.x for r in reports], dtype=float),
            np.array([r.v for r in reports], dtype=float),
            ptr,
            np.array([x for x, _ in nbs], dtype=float),
            np.array([lane for _, lane in nbs], dtype=np.int64),
        )


def _csr(n: int, owner: np.ndarray) -> np.ndarray:
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(owner, minlength=n), out=ptr[1:])
    return ptr


def _pairs_within(xy: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Ordered pairs (owner, other) of distinct points at most ``r`` apart,
    sorted by owner then other."""
    if len(xy) < 2:
        return _empty_i(), _empty_i()
    pairs = cKDTree(xy).query_pairs(r, output_type="ndarray")
    owner = np.concatenate([pairs[:, 0], pairs[:, 1]])
    other = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((other, owner))
    return owner[order].astype(np.int64), other[order].astype(np.int64)


def generate_reports(
    state: NetworkState, r: float = 50.0, noise: float = 3.75, rng: np.random.Generator | None = None
) -> ReportBatch:
    """One report per true vehicle.

    Positions carry independent uniform localization error in
    ``[-noise, +noise]`` (clipped to the lane); each neighbour entry is a
    separate noisy localization by the sender of a true vehicle within ``r``
    of it.  Sybil vehicles do not exist physically and are never sensed.
    """
    topo = state.topology
    n = len(state.ids)
    length = topo.road_length_m
    true_x = state.cell * topo.cell_m
    if noise > 0:
        x = np.clip(true_x + rng.uniform(-noise, noise, n), 0.0, length)
    else:
        x = true_x.astype(float)
    v = state.vel * topo.cell_m / 1.0

    owner, other = _pairs_within(topo.planar(state.road, true_x), r)
    nb_x = true_x[other].astype(float)
    if noise > 0 and len(other):
        nb_x = np.clip(nb_x + rng.uniform(-noise, noise, len(other)), 0.0, length)
    return ReportBatch(
        state.t, state.ids.copy(), state.road.copy(), x, v.astype(float),
        _csr(n, owner), nb_x, state.road[other].copy(),
    )


@dataclass(frozen=True)
class AttackConfig:
    q_f: float = 0.0
    collusion: bool = False
    velocity_range: tuple[float, float] = (0.0, 15.0)
    stopped_lifetime_s: int = 120
    stopped_speed: float = 0.5  # claimed speeds below this count as standing still

    def __post_init__(self):
        if not 0.0 <= self.q_f <= 1.0:
            raise ValueError(f"false-vehicle intensity q_F={self.q_f} outside [0, 1]")


@dataclass
class SybilState:
    """Live false-vehicle streams (claimed state only)."""

    ids: np.ndarray = field(default_factory=_empty_i)
    lane: np.ndarray = field(default_factory=_empty_i)
    x: np.ndarray = field(default_factory=_empty_f)
    v: np.ndarray = field(default_factory=_empty_f)
    age: np.ndarray = field(default_factory=_empty_i)
    spawned: int = 0

    def __len__(self) -> int:
        return len(self.ids)

    def add(self, ids, lane, x, v) -> None:
        ids = np.atleast_1d(np.asarray(ids, dtype=np.int64))
        self.ids = np.concatenate([self.ids, ids])
        self.lane = np.concatenate([self.lane, np.broadcast_to(lane, len(ids)).astype(np.int64)])
        self.x = np.concatenate([self.x, np.broadcast_to(x, len(ids)).astype(float)])
        self.v = np.concatenate([self.v, np.broadcast_to(v, len(ids)).astype(float)])
        self.age = np.concatenate([self.age, np.zeros(len(ids), dtype=np.int64)])

    def _keep(self, keep) -> None:
        for name in ("ids", "lane", "x", "v", "age"):
            setattr(self, name, getattr(self, name)[keep])


def inject_sybil(
    batch: ReportBatch,
    attack: AttackConfig,
    sybils: SybilState,
    rng: np.random.Generator,
    ids: Iterator[int],
    topology: Topology,
    r: float = 50.0,
) -> ReportBatch:
    """Advance the false-vehicle streams one tick and append their reports.

    Live streams move by their constant velocity and expire past the lane
    end; standing streams (speed below ``attack.stopped_speed``) expire after
    ``attack.stopped_lifetime_s``.  Then every lane starts a new stream
    with probability ``q_F`` at a uniform position and uniform velocity.
    ``sybils`` is updated in place.
    """
    length = topology.road_length_m
    if len(sybils):
        sybils.x = sybils.x + sybils.v
        sybils.age = sybils.age + 1
        expired = (sybils.v < attack.stopped_speed) & (sybils.age >= attack.stopped_lifetime_s)
        sybils._keep((sybils.x <= length) & ~expired)

    if attack.q_f > 0:
        n_lanes = topology.n_roads
        start = rng.random(n_lanes) < attack.q_f
        pos = rng.uniform(0.0, length, n_lanes)
        vel = rng.uniform(attack.velocity_range[0], attack.velocity_range[1], n_lanes)
        lanes = np.flatnonzero(start)
        if len(lanes):
            sybils.add([next(ids) for _ in lanes], lanes, pos[lanes], vel[lanes])
            sybils.spawned += len(lanes)

    m = len(sybils)
    if m == 0:
        return batch
    if attack.collusion:
        owner, other = _pairs_within(topology.planar(sybils.lane, sybils.x), r)
    else:
        owner = other = _empty_i()
    ghost = ReportBatch(
        batch.t, sybils.ids.copy(), sybils.lane.copy(), sybils.x.copy(), sybils.v.copy(),
        _csr(m, owner), sybils.x[other].copy(), sybils.lane[other].copy(),
    )
    return batch.concat(ghost)


# --- line-oriented text trace -------------------------------------------------
#   t, sender_id, lane, x, v, [k: x_1 lane_1 ... x_k lane_k]

def format_report_line(batch: ReportBatch, i: int) -> str:
    nbs = batch.neighbours(i)
    # shortest round-trip repr so that a replay sees exactly the same numbers
    inner = " ".join(f"{x!r} {lane}" for x, lane in nbs)
    nb = f"[{len(nbs)}: {inner}]" if nbs else "[0:]"
    return f"{batch.t}, {batch.ids[i]}, {batch.lane[i]}, {float(batch.x[i])!r}, {float(batch.v[i])!r}, {nb}"


def write_trace(batches: Iterable[ReportBatch], fh: TextIO) -> None:
    fh.write("# t, sender_id, lane, x, v, [k: x_k lane_k ...]\n")
    for b in batches:
        for i in range(len(b)):
            fh.write(format_report_line(b, i) + "\n")


def parse_report_line(line: str) -> VehicleReport:
    head, _, nb = line.partition("[")
    parts = [p.strip() for p in head.split(",") if p.strip()]
    if len(parts) != 5 or not nb.endswith("]"):
        raise ValueError(f"malformed trace line: {line!r}")
    t, sid, lane = int(parts[0]), int(parts[1]), int(parts[2])
    count_s, _, rest = nb[:-1].partition(":")
    fields_ = rest.split()
    k = int(count_s)
    if len(fields_) != 2 * k:
        raise ValueError(f"neighbour count {k} does not match entries in: {line!r}")
    nbs = tuple((float(fields_[2 * j]), int(fields_[2 * j + 1])) for j in range(k))
    return VehicleReport(sid, t, lane, float(parts[3]), float(parts[4]), nbs)


def read_trace(fh: TextIO) -> Iterator[ReportBatch]:
    """Yield one batch per tick, in file order."""
    current_t = None
    pending: list[VehicleReport] = []
    for line in fh:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rep = parse_report_line(line)
        if current_t is not None and rep.t != current_t:
            yield ReportBatch.from_reports(current_t, pending)
            pending = []
        current_t = rep.t
        pending.append(rep)
    if current_t is not None:
        yield ReportBatch.from_reports(current_t, pending)
