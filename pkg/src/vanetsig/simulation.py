"""One closed-loop run: traffic, reports, attack, trust filter, signals.

Tick order: spawn -> reports (true + Sybil) -> trust update -> filter ->
controller decisions -> CA step.  The red mask attached to the reports of
tick ``t`` is the one in force during the step that produced them.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .metrics import ClassificationCounts, RunResult, accumulate, summarize
from .signals import SignalBank, SignalParams, approach_pressures
from .topology import Topology, default_topology
from .traffic import NetworkState, SimParams, VehicleStreams, ca_step, id_source, spawn_vehicles, stop_delay_total
from .trust import DetectionParams, TrustLedger, accepted_mask, update_trust
from .vanet import AttackConfig, ReportBatch, SybilState, generate_reports, inject_sybil

LEDGER_SCOPES = ("shared", "per_node")


@dataclass(frozen=True)
class RunConfig:
    sim: SimParams = SimParams()
    signals: SignalParams = SignalParams()
    detection: DetectionParams = DetectionParams()
    attack: AttackConfig = AttackConfig()
    noise: float = 3.75  # half-width of the uniform localization error, metres
    ledger_scope: str = "shared"
    algorithm: int = 9

    def __post_init__(self):
        if self.ledger_scope not in LEDGER_SCOPES:
            raise ValueError(f"ledger_scope must be one of {LEDGER_SCOPES}")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")


@dataclass
class RunTrace:
    """Optional per-tick record of a run."""

    batches: list[ReportBatch] = field(default_factory=list)
    red: list[np.ndarray] = field(default_factory=list)  # mask set by the controller at t
    red_seen: list[np.ndarray] = field(default_factory=list)  # mask in force when batch t was judged
    accepted: list[np.ndarray] = field(default_factory=list)
    states: list[NetworkState] = field(default_factory=list)
    counts: list[ClassificationCounts] = field(default_factory=list)
    phases: list[list] = field(default_factory=list)
    sybil_ids: list[int] = field(default_factory=list)


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators so that detection choices never shift the
    traffic demand or the attack."""
    names = ("spawn", "noise", "attack")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.default_rng(c) for n, c in zip(names, children)}


def control_node(batch: ReportBatch, topology: Topology) -> np.ndarray:
    """Intersection whose control node receives each report: the next one ahead,
    or the last one passed on the exit link."""
    d = topology.stopline_m[None, :] - batch.x[:, None]
    ahead = d > -topology.cell_m / 2
    k = np.where(ahead.any(1), ahead.argmax(1), topology.n_cross - 1)
    return topology.cross_intersection[batch.lane, k]


class Detector:
    """Shared ledger, or one ledger per control node."""

    def __init__(self, params: DetectionParams, topology: Topology, scope: str = "shared"):
        self.topology = topology
        self.scope = scope
        n = 1 if scope == "shared" else len(topology.intersections)
        self.ledgers = [TrustLedger(params, topology) for _ in range(n)]

    def process(self, batch: ReportBatch, red_now) -> np.ndarray:
        """Update trust with ``batch`` and return its accepted mask."""
        if self.scope == "shared":
            ledger = self.ledgers[0]
            update_trust(batch, red_now, ledger)
            return accepted_mask(batch, ledger)
        node = control_node(batch, self.topology)
        out = np.ones(len(batch), dtype=bool)
        for nid, ledger in enumerate(self.ledgers):
            rows = np.flatnonzero(node == nid)
            sub = batch.subset(rows)
            update_trust(sub, red_now, ledger)
            out[rows] = accepted_mask(sub, ledger)
        return out


def run(config: RunConfig, seed: int, topology: Topology | None = None,
        record: RunTrace | None = None) -> RunResult:
    topo = topology or default_topology()
    sim = config.sim
    rngs = rng_streams(seed)
    dawdle = VehicleStreams(seed, horizon=sim.duration)
    ids = id_source()
    state = NetworkState(topo)
    bank = SignalBank(topo, config.signals)
    sybils = SybilState()
    sybil_ids: list[int] = []
    detect = config.detection.filtering and config.detection.rule_set != 0
    detector = Detector(config.detection, topo, config.ledger_scope) if detect else None
    counts = ClassificationCounts()
    red = bank.red()
    r = config.detection.r

    for t in range(sim.duration):
        state = spawn_vehicles(state, sim.q, rngs["spawn"], ids, sim.v_max)
        batch = generate_reports(state, r, config.noise, rngs["noise"])
        n_true = len(batch)
        spawned_before = sybils.spawned
        batch = inject_sybil(batch, config.attack, sybils, rngs["attack"], ids, topo, r)
        if sybils.spawned > spawned_before:
            sybil_ids.extend(sybils.ids[-(sybils.spawned - spawned_before):].tolist())

        if detector is not None:
            accepted = detector.process(batch, red)
        else:
            accepted = np.ones(len(batch), dtype=bool)
        step_counts = ClassificationCounts(
            int(accepted[:n_true].sum()), int(n_true - accepted[:n_true].sum()),
            int((~accepted[n_true:]).sum()), int(accepted[n_true:].sum()),
        )
        counts = counts + step_counts

        red_seen = red
        pressure = approach_pressures(batch.subset(accepted), topo, config.signals)
        red = bank.step(pressure)
        if record is not None:
            record.batches.append(batch)
            record.red_seen.append(red_seen)
            record.red.append(red)
            record.accepted.append(accepted)
            record.states.append(state)
            record.counts.append(step_counts)
            record.phases.append([s.phase for s in bank.states])
        state = ca_step(state, red, sim, dawdle)

    if record is not None:
        record.states.append(state)
        record.sybil_ids = sybil_ids
    return summarize(
        config.algorithm, sim.q, config.attack.q_f, seed,
        stop_delay_total(state), state.entered, counts,
    )


def with_params(config: RunConfig, **changes) -> RunConfig:
    return replace(config, **changes)
