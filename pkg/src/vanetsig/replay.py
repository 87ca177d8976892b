"""Offline trust evaluation of a saved report trace.

A replay needs two files: the report trace written by
:func:`vanetsig.vanet.write_trace` and a signal-colour trace with one line
per tick::

    t, GRRG RGGR ...

one group of characters per lane (``R`` red, ``G`` green), one character per
crossing along the lane, holding the colours in force when the reports of
tick ``t`` were produced.
"""
from __future__ import annotations

from typing import Iterable, Iterator, TextIO

import numpy as np

from .topology import Topology, default_topology
from .trust import DetectionParams, TrustLedger, update_trust
from .vanet import ReportBatch, read_trace

REPLAY_HEADER = "t,vehicle_id,trust,classified_malicious"


def format_signal_line(t: int, red: np.ndarray) -> str:
    groups = " ".join("".join("R" if c else "G" for c in row) for row in np.asarray(red, dtype=bool))
    return f"{t}, {groups}"


def write_signal_trace(ticks: Iterable[tuple[int, np.ndarray]], fh: TextIO) -> None:
    fh.write("# t, colours per lane (R/G per crossing)\n")
    for t, red in ticks:
        fh.write(format_signal_line(t, red) + "\n")


def parse_signal_line(line: str, topology: Topology | None = None) -> tuple[int, np.ndarray]:
    t_s, _, rest = line.partition(",")
    groups = rest.split()
    red = np.array([[c == "R" for c in g] for g in groups], dtype=bool)
    bad = {c for g in groups for c in g} - {"R", "G"}
    if bad or red.ndim != 2:
        raise ValueError(f"malformed signal line: {line!r}")
    if topology is not None and red.shape != (topology.n_roads, topology.n_cross):
        raise ValueError(f"signal line has shape {red.shape}, expected "
                         f"{(topology.n_roads, topology.n_cross)}")
    return int(t_s), red


def read_signal_trace(fh: TextIO, topology: Topology | None = None) -> dict[int, np.ndarray]:
    out = {}
    for line in fh:
        line = line.strip()
        if line and not line.startswith("#"):
            t, red = parse_signal_line(line, topology)
            out[t] = red
    return out


def replay(batches: Iterable[ReportBatch], signals: dict[int, np.ndarray],
           params: DetectionParams = DetectionParams(),
           topology: Topology | None = None) -> Iterator[tuple[int, int, float, bool]]:
    """Run the trust engine over ``batches``; yield ``(t, id, trust, malicious)``
    for every report, with trust as it stands after that tick's update."""
    topo = topology or default_topology()
    ledger = TrustLedger(params, topo)
    by_t = {b.t: b for b in batches}
    missing = set(by_t) - set(signals)
    if missing:
        raise KeyError(f"no signal colours for tick {min(missing)}")
    # ticks without reports still advance the ledger's signal memory
    for t in sorted(signals):
        batch = by_t.get(t, ReportBatch(t))
        update_trust(batch, signals[batch.t], ledger)
        trust = ledger.trust_of(batch.ids)
        for vid, tr in zip(batch.ids.tolist(), trust.tolist()):
            yield batch.t, vid, tr, tr <= 0


def replay_files(trace: TextIO, signal_trace: TextIO, out: TextIO,
                 params: DetectionParams = DetectionParams(),
                 topology: Topology | None = None) -> int:
    """File-to-file replay; returns the number of rows written."""
    topo = topology or default_topology()
    signals = read_signal_trace(signal_trace, topo)
    out.write(REPLAY_HEADER + "\n")
    n = 0
    for t, vid, tr, bad in replay(read_trace(trace), signals, params, topo):
        out.write(f"{t},{vid},{tr:.6f},{int(bad)}\n")
        n += 1
    return n
