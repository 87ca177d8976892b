"""Classification accuracy and vehicle delay of a run."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = (
    "algorithm,q,qF,seed,total_delay_s,mean_delay_s,"
    "pct_malicious_detected,pct_true_recognized,vehicles"
)


@dataclass
class ClassificationCounts:
    """Report counts cross-tabulated by sender truth and filter outcome."""

    true_accepted: int = 0
    true_rejected: int = 0
    sybil_rejected: int = 0
    sybil_accepted: int = 0

    @property
    def true_reports(self) -> int:
        return self.true_accepted + self.true_rejected

    @property
    def sybil_reports(self) -> int:
        return self.sybil_rejected + self.sybil_accepted

    def __add__(self, other: "ClassificationCounts") -> "ClassificationCounts":
        return ClassificationCounts(
            self.true_accepted + other.true_accepted,
            self.true_rejected + other.true_rejected,
            self.sybil_rejected + other.sybil_rejected,
            self.sybil_accepted + other.sybil_accepted,
        )

    @property
    def pct_true_recognized(self) -> float:
        # vacuous 100 % when there was nothing to recognize
        return 100.0 * self.true_accepted / self.true_reports if self.true_reports else 100.0

    @property
    def pct_malicious_detected(self) -> float:
        return 100.0 * self.sybil_rejected / self.sybil_reports if self.sybil_reports else 100.0


def accumulate(counts: ClassificationCounts, accepted: np.ndarray, sender_ids: np.ndarray, sybil_ids) -> ClassificationCounts:
    """Add one tick's filter outcome to ``counts`` (in place) and return it.

    ``accepted`` is the filter mask over the full batch whose senders are
    ``sender_ids``; ``sybil_ids`` is the ground-truth set of false ids.
    """
    accepted = np.asarray(accepted, dtype=bool)
    if len(sender_ids) == 0:
        return counts
    if isinstance(sybil_ids, (set, frozenset)):
        sybil_ids = sorted(sybil_ids)
    fake = np.isin(sender_ids, np.asarray(sybil_ids, dtype=np.int64))
    counts.true_accepted += int((~fake & accepted).sum())
    counts.true_rejected += int((~fake & ~accepted).sum())
    counts.sybil_rejected += int((fake & ~accepted).sum())
    counts.sybil_accepted += int((fake & accepted).sum())
    return counts


@dataclass
class RunResult:
    algorithm: int
    q: float
    q_f: float
    seed: int
    total_delay: float
    vehicle_count: int
    counts: ClassificationCounts = field(default_factory=ClassificationCounts)
    config: dict = field(default_factory=dict)

    @property
    def mean_delay(self) -> float:
        return self.total_delay / self.vehicle_count if self.vehicle_count else 0.0

    @property
    def pct_malicious_detected(self) -> float:
        return self.counts.pct_malicious_detected

    @property
    def pct_true_recognized(self) -> float:
        return self.counts.pct_true_recognized

    def csv_row(self) -> str:
        return (
            f"{self.algorithm},{self.q:.4f},{self.q_f:.4f},{self.seed},"
            f"{self.total_delay:.1f},{self.mean_delay:.6f},"
            f"{self.pct_malicious_detected:.6f},{self.pct_true_recognized:.6f},"
            f"{self.vehicle_count}"
        )


def summarize(algorithm: int, q: float, q_f: float, seed: int, total_delay: float,
              vehicle_count: int, counts: ClassificationCounts | None = None,
              config: dict | None = None) -> RunResult:
    return RunResult(algorithm, q, q_f, seed, float(total_delay), int(vehicle_count),
                     counts or ClassificationCounts(), dict(config or {}))


def parse_csv_row(line: str) -> dict:
    names = CSV_HEADER.split(",")
    values = line.strip().split(",")
    if len(values) != len(names):
        raise ValueError(f"expected {len(names)} fields, got {len(values)}: {line!r}")
    row = dict(zip(names, values))
    out = {k: float(v) for k, v in row.items()}
    for k in ("algorithm", "seed", "vehicles"):
        out[k] = int(row[k])
    return out
