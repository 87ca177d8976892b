"""Experiment sweeps over detection algorithms and traffic/attack intensities."""
from __future__ import annotations

import csv
import hashlib
import io
from collections import defaultdict
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .metrics import CSV_HEADER, RunResult, parse_csv_row
from .signals import SignalParams
from .simulation import RunConfig, run
from .traffic import SimParams
from .trust import DetectionParams, Rule
from .vanet import AttackConfig

# which rule families each algorithm combines
ALGORITHMS: dict[int, Rule] = {
    0: Rule.NONE,
    1: Rule.ORDER,
    2: Rule.NEIGHBOUR,
    3: Rule.SIGNALS,
    4: Rule.VELOCITY,
    5: Rule.ORDER | Rule.SIGNALS,
    6: Rule.SIGNALS | Rule.NEIGHBOUR,
    7: Rule.ORDER | Rule.VELOCITY,
    8: Rule.VELOCITY | Rule.NEIGHBOUR,
    9: Rule.ALL,
}

DEFAULT_Q = (0.02, 0.06, 0.10, 0.14)
DEFAULT_QF = (0.02, 0.04, 0.06, 0.08)


def algorithm_ruleset(n: int) -> Rule:
    """Rule mask of detection algorithm ``n`` (0 = no detection)."""
    if n not in ALGORITHMS:
        raise ValueError(f"algorithm must be in 0..9, got {n}")
    return ALGORITHMS[n]


# keys accepted in config files / overrides, mapped to (section, field)
def _override_keys() -> dict[str, tuple[str, str]]:
    keys = {}
    for f in fields(SimParams):
        if f.name not in ("q", "duration", "seed"):
            keys[f.name] = ("sim", f.name)
    for f in fields(SignalParams):
        keys[f.name] = ("signals", f.name)
    for f in fields(DetectionParams):
        if f.name not in ("rule_set", "filtering"):
            keys[f.name] = ("detection", f.name)
    keys["collusion"] = ("attack", "collusion")
    keys["sybil_v_min"] = ("attack", "v_min")
    keys["sybil_v_max"] = ("attack", "v_max")
    keys["stopped_lifetime_s"] = ("attack", "stopped_lifetime_s")
    keys["noise"] = ("run", "noise")
    keys["ledger_scope"] = ("run", "ledger_scope")
    return keys


OVERRIDE_KEYS = _override_keys()
PLAN_KEYS = ("algorithms", "q", "qf", "seeds", "duration", "base_seed")


@dataclass(frozen=True)
class ExperimentPlan:
    algorithms: tuple[int, ...] = tuple(range(10))
    q_values: tuple[float, ...] = DEFAULT_Q
    qf_values: tuple[float, ...] = DEFAULT_QF
    replications: int = 20
    duration: int = 600
    base_seed: int = 2016
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        for a in self.algorithms:
            algorithm_ruleset(a)
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.duration < 1:
            raise ValueError("duration must be at least 1 s")
        for key in self.overrides:
            if key not in OVERRIDE_KEYS:
                raise KeyError(f"unknown config key: {key!r}")

    def cells(self) -> list[tuple[int, float, float, int]]:
        return [
            (a, q, qf, rep)
            for a in self.algorithms
            for q in self.q_values
            for qf in self.qf_values
            for rep in range(self.replications)
        ]


def cell_seed(base_seed: int, q: float, q_f: float, replication: int) -> int:
    """Seed of one replication of a (q, q_F) cell.

    The algorithm is deliberately not part of the key: all algorithms of a
    cell see the same demand and the same attack (common random numbers), and
    adding algorithms or intensities never perturbs other cells.
    """
    key = f"{base_seed}|{q:.6f}|{q_f:.6f}|{replication}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little") >> 1


def _coerce(value, like):
    if isinstance(like, bool):
        if isinstance(value, str):
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        return bool(value)
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def build_config(algorithm: int, q: float, q_f: float, duration: int = 600,
                 overrides: dict | None = None) -> RunConfig:
    """Run configuration for one cell, with flat-key overrides applied."""
    sim, sig, det = SimParams(q=q, duration=duration), SignalParams(), DetectionParams()
    attack = AttackConfig(q_f=q_f)
    run_kw: dict = {}
    sections = {"sim": {}, "signals": {}, "detection": {}, "attack": {}}
    for key, value in (overrides or {}).items():
        if key not in OVERRIDE_KEYS:
            raise KeyError(f"unknown config key: {key!r}")
        section, name = OVERRIDE_KEYS[key]
        if section == "run":
            run_kw[name] = _coerce(value, getattr(RunConfig(), name))
        elif section == "attack" and name in ("v_min", "v_max"):
            sections["attack"][name] = float(value)
        else:
            target = {"sim": sim, "signals": sig, "detection": det, "attack": attack}[section]
            sections[section][name] = _coerce(value, getattr(target, name))
    vr = list(attack.velocity_range)
    if "v_min" in sections["attack"]:
        vr[0] = sections["attack"].pop("v_min")
    if "v_max" in sections["attack"]:
        vr[1] = sections["attack"].pop("v_max")
    attack = replace(attack, velocity_range=tuple(vr), **sections["attack"])
    rules = algorithm_ruleset(algorithm)
    det = replace(det, rule_set=rules, filtering=algorithm != 0, **sections["detection"])
    return RunConfig(
        sim=replace(sim, **sections["sim"]),
        signals=replace(sig, **sections["signals"]),
        detection=det,
        attack=attack,
        algorithm=algorithm,
        **run_kw,
    )


def run_cell(algorithm: int, q: float, q_f: float, seed: int, duration: int = 600,
             overrides: dict | None = None) -> RunResult:
    result = run(build_config(algorithm, q, q_f, duration, overrides), seed)
    result.config = dict(overrides or {})
    return result


def run_experiment(plan: ExperimentPlan, progress: Callable[[int, int], None] | None = None,
                   workers: int = 1) -> list[RunResult]:
    """One :class:`RunResult` per (algorithm, q, q_F, replication), in plan order."""
    jobs = [
        (a, q, qf, cell_seed(plan.base_seed, q, qf, rep), plan.duration, dict(plan.overrides))
        for a, q, qf, rep in plan.cells()
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_run_job, jobs, chunksize=4))
    results = []
    for k, job in enumerate(jobs):
        results.append(_run_job(job))
        if progress:
            progress(k + 1, len(jobs))
    return results


def _run_job(job) -> RunResult:
    return run_cell(*job)


# --- persistence ------------------------------------------------------------

def results_csv(results: Iterable[RunResult]) -> str:
    lines = [CSV_HEADER] + [r.csv_row() for r in results]
    return "\n".join(lines) + "\n"


def read_results(path) -> list[dict]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        return [parse_csv_row(line) for line in fh if line.strip()]


AGG_HEADER = (
    "algorithm,q,qF,runs,total_delay_s,mean_delay_s,"
    "pct_malicious_detected,pct_true_recognized,vehicles"
)


def aggregate(rows: Iterable[dict]) -> list[dict]:
    """Average runs over seeds, one entry per (algorithm, q, qF), sorted."""
    groups = defaultdict(list)
    for row in rows:
        groups[row["algorithm"], round(row["q"], 6), round(row["qF"], 6)].append(row)
    out = []
    for (a, q, qf), rs in sorted(groups.items()):
        avg = {k: float(np.mean([r[k] for r in rs])) for k in
               ("total_delay_s", "mean_delay_s", "pct_malicious_detected", "pct_true_recognized", "vehicles")}
        out.append({"algorithm": a, "q": q, "qF": qf, "runs": len(rs), **avg})
    return out


def aggregate_csv(rows: Iterable[dict]) -> str:
    lines = [AGG_HEADER]
    for r in aggregate(rows):
        lines.append(
            f"{r['algorithm']},{r['q']:.4f},{r['qF']:.4f},{r['runs']},{r['total_delay_s']:.3f},"
            f"{r['mean_delay_s']:.6f},{r['pct_malicious_detected']:.6f},"
            f"{r['pct_true_recognized']:.6f},{r['vehicles']:.3f}"
        )
    return "\n".join(lines) + "\n"


def write_outputs(results: list[RunResult], out: str | Path) -> tuple[Path, Path]:
    """Write ``<out>`` (one row per run) and ``<out stem>_aggregate.csv``."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(results_csv(results))
    agg = out.with_name(out.stem + "_aggregate" + out.suffix)
    rows = [parse_csv_row(r.csv_row()) for r in results]
    agg.write_text(aggregate_csv(rows))
    return out, agg


# --- config files -----------------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PLAN_KEYS and key not in OVERRIDE_KEYS:
            raise KeyError(f"unknown config key: {key!r} (line {n})")
        out[key] = value
    return out


def _floats(s) -> tuple[float, ...]:
    if isinstance(s, (list, tuple)):
        return tuple(float(v) for v in s)
    return tuple(float(v) for v in str(s).replace(",", " ").split())


def _ints(s) -> tuple[int, ...]:
    if isinstance(s, (list, tuple)):
        return tuple(int(v) for v in s)
    return tuple(int(v) for v in str(s).replace(",", " ").split())


def plan_from_mapping(values: dict) -> ExperimentPlan:
    kw: dict = {}
    overrides = {}
    for key, value in values.items():
        if key == "algorithms":
            kw["algorithms"] = _ints(value)
        elif key == "q":
            kw["q_values"] = _floats(value)
        elif key == "qf":
            kw["qf_values"] = _floats(value)
        elif key == "seeds":
            kw["replications"] = int(value)
        elif key == "duration":
            kw["duration"] = int(value)
        elif key == "base_seed":
            kw["base_seed"] = int(value)
        elif key in OVERRIDE_KEYS:
            overrides[key] = value
        else:
            raise KeyError(f"unknown config key: {key!r}")
    return ExperimentPlan(overrides=overrides, **kw)


# --- report tables ------------------------------------------------------------

def report_tables(rows: list[dict]) -> str:
    """Text tables matching the three result figures.

    * detection accuracy per algorithm for the lowest and highest q_F,
    * delay per algorithm averaged over all intensities,
    * mean delay per algorithm against q for the lowest and highest q_F.
    """
    agg = aggregate(rows)
    algs = sorted({r["algorithm"] for r in agg})
    qs = sorted({r["q"] for r in agg})
    qfs = sorted({r["qF"] for r in agg if r["qF"] > 0}) or sorted({r["qF"] for r in agg})
    buf = io.StringIO()
    edge_qf = [qfs[0], qfs[-1]] if len(qfs) > 1 else qfs

    buf.write("Detection accuracy [%] (averaged over q)\n")
    for qf in edge_qf:
        buf.write(f"  qF = {qf:.2f}\n  alg  malicious_detected  true_recognized\n")
        for a in algs:
            sel = [r for r in agg if r["algorithm"] == a and r["qF"] == qf]
            if sel:
                m = np.mean([r["pct_malicious_detected"] for r in sel])
                t = np.mean([r["pct_true_recognized"] for r in sel])
                buf.write(f"  {a:>3}  {m:18.2f}  {t:15.2f}\n")

    buf.write("\nAverage delay over all q and qF\n  alg  total_delay_s  mean_delay_s\n")
    for a in algs:
        sel = [r for r in agg if r["algorithm"] == a and r["qF"] in qfs]
        if sel:
            buf.write(f"  {a:>3}  {np.mean([r['total_delay_s'] for r in sel]):13.1f}"
                      f"  {np.mean([r['mean_delay_s'] for r in sel]):12.3f}\n")
    base = [r for r in agg if r["qF"] == 0]
    if base:
        buf.write(f"  no attack  {np.mean([r['total_delay_s'] for r in base]):9.1f}"
                  f"  {np.mean([r['mean_delay_s'] for r in base]):12.3f}\n")

    buf.write("\nMean delay [s/veh] against q\n")
    for qf in edge_qf:
        buf.write(f"  qF = {qf:.2f}\n  alg " + "".join(f"  q={q:.2f}" for q in qs) + "\n")
        for a in algs:
            cells = {r["q"]: r["mean_delay_s"] for r in agg if r["algorithm"] == a and r["qF"] == qf}
            if cells:
                buf.write(f"  {a:>3} " + "".join(
                    f"  {cells[q]:6.2f}" if q in cells else "       -" for q in qs) + "\n")
    return buf.getvalue()
