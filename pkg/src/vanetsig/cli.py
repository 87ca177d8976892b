"""Command line: ``python -m vanetsig {run,replay,calibrate,report}``."""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import harness
from .calibrate import saturation_flow
from .metrics import parse_csv_row
from .replay import replay_files, write_signal_trace
from .simulation import RunTrace, run
from .vanet import write_trace


def _list(kind):
    def parse(s):
        return tuple(kind(v) for v in s.replace(",", " ").split())
    return parse


def _pairs(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _plan(args) -> harness.ExperimentPlan:
    values: dict = {}
    if args.config:
        values.update(harness.parse_config_text(Path(args.config).read_text()))
    for key, attr in (("algorithms", "alg"), ("q", "q"), ("qf", "qf"), ("seeds", "seeds"),
                      ("duration", "duration"), ("base_seed", "base_seed")):
        v = getattr(args, attr)
        if v is not None:
            values[key] = v
    values.update(_pairs(args.set))
    return harness.plan_from_mapping(values)


def cmd_run(args) -> int:
    plan = _plan(args)
    n = len(plan.cells())
    if args.trace:
        if n != 1:
            raise SystemExit("--trace needs a plan with exactly one run")
        a, q, qf, rep = plan.cells()[0]
        seed = harness.cell_seed(plan.base_seed, q, qf, rep)
        rec = RunTrace()
        result = run(harness.build_config(a, q, qf, plan.duration, plan.overrides), seed, record=rec)
        result.config = dict(plan.overrides)
        results = [result]
        trace = Path(args.trace)
        with open(trace, "w") as fh:
            write_trace(rec.batches, fh)
        with open(trace.with_name(trace.stem + "_signals" + trace.suffix), "w") as fh:
            write_signal_trace(((b.t, r) for b, r in zip(rec.batches, rec.red_seen)), fh)
    else:
        t0 = time.time()

        def progress(k, total):
            if not args.quiet and (k % 50 == 0 or k == total):
                print(f"\r{k}/{total} runs, {time.time() - t0:.0f} s", end="", file=sys.stderr)

        results = harness.run_experiment(plan, progress, workers=args.workers)
        if not args.quiet:
            print(file=sys.stderr)
    if args.out:
        out, agg = harness.write_outputs(results, args.out)
        print(f"wrote {out} and {agg}")
    else:
        sys.stdout.write(harness.results_csv(results))
    return 0


def cmd_replay(args) -> int:
    config = harness.build_config(args.alg, 0.0, 0.0, overrides=_pairs(args.set))
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        with open(args.trace) as tr, open(args.signals) as sg:
            replay_files(tr, sg, out, config.detection)
    finally:
        if args.out:
            out.close()
    return 0


def cmd_calibrate(args) -> int:
    sat = saturation_flow(args.queue, args.skip, args.replications, args.seed)
    print(f"saturation flow   {sat.flow_veh_h:7.0f} veh/h of green "
          f"(headway {sat.headway_s:.2f} s, {sat.replications} queues of {args.queue})")
    if args.vehicles:
        plan = harness.ExperimentPlan(algorithms=(0,), qf_values=(0.0,), replications=args.vehicles)
        res = harness.run_experiment(plan)
        mean = sum(r.vehicle_count for r in res) / len(res)
        print(f"vehicles per run  {mean:7.1f} (mean over q = "
              f"{', '.join(f'{q:g}' for q in plan.q_values)}; {len(res)} runs)")
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.csv:
        rows.extend(harness.read_results(path))
    if not rows:
        raise SystemExit("no result rows found")
    sys.stdout.write(harness.report_tables(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vanetsig", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute an experiment plan")
    r.add_argument("--config", help="flat key = value file")
    r.add_argument("--alg", type=_list(int), help="algorithms, e.g. 0,9")
    r.add_argument("--q", type=_list(float), help="true-vehicle intensities")
    r.add_argument("--qf", type=_list(float), help="false-vehicle intensities")
    r.add_argument("--seeds", type=int, help="replications per cell")
    r.add_argument("--duration", type=int, help="seconds per run")
    r.add_argument("--base-seed", type=int, dest="base_seed")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override")
    r.add_argument("--out", help="per-run CSV (aggregate is written next to it)")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--trace", help="save report and signal traces of a single run")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="trust engine on a saved trace")
    p.add_argument("trace")
    p.add_argument("signals")
    p.add_argument("--alg", type=int, default=9, help="rule set by algorithm number")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out")
    p.set_defaults(func=cmd_replay)

    c = sub.add_parser("calibrate", help="saturation flow and demand checks")
    c.add_argument("--queue", type=int, default=30)
    c.add_argument("--skip", type=int, default=4)
    c.add_argument("--replications", type=int, default=200)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--vehicles", type=int, default=0, metavar="SEEDS",
                   help="also count vehicles per run over the default q values")
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("report", help="tables from result CSVs")
    s.add_argument("csv", nargs="+")
    s.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
