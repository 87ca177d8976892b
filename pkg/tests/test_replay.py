import io

import numpy as np
import pytest

from vanetsig import cli, harness
from vanetsig.replay import (REPLAY_HEADER, format_signal_line, parse_signal_line, read_signal_trace,
                             replay, write_signal_trace)
from vanetsig.simulation import RunTrace, run
from vanetsig.vanet import read_trace, write_trace


def test_signal_line_round_trip(topo):
    red = np.random.default_rng(0).random((topo.n_roads, topo.n_cross)) < 0.5
    t, back = parse_signal_line(format_signal_line(7, red), topo)
    assert t == 7 and (back == red).all()
    with pytest.raises(ValueError):
        parse_signal_line("3, RGXG", topo)
    with pytest.raises(ValueError):
        parse_signal_line("3, RG GR", topo)


@pytest.fixture(scope="module")
def recorded():
    cfg = harness.build_config(9, 0.1, 0.06, 150)
    rec = RunTrace()
    run(cfg, 11, record=rec)
    return cfg, rec


def test_replay_reproduces_online_decisions(recorded):
    cfg, rec = recorded
    tr, sg = io.StringIO(), io.StringIO()
    write_trace(rec.batches, tr)
    write_signal_trace(((b.t, r) for b, r in zip(rec.batches, rec.red_seen)), sg)
    tr.seek(0)
    sg.seek(0)
    rows = list(replay(read_trace(tr), read_signal_trace(sg), cfg.detection))
    accepted = np.concatenate(rec.accepted)
    assert len(rows) == len(accepted)
    assert (np.array([r[3] for r in rows]) == ~accepted).all()


def test_replay_missing_signals_rejected(recorded):
    cfg, rec = recorded
    with pytest.raises(KeyError):
        list(replay(rec.batches[:5], {}, cfg.detection))


def test_cli_trace_and_replay(tmp_path):
    trace = tmp_path / "run.txt"
    assert cli.main(["run", "--alg", "9", "--q", "0.06", "--qf", "0.08", "--seeds", "1",
                     "--duration", "80", "--trace", str(trace), "--out", str(tmp_path / "r.csv")]) == 0
    signals = tmp_path / "run_signals.txt"
    assert signals.exists()
    out = tmp_path / "trust.csv"
    assert cli.main(["replay", str(trace), str(signals), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == REPLAY_HEADER
    n_reports = sum(1 for ln in trace.read_text().splitlines() if not ln.startswith("#"))
    assert len(lines) == n_reports + 1
    flags = {ln.split(",")[3] for ln in lines[1:]}
    assert flags <= {"0", "1"}
