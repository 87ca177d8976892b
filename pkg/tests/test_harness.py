import numpy as np
import pytest

from vanetsig import cli, harness
from vanetsig.harness import ExperimentPlan, algorithm_ruleset, cell_seed
from vanetsig.trust import Rule


def test_table_mapping():
    want = {
        0: Rule.NONE, 1: Rule.ORDER, 2: Rule.NEIGHBOUR, 3: Rule.SIGNALS, 4: Rule.VELOCITY,
        5: Rule.ORDER | Rule.SIGNALS, 6: Rule.SIGNALS | Rule.NEIGHBOUR,
        7: Rule.ORDER | Rule.VELOCITY, 8: Rule.VELOCITY | Rule.NEIGHBOUR, 9: Rule.ALL,
    }
    assert {n: algorithm_ruleset(n) for n in range(10)} == want
    for bad in (-1, 10):
        with pytest.raises(ValueError):
            algorithm_ruleset(bad)


def test_algorithm_zero_disables_filtering():
    cfg = harness.build_config(0, 0.1, 0.02)
    assert not cfg.detection.filtering and cfg.detection.rule_set == Rule.NONE


def test_default_plan_size():
    assert len(ExperimentPlan().cells()) == 3200


def test_seeds_distinct_and_stable():
    plan = ExperimentPlan()
    seeds = {cell_seed(plan.base_seed, q, qf, rep)
             for _, q, qf, rep in plan.cells()}
    assert len(seeds) == 4 * 4 * 20
    assert cell_seed(1, 0.1, 0.02, 3) == cell_seed(1, 0.1, 0.02, 3)
    assert cell_seed(1, 0.1, 0.02, 3) != cell_seed(2, 0.1, 0.02, 3)


def test_single_cell_plan():
    plan = ExperimentPlan(algorithms=(9,), q_values=(0.02,), qf_values=(0.02,), replications=1, duration=60)
    csv = harness.results_csv(harness.run_experiment(plan))
    assert len(csv.strip().splitlines()) == 2


def test_identical_plans_identical_csv():
    plan = ExperimentPlan(algorithms=(0, 9), q_values=(0.06,), qf_values=(0.04,), replications=2, duration=90)
    assert harness.results_csv(harness.run_experiment(plan)) == harness.results_csv(harness.run_experiment(plan))


def test_cells_independent_of_plan_and_order():
    small = ExperimentPlan(algorithms=(9,), q_values=(0.06,), qf_values=(0.04,), replications=2, duration=90)
    big = ExperimentPlan(algorithms=(3, 9), q_values=(0.02, 0.06), qf_values=(0.04,), replications=2, duration=90)
    rows_small = harness.results_csv(harness.run_experiment(small)).splitlines()[1:]
    rows_big = harness.results_csv(harness.run_experiment(big)).splitlines()[1:]
    assert set(rows_small) <= set(rows_big)
    agg_a = harness.aggregate_csv(harness.parse_csv_row(r) for r in rows_big)
    agg_b = harness.aggregate_csv(harness.parse_csv_row(r) for r in reversed(rows_big))
    assert agg_a == agg_b


def test_parallel_matches_serial():
    plan = ExperimentPlan(algorithms=(0, 9), q_values=(0.06,), qf_values=(0.04,), replications=2, duration=60)
    assert (harness.results_csv(harness.run_experiment(plan, workers=2))
            == harness.results_csv(harness.run_experiment(plan)))


def test_unknown_key_named():
    with pytest.raises(KeyError, match="bogus"):
        ExperimentPlan(overrides={"bogus": 1})
    with pytest.raises(KeyError, match="colour"):
        harness.parse_config_text("q = 0.1\ncolour = red\n")


def test_config_file_round_trip(tmp_path):
    text = """
    # sweep
    algorithms = 0, 9
    q = 0.02 0.10
    qf = 0.04
    seeds = 3
    duration = 120
    min_green_s = 12   # controller
    collusion = true
    """
    plan = harness.plan_from_mapping(harness.parse_config_text(text))
    assert plan.algorithms == (0, 9) and plan.q_values == (0.02, 0.10) and plan.replications == 3
    cfg = harness.build_config(9, 0.1, 0.04, plan.duration, plan.overrides)
    assert cfg.signals.min_green_s == 12 and cfg.attack.collusion is True
    with pytest.raises(ValueError):
        harness.parse_config_text("just words")


def test_overrides_reach_the_run():
    base = harness.run_cell(0, 0.1, 0.0, 5, 200)
    slower = harness.run_cell(0, 0.1, 0.0, 5, 200, {"p": "0.5"})
    assert slower.total_delay > base.total_delay


def test_cli_run_and_report(tmp_path, capsys):
    out = tmp_path / "res.csv"
    assert cli.main(["run", "--alg", "0,9", "--q", "0.06", "--qf", "0.04", "--seeds", "2",
                     "--duration", "60", "--out", str(out), "--quiet"]) == 0
    rows = harness.read_results(out)
    assert len(rows) == 4
    agg = (tmp_path / "res_aggregate.csv").read_text().splitlines()
    assert agg[0] == harness.AGG_HEADER and len(agg) == 3
    capsys.readouterr()
    assert cli.main(["report", str(out)]) == 0
    text = capsys.readouterr().out
    assert "Detection accuracy" in text and "Mean delay" in text


def test_cli_rejects_unknown_key(capsys):
    assert cli.main(["run", "--set", "nonsense=1", "--seeds", "1"]) == 2
    assert "nonsense" in capsys.readouterr().err


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "plan.cfg"
    cfg.write_text("algorithms = 9\nq = 0.02\nqf = 0.02\nseeds = 1\nduration = 30\n")
    assert cli.main(["run", "--config", str(cfg), "--quiet"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("algorithm,q,qF") and len(lines) == 2


def test_report_tables_shape():
    rows = []
    for a in (0, 1, 9):
        for q in (0.02, 0.14):
            for qf in (0.0, 0.02, 0.08):
                rows.append(dict(algorithm=a, q=q, qF=qf, seed=1, total_delay_s=100.0 * (a + 1),
                                 mean_delay_s=1.0 + a, pct_malicious_detected=50.0 + a,
                                 pct_true_recognized=99.0, vehicles=10))
    text = harness.report_tables(rows)
    assert "qF = 0.02" in text and "qF = 0.08" in text and "no attack" in text
