import io
import json
import subprocess
import sys

import numpy as np
import pytest

from trca.cli import bundled_configs, main
from trca.graph import SummaryGraph, check_assumption5, collapse_to_summary, from_json, to_json
from trca.simulator import GroundTruthTrace, cycle_fixture
from trca.timeseries import load_panel, save_panel


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cycle_files(tmp_path):
    fx = cycle_fixture()
    graph = tmp_path / "graph.json"
    graph.write_text(to_json(collapse_to_summary(fx.graph)), encoding="utf-8")
    bits = tmp_path / "bits.csv"
    save_panel(fx.online, bits)
    return graph, bits


@pytest.fixture(scope="module")
def violated_trial(tmp_path_factory):
    out = tmp_path_factory.mktemp("violated")
    code = main(["simulate", "--scenario", "online_assumption5_violated", "--seed", "3",
                 "--offline-length", "3000", "--online-length", "30", "-o", str(out)])
    assert code == 0
    return out


# -- detect ------------------------------------------------------------------

def test_detect_cycle_example(capsys, tmp_path, cycle_files):
    graph, bits = cycle_files
    code, out, _ = run(capsys, "detect", graph, bits, "--bits", "-o", tmp_path / "r")
    assert code == 0
    report = json.loads((tmp_path / "r" / "report.json").read_text())
    assert report["root_causes"] == ["X", "Z"]
    assert "root causes: X, Z" in out


def test_detect_all_zero_panel(capsys, tmp_path):
    graph = tmp_path / "g.txt"
    graph.write_text("a\nb\na -> b\n", encoding="utf-8")
    data = tmp_path / "on.csv"
    data.write_text("t,a,b\n0,0.1,0.2\n1,0.3,0.1\n", encoding="utf-8")
    thr = tmp_path / "thr.toml"
    thr.write_text('"a" = 0.9\n"b" = 0.9\n', encoding="utf-8")
    code, out, _ = run(capsys, "detect", graph, data, "--thresholds", thr, "-o", tmp_path / "r")
    assert code == 0
    report = json.loads((tmp_path / "r" / "report.json").read_text())
    assert report["root_causes"] == [] and report["anomalies"] == []
    assert "(none)" in out


def test_detect_vertex_mismatch(capsys, tmp_path, cycle_files):
    graph, _ = cycle_files
    data = tmp_path / "on.csv"
    data.write_text("W,X,Q\n0,1,0\n", encoding="utf-8")
    code, _, err = run(capsys, "detect", graph, data, "--bits", "-o", tmp_path / "r")
    assert code == 3
    assert "in data but not in graph: Q" in err and "in graph but not in data: Y, Z" in err


def test_agent_with_trace_fixer(capsys, tmp_path, violated_trial):
    on = violated_trial / "online"
    code, out, _ = run(capsys, "detect", on / "graph.json", on / "bits.csv", "--bits", "--agent",
                       "--fixer", "trace", "--trace", on / "trace.json", "-o", tmp_path / "r")
    assert code == 0
    report = json.loads((tmp_path / "r" / "report.json").read_text())
    trace = GroundTruthTrace.from_json((on / "trace.json").read_text())
    assert len(report["iterations"]) == 2
    assert set(report["root_causes"]) == trace.root_vertices
    assert "agent rounds: 2" in out


def test_agent_limit_gives_exit_4(capsys, tmp_path, violated_trial):
    on = violated_trial / "online"
    code, out, _ = run(capsys, "detect", on / "graph.json", on / "bits.csv", "--bits", "--agent",
                       "--fixer", "trace", "--trace", on / "trace.json", "--max-iterations", 1,
                       "-o", tmp_path / "r")
    assert code == 4
    assert "stopped with anomalies left" in out
    assert json.loads((tmp_path / "r" / "report.json").read_text())["complete"] is False


def test_manual_fixer_protocol(capsys, tmp_path, monkeypatch):
    graph = tmp_path / "g.txt"
    graph.write_text("X\nY\nZ\nZ -> Y\nY -> X\n", encoding="utf-8")
    first = tmp_path / "on.csv"
    first.write_text("X,Y,Z\n0,0,1\n0,1,0\n1,0,0\n1,0,0\n", encoding="utf-8")
    second = tmp_path / "fixed1.csv"
    second.write_text("X,Y,Z\n0,0,0\n0,0,0\n0,0,0\n1,0,0\n", encoding="utf-8")
    third = tmp_path / "fixed2.csv"
    third.write_text("X,Y,Z\n0,0,0\n0,0,0\n0,0,0\n0,0,0\n", encoding="utf-8")
    monkeypatch.setattr(sys, "stdin", io.StringIO(f"{second}\n{third}\n"))
    code, out, _ = run(capsys, "detect", graph, first, "--bits", "--agent", "--fixer", "manual",
                       "-o", tmp_path / "r")
    assert code == 0
    assert out.count("fix: ") == 2
    assert "fix: Z\n" in out and "fix: X,Z\n" in out
    report = json.loads((tmp_path / "r" / "report.json").read_text())
    assert report["root_causes"] == ["X", "Z"]


def test_manual_fixer_that_adds_anomalies(capsys, tmp_path, monkeypatch):
    graph = tmp_path / "g.txt"
    graph.write_text("X\nY\nY -> X\n", encoding="utf-8")
    first = tmp_path / "on.csv"
    first.write_text("X,Y\n0,1\n0,0\n", encoding="utf-8")
    worse = tmp_path / "worse.csv"
    worse.write_text("X,Y\n1,1\n1,1\n", encoding="utf-8")
    monkeypatch.setattr(sys, "stdin", io.StringIO(f"{worse}\n"))
    code, _, err = run(capsys, "detect", graph, first, "--bits", "--agent", "--fixer", "manual",
                       "-o", tmp_path / "r")
    assert code == 3 and "new anomalies" in err


def test_detect_flag_validation(capsys, tmp_path, cycle_files):
    graph, bits = cycle_files
    assert run(capsys, "detect", graph, bits, "-o", tmp_path)[0] == 2
    assert run(capsys, "detect", graph, bits, "--bits", "--fixer", "trace", "-o", tmp_path)[0] == 2
    assert run(capsys, "detect", graph, bits, "--bits", "--agent", "--fixer", "trace",
               "-o", tmp_path)[0] == 2
    assert run(capsys, "detect", tmp_path / "missing.json", bits, "--bits", "-o", tmp_path)[0] == 3


# -- discover ----------------------------------------------------------------

def test_discover_recovers_simulated_graph(capsys, tmp_path, violated_trial):
    off = violated_trial / "offline"
    code, out, _ = run(capsys, "discover", off / "panel.csv", "--thresholds",
                       violated_trial / "thresholds.toml", "--history", 5, "--audit",
                       "-o", tmp_path / "g")
    assert code == 0
    learned = from_json((tmp_path / "g" / "graph.json").read_text())
    truth = collapse_to_summary(from_json((off / "graph.json").read_text()))
    assert isinstance(learned, SummaryGraph)
    tp = len(learned.edges & truth.edges)
    f1 = 2 * tp / (len(learned.edges) + len(truth.edges))
    assert f1 >= 0.9
    for name in ("window_graph.json", "graph.txt", "thresholds.toml", "audit.jsonl"):
        assert (tmp_path / "g" / name).exists()
    first = json.loads((tmp_path / "g" / "audit.jsonl").read_text().splitlines()[0])
    assert {"target", "source", "lag", "condition", "p_value"} <= set(first)


def test_discover_then_detect_with_quantiles(capsys, tmp_path, violated_trial):
    off, on = violated_trial / "offline", violated_trial / "online"
    assert run(capsys, "discover", off / "panel.csv", "--proportion", 0.9, "--normalize",
               "-o", tmp_path / "g")[0] == 0
    code, _, _ = run(capsys, "detect", tmp_path / "g" / "graph.json", on / "panel.csv",
                     "--thresholds", tmp_path / "g" / "thresholds.toml",
                     "--reference", off / "panel.csv", "-o", tmp_path / "r")
    assert code == 0
    report = json.loads((tmp_path / "r" / "report.json").read_text())
    assert set(report["root_causes"]) <= set(report["anomalies"])


def test_discover_rejects_alpha_one(capsys, tmp_path, violated_trial):
    code, _, err = run(capsys, "discover", violated_trial / "offline" / "panel.csv",
                       "--proportion", 0.9, "--alpha", 1.0, "-o", tmp_path)
    assert code == 2 and "alpha must be in (0,1)" in err


def test_discover_data_errors(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,x\n", encoding="utf-8")
    code, _, err = run(capsys, "discover", bad, "--proportion", 0.9, "-o", tmp_path / "g")
    assert code == 3 and "row 2" in err and "column 2" in err
    code, _, err = run(capsys, "discover", tmp_path / "none.csv", "--proportion", 0.9, "-o", tmp_path)
    assert code == 3 and "cannot read" in err


# -- simulate ----------------------------------------------------------------

@pytest.mark.parametrize("generator,scenario", [
    ("tdscm", "online_assumption5_ok"),
    ("tdscm", "online_assumption5_violated"),
    ("linear", "online_assumption5_ok"),
])
def test_simulate_smoke(capsys, tmp_path, generator, scenario):
    seed = 2
    code, out, _ = run(capsys, "simulate", "--generator", generator, "--scenario", scenario,
                       "--seed", seed, "--offline-length", 500, "--online-length", 40,
                       "-o", tmp_path)
    assert code == 0 and "online root causes" in out
    for part in ("offline", "online"):
        assert (tmp_path / part / "panel.csv").exists()
        assert (tmp_path / part / "graph.json").exists()
        panel = load_panel(tmp_path / part / "panel.csv")
        assert panel.T == (500 if part == "offline" else 40)
    doc = json.loads((tmp_path / "online" / "trace.json").read_text())
    g = collapse_to_summary(from_json((tmp_path / "online" / "graph.json").read_text()))
    if generator == "tdscm":
        trace = GroundTruthTrace.from_json((tmp_path / "online" / "trace.json").read_text())
        bits = load_panel(tmp_path / "online" / "bits.csv").values
        assert np.all(trace.i_draws <= bits)
        anomalies = {v for v, row in zip(trace.names, bits) if row.any()}
        ok = check_assumption5(g, trace.root_vertices, anomalies)[0]
    else:
        ok = check_assumption5(g, doc["root_causes"], doc["anomalies"])[0]
    assert ok == (scenario == "online_assumption5_ok")


def test_simulate_bad_generator(capsys, tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["simulate", "--generator", "quantum", "-o", str(tmp_path)])
    assert err.value.code == 2


# -- evaluate / sweep --------------------------------------------------------

def test_bundled_configs_listed():
    assert {"desk_true_thresholds.toml", "desk_agent.toml", "offset_sweep.toml",
            "linear_quantile_sweep.toml"} <= set(bundled_configs())


def test_dry_run(capsys, tmp_path):
    code, out, _ = run(capsys, "evaluate", "desk_true_thresholds", "--dry-run", "-o", tmp_path / "res")
    assert code == 0
    assert "planned runs: 30" in out
    assert not (tmp_path / "res").exists()
    code, out, _ = run(capsys, "sweep", "offset_sweep", "--dry-run")
    assert code == 0 and "true (reference)" in out


def test_evaluate_small(capsys, tmp_path):
    code, out, _ = run(capsys, "evaluate", "desk_true_thresholds", "--trials", 2, "--offline-length", 2000,
                       "--online-lengths", 10, 20, "--jobs", 1, "-o", tmp_path)
    assert code == 0
    assert "mean F1" in out
    assert {p.name for p in tmp_path.iterdir()} == {"rows.csv", "aggregates.csv", "f1.svg"}


def test_config_errors_listed_at_once(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('[experiment]\nn_trials = 0\ngenerator = "quantum"\nbogus = 1\n', encoding="utf-8")
    code, _, err = run(capsys, "evaluate", cfg)
    assert code == 2
    assert "n_trials" in err and "generator" in err and "bogus" in err
    code, _, err = run(capsys, "evaluate", "no_such_config")
    assert code == 2 and "bundled configs" in err
    code, _, _ = run(capsys, "sweep", "desk_true_thresholds", "--dry-run")
    assert code == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "trca", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "discover" in proc.stdout
