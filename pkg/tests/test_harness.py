import json

import pytest

from stabcolor.core import build_topology, from_edges
from stabcolor.harness import ConfigError, ExperimentConfig, build_config, run_experiment
from stabcolor.harness.cli import main, replay_trace
from stabcolor.harness.config import env_overrides, parse_seeds
from stabcolor.harness.experiment import EXIT_CLOSURE, EXIT_NOT_CONVERGED, exit_code_for, loglog_slope
from stabcolor.harness.export import dot_text
from stabcolor.simnet import Schedule, clean_configuration, run_trial, seed_adversary


def test_config_yaml_round_trip():
    cfg = ExperimentConfig(topology="gnp", n=12, k=(0, 4), seeds=(3, 5), closure_rounds=7, out="x")
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="colour"):
        ExperimentConfig.loads("colour: red\n")
    with pytest.raises(ConfigError):
        env_overrides({"STABCOLOR_BOGUS": "1"})


@pytest.mark.parametrize(
    "text",
    ["topology: torus", "n: 1", "k: [-1]", "p: 0", "seeds: [1, 1]", "deliver_p: 2", "n: many", "transport: pigeon"],
)
def test_invalid_values_rejected(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.loads(text)


def test_seed_forms():
    assert parse_seeds(3) == (0, 1, 2)
    assert parse_seeds("4") == (0, 1, 2, 3)
    assert parse_seeds("2-4") == (2, 3, 4)
    assert parse_seeds("1,5,9") == (1, 5, 9)
    assert parse_seeds([7, 8]) == (7, 8)


def test_precedence_defaults_file_env_flags(tmp_path):
    f = tmp_path / "exp.yaml"
    f.write_text("n: 10\nk: [1, 2]\nschedule: sync\n")
    cfg = build_config(f, {}, environ={})
    assert (cfg.n, cfg.k, cfg.schedule, cfg.topology) == (10, (1, 2), "sync", "ring")
    cfg = build_config(f, {}, environ={"STABCOLOR_N": "12", "OTHER": "x"})
    assert cfg.n == 12 and cfg.k == (1, 2)
    cfg = build_config(f, {"n": "14", "k": None}, environ={"STABCOLOR_N": "12"})
    assert cfg.n == 14 and cfg.k == (1, 2)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        build_config(tmp_path / "nope.yaml", {}, environ={})


def test_path2_experiment_has_one_row(tmp_path):
    cfg = ExperimentConfig(topology="path", n=2, k=(0,), schedule="sync", seeds=(0,), out=str(tmp_path))
    result = run_experiment(cfg)
    assert len(result.rows) == 1 and result.exit_code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["per_k"]["0"]["trials"] == 1
    assert (tmp_path / "trials.jsonl").read_text().count("\n") == 1


def test_summary_is_reproducible_and_worker_independent(tmp_path):
    base = dict(topology="gnp", n=8, p=0.4, k=(0, 3), seeds=(0, 1, 2), closure_rounds=3)
    a = run_experiment(ExperimentConfig(**base, out=str(tmp_path / "a")))
    b = run_experiment(ExperimentConfig(**base, out=str(tmp_path / "b"), workers=2))
    sa = (tmp_path / "a" / "summary.json").read_text()
    sb = json.loads((tmp_path / "b" / "summary.json").read_text())
    sb["config"]["out"] = str(tmp_path / "a")
    sb["config"]["workers"] = 1
    assert json.loads(sa) == sb
    assert [r[2] for r in a.rows] == [r[2] for r in b.rows]


def test_exit_codes():
    assert exit_code_for([], []) == 0
    assert exit_code_for([[0, 1]], []) == EXIT_NOT_CONVERGED
    assert exit_code_for([], [[0, 1]]) == EXIT_CLOSURE


def test_loglog_slope():
    assert loglog_slope([1, 2, 4], [3, 6, 12]) == pytest.approx(1.0)
    assert loglog_slope([1, 2], [5, 5]) == pytest.approx(0.0)
    assert loglog_slope([1], [3]) is None


def test_cli_run_exit_ok(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("STABCOLOR_N", raising=False)
    code = main(["run", "--topology", "path", "--n", "3", "--k", "1", "--seeds", "2", "--out", str(tmp_path)])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["exit_code"] == 0


def test_cli_run_not_converged(tmp_path):
    code = main(["run", "--topology", "ring", "--n", "12", "--k", "4", "--seeds", "1", "--max-steps", "5"])
    assert code == EXIT_NOT_CONVERGED


def test_cli_config_error_exit_code(capsys):
    assert main(["run", "--topology", "torus"]) == 3
    assert "configuration error" in capsys.readouterr().err


def test_cli_trace_and_replay(tmp_path, capsys):
    code = main(["run", "--topology", "star", "--n", "5", "--k", "2", "--seeds", "1",
                 "--closure-rounds", "2", "--trace", str(tmp_path)])
    assert code == 0
    trace = tmp_path / "trace-k2-s0.jsonl"
    ok, msg = replay_trace(trace)
    assert ok, msg
    assert main(["replay", "--trace", str(trace)]) == 0


def test_replay_detects_tampering(tmp_path):
    assert main(["run", "--topology", "path", "--n", "3", "--k", "1", "--seeds", "1",
                 "--closure-rounds", "1", "--trace", str(tmp_path)]) == 0
    trace = tmp_path / "trace-k1-s0.jsonl"
    recs = [json.loads(x) for x in trace.read_text().splitlines()]
    recs[2]["phi"] += 1
    trace.write_text("".join(json.dumps(r) + "\n" for r in recs))
    ok, msg = replay_trace(trace)
    assert not ok and "record 2" in msg


def test_dot_two_nodes_points_to_higher_id():
    topo = from_edges(2, [(0, 1)], [2, 1])
    text = dot_text(clean_configuration(topo))
    assert "1 -> 0;" in text and "WARNING" not in text


def test_dot_star_orientation():
    topo = build_topology("star", 5, seed=1)
    rep, sim = run_trial(topo, 2, schedule=Schedule("random", seed=1), seed=1, closure_rounds=2, record=True)
    assert rep.reached
    text = dot_text(sim.snapshot())
    arcs = [line.strip().rstrip(";") for line in text.splitlines() if "->" in line]
    assert len(arcs) == 4
    for arc in arcs:
        a, b = (int(x) for x in arc.split(" -> "))
        assert topo.ids[b] > topo.ids[a]


def test_dot_unconverged_has_warning():
    topo = build_topology("ring", 6, seed=0)
    cfg = seed_adversary(topo, 3, seed=0)
    text = dot_text(cfg)
    assert "WARNING" in text


def test_cli_export_dot(tmp_path):
    target = tmp_path / "o.dot"
    code = main(["export-dot", "--topology", "path", "--n", "2", "--k", "0", "--seeds", "1",
                 "--closure-rounds", "1", "--dot", str(target)])
    assert code == 0
    assert target.read_text().startswith("digraph")
