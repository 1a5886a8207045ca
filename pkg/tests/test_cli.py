import json
from pathlib import Path

import pytest

from app.core.errors import ExitCode
from app.main import build_parser, main

EDGE = {"n": 2, "edges": [[0, 1]]}
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _run(command, config, out, *extra):
    return main([command, "--config", config, "--out", str(out), "--quiet", *extra])


def _sim_document(**overrides):
    document = {
        "graph": {"kind": "path", "n": 3},
        "rates": [0.2, 0.1, 0.2],
        "horizon": 2000,
        "seed": 5,
        "record_every": 50,
    }
    document.update(overrides)
    return document


class TestParser:
    def test_every_command_registered(self):
        parser = build_parser()
        for command in ["simulate", "analyze-chain", "capacity", "compare", "drift"]:
            args = parser.parse_args([command, "--config", "x.json"])
            assert args.command == command

    def test_config_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["simulate"])


class TestSimulate:
    def test_writes_trace_and_summary(self, write_config, tmp_path):
        out = tmp_path / "out"
        assert _run("simulate", write_config(_sim_document()), out) == ExitCode.SUCCESS

        header = (out / "trace.csv").read_text().splitlines()[0]
        assert header == "slot,node,queue,attempt,success,weight,A_max,B_max"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["seed"] == 5
        assert summary["summary"]["horizon"] == 2000
        assert summary["stability"]["verdict"] in {"stable", "unstable", "inconclusive"}

    def test_repeat_runs_are_byte_identical(self, write_config, tmp_path):
        config = write_config(_sim_document())
        _run("simulate", config, tmp_path / "a")
        _run("simulate", config, tmp_path / "b")

        for name in ["trace.csv", "summary.json"]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_override(self, write_config, tmp_path):
        out = tmp_path / "out"
        _run("simulate", write_config(_sim_document()), out, "--seed", "11", "--horizon", "300")

        summary = json.loads((out / "summary.json").read_text())
        assert summary["resolved_config"]["seed"] == 11
        assert summary["summary"]["horizon"] == 300

    @pytest.mark.slow
    def test_path3_example_config_is_stable(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert _run("simulate", str(CONFIGS / "path3_stable.json"), out) == ExitCode.SUCCESS

        summary = json.loads((out / "summary.json").read_text())
        assert summary["stability"]["verdict"] == "stable"
        assert summary["summary"]["lipschitz_violations"] == 0
        assert "stable" in capsys.readouterr().out

    def test_missing_graph_file(self, write_config, tmp_path, capsys):
        config = write_config(_sim_document(graph={"file": "nowhere.json"}))
        assert _run("simulate", config, tmp_path / "out") == ExitCode.CONFIG_ERROR
        assert "error:" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert _run("simulate", str(tmp_path / "absent.json"), tmp_path / "out") == ExitCode.CONFIG_ERROR

    def test_rate_outside_unit_interval(self, write_config, tmp_path):
        config = write_config(_sim_document(rates=[0.2, 1.5, 0.2]))
        assert _run("simulate", config, tmp_path / "out") == ExitCode.CONFIG_ERROR


class TestAnalyzeChain:
    def test_edge_passes_every_check(self, write_config, tmp_path):
        out = tmp_path / "out"
        config = write_config({"graph": EDGE, "weights": [2.0, 2.0], "epsilon": 0.1})
        assert _run("analyze-chain", config, out) == ExitCode.SUCCESS

        report = json.loads((out / "chain_report.json").read_text())
        assert len(report["states"]) == 4
        assert sum(report["pi"]) == pytest.approx(1.0)
        assert "lambda" in report
        assert report["t_mix_log10"] == pytest.approx(82.953, abs=0.01)
        assert all(report["checks"].values())

        rows = (out / "stationary.csv").read_text().splitlines()
        assert rows[0] == "state,pi,qpi"
        assert len(rows) == 5

    def test_weights_override(self, write_config, tmp_path):
        out = tmp_path / "out"
        config = write_config({"graph": EDGE, "weights": [2.0, 2.0]})
        assert _run("analyze-chain", config, out, "--weights", "3", "5") == ExitCode.SUCCESS

        report = json.loads((out / "chain_report.json").read_text())
        assert report["resolved_config"]["weights"] == [3.0, 5.0]

    def test_skipped_conductance_is_not_a_failure(self, write_config, tmp_path, capsys):
        out = tmp_path / "out"
        config = write_config({"graph": {"kind": "path", "n": 5}, "weights": [2.0] * 5})
        assert _run("analyze-chain", config, out) == ExitCode.SUCCESS

        report = json.loads((out / "chain_report.json").read_text())
        assert report["checks"]["conductance_bound"] is None
        assert report["Phi"] is None
        assert "skipped" in capsys.readouterr().out

    def test_too_many_nodes(self, write_config, tmp_path):
        config = write_config({"graph": {"kind": "path", "n": 7}, "weights": [2.0] * 7})
        assert _run("analyze-chain", config, tmp_path / "out") == ExitCode.CAPABILITY_LIMIT

    def test_weight_count_mismatch(self, write_config, tmp_path):
        config = write_config({"graph": EDGE, "weights": [2.0]})
        assert _run("analyze-chain", config, tmp_path / "out") == ExitCode.CONFIG_ERROR

    def test_epsilon_out_of_range(self, write_config, tmp_path):
        config = write_config({"graph": EDGE, "weights": [2.0, 2.0]})
        assert _run("analyze-chain", config, tmp_path / "out", "--epsilon", "0.7") == ExitCode.CONFIG_ERROR


class TestCapacity:
    def test_margin_for_path(self, write_config, tmp_path):
        out = tmp_path / "out"
        config = write_config({"graph": {"kind": "path", "n": 3}, "rates": [0.3, 0.1, 0.3]})
        assert _run("capacity", config, out) == ExitCode.SUCCESS

        report = json.loads((out / "capacity.json").read_text())
        assert report["margin"] == pytest.approx(2.5)
        assert report["inside"] is True


class TestCompare:
    def test_two_schedulers(self, write_config, tmp_path):
        out = tmp_path / "out"
        config = write_config({
            "base": _sim_document(),
            "schedulers": [{"kind": "paper_mac"}, {"kind": "aloha", "p": 0.5}],
        })
        assert _run("compare", config, out) == ExitCode.SUCCESS

        report = json.loads((out / "compare.json").read_text())
        assert len(report["rows"]) == 2
        lines = (out / "compare.csv").read_text().splitlines()
        assert lines[0] == "scheduler,verdict,slope,mean_queue,max_queue"
        assert len(lines) == 3

    def test_empty_scheduler_list(self, write_config, tmp_path):
        config = write_config({"base": _sim_document(), "schedulers": []})
        assert _run("compare", config, tmp_path / "out") == ExitCode.CONFIG_ERROR


class TestDrift:
    def test_drift_with_estimator(self, write_config, tmp_path):
        out = tmp_path / "out"
        config = write_config({
            "base": {"graph": EDGE, "rates": [0.2, 0.2], "horizon": 100, "seed": 3},
            "runs": 3,
            "estimator": {"weights": [1.0, 1.0], "horizon": 1000, "record_every": 100},
        })
        assert _run("drift", config, out) == ExitCode.SUCCESS

        drift = json.loads((out / "drift.json").read_text())
        assert drift["runs"] == 3
        assert len(drift["deltas"]) == 3
        estimator = json.loads((out / "estimator.json").read_text())
        assert len(estimator["edges"]) == 2
        assert (out / "estimator.csv").read_text().splitlines()[0] == "slot,i,j,A,g_A,W_j"

    def test_estimator_weight_mismatch(self, write_config, tmp_path):
        config = write_config({
            "base": {"graph": EDGE, "rates": [0.2, 0.2], "horizon": 100},
            "runs": 2,
            "estimator": {"weights": [1.0, 1.0, 1.0], "horizon": 100},
        })
        assert _run("drift", config, tmp_path / "out") == ExitCode.CONFIG_ERROR
