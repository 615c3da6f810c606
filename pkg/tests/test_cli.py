import json
import subprocess
import sys
from pathlib import Path

import pytest

from ctrltree.cli import run_cli
from ctrltree.export import import_json

from test_ingest import CRUISE_CSV


@pytest.fixture
def cruise_csv(tmp_path) -> Path:
    path = tmp_path / "fig.csv"
    path.write_text(CRUISE_CSV)
    return path


@pytest.fixture
def cruise_meta(tmp_path) -> Path:
    path = tmp_path / "meta.json"
    path.write_text(json.dumps({
        "x_column_types": {"numeric": [0, 1, 2], "categorical": []},
        "x_column_names": ["v_o", "v_f", "d"]}))
    return path


class TestBuild:
    def test_stats_line(self, cruise_csv, capsys):
        code = run_cli(["build", "--controller", str(cruise_csv),
                        "--impurity", "entropy", "--determinize", "none",
                        "--stats"])
        assert code == 0
        assert capsys.readouterr().out.strip() == "nodes=5 inner=2 depth=2"

    def test_outputs_written(self, cruise_csv, cruise_meta, tmp_path, capsys):
        out_json = tmp_path / "tree.json"
        out_dot = tmp_path / "tree.dot"
        out_c = tmp_path / "tree.c"
        code = run_cli(["build", "--controller", str(cruise_csv),
                        "--metadata", str(cruise_meta),
                        "--out-json", str(out_json),
                        "--out-dot", str(out_dot),
                        "--out-c", str(out_c)])
        assert code == 0
        tree = import_json(out_json.read_text())
        assert len(tree.nodes) == 5
        assert out_dot.read_text().startswith("digraph")
        assert "int classify" in out_c.read_text()

    def test_safe_early_stop(self, cruise_csv, capsys):
        code = run_cli(["build", "--controller", str(cruise_csv),
                        "--determinize", "safe-early-stop", "--stats"])
        assert code == 0
        assert capsys.readouterr().out.strip() == "nodes=1 inner=0 depth=0"

    def test_missing_controller_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["build"])
        assert exc.value.code == 2

    def test_unreadable_file_is_domain_error(self, capsys):
        code = run_cli(["build", "--controller", "/nope/missing.csv", "--stats"])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_priority_flags(self, cruise_csv, capsys):
        code = run_cli(["build", "--controller", str(cruise_csv),
                        "--priority", "linear=0", "--priority", "axis=1",
                        "--stats"])
        assert code == 0

    def test_bad_priority_is_usage_error(self, cruise_csv):
        with pytest.raises(SystemExit) as exc:
            run_cli(["build", "--controller", str(cruise_csv),
                     "--priority", "axis"])
        assert exc.value.code == 2

    def test_config_file_with_flag_override(self, cruise_csv, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"determinize": "safe-early-stop"}))
        code = run_cli(["build", "--controller", str(cruise_csv),
                        "--config", str(config), "--stats"])
        assert code == 0
        assert capsys.readouterr().out.strip() == "nodes=1 inner=0 depth=0"
        code = run_cli(["build", "--controller", str(cruise_csv),
                        "--config", str(config), "--determinize", "none",
                        "--stats"])
        assert capsys.readouterr().out.strip() == "nodes=5 inner=2 depth=2"


class TestBench:
    def test_two_row_csv(self, cruise_csv, tmp_path, capsys):
        configs = tmp_path / "configs.json"
        configs.write_text(json.dumps([
            {"impurity": "entropy", "determinize": "none"},
            {"impurity": "entropy", "determinize": "safe-early-stop"}]))
        code = run_cli(["bench", "--controller", str(cruise_csv),
                        "--configs", str(configs), "--format", "csv"])
        assert code == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0].startswith("case,states,config")
        assert len(lines) == 3
        assert lines[1].split(",")[3] == "5"
        assert lines[2].split(",")[3] == "1"

    def test_markdown(self, cruise_csv, tmp_path, capsys):
        configs = tmp_path / "configs.json"
        configs.write_text(json.dumps([{"impurity": "gini"}]))
        code = run_cli(["bench", "--controller", str(cruise_csv),
                        "--configs", str(configs), "--format", "markdown"])
        assert code == 0
        assert "| case |" in capsys.readouterr().out


class TestSimulate:
    def test_interactive_loop(self, cruise_csv, cruise_meta, tmp_path):
        tree_path = tmp_path / "tree.json"
        assert run_cli(["build", "--controller", str(cruise_csv),
                        "--metadata", str(cruise_meta),
                        "--out-json", str(tree_path)]) == 0
        script = "0,0,5\nneu;0,0,5\nquit\n"
        proc = subprocess.run(
            [sys.executable, "-m", "ctrltree.cli", "simulate",
             "--tree", str(tree_path)],
            input=script, capture_output=True, text=True,
            cwd="/root/pkg")
        assert proc.returncode == 0
        assert "allowed: neu" in proc.stdout

    def test_disallowed_action_reported(self, cruise_csv, cruise_meta, tmp_path):
        tree_path = tmp_path / "tree.json"
        run_cli(["build", "--controller", str(cruise_csv),
                 "--metadata", str(cruise_meta), "--out-json", str(tree_path)])
        proc = subprocess.run(
            [sys.executable, "-m", "ctrltree.cli", "simulate",
             "--tree", str(tree_path)],
            input="0,0,5\nacc;0,0,5\nquit\n", capture_output=True, text=True,
            cwd="/root/pkg")
        assert proc.returncode == 0
        assert "DisallowedAction" in proc.stderr or "error" in proc.stderr


class TestServiceParity:
    def test_build_output_matches_service_export(self, cruise_csv, cruise_meta,
                                                 tmp_path):
        from fastapi.testclient import TestClient
        from ctrltree.service import create_app
        from test_service import wait_done

        out_json = tmp_path / "tree.json"
        out_dot = tmp_path / "tree.dot"
        assert run_cli(["build", "--controller", str(cruise_csv),
                        "--metadata", str(cruise_meta),
                        "--out-json", str(out_json),
                        "--out-dot", str(out_dot)]) == 0

        with TestClient(create_app(tmp_path / "data")) as client:
            r = client.post("/api/v1/controllers", files={
                "csv": ("fig.csv", cruise_csv.read_bytes(), "text/csv"),
                "metadata": ("meta.json", cruise_meta.read_bytes(),
                             "application/json")})
            cid = r.json()["controller_id"]
            eid = client.post("/api/v1/experiments",
                              json={"controller_id": cid, "config": {}}
                              ).json()["experiment_id"]
            wait_done(client, eid)
            served_json = client.get(f"/api/v1/experiments/{eid}/tree").text
            served_dot = client.get(
                f"/api/v1/experiments/{eid}/export?format=dot").text
        assert out_json.read_text() == served_json
        assert out_dot.read_text() == served_dot


class TestExitCodes:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["frobnicate"])
        assert exc.value.code == 2

    def test_malformed_input_is_domain_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("not a controller\n")
        assert run_cli(["build", "--controller", str(bad), "--stats"]) == 1
