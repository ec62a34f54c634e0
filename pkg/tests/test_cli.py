"""CLI: level-set generation/nesting, eval pipeline, EAV command, exit codes."""

import json
from pathlib import Path

import pytest

from gridarena.cli import EXIT_CONFIG, EXIT_GENERATION, EXIT_OK, main
from gridarena.evaluation import MatchResult


def run_cli(*args):
    return main([str(a) for a in args])


def write_levels(tmp_path, env, count, seed=0):
    out = tmp_path / "levels"
    assert run_cli("gen", "--env", env, "--levels", count, "--seed", seed,
                   "--out", out) == EXIT_OK
    return out


class TestGen:
    def test_nesting_prefix_property(self, tmp_path):
        small = tmp_path / "small"
        large = tmp_path / "large"
        run_cli("gen", "--env", "traffic_navigation", "--levels", 3, "--seed", 7,
                "--out", small)
        run_cli("gen", "--env", "traffic_navigation", "--levels", 10, "--seed", 7,
                "--out", large)
        for i in range(1, 4):
            name = f"level_{i:05d}.txt"
            assert (small / name).read_bytes() == (large / name).read_bytes()

    def test_rerun_identical(self, tmp_path):
        a = write_levels(tmp_path / "a", "overcooked", 4, seed=3)
        b = write_levels(tmp_path / "b", "overcooked", 4, seed=3)
        for i in range(1, 5):
            name = f"level_{i:05d}.txt"
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_held_out_set_disjoint(self, tmp_path):
        out = tmp_path / "withtest"
        assert run_cli("gen", "--env", "overcooked", "--levels", 5, "--seed", 1,
                       "--out", out, "--test-set") == EXIT_OK
        train = {p.read_text() for p in out.glob("level_*.txt")}
        test = {p.read_text() for p in out.glob("test_*.txt")}
        assert len(list(out.glob("test_*.txt"))) == 100
        assert not train & test

    def test_generation_error_exit_code(self, tmp_path):
        code = run_cli("gen", "--env", "harvest_patch", "--levels", 1, "--seed", 0,
                       "--out", tmp_path / "x", "--patches", 14, "--radius", 7,
                       "--density", 0.95)
        assert code == EXIT_GENERATION

    def test_unknown_env_rejected_by_parser(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run_cli("gen", "--env", "quake", "--levels", 1, "--out", tmp_path / "y")
        assert exc.value.code == 2


def make_manifest(tmp_path, levels_dir, extra=None):
    manifest = {
        "env": "overcooked",
        "levels": {"dir": levels_dir.name},
        "populations": [
            {"id": "A", "kind": "diverse", "size": 2, "seed": 1},
            {"id": "B", "kind": "diverse", "size": 2, "seed": 2},
        ],
        "matches": 2,
        "horizon": 15,
        "seed": 5,
        "out_dir": "out",
    }
    manifest.update(extra or {})
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


class TestEval:
    def test_pipeline_outputs(self, tmp_path):
        levels = write_levels(tmp_path, "overcooked", 2, seed=0)
        manifest = make_manifest(tmp_path, levels)
        assert run_cli("eval", "--manifest", manifest) == EXIT_OK
        out = tmp_path / "out"
        lines = (out / "matches.jsonl").read_text().splitlines()
        assert len(lines) == 2 * 2 * 2  # ordered pairs x matches
        for line in lines:
            MatchResult.from_json_line(line)
        assert (out / "reward_matrix.txt").exists()

    def test_worker_count_does_not_change_outputs(self, tmp_path):
        levels = write_levels(tmp_path, "overcooked", 2, seed=0)
        manifest = make_manifest(tmp_path, levels)
        run_cli("eval", "--manifest", manifest, "--workers", 1)
        one = (tmp_path / "out" / "matches.jsonl").read_bytes()
        run_cli("eval", "--manifest", manifest, "--workers", 2)
        two = (tmp_path / "out" / "matches.jsonl").read_bytes()
        assert one == two

    def test_ctf_emits_elo_and_win_matrix(self, tmp_path):
        levels = write_levels(tmp_path, "capture_the_flag", 1, seed=2)
        manifest = make_manifest(tmp_path, levels, extra={
            "env": "capture_the_flag", "horizon": 40, "matches": 1,
        })
        assert run_cli("eval", "--manifest", manifest) == EXIT_OK
        out = tmp_path / "out"
        assert (out / "win_matrix.txt").exists()
        assert (out / "ratings.txt").read_text().startswith("# elo ratings")

    def test_generalization_gap_report(self, tmp_path):
        levels = write_levels(tmp_path, "overcooked", 2, seed=0)
        test_dir = tmp_path / "heldout"
        run_cli("gen", "--env", "overcooked", "--levels", 2, "--seed", 99,
                "--out", test_dir)
        manifest = make_manifest(tmp_path, levels, extra={
            "test_levels": {"dir": "heldout"}, "matches": 1,
        })
        assert run_cli("eval", "--manifest", manifest) == EXIT_OK
        gaps = (tmp_path / "out" / "generalization_gaps.txt").read_text()
        assert gaps.splitlines()[0].startswith("population")
        assert len(gaps.splitlines()) == 3

    def test_manifest_errors(self, tmp_path):
        missing = tmp_path / "none.json"
        assert run_cli("eval", "--manifest", missing) == EXIT_CONFIG
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"env": "overcooked", "populations": [],
                                   "levels": []}))
        assert run_cli("eval", "--manifest", bad) == EXIT_CONFIG


class TestEavCommand:
    def test_single_member_population_zero(self, tmp_path, capsys):
        levels = write_levels(tmp_path, "traffic_navigation", 1, seed=0)
        manifest = make_manifest(tmp_path, levels, extra={
            "env": "traffic_navigation",
            "populations": [{"id": "solo", "kind": "uniform", "size": 1}],
            "horizon": 20,
        })
        assert run_cli("eav", "--manifest", manifest, "--eav-E", 1,
                       "--eav-J", 2, "--eav-R", 10) == EXIT_OK
        out = capsys.readouterr().out
        assert "solo\t0.0000" in out

    def test_deterministic_report(self, tmp_path, capsys):
        levels = write_levels(tmp_path, "traffic_navigation", 1, seed=0)
        manifest = make_manifest(tmp_path, levels, extra={
            "env": "traffic_navigation",
            "populations": [{"id": "A", "kind": "diverse", "size": 3, "seed": 4}],
            "horizon": 20,
        })
        capsys.readouterr()  # drain the gen command's output
        run_cli("eav", "--manifest", manifest, "--eav-E", 1, "--eav-J", 2,
                "--eav-R", 25, "--seed", 8)
        first = capsys.readouterr().out
        run_cli("eav", "--manifest", manifest, "--eav-E", 1, "--eav-J", 2,
                "--eav-R", 25, "--seed", 8)
        assert capsys.readouterr().out == first


class TestFeaturesCommand:
    def test_runs_and_prints_table(self, capsys):
        assert run_cli("features", "--env", "traffic_navigation",
                       "--samples", 5, "--seed", 1) == EXIT_OK
        out = capsys.readouterr().out
        assert "openness" in out and "num_walls" in out
