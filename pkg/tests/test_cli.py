"""Command line verbs, exit codes and reproducible artifacts."""

import json
import subprocess
import sys

import pytest

from spinsurf.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main

SMALL = {
    "name": "small_pseudosphere",
    "space": "minkowski_r12",
    "family": "pseudosphere_r12",
    "pipeline": ["solve", "reconstruct"],
    "grid": [33, 65],
}


def write(path, obj):
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return path


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestRun:
    def test_pass_and_artifacts(self, tmp_path, capsys):
        sc = write(tmp_path / "s.json", SMALL)
        assert main(["run", str(sc), "--out", str(tmp_path / "out")]) == EXIT_OK
        names = set(tree_bytes(tmp_path / "out"))
        assert {"report.json", "solve_scene.json", "solve_residuals.csv", "solve.obj", "solve.ply"} <= names
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["passed"] is True
        out = capsys.readouterr().out
        assert "PASS solve:unit_drift" in out and "FAIL" not in out

    def test_byte_identical_reruns(self, tmp_path):
        sc = write(tmp_path / "s.json", SMALL)
        for d in ("a", "b"):
            assert main(["run", str(sc), "--out", str(tmp_path / d)]) == EXIT_OK
        a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
        assert a.keys() == b.keys()
        assert all(a[k] == b[k] for k in a)

    def test_tolerance_failure_exits_one(self, tmp_path, capsys):
        sc = write(tmp_path / "s.json", dict(SMALL, tolerances={"order": 5.0}))
        assert main(["run", str(sc), "--out", str(tmp_path / "out")]) == EXIT_FAIL
        assert "FAIL solve:order:solution_error" in capsys.readouterr().out
        assert json.loads((tmp_path / "out" / "report.json").read_text())["passed"] is False

    @pytest.mark.parametrize(
        "content",
        [
            "{not json",
            {"space": "minkowski_r12", "family": "klein_bottle", "pipeline": ["verify"]},
            {"space": "de_sitter", "family": "pseudosphere_r12", "pipeline": ["verify"]},
            dict(SMALL, grid=[5, 9]),
            dict(SMALL, grid=[17]),
            dict(SMALL, pipeline=["reconstruct"]),
            dict(SMALL, pipeline=["bake"]),
            dict(SMALL, tolerances={"order": -1}),
            dict(SMALL, colour="red"),
        ],
    )
    def test_config_errors_exit_two(self, tmp_path, content, capsys):
        sc = write(tmp_path / "s.json", content)
        assert main(["run", str(sc), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.json")]) == EXIT_CONFIG

    def test_output_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SPINSURF_OUTPUT", str(tmp_path / "env"))
        sc = write(tmp_path / "s.json", dict(SMALL, pipeline=["verify"]))
        assert main(["run", str(sc)]) == EXIT_OK
        assert (tmp_path / "env" / "small_pseudosphere" / "report.json").is_file()


class TestSelftest:
    def test_passes(self, tmp_path, capsys):
        assert main(["selftest", "--out", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        for name in ("algebra", "isomorphisms", "catalog", "spinor"):
            assert f"PASS {name}" in out
        assert json.loads((tmp_path / "selftest.json").read_text())["passed"] is True

    def test_injected_sign_error_fails(self, tmp_path, capsys):
        assert main(["selftest", "--out", str(tmp_path), "--inject-sign-error", "1,2"]) == EXIT_FAIL
        assert "FAIL algebra" in capsys.readouterr().out
        # the injection is scoped to the run
        assert main(["selftest", "--out", str(tmp_path)]) == EXIT_OK


class TestExportAndCatalog:
    def test_export_scene(self, tmp_path, capsys):
        sc = write(tmp_path / "s.json", dict(SMALL, space="de_sitter", family="sphere_de_sitter",
                                             params={"height": 0.5}, pipeline=["verify"]))
        assert main(["run", str(sc), "--out", str(tmp_path / "run")]) == EXIT_OK
        scene = tmp_path / "run" / "verify_scene.json"
        assert main(["export", str(scene), "--format", "obj", "--out", str(tmp_path / "x")]) == EXIT_OK
        assert (tmp_path / "x" / "verify_scene.obj").is_file()
        assert (tmp_path / "x" / "verify_scene_r4.csv").is_file()

    def test_export_bad_scene(self, tmp_path):
        bad = write(tmp_path / "bad.json", {"u": [0]})
        assert main(["export", str(bad), "--format", "obj", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert main(["export", str(tmp_path / "none.json"), "--format", "ply"]) == EXIT_CONFIG

    def test_export_unknown_format_is_usage_error(self, tmp_path):
        assert main(["export", "x.json", "--format", "stl"]) == EXIT_CONFIG

    def test_catalog(self, capsys):
        assert main(["catalog"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert "su12" in json.dumps(data["spaces"])
        assert data["families"]["pseudosphere_r12"]["space"] == "minkowski_r12"

    def test_usage_errors(self):
        assert main([]) == EXIT_CONFIG
        assert main(["frobnicate"]) == EXIT_CONFIG
        assert main(["--help"]) == EXIT_OK

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "spinsurf", "catalog"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["families"]
