"""Scenario parsing and the pipeline stages on short ladders."""

import glob

import numpy as np
import pytest

from spinsurf.pipelines import Check, ConfigError, Scenario, StageResult, run_scenario

BASE = {"space": "minkowski_r12", "family": "pseudosphere_r12", "pipeline": ["verify"]}


def scenario(**kw):
    return Scenario.from_dict(dict(BASE, **kw))


class TestScenario:
    def test_defaults(self):
        sc = scenario()
        assert sc.grid == [33, 65, 129]
        assert sc.name == "pseudosphere_r12"
        assert sc.tol("order") == 1.9

    def test_integer_grid_with_refinements(self):
        assert scenario(grid=17).grid == [17, 33, 65]
        assert scenario(grid=9, refinements=3).grid == [9, 17, 33, 65]

    def test_pipeline_string(self):
        assert scenario(pipeline="verify").pipeline == ["verify"]

    def test_tolerance_override(self):
        assert scenario(tolerances={"order": 1.5}).tol("order") == 1.5

    @pytest.mark.parametrize("path", sorted(glob.glob("scenarios/*.json")))
    def test_shipped_scenarios_load(self, path):
        sc = Scenario.load(path)
        assert sc.to_dict()["name"] == sc.name

    @pytest.mark.parametrize(
        "bad",
        [
            {"pipeline": []},
            {"grid": 17, "refinements": 0},
            {"form": "nonsense"},
            {"tolerances": {"speed": 1.0}},
            {"pipeline": ["correspond-lawson"], "space": "de_sitter", "family": "sphere_de_sitter"},
            {"pipeline": ["dirac"], "space": "de_sitter", "family": "sphere_de_sitter"},
            {"pipeline": ["correspond-calabi"]},
            {"pipeline": ["solve"], "space": "euclidean_r3", "family": "sphere_r3"},
            {"params": {"radius": -1.0}},
        ],
    )
    def test_rejected(self, bad):
        with pytest.raises(ConfigError):
            scenario(**bad)

    def test_missing_key(self):
        with pytest.raises(ConfigError, match="family"):
            Scenario.from_dict({"space": "minkowski_r12", "pipeline": ["verify"]})

    def test_not_an_object(self):
        with pytest.raises(ConfigError):
            Scenario.from_dict([1, 2])


class TestChecks:
    def test_stage_passed(self):
        r = StageResult()
        r.checks.append(Check("a", 1e-13, 1e-12))
        assert r.passed
        r.checks.append(Check("b", 1.8, 1.9, "min"))
        assert not r.passed
        assert r.to_dict()["checks"]["b"]["passed"] is False


class TestStages:
    def test_verify(self):
        report, res = run_scenario(scenario(grid=[33, 65]))
        assert report["passed"]
        st = res["verify"].studies["killing_residual"]
        assert st.values[1] < st.values[0]
        assert res["verify"].info["form"] == "r12_riemannian"

    def test_solve_reconstruct(self):
        report, res = run_scenario(scenario(pipeline=["solve", "reconstruct"], grid=[33, 65]))
        assert report["passed"], report
        names = set(res["solve"].studies)
        assert {"solution_error", "reconstruction_error", "integrability", "differential_defect"} <= names
        assert res["solve"].scene["imm"].points.shape[:2] == (65, 65)

    def test_quadric_reconstruction_checks(self):
        _, res = run_scenario(
            scenario(space="de_sitter", family="sphere_de_sitter", params={"height": 0.5},
                     pipeline=["solve", "reconstruct"], grid=[33, 65])
        )
        checks = {c.name: c for c in res["solve"].checks}
        assert checks["quadric"].passed and checks["quadric"].value <= 1e-10

    def test_dirac(self):
        _, res = run_scenario(
            scenario(space="lkt", family="horizontal_lkt", params={"kappa": -4.0, "tau": 1.0},
                     pipeline=["dirac"], tau=1.0, grid=[33, 65])
        )
        checks = {c.name: c for c in res["dirac"].checks}
        assert checks["ratio"].value <= 3.0

    def test_lawson(self):
        _, res = run_scenario(
            scenario(params={"radius": 1 / np.sqrt(2), "H": np.sqrt(2), "H2": 1.0},
                     pipeline=["correspond-lawson"], grid=[17, 33])
        )
        assert res["correspond-lawson"].passed
        assert res["correspond-lawson"].info["H2"] == pytest.approx(1.0, abs=1e-12)

    def test_calabi(self):
        _, res = run_scenario(
            Scenario.from_dict({"space": "euclidean_r3", "family": "enneper",
                                "pipeline": ["correspond-calabi"], "grid": [33, 65]})
        )
        r = res["correspond-calabi"]
        assert r.passed
        assert r.info["conformal_factor_min"] > 0
        assert r.info["maximal_H_constant"] > 0

    def test_failed_tolerance_recorded(self):
        report, _ = run_scenario(scenario(grid=[33, 65], tolerances={"order": 4.0}))
        assert report["passed"] is False
        chk = report["stages"]["verify"]["checks"]["order:killing_residual"]
        assert chk["kind"] == "min" and chk["passed"] is False
