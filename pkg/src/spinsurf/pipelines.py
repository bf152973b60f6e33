"""Scenario description and the refinement-ladder pipelines behind ``spinsurf run``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .chart import (
    FAMILY_NAMES,
    build_chart,
    chart_from_immersion,
    core,
    extract_geometry,
    get_family,
)
from .convergence import DEFAULT_LADDER, TOLERANCES, Study, check
from .correspondence import (
    CmcPair,
    WeierstrassData,
    calabi_map,
    catenoid_data,
    dirac_killing_roundtrip,
    enneper_data,
    lawson_inverse,
    lawson_rotate,
    weierstrass_surface,
    weierstrass_transform,
)
from .immersion import (
    align_anchor,
    ambient_positions,
    reconstruct,
    verify_immersion,
    xi_defect,
    xi_form,
)
from .lie import SpaceKind, UnsupportedKind
from .spinor import (
    FORMS,
    KillingEquation,
    dirac,
    residual_killing,
    restricted_spinor,
    solve_killing,
)

PIPELINES = ("verify", "solve", "reconstruct", "dirac", "correspond-lawson", "correspond-calabi")

# Weierstrass data: generator and default domain
WEIERSTRASS = {
    "enneper": (enneper_data, ((-0.4, 0.4), (-0.4, 0.4))),
    "catenoid": (catenoid_data, ((0.3, 1.0), (-0.5, 0.5))),
}


class ConfigError(ValueError):
    """Scenario is malformed or pairs incompatible space, family and pipeline."""


@dataclass
class Scenario:
    name: str
    space: str
    family: str
    pipeline: list[str]
    params: dict = field(default_factory=dict)
    grid: list[int] = field(default_factory=lambda: list(DEFAULT_LADDER))
    form: str | None = None
    tau: float = 0.0
    output: str | None = None
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise ConfigError("scenario must be a JSON object")
        unknown = set(d) - {
            "name", "space", "family", "pipeline", "params", "grid", "refinements",
            "form", "tau", "output", "tolerances",
        }
        if unknown:
            raise ConfigError(f"unknown scenario keys {sorted(unknown)}")
        for key in ("space", "family", "pipeline"):
            if key not in d:
                raise ConfigError(f"scenario is missing {key!r}")
        pipeline = d["pipeline"]
        if isinstance(pipeline, str):
            pipeline = [pipeline]
        grid = d.get("grid", list(DEFAULT_LADDER))
        if isinstance(grid, int):
            refinements = int(d.get("refinements", 2))
            if refinements < 1:
                raise ConfigError("refinement count must be at least 1")
            grid = [(grid - 1) * 2**k + 1 for k in range(refinements + 1)]
        sc = cls(
            name=str(d.get("name", d["family"])),
            space=str(d["space"]),
            family=str(d["family"]),
            pipeline=[str(p) for p in pipeline],
            params=dict(d.get("params", {})),
            grid=[int(n) for n in grid],
            form=d.get("form"),
            tau=float(d.get("tau", 0.0)),
            output=d.get("output"),
            tolerances=dict(d.get("tolerances", {})),
        )
        sc.validate()
        return sc

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
        return cls.from_dict(data)

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, TOLERANCES[key]))

    def validate(self) -> None:
        if not self.pipeline:
            raise ConfigError("empty pipeline")
        bad = [p for p in self.pipeline if p not in PIPELINES]
        if bad:
            raise ConfigError(f"unknown pipeline stages {bad}; choose from {PIPELINES}")
        if len(self.grid) < 2:
            raise ConfigError("the refinement ladder needs at least two grids")
        if any(n < 8 for n in self.grid):
            raise ConfigError("grids need at least 8 nodes per side")
        for k, v in self.tolerances.items():
            if k not in TOLERANCES:
                raise ConfigError(f"unknown tolerance {k!r}")
            if not float(v) > 0:
                raise ConfigError(f"tolerance {k!r} must be positive")
        if self.form is not None and self.form not in FORMS:
            raise ConfigError(f"unknown equation form {self.form!r}")
        if "correspond-calabi" in self.pipeline:
            if self.family not in WEIERSTRASS:
                raise ConfigError(f"calabi needs Weierstrass data {sorted(WEIERSTRASS)}")
            if self.space != "euclidean_r3":
                raise ConfigError("calabi scenarios start in euclidean_r3")
            if len(self.pipeline) > 1:
                raise ConfigError("correspond-calabi runs on its own")
            return
        if self.family not in FAMILY_NAMES:
            raise ConfigError(f"unknown family {self.family!r}")
        try:
            fam = get_family(self.family, self.params)
        except (KeyError, ValueError, UnsupportedKind) as exc:
            raise ConfigError(str(exc)) from exc
        if fam.space.name != self.space:
            raise ConfigError(
                f"family {self.family!r} lives in {fam.space.name}, not {self.space!r}"
            )
        if "reconstruct" in self.pipeline and "solve" not in self.pipeline:
            raise ConfigError("reconstruct needs the solve stage")
        if "correspond-lawson" in self.pipeline and self.space != "minkowski_r12":
            raise ConfigError("the Lawson rotation starts from a CMC surface in minkowski_r12")
        if "dirac" in self.pipeline and not fam.space.is_group:
            raise ConfigError("the Dirac equivalence is checked on group kinds")
        if self.space == "euclidean_r3" and set(self.pipeline) - {"verify"}:
            raise ConfigError("euclidean_r3 families only support verify")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "space": self.space,
            "family": self.family,
            "pipeline": list(self.pipeline),
            "params": self.params,
            "grid": list(self.grid),
            "form": self.form,
            "tau": self.tau,
            "tolerances": {k: self.tol(k) for k in sorted(TOLERANCES)},
        }


@dataclass
class Check:
    name: str
    value: float
    bound: float
    kind: str = "max"  # 'max': value <= bound, 'min': value >= bound

    @property
    def passed(self) -> bool:
        return check(self.value, self.bound, self.kind)

    def to_dict(self) -> dict:
        return {"value": self.value, "bound": self.bound, "kind": self.kind, "passed": self.passed}


@dataclass
class StageResult:
    """Studies and checks of one pipeline stage; ``scene`` holds finest-grid artifacts."""

    studies: dict[str, Study] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)
    scene: dict | None = None

    def study(self, name: str, sizes, hs) -> Study:
        st = Study(name, list(sizes), list(hs))
        self.studies[name] = st
        return st

    def order_check(self, name: str, bound: float):
        self.checks.append(Check(f"order:{name}", self.studies[name].min_order, bound, "min"))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "studies": {k: v.to_dict() for k, v in sorted(self.studies.items())},
            "checks": {c.name: c.to_dict() for c in self.checks},
            "info": self.info,
        }


def _grid_h(n: int, domain) -> float:
    return max((b - a) / (n - 1) for a, b in domain)


def _ladder(sc: Scenario):
    for n in sc.grid:
        ch, imm = build_chart(sc.family, sc.params, n)
        yield n, ch, imm, extract_geometry(imm, ch)


# ---------------------------------------------------------------------------
# stages


def stage_verify(sc: Scenario) -> StageResult:
    """Killing residual of the restricted ambient spinor along the ladder."""
    out = StageResult()
    st = out.study("killing_residual", sc.grid, [])
    for n, ch, imm, d in _ladder(sc):
        st.hs.append(ch.h)
        phi = restricted_spinor(ch, d)
        eq = KillingEquation.from_geometry(d, sc.form, ch)
        res = residual_killing(eq, phi)
        st.values.append(float(core(res).max()))
        out.info["form"] = eq.form
        out.scene = {"imm": imm, "chart": ch, "geometry": d, "spinor": phi, "fields": {"killing_residual": res}}
    out.order_check("killing_residual", sc.tol("order"))
    return out


def stage_solve(sc: Scenario, reconstruct_too: bool) -> StageResult:
    """Solve the Killing equation from one anchor value; optionally rebuild F."""
    out = StageResult()
    names = ["solution_error", "solver_defect"]
    if reconstruct_too:
        names += ["reconstruction_error", "integrability", "differential_defect", "isometry_defect"]
    studies = {k: out.study(k, sc.grid, []) for k in names}
    drift, quadric, e0 = [], [], []
    anchor = (0, 0)
    for n, ch, imm, d in _ladder(sc):
        for st in studies.values():
            st.hs.append(ch.h)
        phi = restricted_spinor(ch, d, anchor=anchor)
        eq = KillingEquation.from_geometry(d, sc.form, ch)
        sol = solve_killing(eq, ch, phi.values[anchor], anchor=anchor)
        out.info["form"] = eq.form
        studies["solution_error"].values.append(float(np.abs(sol.field.values - phi.values).max()))
        studies["solver_defect"].values.append(float(sol.residual))
        drift.append(float(sol.unit_drift))
        fields = {"killing_residual": residual_killing(eq, sol.field)}
        scene_imm = imm
        if reconstruct_too:
            space = d.space
            g0 = None if space.name == "minkowski_r12" else imm.points[anchor]
            rec = reconstruct(space, sol.field, anchor, g0=g0, data=d)
            ref = ambient_positions(imm)
            if space.name in ("minkowski_r12", "de_sitter", "anti_de_sitter"):
                got = align_anchor(rec.immersion, imm, anchor)
            else:
                got = ambient_positions(rec.immersion)
            err = np.linalg.norm(got - ref, axis=-1)
            studies["reconstruction_error"].values.append(float(err.max()))
            studies["integrability"].values.append(float(rec.integrability))
            xi = xi_form(sol.field, space)
            xd = xi_defect(rec.immersion, xi)
            studies["differential_defect"].values.append(float(core(xd).max()))
            ver = verify_immersion(rec.immersion, ch, d, field=sol.field)
            studies["isometry_defect"].values.append(float(core(ver["isometry"]).max()))
            fields.update(reconstruction_error=err, differential_defect=xd)
            if rec.quadric is not None:
                quadric.append(float(rec.quadric))
            if rec.e0_deviation is not None:
                e0.append(float(rec.e0_deviation))
            scene_imm = rec.immersion
        out.scene = {"imm": scene_imm, "chart": ch, "geometry": d, "spinor": sol.field, "fields": fields}
    out.info["unit_drift"] = drift
    out.checks.append(Check("unit_drift", max(drift), sc.tol("unit_drift")))
    out.order_check("solution_error", sc.tol("order"))
    if reconstruct_too:
        for k in ("reconstruction_error", "differential_defect"):
            out.order_check(k, sc.tol("order"))
        if get_family(sc.family, sc.params).space.is_group:
            out.order_check("integrability", sc.tol("order"))
        else:
            # pointwise formulas: only the path integral of eta can leave a defect
            worst = max(studies["integrability"].values)
            out.checks.append(Check("integrability", worst, sc.tol("quadric")))
        hs = studies["solution_error"].hs
        if quadric:
            out.study("quadric", sc.grid, hs).values = quadric
            out.checks.append(Check("quadric", max(quadric), sc.tol("quadric")))
        if e0:
            out.study("e0_deviation", sc.grid, hs).values = e0
            out.order_check("e0_deviation", sc.tol("order"))
    return out


def stage_dirac(sc: Scenario) -> StageResult:
    """Killing to Dirac residual ratio and recovery of S from the spinor."""
    out = StageResult()
    names = ["killing_residual", "dirac_residual", "symmetry_defect", "trace_defect", "shape_error"]
    studies = {k: out.study(k, sc.grid, []) for k in names}
    ratios = []
    form = sc.form or "killing_lkt"
    for n, ch, imm, d in _ladder(sc):
        for st in studies.values():
            st.hs.append(ch.h)
        phi = restricted_spinor(ch, d)
        eq = KillingEquation.from_geometry(d, form, ch, tau=sc.tau)
        sol = solve_killing(eq, ch, phi.values[0, 0]).field
        rep = dirac_killing_roundtrip(sol, d.H, sc.tau, S=d.S)
        for k in names:
            studies[k].values.append(rep[k])
        ratios.append(rep["ratio"])
        out.scene = {
            "imm": imm, "chart": ch, "geometry": d, "spinor": sol,
            "fields": {"dirac_residual": np.linalg.norm(dirac(sol), axis=-1)},
        }
    out.info["ratio"] = ratios
    out.info["form"] = form
    out.checks.append(Check("ratio", max(ratios), sc.tol("ratio")))
    for k in ("symmetry_defect", "trace_defect"):
        out.order_check(k, sc.tol("order"))
    return out


def stage_lawson(sc: Scenario) -> StageResult:
    """Rotate a CMC spinor in R^{1,2} to a CMC spinor in anti-de Sitter space."""
    out = StageResult()
    names = ["input_residual", "output_residual"]
    studies = {k: out.study(k, sc.grid, []) for k in names}
    branch = int(sc.params.get("branch", 1))
    worst_ratio, worst_ind, worst_inv, worst_h = 0.0, 0.0, 0.0, 0.0
    for n, ch, imm, d in _ladder(sc):
        for st in studies.values():
            st.hs.append(ch.h)
        H1 = float(sc.params.get("H", np.mean(d.H)))
        phi = restricted_spinor(ch, d)
        sol = solve_killing(KillingEquation.from_geometry(d, sc.form, ch), ch, phi.values[0, 0]).field
        pair = CmcPair(sol, H1, "r12")
        rot, theta = lawson_rotate(pair, branch)
        r_in = float(core(pair.residual()).max())
        r_out = float(core(rot.residual()).max())
        studies["input_residual"].values.append(r_in)
        studies["output_residual"].values.append(r_out)
        worst_ratio = max(worst_ratio, r_out / r_in if r_in > 0 else (0.0 if r_out == 0 else np.inf))
        worst_ind = max(worst_ind, float(np.abs(rot.indicator() - pair.indicator()).max()))
        back, _ = lawson_inverse(rot, 1 if H1 > 0 else -1)
        worst_inv = max(worst_inv, float(np.abs(back.field.values - sol.values).max()))
        out.info.update(H1=H1, H2=rot.H, theta=theta, branch=branch)
        worst_h = max(worst_h, abs(rot.H - float(sc.params.get("H2", rot.H))))
        out.scene = {
            "imm": imm, "chart": ch, "geometry": d, "spinor": rot.field,
            "fields": {"input_residual": pair.residual(), "output_residual": rot.residual()},
        }
    out.checks.append(Check("residual_ratio", worst_ratio, sc.tol("lawson_factor")))
    out.checks.append(Check("indicator_preserved", worst_ind, sc.tol("indicator")))
    out.checks.append(Check("inverse_roundtrip", worst_inv, sc.tol("indicator")))
    out.checks.append(Check("target_H", worst_h, sc.tol("indicator")))
    return out


def stage_calabi(sc: Scenario) -> StageResult:
    """Minimal surface -> maximal surface by spinor rescaling and by Weierstrass data."""
    from .spinor import KillingEquation as KE

    out = StageResult()
    fn, dom = WEIERSTRASS[sc.family]
    dom = tuple(tuple(x) for x in sc.params.get("domain", dom))
    names = ["minimal_dirac", "maximal_dirac", "maximal_H", "transform_H", "isometry"]
    studies = {k: out.study(k, sc.grid, []) for k in names}
    worst_inv, lam_min = 0.0, np.inf
    for n in sc.grid:
        h = _grid_h(n, dom)
        for st in studies.values():
            st.hs.append(h)
        u = np.linspace(*dom[0], n)
        v = np.linspace(*dom[1], n)
        data = WeierstrassData.sample(fn, u, v, "euclidean_minimal")
        c = (n // 2, n // 2)
        surf = weierstrass_surface(data, c)
        ch = chart_from_immersion(surf.immersion)
        d = extract_geometry(surf.immersion, ch)
        psi0 = np.zeros(8)
        psi0[0] = 1.0
        f1 = solve_killing(KE.from_geometry(d, "r3_euclidean", ch), ch, psi0, anchor=c).field
        cal = calabi_map(ch, f1)
        lam_min = min(lam_min, float(cal.factor.min()))
        rec = reconstruct(SpaceKind("minkowski_r12"), cal.field, c)
        ch2 = chart_from_immersion(rec.immersion)
        g2 = extract_geometry(rec.immersion, ch2)
        lor = weierstrass_transform(data)
        s2 = weierstrass_surface(lor, c)
        ch3 = chart_from_immersion(s2.immersion)
        g3 = extract_geometry(s2.immersion, ch3)
        studies["minimal_dirac"].values.append(float(core(np.linalg.norm(dirac(f1), axis=-1)).max()))
        studies["maximal_dirac"].values.append(float(core(np.linalg.norm(dirac(cal.field), axis=-1)).max()))
        studies["maximal_H"].values.append(float(core(np.abs(g2.H)).max()))
        studies["transform_H"].values.append(float(core(np.abs(g3.H)).max()))
        studies["isometry"].values.append(float(core(np.abs(ch2.metric - cal.chart.metric)).max()))
        # applying the transform twice reflects the first two coordinates
        twice = weierstrass_surface(weierstrass_transform(lor), c).positions
        refl = surf.positions * np.array([-1.0, -1.0, 1.0])
        worst_inv = max(worst_inv, float(np.abs(twice - refl).max()))
        out.scene = {
            "imm": rec.immersion, "chart": ch2, "geometry": None, "spinor": cal.field,
            "fields": {"maximal_H": g2.H, "conformal_factor": cal.factor},
        }
    for k in ("maximal_dirac", "maximal_H", "transform_H"):
        out.order_check(k, sc.tol("order"))
    for k in ("maximal_H", "transform_H"):
        st = studies[k]
        out.info[f"{k}_constant"] = float(st.values[-1] / st.hs[-1] ** 2)
    out.info["conformal_factor_min"] = lam_min
    out.checks.append(Check("involution_up_to_reflection", worst_inv, sc.tol("involution")))
    return out


STAGES: dict[str, Callable[[Scenario], StageResult]] = {
    "verify": stage_verify,
    "dirac": stage_dirac,
    "correspond-lawson": stage_lawson,
    "correspond-calabi": stage_calabi,
}


def run_scenario(sc: Scenario) -> tuple[dict, dict[str, StageResult]]:
    """Run every requested stage; returns the report and the raw stage results."""
    results: dict[str, StageResult] = {}
    for stage in sc.pipeline:
        if stage == "reconstruct":
            continue
        if stage == "solve":
            results["solve"] = stage_solve(sc, "reconstruct" in sc.pipeline)
        else:
            results[stage] = STAGES[stage](sc)
    report = {
        "scenario": sc.to_dict(),
        "passed": all(r.passed for r in results.values()),
        "stages": {k: r.to_dict() for k, r in results.items()},
    }
    return report, results
