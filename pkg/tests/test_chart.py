"""Charts, extracted geometry and the compatibility equations."""

import numpy as np
import pytest

from spinsurf.chart import (
    FAMILY_NAMES,
    Chart,
    DegenerateSurface,
    FrameBranchError,
    ImmersionField,
    InvalidGrid,
    _affine,
    build_chart,
    chart_from_immersion,
    check_compatibility,
    core,
    extract_geometry,
    get_family,
    interior,
    levi_civita_surface,
    quadric_defect,
)
from spinsurf.convergence import DEFAULT_LADDER, observed_order
from spinsurf.lie import SpaceKind

ROUNDOFF = 1e-11

# (family, params) pairs whose compatibility equations are checked
COMPAT_CASES = [
    ("pseudosphere_r12", {}),
    ("catenoid_r12", {}),
    ("one_sheet_hyperboloid_r12", {}),
    ("ruled_su12", {}),
    ("horizontal_lkt", {}),
    ("vertical_cylinder_lkt", {"kappa": -4.0, "tau": 1.0}),
    ("sphere_r_minus_s2", {"tilt": 0.3}),
    ("ruled_group", {"space": "h2xr"}),
    ("ruled_group", {"space": "rxh12"}),
    ("ruled_group", {"space": "rxs12"}),
]


def compat_ladder(family, params, sizes=DEFAULT_LADDER):
    values: dict[str, list[float]] = {}
    for n in sizes:
        ch, imm = build_chart(family, params, n)
        rep = check_compatibility(ch, extract_geometry(imm, ch))
        for name, r in rep.items():
            values.setdefault(name, []).append(float(np.max(core(r["field"]))))
    return values


class TestBuildChart:
    @pytest.mark.parametrize("name", FAMILY_NAMES)
    def test_every_family_builds(self, name):
        ch, imm = build_chart(name, {}, 12)
        assert ch.shape == (12, 12)
        assert ch.orthonormality_defect() <= 1e-10
        assert imm.points.shape[:2] == (12, 12)

    def test_grid_too_small(self):
        with pytest.raises(InvalidGrid):
            build_chart("plane_r12", {}, 5)

    def test_unknown_family(self):
        with pytest.raises(KeyError):
            get_family("klein_bottle")

    def test_degenerate_metric(self):
        u = np.linspace(0, 1, 10)
        U, V = np.meshgrid(u, u, indexing="ij")
        imm = ImmersionField(SpaceKind("minkowski_r12"), _affine(np.stack([U, V, V], axis=-1)), u, u)
        with pytest.raises(DegenerateSurface):
            chart_from_immersion(imm)

    @pytest.mark.parametrize("name", ["one_sheet_hyperboloid_r12", "timelike_plane_r12", "vertical_cylinder_lkt"])
    def test_lorentzian_signature(self, name):
        ch, _ = build_chart(name, {}, 10)
        assert ch.signature == "lorentzian"
        assert sorted(ch.eps) == [-1, 1]
        assert ch.eps_normal == 1

    def test_riemannian_signature(self):
        ch, _ = build_chart("pseudosphere_r12", {}, 10)
        assert ch.eps == (1, 1) and ch.eps_normal == -1


class TestExtraction:
    def test_flat_plane_is_totally_geodesic(self):
        ch, imm = build_chart("flat_graph_r12", {}, 17)
        d = extract_geometry(imm, ch)
        assert np.abs(d.S).max() <= 1e-12
        assert np.abs(d.h).max() <= 1e-12

    def test_flat_graph_compatibility_exact(self):
        ch, imm = build_chart("flat_graph_r12", {}, 17)
        rep = check_compatibility(ch, extract_geometry(imm, ch))
        for r in rep.values():
            assert r["max"] <= 1e-10

    def test_pseudosphere_umbilic(self):
        errs = []
        for n in DEFAULT_LADDER:
            ch, imm = build_chart("pseudosphere_r12", {}, n)
            d = extract_geometry(imm, ch)
            errs.append(float(np.abs(core(d.S) - np.eye(2)).max()))
            assert d.shape_symmetry_defect(ch) <= 1e-10
        assert observed_order(errs).min() >= 1.9

    def test_pseudosphere_radius(self):
        errs = []
        for n in DEFAULT_LADDER:
            ch, imm = build_chart("pseudosphere_r12", {"radius": 0.5}, n)
            errs.append(float(np.abs(core(extract_geometry(imm, ch).H) - 2.0).max()))
        assert observed_order(errs).min() >= 1.9

    def test_slice_of_product(self):
        ch, imm = build_chart("sphere_r_minus_s2", {"tilt": 0.0}, 33)
        d = extract_geometry(imm, ch)
        assert np.abs(d.S).max() <= 1e-10
        assert np.abs(d.T0).max() <= 1e-12
        assert np.allclose(np.abs(d.f), 1.0, atol=1e-12)
        assert np.abs(ch.inner(d.T0, d.T0) - d.f**2 + 1).max() <= 1e-12

    @pytest.mark.parametrize(
        "family,params",
        [("sphere_de_sitter", {"height": 0.0}), ("hyperbolic_anti_de_sitter", {"level": 0.0})],
    )
    def test_totally_geodesic_quadric_slices(self, family, params):
        ch, imm = build_chart(family, params, 33)
        d = extract_geometry(imm, ch)
        assert np.abs(core(d.S)).max() <= 1e-3
        assert np.abs(quadric_defect(imm.space, imm.points)).max() <= 1e-12

    def test_umbilic_de_sitter_sphere(self):
        # the sphere at height t has S = c id with |c| = |t| / sqrt(1 + t^2)
        t = 0.5
        ch, imm = build_chart("sphere_de_sitter", {"height": t}, 65)
        d = extract_geometry(imm, ch)
        c = t / np.sqrt(1 + t**2)
        assert np.abs(np.abs(core(d.H)) - c).max() <= 1e-3
        off = core(d.S)[..., 0, 1]
        assert np.abs(off).max() <= 1e-3


class TestCompatibility:
    @pytest.mark.parametrize("family,params", COMPAT_CASES, ids=lambda x: str(x))
    def test_second_order(self, family, params):
        values = compat_ladder(family, params)
        for name, vals in values.items():
            if vals[-1] <= ROUNDOFF:
                continue
            order = observed_order(vals).min()
            assert order >= 1.9, (name, vals, order)

    def test_lkt_norm_constraint(self):
        ch, imm = build_chart("vertical_cylinder_lkt", {"kappa": -4.0, "tau": 1.0}, 33)
        rep = check_compatibility(ch, extract_geometry(imm, ch))
        assert {"lkt_norm", "lkt_tangent", "lkt_normal"} <= set(rep)
        assert rep["lkt_norm"]["max"] <= 1e-3

    def test_corrupted_nu_is_flagged(self):
        ch, imm = build_chart("pseudosphere_r12", {}, 33)
        d = extract_geometry(imm, ch)
        d.nu = d.nu.copy()
        d.nu[..., 2] += 0.1
        rep = check_compatibility(ch, d)
        assert rep["orthonormality"]["max"] >= 0.05

    def test_missing_fields(self):
        ch, imm = build_chart("pseudosphere_r12", {}, 10)
        d = extract_geometry(imm, ch)
        d.T = None
        with pytest.raises(ValueError):
            check_compatibility(ch, d)


class TestLeviCivita:
    def test_flat_constant_frame(self):
        u = np.linspace(0, 1, 10)
        g = np.broadcast_to(np.eye(2), (10, 10, 2, 2)).copy()
        ch = Chart(u, u, g, g.copy(), (1, 1))
        assert np.abs(levi_civita_surface(ch)).max() <= 1e-14

    def test_sphere_cot_latitude(self):
        errs = []
        for n in DEFAULT_LADDER:
            ch, _ = build_chart("sphere_r3", {}, n)
            w = ch.omega
            theta = ch.u[:, None] * np.ones_like(ch.v)[None, :]
            err = np.maximum(np.abs(w[..., 0]), np.abs(w[..., 1] - 1 / np.tan(theta)))
            errs.append(float(np.max(interior(err))))
        assert errs[-1] <= 1e-4
        assert observed_order(errs).min() >= 1.9

    def test_frame_flip_detected(self):
        u = np.linspace(0, 1, 10)
        g = np.broadcast_to(np.eye(2), (10, 10, 2, 2)).copy()
        frame = g.copy()
        frame[5:] *= -1
        with pytest.raises(FrameBranchError):
            levi_civita_surface(Chart(u, u, g, frame, (1, 1)))

    def test_core_has_fixed_inset(self):
        f = np.zeros((33, 33))
        assert core(f).shape == (25, 25)
        assert core(np.zeros((65, 65))).shape == (49, 49)
