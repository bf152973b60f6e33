"""Dirac/Killing round trip, the Lawson-type rotation, the Calabi map and Weierstrass data."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinsurf.chart import Chart, build_chart, core, extract_geometry
from spinsurf.convergence import observed_order
from spinsurf.correspondence import (
    CmcPair,
    HemisphereCondition,
    NonConformal,
    OutOfRange,
    PathDependence,
    WeierstrassData,
    calabi_map,
    catenoid_data,
    dirac_killing_roundtrip,
    enneper_data,
    lawson_angle,
    lawson_inverse,
    lawson_rotate,
    plane_data,
    weierstrass_surface,
    weierstrass_transform,
)
from spinsurf.lie import SpaceKind
from spinsurf.spinor import SpinorField, layout_for, restricted_spinor, split_pm

LADDER = (17, 33, 65)
SQRT2 = np.sqrt(2.0)


def flat_chart(n=9):
    u = np.linspace(0.0, 1.0, n)
    g = np.broadcast_to(np.eye(2), (n, n, 2, 2)).copy()
    return Chart(u, u, g, g.copy(), (1, 1))


def blade_field(chart, k=0):
    lay = layout_for(SpaceKind("minkowski_r12"), chart.eps)
    v = np.zeros(chart.shape + (lay.sig.dim,))
    v[..., k] = 1.0
    return SpinorField(chart, v, "intrinsic", lay)


def cmc_pair(n, radius=1 / SQRT2):
    ch, imm = build_chart("pseudosphere_r12", {"radius": radius}, n)
    d = extract_geometry(imm, ch)
    return CmcPair(restricted_spinor(ch, d), 1.0 / radius, "r12")


class TestDiracKilling:
    def test_flat_constant_spinor(self):
        ch = flat_chart()
        rep = dirac_killing_roundtrip(blade_field(ch), 0.0, 0.0, S=np.zeros(ch.shape + (2, 2)))
        for key in ("dirac_residual", "killing_residual", "symmetry_defect", "trace_defect", "shape_error"):
            assert rep[key] <= 1e-14, key
        assert rep["ratio"] == 0.0
        assert rep["indicator_defect"] == 0.0

    def test_without_shape_operator(self):
        rep = dirac_killing_roundtrip(blade_field(flat_chart()), 0.0, 0.0)
        assert "ratio" not in rep
        assert rep["recovered_killing_residual"] <= 1e-14

    def test_pseudosphere_second_order(self):
        keys = ("dirac_residual", "killing_residual", "shape_error")
        errs = {k: [] for k in keys}
        for n in LADDER:
            ch, imm = build_chart("pseudosphere_r12", {}, n)
            d = extract_geometry(imm, ch)
            rep = dirac_killing_roundtrip(restricted_spinor(ch, d), np.mean(d.H), 0.0, S=d.S)
            for k in keys:
                errs[k].append(rep[k])
        for k in keys:
            assert observed_order(errs[k]).min() >= 1.9, (k, errs[k])


class TestLawsonAngle:
    def test_unit_mean_curvature(self):
        theta, h2 = lawson_angle(1.0)
        assert theta == pytest.approx(np.pi / 4, abs=1e-15)
        assert h2 == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("branch", [1, -1])
    def test_sqrt2(self, branch):
        theta, h2 = lawson_angle(SQRT2, branch)
        assert h2 == pytest.approx(branch, abs=1e-14)
        assert np.sin(2 * theta) == pytest.approx(1 / SQRT2, abs=1e-14)

    @pytest.mark.parametrize("H1", [0.0, 0.5, -0.999])
    def test_out_of_range(self, H1):
        with pytest.raises(OutOfRange):
            lawson_angle(H1)

    def test_bad_branch(self):
        with pytest.raises(ValueError):
            lawson_angle(2.0, branch=0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1.0, 50.0), st.sampled_from([1, -1]), st.sampled_from([1, -1]))
    def test_relations(self, mag, sign, branch):
        H1 = sign * mag
        theta, h2 = lawson_angle(H1, branch)
        assert H1 * np.sin(2 * theta) == pytest.approx(1.0, abs=1e-12)
        assert h2 == pytest.approx(H1 * np.cos(2 * theta), abs=1e-12)
        assert abs(h2) == pytest.approx(np.sqrt(H1**2 - 1), abs=1e-9 * mag)
        if abs(h2) > 1e-12:
            assert np.sign(h2) == branch


class TestLawsonRotate:
    def test_residual_carried_over(self):
        for n in LADDER:
            pair = cmc_pair(n)
            rot, theta = lawson_rotate(pair)
            r_in = float(core(pair.residual()).max())
            r_out = float(core(rot.residual()).max())
            assert rot.target == "h13"
            assert rot.H == pytest.approx(1.0, abs=1e-12)
            assert r_out <= 3 * r_in

    def test_indicator_preserved(self):
        pair = cmc_pair(17)
        rot, _ = lawson_rotate(pair)
        assert np.abs(rot.indicator() - pair.indicator()).max() <= 1e-12

    @pytest.mark.parametrize("branch", [1, -1])
    def test_inverse(self, branch):
        pair = cmc_pair(17)
        rot, _ = lawson_rotate(pair, branch)
        assert rot.H == pytest.approx(branch, abs=1e-12)
        back, _ = lawson_inverse(rot, 1)
        assert back.H == pytest.approx(SQRT2, abs=1e-12)
        assert np.abs(back.field.values - pair.field.values).max() <= 1e-12

    def test_wrong_targets(self):
        pair = cmc_pair(10)
        with pytest.raises(ValueError):
            lawson_inverse(pair)
        rot, _ = lawson_rotate(pair)
        with pytest.raises(ValueError):
            lawson_rotate(rot)
        with pytest.raises(ValueError):
            CmcPair(pair.field, 1.0, "s3")

    def test_threshold_rejects_bad_input(self):
        pair = cmc_pair(17)
        bad = CmcPair(pair.field, 3.0, "r12")
        with pytest.raises(ValueError, match="Dirac residual"):
            lawson_rotate(bad, threshold=1e-3)


class TestCalabiMap:
    def test_unit_indicator_is_identity(self):
        ch = flat_chart()
        f = blade_field(ch)
        res = calabi_map(ch, f)
        assert np.abs(res.factor - 1.0).max() == 0.0
        assert np.abs(res.field.values - f.values).max() == 0.0
        assert np.abs(res.chart.metric - ch.metric).max() == 0.0
        assert res.indicator_defect == 0.0

    def test_conformal_rescaling(self):
        ch = flat_chart()
        # blade 3 lies in the minus half, so lambda = cos^2 a - sin^2 a
        a = 0.3
        v = np.zeros(ch.shape + (8,))
        v[..., 0], v[..., 3] = np.cos(a), np.sin(a)
        res = calabi_map(ch, blade_field(ch).with_values(v))
        lam = np.cos(a) ** 2 - np.sin(a) ** 2
        assert np.abs(res.factor - lam).max() <= 1e-15
        assert np.abs(res.chart.metric - lam**2 * ch.metric).max() <= 1e-15
        assert res.indicator_defect <= 1e-15
        assert np.abs(split_pm(res.field.values)[2] - 1.0).max() <= 1e-15

    def test_hemisphere_names_node(self):
        ch = flat_chart()
        v = blade_field(ch).values.copy()
        v[3, 4] = 0.0
        v[3, 4, 3] = 1.0
        with pytest.raises(HemisphereCondition, match=r"\(3, 4\)"):
            calabi_map(ch, blade_field(ch).with_values(v))

    def test_rejects_non_unit(self):
        ch = flat_chart()
        f = blade_field(ch)
        with pytest.raises(ValueError, match="not unit"):
            calabi_map(ch, f.with_values(1.1 * f.values))


def enneper_exact(U, V):
    z = U + 1j * V
    return np.stack([(z - z**3 / 3).real, (1j * (z + z**3 / 3)).real, (z**2).real], axis=-1)


class TestWeierstrass:
    @pytest.mark.parametrize("fn", [enneper_data, catenoid_data, plane_data])
    def test_null(self, fn):
        u = np.linspace(-0.8, 0.8, 33)
        assert WeierstrassData.sample(fn, u, u, "euclidean_minimal").conformality().max() <= 1e-12

    @pytest.mark.parametrize("fn", [enneper_data, plane_data])
    def test_polynomial_data_exactly_holomorphic(self, fn):
        u = np.linspace(-0.8, 0.8, 33)
        assert WeierstrassData.sample(fn, u, u, "euclidean_minimal").cauchy_riemann().max() <= 1e-12

    def test_catenoid_cauchy_riemann_order(self):
        errs = []
        for n in LADDER:
            u = np.linspace(-0.8, 0.8, n)
            errs.append(float(core(WeierstrassData.sample(catenoid_data, u, u, "euclidean_minimal").cauchy_riemann()).max()))
        assert observed_order(errs).min() >= 1.9

    @pytest.mark.parametrize("fn", [enneper_data, catenoid_data])
    def test_transform_swaps_flavor(self, fn):
        u = np.linspace(-0.8, 0.8, 17)
        w = WeierstrassData.sample(fn, u, u, "euclidean_minimal")
        t = weierstrass_transform(w)
        assert t.flavor == "lorentz_maximal"
        assert t.conformality().max() <= 1e-12
        back = weierstrass_transform(t)
        assert back.flavor == "euclidean_minimal"
        flip = np.array([-1.0, -1.0, 1.0])
        assert np.abs(back.phi - flip * w.phi).max() <= 1e-15
        again = weierstrass_transform(weierstrass_transform(back))
        assert np.abs(again.phi - w.phi).max() <= 1e-15

    def test_non_conformal_rejected(self):
        u = np.linspace(0, 1, 5)
        w = WeierstrassData.sample(lambda z: plane_data(z, (1.0, 0.0, 0.0)), u, u, "euclidean_minimal")
        with pytest.raises(NonConformal):
            weierstrass_transform(w)

    def test_unknown_flavor(self):
        with pytest.raises(ValueError):
            WeierstrassData(np.zeros(2), np.zeros(2), np.zeros((2, 2, 3)), "hyperbolic")

    def test_plane(self):
        u = np.linspace(0, 1, 9)
        s = weierstrass_surface(WeierstrassData.sample(plane_data, u, u, "euclidean_minimal"))
        U, V = np.meshgrid(u, u, indexing="ij")
        assert np.abs(s.positions - np.stack([U, -V, 0 * U], axis=-1)).max() <= 1e-15
        assert s.path_defect <= 1e-15
        assert s.immersion.space.name == "euclidean_r3"

    def test_maximal_plane_lives_in_minkowski(self):
        u = np.linspace(0, 1, 9)
        w = weierstrass_transform(WeierstrassData.sample(plane_data, u, u, "euclidean_minimal"))
        s = weierstrass_surface(w)
        assert s.immersion.space.name == "minkowski_r12"
        assert s.immersion.points.shape == (9, 9, 4, 4)

    def test_enneper_second_order(self):
        errs = []
        for n in LADDER:
            u = np.linspace(-0.8, 0.8, n)
            s = weierstrass_surface(WeierstrassData.sample(enneper_data, u, u, "euclidean_minimal"), anchor=(n // 2, n // 2))
            U, V = np.meshgrid(u, u, indexing="ij")
            errs.append(float(np.abs(s.positions - enneper_exact(U, V)).max()))
        assert observed_order(errs).min() >= 1.9

    def test_origin_offset(self):
        u = np.linspace(0, 1, 9)
        w = WeierstrassData.sample(plane_data, u, u, "euclidean_minimal")
        s = weierstrass_surface(w, anchor=(2, 3), origin=[1.0, 2.0, 3.0])
        assert np.allclose(s.positions[2, 3], [1.0, 2.0, 3.0], atol=0, rtol=0)

    def test_non_holomorphic_is_path_dependent(self):
        u = np.linspace(0, 1, 17)
        w = WeierstrassData.sample(lambda z: np.stack([1j * np.conj(z)] * 3, axis=-1), u, u, "euclidean_minimal")
        with pytest.raises(PathDependence):
            weierstrass_surface(w)

    def test_csv_rows(self):
        u = np.linspace(0, 1, 3)
        rows = WeierstrassData.sample(enneper_data, u, u, "euclidean_minimal").to_csv_rows()
        assert len(rows) == 9 and all(len(r) == 8 for r in rows)
        assert rows[0][:4] == [0.0, 0.0, 1.0, 0.0]
