"""Clifford algebra arithmetic, reversal, pairing, spin predicates and models."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinsurf.clifford import (
    CL02,
    CL11,
    CL12,
    I_BLADE,
    IOTA,
    CliffordError,
    Multivector,
    Signature,
    SkewOperator,
    ad_action,
    bivector_to_skew,
    commutator,
    exp_bivector,
    format_multivector,
    hc_iso,
    hc_iso_inverse,
    hc_product,
    is_spin,
    lift_frame,
    mv_product,
    mv_tau,
    parse_multivector,
    skew_to_bivector,
    spin_product,
    star_map,
)
from spinsurf.lie import ALG_SIG

SIGS = [Signature.from_pq(p, q) for p, q in [(0, 2), (1, 1), (1, 2), (0, 3), (1, 3), (2, 2)]]
SIGS.append(ALG_SIG)

coeff = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


def mv_strategy(sig):
    return st.lists(coeff, min_size=sig.dim, max_size=sig.dim).map(lambda c: Multivector(sig, c))


def vec_strategy(sig):
    return st.lists(coeff, min_size=sig.n, max_size=sig.n).map(lambda c: Multivector.vector(sig, c))


def e(sig, *idx):
    return Multivector.basis(sig, *idx)


def rotor(theta, sig=CL12, i=1, j=2):
    return Multivector.scalar(sig, math.cos(theta)) + e(sig, i, j) * math.sin(theta)


class TestProduct:
    def test_timelike_square_is_plus_one(self):
        assert e(CL12, 0, 0).allclose(Multivector.scalar(CL12, 1.0))

    @pytest.mark.parametrize("i", [1, 2])
    def test_spacelike_square_is_minus_one(self, i):
        assert e(CL12, i, i).allclose(Multivector.scalar(CL12, -1.0))

    def test_orthogonal_vectors_anticommute(self):
        assert (e(CL12, 1, 2) + e(CL12, 2, 1)).allclose(Multivector.zeros(CL12))

    def test_pseudoscalar_squares_to_minus_one(self):
        assert mv_product(IOTA, IOTA).allclose(Multivector.scalar(CL12, -1.0))

    @pytest.mark.parametrize("sig", SIGS, ids=str)
    def test_clifford_relation_on_basis(self, sig):
        for i in range(sig.n):
            for j in range(sig.n):
                anti = e(sig, i, j) + e(sig, j, i)
                want = -2.0 * sig.eps[i] * (i == j)
                assert anti.allclose(Multivector.scalar(sig, want), atol=0.0)

    def test_signature_mismatch(self):
        with pytest.raises(CliffordError):
            mv_product(e(CL12, 0), e(CL02, 0))

    def test_bad_signature(self):
        with pytest.raises(CliffordError):
            Signature((1, 1, 1, 1, 1))
        with pytest.raises(CliffordError):
            Signature((1, 0))

    @pytest.mark.parametrize("sig", SIGS, ids=str)
    @settings(max_examples=40, deadline=None)
    @given(data=st.data())
    def test_associative(self, sig, data):
        a, b, c = (data.draw(mv_strategy(sig)) for _ in range(3))
        lhs = mv_product(mv_product(a, b), c)
        rhs = mv_product(a, mv_product(b, c))
        assert lhs.allclose(rhs, atol=1e-12)

    @pytest.mark.parametrize("sig", SIGS, ids=str)
    @settings(max_examples=40, deadline=None)
    @given(data=st.data())
    def test_vector_square_is_minus_norm(self, sig, data):
        v = data.draw(vec_strategy(sig))
        comps = v.vector_part()
        norm = float(np.sum(np.array(sig.eps) * comps**2))
        assert mv_product(v, v).allclose(Multivector.scalar(sig, -norm), atol=1e-12)


class TestReversal:
    def test_scalar(self):
        one = Multivector.scalar(CL12, 1.0)
        assert mv_tau(one).allclose(one)

    def test_bivector(self):
        assert mv_tau(e(CL12, 1, 2)).allclose(-e(CL12, 1, 2))

    @pytest.mark.parametrize("sig", SIGS, ids=str)
    def test_grade_sign_law(self, sig):
        for mask in range(sig.dim):
            idx = [i for i in range(sig.n) if mask >> i & 1]
            k = len(idx)
            blade = e(sig, *idx)
            reversed_product = e(sig, *reversed(idx))
            assert mv_tau(blade).allclose(reversed_product, atol=0.0)
            assert mv_tau(blade).allclose(blade * (-1.0) ** (k * (k - 1) // 2), atol=0.0)

    @pytest.mark.parametrize("sig", SIGS, ids=str)
    def test_anti_automorphism_random_pairs(self, sig):
        rng = np.random.default_rng(3)
        a = Multivector(sig, rng.uniform(-1, 1, (200, sig.dim)))
        b = Multivector(sig, rng.uniform(-1, 1, (200, sig.dim)))
        lhs = mv_tau(mv_product(a, b))
        rhs = mv_product(mv_tau(b), mv_tau(a))
        assert lhs.allclose(rhs, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(mv_strategy(CL12))
    def test_involution(self, a):
        assert mv_tau(mv_tau(a)).allclose(a, atol=0.0)


class TestPairing:
    def test_unit_spinor_pairs_to_one(self):
        phi = rotor(0.37)
        assert spin_product(phi, phi).allclose(Multivector.scalar(CL12, 1.0))

    def test_identity_gauge(self):
        one = Multivector.scalar(CL12, 1.0)
        assert spin_product(e(CL12, 1), one).allclose(e(CL12, 1))

    @pytest.mark.parametrize("sig", SIGS, ids=str)
    def test_symmetry_under_reversal(self, sig):
        rng = np.random.default_rng(4)
        phi = Multivector(sig, rng.normal(size=(100, sig.dim)))
        psi = Multivector(sig, rng.normal(size=(100, sig.dim)))
        assert spin_product(phi, psi).allclose(mv_tau(spin_product(psi, phi)), atol=1e-12)

    @pytest.mark.parametrize("sig", SIGS, ids=str)
    def test_vectors_are_self_adjoint(self, sig):
        rng = np.random.default_rng(5)
        phi = Multivector(sig, rng.normal(size=(100, sig.dim)))
        psi = Multivector(sig, rng.normal(size=(100, sig.dim)))
        x = Multivector.vector(sig, rng.normal(size=(100, sig.n)))
        lhs = spin_product(mv_product(x, phi), psi)
        rhs = spin_product(phi, mv_product(x, psi))
        assert lhs.allclose(rhs, atol=1e-12)

    def test_spin_equivariance(self):
        rng = np.random.default_rng(6)
        b = Multivector(CL12, np.zeros((100, 8)))
        b.coeffs[:, [3, 5, 6]] = rng.normal(size=(100, 3))
        g = exp_bivector(b)
        assert is_spin(g)
        v = Multivector(CL12, rng.normal(size=(100, 8)))
        w = Multivector(CL12, rng.normal(size=(100, 8)))
        lhs = spin_product(mv_product(g, v), mv_product(g, w))
        rhs = spin_product(v, w)
        scale = max(1.0, float(np.abs(g.coeffs).max()) ** 2)
        assert np.abs(lhs.coeffs - rhs.coeffs).max() <= 1e-12 * scale * 10


class TestAdjoint:
    def test_identity(self):
        v = Multivector.vector(CL12, [0.3, -1.0, 2.0])
        assert ad_action(Multivector.scalar(CL12, 1.0), v).allclose(v)

    @pytest.mark.parametrize("theta", [0.0, 0.2, 1.0, 2.5, -0.7])
    def test_rotation_by_double_angle(self, theta):
        got = ad_action(rotor(theta), e(CL12, 1))
        want = Multivector.vector(CL12, [0.0, math.cos(2 * theta), math.sin(2 * theta)])
        assert got.allclose(want, atol=1e-14)

    def test_norm_preserved(self):
        rng = np.random.default_rng(7)
        b = Multivector(CL12, np.zeros((500, 8)))
        b.coeffs[:, [3, 5, 6]] = rng.uniform(-1, 1, (500, 3))
        g = exp_bivector(b)
        v = rng.normal(size=(500, 3))
        w = ad_action(g, Multivector.vector(CL12, v))
        eps = np.array(CL12.eps)
        norm_in = np.sum(eps * v**2, axis=-1)
        norm_out = np.sum(eps * w.vector_part() ** 2, axis=-1)
        assert np.abs(norm_out - norm_in).max() <= 1e-10
        assert np.abs(w.coeffs[..., [0, 3, 5, 6, 7]]).max() <= 1e-10

    def test_not_invertible(self):
        null = e(CL12, 0) + e(CL12, 1)
        with pytest.raises(CliffordError):
            ad_action(null, e(CL12, 2))


class TestIsSpin:
    def test_one(self):
        assert is_spin(Multivector.scalar(CL12, 1.0))

    @pytest.mark.parametrize("theta", np.linspace(-3, 3, 9))
    def test_rotor(self, theta):
        assert is_spin(rotor(theta))

    def test_boost(self):
        t = 0.8
        g = Multivector.scalar(CL12, math.cosh(t)) + e(CL12, 0, 1) * math.sinh(t)
        assert is_spin(g)

    def test_odd(self):
        assert not is_spin(e(CL12, 1))

    def test_not_unit(self):
        assert not is_spin(rotor(0.3) * 1.1)


class TestSkewBivector:
    def test_zero(self):
        u = SkewOperator(ALG_SIG, np.zeros((3, 3)))
        assert skew_to_bivector(u).allclose(Multivector.zeros(ALG_SIG), atol=0.0)

    def test_rotation_generator(self):
        m = np.zeros((3, 3))
        m[1, 0], m[0, 1] = 1.0, -1.0  # u(e1) = e2, u(e2) = -e1
        b = skew_to_bivector(SkewOperator(ALG_SIG, m))
        assert b.allclose(e(ALG_SIG, 0, 1))
        assert commutator(b, e(ALG_SIG, 0)).allclose(e(ALG_SIG, 1))

    def test_boost_generator(self):
        m = np.zeros((3, 3))
        m[2, 0], m[0, 2] = 1.0, 1.0  # u(e1) = e3, u(e3) = e1
        b = skew_to_bivector(SkewOperator(ALG_SIG, m))
        for j in range(3):
            assert commutator(b, e(ALG_SIG, j)).allclose(Multivector.vector(ALG_SIG, m[:, j]), atol=0.0)

    @pytest.mark.parametrize("sig", SIGS, ids=str)
    def test_commutator_identity_random(self, sig):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(50, sig.n, sig.n))
        g = sig.metric
        m = a - g @ np.swapaxes(a, -1, -2) @ g  # metric-skew: m^T g + g m = 0
        u = SkewOperator(sig, m)
        b = skew_to_bivector(u)
        for j in range(sig.n):
            got = commutator(b, e(sig, j)).coeffs
            want = Multivector.vector(sig, m[..., :, j]).coeffs
            assert np.abs(got - want).max() <= 1e-12 * max(1.0, np.abs(m).max())
        assert np.abs(bivector_to_skew(b).matrix - m).max() <= 1e-12 * max(1.0, np.abs(m).max())

    def test_rejects_non_skew(self):
        with pytest.raises(CliffordError):
            skew_to_bivector(SkewOperator(ALG_SIG, np.eye(3)))


class TestLiftFrame:
    def test_identity(self):
        g = lift_frame(np.eye(3), CL12)
        assert g.allclose(Multivector.scalar(CL12, 1.0))

    @pytest.mark.parametrize("theta", [0.3, 1.2, -2.0])
    def test_rotation_frame(self, theta):
        c, s = math.cos(2 * theta), math.sin(2 * theta)
        frame = np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)
        g = lift_frame(frame, CL12)
        assert is_spin(g)
        for j in range(3):
            img = ad_action(g, e(CL12, j))
            assert img.allclose(Multivector.vector(CL12, frame[:, j]), atol=1e-12)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(CliffordError):
            lift_frame(np.diag([1.0, 2.0, 1.0]), CL12)


class TestQuaternionModel:
    def test_unit(self):
        assert np.allclose(hc_iso(Multivector.scalar(CL12, 1.0)), [1, 0, 0, 0])

    def test_generators(self):
        assert np.allclose(hc_iso(e(CL12, 0)), [0, 1j, 0, 0])
        assert np.allclose(hc_iso(e(CL12, 1)), [0, 0, 1, 0])
        assert np.allclose(hc_iso(e(CL12, 2)), [0, 0, 0, -1])

    def test_central_unit(self):
        assert np.allclose(hc_iso(IOTA), [1j, 0, 0, 0])
        assert np.allclose(hc_iso(I_BLADE), [0, 1, 0, 0])

    def test_multiplicative_sweep(self):
        rng = np.random.default_rng(9)
        a = Multivector(CL12, rng.normal(size=(300, 8)))
        b = Multivector(CL12, rng.normal(size=(300, 8)))
        got = hc_iso(mv_product(a, b))
        want = hc_product(hc_iso(a), hc_iso(b))
        assert np.abs(got - want).max() <= 1e-12 * 10

    def test_inverse(self):
        rng = np.random.default_rng(10)
        a = Multivector(CL12, rng.normal(size=(50, 8)))
        assert hc_iso_inverse(hc_iso(a)).allclose(a, atol=1e-13)

    def test_wrong_signature(self):
        with pytest.raises(CliffordError):
            hc_iso(e(CL02, 0))


class TestStarMap:
    @pytest.mark.parametrize("case,sig", [("riemannian", CL02), ("lorentzian", CL11)])
    def test_unit(self, case, sig):
        assert star_map(Multivector.scalar(sig, 1.0), case).allclose(Multivector.scalar(CL12, 1.0))

    def test_quaternion_j(self):
        # q = J in Cl(0,2) goes to i J, the blade e0 e2
        got = star_map(e(CL02, 0), "riemannian")
        assert np.allclose(hc_iso(got), [0, 0, 1j, 0])
        assert got.allclose(e(CL12, 0, 2))

    def test_riemannian_intertwining(self):
        rng = np.random.default_rng(11)
        q = Multivector(CL02, rng.normal(size=(100, 4)))
        fq = star_map(q, "riemannian")
        for i in range(2):
            lhs = star_map(mv_product(e(CL02, i), q), "riemannian")
            rhs = mv_product(mv_product(mv_product(e(CL12, 0), e(CL12, i + 1)), fq), I_BLADE)
            assert lhs.allclose(rhs, atol=1e-12)

    def test_lorentzian_intertwining(self):
        rng = np.random.default_rng(12)
        p = Multivector(CL11, rng.normal(size=(100, 4)))
        fp = star_map(p, "lorentzian")
        for i in range(2):
            lhs = star_map(mv_product(e(CL11, i), p), "lorentzian")
            rhs = mv_product(mv_product(e(CL12, i), e(CL12, 2)), fp)
            assert lhs.allclose(rhs, atol=1e-12)

    def test_image_is_even(self):
        rng = np.random.default_rng(13)
        q = Multivector(CL02, rng.normal(size=(20, 4)))
        assert star_map(q, "riemannian").odd().allclose(Multivector.zeros(CL12, (20,)), atol=1e-14)

    def test_wrong_model(self):
        with pytest.raises(CliffordError):
            star_map(e(CL12, 0), "riemannian")
        with pytest.raises(CliffordError):
            star_map(e(CL02, 0), "lorentzian")


class TestTextForm:
    def test_format(self):
        assert format_multivector(e(CL12, 0, 1)) == 'sig(1,2){"12": 1.0}'

    def test_parse(self):
        a = parse_multivector('sig(1,2){"": 0.5, "23": -2.0}')
        assert a.allclose(Multivector.scalar(CL12, 0.5) + e(CL12, 1, 2) * -2.0, atol=0.0)

    def test_noncanonical_signature(self):
        a = parse_multivector('sig(+,+,-){"3": 1.0}')
        assert a.sig == ALG_SIG

    @pytest.mark.parametrize("sig", SIGS, ids=str)
    @settings(max_examples=30, deadline=None)
    @given(data=st.data())
    def test_round_trip(self, sig, data):
        a = data.draw(mv_strategy(sig))
        b = parse_multivector(format_multivector(a))
        assert b.sig == a.sig
        assert np.array_equal(b.coeffs, a.coeffs)

    @pytest.mark.parametrize("text", ["nonsense", 'sig(1,2){"21": 1.0}', 'sig(0,2){"3": 1.0}'])
    def test_rejects(self, text):
        with pytest.raises(CliffordError):
            parse_multivector(text)
