"""Exact-tier invariant suites run by ``spinsurf selftest``."""

from __future__ import annotations

import contextlib
import time
from dataclasses import dataclass, field

import numpy as np

from . import clifford as cl
from .clifford import (
    CL02,
    CL11,
    CL12,
    I_BLADE,
    IOTA,
    Multivector,
    Signature,
    SkewOperator,
    bivector_to_skew,
    commutator,
    exp_bivector,
    hc_iso,
    hc_iso_inverse,
    hc_product,
    mv_product,
    mv_tau,
    skew_to_bivector,
    spin_product,
    star_map,
)
from .lie import (
    ALG_SIG,
    SpaceKind,
    catalog_entries,
    group_model,
    make_algebra,
    MatrixModel,
)

SIGNATURES = (
    CL12,
    CL02,
    CL11,
    ALG_SIG,
    Signature.from_pq(1, 3),
    Signature.from_pq(2, 2),
    Signature.from_pq(0, 3),
)
EVEN = [0, 3, 5, 6]


@dataclass
class Suite:
    name: str
    tol: float
    checks: dict[str, float] = field(default_factory=dict)
    tols: dict[str, float] = field(default_factory=dict)
    seconds: float = 0.0

    def add(self, label: str, residual: float, tol: float | None = None):
        prev, r = self.checks.get(label, 0.0), float(residual)
        # NaN must survive the running max
        self.checks[label] = r if np.isnan(r) or np.isnan(prev) else max(prev, r)
        if tol is not None:
            self.tols[label] = tol

    def ok(self, label: str) -> bool:
        r = self.checks[label]
        return bool(np.isfinite(r) and r <= self.tols.get(label, self.tol))

    @property
    def max_residual(self) -> float:
        return max(self.checks.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return all(self.ok(k) for k in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tolerance": self.tol,
            "tolerance_overrides": dict(sorted(self.tols.items())),
            "max_residual": self.max_residual,
            "checks": dict(sorted(self.checks.items())),
            "failed": sorted(k for k in self.checks if not self.ok(k)),
        }


def _rand(rng, sig: Signature, n: int) -> Multivector:
    return Multivector(sig, rng.uniform(-1, 1, size=(n, sig.dim)))


def _rand_vec(rng, sig: Signature, n: int) -> Multivector:
    return Multivector.vector(sig, rng.uniform(-1, 1, size=(n, sig.n)))


def _err(a: Multivector | np.ndarray, b: Multivector | np.ndarray) -> float:
    a = a.coeffs if isinstance(a, Multivector) else np.asarray(a)
    b = b.coeffs if isinstance(b, Multivector) else np.asarray(b)
    return float(np.abs(a - b).max(initial=0.0))


def _reverse_by_products(sig: Signature, mask: int) -> Multivector:
    """Basis blade with its vector factors multiplied in reverse order."""
    out = Multivector.scalar(sig, 1.0)
    for i in reversed(range(sig.n)):
        if mask >> i & 1:
            out = mv_product(out, Multivector.basis(sig, i))
    return out


def _random_spin(rng, sig: Signature, n: int) -> Multivector:
    b = Multivector.zeros(sig, (n,))
    for i in range(sig.n):
        for j in range(i + 1, sig.n):
            b = b + Multivector.basis(sig, i, j) * rng.uniform(-0.5, 0.5, size=n)
    return exp_bivector(b)


def _random_skew(rng, sig: Signature, n: int) -> SkewOperator:
    a = rng.uniform(-1, 1, size=(n, sig.n, sig.n))
    a = a - np.swapaxes(a, -1, -2)
    return SkewOperator(sig, sig.metric @ a)


def algebra_suite(samples: int = 1000, seed: int = 0, tol: float = 1e-12) -> Suite:
    """Product, reversal and pairing identities of the Clifford algebras."""
    rng = np.random.default_rng(seed)
    s = Suite("algebra", tol)
    for sig in SIGNATURES:
        a, b, c = (_rand(rng, sig, samples) for _ in range(3))
        s.add("associativity", _err(mv_product(mv_product(a, b), c), mv_product(a, mv_product(b, c))))
        for i in range(sig.n):
            for j in range(sig.n):
                ei, ej = Multivector.basis(sig, i), Multivector.basis(sig, j)
                anti = mv_product(ei, ej) + mv_product(ej, ei)
                g = -2.0 * sig.eps[i] if i == j else 0.0
                s.add("clifford_relation", _err(anti, Multivector.scalar(sig, g)))
        for mask in range(sig.dim):
            k = bin(mask).count("1")
            forward = Multivector.scalar(sig, 1.0)
            for i in range(sig.n):
                if mask >> i & 1:
                    forward = mv_product(forward, Multivector.basis(sig, i))
            sign = (-1) ** (k * (k - 1) // 2)
            s.add("reversal_sign", _err(mv_tau(forward), forward * sign))
            s.add("reversal_order", _err(mv_tau(forward), _reverse_by_products(sig, mask)))
        s.add("reversal_antiautomorphism", _err(mv_tau(mv_product(a, b)), mv_product(mv_tau(b), mv_tau(a))))
        # <<phi, psi>> = tau <<psi, phi>> and <<X phi, psi>> = <<phi, X psi>>
        s.add("pairing_reversal", _err(spin_product(a, b), mv_tau(spin_product(b, a))))
        x = _rand_vec(rng, sig, samples)
        s.add("pairing_vector_symmetry", _err(spin_product(mv_product(x, a), b), spin_product(a, mv_product(x, b))))
        if sig.n >= 2:
            g = _random_spin(rng, sig, samples)
            lhs = spin_product(mv_product(g, a), mv_product(g, b))
            rhs = spin_product(a, b)
            scale = max(1.0, float(np.abs(g.coeffs).max()) ** 2)
            s.add("spin_equivariance", _err(lhs, rhs) / scale)
            u = _random_skew(rng, sig, samples)
            biv = skew_to_bivector(u)
            for j in range(sig.n):
                ej = Multivector.basis(sig, j)
                s.add("commutator_identity", _err(commutator(biv, ej).coeffs, Multivector.vector(sig, u.matrix[..., :, j]).coeffs))
            s.add("bivector_roundtrip", _err(bivector_to_skew(biv).matrix, u.matrix))
    return s


def isomorphism_suite(samples: int = 1000, seed: int = 1, tol: float = 1e-12) -> Suite:
    """Complexified-quaternion isomorphism and the star maps."""
    rng = np.random.default_rng(seed)
    s = Suite("isomorphisms", tol)
    a, b = _rand(rng, CL12, samples), _rand(rng, CL12, samples)
    s.add("hc_multiplicative", _err(hc_iso(mv_product(a, b)), hc_product(hc_iso(a), hc_iso(b))))
    s.add("hc_unital", _err(hc_iso(Multivector.scalar(CL12, 1.0)), np.array([1, 0, 0, 0])))
    s.add("hc_inverse", _err(hc_iso_inverse(hc_iso(a)), a))
    z = rng.uniform(-1, 1, (samples, 4)) + 1j * rng.uniform(-1, 1, (samples, 4))
    s.add("hc_forward_inverse", _err(hc_iso(hc_iso_inverse(z)), z))
    images = {0: [0, 1j, 0, 0], 1: [0, 0, 1, 0], 2: [0, 0, 0, -1]}
    for i, img in images.items():
        s.add("hc_generators", _err(hc_iso(Multivector.basis(CL12, i)), np.array(img)))
    one = Multivector.scalar(CL12, 1.0)
    s.add("iota_square", _err(mv_product(IOTA, IOTA), -one))
    s.add("iota_central", _err(mv_product(IOTA, a), mv_product(a, IOTA)))
    s.add("iota_image", _err(hc_iso(IOTA), np.array([1j, 0, 0, 0])))
    s.add("i_blade_image", _err(hc_iso(I_BLADE), np.array([0, 1, 0, 0])))

    # f(x q) = e0 x f(q) I-blade for vectors x of Cl(0,2)
    q = _rand(rng, CL02, samples)
    e0 = Multivector.basis(CL12, 0)
    fq = star_map(q, "riemannian")
    s.add("star_even", float(np.abs(fq.coeffs[..., [1, 2, 4, 7]]).max()))
    for i in range(2):
        x = Multivector.basis(CL02, i)
        lhs = star_map(mv_product(x, q), "riemannian")
        xc = Multivector.basis(CL12, i + 1)
        rhs = mv_product(mv_product(mv_product(e0, xc), fq), I_BLADE)
        s.add("star_riemannian_intertwining", _err(lhs, rhs))
    r = _rand(rng, CL02, samples)
    s.add("star_riemannian_linear", _err(star_map(q + r * 0.5, "riemannian"), fq + star_map(r, "riemannian") * 0.5))
    s.add("star_riemannian_unit", _err(star_map(Multivector.scalar(CL02, 1.0), "riemannian"), one))

    # (X psi)* = X N psi* with N = e2 for vectors X of Cl(1,1)
    p = _rand(rng, CL11, samples)
    fp = star_map(p, "lorentzian")
    n = Multivector.basis(CL12, 2)
    for i in range(2):
        x = Multivector.basis(CL11, i)
        lhs = star_map(mv_product(x, p), "lorentzian")
        rhs = mv_product(mv_product(Multivector.basis(CL12, i), n), fp)
        s.add("star_lorentzian_intertwining", _err(lhs, rhs))
    p2 = _rand(rng, CL11, samples)
    s.add(
        "star_lorentzian_multiplicative",
        _err(star_map(mv_product(p, p2), "lorentzian"), mv_product(fp, star_map(p2, "lorentzian"))),
    )
    return s


def catalog_suite(tol: float = 1e-12) -> Suite:
    """Brackets, connection tables and group models of every catalog kind."""
    s = Suite("catalog", tol)
    for entry in catalog_entries():
        kind = SpaceKind.from_dict(entry["space"])
        if not kind.is_group:
            continue
        alg = make_algebra(kind)
        s.add("antisymmetry", alg.antisymmetry_defect())
        s.add("jacobi", alg.jacobi_defect())
        s.add("torsion_free", alg.torsion_defect())
        s.add("metric_compatible", alg.metric_defect())
        model = group_model(kind)
        if isinstance(model, MatrixModel):
            s.add("matrix_commutators", model.commutator_defect(), tol=1e-10)

    def gam(kind):
        g = make_algebra(kind).gamma
        return lambda i, j, k: g[i - 1, j - 1, k - 1]

    s.add("abelian_gamma", float(np.abs(make_algebra(SpaceKind("minkowski_r12")).gamma).max()))
    for alpha in (1.0, -0.7, 2.5):
        alg = make_algebra(SpaceKind("algebra_a", alpha=alpha))
        m = alg.gamma_matrix([0.0, 1.0, 0.0])
        want = np.zeros((3, 3))
        want[1, 0] = -alpha  # nabla_{e2} e1 = -alpha e2
        want[0, 1] = alpha  # nabla_{e2} e2 = alpha e1
        s.add("algebra_a_table", float(np.abs(m - want).max()))
        for x in ([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]):
            s.add("algebra_a_table", float(np.abs(alg.gamma_matrix(x)).max()))
        biv = skew_to_bivector(SkewOperator(ALG_SIG, m))
        s.add("algebra_a_bivector", _err(biv, Multivector.basis(ALG_SIG, 0, 1) * -alpha))
    for kappa, tau in ((-4.0, 1.0), (1.0, 0.5), (-1.0, 0.8), (2.0, -1.5)):
        kind = SpaceKind("lkt", kappa=kappa, tau=tau)
        g = gam(kind)
        sigma = kappa / (2 * tau)
        for val in (g(2, 1, 3), g(1, 3, 2), -g(1, 2, 3), -g(2, 3, 1)):
            s.add("lkt_table_tau", abs(val - tau))
        s.add("lkt_table_sigma", abs(g(3, 1, 2) - (sigma + tau)))
        s.add("lkt_table_sigma", abs(g(3, 2, 1) + (sigma + tau)))
    su = gam(SpaceKind("su12"))
    s.add("su12_collapse", abs(SpaceKind("su12").sigma + 2 * SpaceKind("su12").tau))
    s.add("su12_collapse", abs(su(3, 1, 2) - (-1.0)))
    s.add(
        "su12_equals_lkt",
        float(np.abs(make_algebra(SpaceKind("su12")).c - make_algebra(SpaceKind("lkt", kappa=-4.0, tau=1.0)).c).max()),
    )
    return s


def spinor_suite(samples: int = 64, seed: int = 2, tol: float = 1e-12) -> Suite:
    """Agreement of the intrinsic Killing right-hand sides with the extrinsic one."""
    from .chart import build_chart, extract_geometry
    from .immersion import pairing_vector, xi_components
    from .spinor import KillingEquation, default_form, killing_rhs, split_pm

    rng = np.random.default_rng(seed)
    s = Suite("spinor", tol)
    cases = [
        ("pseudosphere_r12", {}, ["intrinsic_riemannian", "r12_riemannian"]),
        ("ruled_su12", {}, ["intrinsic_riemannian", "su12"]),
        ("horizontal_lkt", {}, ["intrinsic_riemannian", "lkt"]),
        ("one_sheet_hyperboloid_r12", {}, ["intrinsic_lorentzian"]),
        ("ruled_group", {"space": "h2xr"}, ["intrinsic_riemannian", "product_H2R"]),
        ("ruled_group", {"space": "rxs12"}, ["intrinsic_riemannian", "product_RS12"]),
        ("ruled_group", {"space": "rxh12"}, ["intrinsic_riemannian", "product_RH12"]),
    ]
    for fam, params, forms in cases:
        ch, imm = build_chart(fam, params, 10)
        d = extract_geometry(imm, ch)
        ext = KillingEquation.from_geometry(d, "extrinsic_group", ch)
        psi = np.zeros(ch.shape + (8,))
        psi[..., EVEN] = rng.normal(size=ch.shape + (4,))
        for form in forms:
            eq = KillingEquation.from_geometry(d, form, ch)
            for x in np.eye(2):
                diff = killing_rhs(eq, ch, psi, x) - killing_rhs(ext, ch, psi, x)
                scale = max(1.0, float(np.abs(psi).max()))
                s.add(f"rhs_{form}", float(np.abs(diff).max()) / scale)
        s.add("default_form_known", 0.0 if default_form(d.space, ch.eps) else 1.0)
    psi = np.zeros((samples, 8))
    psi[:, EVEN] = rng.normal(size=(samples, 4))
    psi /= np.linalg.norm(psi, axis=-1, keepdims=True)
    ind = split_pm(psi)[2]
    scal = spin_product(Multivector(CL12, psi), Multivector(CL12, psi)).coeffs[..., 0]
    s.add("indicator_is_pairing_scalar", float(np.abs(ind - scal).max()))
    for x in rng.normal(size=(8, 2)):
        xv = np.zeros(8)
        xv[[2, 4]] = x
        direct = pairing_vector(psi, np.broadcast_to(xv, psi.shape), CL12)[..., [1, 2, 4]]
        s.add("xi_component_formula", float(np.abs(xi_components(psi, x) - direct).max()))
    return s


SUITES = {
    "algebra": algebra_suite,
    "isomorphisms": isomorphism_suite,
    "catalog": catalog_suite,
    "spinor": spinor_suite,
}


def run_selftest(inject: tuple[int, int] | None = None) -> dict:
    """Run every suite; ``inject`` flips one Cl(1,2) product-table sign first."""
    ctx = cl.inject_sign_error(CL12, *inject) if inject else contextlib.nullcontext()
    suites = {}
    with ctx:
        for name, fn in SUITES.items():
            t = time.perf_counter()
            suite = fn()
            suite.seconds = time.perf_counter() - t
            suites[name] = suite
    return {
        "passed": all(s.passed for s in suites.values()),
        "injected_sign_error": list(inject) if inject else None,
        "suites": {name: s.to_dict() for name, s in suites.items()},
    }, {name: s.seconds for name, s in suites.items()}
