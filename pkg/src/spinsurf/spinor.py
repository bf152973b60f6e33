"""Spinor fields on charts: covariant derivative, Killing-type equations,
their integration, the Dirac operator and shape recovery.

Spinors are stored as multivector coefficient arrays over the grid. Intrinsic
spinors of a surface live in the even part of Cl(1,2) (the psi* picture):
for a Riemannian surface the Clifford action of a tangent vector is
``X . psi -> N X psi I`` with ``N = e0`` and ``I = -e1 e2`` and the complex
structure is ``psi -> psi I``; for a Lorentzian surface it is
``X . psi -> X N psi`` with ``N = e2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .chart import Chart, GeometryData, interior
from .clifford import (
    CL12,
    I_BLADE,
    CliffordError,
    Multivector,
    Signature,
    SkewOperator,
    left_matrix,
    lift_frame,
    mv_product,
    mv_tau,
    right_matrix,
    skew_to_bivector,
)
from .lie import ALG_EPS, SpaceKind, UnsupportedKind, make_algebra


class SolverFailure(RuntimeError):
    """Non-finite values appeared while integrating a spinor field."""


class ShapeSingularity(ValueError):
    """The spinor vanishes at a node where its norm is divided by."""


# ---------------------------------------------------------------------------
# Clifford layouts


@dataclass(frozen=True)
class ClLayout:
    """Where the adapted frame sits in the spinor Clifford algebra.

    ``tangent[a]`` is the basis index of the surface frame vector e_{a+1},
    ``normal`` that of N and ``nu`` that of the quadric position vector.
    """

    sig: Signature
    tangent: tuple[int, int]
    normal: int
    nu: int | None = None

    def vector(self, tangent=None, normal=None, nu=None, shape=()) -> np.ndarray:
        """Coefficient array of a vector given by its frame components."""
        shape = _batch_shape(tangent, normal, nu, shape)
        out = np.zeros(tuple(shape) + (self.sig.dim,))
        if tangent is not None:
            t = np.asarray(tangent, dtype=float)
            out[..., 1 << self.tangent[0]] += t[..., 0]
            out[..., 1 << self.tangent[1]] += t[..., 1]
        if normal is not None:
            out[..., 1 << self.normal] += np.asarray(normal, dtype=float)
        if nu is not None:
            out[..., 1 << self.nu] += np.asarray(nu, dtype=float)
        return out

    def blade(self, *indices: int) -> Multivector:
        return Multivector.basis(self.sig, *indices)


def _batch_shape(tangent, normal, nu, shape):
    shapes = [tuple(shape)]
    if tangent is not None:
        shapes.append(np.shape(tangent)[:-1])
    for p in (normal, nu):
        if p is not None:
            shapes.append(np.shape(p))
    return np.broadcast_shapes(*shapes)


RIEMANNIAN_LAYOUT = ClLayout(CL12, (1, 2), 0)
LORENTZIAN_LAYOUT = ClLayout(CL12, (1, 0), 2)
DE_SITTER_LAYOUT = ClLayout(Signature.from_pq(1, 3), (1, 2), 0, 3)
ANTI_DE_SITTER_LAYOUT = ClLayout(Signature.from_pq(2, 2), (2, 3), 1, 0)


def layout_for(space: SpaceKind | None, eps: tuple[int, int]) -> ClLayout:
    """Layout of the spinor algebra for a target space and surface signature."""
    riemannian = tuple(eps) == (1, 1)
    if space is None or space.is_group or space.name == "euclidean_r3":
        return RIEMANNIAN_LAYOUT if riemannian else LORENTZIAN_LAYOUT
    if not riemannian:
        raise UnsupportedKind(f"{space.name} is only treated for Riemannian surfaces")
    if space.name in ("de_sitter", "r_minus_s2"):
        return DE_SITTER_LAYOUT
    return ANTI_DE_SITTER_LAYOUT


def _lmat(coeffs: np.ndarray, sig: Signature) -> np.ndarray:
    return left_matrix(Multivector(sig, coeffs))


# ---------------------------------------------------------------------------
# spinor fields


@dataclass
class SpinorField:
    """Spinor values on the nodes of a chart.

    ``model`` is ``"intrinsic"`` (psi* picture, even part of Cl(1,2)) or
    ``"extrinsic"`` (the ambient spinor in the adapted frame).
    """

    chart: Chart
    values: np.ndarray
    model: str
    layout: ClLayout

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.chart.shape + (self.layout.sig.dim,):
            raise ValueError(
                f"spinor array shape {self.values.shape} does not match the chart "
                f"{self.chart.shape} and algebra dimension {self.layout.sig.dim}"
            )
        if self.model not in ("intrinsic", "extrinsic"):
            raise ValueError(f"unknown spinor model {self.model!r}")
        if self.model == "intrinsic" and self.layout.sig != CL12:
            raise ValueError("intrinsic spinors live in Cl(1,2)")
        bad = ~np.isfinite(self.values)
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0][:2])
            raise SolverFailure(f"non-finite spinor value at node {idx}")

    @property
    def sig(self) -> Signature:
        return self.layout.sig

    def multivector(self) -> Multivector:
        return Multivector(self.sig, self.values)

    def pairing(self) -> np.ndarray:
        """<<psi, psi>> = tau(psi) psi at every node, coefficient array."""
        mv = self.multivector()
        return mv_product(mv_tau(mv), mv).coeffs

    def unit_defect(self) -> np.ndarray:
        """Distance of <<psi, psi>> from 1 (max over components)."""
        p = self.pairing()
        p[..., 0] -= 1.0
        return np.abs(p).max(axis=-1)

    def indicator(self) -> np.ndarray:
        return self.pairing()[..., 0]

    def with_values(self, values: np.ndarray) -> "SpinorField":
        return SpinorField(self.chart, values, self.model, self.layout)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "signature": str(self.sig),
            "values": self.values.tolist(),
        }


def align_signs(values: np.ndarray, anchor: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Fix the +-1 ambiguity of nodewise spin lifts so the field is continuous.

    Signs propagate along the anchor row and then along every column.
    """
    v = np.array(values, dtype=float)
    nu, nv = v.shape[:2]
    i0, j0 = anchor
    order = list(range(i0 + 1, nu)) + list(range(i0 - 1, -1, -1))
    for i in order:
        prev = i - 1 if i > i0 else i + 1
        if np.dot(v[i, j0], v[prev, j0]) < 0:
            v[i, j0] *= -1.0
    for j in list(range(j0 + 1, nv)) + list(range(j0 - 1, -1, -1)):
        prev = j - 1 if j > j0 else j + 1
        flip = np.einsum("ik,ik->i", v[:, j], v[:, prev]) < 0
        v[flip, j] *= -1.0
    return v


def restricted_spinor(
    chart: Chart, data: GeometryData, model: str | None = None, anchor=(0, 0)
) -> SpinorField:
    """Constant ambient spinor seen in the adapted frame of an immersion.

    At each node the adapted frame is lifted to g in Spin and the restricted
    field is tau(g), so that <<X . phi, phi>> = Ad(g) X is the ambient image
    of X.
    """
    if data.spin_frame is None:
        raise ValueError(f"no spin frame for {data.space.name}")
    layout = layout_for(data.space, chart.eps)
    g = lift_frame(data.spin_frame, layout.sig)
    phi = mv_tau(g).coeffs
    if model is None:
        model = "intrinsic" if data.space.is_group else "extrinsic"
    return SpinorField(chart, align_signs(phi, anchor), model, layout)


# ---------------------------------------------------------------------------
# intrinsic Clifford action


class IntrinsicAction:
    """Clifford module structure of the surface spinor bundle on Cl(1,2)^0."""

    def __init__(self, eps: tuple[int, int]):
        self.eps = tuple(eps)
        self.riemannian = self.eps == (1, 1)
        self.layout = RIEMANNIAN_LAYOUT if self.riemannian else LORENTZIAN_LAYOUT
        n = Multivector.basis(CL12, self.layout.normal)
        if self.riemannian:
            self._i = right_matrix(I_BLADE)
        else:
            self._i = None
        self._n = n
        t1, t2 = self.layout.tangent
        # omega = e_1 . e_2 acts as left multiplication by e_t1 e_t2
        self.omega = left_matrix(Multivector.basis(CL12, t1, t2))
        self.identity = np.eye(CL12.dim)

    @property
    def i(self) -> np.ndarray:
        if self._i is None:
            raise UnsupportedKind("the complex structure is only used on Riemannian surfaces")
        return self._i

    def vec(self, x: np.ndarray) -> np.ndarray:
        """Matrix of psi -> X . psi for frame components x (..., 2)."""
        xv = Multivector(CL12, self.layout.vector(tangent=x))
        if self.riemannian:
            return left_matrix(mv_product(self._n, xv)) @ self._i
        return left_matrix(mv_product(xv, self._n))

    def hermitian(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Real part of the Hermitian product: Euclidean dot of coefficients."""
        return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def apply(mat: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", mat, psi)


def split_pm(psi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """psi = psi+ + psi- with psi+- = (psi +- i e1 e2 psi)/2 (Riemannian picture)."""
    act = IntrinsicAction((1, 1))
    bar = apply(act.i @ act.omega, psi)
    plus = 0.5 * (psi + bar)
    minus = 0.5 * (psi - bar)
    ind = np.sum(plus * plus, axis=-1) - np.sum(minus * minus, axis=-1)
    return plus, minus, ind


# ---------------------------------------------------------------------------
# Killing equations

FORMS = (
    "extrinsic_group",
    "intrinsic_riemannian",
    "intrinsic_lorentzian",
    "product_H2R",
    "product_RS12",
    "product_RH12",
    "desitter",
    "antidesitter",
    "product_RminusS2",
    "lkt",
    "su12",
    "r12_riemannian",
    "killing_lkt",
    "r3_euclidean",
)

_FORM_SPACES = {
    "product_H2R": ("h2xr", "algebra_a"),
    "product_RS12": ("rxs12", "algebra_b"),
    "product_RH12": ("rxh12", "algebra_c"),
    "desitter": ("de_sitter",),
    "antidesitter": ("anti_de_sitter",),
    "product_RminusS2": ("r_minus_s2",),
    "lkt": ("lkt", "su12"),
    "su12": ("su12", "lkt"),
    "r12_riemannian": ("minkowski_r12",),
    "r3_euclidean": ("euclidean_r3",),
}


def default_form(space: SpaceKind, eps: tuple[int, int]) -> str:
    """Default Killing form for a target space and chart signature."""
    riemannian = tuple(eps) == (1, 1)
    if not riemannian:
        if not space.is_group:
            raise UnsupportedKind(f"{space.name} is only treated for Riemannian surfaces")
        return "intrinsic_lorentzian"
    return {
        "minkowski_r12": "r12_riemannian",
        "h2xr": "product_H2R",
        "rxs12": "product_RS12",
        "rxh12": "product_RH12",
        "algebra_a": "product_H2R",
        "algebra_b": "product_RS12",
        "algebra_c": "product_RH12",
        "lkt": "lkt",
        "su12": "su12",
        "de_sitter": "desitter",
        "anti_de_sitter": "antidesitter",
        "r_minus_s2": "product_RminusS2",
        "euclidean_r3": "r3_euclidean",
    }[space.name]


@dataclass
class KillingEquation:
    """Coefficient data of one Killing-type spinor equation on a chart.

    ``S[..., :, a]`` holds the frame components of S(e_a). ``T[..., i, :]`` and
    ``nu[..., i]`` decompose the algebra basis vector e_i as T_i + nu_i N.
    ``tau`` is the bundle curvature for ``killing_lkt``. The Riemannian
    intrinsic form uses Gamma_2 built from (nu_k T_j - nu_j T_k), times
    ``gamma2_sign``; -1 gives the opposite orientation, which does not agree
    with the extrinsic equation and is kept only for comparison.
    """

    form: str
    space: SpaceKind | None
    S: np.ndarray
    T: np.ndarray | None = None
    nu: np.ndarray | None = None
    T0: np.ndarray | None = None
    f: np.ndarray | None = None
    tau: float = 0.0
    gamma2_sign: float = 1.0
    _gamma: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown Killing form {self.form!r}")
        allowed = _FORM_SPACES.get(self.form)
        if allowed is not None and self.space is not None and self.space.name not in allowed:
            raise UnsupportedKind(f"form {self.form} does not apply to {self.space.name}")
        self.S = np.asarray(self.S, dtype=float)
        needs_t = self.form in (
            "extrinsic_group",
            "intrinsic_riemannian",
            "intrinsic_lorentzian",
            "product_H2R",
            "product_RS12",
            "product_RH12",
            "lkt",
        )
        if needs_t and (self.T is None or self.nu is None):
            raise ValueError(f"form {self.form} needs the fields T and nu")
        if self.form == "product_RminusS2" and (self.T0 is None or self.f is None):
            raise ValueError("form product_RminusS2 needs the fields T0 and f")
        if self.form in ("extrinsic_group", "intrinsic_riemannian", "intrinsic_lorentzian"):
            if self.space is None or not self.space.is_group:
                raise UnsupportedKind(f"form {self.form} needs a Lie group target")

    @classmethod
    def from_geometry(
        cls, data: GeometryData, form: str | None = None, chart: Chart | None = None, **kw
    ) -> "KillingEquation":
        eps = (1, 1) if chart is None else chart.eps
        form = form or default_form(data.space, eps)
        return cls(form, data.space, data.S, data.T, data.nu, data.T0, data.f, **kw)

    @property
    def is_intrinsic(self) -> bool:
        return self.form not in (
            "extrinsic_group",
            "desitter",
            "antidesitter",
            "product_RminusS2",
        )

    def layout(self, eps: tuple[int, int]) -> ClLayout:
        if self.is_intrinsic:
            return RIEMANNIAN_LAYOUT if tuple(eps) == (1, 1) else LORENTZIAN_LAYOUT
        return layout_for(self.space, eps)

    def check_chart(self, chart: Chart):
        riem = chart.eps == (1, 1)
        if self.form == "intrinsic_lorentzian" and riem:
            raise UnsupportedKind("intrinsic_lorentzian needs a Lorentzian chart")
        if self.form not in ("intrinsic_lorentzian", "extrinsic_group") and not riem:
            raise UnsupportedKind(f"form {self.form} needs a Riemannian chart")
        if self.S.shape[:2] != chart.shape:
            raise ValueError("coefficient fields do not match the chart")

    # coefficient helpers ------------------------------------------------------
    def _x_dot_t(self, chart: Chart, x: np.ndarray) -> np.ndarray:
        """<X, T_i> for i = 1..3, shape (..., 3)."""
        e = np.array(chart.eps, dtype=float)
        return np.einsum("...a,a,...ia->...i", x, e, self.T)

    def _gamma_weights(self, chart: Chart, x: np.ndarray) -> np.ndarray:
        """w[..., j, k] = sum_i eps_i <X,T_i> eps_j eps_k Gamma_ij^k."""
        alg = make_algebra(self.space)
        ae = np.array(ALG_EPS, dtype=float)
        xt = self._x_dot_t(chart, x)
        return np.einsum("...i,i,j,k,ijk->...jk", xt, ae, ae, ae, alg.gamma)

    def gamma_bivector(self, chart: Chart, x: np.ndarray, layout: ClLayout) -> np.ndarray:
        """Gamma(X) as a bivector in the adapted frame, via the skew-operator route."""
        alg = make_algebra(self.space)
        ae = np.array(ALG_EPS, dtype=float)
        xt = self._x_dot_t(chart, x)
        x_alg = ae * xt
        a = alg.gamma_matrix(x_alg)  # algebra coordinates
        # P[:, i] = frame coordinates of e_i, rows in layout order
        n = layout.sig.n
        p = np.zeros(self.T.shape[:-2] + (n, 3))
        p[..., layout.tangent[0], :] = self.T[..., :, 0]
        p[..., layout.tangent[1], :] = self.T[..., :, 1]
        p[..., layout.normal, :] = self.nu
        m = p @ a @ np.linalg.inv(p)
        return skew_to_bivector(SkewOperator(layout.sig, m), tol=1e-9).coeffs

    def rhs_matrix(self, chart: Chart, x: np.ndarray) -> np.ndarray:
        """Matrix field of psi -> rhs(X, psi) for a tangent field X (..., 2)."""
        self.check_chart(chart)
        x = np.broadcast_to(np.asarray(x, dtype=float), chart.shape + (2,))
        e = np.array(chart.eps, dtype=float)
        sx = np.einsum("...ab,...b->...a", self.S, x)
        form = self.form
        if not self.is_intrinsic:
            layout = layout_for(self.space, chart.eps)
            return self._extrinsic(chart, x, sx, e, layout)
        act = IntrinsicAction(chart.eps)
        vec = act.vec
        if form == "intrinsic_lorentzian":
            out = -0.5 * vec(sx)
            w = self._gamma_weights(chart, x)
            gt = np.zeros(out.shape)
            for j in range(3):
                for k in range(j + 1, 3):
                    tj, tk = vec(self.T[..., j, :]), vec(self.T[..., k, :])
                    biv = 0.5 * (tj @ tk - tk @ tj)
                    lin = vec(
                        self.nu[..., k, None] * self.T[..., j, :]
                        - self.nu[..., j, None] * self.T[..., k, :]
                    )
                    gt = gt + w[..., j, k, None, None] * (biv + lin)
            return out + 0.5 * gt
        i = act.i
        if form == "r3_euclidean":
            return -0.5 * vec(sx)
        out = 0.5 * (i @ vec(sx))
        om = act.omega
        if form == "r12_riemannian":
            return out
        if form == "intrinsic_riemannian":
            w = self._gamma_weights(chart, x)
            g1 = np.zeros(out.shape)
            g2 = np.zeros(out.shape)
            for j in range(3):
                for k in range(j + 1, 3):
                    tj, tk = vec(self.T[..., j, :]), vec(self.T[..., k, :])
                    g1 = g1 + w[..., j, k, None, None] * 0.5 * (tj @ tk - tk @ tj)
                    lin = vec(
                        self.nu[..., k, None] * self.T[..., j, :]
                        - self.nu[..., j, None] * self.T[..., k, :]
                    )
                    g2 = g2 + w[..., j, k, None, None] * lin
            return out + 0.5 * g1 + 0.5 * self.gamma2_sign * (i @ g2)
        if form in ("product_H2R", "product_RS12", "product_RH12"):
            xt = self._x_dot_t(chart, x)
            space = self.space
            if form == "product_H2R":
                c, ti, tj = -0.5 * space.alpha, 1, 2
            elif form == "product_RS12":
                c, ti, tj = 0.5 * space.alpha, 0, 1
            else:
                c, ti, tj = 0.5 * space.delta, 2, 1
            inner = i @ vec(self.T[..., tj, :]) + self.nu[..., tj, None, None] * act.identity
            return out + (c * xt[..., ti])[..., None, None] * (inner @ om)
        if form in ("lkt", "su12"):
            tau = self.space.tau
            sigma = self.space.sigma
            if form == "su12":
                return out - 0.5 * (i @ vec(x) @ om)
            t3 = self.T[..., 2, :]
            nu3 = self.nu[..., 2]
            xt3 = chart.inner(x, t3)
            inner = tau * (i @ vec(x)) + ((sigma + 2 * tau) * xt3)[..., None, None] * (
                i @ vec(t3) + nu3[..., None, None] * act.identity
            )
            return out - 0.5 * (inner @ om)
        if form == "killing_lkt":
            return out - 0.5 * self.tau * (i @ vec(x) @ om)
        raise UnsupportedKind(f"form {form} is not intrinsic")

    def _extrinsic(self, chart, x, sx, e, layout: ClLayout) -> np.ndarray:
        sig = layout.sig
        eps_n = chart.eps_normal
        # B(X, e_j) = eps_N h(X, e_j) N with h(X, e_j) = eps_j (S X)_j
        hx = e * sx
        nvec = Multivector.basis(sig, layout.normal)
        acc = np.zeros(chart.shape + (sig.dim,))
        for j in range(2):
            ej = Multivector.basis(sig, layout.tangent[j])
            blade = mv_product(ej, nvec).coeffs
            acc = acc + (e[j] * eps_n * hx[..., j])[..., None] * blade
        out = -0.5 * _lmat(acc, sig)
        form = self.form
        if form == "extrinsic_group":
            return out + 0.5 * _lmat(self.gamma_bivector(chart, x, layout), sig)
        nu_v = Multivector.basis(sig, layout.nu)
        if form == "product_RminusS2":
            xt = chart.inner(x, self.T0)
            tang = x + xt[..., None] * self.T0
            norm = xt * self.f
            xv = layout.vector(tangent=tang, normal=norm)
            sign = 0.5
        else:
            xv = layout.vector(tangent=x)
            sign = 0.5 if form == "desitter" else -0.5
        prod = mv_product(Multivector(sig, xv), nu_v).coeffs
        return out + sign * _lmat(prod, sig)


def killing_rhs(eq: KillingEquation, chart: Chart, psi: np.ndarray, x: np.ndarray) -> np.ndarray:
    """rhs(X, psi) of the equation at every node."""
    return apply(eq.rhs_matrix(chart, x), psi)


# ---------------------------------------------------------------------------
# covariant derivative


def connection_matrix(chart: Chart, layout: ClLayout, j: int) -> np.ndarray:
    """psi -> (1/2) eps_1 eps_2 omega_12(e_j) e_t1 e_t2 psi."""
    t1, t2 = layout.tangent
    blade = left_matrix(Multivector.basis(layout.sig, t1, t2))
    c = 0.5 * chart.eps[0] * chart.eps[1] * chart.omega[..., j]
    return c[..., None, None] * blade


def spinor_covariant_derivative(field: SpinorField, j: int) -> np.ndarray:
    """nabla_{e_j} psi by finite differences plus the spin connection term."""
    chart = field.chart
    d = chart.along(field.values, j)
    return d + apply(connection_matrix(chart, field.layout, j), field.values)


def residual_killing(eq: KillingEquation, field: SpinorField) -> np.ndarray:
    """sum over a of |nabla_{e_a} psi - rhs(e_a, psi)| at every node."""
    chart = field.chart
    out = np.zeros(chart.shape)
    for a in range(2):
        x = np.zeros(2)
        x[a] = 1.0
        diff = spinor_covariant_derivative(field, a) - killing_rhs(eq, chart, field.values, x)
        out += np.linalg.norm(diff, axis=-1)
    return out


# ---------------------------------------------------------------------------
# solver


@dataclass
class KillingSolution:
    field: SpinorField
    residual: float  # max plaquette defect
    defect_field: np.ndarray
    unit_drift: float

    @property
    def defect_density(self) -> float:
        """Max plaquette defect per unit cell area.

        Tends to zero on compatible data and stays O(1) when the coefficients
        violate the integrability conditions.
        """
        ch = self.field.chart
        return self.residual / abs(ch.hu * ch.hv)


def _generators(eq: KillingEquation, chart: Chart, layout: ClLayout) -> list[np.ndarray]:
    """Coordinate-direction generators: d psi / du^a = G_a psi."""
    cof = chart.coframe  # [..., j, a]
    per_frame = []
    for j in range(2):
        x = np.zeros(2)
        x[j] = 1.0
        per_frame.append(eq.rhs_matrix(chart, x) - connection_matrix(chart, layout, j))
    gens = []
    for a in range(2):
        gens.append(sum(cof[..., j, a, None, None] * per_frame[j] for j in range(2)))
    return gens


def _magnus(a1: np.ndarray, a2: np.ndarray, h) -> np.ndarray:
    """Fourth-order Magnus propagator for a linearly interpolated generator."""
    h = np.asarray(h, dtype=float)[..., None, None]
    omega = 0.5 * h * (a1 + a2) + (h**2 / 12.0) * (a2 @ a1 - a1 @ a2)
    shape = omega.shape
    return expm(omega.reshape((-1,) + shape[-2:])).reshape(shape)


def solve_killing(
    eq: KillingEquation,
    chart: Chart,
    psi0,
    anchor: tuple[int, int] = (0, 0),
    unit_tol: float = 1e-8,
) -> KillingSolution:
    """Integrate nabla psi = rhs(psi) from ``psi0`` at the anchor node.

    The anchor row is integrated first, then every column. Each edge uses the
    fourth-order Magnus step of the generator interpolated linearly between
    its end nodes. The plaquette defect compares the two edge paths around
    every cell.
    """
    eq.check_chart(chart)
    layout = eq.layout(chart.eps)
    psi0 = np.asarray(psi0.coeffs if isinstance(psi0, Multivector) else psi0, dtype=float)
    if psi0.shape != (layout.sig.dim,):
        raise ValueError(f"initial spinor must have {layout.sig.dim} coefficients")
    if eq.form == "r3_euclidean":
        drift0 = abs(float(psi0 @ psi0) - 1.0)
    else:
        pv = Multivector(layout.sig, psi0)
        pp = mv_product(mv_tau(pv), pv).coeffs.copy()
        pp[0] -= 1.0
        drift0 = float(np.abs(pp).max())
    if drift0 > unit_tol:
        raise ValueError(f"initial spinor violates the unit constraint by {drift0:.3e}")
    gu, gv = _generators(eq, chart, layout)
    nu, nv = chart.shape
    hu, hv = chart.hu, chart.hv
    i0, j0 = anchor
    psi = np.zeros((nu, nv, layout.sig.dim))
    psi[i0, j0] = psi0
    # propagators along u-edges (i, j) -> (i+1, j) and v-edges (i, j) -> (i, j+1)
    pu_f = _magnus(gu[:-1], gu[1:], hu)
    pv_f = _magnus(gv[:, :-1], gv[:, 1:], hv)
    for i in range(i0 + 1, nu):
        psi[i, j0] = pu_f[i - 1, j0] @ psi[i - 1, j0]
    for i in range(i0 - 1, -1, -1):
        psi[i, j0] = np.linalg.solve(pu_f[i, j0], psi[i + 1, j0])
    for j in range(j0 + 1, nv):
        psi[:, j] = np.einsum("ikl,il->ik", pv_f[:, j - 1], psi[:, j - 1])
    for j in range(j0 - 1, -1, -1):
        psi[:, j] = np.linalg.solve(pv_f[:, j], psi[:, j + 1][..., None])[..., 0]
    if not np.all(np.isfinite(psi)):
        idx = tuple(int(k) for k in np.argwhere(~np.isfinite(psi))[0][:2])
        raise SolverFailure(f"non-finite spinor at node {idx}")
    base = psi[:-1, :-1]
    path1 = apply(pv_f[1:, :], apply(pu_f[:, :-1], base))
    path2 = apply(pu_f[:, 1:], apply(pv_f[:-1, :], base))
    norm = np.maximum(np.linalg.norm(path1, axis=-1), 1e-300)
    defect = np.linalg.norm(path1 - path2, axis=-1) / norm
    model = "intrinsic" if eq.is_intrinsic else "extrinsic"
    fld = SpinorField(chart, psi, model, layout)
    if eq.form == "r3_euclidean":
        drift = float(np.abs(np.sum(psi * psi, axis=-1) - 1.0).max())
    else:
        drift = float(fld.unit_defect().max())
    return KillingSolution(fld, float(defect.max(initial=0.0)), defect, drift)


# ---------------------------------------------------------------------------
# Dirac operator and shape recovery


def dirac(field: SpinorField) -> np.ndarray:
    """D psi = sum_j e_j . nabla_{e_j} psi (intrinsic Riemannian spinors)."""
    chart = field.chart
    if chart.eps != (1, 1) or field.model != "intrinsic":
        raise UnsupportedKind("the Dirac operator is defined for intrinsic Riemannian spinors")
    act = IntrinsicAction(chart.eps)
    out = np.zeros_like(field.values)
    for j in range(2):
        x = np.zeros(2)
        x[j] = 1.0
        out += apply(act.vec(x), spinor_covariant_derivative(field, j))
    return out


def dirac_lkt_residual(field: SpinorField, H, tau: float) -> np.ndarray:
    """|D psi + i H psi - i tau omega psi| at every node."""
    act = IntrinsicAction(field.chart.eps)
    psi = field.values
    H = np.broadcast_to(np.asarray(H, dtype=float), field.chart.shape)
    rhs = -H[..., None] * apply(act.i, psi) + tau * apply(act.i @ act.omega, psi)
    return np.linalg.norm(dirac(field) - rhs, axis=-1)


def shape_from_spinor(field: SpinorField, tau: float = 0.0) -> np.ndarray:
    """Shape operator S[..., :, a] = S(e_a) recovered from a Dirac spinor.

    <S(Y), X> = 2/|psi|^2 (<i X . nabla_Y psi, psi> - tau/2 g(X, JY) |psi|^2).
    """
    chart = field.chart
    if chart.eps != (1, 1):
        raise UnsupportedKind("shape recovery is defined on Riemannian charts")
    act = IntrinsicAction(chart.eps)
    psi = field.values
    n2 = np.sum(psi * psi, axis=-1)
    if np.any(n2 < 1e-14):
        idx = tuple(int(k) for k in np.argwhere(n2 < 1e-14)[0])
        raise ShapeSingularity(f"spinor vanishes at node {idx}")
    S = np.zeros(chart.shape + (2, 2))
    basis = np.eye(2)
    for b in range(2):  # Y = e_b
        dpsi = spinor_covariant_derivative(field, b)
        jy = chart.rotate(basis[b])
        for a in range(2):  # X = e_a, <S e_b, e_a> = S[a, b]
            ix = act.i @ act.vec(basis[a])
            val = act.hermitian(apply(ix, dpsi), psi)
            S[..., a, b] = 2.0 / n2 * (val - 0.5 * tau * jy[a] * n2)
    return S


def shape_defects(S: np.ndarray, H=None) -> dict[str, np.ndarray]:
    """Symmetry and trace defects of a recovered shape operator field."""
    out = {"symmetry": np.abs(S[..., 0, 1] - S[..., 1, 0])}
    if H is not None:
        out["trace"] = np.abs(0.5 * (S[..., 0, 0] + S[..., 1, 1]) - np.asarray(H))
    return out


__all__ = [
    "ClLayout",
    "layout_for",
    "SpinorField",
    "IntrinsicAction",
    "KillingEquation",
    "KillingSolution",
    "FORMS",
    "default_form",
    "restricted_spinor",
    "align_signs",
    "split_pm",
    "killing_rhs",
    "spinor_covariant_derivative",
    "connection_matrix",
    "residual_killing",
    "solve_killing",
    "dirac",
    "dirac_lkt_residual",
    "shape_from_spinor",
    "shape_defects",
    "interior",
    "CliffordError",
]
