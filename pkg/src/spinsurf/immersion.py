"""Immersions from spinor fields: the 1-form xi, reconstruction in every
target space, and verification of a reconstructed immersion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chart import (
    Chart,
    GeometryData,
    ImmersionField,
    ambient_eps,
    chart_from_immersion,
    extract_geometry,
    quadric_defect,
    _model_for,
    _tangent_vectors,
    _GridD,
)
from .clifford import CL02, CL12, Multivector, mv_product, mv_tau, right_matrix, star_map
from .lie import ALG_TO_CL, SpaceKind, UnsupportedKind, darboux_integrate
from .spinor import (
    IntrinsicAction,
    KillingEquation,
    SpinorField,
    apply,
    residual_killing,
    split_pm,
)


class ReconstructionRefused(ValueError):
    """The spinor field does not solve its equation well enough to integrate."""


class NotClosed(ValueError):
    """A 1-form that must be exact is not closed to tolerance."""


# ---------------------------------------------------------------------------
# helpers


def _ambient_of_cl(space: SpaceKind, coeffs: np.ndarray) -> np.ndarray:
    """Grade-1 coefficients of a multivector as ambient (or algebra) coordinates."""
    n = 3 if space.is_group else 4
    vec = np.stack([coeffs[..., 1 << k] for k in range(n)], axis=-1)
    if space.is_group:
        return vec[..., list(ALG_TO_CL)]
    return vec


def pairing_vector(phi: np.ndarray, x: np.ndarray, sig) -> np.ndarray:
    """<<x . phi, phi>> = tau(phi) x phi for coefficient arrays."""
    p = Multivector(sig, phi)
    return mv_product(mv_tau(p), mv_product(Multivector(sig, x), p)).coeffs


def _grade_defect(coeffs: np.ndarray, sig) -> np.ndarray:
    vec_mask = np.array([bin(m).count("1") == 1 for m in range(sig.dim)])
    return np.abs(coeffs[..., ~vec_mask]).max(axis=-1)


# ---------------------------------------------------------------------------
# the quaternionic structure and the component formula


def _build_alpha() -> np.ndarray:
    """Right multiplication by J on the quaternion model, in the psi* picture."""
    even = [0, 3, 5, 6]
    star = np.zeros((8, 4))
    for m in range(4):
        c = np.zeros(4)
        c[m] = 1.0
        star[:, m] = star_map(Multivector(CL02, c), "riemannian").coeffs
    fe = star[even]
    # e1 of Cl(0,2) is J in the quaternion reading used by the star map
    rj = right_matrix(Multivector.basis(CL02, 0))
    out = np.zeros((8, 8))
    out[np.ix_(even, even)] = fe @ rj @ np.linalg.inv(fe)
    return out


ALPHA = _build_alpha()


def hermitian(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Complex-valued spinor product <a, b> = Re + I Im, complex-linear in a.

    The real part is the Euclidean product of coefficients; the imaginary
    part is <a, i b> with i = right multiplication by the I-blade.
    """
    act = IntrinsicAction((1, 1))
    re = np.sum(a * b, axis=-1)
    im = np.sum(a * apply(act.i, b), axis=-1)
    return re, im


def xi_components(psi: np.ndarray, x: np.ndarray) -> np.ndarray:
    """xi(X) from psi+ and psi- and the quaternionic structure.

    xi = 2 iI Im<X psi-, psi+> + J(<X psi+, a(psi+)> - <X psi-, a(psi-)>),
    returned in Cl(1,2) vector components (e0, e1, e2) with iI = e0, J = e1,
    -K = e2.
    """
    act = IntrinsicAction((1, 1))
    plus, minus, _ = split_pm(psi)
    xm = act.vec(x)
    _, im = hermitian(apply(xm, minus), plus)
    re1, im1 = hermitian(apply(xm, plus), apply(ALPHA, plus))
    re2, im2 = hermitian(apply(xm, minus), apply(ALPHA, minus))
    # J (z) with z = re + I im equals re J - im K
    return np.stack([2.0 * im, re1 - re2, im1 - im2], axis=-1)


# ---------------------------------------------------------------------------
# xi


@dataclass
class XiForm:
    """xi(d/du), xi(d/dv) at every node, in algebra or ambient coordinates."""

    space: SpaceKind
    du: np.ndarray
    dv: np.ndarray
    frame_values: np.ndarray  # xi(e_j) stacked on axis -2
    grade_defect: float
    isometry_defect: float
    explicit_defect: float | None = None

    def along(self, a: int) -> np.ndarray:
        return self.du if a == 0 else self.dv


def _frame_vector(field: SpinorField, j: int) -> np.ndarray:
    x = np.zeros(2)
    x[j] = 1.0
    return field.layout.vector(tangent=np.broadcast_to(x, field.chart.shape + (2,)))


def xi_form(field: SpinorField, space: SpaceKind, unit_tol: float = 1e-6) -> XiForm:
    """xi(X) = <<X . phi, phi>> with phi = psi* for intrinsic input."""
    chart = field.chart
    drift = float(field.unit_defect().max())
    if drift > unit_tol:
        raise ValueError(f"spinor violates the unit constraint by {drift:.3e}")
    sig = field.sig
    per_frame = []
    grade = 0.0
    for j in range(2):
        val = pairing_vector(field.values, _frame_vector(field, j), sig)
        grade = max(grade, float(_grade_defect(val, sig).max()))
        per_frame.append(_ambient_of_cl(space, val))
    fv = np.stack(per_frame, axis=-2)
    cof = chart.coframe  # [..., j, a]
    du = np.einsum("...j,...jm->...m", cof[..., :, 0], fv)
    dv = np.einsum("...j,...jm->...m", cof[..., :, 1], fv)
    eps = np.array(ambient_eps(space), dtype=float)
    gram = np.einsum("...im,m,...jm->...ij", fv, eps, fv)
    iso = float(np.abs(gram - np.diag(chart.eps)).max())
    explicit = None
    if field.model == "intrinsic" and chart.eps == (1, 1) and space.is_group:
        worst = 0.0
        for j in range(2):
            x = np.zeros(2)
            x[j] = 1.0
            comp = xi_components(field.values, x)  # (e0, e1, e2)
            direct = np.stack([fv[..., j, k] for k in np.argsort(ALG_TO_CL)], axis=-1)
            worst = max(worst, float(np.abs(comp - direct).max()))
        explicit = worst
    return XiForm(space, du, dv, fv, grade, iso, explicit)


# ---------------------------------------------------------------------------
# reconstruction


@dataclass
class Reconstruction:
    immersion: ImmersionField
    integrability: float  # Darboux plaquette defect (groups) or eta defect
    quadric: float | None = None  # quadric containment defect
    e0_deviation: float | None = None  # deviation of <<e0 phi, phi>> from its mean
    e0_nu_orthogonality: float | None = None
    eta: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


@dataclass
class EtaResult:
    eta: np.ndarray
    defect: float  # max plaquette defect of the path integral
    curl: float  # max discrete curl of the 1-form


def integrate_eta(
    chart: Chart, T: np.ndarray, anchor=(0, 0), tol: float | None = 1e-2
) -> EtaResult:
    """eta with d eta(X) = -<X, T> and eta(anchor) = 0, by trapezoid paths."""
    T = np.asarray(T, dtype=float)
    e = np.array(chart.eps, dtype=float)
    # beta(d/du^a) = -sum_j coframe[j, a] eps_j T_j
    beta = -np.einsum("...ja,j,...j->...a", chart.coframe, e, T)
    bu, bv = beta[..., 0], beta[..., 1]
    hu, hv = chart.hu, chart.hv
    nu, nv = chart.shape
    i0, j0 = anchor
    eta = np.zeros((nu, nv))
    eu = 0.5 * hu * (bu[1:] + bu[:-1])  # increment along u-edges
    ev = 0.5 * hv * (bv[:, 1:] + bv[:, :-1])
    for i in range(i0 + 1, nu):
        eta[i, j0] = eta[i - 1, j0] + eu[i - 1, j0]
    for i in range(i0 - 1, -1, -1):
        eta[i, j0] = eta[i + 1, j0] - eu[i, j0]
    for j in range(j0 + 1, nv):
        eta[:, j] = eta[:, j - 1] + ev[:, j - 1]
    for j in range(j0 - 1, -1, -1):
        eta[:, j] = eta[:, j + 1] - ev[:, j]
    loop = eu[:, :-1] + ev[1:, :] - ev[:-1, :] - eu[:, 1:]
    defect = float(np.abs(loop).max(initial=0.0))
    curl = float(np.abs(loop / (hu * hv)).max(initial=0.0))
    if tol is not None and curl > tol:
        raise NotClosed(f"-<., T> is not closed: discrete curl {curl:.3e} exceeds {tol:.1e}")
    return EtaResult(eta, defect, curl)


def reconstruct(
    space: SpaceKind,
    field: SpinorField,
    anchor=(0, 0),
    g0=None,
    eq: KillingEquation | None = None,
    threshold: float | None = None,
    data: GeometryData | None = None,
) -> Reconstruction:
    """Immersion of the chart determined by a spinor field.

    Group kinds integrate dF = F xi from ``g0`` at the anchor. Quadric kinds
    use the pointwise formula F = <<nu . phi, phi>>; the product with R_-
    adds eta <<e0 . phi, phi>> with d eta = -<., T>. If ``eq`` and
    ``threshold`` are given the Killing residual is checked first.
    """
    chart = field.chart
    if eq is not None and threshold is not None:
        res = float(residual_killing(eq, field)[2:-2, 2:-2].max())
        if res > threshold:
            raise ReconstructionRefused(
                f"Killing residual {res:.3e} exceeds the threshold {threshold:.1e}"
            )
    u, v = chart.u, chart.v
    if space.is_group:
        xi = xi_form(field, space)
        model = _model_for(space)
        start = model.identity() if g0 is None else g0
        dres = darboux_integrate(xi.du, xi.dv, chart.hu, chart.hv, model, start, anchor)
        imm = ImmersionField(space, dres.points, u, v)
        return Reconstruction(imm, dres.residual, extras={"xi": xi})
    if not space.is_quadric:
        raise UnsupportedKind(f"cannot reconstruct into {space.name}")
    if field.model != "extrinsic":
        raise ValueError("quadric reconstruction needs an extrinsic spinor field")
    sig = field.sig
    layout = field.layout
    nu_vec = np.zeros(chart.shape + (sig.dim,))
    nu_vec[..., 1 << layout.nu] = 1.0
    pos = _ambient_of_cl(space, pairing_vector(field.values, nu_vec, sig))
    if space.name in ("de_sitter", "anti_de_sitter"):
        qd = float(np.abs(quadric_defect(space, pos)).max())
        return Reconstruction(ImmersionField(space, pos, u, v), 0.0, quadric=qd)
    # product with R_-: need T and f of d/dt = T + f N
    if data is None or data.T0 is None:
        raise ValueError("R_- x S2 reconstruction needs the fields T0 and f")
    e0 = layout.vector(tangent=data.T0, normal=data.f)
    e0_img = _ambient_of_cl(space, pairing_vector(field.values, e0, sig))
    mean = e0_img.reshape(-1, 4).mean(axis=0)
    deviation = float(np.abs(e0_img - mean).max())
    eps = np.array(ambient_eps(space), dtype=float)
    ortho = float(np.abs(np.einsum("...m,m,...m->...", pos, eps, e0_img)).max())
    eres = integrate_eta(chart, data.T0, anchor)
    eta = eres.eta
    if g0 is not None:
        # time of the anchor point measured along e0
        eta = eta - float(np.dot(np.asarray(g0, dtype=float) * eps, mean))
    points = eta[..., None] * mean + pos
    # containment in the space factor of the splitting F = eta e0 + <<nu phi, phi>>
    qd = float(np.abs(np.einsum("...m,m,...m->...", pos, eps, pos) - 1.0).max())
    return Reconstruction(
        ImmersionField(space, points, u, v),
        eres.defect,
        quadric=qd,
        e0_deviation=deviation,
        e0_nu_orthogonality=ortho,
        eta=eta,
        extras={
            "e0": mean,
            "e0_field": e0_img,
            "quadric_ambient": float(np.abs(quadric_defect(space, points)).max()),
        },
    )


# ---------------------------------------------------------------------------
# verification


def differential(imm: ImmersionField) -> np.ndarray:
    """dF(d/du), dF(d/dv) (left-trivialised for group kinds), shape (..., 2, m)."""
    return _tangent_vectors(imm.space, imm, _GridD(imm.u, imm.v))


def xi_defect(imm: ImmersionField, xi: XiForm) -> np.ndarray:
    """|dF(d/du^a) - xi(d/du^a)| summed over a, at every node."""
    w = differential(imm)
    return np.linalg.norm(w[..., 0, :] - xi.du, axis=-1) + np.linalg.norm(
        w[..., 1, :] - xi.dv, axis=-1
    )


def verify_immersion(
    F: ImmersionField,
    chart: Chart,
    data: GeometryData,
    space: SpaceKind | None = None,
    field: SpinorField | None = None,
) -> dict[str, np.ndarray]:
    """Pointwise defects of F against prescribed (g, S).

    ``isometry``: induced metric against g (coordinate components).
    ``normal``: <dF(e_a), Phi(N)> with Phi(N) = <<N . phi, phi>> when a spinor
    field is given, otherwise against the normal of F itself.
    ``second_fundamental_form``: frame components of S^F against S, after
    matching the normal orientation.
    ``quadric``: containment defect for quadric kinds.
    """
    space = space or F.space
    own = chart_from_immersion(F)
    geo = extract_geometry(F, own)
    out = {"isometry": np.abs(own.metric - chart.metric).max(axis=(-1, -2))}
    eps = np.array(ambient_eps(space), dtype=float)
    w = differential(F)
    if field is not None:
        n_vec = np.zeros(chart.shape + (field.sig.dim,))
        n_vec[..., 1 << field.layout.normal] = 1.0
        normal = _ambient_of_cl(space, pairing_vector(field.values, n_vec, field.sig))
    else:
        normal = geo.normal
    # dF(e_a) = sum_b frame[b, a] dF(d/du^b)
    de = np.einsum("...ba,...bm->...am", chart.frame, w)
    out["normal"] = np.abs(np.einsum("...am,m,...m->...a", de, eps, normal)).max(axis=-1)
    orient = np.sign(np.einsum("...m,m,...m->...", geo.normal, eps, normal))
    orient = orient * np.sign(np.einsum("...m,m,...m->...", normal, eps, normal))
    s_f = orient[..., None, None] * geo.S
    out["second_fundamental_form"] = np.abs(s_f - data.S).max(axis=(-1, -2))
    if space.is_quadric:
        out["quadric"] = np.abs(quadric_defect(space, F.points))
    return out


def ambient_positions(imm: ImmersionField) -> np.ndarray:
    """Real coordinates of the points of an immersion (3 for groups, 4 for quadrics)."""
    if imm.space.is_group:
        return _model_for(imm.space).coordinates(imm.points)
    return np.asarray(imm.points, dtype=float)


def align_anchor(
    rec: ImmersionField, ref: ImmersionField, anchor=(0, 0)
) -> np.ndarray:
    """Positions of ``rec`` moved by the ambient isometry matching ``ref`` at the anchor.

    The isometry is fitted from the 1-jet at the anchor (point, differential
    and normal). Implemented for the flat space and the quadrics, whose
    isometry groups act linearly on the ambient coordinates.
    """
    space = rec.space
    if space.name not in ("minkowski_r12", "de_sitter", "anti_de_sitter"):
        raise UnsupportedKind(f"anchor alignment is not implemented for {space.name}")
    eps = np.array(ambient_eps(space), dtype=float)
    grid = _GridD(rec.u, rec.v)
    pr, pf = ambient_positions(rec), ambient_positions(ref)
    fr = _jet_frame(space, rec, grid, pr, anchor, eps)
    ff = _jet_frame(space, ref, grid, pf, anchor, eps)
    # L fr = ff with both frames orthonormal: L = ff diag(eps_cols) fr^T diag(eps)
    ecol = np.einsum("mk,m,mk->k", fr, eps, fr)
    lmap = ff @ np.diag(ecol) @ fr.T @ np.diag(eps)
    if space.is_quadric:
        return np.einsum("mn,...n->...m", lmap, pr)
    i0, j0 = anchor
    return pf[i0, j0] + np.einsum("mn,...n->...m", lmap, pr - pr[i0, j0])


def _jet_frame(space, imm, grid, pos, anchor, eps) -> np.ndarray:
    i0, j0 = anchor
    du, dv = grid(pos)
    cols = [du[i0, j0], dv[i0, j0]]
    if space.is_quadric:
        cols.append(pos[i0, j0])
    basis = []
    for c in cols:
        c = np.array(c, dtype=float)
        for b in basis:
            c = c - (c @ (eps * b)) / (b @ (eps * b)) * b
        basis.append(c / np.sqrt(abs(c @ (eps * c))))
    # complete with the orthogonal direction
    m = np.stack([b * eps for b in basis])
    n = np.linalg.svd(m)[2][-1]
    sign = np.sign(np.linalg.det(np.stack(basis + [n], axis=-1)))
    n = sign * n / np.sqrt(abs(n @ (eps * n)))
    return np.stack(basis + [n], axis=-1)


__all__ = [
    "ALPHA",
    "XiForm",
    "Reconstruction",
    "EtaResult",
    "ReconstructionRefused",
    "NotClosed",
    "hermitian",
    "xi_components",
    "xi_form",
    "integrate_eta",
    "reconstruct",
    "differential",
    "xi_defect",
    "verify_immersion",
    "ambient_positions",
    "align_anchor",
    "pairing_vector",
]
