"""Discrete charts of immersed surfaces and the geometry induced on them.

A chart is a rectangular parameter grid carrying the induced metric and an
orthonormal frame. Tangent vectors are stored by their components in that
frame, so <X, Y> = eps_1 X_1 Y_1 + eps_2 X_2 Y_2. All derivatives are
second-order finite differences (``np.gradient`` with ``edge_order=2``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lie import (
    ALG_EPS,
    ALG_TO_CL,
    GroupModel,
    LktCoordinateModel,
    MatrixModel,
    SpaceKind,
    group_model,
    make_algebra,
)


class DegenerateSurface(ValueError):
    """The induced metric is degenerate at some node."""


class FrameBranchError(ValueError):
    """Neighbouring frames point in opposite directions."""


class InvalidGrid(ValueError):
    pass


MIN_NODES = 8


# ---------------------------------------------------------------------------
# chart


@dataclass
class Chart:
    """Grid with metric ``g[..., a, b]`` and frame ``frame[..., a, j]``.

    ``frame[..., a, j]`` is the d/du^a component of the unit vector e_j.
    """

    u: np.ndarray
    v: np.ndarray
    metric: np.ndarray
    frame: np.ndarray
    eps: tuple[int, int]
    _omega: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if len(self.u) < MIN_NODES or len(self.v) < MIN_NODES:
            raise InvalidGrid(f"grid must be at least {MIN_NODES}x{MIN_NODES}")
        self.eps = tuple(int(e) for e in self.eps)
        if self.eps not in ((1, 1), (1, -1), (-1, 1)):
            raise ValueError(f"unsupported frame signs {self.eps}")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.u), len(self.v))

    @property
    def hu(self) -> float:
        return float(self.u[1] - self.u[0])

    @property
    def hv(self) -> float:
        return float(self.v[1] - self.v[0])

    @property
    def h(self) -> float:
        return max(abs(self.hu), abs(self.hv))

    @property
    def signature(self) -> str:
        return "riemannian" if self.eps == (1, 1) else "lorentzian"

    @property
    def eps_normal(self) -> int:
        return -1 if self.signature == "riemannian" else 1

    def d(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(d/du f, d/dv f) for arrays whose first two axes are the grid."""
        f = np.asarray(f)
        return (
            np.gradient(f, self.u, axis=0, edge_order=2),
            np.gradient(f, self.v, axis=1, edge_order=2),
        )

    def along(self, f: np.ndarray, j: int) -> np.ndarray:
        """Derivative of f along the frame vector e_j."""
        fu, fv = self.d(f)
        extra = (None,) * (np.ndim(f) - 2)
        a = self.frame[..., 0, j][(...,) + extra]
        b = self.frame[..., 1, j][(...,) + extra]
        return a * fu + b * fv

    @property
    def coframe(self) -> np.ndarray:
        """Inverse frame: d/du^a = sum_j coframe[..., j, a] e_j."""
        return np.linalg.inv(self.frame)

    def inner(self, x, y) -> np.ndarray:
        """Metric pairing of frame-component vectors (..., 2)."""
        e = np.array(self.eps, dtype=float)
        return np.sum(np.asarray(x) * e * np.asarray(y), axis=-1)

    @property
    def omega(self) -> np.ndarray:
        """omega_12(e_k) = <nabla_{e_k} e_1, e_2>, shape (nu, nv, 2)."""
        if self._omega is None:
            self._omega = levi_civita_surface(self)
        return self._omega

    def orthonormality_defect(self) -> float:
        gram = np.einsum("...ai,...ab,...bj->...ij", self.frame, self.metric, self.frame)
        return float(np.abs(gram - np.diag(self.eps)).max())

    def rotate(self, x: np.ndarray) -> np.ndarray:
        """J = N x (.) in frame components.

        Riemannian charts: rotation by +pi/2. Lorentzian charts: the swap of
        the spacelike and timelike frame vectors, J e1 = e2, J e2 = e1.
        """
        x = np.asarray(x)
        if self.eps == (1, 1):
            return np.stack([-x[..., 1], x[..., 0]], axis=-1)
        return np.stack([x[..., 1], x[..., 0]], axis=-1)

    def with_metric(self, metric: np.ndarray, frame: np.ndarray) -> "Chart":
        return Chart(self.u, self.v, metric, frame, self.eps)

    def to_dict(self) -> dict:
        return {
            "u": self.u.tolist(),
            "v": self.v.tolist(),
            "eps": list(self.eps),
            "metric": self.metric.tolist(),
            "frame": self.frame.tolist(),
        }


def interior(f: np.ndarray, margin: int = 2) -> np.ndarray:
    """Drop ``margin`` boundary rows and columns of a grid field."""
    f = np.asarray(f)
    return f[margin:-margin, margin:-margin]


def core(f: np.ndarray, frac: float = 0.125) -> np.ndarray:
    """Restrict a grid field to a fixed fraction-inset subdomain.

    Unlike ``interior`` the discarded band has fixed physical width, so maxima
    over it are comparable across refinements.
    """
    f = np.asarray(f)
    mu = int(round(frac * (f.shape[0] - 1)))
    mv = int(round(frac * (f.shape[1] - 1)))
    return f[mu : f.shape[0] - mu, mv : f.shape[1] - mv]


def christoffel(chart: Chart) -> np.ndarray:
    """Gamma^c_ab of the chart metric, shape (nu, nv, 2, 2, 2) indexed [c, a, b]."""
    g = chart.metric
    gu, gv = chart.d(g)
    dg = np.stack([gu, gv], axis=-3)  # dg[..., c, a, b] = d_c g_ab
    ginv = np.linalg.inv(g)
    # first kind: [ab, d] = (d_a g_bd + d_b g_ad - d_d g_ab) / 2
    first = 0.5 * (
        np.einsum("...abd->...abd", dg)
        + np.einsum("...bad->...abd", dg)
        - np.einsum("...dab->...abd", dg)
    )
    return np.einsum("...cd,...abd->...cab", ginv, first)


def levi_civita_surface(chart: Chart) -> np.ndarray:
    """Connection form omega_12(e_k) = <nabla_{e_k} e_1, e_2> of the frame."""
    f = chart.frame
    for axis in (0, 1):
        a = np.take(f, np.arange(f.shape[axis] - 1), axis=axis)
        b = np.take(f, np.arange(1, f.shape[axis]), axis=axis)
        dots = np.einsum("...aj,...ab,...bj->...j", a, np.take(chart.metric, np.arange(1, f.shape[axis]), axis=axis), b)
        if np.any(dots * np.array(chart.eps) < 0):
            idx = np.argwhere(dots * np.array(chart.eps) < 0)[0]
            raise FrameBranchError(f"frame flips between neighbours near node {tuple(idx[:2])}")
    gam = christoffel(chart)
    e1 = f[..., :, 0]
    e2 = f[..., :, 1]
    e1u, e1v = chart.d(e1)
    de1 = np.stack([e1u, e1v], axis=-2)  # [..., a, c] = d_a e1^c
    cov = de1 + np.einsum("...cab,...b->...ac", gam, e1)
    w_coord = np.einsum("...ac,...cd,...d->...a", cov, chart.metric, e2)
    return np.einsum("...ak,...a->...k", f, w_coord)


# ---------------------------------------------------------------------------
# immersions


@dataclass
class ImmersionField:
    """Ambient positions on a grid.

    ``points`` holds group elements (matrices or model coordinates) for group
    kinds and ambient coordinates for quadric and Euclidean kinds.
    """

    space: SpaceKind
    points: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def ambient_coordinates(self) -> np.ndarray:
        """Real coordinates used for export: R^3 for group kinds, R^4 for quadrics."""
        if self.space.is_group:
            return _model_for(self.space).coordinates(self.points)
        return np.asarray(self.points, dtype=float)


def _model_for(space: SpaceKind) -> GroupModel:
    return group_model(space)


def ambient_eps(space: SpaceKind) -> tuple[int, ...]:
    if space.is_group:
        return ALG_EPS
    if space.name in ("de_sitter", "r_minus_s2"):
        return (-1, 1, 1, 1)
    if space.name == "anti_de_sitter":
        return (-1, -1, 1, 1)
    return (1, 1, 1)


def quadric_defect(space: SpaceKind, x: np.ndarray) -> np.ndarray:
    """Pointwise violation of the defining equation of a quadric kind."""
    x = np.asarray(x, dtype=float)
    if space.name == "de_sitter":
        return -x[..., 0] ** 2 + np.sum(x[..., 1:] ** 2, axis=-1) - 1.0
    if space.name == "anti_de_sitter":
        return -x[..., 0] ** 2 - x[..., 1] ** 2 + x[..., 2] ** 2 + x[..., 3] ** 2 + 1.0
    if space.name == "r_minus_s2":
        return np.sum(x[..., 1:] ** 2, axis=-1) - 1.0
    raise ValueError(f"{space.name} is not a quadric kind")


def _tangent_vectors(space: SpaceKind, imm: ImmersionField, chart_d) -> np.ndarray:
    """Trivialised coordinate tangent vectors w[..., a, :] in ambient coordinates."""
    pts = imm.points
    du, dv = chart_d(pts)
    if space.is_group:
        model = _model_for(space)
        return np.stack([model.trivialize(pts, du), model.trivialize(pts, dv)], axis=-2)
    return np.stack([du, dv], axis=-2).astype(float)


def _null_direction(rows: np.ndarray) -> np.ndarray:
    """Generalised cross product of m-1 rows in R^m (continuous in the rows)."""
    m = rows.shape[-1]
    out = np.empty(rows.shape[:-2] + (m,))
    for k in range(m):
        e = np.zeros(rows.shape[:-2] + (1, m))
        e[..., 0, k] = 1.0
        out[..., k] = np.linalg.det(np.concatenate([rows, e], axis=-2))
    return out


def _ambient_gamma(space: SpaceKind):
    if space.is_group:
        alg = make_algebra(space)
        return alg.gamma_matrix
    return None


@dataclass
class _Frames:
    frame: np.ndarray  # chart frame
    eps: tuple[int, int]
    tangent: np.ndarray  # (..., 2, m) ambient vectors of e_1, e_2
    normal: np.ndarray  # (..., m)
    w: np.ndarray  # (..., 2, m) trivialised d/du^a
    metric: np.ndarray


def _cl_columns(space: SpaceKind, tangent, normal, position, eps2) -> np.ndarray:
    """Ambient frame matrix with columns ordered like the spin algebra basis."""
    e1, e2 = tangent[..., 0, :], tangent[..., 1, :]
    if space.is_group:
        perm = np.argsort(ALG_TO_CL)  # cl index -> algebra index
        to_cl = lambda x: x[..., perm]  # noqa: E731
        if eps2 > 0:
            cols = [normal, e1, e2]
        else:
            cols = [e2, e1, normal]
        return np.stack([to_cl(c) for c in cols], axis=-1)
    if space.name == "de_sitter":
        return np.stack([normal, e1, e2, position], axis=-1)
    if space.name == "anti_de_sitter":
        return np.stack([position, normal, e1, e2], axis=-1)
    if space.name == "r_minus_s2":
        nu = np.concatenate([np.zeros_like(position[..., :1]), position[..., 1:]], axis=-1)
        return np.stack([normal, e1, e2, nu], axis=-1)
    raise ValueError(f"no spin frame for {space.name}")


_GS_ORDER = {"de_sitter": (3, 1, 2, 0), "r_minus_s2": (3, 1, 2, 0), "anti_de_sitter": (0, 2, 3, 1)}


def _reorthonormalize(space: SpaceKind, cols: np.ndarray) -> np.ndarray:
    """Gram-Schmidt on the spin frame columns, position vector first.

    Difference quotients leave the tangent vectors O(h^2) off the tangent
    space of the quadric; the spin lift needs an exactly orthonormal frame.
    """
    amb = np.array(ambient_eps(space), dtype=float)
    out = np.array(cols, dtype=float)
    done = []
    for k in _GS_ORDER[space.name]:
        c = out[..., :, k]
        for j in done:
            cj = out[..., :, j]
            nj = np.einsum("...m,m,...m->...", cj, amb, cj)
            c = c - (np.einsum("...m,m,...m->...", c, amb, cj) / nj)[..., None] * cj
        nc = np.einsum("...m,m,...m->...", c, amb, c)
        out[..., :, k] = c / np.sqrt(np.abs(nc))[..., None]
        done.append(k)
    return out


def _time_block_positive(cols: np.ndarray, p: int) -> np.ndarray:
    det = np.linalg.det(cols)
    tdet = np.linalg.det(cols[..., :p, :p])
    return (det > 0) & (tdet > 0)


def _frames(space: SpaceKind, imm: ImmersionField, chart_d, u, v) -> _Frames:
    w = _tangent_vectors(space, imm, chart_d)
    amb = np.array(ambient_eps(space), dtype=float)
    g = np.einsum("...am,m,...bm->...ab", w, amb, w)
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    if np.any(np.abs(det) < 1e-8):
        idx = tuple(np.argwhere(np.abs(det) < 1e-8)[0])
        raise DegenerateSurface(f"degenerate induced metric at node {idx}")
    riemannian = np.all(det > 0)
    if not riemannian and not np.all(det < 0):
        raise DegenerateSurface("induced metric changes type on the chart")
    if np.any(g[..., 0, 0] <= 0):
        idx = tuple(np.argwhere(g[..., 0, 0] <= 0)[0])
        raise DegenerateSurface(f"d/du is not spacelike at node {idx}")
    eps2 = 1 if riemannian else -1
    # Gram-Schmidt on coordinate vectors
    n1 = np.sqrt(g[..., 0, 0])
    frame = np.zeros(g.shape)
    frame[..., 0, 0] = 1.0 / n1
    c = g[..., 0, 1] / g[..., 0, 0]
    n2sq = (g[..., 1, 1] - c * g[..., 0, 1]) * eps2
    n2 = np.sqrt(n2sq)
    frame[..., 0, 1] = -c / n2
    frame[..., 1, 1] = 1.0 / n2
    tangent = np.einsum("...aj,...am->...jm", frame, w)

    pos = None
    if space.is_quadric:
        pos = np.asarray(imm.points, dtype=float)
    rows = [tangent[..., 0, :] * amb, tangent[..., 1, :] * amb]
    if space.name in ("de_sitter", "anti_de_sitter"):
        rows.append(pos * amb)
    elif space.name == "r_minus_s2":
        nu = np.concatenate([np.zeros_like(pos[..., :1]), pos[..., 1:]], axis=-1)
        rows.append(nu * amb)
    normal = _null_direction(np.stack(rows, axis=-2))
    nn = np.einsum("...m,m,...m->...", normal, amb, normal)
    normal = normal / np.sqrt(np.abs(nn))[..., None]

    if space.name == "euclidean_r3":
        orient = np.sign(np.linalg.det(np.stack([tangent[..., 0, :], tangent[..., 1, :], normal], axis=-1)))
        normal = normal * orient[..., None]
    else:
        p = sum(1 for e in ambient_eps(space) if e < 0)
        chosen = None
        for s2 in (1.0, -1.0):
            for sn in (1.0, -1.0):
                t = tangent.copy()
                t[..., 1, :] *= s2
                cols = _cl_columns(space, t, normal * sn, pos, eps2)
                ok = _time_block_positive(cols, p)
                if np.all(ok):
                    chosen = (s2, sn)
                    break
                if np.any(ok):
                    raise ValueError("frame orientation is not uniform over the chart")
            if chosen:
                break
        if chosen is None:
            raise ValueError("no orientation puts the adapted frame in the identity component")
        s2, sn = chosen
        frame[..., :, 1] *= s2
        tangent[..., 1, :] *= s2
        normal = normal * sn
    return _Frames(frame, (1, eps2), tangent, normal, w, g)


# ---------------------------------------------------------------------------
# geometry


@dataclass
class GeometryData:
    """Extrinsic data of an immersion in frame components.

    ``T[..., i, :]`` and ``nu[..., i]`` decompose the algebra basis vector e_i
    as T_i + nu_i N (group kinds). For the product with R_- the Killing field
    d/dt decomposes as ``T0 + f N``. ``spin_frame`` is the ambient adapted
    frame ordered like the basis of the spin algebra.
    """

    space: SpaceKind
    h: np.ndarray
    S: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    spin_frame: np.ndarray | None
    T: np.ndarray | None = None
    nu: np.ndarray | None = None
    T0: np.ndarray | None = None
    f: np.ndarray | None = None

    @property
    def H(self) -> np.ndarray:
        return 0.5 * np.trace(self.S, axis1=-2, axis2=-1)

    def shape_symmetry_defect(self, chart: Chart) -> float:
        e = np.array(chart.eps, dtype=float)
        # g(S e_i, e_j) = eps_j S_ji
        m = e[:, None] * self.S
        return float(np.abs(m - np.swapaxes(m, -1, -2)).max())

    def to_dict(self) -> dict:
        out = {
            "space": self.space.to_dict(),
            "h": self.h.tolist(),
            "S": self.S.tolist(),
            "normal": self.normal.tolist(),
        }
        for name in ("T", "nu", "T0", "f"):
            val = getattr(self, name)
            if val is not None:
                out[name] = np.asarray(val).tolist()
        return out


def chart_from_immersion(imm: ImmersionField) -> Chart:
    """Induced metric and oriented orthonormal frame of a sampled immersion."""
    grid = _GridD(imm.u, imm.v)
    fr = _frames(imm.space, imm, grid, imm.u, imm.v)
    return Chart(imm.u, imm.v, fr.metric, fr.frame, fr.eps)


class _GridD:
    def __init__(self, u, v):
        self.u, self.v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)

    def __call__(self, f):
        f = np.asarray(f)
        return (
            np.gradient(f, self.u, axis=0, edge_order=2),
            np.gradient(f, self.v, axis=1, edge_order=2),
        )


def extract_geometry(imm: ImmersionField, chart: Chart | None = None) -> GeometryData:
    """Second fundamental form, shape operator and compatibility fields."""
    space = imm.space
    grid = _GridD(imm.u, imm.v)
    fr = _frames(space, imm, grid, imm.u, imm.v)
    amb = np.array(ambient_eps(space), dtype=float)
    w = fr.w
    wu, wv = grid(w)
    dw = np.stack([wu, wv], axis=-3)  # [..., a, b, m] = d_a w_b
    gam = _ambient_gamma(space)
    if gam is not None:
        conn = np.einsum("...akm,...bm->...abk", gam(w), w)
        # gam(w)[..., a, k, m]: matrix of Gamma(w_a)
        dw = dw + conn
    h_coord = np.einsum("...abm,m,...m->...ab", dw, amb, fr.normal)
    h_coord = 0.5 * (h_coord + np.swapaxes(h_coord, -1, -2))
    h = np.einsum("...ai,...ab,...bj->...ij", fr.frame, h_coord, fr.frame)
    e = np.array(fr.eps, dtype=float)
    S = e[:, None] * h
    pos = np.asarray(imm.points, dtype=float) if space.is_quadric else None
    spin_frame = None
    if space.name != "euclidean_r3":
        spin_frame = _cl_columns(space, fr.tangent, fr.normal, pos, fr.eps[1])
        if space.is_quadric:
            spin_frame = _reorthonormalize(space, spin_frame)
    data = GeometryData(space, h, S, fr.normal, fr.tangent, spin_frame)
    eps_n = -1 if fr.eps == (1, 1) else 1
    if space.is_group:
        # T_i^j = eps_j <e_i, f_j>,  nu_i = eps_N <e_i, N>
        data.T = np.einsum("j,i,...ji->...ij", e, amb, fr.tangent)
        data.nu = eps_n * amb * fr.normal
    elif space.name == "r_minus_s2":
        data.T0 = -e * fr.tangent[..., :, 0]
        data.f = fr.normal[..., 0]
    return data


# ---------------------------------------------------------------------------
# compatibility equations


def covariant_derivative_tangent(chart: Chart, field: np.ndarray, j: int) -> np.ndarray:
    """nabla_{e_j} of a tangent field given in frame components (..., 2)."""
    d = chart.along(field, j)
    w = chart.omega[..., j]
    e1, e2 = chart.eps
    # nabla e_1 = eps_2 w e_2, nabla e_2 = -eps_1 w e_1
    out = d.copy()
    out[..., 1] += field[..., 0] * e2 * w
    out[..., 0] -= field[..., 1] * e1 * w
    return out


def check_compatibility(chart: Chart, data: GeometryData, margin: int = 2) -> dict:
    """Residuals of the structure equations relating T, nu, S and the ambient.

    Returns a mapping equation name -> dict(max=..., l2=..., field=...).
    """
    space = data.space
    e = np.array(chart.eps, dtype=float)
    eps_n = chart.eps_normal
    out: dict[str, np.ndarray] = {}
    if space.is_group:
        if data.T is None:
            raise ValueError("group kinds need T and nu")
        alg = make_algebra(space)
        G = alg.gamma
        ae = np.array(alg.eps, dtype=float)
        T, nu = data.T, data.nu
        gram = np.einsum("...ia,a,...ja->...ij", T, e, T) + eps_n * nu[..., :, None] * nu[..., None, :]
        out["orthonormality"] = np.abs(gram - np.diag(ae)).max(axis=(-1, -2))
        t_res = np.zeros(T.shape[:-2])
        n_res = np.zeros(T.shape[:-2])
        for a in range(2):
            xa = np.zeros(2)
            xa[a] = 1.0
            xt = e[a] * T[..., :, a]  # <e_a, T_i>
            coef = np.einsum("i,k,ijk,...i->...jk", ae, ae, G, xt)
            s_col = data.S[..., :, a]
            for j in range(3):
                lhs = covariant_derivative_tangent(chart, T[..., j, :], a)
                rhs = np.einsum("...k,...kb->...b", coef[..., j, :], T) + nu[..., j, None] * s_col
                t_res = np.maximum(t_res, np.abs(lhs - rhs).max(axis=-1))
                dnu = chart.along(nu[..., j], a)
                h_xt = np.einsum("...b,...b->...", data.h[..., a, :], T[..., j, :])
                rhs_n = np.einsum("...k,...k->...", coef[..., j, :], nu) - eps_n * h_xt
                n_res = np.maximum(n_res, np.abs(dnu - rhs_n))
        out["tangent_transport"] = t_res
        out["normal_transport"] = n_res
        if space.name in ("lkt", "su12"):
            lk = lkt_compatibility(chart, data, space.tau)
            out.update(lk)
    elif space.name == "r_minus_s2":
        T0, f = data.T0, data.f
        out["killing_norm"] = np.abs(chart.inner(T0, T0) - f**2 + 1.0)
        t_res = np.zeros(f.shape)
        f_res = np.zeros(f.shape)
        for a in range(2):
            lhs = covariant_derivative_tangent(chart, T0, a)
            rhs = f[..., None] * data.S[..., :, a]
            t_res = np.maximum(t_res, np.abs(lhs - rhs).max(axis=-1))
            df = chart.along(f, a)
            rhs_f = chart.inner(data.S[..., :, a], T0)
            f_res = np.maximum(f_res, np.abs(df - rhs_f))
        out["killing_transport"] = t_res
        out["f_transport"] = f_res
    else:
        raise ValueError(f"no compatibility equations for {space.name}")
    return {
        k: {
            "max": float(np.max(interior(v, margin))),
            "l2": float(np.sqrt(np.mean(interior(v, margin) ** 2))),
            "field": v,
        }
        for k, v in out.items()
    }


def lkt_compatibility(chart: Chart, data: GeometryData, tau: float) -> dict:
    """Residuals of the vertical Killing field equations E3 = T + nu N.

    |T|^2 + eps_N nu^2 = -1, nabla T = nu (S + tau J), d nu = -eps_N <S + tau J, T>;
    on Riemannian surfaces (eps_N = -1) these read |T|^2 - nu^2 = -1 and
    d nu = <S + tau J, T>.
    """
    T = data.T[..., 2, :]
    nu = data.nu[..., 2]
    eps_n = chart.eps_normal
    res0 = np.abs(chart.inner(T, T) + eps_n * nu**2 + 1.0)
    r1 = np.zeros(nu.shape)
    r2 = np.zeros(nu.shape)
    for a in range(2):
        xa = np.zeros(2)
        xa[a] = 1.0
        sj = data.S[..., :, a] + tau * chart.rotate(np.broadcast_to(xa, data.S.shape[:-1]))
        lhs = covariant_derivative_tangent(chart, T, a)
        r1 = np.maximum(r1, np.abs(lhs - nu[..., None] * sj).max(axis=-1))
        r2 = np.maximum(r2, np.abs(chart.along(nu, a) + eps_n * chart.inner(sj, T)))
    return {"lkt_norm": res0, "lkt_tangent": r1, "lkt_normal": r2}


# ---------------------------------------------------------------------------
# test-surface families


def grid_axes(domain, n: int | tuple[int, int]):
    if isinstance(n, int):
        n = (n, n)
    (u0, u1), (v0, v1) = domain
    return np.linspace(u0, u1, n[0]), np.linspace(v0, v1, n[1])


def _affine(x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.shape[:-1] + (4, 4))
    out[..., :, :] = np.eye(4)
    out[..., :3, 3] = x
    return out


def _sphere(theta, phi):
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
    )


@dataclass(frozen=True)
class Family:
    name: str
    space: SpaceKind
    domain: tuple[tuple[float, float], tuple[float, float]]
    points: Callable[[np.ndarray, np.ndarray], np.ndarray]
    description: str = ""


_RULED_DEFAULTS = {
    "algebra_a": {"alpha": 1.0},
    "algebra_b": {"alpha": 1.0},
    "algebra_c": {"delta": 1.0},
    "h2xr": {"alpha": 1.0},
    "rxs12": {"alpha": 1.0},
    "rxh12": {"delta": 1.0},
    "lkt": {"kappa": -1.0, "tau": 1.0},
}


def _ruled_space(p: dict) -> SpaceKind:
    name = p.get("space", "h2xr")
    given = {k: float(p[k]) for k in ("alpha", "delta", "kappa", "tau") if k in p}
    return SpaceKind(name, **{**_RULED_DEFAULTS.get(name, {}), **given})


def _positive(p: dict, key: str, default: float) -> float:
    x = float(p.get(key, default))
    if not x > 0:
        raise ValueError(f"parameter {key!r} must be positive, got {x}")
    return x


def _families(params: dict) -> dict[str, Family]:
    p = dict(params)
    r12 = SpaceKind("minkowski_r12")
    fams = {}

    def add(name, space, domain, fn, desc=""):
        fams[name] = Family(name, space, domain, fn, desc)

    add(
        "plane_r12",
        r12,
        ((0.5, 1.5), (0.0, 1.0)),
        lambda U, V: _affine(np.stack([U * np.cos(V), U * np.sin(V), 0 * U], axis=-1)),
        "spacelike plane in polar coordinates",
    )
    add(
        "timelike_plane_r12",
        r12,
        ((0.5, 1.5), (0.0, 1.0)),
        lambda U, V: _affine(np.stack([U * np.cosh(V), 0 * U, U * np.sinh(V)], axis=-1)),
        "timelike plane in Rindler coordinates",
    )
    slope = np.asarray(p.get("slope", (0.3, -0.2)), dtype=float)
    add(
        "flat_graph_r12",
        r12,
        ((-0.5, 0.5), (-0.5, 0.5)),
        lambda U, V: _affine(np.stack([U, V, slope[0] * U + slope[1] * V], axis=-1)),
        "spacelike affine graph t = a x + b y (|(a, b)| < 1)",
    )
    add(
        "catenoid_r12",
        r12,
        ((0.5, 1.5), (0.0, 1.0)),
        lambda U, V: _affine(
            np.stack([U * np.cos(V), U * np.sin(V), np.arcsinh(U)], axis=-1)
        ),
        "maximal spacelike catenoid (rho cos theta, rho sin theta, arcsinh rho)",
    )
    radius = _positive(p, "radius", 1.0)
    add(
        "pseudosphere_r12",
        r12,
        ((-0.5, 0.5), (-0.5, 0.5)),
        lambda U, V: _affine(
            np.stack([U, V, -np.sqrt(radius**2 + U**2 + V**2)], axis=-1)
        ),
        "lower sheet of the hyperboloid of given radius (shape operator id/radius)",
    )
    add(
        "one_sheet_hyperboloid_r12",
        r12,
        ((0.2, 1.0), (-0.4, 0.4)),
        lambda U, V: _affine(
            np.stack([np.cosh(V) * np.cos(U), np.cosh(V) * np.sin(U), np.sinh(V)], axis=-1)
        ),
        "timelike unit de Sitter 2-space in R^{1,2}",
    )
    height = float(p.get("height", 0.0))
    add(
        "sphere_de_sitter",
        SpaceKind("de_sitter"),
        ((0.7, 1.3), (0.0, 0.6)),
        lambda U, V: np.concatenate(
            [np.full(U.shape + (1,), height), np.sqrt(1 + height**2) * _sphere(U, V)], axis=-1
        ),
        "sphere x1 = height in de Sitter space (totally geodesic at height 0)",
    )
    level = float(p.get("level", 0.0))
    add(
        "hyperbolic_anti_de_sitter",
        SpaceKind("anti_de_sitter"),
        ((-0.5, 0.5), (-0.5, 0.5)),
        lambda U, V: np.stack(
            [np.sqrt(1 - level**2 + U**2 + V**2), np.full(U.shape, level), U, V], axis=-1
        ),
        "hyperbolic plane x2 = level in anti-de Sitter space (totally geodesic at level 0)",
    )
    t0 = float(p.get("t0", -1.0))
    tilt = float(p.get("tilt", 0.0))
    add(
        "sphere_r_minus_s2",
        SpaceKind("r_minus_s2"),
        ((0.7, 1.3), (0.0, 0.6)),
        lambda U, V: np.concatenate(
            [(t0 + tilt * np.cos(U))[..., None], _sphere(U, V)], axis=-1
        ),
        "graph t = t0 + tilt * x3 over a spherical patch (a slice when tilt = 0)",
    )
    kappa = float(p.get("kappa", -4.0))
    tau = float(p.get("tau", 1.0))
    z0 = float(p.get("z0", 0.1))
    add(
        "horizontal_lkt",
        SpaceKind("lkt", kappa=kappa, tau=tau),
        ((-0.3, 0.3), (-0.3, 0.3)),
        lambda U, V: np.stack([U, V, np.full(U.shape, z0)], axis=-1),
        "coordinate slice z = z0 of the L(kappa, tau) model",
    )
    cyl_r = _positive(p, "cylinder_radius", 0.5)
    add(
        "vertical_cylinder_lkt",
        SpaceKind("lkt", kappa=kappa, tau=tau),
        ((0.2, 1.0), (-0.3, 0.3)),
        lambda U, V: np.stack(
            [cyl_r * np.cos(U), cyl_r * np.sin(U), V], axis=-1
        ),
        "Lorentzian vertical cylinder over a circle of the given radius",
    )
    group_space = _ruled_space(p)
    dir_a = np.asarray(p.get("dir_u", (1.0, 0.0, 0.0)), dtype=float)
    dir_b = np.asarray(p.get("dir_v", (0.0, 1.0, 0.3)), dtype=float)

    def ruled_group(U, V, space=group_space, a=dir_a, b=dir_b):
        m = group_model(space)
        if isinstance(m, MatrixModel):
            return m.exp(U[..., None] * a) @ m.exp(V[..., None] * b)
        g = m.mul_exp(np.zeros(U.shape + (3,)), np.broadcast_to(a, U.shape + (3,)), U)
        return m.mul_exp(g, np.broadcast_to(b, U.shape + (3,)), V)

    add(
        "ruled_group",
        group_space,
        ((-0.3, 0.3), (-0.3, 0.3)),
        ruled_group,
        "surface exp(u a) exp(v b) in a metric Lie group",
    )
    su = SpaceKind("su12")

    def ruled(U, V):
        m = group_model(su)
        return m.exp(np.stack([U, 0 * U, 0 * U], axis=-1)) @ m.exp(
            np.stack([0 * U, V, 0 * U], axis=-1)
        )

    add(
        "ruled_su12",
        su,
        ((-0.4, 0.4), (-0.4, 0.4)),
        ruled,
        "flat surface exp(u E1) exp(v E2) in the anti-de Sitter group",
    )
    add(
        "enneper_r3",
        SpaceKind("euclidean_r3"),
        ((-0.4, 0.4), (-0.4, 0.4)),
        lambda U, V: np.stack(
            [U - U**3 / 3 + U * V**2, -V + V**3 / 3 - V * U**2, U**2 - V**2], axis=-1
        ),
        "Enneper minimal surface",
    )
    add(
        "sphere_r3",
        SpaceKind("euclidean_r3"),
        ((0.6, 1.2), (0.0, 0.8)),
        lambda U, V: _sphere(U, V),
        "unit sphere in polar coordinates",
    )
    return fams


FAMILY_NAMES = tuple(_families({}).keys())


def get_family(name: str, params: dict | None = None) -> Family:
    fams = _families(params or {})
    if name not in fams:
        raise KeyError(f"unknown family {name!r}; choose from {sorted(fams)}")
    return fams[name]


def build_chart(
    family: str, params: dict | None = None, n: int | tuple[int, int] = 32, domain=None
) -> tuple[Chart, ImmersionField]:
    """Sample an analytic test immersion and build its chart."""
    fam = get_family(family, params)
    u, v = grid_axes(domain or fam.domain, n)
    if len(u) < MIN_NODES or len(v) < MIN_NODES:
        raise InvalidGrid(f"grid must be at least {MIN_NODES}x{MIN_NODES}")
    U, V = np.meshgrid(u, v, indexing="ij")
    imm = ImmersionField(fam.space, fam.points(U, V), u, v)
    return chart_from_immersion(imm), imm
