"""Three-dimensional Lorentzian metric Lie algebras, their group models and
Darboux integration of Lie-algebra valued one-forms.

Algebra coordinates use an orthonormal basis (e1, e2, e3) with metric signs
(+1, +1, -1). In the Clifford algebra Cl(1,2) (basis e0, e1, e2 with e0
timelike) the algebra vector (x1, x2, x3) sits at (x3, x1, x2); see
``ALG_TO_CL``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .clifford import Multivector, Signature, SkewOperator, skew_to_bivector

ALG_EPS = (1, 1, -1)
ALG_SIG = Signature(ALG_EPS)
# algebra index i -> Cl(1,2) index
ALG_TO_CL = (1, 2, 0)


class UnsupportedKind(ValueError):
    """Operation not defined for the requested space kind."""


class DomainExit(RuntimeError):
    """A flow left the coordinate domain of the group model."""

    def __init__(self, message: str, last_point=None):
        super().__init__(message)
        self.last_point = last_point


# ---------------------------------------------------------------------------
# space kinds

GROUP_KINDS = (
    "minkowski_r12",
    "algebra_a",
    "algebra_b",
    "algebra_c",
    "lkt",
    "su12",
    "h2xr",
    "rxs12",
    "rxh12",
)
QUADRIC_KINDS = ("de_sitter", "anti_de_sitter", "r_minus_s2")
ALL_KINDS = GROUP_KINDS + QUADRIC_KINDS + ("euclidean_r3",)

# products realised by the solvable algebras
_PRODUCT_ALIAS = {"h2xr": "algebra_a", "rxs12": "algebra_b", "rxh12": "algebra_c"}


@dataclass(frozen=True)
class SpaceKind:
    """Tagged target space with its parameters.

    ``euclidean_r3`` is an auxiliary Riemannian target used only to build the
    minimal-surface input of the Calabi correspondence.
    """

    name: str
    alpha: float | None = None
    delta: float | None = None
    kappa: float | None = None
    tau: float | None = None

    def __post_init__(self):
        if self.name not in ALL_KINDS:
            raise UnsupportedKind(f"unknown space kind {self.name!r}")
        base = _PRODUCT_ALIAS.get(self.name, self.name)
        if base in ("algebra_a", "algebra_b") and not self.alpha:
            raise ValueError(f"{self.name} needs a nonzero alpha")
        if base == "algebra_c" and not self.delta:
            raise ValueError(f"{self.name} needs a nonzero delta")
        if self.name == "lkt":
            if self.kappa is None or not self.tau:
                raise ValueError("lkt needs kappa and a nonzero tau")
        if self.name == "su12":
            object.__setattr__(self, "kappa", -4.0)
            object.__setattr__(self, "tau", 1.0)

    @property
    def is_group(self) -> bool:
        return self.name in GROUP_KINDS

    @property
    def is_quadric(self) -> bool:
        return self.name in QUADRIC_KINDS

    @property
    def sigma(self) -> float:
        if self.tau is None:
            raise UnsupportedKind("sigma is defined for lkt spaces only")
        return self.kappa / (2.0 * self.tau)

    def params(self) -> dict:
        return {
            k: v
            for k, v in (
                ("alpha", self.alpha),
                ("delta", self.delta),
                ("kappa", self.kappa),
                ("tau", self.tau),
            )
            if v is not None
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceKind":
        d = dict(d)
        return cls(d.pop("name"), **{k: float(v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params()}


# ---------------------------------------------------------------------------
# metric Lie algebras


@dataclass(frozen=True)
class LieAlgebra3:
    """Structure constants ``c[i, j, k]`` with [e_i, e_j] = sum_k c[i,j,k] e_k."""

    name: str
    c: np.ndarray
    eps: tuple[int, int, int] = ALG_EPS
    gamma: np.ndarray = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "gamma", koszul(c, self.eps))

    def bracket(self, x, y) -> np.ndarray:
        return np.einsum("...i,...j,ijk->...k", x, y, self.c)

    def inner(self, x, y) -> np.ndarray:
        return np.einsum("...i,...i->...", np.asarray(x) * np.array(self.eps), y)

    def gamma_matrix(self, x) -> np.ndarray:
        """Matrix of Y -> Gamma(X)(Y): Gamma(e_i)(e_j) = sum_k eps_k Gamma_ij^k e_k."""
        eps = np.array(self.eps, dtype=float)
        return np.einsum("...i,ijk,k->...kj", np.asarray(x, dtype=float), self.gamma, eps)

    def jacobi_defect(self) -> float:
        e = np.eye(3)
        worst = 0.0
        for a in range(3):
            for b in range(3):
                for d in range(3):
                    x, y, z = e[a], e[b], e[d]
                    s = (
                        self.bracket(x, self.bracket(y, z))
                        + self.bracket(y, self.bracket(z, x))
                        + self.bracket(z, self.bracket(x, y))
                    )
                    worst = max(worst, float(np.abs(s).max()))
        return worst

    def antisymmetry_defect(self) -> float:
        return float(np.abs(self.c + np.swapaxes(self.c, 0, 1)).max())

    def torsion_defect(self) -> float:
        e = np.eye(3)
        worst = 0.0
        for a in range(3):
            for b in range(3):
                lhs = self.gamma_matrix(e[a]) @ e[b] - self.gamma_matrix(e[b]) @ e[a]
                worst = max(worst, float(np.abs(lhs - self.bracket(e[a], e[b])).max()))
        return worst

    def metric_defect(self) -> float:
        e = np.eye(3)
        worst = 0.0
        for a in range(3):
            m = self.gamma_matrix(e[a])
            for b in range(3):
                for d in range(3):
                    s = self.inner(m @ e[b], e[d]) + self.inner(e[b], m @ e[d])
                    worst = max(worst, abs(float(s)))
        return worst


def koszul(c: np.ndarray, eps) -> np.ndarray:
    """Gamma_ij^k = <nabla_{e_i} e_j, e_k> of the left-invariant metric."""
    eps = np.asarray(eps, dtype=float)
    # b[i, j, k] = <[e_i, e_j], e_k>
    b = c * eps[None, None, :]
    return 0.5 * (
        b
        - np.transpose(b, (2, 0, 1))  # <[e_j, e_k], e_i>
        + np.transpose(b, (1, 2, 0))  # <[e_k, e_i], e_j>
    )


def _structure(brackets: dict[tuple[int, int], np.ndarray]) -> np.ndarray:
    c = np.zeros((3, 3, 3))
    for (i, j), v in brackets.items():
        c[i, j] = v
        c[j, i] = -np.asarray(v)
    return c


def make_algebra(kind: SpaceKind) -> LieAlgebra3:
    """Metric Lie algebra of a group-backed space kind."""
    if not kind.is_group:
        raise UnsupportedKind(f"{kind.name} is not a Lie group kind")
    name = _PRODUCT_ALIAS.get(kind.name, kind.name)
    e1, e2, e3 = np.eye(3)
    if name == "minkowski_r12":
        c = np.zeros((3, 3, 3))
    elif name == "algebra_a":
        c = _structure({(0, 1): kind.alpha * e2})
    elif name == "algebra_b":
        c = _structure({(0, 2): kind.alpha * e1})
    elif name == "algebra_c":
        c = _structure({(0, 2): kind.delta * e3})
    else:  # lkt and su12
        tau, sigma = kind.tau, kind.sigma
        c = _structure({(0, 1): 2 * tau * e3, (1, 2): sigma * e1, (2, 0): sigma * e2})
    return LieAlgebra3(kind.name, c)


def gamma_of(algebra: LieAlgebra3, x) -> tuple[SkewOperator, Multivector]:
    """Gamma(X) as a metric-skew operator and as a bivector of Cl(+,+,-)."""
    op = SkewOperator(ALG_SIG, algebra.gamma_matrix(x))
    return op, skew_to_bivector(op)


# ---------------------------------------------------------------------------
# group models


def _log_near_identity(m: np.ndarray, terms: int = 6) -> np.ndarray:
    """Series logarithm of matrices close to the identity."""
    eye = np.eye(m.shape[-1])
    x = m - eye
    out = np.zeros_like(x)
    power = eye * np.ones_like(x)
    for k in range(1, terms + 1):
        power = power @ x
        out = out + ((-1) ** (k + 1) / k) * power
    return out


class GroupModel:
    """Common interface of the matrix and coordinate realisations."""

    algebra: LieAlgebra3
    kind: str

    def identity(self):
        raise NotImplementedError

    def mul_exp(self, g, a, t):
        raise NotImplementedError

    def trivialize(self, g, dg) -> np.ndarray:
        """Left-trivialised derivative omega(dg) in algebra coordinates."""
        raise NotImplementedError

    def coordinates(self, g) -> np.ndarray:
        """Three real coordinates used for export and comparison."""
        raise NotImplementedError

    def loop_defect(self, g1, g2) -> np.ndarray:
        raise NotImplementedError


class MatrixModel(GroupModel):
    """Faithful matrix representation: algebra basis -> matrices."""

    kind = "matrix"

    def __init__(self, algebra: LieAlgebra3, basis, coords: str = "log"):
        self.algebra = algebra
        self.basis = np.asarray(basis)
        self.dtype = self.basis.dtype
        self.d = self.basis.shape[-1]
        self.coords = coords
        flat = self.basis.reshape(3, -1)
        real = np.concatenate([flat.real, flat.imag], axis=1).T  # (2 d^2, 3)
        self._pinv = np.linalg.pinv(real)

    def identity(self):
        return np.eye(self.d, dtype=self.dtype)

    def rep(self, a) -> np.ndarray:
        return np.einsum("...i,ijk->...jk", np.asarray(a, dtype=float), self.basis)

    def unrep(self, m) -> np.ndarray:
        m = np.asarray(m)
        flat = m.reshape(m.shape[:-2] + (-1,))
        real = np.concatenate([flat.real, flat.imag], axis=-1)
        return real @ self._pinv.T

    def exp(self, a, t=1.0):
        m = self.rep(np.asarray(a) * np.asarray(t)[..., None])
        if m.ndim == 2:
            return expm(m)
        shape = m.shape
        return expm(m.reshape(-1, self.d, self.d)).reshape(shape)

    def mul_exp(self, g, a, t):
        return np.asarray(g) @ self.exp(a, t)

    def trivialize(self, g, dg):
        return self.unrep(np.linalg.solve(g, dg))

    def commutator_defect(self) -> float:
        worst = 0.0
        b = self.basis
        for i in range(3):
            for j in range(3):
                lhs = b[i] @ b[j] - b[j] @ b[i]
                rhs = np.einsum("k,kab->ab", self.algebra.c[i, j], b)
                worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst

    def coordinates(self, g):
        g = np.asarray(g)
        if self.coords == "translation":
            return g[..., :3, 3].real
        shape = g.shape[:-2]
        flat = g.reshape((-1, self.d, self.d))
        from scipy.linalg import logm

        out = np.array([self.unrep(logm(x)) for x in flat])
        return out.reshape(shape + (3,))

    def loop_defect(self, g1, g2):
        m = np.linalg.solve(g1, g2)
        log = _log_near_identity(m)
        return np.linalg.norm(log.reshape(log.shape[:-2] + (-1,)), axis=-1)


def _e(d, i, j, val=1.0):
    m = np.zeros((d, d))
    m[i, j] = val
    return m


def matrix_model(kind: SpaceKind) -> MatrixModel:
    """Matrix realisation of a group kind (not available for general lkt)."""
    alg = make_algebra(kind)
    name = _PRODUCT_ALIAS.get(kind.name, kind.name)
    if name == "minkowski_r12":
        basis = [_e(4, 0, 3), _e(4, 1, 3), _e(4, 2, 3)]
        return MatrixModel(alg, basis, coords="translation")
    if name == "algebra_a":
        a = kind.alpha
        basis = [_e(3, 0, 0, a), _e(3, 0, 1), _e(3, 2, 2)]
    elif name == "algebra_b":
        a = kind.alpha
        basis = [_e(3, 0, 1), _e(3, 2, 2), _e(3, 0, 0, -a)]
    elif name == "algebra_c":
        d = kind.delta
        basis = [_e(3, 0, 0, d), _e(3, 2, 2), _e(3, 0, 1)]
    elif kind.name == "su12":
        basis = [
            np.array([[0, 1], [1, 0]], dtype=complex),
            np.array([[0, -1j], [1j, 0]], dtype=complex),
            np.array([[1j, 0], [0, -1j]], dtype=complex),
        ]
    else:
        raise UnsupportedKind(f"no matrix model for {kind.name} {kind.params()}")
    return MatrixModel(alg, basis)


class LktCoordinateModel(GroupModel):
    """The model of L(kappa, tau) on V in R^3 with its orthonormal frame fields."""

    kind = "coordinate"

    def __init__(self, kind: SpaceKind, substeps: int = 4):
        if kind.name not in ("lkt", "su12"):
            raise UnsupportedKind("coordinate model is for lkt spaces")
        self.space = kind
        self.algebra = make_algebra(kind)
        self.substeps = substeps

    def identity(self):
        return np.zeros(3)

    def lam(self, p):
        p = np.asarray(p, dtype=float)
        return 1.0 / (1.0 + 0.25 * self.space.kappa * (p[..., 0] ** 2 + p[..., 1] ** 2))

    def in_domain(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return 1.0 + 0.25 * self.space.kappa * (p[..., 0] ** 2 + p[..., 1] ** 2) > 0

    def frame(self, p) -> np.ndarray:
        """Matrix whose column i holds the coordinate components of E_i at p."""
        p = np.asarray(p, dtype=float)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        tau, sigma = self.space.tau, self.space.sigma
        il = 1.0 / self.lam(p)
        c, s = np.cos(sigma * z), np.sin(sigma * z)
        out = np.zeros(p.shape[:-1] + (3, 3))
        out[..., 0, 0] = il * c
        out[..., 1, 0] = il * s
        out[..., 2, 0] = tau * (x * s - y * c)
        out[..., 0, 1] = -il * s
        out[..., 1, 1] = il * c
        out[..., 2, 1] = tau * (x * c + y * s)
        out[..., 2, 2] = 1.0
        return out

    def metric(self, p) -> np.ndarray:
        """Coordinate metric tensor at p."""
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        lam, tau = self.lam(p), self.space.tau
        theta = np.stack([tau * lam * y, -tau * lam * x, np.ones_like(x)], axis=-1)
        g = np.zeros(p.shape[:-1] + (3, 3))
        g[..., 0, 0] = lam**2
        g[..., 1, 1] = lam**2
        return g - theta[..., :, None] * theta[..., None, :]

    def _field(self, p, a):
        return np.einsum("...ij,...j->...i", self.frame(p), a)

    def mul_exp(self, g, a, t):
        p = np.asarray(g, dtype=float)
        a = np.asarray(a, dtype=float)
        n = self.substeps
        h = np.asarray(t, dtype=float)[..., None] / n
        for _ in range(n):
            k1 = self._field(p, a)
            k2 = self._field(p + 0.5 * h * k1, a)
            k3 = self._field(p + 0.5 * h * k2, a)
            k4 = self._field(p + h * k3, a)
            q = p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(self.in_domain(q)):
                raise DomainExit("flow left the coordinate domain V", last_point=p)
            p = q
        return p

    def trivialize(self, g, dg):
        return np.linalg.solve(self.frame(g), np.asarray(dg)[..., None])[..., 0]

    def coordinates(self, g):
        return np.asarray(g, dtype=float)

    def loop_defect(self, g1, g2):
        return np.linalg.norm(np.asarray(g1) - np.asarray(g2), axis=-1)


def group_model(kind: SpaceKind) -> GroupModel:
    """Preferred realisation: matrices where available, else coordinates."""
    try:
        return matrix_model(kind)
    except UnsupportedKind:
        return LktCoordinateModel(kind)


def group_mul_exp(model: GroupModel, g, a, t):
    """g * exp(t a), or the time-t flow of sum a^i E_i from g."""
    return model.mul_exp(g, a, t)


# ---------------------------------------------------------------------------
# Darboux integration


@dataclass
class DarbouxResult:
    points: np.ndarray  # (nu, nv, ...) group elements
    residual: float
    defect_field: np.ndarray  # (nu-1, nv-1)


def darboux_integrate(
    xi_u: np.ndarray,
    xi_v: np.ndarray,
    hu: float,
    hv: float,
    model: GroupModel,
    g0,
    anchor: tuple[int, int] = (0, 0),
) -> DarbouxResult:
    """Integrate dF = F xi (left-trivialised) on a rectangular grid.

    ``xi_u``/``xi_v`` hold xi(d/du), xi(d/dv) at the nodes, shape (nu, nv, 3).
    Each edge uses the average of its endpoint values and one exponential.
    The base row through the anchor is integrated first, then every column.
    """
    xi_u = np.asarray(xi_u, dtype=float)
    xi_v = np.asarray(xi_v, dtype=float)
    if not (np.all(np.isfinite(xi_u)) and np.all(np.isfinite(xi_v))):
        raise ValueError("xi contains non-finite values")
    nu, nv = xi_u.shape[:2]
    i0, j0 = anchor
    g0 = np.asarray(g0)
    pts = np.zeros((nu, nv) + g0.shape, dtype=g0.dtype if g0.dtype.kind == "c" else float)
    au = 0.5 * (xi_u[1:] + xi_u[:-1])  # edge (i, j) -> (i+1, j)
    av = 0.5 * (xi_v[:, 1:] + xi_v[:, :-1])  # edge (i, j) -> (i, j+1)

    pts[i0, j0] = g0
    for i in range(i0 + 1, nu):
        pts[i, j0] = model.mul_exp(pts[i - 1, j0], au[i - 1, j0], hu)
    for i in range(i0 - 1, -1, -1):
        pts[i, j0] = model.mul_exp(pts[i + 1, j0], au[i, j0], -hu)
    for j in range(j0 + 1, nv):
        pts[:, j] = model.mul_exp(pts[:, j - 1], av[:, j - 1], np.full(nu, hv))
    for j in range(j0 - 1, -1, -1):
        pts[:, j] = model.mul_exp(pts[:, j + 1], av[:, j], np.full(nu, -hv))

    if nu < 2 or nv < 2:
        return DarbouxResult(pts, 0.0, np.zeros((max(nu - 1, 0), max(nv - 1, 0))))
    # holonomy around each cell starting at its lower-left corner
    base = pts[:-1, :-1]
    path1 = model.mul_exp(
        model.mul_exp(base, au[:, :-1], np.full(au[:, :-1].shape[:-1], hu)),
        av[1:, :],
        np.full(av[1:, :].shape[:-1], hv),
    )
    path2 = model.mul_exp(
        model.mul_exp(base, av[:-1, :], np.full(av[:-1, :].shape[:-1], hv)),
        au[:, 1:],
        np.full(au[:, 1:].shape[:-1], hu),
    )
    defect = model.loop_defect(path1, path2)
    return DarbouxResult(pts, float(np.max(defect, initial=0.0)), defect)


# ---------------------------------------------------------------------------
# catalog


def catalog_entries() -> list[dict]:
    """Reference parameter values for every space kind."""
    examples = [
        SpaceKind("minkowski_r12"),
        SpaceKind("algebra_a", alpha=1.0),
        SpaceKind("algebra_b", alpha=1.0),
        SpaceKind("algebra_c", delta=1.0),
        SpaceKind("lkt", kappa=-4.0, tau=1.0),
        SpaceKind("lkt", kappa=1.0, tau=0.5),
        SpaceKind("su12"),
        SpaceKind("h2xr", alpha=1.0),
        SpaceKind("rxs12", alpha=1.0),
        SpaceKind("rxh12", delta=1.0),
        SpaceKind("de_sitter"),
        SpaceKind("anti_de_sitter"),
        SpaceKind("r_minus_s2"),
    ]
    ranges = {
        "algebra_a": {"alpha": "nonzero real"},
        "algebra_b": {"alpha": "nonzero real"},
        "algebra_c": {"delta": "nonzero real"},
        "h2xr": {"alpha": "nonzero real"},
        "rxs12": {"alpha": "nonzero real"},
        "rxh12": {"delta": "nonzero real"},
        "lkt": {"kappa": "real", "tau": "nonzero real"},
    }
    out = []
    for kind in examples:
        entry = {"space": kind.to_dict(), "eps": list(ALG_EPS)}
        if kind.is_group:
            alg = make_algebra(kind)
            entry["structure_constants"] = _sparse(alg.c)
            entry["christoffel"] = _sparse(alg.gamma)
            entry["jacobi_defect"] = alg.jacobi_defect()
        else:
            entry["structure_constants"] = None
            entry["christoffel"] = None
        entry["parameter_ranges"] = ranges.get(kind.name, {})
        out.append(entry)
    return out


def _sparse(arr: np.ndarray) -> dict:
    """Nonzero entries keyed by 1-based index strings 'ijk'."""
    out = {}
    for idx in zip(*np.nonzero(np.abs(arr) > 0)):
        key = "".join(str(i + 1) for i in idx)
        out[key] = float(arr[idx])
    return out
