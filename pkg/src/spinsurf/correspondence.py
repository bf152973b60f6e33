"""Transformations between spinor descriptions of surfaces: the Dirac/Killing
equivalence, the Lawson-type rotation between R^{1,2} and anti-de Sitter
space, the Calabi map between minimal and maximal surfaces, and Weierstrass
data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import Chart, ImmersionField, _affine, core, interior
from .lie import SpaceKind
from .spinor import (
    IntrinsicAction,
    KillingEquation,
    SpinorField,
    apply,
    dirac,
    dirac_lkt_residual,
    residual_killing,
    shape_defects,
    shape_from_spinor,
    split_pm,
)


class OutOfRange(ValueError):
    """A parameter lies outside the range where a transformation exists."""


class HemisphereCondition(ValueError):
    """The spinor indicator is not positive on the whole chart."""


class NonConformal(ValueError):
    """Weierstrass data are not null to tolerance."""


class PathDependence(ValueError):
    """A path integral depends on the path beyond tolerance."""


# ---------------------------------------------------------------------------
# Dirac / Killing


def dirac_residual(field: SpinorField, H, tau: float = 0.0) -> np.ndarray:
    """|D psi + i H psi - i tau omega psi| at every node."""
    return dirac_lkt_residual(field, H, tau)


def dirac_killing_roundtrip(
    field: SpinorField, H, tau: float, S: np.ndarray | None = None, margin: float = 0.125
) -> dict:
    """Both directions of the Dirac/Killing correspondence on one field.

    Killing to Dirac: with the shape operator S, the residual of
    nabla psi = i/2 S psi - i/2 tau X omega psi is compared with the Dirac
    residual of D psi = -iH psi + i tau omega psi.
    Dirac to Killing: S is rebuilt from psi and the Killing residual of the
    rebuilt equation is reported together with the symmetry and trace
    defects of the rebuilt S. Maxima are taken over an inset subdomain.
    """
    chart = field.chart
    H = np.broadcast_to(np.asarray(H, dtype=float), chart.shape)
    ind = field.indicator()
    report = {"indicator_defect": float(np.abs(ind - 1.0).max())}
    dres = float(core(dirac_residual(field, H, tau), margin).max())
    report["dirac_residual"] = dres
    s_rec = shape_from_spinor(field, tau)
    defects = shape_defects(s_rec, H)
    report["symmetry_defect"] = float(core(defects["symmetry"], margin).max())
    report["trace_defect"] = float(core(defects["trace"], margin).max())
    eq_rec = KillingEquation("killing_lkt", None, s_rec, tau=tau)
    report["recovered_killing_residual"] = float(
        core(residual_killing(eq_rec, field), margin).max()
    )
    if S is not None:
        eq = KillingEquation("killing_lkt", None, S, tau=tau)
        kres = float(core(residual_killing(eq, field), margin).max())
        report["killing_residual"] = kres
        report["ratio"] = dres / kres if kres > 0 else (0.0 if dres == 0 else np.inf)
        report["shape_error"] = float(core(np.abs(s_rec - S), margin).max())
    return report


# ---------------------------------------------------------------------------
# Lawson-type rotation


@dataclass
class CmcPair:
    """A spinor field with its mean curvature and target tag ``r12`` or ``h13``.

    ``r12``: D psi = -i H psi. ``h13``: D psi = -i H psi + i omega psi.
    """

    field: SpinorField
    H: float
    target: str

    def __post_init__(self):
        if self.target not in ("r12", "h13"):
            raise ValueError(f"unknown target {self.target!r}")

    @property
    def tau(self) -> float:
        return 0.0 if self.target == "r12" else 1.0

    def residual(self) -> np.ndarray:
        return dirac_residual(self.field, self.H, self.tau)

    def indicator(self) -> np.ndarray:
        return split_pm(self.field.values)[2]


def _rotation(field: SpinorField, theta: float) -> np.ndarray:
    act = IntrinsicAction(field.chart.eps)
    return np.cos(theta) * act.identity + np.sin(theta) * act.omega


def lawson_angle(H1: float, branch: int = 1) -> tuple[float, float]:
    """(theta, H2) with sin 2 theta = 1/H1 and H2 = H1 cos 2 theta = branch sqrt(H1^2 - 1)."""
    if abs(H1) < 1.0:
        raise OutOfRange(f"H1 = {H1} must lie in (-inf, -1] or [1, inf)")
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    theta = 0.5 * np.arcsin(1.0 / H1)
    h2 = H1 * np.cos(2 * theta)
    if h2 != 0 and np.sign(h2) != branch:
        theta = np.sign(theta) * np.pi / 2 - theta
        h2 = H1 * np.cos(2 * theta)
    return float(theta), float(h2)


def lawson_rotate(pair: CmcPair, branch: int = 1, threshold: float | None = None) -> tuple[CmcPair, float]:
    """psi2 = (cos theta + sin theta e1 e2) psi1 solves the anti-de Sitter equation.

    Returns the rotated pair and theta.
    """
    if pair.target != "r12":
        raise ValueError("lawson_rotate expects an r12 pair")
    theta, h2 = lawson_angle(pair.H, branch)
    if threshold is not None:
        r = float(interior(pair.residual()).max())
        if r > threshold:
            raise ValueError(f"input Dirac residual {r:.3e} exceeds {threshold:.1e}")
    rot = _rotation(pair.field, theta)
    out = pair.field.with_values(apply(rot, pair.field.values))
    return CmcPair(out, h2, "h13"), theta


def lawson_inverse(pair: CmcPair, branch: int = 1) -> tuple[CmcPair, float]:
    """Inverse rotation: from an h13 pair with H2 to an r12 pair with H1 = branch sqrt(H2^2 + 1).

    Inferred inverse of ``lawson_rotate`` (rotation by -theta); only the
    forward direction is part of the correspondence itself.
    """
    if pair.target != "h13":
        raise ValueError("lawson_inverse expects an h13 pair")
    h1 = branch * np.sqrt(pair.H**2 + 1.0)
    theta = 0.5 * np.arcsin(1.0 / h1)
    if abs(h1 * np.cos(2 * theta) - pair.H) > 1e-12:
        theta = np.sign(theta) * np.pi / 2 - theta
    rot = _rotation(pair.field, -theta)
    out = pair.field.with_values(apply(rot, pair.field.values))
    return CmcPair(out, float(h1), "r12"), float(theta)


# ---------------------------------------------------------------------------
# Calabi map


@dataclass
class CalabiResult:
    chart: Chart
    field: SpinorField
    factor: np.ndarray  # conformal factor lambda, g_hat = lambda^2 g
    indicator_defect: float


def calabi_map(
    chart: Chart,
    psi1: SpinorField,
    dirac_tol: float | None = None,
    norm_tol: float = 1e-6,
) -> CalabiResult:
    """Harmonic unit spinor of a minimal surface -> unit spinor of a maximal one.

    lambda = |psi+|^2 - |psi-|^2 must be positive. The new metric is
    lambda^2 g with frame e_j / lambda, and psi2 = lambda^(-1/2) psi1 with
    components unchanged under the frame rescaling.
    """
    psi = psi1.values
    norm = np.sum(psi * psi, axis=-1)
    if np.abs(norm - 1.0).max() > norm_tol:
        raise ValueError(f"input spinor is not unit: defect {np.abs(norm - 1.0).max():.3e}")
    _, _, lam = split_pm(psi)
    if np.any(lam <= 0):
        idx = tuple(int(k) for k in np.argwhere(lam <= 0)[0])
        raise HemisphereCondition(f"|psi+|^2 - |psi-|^2 <= 0 at node {idx}")
    if dirac_tol is not None:
        r = float(interior(np.linalg.norm(dirac(psi1), axis=-1)).max())
        if r > dirac_tol:
            raise ValueError(f"input Dirac residual {r:.3e} exceeds {dirac_tol:.1e}")
    metric = lam[..., None, None] ** 2 * chart.metric
    frame = chart.frame / lam[..., None, None]
    new_chart = Chart(chart.u, chart.v, metric, frame, chart.eps)
    psi2 = psi / np.sqrt(lam)[..., None]
    field = SpinorField(new_chart, psi2, "intrinsic", psi1.layout)
    ind = split_pm(psi2)[2]
    return CalabiResult(new_chart, field, lam, float(np.abs(ind - 1.0).max()))


# ---------------------------------------------------------------------------
# Weierstrass data


@dataclass
class WeierstrassData:
    """Holomorphic null triple Phi sampled at z = u + i v.

    ``flavor`` is ``euclidean_minimal`` (Phi1^2 + Phi2^2 + Phi3^2 = 0) or
    ``lorentz_maximal`` (-Phi1^2 - Phi2^2 + Phi3^2 = 0, third axis timelike).
    """

    u: np.ndarray
    v: np.ndarray
    phi: np.ndarray  # (nu, nv, 3) complex
    flavor: str

    def __post_init__(self):
        if self.flavor not in ("euclidean_minimal", "lorentz_maximal"):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.phi = np.asarray(self.phi, dtype=complex)

    def conformality(self) -> np.ndarray:
        p = self.phi
        if self.flavor == "euclidean_minimal":
            return np.abs(np.sum(p * p, axis=-1))
        return np.abs(-p[..., 0] ** 2 - p[..., 1] ** 2 + p[..., 2] ** 2)

    def cauchy_riemann(self) -> np.ndarray:
        """Discrete d/dzbar residual |(d/du Phi + i d/dv Phi) / 2|."""
        pu = np.gradient(self.phi, self.u, axis=0, edge_order=2)
        pv = np.gradient(self.phi, self.v, axis=1, edge_order=2)
        return np.abs(0.5 * (pu + 1j * pv)).max(axis=-1)

    @classmethod
    def sample(cls, fn, u, v, flavor: str) -> "WeierstrassData":
        U, V = np.meshgrid(np.asarray(u, float), np.asarray(v, float), indexing="ij")
        return cls(u, v, fn(U + 1j * V), flavor)

    def to_csv_rows(self) -> list[list[float]]:
        rows = []
        for i in range(len(self.u)):
            for j in range(len(self.v)):
                row = [float(self.u[i]), float(self.v[j])]
                for k in range(3):
                    row += [float(self.phi[i, j, k].real), float(self.phi[i, j, k].imag)]
                rows.append(row)
        return rows


def enneper_data(z: np.ndarray) -> np.ndarray:
    return np.stack([1 - z**2, 1j * (1 + z**2), 2 * z], axis=-1)


def catenoid_data(z: np.ndarray) -> np.ndarray:
    return np.stack([np.sinh(z), -1j * np.cosh(z), np.ones_like(z)], axis=-1)


def plane_data(z: np.ndarray, null=(1.0, 1j, 0.0)) -> np.ndarray:
    return np.broadcast_to(np.asarray(null, dtype=complex), z.shape + (3,)).copy()


def weierstrass_transform(data: WeierstrassData, tol: float = 1e-10) -> WeierstrassData:
    """(Phi1, Phi2, Phi3) -> (i Phi1, i Phi2, Phi3), swapping the flavor.

    Null triples for the Euclidean product become null for the Lorentzian one
    and vice versa; applying the map twice gives (-Phi1, -Phi2, Phi3).
    """
    bad = data.conformality().max(initial=0.0)
    if bad > tol * max(1.0, float(np.abs(data.phi).max()) ** 2):
        raise NonConformal(f"Weierstrass data not null: defect {bad:.3e}")
    phi = data.phi.copy()
    phi[..., :2] *= 1j
    flavor = "lorentz_maximal" if data.flavor == "euclidean_minimal" else "euclidean_minimal"
    return WeierstrassData(data.u, data.v, phi, flavor)


@dataclass
class WeierstrassSurface:
    immersion: ImmersionField
    positions: np.ndarray
    path_defect: float


def weierstrass_surface(
    data: WeierstrassData, anchor=(0, 0), origin=None, tol: float | None = 1e-6
) -> WeierstrassSurface:
    """x = origin + Re int Phi dz by trapezoid paths (anchor row, then columns)."""
    phi = data.phi
    hu = float(data.u[1] - data.u[0])
    hv = float(data.v[1] - data.v[0])
    du = (0.5 * hu * (phi[1:] + phi[:-1])).real  # dz = du
    dv = (0.5j * hv * (phi[:, 1:] + phi[:, :-1])).real  # dz = i dv
    nu, nv = phi.shape[:2]
    i0, j0 = anchor
    x = np.zeros((nu, nv, 3))
    if origin is not None:
        x[i0, j0] = origin
    for i in range(i0 + 1, nu):
        x[i, j0] = x[i - 1, j0] + du[i - 1, j0]
    for i in range(i0 - 1, -1, -1):
        x[i, j0] = x[i + 1, j0] - du[i, j0]
    for j in range(j0 + 1, nv):
        x[:, j] = x[:, j - 1] + dv[:, j - 1]
    for j in range(j0 - 1, -1, -1):
        x[:, j] = x[:, j + 1] - dv[:, j]
    loop = du[:, :-1] + dv[1:, :] - dv[:-1, :] - du[:, 1:]
    defect = float(np.abs(loop).max(initial=0.0))
    if tol is not None and defect > tol:
        raise PathDependence(f"Weierstrass path defect {defect:.3e} exceeds {tol:.1e}")
    if data.flavor == "euclidean_minimal":
        imm = ImmersionField(SpaceKind("euclidean_r3"), x, data.u, data.v)
    else:
        imm = ImmersionField(SpaceKind("minkowski_r12"), _affine(x), data.u, data.v)
    return WeierstrassSurface(imm, x, defect)


__all__ = [
    "CmcPair",
    "CalabiResult",
    "WeierstrassData",
    "WeierstrassSurface",
    "OutOfRange",
    "HemisphereCondition",
    "NonConformal",
    "PathDependence",
    "dirac_residual",
    "dirac_killing_roundtrip",
    "lawson_angle",
    "lawson_rotate",
    "lawson_inverse",
    "calabi_map",
    "enneper_data",
    "catenoid_data",
    "plane_data",
    "weierstrass_transform",
    "weierstrass_surface",
]
