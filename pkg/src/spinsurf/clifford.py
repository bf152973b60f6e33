"""Real Clifford algebras of dimension at most four.

Convention: for an orthonormal basis vector ``e_i`` with metric sign
``eps_i = <e_i, e_i>``, the Clifford square is ``e_i * e_i = -eps_i``, so that
``v*w + w*v = -2 <v, w>`` for all vectors.

Blades are indexed by bitmasks over the basis (bit ``i`` set means ``e_i`` is a
factor), stored in increasing bitmask order. Coefficient arrays may carry any
number of leading batch axes; the blade axis is always last.
"""

from __future__ import annotations

import contextlib
import json
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

__all__ = [
    "CliffordError",
    "Signature",
    "Multivector",
    "SkewOperator",
    "mv_product",
    "mv_tau",
    "spin_product",
    "ad_action",
    "is_spin",
    "commutator",
    "skew_to_bivector",
    "bivector_to_skew",
    "exp_bivector",
    "left_matrix",
    "right_matrix",
    "lift_frame",
    "hc_iso",
    "hc_iso_inverse",
    "hc_product",
    "star_map",
    "parse_multivector",
    "format_multivector",
    "inject_sign_error",
    "CL02",
    "CL11",
    "CL12",
    "I_BLADE",
    "IOTA",
]


class CliffordError(ValueError):
    """Invalid input to a Clifford algebra operation."""


@dataclass(frozen=True)
class Signature:
    """Ordered metric signs of an orthonormal basis.

    ``eps[i]`` is ``<e_i, e_i>``; ``p`` counts the ``-1`` entries (timelike,
    squaring to ``+1`` in the algebra) and ``q`` the ``+1`` entries.
    """

    eps: tuple[int, ...]

    def __post_init__(self):
        eps = tuple(int(e) for e in self.eps)
        if len(eps) > 4:
            raise CliffordError(f"dimension {len(eps)} > 4 is not supported")
        if any(e not in (-1, 1) for e in eps):
            raise CliffordError(f"metric signs must be +-1, got {self.eps}")
        object.__setattr__(self, "eps", eps)

    @classmethod
    def from_pq(cls, p: int, q: int) -> "Signature":
        """Canonical ordering: ``p`` timelike vectors first, then ``q`` spacelike."""
        if p < 0 or q < 0:
            raise CliffordError("p and q must be non-negative")
        return cls((-1,) * p + (1,) * q)

    @property
    def n(self) -> int:
        return len(self.eps)

    @property
    def p(self) -> int:
        return sum(1 for e in self.eps if e < 0)

    @property
    def q(self) -> int:
        return sum(1 for e in self.eps if e > 0)

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def is_canonical(self) -> bool:
        return self.eps == Signature.from_pq(self.p, self.q).eps

    @property
    def metric(self) -> np.ndarray:
        return np.diag(np.array(self.eps, dtype=float))

    def __str__(self) -> str:
        if self.is_canonical:
            return f"sig({self.p},{self.q})"
        return "sig(" + ",".join("-" if e < 0 else "+" for e in self.eps) + ")"


# ---------------------------------------------------------------------------
# product tables


def _blade_sign(a: int, b: int, eps: tuple[int, ...]) -> float:
    """Sign of e_A e_B = sign * e_{A xor B} for bitmask blades A, B."""
    swaps = 0
    for i in range(len(eps)):
        if b >> i & 1:
            swaps += bin(a >> (i + 1)).count("1")
    sign = -1.0 if swaps % 2 else 1.0
    common = a & b
    for i, e in enumerate(eps):
        if common >> i & 1:
            sign *= -e
    return sign


class _Tables:
    def __init__(self, eps: tuple[int, ...]):
        n = len(eps)
        dim = 1 << n
        self.eps = eps
        self.sign = np.array(
            [[_blade_sign(a, b, eps) for b in range(dim)] for a in range(dim)]
        )
        self.grade = np.array([bin(a).count("1") for a in range(dim)])
        self.tau_sign = np.where(
            (self.grade * (self.grade - 1) // 2) % 2 == 0, 1.0, -1.0
        )
        self.rebuild()

    def rebuild(self):
        dim = self.sign.shape[0]
        tensor = np.zeros((dim, dim, dim))
        for a in range(dim):
            for b in range(dim):
                tensor[a, b, a ^ b] = self.sign[a, b]
        self.tensor = tensor


@lru_cache(maxsize=None)
def _tables(eps: tuple[int, ...]) -> _Tables:
    return _Tables(eps)


@contextlib.contextmanager
def inject_sign_error(sig: "Signature", a: int = 0b01, b: int = 0b10):
    """Temporarily flip the sign of one entry of the product table.

    Used by the self-test to check that the identity suite detects a corrupted
    multiplication rule.
    """
    tab = _tables(sig.eps)
    tab.sign[a, b] *= -1.0
    tab.rebuild()
    try:
        yield
    finally:
        tab.sign[a, b] *= -1.0
        tab.rebuild()


def blade_label(mask: int) -> str:
    """1-based ascending index label of a blade, '' for the scalar."""
    return "".join(str(i + 1) for i in range(4) if mask >> i & 1)


def label_mask(label: str) -> int:
    mask = 0
    prev = 0
    for ch in label:
        i = int(ch)
        if i <= prev:
            raise CliffordError(f"blade label {label!r} is not strictly ascending")
        mask |= 1 << (i - 1)
        prev = i
    return mask


# ---------------------------------------------------------------------------
# multivectors


class Multivector:
    """Element (or array of elements) of Cl(sig).

    ``coeffs`` has shape ``(..., 2**n)``; leading axes are batch axes.
    """

    __slots__ = ("sig", "coeffs")
    __array_priority__ = 1000

    def __init__(self, sig: Signature, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 0 or coeffs.shape[-1] != sig.dim:
            raise CliffordError(
                f"coefficient array must end with axis of length {sig.dim}, "
                f"got shape {coeffs.shape}"
            )
        self.sig = sig
        self.coeffs = coeffs

    # constructors -----------------------------------------------------------
    @classmethod
    def zeros(cls, sig: Signature, shape=()) -> "Multivector":
        return cls(sig, np.zeros(tuple(shape) + (sig.dim,)))

    @classmethod
    def scalar(cls, sig: Signature, value=1.0) -> "Multivector":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (sig.dim,))
        c[..., 0] = value
        return cls(sig, c)

    @classmethod
    def vector(cls, sig: Signature, comps) -> "Multivector":
        comps = np.asarray(comps, dtype=float)
        if comps.shape[-1] != sig.n:
            raise CliffordError(f"expected {sig.n} vector components")
        c = np.zeros(comps.shape[:-1] + (sig.dim,))
        for i in range(sig.n):
            c[..., 1 << i] = comps[..., i]
        return cls(sig, c)

    @classmethod
    def basis(cls, sig: Signature, *indices: int) -> "Multivector":
        """Product e_{i1} e_{i2} ... of 0-based basis vectors."""
        out = cls.scalar(sig, 1.0)
        for i in indices:
            if not 0 <= i < sig.n:
                raise CliffordError(f"basis index {i} out of range")
            c = np.zeros(sig.dim)
            c[1 << i] = 1.0
            out = out * cls(sig, c)
        return out

    # structure ----------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    def __getitem__(self, idx) -> "Multivector":
        if isinstance(idx, str):
            return self.coeffs[..., label_mask(idx)]
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Multivector(self.sig, self.coeffs[idx + (Ellipsis, slice(None))])

    def grade(self, k: int) -> "Multivector":
        tab = _tables(self.sig.eps)
        return Multivector(self.sig, self.coeffs * (tab.grade == k))

    def even(self) -> "Multivector":
        tab = _tables(self.sig.eps)
        return Multivector(self.sig, self.coeffs * (tab.grade % 2 == 0))

    def odd(self) -> "Multivector":
        tab = _tables(self.sig.eps)
        return Multivector(self.sig, self.coeffs * (tab.grade % 2 == 1))

    @property
    def scalar_part(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def vector_part(self) -> np.ndarray:
        """Components of the grade-1 part, shape (..., n)."""
        return self.coeffs[..., [1 << i for i in range(self.sig.n)]]

    def norm(self) -> np.ndarray:
        """Euclidean norm of the coefficient vector."""
        return np.linalg.norm(self.coeffs, axis=-1)

    def tau(self) -> "Multivector":
        return mv_tau(self)

    # arithmetic ---------------------------------------------------------------
    def _check(self, other: "Multivector"):
        if other.sig != self.sig:
            raise CliffordError(f"signature mismatch: {self.sig} vs {other.sig}")

    def __add__(self, other):
        if isinstance(other, Multivector):
            self._check(other)
            return Multivector(self.sig, self.coeffs + other.coeffs)
        return self + Multivector.scalar(self.sig, other)

    __radd__ = __add__

    def __neg__(self):
        return Multivector(self.sig, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return mv_product(self, other)
        other = np.asarray(other, dtype=float)
        return Multivector(self.sig, self.coeffs * other[..., None])

    def __rmul__(self, other):
        other = np.asarray(other, dtype=float)
        return Multivector(self.sig, self.coeffs * other[..., None])

    def __truediv__(self, other):
        other = np.asarray(other, dtype=float)
        return Multivector(self.sig, self.coeffs / other[..., None])

    def allclose(self, other: "Multivector", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        if self.coeffs.ndim == 1:
            return format_multivector(self)
        return f"Multivector({self.sig}, shape={self.shape})"


def mv_product(a: Multivector, b: Multivector) -> Multivector:
    """Clifford product, broadcasting over batch axes."""
    if a.sig != b.sig:
        raise CliffordError(f"signature mismatch: {a.sig} vs {b.sig}")
    tensor = _tables(a.sig.eps).tensor
    return Multivector(a.sig, np.einsum("...i,...j,ijk->...k", a.coeffs, b.coeffs, tensor))


def mv_tau(a: Multivector) -> Multivector:
    """Reversal x1...xk -> xk...x1."""
    return Multivector(a.sig, a.coeffs * _tables(a.sig.eps).tau_sign)


def spin_product(phi: Multivector, psi: Multivector) -> Multivector:
    """The Cl-valued pairing <<phi, psi>> = tau(psi) phi."""
    return mv_product(mv_tau(psi), phi)


def commutator(a: Multivector, b: Multivector) -> Multivector:
    """[a, b] = (ab - ba) / 2."""
    return (mv_product(a, b) - mv_product(b, a)) * 0.5


def _inverse(g: Multivector, tol: float = 1e-9) -> Multivector:
    gg = mv_product(mv_tau(g), g)
    s = gg.scalar_part
    rest = np.abs(gg.coeffs[..., 1:]).max(axis=-1) if g.sig.dim > 1 else 0.0
    if np.any(np.abs(s) < tol) or np.any(rest > tol * np.maximum(1.0, np.abs(s))):
        raise CliffordError("element is not invertible (tau(g) g is not a nonzero scalar)")
    return mv_tau(g) / s


def ad_action(g: Multivector, v: Multivector) -> Multivector:
    """g v g^{-1}."""
    return mv_product(mv_product(g, v), _inverse(g))


def is_spin(a: Multivector, tol: float = 1e-10) -> bool:
    """True when every element of ``a`` lies in the spin group within ``tol``."""
    tab = _tables(a.sig.eps)
    if np.abs(a.coeffs[..., tab.grade % 2 == 1]).max(initial=0.0) > tol:
        return False
    gg = mv_product(mv_tau(a), a).coeffs
    if np.abs(gg[..., 0] - 1.0).max(initial=0.0) > tol:
        return False
    if np.abs(gg[..., 1:]).max(initial=0.0) > tol:
        return False
    for i in range(a.sig.n):
        img = mv_product(mv_product(a, Multivector.basis(a.sig, i)), mv_tau(a)).coeffs
        if np.abs(img[..., tab.grade != 1]).max(initial=0.0) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# linear-algebra views


def left_matrix(a: Multivector) -> np.ndarray:
    """Matrix of x -> a x acting on coefficient vectors, shape (..., dim, dim)."""
    tensor = _tables(a.sig.eps).tensor
    return np.einsum("...i,ijk->...kj", a.coeffs, tensor)


def right_matrix(a: Multivector) -> np.ndarray:
    """Matrix of x -> x a acting on coefficient vectors."""
    tensor = _tables(a.sig.eps).tensor
    return np.einsum("...j,ijk->...ki", a.coeffs, tensor)


def exp_bivector(b: Multivector) -> Multivector:
    """Exponential of a multivector via its left-multiplication matrix."""
    mats = left_matrix(b)
    e = expm(mats) if mats.ndim == 2 else expm(mats.reshape(-1, *mats.shape[-2:]))
    e = e.reshape(mats.shape)
    return Multivector(b.sig, e[..., :, 0])


@dataclass(frozen=True)
class SkewOperator:
    """Metric-skew endomorphism of the vector space of a signature.

    ``matrix[:, j]`` holds the components of ``u(e_j)``.
    """

    sig: Signature
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape[-2:] != (self.sig.n, self.sig.n):
            raise CliffordError("operator matrix has wrong shape")
        object.__setattr__(self, "matrix", m)

    def skew_defect(self) -> float:
        g = self.sig.metric
        m = self.matrix
        return float(np.abs(np.swapaxes(m, -1, -2) @ g + g @ m).max(initial=0.0))

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.matrix, v)


def skew_to_bivector(u: SkewOperator, tol: float = 1e-12) -> Multivector:
    """Bivector b with [b, x] = u(x) for every vector x."""
    if u.skew_defect() > tol * max(1.0, float(np.abs(u.matrix).max(initial=0.0))):
        raise CliffordError("operator is not skew-symmetric for the metric")
    sig = u.sig
    out = Multivector.zeros(sig, u.matrix.shape[:-2])
    for j in range(sig.n):
        ej = Multivector.basis(sig, j)
        uej = Multivector.vector(sig, u.matrix[..., :, j])
        out = out + mv_product(ej, uej) * (0.5 * sig.eps[j])
    return out


def bivector_to_skew(b: Multivector) -> SkewOperator:
    """Inverse of skew_to_bivector: the operator x -> [b, x]."""
    sig = b.sig
    cols = []
    for j in range(sig.n):
        cols.append(commutator(b, Multivector.basis(sig, j)).vector_part())
    return SkewOperator(sig, np.stack(cols, axis=-1))


def lift_frame(frame: np.ndarray, sig: Signature, tol: float = 1e-8) -> Multivector:
    """Spin element g with Ad(g) e_j = f_j for the columns f_j of ``frame``.

    ``frame`` has shape (..., n, n); column j holds the components of f_j in the
    standard basis. The frame must be orthonormal with the ordered signs of
    ``sig`` and lie in the identity component of the orthogonal group. The sign
    of the lift is fixed so that the largest coefficient is positive; callers
    that need continuity along a grid align signs themselves.
    """
    frame = np.asarray(frame, dtype=float)
    n, dim = sig.n, sig.dim
    batch = frame.shape[:-2]
    tab = _tables(sig.eps)
    even = np.flatnonzero(tab.grade % 2 == 0)
    blocks = []
    for j in range(n):
        fj = Multivector.vector(sig, frame[..., :, j])
        ej = Multivector.basis(sig, j)
        m = left_matrix(fj) - right_matrix(ej)
        blocks.append(m[..., :, even])
    system = np.concatenate(blocks, axis=-2)
    _, svals, vh = np.linalg.svd(system)
    null = vh[..., -1, :]
    if np.any(svals[..., -1] > tol * np.maximum(1.0, svals[..., 0])):
        raise CliffordError("frame is not orthonormal for the given signature")
    coeffs = np.zeros(batch + (dim,))
    coeffs[..., even] = null
    g = Multivector(sig, coeffs)
    s = mv_product(mv_tau(g), g).scalar_part
    if np.any(s <= tol):
        raise CliffordError("frame is not in the identity component; no spin lift")
    coeffs = coeffs / np.sqrt(s)[..., None]
    idx = np.argmax(np.abs(coeffs), axis=-1)
    lead = np.take_along_axis(coeffs, idx[..., None], axis=-1)
    coeffs = coeffs * np.sign(lead)
    return Multivector(sig, coeffs)


# ---------------------------------------------------------------------------
# the model Cl(1,2) with basis (e0, e1, e2), <e0, e0> = -1

CL12 = Signature.from_pq(1, 2)
CL02 = Signature.from_pq(0, 2)
CL11 = Signature.from_pq(1, 1)

# quaternion I corresponds to -e1 e2; the central unit i to e0 e1 e2
I_BLADE = Multivector.basis(CL12, 1, 2) * -1.0
IOTA = Multivector.basis(CL12, 0, 1, 2)

# complexified quaternions are complex arrays (..., 4) holding (z0, z1, z2, z3)
# for z0 + z1 I + z2 J + z3 K
_QTABLE = np.zeros((4, 4, 4))
for _a, _b, _c, _s in [
    (0, 0, 0, 1), (0, 1, 1, 1), (0, 2, 2, 1), (0, 3, 3, 1),
    (1, 0, 1, 1), (2, 0, 2, 1), (3, 0, 3, 1),
    (1, 1, 0, -1), (2, 2, 0, -1), (3, 3, 0, -1),
    (1, 2, 3, 1), (2, 3, 1, 1), (3, 1, 2, 1),
    (2, 1, 3, -1), (3, 2, 1, -1), (1, 3, 2, -1),
]:
    _QTABLE[_a, _b, _c] = _s


def hc_product(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Product of complexified quaternions (complex scalars commute with I, J, K)."""
    return np.einsum("...i,...j,ijk->...k", x, y, _QTABLE)


def _hc_images() -> np.ndarray:
    gens = [
        np.array([0, 1j, 0, 0]),  # e0 -> i I
        np.array([0, 0, 1, 0], dtype=complex),  # e1 -> J
        np.array([0, 0, 0, -1], dtype=complex),  # e2 -> -K
    ]
    images = np.zeros((8, 4), dtype=complex)
    for mask in range(8):
        z = np.array([1, 0, 0, 0], dtype=complex)
        for i in range(3):
            if mask >> i & 1:
                z = hc_product(z, gens[i])
        images[mask] = z
    return images


_HC_IMAGES = _hc_images()
_HC_REAL = np.concatenate([_HC_IMAGES.real, _HC_IMAGES.imag], axis=1)  # (8, 8)
_HC_REAL_INV = np.linalg.inv(_HC_REAL)


def hc_iso(a: Multivector) -> np.ndarray:
    """Image of an element of Cl(1,2) in the complexified quaternions."""
    if a.sig != CL12:
        raise CliffordError(f"hc_iso needs {CL12}, got {a.sig}")
    return a.coeffs.astype(complex) @ _HC_IMAGES


def hc_iso_inverse(z) -> Multivector:
    z = np.asarray(z, dtype=complex)
    flat = np.concatenate([z.real, z.imag], axis=-1)
    return Multivector(CL12, flat @ _HC_REAL_INV)


def _quaternion_of_cl02(psi: Multivector) -> np.ndarray:
    # Cl(0,2) -> H via e1 -> J, e2 -> -K, hence e1 e2 -> -I
    c = psi.coeffs
    return np.stack([c[..., 0], -c[..., 3], c[..., 1], -c[..., 2]], axis=-1)


def star_map(psi: Multivector, case: str) -> Multivector:
    """Identify an intrinsic spinor with an element of the even part of Cl(1,2).

    ``riemannian``: psi in Cl(0,2) read as a quaternion q0 + q1 I + q2 J + q3 K,
    sent to q0 + q1 I + i (q2 J + q3 K).
    ``lorentzian``: psi in Cl(1,1) with f0 -> e0 e2, f1 -> e1 e2.
    """
    if case == "riemannian":
        if psi.sig != CL02:
            raise CliffordError(f"riemannian star map needs {CL02}, got {psi.sig}")
        q = _quaternion_of_cl02(psi).astype(complex)
        q[..., 2:] *= 1j
        return hc_iso_inverse(q)
    if case == "lorentzian":
        if psi.sig != CL11:
            raise CliffordError(f"lorentzian star map needs {CL11}, got {psi.sig}")
        images = [
            Multivector.scalar(CL12, 1.0),
            Multivector.basis(CL12, 0, 2),
            Multivector.basis(CL12, 1, 2),
            Multivector.basis(CL12, 0, 2) * Multivector.basis(CL12, 1, 2),
        ]
        out = Multivector.zeros(CL12, psi.shape)
        for mask in range(4):
            out = out + images[mask] * psi.coeffs[..., mask]
        return out
    raise CliffordError(f"unknown case {case!r}")


# ---------------------------------------------------------------------------
# text form

_TEXT_RE = re.compile(r"^\s*sig\(([^)]*)\)\s*(\{.*\})\s*$", re.S)


def format_multivector(a: Multivector) -> str:
    """Text form ``sig(p,q){"": c0, "1": c1, ...}`` listing nonzero blades."""
    if a.coeffs.ndim != 1:
        raise CliffordError("text form is defined for single multivectors only")
    items = [
        f'"{blade_label(m)}": {float(c)!r}'
        for m, c in enumerate(a.coeffs)
        if c != 0.0
    ]
    return f"{a.sig}{{" + ", ".join(items) + "}"


def parse_multivector(text: str) -> Multivector:
    m = _TEXT_RE.match(text)
    if not m:
        raise CliffordError(f"not a multivector text form: {text!r}")
    head = m.group(1).replace(" ", "")
    if all(ch in "+-," for ch in head):
        sig = Signature(tuple(-1 if s == "-" else 1 for s in head.split(",") if s))
    else:
        p, q = (int(x) for x in head.split(","))
        sig = Signature.from_pq(p, q)
    try:
        body = json.loads(m.group(2))
    except json.JSONDecodeError as exc:
        raise CliffordError(f"bad coefficient table: {exc}") from exc
    coeffs = np.zeros(sig.dim)
    for label, value in body.items():
        mask = label_mask(label)
        if mask >= sig.dim:
            raise CliffordError(f"blade {label!r} exceeds dimension {sig.n}")
        coeffs[mask] = float(value)
    return Multivector(sig, coeffs)
