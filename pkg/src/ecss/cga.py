"""Conformal geometric algebra of 3D space, R(4,1).

Basis vectors are ``e1, e2, e3, ep, em`` (``ep**2 = +1``, ``em**2 = -1``).
The null vectors used for point embedding are::

    eo   = (em - ep) / 2      # origin
    einf = em + ep            # point at infinity

A multivector stores 32 coefficients. Blades are ordered by grade and then
lexicographically over ``(e1, e2, e3, ep, em)``, so index 0 is the scalar,
indices 1..5 are the vectors, 6..15 the bivectors and so on. All products are
built from one Cayley table derived from the metric at import time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Literal

import numpy as np

from . import math3d
from .errors import DegenerateAxis, NonPositiveDilation, PointAtInfinity

DIM = 5
N_BLADES = 1 << DIM
METRIC = (1.0, 1.0, 1.0, 1.0, -1.0)
BASIS_NAMES = ("e1", "e2", "e3", "ep", "em")

# blade bitmask <-> canonical index
BLADE_MASKS: tuple[int, ...] = tuple(
    sum(1 << i for i in combo)
    for grade in range(DIM + 1)
    for combo in combinations(range(DIM), grade)
)
MASK_TO_INDEX = {m: i for i, m in enumerate(BLADE_MASKS)}
GRADES = np.array([bin(m).count("1") for m in BLADE_MASKS])


def blade_name(index: int) -> str:
    mask = BLADE_MASKS[index]
    if mask == 0:
        return "1"
    return "^".join(BASIS_NAMES[i] for i in range(DIM) if mask >> i & 1)


def _reorder_sign(a: int, b: int) -> int:
    # swaps needed to bring e_a... e_b... into canonical ascending order
    a >>= 1
    swaps = 0
    while a:
        swaps += bin(a & b).count("1")
        a >>= 1
    return -1 if swaps & 1 else 1


def blade_product(a: int, b: int) -> tuple[float, int]:
    """Product of two basis blades given as bitmasks: ``(sign, mask)``."""
    sign = float(_reorder_sign(a, b))
    common = a & b
    for i in range(DIM):
        if common >> i & 1:
            sign *= METRIC[i]
    return sign, a ^ b


def _cayley():
    sign = np.zeros((N_BLADES, N_BLADES))
    index = np.zeros((N_BLADES, N_BLADES), dtype=np.int64)
    for i, a in enumerate(BLADE_MASKS):
        for j, b in enumerate(BLADE_MASKS):
            s, m = blade_product(a, b)
            sign[i, j] = s
            index[i, j] = MASK_TO_INDEX[m]
    return sign, index


CAYLEY_SIGN, CAYLEY_INDEX = _cayley()


def _product_map(keep: np.ndarray) -> np.ndarray:
    # (32*32, 32) matrix folding the outer product of coefficients into the result
    out = np.zeros((N_BLADES * N_BLADES, N_BLADES))
    rows = np.arange(N_BLADES * N_BLADES)
    cols = CAYLEY_INDEX.ravel()
    out[rows, cols] = (CAYLEY_SIGN * keep).ravel()
    return out


_masks = np.array(BLADE_MASKS)
_GP_MAP = _product_map(np.ones((N_BLADES, N_BLADES)))
_WEDGE_MAP = _product_map((_masks[:, None] & _masks[None, :]) == 0)
# left contraction: a is a subset of b, result grade = grade(b) - grade(a)
_LC_MAP = _product_map((_masks[:, None] & ~_masks[None, :]) == 0)
_REVERSE_SIGN = np.array([(-1.0) ** (g * (g - 1) // 2) for g in GRADES])


def _bilinear(a: np.ndarray, b: np.ndarray, table: np.ndarray) -> np.ndarray:
    outer = a[..., :, None] * b[..., None, :]
    return outer.reshape(*outer.shape[:-2], N_BLADES * N_BLADES) @ table


class Multivector:
    """Element of R(4,1). Operators follow the usual GA library spelling:
    ``*`` geometric product, ``^`` wedge, ``|`` left contraction, ``~`` reverse.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        if coeffs is None:
            coeffs = np.zeros(N_BLADES)
        c = np.asarray(coeffs, dtype=np.float64)
        if c.shape != (N_BLADES,):
            raise ValueError(f"expected {N_BLADES} coefficients, got shape {c.shape}")
        self.coeffs = c

    @classmethod
    def scalar(cls, value: float) -> "Multivector":
        c = np.zeros(N_BLADES)
        c[0] = value
        return cls(c)

    @classmethod
    def blade(cls, mask: int, value: float = 1.0) -> "Multivector":
        c = np.zeros(N_BLADES)
        c[MASK_TO_INDEX[mask]] = value
        return cls(c)

    @classmethod
    def vector(cls, values) -> "Multivector":
        c = np.zeros(N_BLADES)
        c[1:6] = values
        return cls(c)

    def __getitem__(self, name: str) -> float:
        return float(self.coeffs[_NAME_TO_INDEX[name]])

    def grade(self, k: int) -> "Multivector":
        return Multivector(np.where(GRADES == k, self.coeffs, 0.0))

    def even(self) -> "Multivector":
        return Multivector(np.where(GRADES % 2 == 0, self.coeffs, 0.0))

    def scalar_part(self) -> float:
        return float(self.coeffs[0])

    def reverse(self) -> "Multivector":
        return Multivector(self.coeffs * _REVERSE_SIGN)

    __invert__ = reverse

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        return Multivector(self.coeffs * other)

    def __rmul__(self, other):
        return Multivector(self.coeffs * other)

    def __truediv__(self, other: float):
        return Multivector(self.coeffs / other)

    def __xor__(self, other):
        return wedge(self, other)

    def __or__(self, other):
        return left_contraction(self, other)

    def __add__(self, other):
        if isinstance(other, Multivector):
            return Multivector(self.coeffs + other.coeffs)
        return self + Multivector.scalar(other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Multivector):
            return Multivector(self.coeffs - other.coeffs)
        return self - Multivector.scalar(other)

    def __rsub__(self, other):
        return Multivector.scalar(other) - self

    def __neg__(self):
        return Multivector(-self.coeffs)

    def allclose(self, other, atol: float = 1e-9) -> bool:
        if not isinstance(other, Multivector):
            other = Multivector.scalar(other)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        terms = [
            f"{c:+.6g}*{blade_name(i)}" if i else f"{c:+.6g}"
            for i, c in enumerate(self.coeffs)
            if abs(c) > 1e-12
        ]
        return f"Multivector({' '.join(terms) or '0'})"


_NAME_TO_INDEX = {blade_name(i): i for i in range(N_BLADES)}


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    return Multivector(_bilinear(a.coeffs, b.coeffs, _GP_MAP))


def wedge(a: Multivector, b: Multivector) -> Multivector:
    return Multivector(_bilinear(a.coeffs, b.coeffs, _WEDGE_MAP))


def left_contraction(a: Multivector, b: Multivector) -> Multivector:
    return Multivector(_bilinear(a.coeffs, b.coeffs, _LC_MAP))


def reverse(a: Multivector) -> Multivector:
    return a.reverse()


def scalar_product(a: Multivector, b: Multivector) -> float:
    return geometric_product(a, b).scalar_part()


e1 = Multivector.blade(0b00001)
e2 = Multivector.blade(0b00010)
e3 = Multivector.blade(0b00100)
ep = Multivector.blade(0b01000)
em = Multivector.blade(0b10000)
eo = (em - ep) * 0.5
einf = em + ep
E0 = eo ^ einf  # Minkowski plane bivector

_EO_INDEX = (MASK_TO_INDEX[0b01000], MASK_TO_INDEX[0b10000])


# -- versors ------------------------------------------------------------------------

VersorKind = Literal["rotor", "translator", "dilator", "motor", "identity"]


@dataclass(frozen=True)
class Versor:
    mv: Multivector
    kind: VersorKind = "motor"

    def __mul__(self, other: "Versor") -> "Versor":
        kind = self.kind if self.kind == other.kind else "motor"
        return Versor(geometric_product(self.mv, other.mv), kind)

    def norm2(self) -> Multivector:
        return geometric_product(self.mv, self.mv.reverse())

    def reverse(self) -> "Versor":
        return Versor(self.mv.reverse(), self.kind)


def identity_versor() -> Versor:
    return Versor(Multivector.scalar(1.0), "identity")


def translator(t) -> Versor:
    """``T = 1 - t*einf/2``; translates by ``+t``."""
    t = Multivector.vector([*math3d.vec3(t), 0.0, 0.0])
    return Versor(1.0 - geometric_product(t, einf) * 0.5, "translator")


def rotor(axis, angle: float) -> Versor:
    """``R = cos(a/2) - sin(a/2) B``, B the unit bivector dual to ``axis``.

    Rotates by ``angle`` radians, right handed about ``axis``.
    """
    b = np.asarray(axis, dtype=np.float64).reshape(3)
    n = float(np.linalg.norm(b))
    if n < math3d.AXIS_EPS:
        raise DegenerateAxis(f"rotation axis {b!r} is degenerate")
    bx, by, bz = b / n
    biv = e2 * e3 * bx + e3 * e1 * by + e1 * e2 * bz
    return Versor(math.cos(0.5 * angle) - biv * math.sin(0.5 * angle), "rotor")


def dilator(d: float) -> Versor:
    """Uniform scaling by ``d`` about the origin."""
    if not d > 0:
        raise NonPositiveDilation(f"dilation factor must be positive, got {d}")
    h = 0.5 * math.log(d)
    return Versor(math.cosh(h) + E0 * math.sinh(h), "dilator")


def motor(t, axis, angle: float, d: float = 1.0) -> Versor:
    """``T * R * D``: dilate, then rotate, then translate."""
    return Versor(
        geometric_product(geometric_product(translator(t).mv, rotor(axis, angle).mv), dilator(d).mv),
        "motor",
    )


# -- points -------------------------------------------------------------------------


def embed(p) -> Multivector:
    """Conformal point ``p + |p|^2/2 einf + eo``."""
    p = math3d.vec3(p)
    c = np.zeros(N_BLADES)
    c[1:4] = p
    half = 0.5 * float(p @ p)
    # einf = ep + em, eo = (em - ep)/2
    c[4] = half - 0.5
    c[5] = half + 0.5
    return Multivector(c)


def eo_coefficient(P: Multivector) -> float:
    # coefficient of eo in the null basis is -P.einf = em - ep
    return float(P.coeffs[5] - P.coeffs[4])


def normalize_point(P: Multivector) -> Multivector:
    a = eo_coefficient(P)
    if abs(a) < 1e-12:
        raise PointAtInfinity("eo coefficient vanishes")
    return Multivector(P.coeffs / a)


def extract(P: Multivector) -> np.ndarray:
    a = eo_coefficient(P)
    if abs(a) < 1e-12:
        raise PointAtInfinity("eo coefficient vanishes")
    return P.coeffs[1:4] / a


def sandwich(v: Versor, X: Multivector) -> Multivector:
    return geometric_product(geometric_product(v.mv, X), v.mv.reverse())


def apply(v: Versor, P: Multivector) -> Multivector:
    """Transform a conformal point by ``V P ~V`` and renormalize to ``eo`` weight 1."""
    return normalize_point(sandwich(v, P))


def apply_points(v: Versor, points: np.ndarray) -> np.ndarray:
    """Batched ``extract(apply(v, embed(p)))`` for an ``(n, 3)`` array."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    c = np.zeros((len(pts), N_BLADES))
    c[:, 1:4] = pts
    half = 0.5 * np.einsum("ij,ij->i", pts, pts)
    c[:, 4] = half - 0.5
    c[:, 5] = half + 0.5
    vr = np.broadcast_to(v.mv.coeffs, c.shape)
    out = _bilinear(_bilinear(vr, c, _GP_MAP), np.broadcast_to(v.mv.reverse().coeffs, c.shape), _GP_MAP)
    w = out[:, 5] - out[:, 4]
    if np.any(np.abs(w) < 1e-12):
        raise PointAtInfinity("eo coefficient vanishes")
    return out[:, 1:4] / w[:, None]


def versor_to_matrix(v: Versor) -> np.ndarray:
    """4x4 matrix of a similarity versor, from the images of the origin and unit axes."""
    o = extract(apply(v, embed((0.0, 0.0, 0.0))))
    m = np.eye(4)
    for i in range(3):
        p = np.zeros(3)
        p[i] = 1.0
        m[:3, i] = extract(apply(v, embed(p))) - o
    m[:3, 3] = o
    return m
