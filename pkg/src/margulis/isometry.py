"""Affine Lorentz isometries ``x -> A x + b`` with ``A`` in SO(2,1)°."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .lorentz_core import (
    J_STANDARD,
    GeometryError,
    NumericalError,
    as_vec3,
    bform,
    lorentz_cross,
)

TAU_CLASS = 1e-8
TAU_ISO = 1e-9
REPROJECT_EVERY = 8


def reproject(A: np.ndarray, iterations: int = 3) -> np.ndarray:
    """Pull a near-isometry back onto SO(2,1) by a polar-type Newton iteration.

    With ``E = J A^T J A - I`` the update ``A (I - E/2)`` squares the defect.
    """
    A = np.array(A, dtype=float)
    eye = np.eye(3)
    for _ in range(iterations):
        E = J_STANDARD @ A.T @ J_STANDARD @ A - eye
        if np.max(np.abs(E)) < 1e-16:
            break
        A = A @ (eye - 0.5 * E)
    return A


def isometry_defect(A: np.ndarray) -> float:
    """Scale-aware residual of ``A^T J A = J``."""
    A = np.asarray(A, float)
    scale = max(1.0, float(np.linalg.norm(A)) ** 2)
    return float(np.max(np.abs(A.T @ J_STANDARD @ A - J_STANDARD))) / scale


@dataclass(frozen=True)
class AffIso:
    """Affine isometry ``p -> A p + b`` of Minkowski space."""

    A: np.ndarray
    b: np.ndarray
    depth: int = field(default=0, compare=False, repr=False)

    def __post_init__(self) -> None:
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float)
        if A.shape != (3, 3) or not np.all(np.isfinite(A)):
            raise GeometryError("linear part must be a finite 3x3 matrix")
        b = as_vec3(b, "translation").copy()
        if isometry_defect(A) > TAU_ISO:
            raise GeometryError("linear part does not preserve the Lorentz form")
        det = np.linalg.det(A)
        if abs(det - 1.0) > TAU_ISO * max(1.0, float(np.linalg.norm(A)) ** 3):
            raise GeometryError("linear part must have determinant 1")
        if A[2, 2] <= 0:
            raise GeometryError("linear part must preserve time orientation")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def identity(cls) -> "AffIso":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def linear(cls, A) -> "AffIso":
        return cls(A, np.zeros(3))

    @classmethod
    def translation(cls, b) -> "AffIso":
        return cls(np.eye(3), b)

    def __call__(self, p) -> np.ndarray:
        return self.apply(p)

    def apply(self, p) -> np.ndarray:
        """Image of a point (shape (3,)) or of a stack of points (shape (n, 3))."""
        p = np.asarray(p, float)
        return p @ self.A.T + self.b

    def compose(self, other: "AffIso") -> "AffIso":
        """``self o other``: ``A_g A_h``, ``A_g b_h + b_g``."""
        A = self.A @ other.A
        b = self.A @ other.b + self.b
        depth = self.depth + other.depth + 1
        if depth >= REPROJECT_EVERY:
            A, depth = reproject(A), 0
        return AffIso(A, b, depth)

    def __matmul__(self, other: "AffIso") -> "AffIso":
        return self.compose(other)

    def inverse(self) -> "AffIso":
        Ainv = J_STANDARD @ self.A.T @ J_STANDARD
        return AffIso(Ainv, -Ainv @ self.b, self.depth)

    def conjugate_by(self, h: "AffIso") -> "AffIso":
        """``h o self o h^{-1}``."""
        return h.compose(self).compose(h.inverse())

    def power(self, n: int) -> "AffIso":
        result = AffIso.identity()
        base = self if n >= 0 else self.inverse()
        for _ in range(abs(n)):
            result = result.compose(base)
        return result

    def as_projective(self) -> np.ndarray:
        """4x4 matrix ``[[A, b], [0, 1]]`` on ``[x, 1]``, unit Frobenius norm."""
        M = np.zeros((4, 4))
        M[:3, :3] = self.A
        M[:3, 3] = self.b
        M[3, 3] = 1.0
        return M / np.linalg.norm(M)


def from_sl2(m) -> np.ndarray:
    """Image of ``m`` in SL(2,R) under the adjoint action on traceless matrices.

    The basis ``[[1,0],[0,-1]], [[0,1],[1,0]], [[0,1],[-1,0]]`` makes
    ``tr(XY)/2`` equal to diag(1, 1, -1).  ``m`` and ``-m`` have the same image.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2) or not np.all(np.isfinite(m)):
        raise GeometryError("expected a finite 2x2 matrix")
    if abs(np.linalg.det(m) - 1.0) > 1e-10:
        raise GeometryError("SL(2,R) element must have determinant 1")
    basis = [
        np.array([[1.0, 0.0], [0.0, -1.0]]),
        np.array([[0.0, 1.0], [1.0, 0.0]]),
        np.array([[0.0, 1.0], [-1.0, 0.0]]),
    ]
    minv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    cols = []
    for e in basis:
        X = m @ e @ minv
        cols.append([X[0, 0], 0.5 * (X[0, 1] + X[1, 0]), 0.5 * (X[0, 1] - X[1, 0])])
    return np.array(cols).T


# classification ------------------------------------------------------------


class IsoClass(enum.Enum):
    HYPERBOLIC = "Hyperbolic"
    PARABOLIC = "Parabolic"
    ELLIPTIC = "Elliptic"


@dataclass(frozen=True)
class Classification:
    kind: IsoClass
    trace: float
    is_identity: bool = False
    # distance of the trace from 3 in units of the tolerance; small values
    # flag elements that sit near the parabolic locus
    confidence: float = float("inf")


def _linear(g) -> np.ndarray:
    return g.A if isinstance(g, AffIso) else np.asarray(g, float)


def _trace_tolerance(A: np.ndarray) -> float:
    # roundoff in a product of matrices grows with their norm
    return TAU_CLASS * max(1.0, float(np.linalg.norm(A)))


def classify(g) -> Classification:
    """Hyperbolic if ``tr A > 3``, parabolic if ``tr A = 3`` and ``A != I``."""
    A = _linear(g)
    tr = float(np.trace(A))
    tol = _trace_tolerance(A)
    conf = abs(tr - 3.0) / tol
    if np.max(np.abs(A - np.eye(3))) <= tol:
        return Classification(IsoClass.ELLIPTIC, tr, True, conf)
    if abs(tr - 3.0) <= tol:
        return Classification(IsoClass.PARABOLIC, tr, False, conf)
    if abs(tr) > 3.0:
        return Classification(IsoClass.HYPERBOLIC, tr, False, conf)
    return Classification(IsoClass.ELLIPTIC, tr, False, conf)


@dataclass(frozen=True)
class HyperbolicData:
    """Eigen-data of a hyperbolic linear part.

    ``x_plus`` (eigenvalue ``lambda1 > 1``) and ``x_minus`` are future null
    vectors scaled to ``x3 = 1``; ``x_zero`` is the unit spacelike fixed vector
    oriented like ``x_minus x x_plus``.
    """

    lambda1: float
    x_plus: np.ndarray
    x_minus: np.ndarray
    x_zero: np.ndarray

    @property
    def length_klein(self) -> float:
        """Translation length on the hyperbolic plane of curvature -1."""
        return float(np.log(self.lambda1))

    @property
    def length_doubled(self) -> float:
        """Twice the Klein length; kept for side-by-side reporting."""
        return 2.0 * float(np.log(self.lambda1))


def _null_vector(M: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(M)
    return vt[-1]


def _future_null(v: np.ndarray) -> np.ndarray:
    if abs(v[2]) < 1e-300:
        raise NumericalError("null eigenvector has vanishing time component")
    return v / v[2]


def largest_eigenvalue(A: np.ndarray) -> float:
    """``lambda1`` from ``tr A = 1 + lambda1 + 1/lambda1``."""
    t = float(np.trace(A)) - 1.0
    if t <= 2.0:
        raise GeometryError("linear part is not hyperbolic")
    return 0.5 * (t + np.sqrt((t - 2.0) * (t + 2.0)))


def hyperbolic_eigendata(g) -> HyperbolicData:
    A = _linear(g)
    if classify(A).kind is not IsoClass.HYPERBOLIC:
        raise GeometryError("element is not hyperbolic")
    lam = largest_eigenvalue(A)
    Ainv = J_STANDARD @ A.T @ J_STANDARD
    # scale rows so the SVD sees an O(1) matrix
    xp = _future_null(_null_vector((A - lam * np.eye(3)) / lam))
    xm = _future_null(_null_vector((Ainv - lam * np.eye(3)) / lam))
    w = _axial_vector(A)
    q = bform(w, w)
    if q <= 0:
        raise NumericalError("fixed vector is not spacelike")
    # orient like x_minus x x_plus; the axial vector is better conditioned
    # than that cross product when the null eigenvectors nearly coincide
    if bform(w, lorentz_cross(xm, xp)) < 0:
        w = -w
    return HyperbolicData(lam, xp, xm, w / np.sqrt(q))


def _axial_vector(A: np.ndarray) -> np.ndarray:
    """``v`` with ``(A - A^{-1}) y = c (v x y)``; spans the fixed line of ``A``."""
    S = J_STANDARD @ (A - J_STANDARD @ A.T @ J_STANDARD)
    return 0.5 * np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]])


@dataclass(frozen=True)
class Axis:
    """The invariant spacelike line ``point + s * x_zero``.

    ``g`` maps the line to itself and moves it by ``alpha * x_zero``.
    """

    point: np.ndarray
    x_zero: np.ndarray
    alpha: float
    condition: float


def eigenbasis_coordinates(data: HyperbolicData, v) -> np.ndarray:
    """Coordinates of ``v`` in the basis ``(x_plus, x_zero, x_minus)``."""
    B = np.column_stack([data.x_plus, data.x_zero, data.x_minus])
    return np.linalg.solve(B, as_vec3(v))


def axis(g: AffIso, max_condition: float = 1e10) -> Axis:
    """Invariant line of a hyperbolic ``g``: solve ``(A - I) q = -b`` on span(x+, x-)."""
    data = hyperbolic_eigendata(g)
    lam = data.lambda1
    cond = max(lam, 1.0 / (lam - 1.0))
    if 1.0 / (lam - 1.0) > max_condition:
        raise NumericalError(f"axis is ill-conditioned (lambda1 - 1 = {lam - 1.0:.3e})")
    bp, b0, bm = eigenbasis_coordinates(data, g.b)
    q = (-bp / (lam - 1.0)) * data.x_plus + (-bm / (1.0 / lam - 1.0)) * data.x_minus
    return Axis(q, data.x_zero, float(b0), float(cond))


def random_sl2(rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    """Random rotation-boost-rotation product in SL(2,R)."""

    def rot(th):
        return np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])

    th1, th2 = rng.uniform(0.0, 2.0 * np.pi, size=2)
    s = rng.uniform(-spread, spread)
    return rot(th1) @ np.diag([np.exp(s), np.exp(-s)]) @ rot(th2)


def random_lorentz(rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    """Random element of SO(2,1)° with boost rapidity at most ``2 * spread``."""
    return from_sl2(random_sl2(rng, spread))
