"""Minkowski 2+1 space, its Lorentz cross product, and the projective sphere.

Vectors of Minkowski space are plain ``numpy`` arrays of shape ``(3,)``.
Points of the projective sphere are unit vectors of R^4 with the homogeneous
coordinate stored *last*: an affine point ``p`` is ``[p, 1]`` and the ideal
sphere is the set of directions ``[v, 0]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

# standard Lorentz form diag(1, 1, -1)
J_STANDARD = np.diag([1.0, 1.0, -1.0])
# form in a parabolic frame with axes (c, b, a): y^2 - 2xz
J_PARABOLIC = np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])

TAU_NULL = 1e-10


class GeometryError(ValueError):
    """Raised when an input violates a geometric precondition."""


class NumericalError(ArithmeticError):
    """Raised when a computation is too ill-conditioned to be trusted."""


@dataclass(frozen=True)
class MetricSignature:
    """A symmetric bilinear form of signature (2, 1), given by its Gram matrix."""

    gram: np.ndarray

    def __post_init__(self) -> None:
        gram = np.array(self.gram, dtype=float)
        if gram.shape != (3, 3) or not np.allclose(gram, gram.T, atol=1e-14):
            raise GeometryError("Gram matrix must be a symmetric 3x3 matrix")
        eig = np.linalg.eigvalsh(gram)
        if not (np.sum(eig > 0) == 2 and np.sum(eig < 0) == 1):
            raise GeometryError("Gram matrix must have signature (2, 1)")
        gram.setflags(write=False)
        object.__setattr__(self, "gram", gram)


STANDARD = MetricSignature(J_STANDARD)
PARABOLIC = MetricSignature(J_PARABOLIC)

FormLike = Union[MetricSignature, np.ndarray, None]


def _gram(form: FormLike) -> np.ndarray:
    if form is None:
        return J_STANDARD
    if isinstance(form, MetricSignature):
        return form.gram
    return np.asarray(form, dtype=float)


def as_vec3(x, name: str = "vector") -> np.ndarray:
    """Validate and convert ``x`` to a finite float vector of shape (3,)."""
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise GeometryError(f"{name} must have shape (3,), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise GeometryError(f"{name} has non-finite entries")
    return v


def bform(u, v, form: FormLike = None) -> float:
    """Lorentz bilinear form ``u^T J v`` (broadcasts over leading axes)."""
    J = _gram(form)
    r = np.einsum("...i,ij,...j->...", np.asarray(u, float), J, np.asarray(v, float))
    return float(r) if np.ndim(r) == 0 else r


def lorentz_cross(u, v, form: FormLike = None) -> np.ndarray:
    """Vector ``w`` with ``bform(w, z) = det[u | v | z]`` for every ``z``.

    Since ``det[u|v|z] = (u x v) . z`` this is ``J^{-1} (u x v)``.
    """
    J = _gram(form)
    e = np.cross(np.asarray(u, float), np.asarray(v, float))
    return np.linalg.solve(J, e.T).T if e.ndim > 1 else np.linalg.solve(J, e)


class CausalClass(enum.Enum):
    TIMELIKE_FUTURE = "TimelikeFuture"
    TIMELIKE_PAST = "TimelikePast"
    NULL_FUTURE = "NullFuture"
    NULL_PAST = "NullPast"
    SPACELIKE = "Spacelike"
    ZERO = "Zero"


def causal_class(v, tau: float = TAU_NULL) -> CausalClass:
    """Classify ``v`` for the standard form; time orientation is the sign of x3.

    A vector is null when ``|B(v, v)| <= tau * |v|^2``.
    """
    v = as_vec3(v)
    n2 = float(v @ v)
    if n2 == 0.0:
        return CausalClass.ZERO
    q = float(bform(v, v))
    if abs(q) <= tau * n2:
        return CausalClass.NULL_FUTURE if v[2] > 0 else CausalClass.NULL_PAST
    if q > 0:
        return CausalClass.SPACELIKE
    return CausalClass.TIMELIKE_FUTURE if v[2] > 0 else CausalClass.TIMELIKE_PAST


# projective sphere ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DirPoint:
    """A point of the projective sphere S(R^4), stored as a unit 4-vector."""

    v: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.v, dtype=float)
        if v.shape != (4,) or not np.all(np.isfinite(v)):
            raise GeometryError("DirPoint needs a finite 4-vector")
        n = np.linalg.norm(v)
        if n == 0.0:
            raise GeometryError("DirPoint of the zero vector")
        v = v / n
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    def __eq__(self, other) -> bool:
        return isinstance(other, DirPoint) and bool(np.array_equal(self.v, other.v))

    def __hash__(self) -> int:
        return hash(self.v.tobytes())

    def antipode(self) -> "DirPoint":
        return DirPoint(-self.v)

    @property
    def is_ideal(self) -> bool:
        return abs(self.v[3]) <= 1e-15

    def affine(self) -> np.ndarray:
        """Affine coordinates, defined on the positive half-space."""
        if self.v[3] <= 0:
            raise GeometryError("point is not in the affine chart")
        return self.v[:3] / self.v[3]


def embed_affine(p) -> DirPoint:
    return DirPoint(np.append(as_vec3(p), 1.0))


def direction(v) -> DirPoint:
    """The ideal point of the ray spanned by ``v``."""
    return DirPoint(np.append(as_vec3(v), 0.0))


PointSet = Union[DirPoint, np.ndarray, Sequence[DirPoint]]


def _as_points(s: PointSet) -> np.ndarray:
    if isinstance(s, DirPoint):
        return s.v[None, :]
    if isinstance(s, np.ndarray):
        arr = np.atleast_2d(np.asarray(s, float))
    else:
        arr = np.array([p.v if isinstance(p, DirPoint) else p for p in s], float)
    if arr.size == 0:
        raise GeometryError("empty point set")
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise GeometryError("point sets must be (n, 4) arrays")
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


def bdd_dist(p: PointSet, q: PointSet) -> float:
    """Spherical distance ``arccos(p . q)``, infimum over point sets."""
    P, Q = _as_points(p), _as_points(q)
    dots = np.clip(P @ Q.T, -1.0, 1.0)
    return float(np.arccos(dots.max()))


def hausdorff_dist(p: PointSet, q: PointSet) -> float:
    P, Q = _as_points(p), _as_points(q)
    ang = np.arccos(np.clip(P @ Q.T, -1.0, 1.0))
    return float(max(ang.min(axis=1).max(), ang.min(axis=0).max()))


# accordant segments --------------------------------------------------------


def boundary_tangent(v) -> np.ndarray:
    """Tangent to the ideal circle at the null vector ``v`` in its orientation.

    The ideal boundary of the future Klein disk is oriented counterclockwise
    in the chart ``x3 = 1``; the tangent at ``(x1, x2, 1)`` is ``(-x2, x1, 0)``.
    It is Lorentz-orthogonal to ``v``.
    """
    v = as_vec3(v)
    return np.array([-v[1], v[0], 0.0])


@dataclass(frozen=True)
class GreatSegment:
    """Closed half great circle ``cos(s) start + sin(s) mid`` for ``s`` in [0, pi]."""

    start: DirPoint
    mid: DirPoint

    @property
    def end(self) -> DirPoint:
        return self.start.antipode()

    def sample(self, n: int = 257) -> np.ndarray:
        s = np.linspace(0.0, np.pi, n)
        return np.cos(s)[:, None] * self.start.v + np.sin(s)[:, None] * self.mid.v

    def transformed(self, M4: np.ndarray) -> "GreatSegment":
        """Image under a linear map of R^4 (the mid point is re-orthogonalised)."""
        a = M4 @ self.start.v
        m = M4 @ self.mid.v
        a = a / np.linalg.norm(a)
        m = m - (m @ a) * a
        return GreatSegment(DirPoint(a), DirPoint(m))


def accordant_segment(x, basis: np.ndarray | None = None) -> GreatSegment:
    """Half great circle tangent to the ideal circle at ``x``, avoiding the disk.

    ``x`` is a future null vector (or its ideal :class:`DirPoint`).  The segment
    runs from ``x`` to its antipode through the oriented tangent direction,
    inside the plane Lorentz-orthogonal to ``x``.  When ``basis`` is given,
    ``x`` is expressed in frame coordinates ``x_std = basis @ x`` and so is
    the returned segment.
    """
    if isinstance(x, DirPoint):
        if not x.is_ideal:
            raise GeometryError("accordant segments start at ideal points")
        x = x.v[:3]
    x = as_vec3(x, "x")
    B = np.eye(3) if basis is None else np.asarray(basis, float)
    xs = B @ x
    if causal_class(xs, 1e-8) is not CausalClass.NULL_FUTURE:
        raise GeometryError("x must be a future null vector")
    w = boundary_tangent(xs)
    xi = np.linalg.solve(B, xs)
    wi = np.linalg.solve(B, w)
    xi = xi / np.linalg.norm(xi)
    wi = wi - (wi @ xi) * xi
    return GreatSegment(direction(xi), direction(wi))


def line_closure(point, vec, n: int = 257) -> np.ndarray:
    """Uniform samples of the closure of the affine line ``point + s vec`` in S(R^4).

    The closure is the half great circle from ``[vec, 0]`` through
    ``[point, 1]`` to ``[-vec, 0]``.
    """
    p, d = as_vec3(point), as_vec3(vec)
    D = np.append(d, 0.0)
    D /= np.linalg.norm(D)
    P = np.append(p, 1.0)
    Q = P - (P @ D) * D
    Q /= np.linalg.norm(Q)
    th = np.linspace(0.0, np.pi, n)
    return np.cos(th)[:, None] * D + np.sin(th)[:, None] * Q
