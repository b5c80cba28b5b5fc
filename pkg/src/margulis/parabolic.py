"""Canonical frames of parabolic elements and the one-parameter group Phi(t).

Frame coordinates ``(x, y, z)`` refer to the basis ``(c, b, a)`` of a
canonical frame; in them the Lorentz form is ``y^2 - 2 x z``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .isometry import AffIso, IsoClass, classify
from .lorentz_core import (
    J_PARABOLIC,
    J_STANDARD,
    GeometryError,
    NumericalError,
    as_vec3,
    bform,
)

TAU_FRAME = 1e-8
DEFAULT_BASEPOINT = np.array([0.0, 0.0, 1.0])

# nilpotent generating the standard unipotent [[1, t, t^2/2], [0, 1, t], [0, 0, 1]]
N_STANDARD = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])


@dataclass(frozen=True)
class ParabolicFrame:
    """Null vectors ``c``, ``a`` and unit spacelike ``b`` with ``N a = b``, ``N b = c``."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def change_of_basis(self) -> np.ndarray:
        """Columns ``(c, b, a)``: maps frame coordinates to ambient ones."""
        return np.column_stack([self.c, self.b, self.a])

    @property
    def orientation(self) -> int:
        return 1 if np.linalg.det(self.change_of_basis) > 0 else -1

    def identities(self) -> dict:
        """The six bilinear relations, as residuals from their target values."""
        B = lambda u, v: bform(u, v)
        return {
            "B(a,a)": B(self.a, self.a),
            "B(b,b)-1": B(self.b, self.b) - 1.0,
            "B(c,c)": B(self.c, self.c),
            "B(a,b)": B(self.a, self.b),
            "B(b,c)": B(self.b, self.c),
            "B(a,c)+1": B(self.a, self.c) + 1.0,
        }


def _check_nilpotent(N: np.ndarray) -> float:
    scale = float(np.linalg.norm(N))
    if scale == 0.0 or not np.all(np.isfinite(N)):
        raise GeometryError("nilpotent must be a finite nonzero matrix")
    skew = J_STANDARD @ N + N.T @ J_STANDARD
    if np.max(np.abs(skew)) > TAU_FRAME * scale:
        raise GeometryError("matrix is not skew-adjoint for the Lorentz form")
    sv = np.linalg.svd(N, compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    if rank != 2:
        raise GeometryError(f"nilpotent must have rank 2, got rank {rank}")
    if np.max(np.abs(N @ N @ N)) > TAU_FRAME * scale**3:
        raise GeometryError("matrix is not nilpotent")
    return scale


def canonical_frame(N, basepoint=DEFAULT_BASEPOINT) -> ParabolicFrame:
    """Canonical frame of a rank-2 skew-adjoint nilpotent ``N``.

    ``c`` spans ``Ker N`` and is future pointing.  The frame is determined
    only up to the centraliser move ``b -> b + z c``; ``z`` is fixed by
    requiring ``b`` to be Lorentz-orthogonal to the timelike ``basepoint``,
    which makes the construction equivariant in the pair ``(N, basepoint)``.
    """
    N = np.array(N, dtype=float)
    if N.shape != (3, 3):
        raise GeometryError("nilpotent must be 3x3")
    _check_nilpotent(N)
    p = as_vec3(basepoint, "basepoint")
    if bform(p, p) >= 0 or p[2] <= 0:
        raise GeometryError("basepoint must be future timelike")

    N2 = N @ N
    j = int(np.argmax(np.linalg.norm(N2, axis=0)))
    b0 = N[:, j]
    q = bform(b0, b0)
    if q <= 0:
        raise NumericalError("image of the nilpotent is not spacelike")
    b0 = b0 / np.sqrt(q)
    c0 = N @ b0
    if c0[2] < 0:
        b0, c0 = -b0, -c0
    b = b0 - (bform(b0, p) / bform(c0, p)) * c0
    c = N @ b

    a_part, *_ = np.linalg.lstsq(N, b, rcond=None)
    a = a_part - (bform(a_part, a_part) / (2.0 * bform(a_part, c))) * c
    return ParabolicFrame(a=a, b=b, c=c)


def phi_matrix(mu: float, t: float) -> np.ndarray:
    """4x4 matrix of ``Phi(t)`` in frame coordinates, acting on ``[x, y, z, 1]``."""
    return np.array(
        [
            [1.0, t, t * t / 2.0, mu * t**3 / 6.0],
            [0.0, 1.0, t, mu * t * t / 2.0],
            [0.0, 0.0, 1.0, mu * t],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def phi_apply(mu: float, t: float, p) -> np.ndarray:
    """``Phi(t)`` on frame-coordinate points (shape (3,) or (n, 3))."""
    M = phi_matrix(mu, t)
    p = np.asarray(p, float)
    return p @ M[:3, :3].T + M[:3, 3]


def orbit_curve(mu: float, t, p=None) -> np.ndarray:
    """Samples ``Phi(t) p``; for the frame origin ``(mu t^3/6, mu t^2/2, mu t)``."""
    t = np.asarray(t, float)
    origin = np.stack([mu * t**3 / 6.0, mu * t**2 / 2.0, mu * t], axis=-1)
    if p is None:
        return origin
    x, y, z = as_vec3(p)
    # linear part applied to p, plus the orbit of the origin
    lin = np.stack([x + t * y + t * t * z / 2.0, y + t * z, np.full_like(t, z)], axis=-1)
    return lin + origin


def invariant_f2(mu: float, p) -> np.ndarray:
    p = np.asarray(p, float)
    return p[..., 2] ** 2 - 2.0 * mu * p[..., 1]


def invariant_f3(mu: float, p) -> np.ndarray:
    p = np.asarray(p, float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return z**3 - 3.0 * mu * y * z + 3.0 * mu * mu * x


def straighten(mu: float, p) -> np.ndarray:
    """``(F3, F2, z)``; conjugates ``Phi(t)`` to the shift ``z -> z + mu t``."""
    p = np.asarray(p, float)
    return np.stack([invariant_f3(mu, p), invariant_f2(mu, p), p[..., 2]], axis=-1)


def unstraighten(mu: float, q) -> np.ndarray:
    if mu == 0:
        raise GeometryError("straightening is not invertible for mu = 0")
    q = np.asarray(q, float)
    u, v, z = q[..., 0], q[..., 1], q[..., 2]
    y = (z * z - v) / (2.0 * mu)
    x = (u - z**3 + 3.0 * mu * y * z) / (3.0 * mu * mu)
    return np.stack([x, y, z], axis=-1)


def displacement_residual(mu: float, t: float, p) -> float:
    """``B(S, S) - t^2 (F2(p) - mu^2 t^2 / 12)`` with ``S = Phi(t) p - p``."""
    p = as_vec3(p)
    s = phi_apply(mu, t, p) - p
    lhs = bform(s, s, J_PARABOLIC)
    rhs = t * t * (float(invariant_f2(mu, p)) - mu * mu * t * t / 12.0)
    return lhs - rhs


def alpha_tilde_frame(mu: float, t: float, x: float) -> float:
    """Value of the fixed-vector invariant of ``Phi(t)`` at ``(x, 0, 0)``: ``-mu t x``."""
    return -mu * t * x


@dataclass(frozen=True)
class ParabolicNormalForm:
    """Conjugacy of ``g`` to ``Phi(t)`` in the affine frame ``(origin; c, b, a)``.

    ``|mu| = 1`` and ``t > 0``.  ``orientation`` is the sign of
    ``det[c|b|a]``; the crooked sign of ``g`` is ``mu * orientation``.
    """

    frame: ParabolicFrame
    origin: np.ndarray
    mu: float
    t: float

    @property
    def orientation(self) -> int:
        return self.frame.orientation

    @property
    def crooked_sign(self) -> int:
        return int(np.sign(self.mu)) * self.orientation

    def to_frame(self, p) -> np.ndarray:
        M = self.frame.change_of_basis
        return np.linalg.solve(M, (np.asarray(p, float) - self.origin).T).T

    def from_frame(self, q) -> np.ndarray:
        M = self.frame.change_of_basis
        return np.asarray(q, float) @ M.T + self.origin


def unipotent_log(A: np.ndarray) -> np.ndarray:
    U = np.asarray(A, float) - np.eye(3)
    return U - 0.5 * U @ U


def phi_ambient(frame: ParabolicFrame, mu: float, t: float, origin=None) -> AffIso:
    """``Phi(t)`` of a frame, written in ambient coordinates."""
    M = frame.change_of_basis
    o = np.zeros(3) if origin is None else as_vec3(origin)
    P = phi_matrix(mu, t)
    A = M @ P[:3, :3] @ np.linalg.inv(M)
    b = o - A @ o + M @ P[:3, 3]
    return AffIso(A, b)


def parabolic_normal_form(g: AffIso, basepoint=DEFAULT_BASEPOINT) -> ParabolicNormalForm:
    if classify(g).kind is not IsoClass.PARABOLIC:
        raise GeometryError("element is not parabolic")
    X = unipotent_log(g.A)
    M1 = canonical_frame(X, basepoint).change_of_basis
    mu1 = float(np.linalg.solve(M1, g.b)[2])
    if abs(mu1) <= TAU_FRAME * max(1.0, float(np.linalg.norm(g.b))):
        raise GeometryError("parabolic element has a fixed point (mu = 0)")
    t = float(np.sqrt(abs(mu1)))
    mu = float(np.sign(mu1))
    frame = canonical_frame(X / t, basepoint)
    w = np.linalg.solve(frame.change_of_basis, g.b)
    qz = (mu * t * t / 2.0 - w[1]) / t
    qy = (mu * t**3 / 6.0 - w[0] - t * t * qz / 2.0) / t
    origin = frame.change_of_basis @ np.array([0.0, qy, qz])
    return ParabolicNormalForm(frame=frame, origin=origin, mu=mu, t=t)


def cyclic_properness(g: AffIso) -> bool:
    """A parabolic acts properly on its own iff it has no fixed point."""
    try:
        parabolic_normal_form(g)
    except GeometryError:
        return False
    return True


# example nilpotent whose canonical frame serves as the reference embedding
# of frame coordinates into ambient ones (positively oriented)
N_EXAMPLE = np.array([[0.0, 1.0, 1.0], [-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])


def reference_frame() -> ParabolicFrame:
    return canonical_frame(N_EXAMPLE)
