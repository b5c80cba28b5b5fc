"""Ruled surfaces swept by a parabolic one-parameter group.

Everything here lives in frame coordinates of a parabolic element, where
``Phi(t)`` is the unipotent affine map of :func:`margulis.parabolic.phi_matrix`.
A family of timelike lines ``l_r(s) = (s r, f(r), s sqrt(1 - r^2))`` is swept
to surfaces ``S_r = {Phi(t) l_r(s)}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .lorentz_core import GeometryError, NumericalError
from .parabolic import invariant_f2, invariant_f3, phi_apply

DEFAULT_KAPPA = (0.25, 0.75)


@dataclass(frozen=True)
class RuledSpec:
    """Parameters of a foliation by ruled surfaces.

    ``height`` is the profile ``f``; when omitted it is the midline
    ``((k1 + k2)/2) mu r / sqrt(1 - r^2)``.  A tabulated profile is given as
    ``table=(r_values, f_values)`` and interpolated monotonically.  With
    ``strict`` (the default) the profile must stay between ``kappa1`` and
    ``kappa2`` times the embeddedness bound on ``[r0, 0.99]``; pass
    ``strict=False`` to build a deliberately violating profile for audits.
    """

    mu: float = 1.0
    kappa: tuple = DEFAULT_KAPPA
    s0: float = 0.1
    r0: float = 0.5
    table: tuple | None = None
    strict: bool = True
    _f: Callable = field(default=None, repr=False, compare=False)
    _df: Callable = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        k1, k2 = (float(k) for k in self.kappa)
        if not self.mu > 0:
            raise GeometryError("mu must be positive")
        if not 0 < k1 <= k2 < 1:
            raise GeometryError("need 0 < kappa1 <= kappa2 < 1")
        if not self.s0 > 0:
            raise GeometryError("s0 must be positive")
        if not 0 < self.r0 < 1:
            raise GeometryError("r0 must lie in (0, 1)")
        object.__setattr__(self, "kappa", (k1, k2))
        if self.table is None:
            k = 0.5 * (k1 + k2)
            mu = float(self.mu)
            f = lambda r: k * mu * np.asarray(r) / np.sqrt(1.0 - np.asarray(r) ** 2)
            df = lambda r: k * mu / (1.0 - np.asarray(r) ** 2) ** 1.5
        else:
            rs, fs = (np.asarray(v, float) for v in self.table)
            if rs.ndim != 1 or rs.shape != fs.shape or len(rs) < 3:
                raise GeometryError("table needs matching 1-d arrays of length >= 3")
            if np.any(np.diff(rs) <= 0) or np.any(np.diff(fs) <= 0):
                raise GeometryError("tabulated profile must be strictly increasing")
            interp = PchipInterpolator(rs, fs, extrapolate=False)
            deriv = interp.derivative()
            f = lambda r: interp(np.asarray(r, float))
            df = lambda r: deriv(np.asarray(r, float))
        object.__setattr__(self, "_f", f)
        object.__setattr__(self, "_df", df)
        if float(self.f(self.r0)) < self.s0:
            raise GeometryError("profile at r0 must be at least s0")
        if self.strict:
            rs = np.linspace(self.r0, min(0.99, float(np.max(self.table[0])) if self.table else 0.99), 200)
            fr, bd = self.f(rs), self.bound(rs)
            ok = (fr >= k1 * bd * (1 - 1e-12)) & (fr <= k2 * bd * (1 + 1e-12))
            if not np.all(ok):
                r_bad = float(rs[np.argmin(ok)])
                raise GeometryError(f"profile leaves the band [kappa1, kappa2] x bound at r = {r_bad:.6g}")

    def f(self, r):
        return self._f(r)

    def df(self, r):
        return self._df(r)

    def bound(self, r):
        """The embeddedness bound ``mu r / sqrt(1 - r^2)``."""
        r = np.asarray(r, float)
        return self.mu * r / np.sqrt(1.0 - r * r)


def line_point(spec: RuledSpec, r, s) -> np.ndarray:
    r, s = np.asarray(r, float), np.asarray(s, float)
    c = np.sqrt(1.0 - r * r)
    return np.stack(np.broadcast_arrays(s * r, spec.f(r), s * c), axis=-1)


def line_direction(r: float) -> np.ndarray:
    return np.array([r, 0.0, np.sqrt(1.0 - r * r)])


def sweep(spec: RuledSpec, t, p) -> np.ndarray:
    return phi_apply(spec.mu, t, p)


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (n, 3)
    faces: np.ndarray  # (m, 3) zero-based
    params: np.ndarray | None = None  # (n, 3) rows (r, t, s); not exported

    def to_obj(self) -> str:
        lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in self.vertices]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in self.faces]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["x,y,z"] + [f"{x:.17g},{y:.17g},{z:.17g}" for x, y, z in self.vertices]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_obj(cls, text: str) -> "Mesh":
        verts, faces = [], []
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(v) for v in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(v.split("/")[0]) - 1 for v in parts[1:4]])
        return cls(np.array(verts, float).reshape(-1, 3), np.array(faces, int).reshape(-1, 3))


def _grid_faces(nu: int, nv: int) -> np.ndarray:
    idx = np.arange(nu * nv).reshape(nu, nv)
    a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    return np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])


def surface_sample(spec: RuledSpec, r: float, t_range=(-2.0, 2.0), s_range=(-2.0, 2.0),
                   nt: int = 41, ns: int = 41) -> Mesh:
    """Triangulated patch of ``S_r`` over a ``(t, s)`` grid."""
    _check_r(r)
    ts = np.linspace(*t_range, nt)
    ss = np.linspace(*s_range, ns)
    base = line_point(spec, r, ss)
    verts = np.concatenate([sweep(spec, t, base) for t in ts])
    T, S = np.meshgrid(ts, ss, indexing="ij")
    params = np.stack([np.full(T.size, float(r)), T.ravel(), S.ravel()], axis=1)
    return Mesh(verts, _grid_faces(nt, ns), params)


def leaf_D(spec: RuledSpec, t: float, r_range=None, s_range=(-2.0, 2.0),
           nr: int = 41, ns: int = 41) -> Mesh:
    """Patch of the transverse leaf ``D_t = Phi(t)({l_r(s)})`` over ``(r, s)``."""
    r_range = (spec.r0, 0.95) if r_range is None else r_range
    rs = np.linspace(*r_range, nr)
    ss = np.linspace(*s_range, ns)
    R, S = np.meshgrid(rs, ss, indexing="ij")
    pts = line_point(spec, R.ravel(), S.ravel())
    params = np.stack([R.ravel(), np.full(R.size, float(t)), S.ravel()], axis=1)
    return Mesh(sweep(spec, t, pts), _grid_faces(nr, ns), params)


def _check_r(r) -> None:
    r = np.asarray(r, float)
    if np.any(r <= 0) or np.any(r >= 1):
        raise GeometryError("r must lie in (0, 1)")


def triple_product(spec: RuledSpec, r, s) -> np.ndarray:
    """``det[u, d l/d r, phi]`` in closed form.

    ``sqrt(1-r^2) (mu r / sqrt(1-r^2) - f(r)) f'(r) + s^2``.
    """
    r, s = np.asarray(r, float), np.asarray(s, float)
    c = np.sqrt(1.0 - r * r)
    return c * (spec.mu * r / c - spec.f(r)) * spec.df(r) + s * s


def triple_product_direct(spec: RuledSpec, r: float, s: float) -> float:
    """Same determinant assembled from its three columns (for cross-checking)."""
    c = np.sqrt(1.0 - r * r)
    u = line_direction(r)
    y = np.array([s, float(spec.df(r)), -s * r / c])
    p = line_point(spec, r, s)
    field_vec = np.array([p[1], p[2], spec.mu])  # generator of the flow at p
    return float(np.linalg.det(np.array([u, y, field_vec])))


@dataclass(frozen=True)
class EmbeddingCertificate:
    ok: bool
    bound_margin: float
    min_triple_product: float
    min_f3_gap: float
    notes: list


def embeddedness_check(spec: RuledSpec, r_max: float = 0.99, n: int = 50) -> EmbeddingCertificate:
    """Check ``f(r) < mu r / sqrt(1-r^2)`` and audit the F3 separation of cylinder crossings.

    On the cylinder ``F2 = T`` the line ``l_r`` meets it at ``s = +-s1`` with
    ``s1 = sqrt(T + 2 mu y0)/c``; the two crossings have F3 values of opposite
    sign and their gap is sampled on an ``n x n`` grid of ``(r, T)``.
    """
    notes = []
    rs = np.linspace(spec.r0, r_max, n)
    f = spec.f(rs)
    slack = spec.bound(rs) - f
    margin = float(np.min(slack))
    if margin <= 0:
        notes.append(f"profile reaches the embeddedness bound at r = {rs[np.argmin(slack)]:.6g}")
    ss = np.linspace(-2.0, 2.0, n)
    R, S = np.meshgrid(rs, ss, indexing="ij")
    tp = float(np.min(triple_product(spec, R, S)))
    if tp <= 0:
        notes.append("triple product is not positive")
    gaps = []
    for r, y0 in zip(rs, f):
        c = np.sqrt(1.0 - r * r)
        lo = -2.0 * spec.mu * y0
        T = lo + np.geomspace(1e-3, 10.0, n)
        s1 = np.sqrt(T + 2.0 * spec.mu * y0) / c
        plus = line_point(spec, r, s1)
        minus = line_point(spec, r, -s1)
        gaps.append(np.abs(invariant_f3(spec.mu, plus) - invariant_f3(spec.mu, minus)))
    gap = float(np.min(gaps))
    if gap <= 0:
        notes.append("crossings of a cylinder are not separated by F3")
    return EmbeddingCertificate(margin > 0 and tp > 0 and gap > 0, margin, tp, gap, notes)


def f3_gap_closed_form(spec: RuledSpec, r: float, s1: float) -> float:
    """``2 |s1^3 c^3 - 3 mu y0 s1 c + 3 mu^2 s1 r|``."""
    c = np.sqrt(1.0 - r * r)
    y0 = float(spec.f(r))
    return 2.0 * abs(s1**3 * c**3 - 3.0 * spec.mu * y0 * s1 * c + 3.0 * spec.mu**2 * s1 * r)


# membership -----------------------------------------------------------------


@dataclass(frozen=True)
class Membership:
    inside: bool
    leaf: float | None
    note: str = ""


def _leaf_f3(spec: RuledSpec, r, f2):
    """F3 of the point of ``l_r`` on the cylinder ``F2 = f2`` with ``s >= 0``."""
    r = np.asarray(r, float)
    c = np.sqrt(1.0 - r * r)
    s2 = (f2 + 2.0 * spec.mu * spec.f(r)) / (c * c)
    s = np.sqrt(np.where(s2 >= 0, s2, np.nan))
    return invariant_f3(spec.mu, line_point(spec, r, s))


def leaf_parameter(spec: RuledSpec, p, r_max: float = 1.0 - 1e-9, samples: int = 400,
                   tol: float = 1e-10):
    """Parameter ``r`` of the leaf through ``p``, or ``None`` if there is none.

    The flow line through ``p`` is the level set of ``(F2, F3)``; the leaf
    parameter is the root in ``r`` of ``F3(l_r(s)) = F3(p)`` on ``F2 = F2(p)``,
    bracketed on a grid and refined by bisection to ``tol``.
    """
    p = np.asarray(p, float)
    f2 = float(invariant_f2(spec.mu, p))
    f3 = float(invariant_f3(spec.mu, p))
    sign = 1.0 if f3 >= 0 else -1.0
    target = abs(f3)
    rs = np.linspace(1e-6, r_max, samples)
    vals = _leaf_f3(spec, rs, f2) - target
    ok = np.isfinite(vals)
    brackets = [
        (rs[i], rs[i + 1])
        for i in range(samples - 1)
        if ok[i] and ok[i + 1] and np.sign(vals[i]) != np.sign(vals[i + 1])
    ]
    if not brackets:
        return None, "no leaf through the point: outside the foliated region"
    if len(brackets) > 1:
        raise NumericalError("leaf equation has several roots; foliation audit failed")
    lo, hi = brackets[0]
    flo = float(_leaf_f3(spec, lo, f2)) - target
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = float(_leaf_f3(spec, mid, f2)) - target
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    note = "" if sign > 0 else "point lies on the s < 0 half of its leaf"
    return 0.5 * (lo + hi), note


def region_membership(spec: RuledSpec, p) -> Membership:
    """Whether ``p`` lies in the region swept by the leaves with ``r >= r0``."""
    r, note = leaf_parameter(spec, p)
    if r is None:
        return Membership(False, None, note)
    return Membership(bool(r >= spec.r0), float(r), note)


def leaf_point(spec: RuledSpec, r: float, s: float, t: float) -> np.ndarray:
    return sweep(spec, t, line_point(spec, r, s))


def swept_line_closure(spec: RuledSpec, r: float, t: float, n: int = 513) -> np.ndarray:
    """Samples in S(R^4) of the closure of the line ``Phi(t) l_r``."""
    from .lorentz_core import line_closure
    from .parabolic import phi_matrix

    L = phi_matrix(spec.mu, t)[:3, :3]
    p = sweep(spec, t, line_point(spec, r, 0.0))
    return line_closure(p, L @ line_direction(r), n)


def limit_segment():
    """Accordant segment at the ideal point of ``c`` in frame coordinates."""
    from .lorentz_core import accordant_segment
    from .parabolic import reference_frame

    return accordant_segment(np.array([1.0, 0.0, 0.0]), reference_frame().change_of_basis)
