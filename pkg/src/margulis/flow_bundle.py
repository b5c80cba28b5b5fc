"""Unit tangent bundle frames, geodesic flow, and cocycle decompositions.

A point of the unit tangent bundle of the Klein disk is stored as a matrix
``g`` in SO(2,1)°: its base point is ``[g e3]`` and its direction ``g e2``.
The flat frame at ``g`` is ``v+- = g((+-e2 + e3)/sqrt 2)`` together with the
unit spacelike ``v0 = (v- x v+)/|v- x v+|``; ``v+`` points at the forward
endpoint of the geodesic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .group import GroupSpec, KleinDisk, evaluate_levels, fixed_vectors
from .isometry import (
    AffIso,
    IsoClass,
    classify,
    hyperbolic_eigendata,
    isometry_defect,
    reproject,
)
from .lorentz_core import (
    J_STANDARD,
    GeometryError,
    NumericalError,
    as_vec3,
    bform,
    boundary_tangent,
    lorentz_cross,
)

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
CUSP = np.array([0.0, 1.0, 1.0])  # image of the point at infinity
SQRT2 = np.sqrt(2.0)


# half-plane and Klein models ----------------------------------------------


def half_plane_to_klein(x, y) -> np.ndarray:
    """``(2x/(r^2+1), 1 - 2/(r^2+1), 1)`` with ``r^2 = x^2 + y^2``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if np.any(y < 0):
        raise GeometryError("half-plane points need y >= 0")
    d = x * x + y * y + 1.0
    return np.stack([2.0 * x / d, 1.0 - 2.0 / d, np.ones_like(d)], axis=-1)


def klein_to_half_plane(p) -> tuple:
    """Inverse of :func:`half_plane_to_klein` on the chart ``x3 = 1``."""
    p = as_vec3(p)
    u, v = p[0] / p[2], p[1] / p[2]
    if v >= 1.0:
        raise GeometryError("the cusp point has no finite half-plane image")
    d = 2.0 / (1.0 - v)
    x = u * d / 2.0
    y2 = d - 1.0 - x * x
    return float(x), float(np.sqrt(max(y2, 0.0)))


def half_plane_distance(z, w) -> float:
    (x1, y1), (x2, y2) = z, w
    if y1 <= 0 or y2 <= 0:
        raise GeometryError("points must lie in the open half-plane")
    return float(np.arccosh(1.0 + ((x1 - x2) ** 2 + (y1 - y2) ** 2) / (2.0 * y1 * y2)))


def klein_distance(p, q) -> float:
    p, q = as_vec3(p), as_vec3(q)
    pp, qq = bform(p, p), bform(q, q)
    if pp >= 0 or qq >= 0:
        raise GeometryError("points must be timelike")
    c = -bform(p, q) / np.sqrt(pp * qq)
    return float(np.arccosh(max(c, 1.0)))


def hyperboloid_lift(p) -> np.ndarray:
    p = as_vec3(p)
    q = bform(p, p)
    if q >= 0:
        raise GeometryError("point is not inside the Klein disk")
    v = p / np.sqrt(-q)
    return v if v[2] > 0 else -v


# unit tangent bundle --------------------------------------------------------


def boost(t: float) -> np.ndarray:
    """Unit-speed boost in the ``(e2, e3)`` plane moving ``e3`` towards ``e2``."""
    c, s = np.cosh(t), np.sinh(t)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, s, c]])


@dataclass(frozen=True)
class UTBPoint:
    """Unit tangent vector ``(g k, g j)`` with ``g = base_matrix @ boost(time)``.

    Flowing only advances ``time``, so frames along a flow line are read off
    from the boost eigenvalues instead of a product with entries ``~e^|t|``.
    """

    base_matrix: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        g = np.array(self.base_matrix, float)
        if g.shape != (3, 3):
            raise GeometryError("UTB point must be a 3x3 matrix")
        defect = isometry_defect(g)
        if defect > 1e-6:
            raise GeometryError(f"UTB matrix is not a Lorentz isometry (defect {defect:.2e})")
        if defect > 1e-14:
            g = reproject(g)
        g.setflags(write=False)
        object.__setattr__(self, "base_matrix", g)
        object.__setattr__(self, "time", float(self.time))

    @property
    def g(self) -> np.ndarray:
        return self.base_matrix @ boost(self.time)

    @classmethod
    def from_point_direction(cls, point, tangent) -> "UTBPoint":
        p = hyperboloid_lift(point)
        u = as_vec3(tangent)
        u = u + bform(u, p) * p
        nu = bform(u, u)
        if nu <= 0:
            raise GeometryError("tangent direction vanishes")
        u = u / np.sqrt(nu)
        return cls(np.column_stack([lorentz_cross(u, p), u, p]))

    @property
    def base(self) -> np.ndarray:
        return self.g[:, 2]

    @property
    def direction(self) -> np.ndarray:
        return self.g[:, 1]


@dataclass(frozen=True)
class FlatFrame:
    v_plus: np.ndarray
    v_zero: np.ndarray
    v_minus: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([self.v_plus, self.v_zero, self.v_minus])

    def coordinates(self, w) -> np.ndarray:
        """``(c+, c0, c-)`` with ``w = c+ v+ + c0 v0 + c- v-``."""
        w = np.asarray(w, float)
        # v+ and v- are null with B(v+, v-) = -1
        return np.stack(
            [-bform(w, self.v_minus), bform(w, self.v_zero), -bform(w, self.v_plus)], axis=-1
        )

    def projections(self, w) -> tuple:
        c = self.coordinates(w)
        return c[0] * self.v_plus, c[1] * self.v_zero, c[2] * self.v_minus


def _standard_frame() -> tuple:
    vp = (E2 + E3) / SQRT2
    vm = (-E2 + E3) / SQRT2
    w = lorentz_cross(vm, vp)
    return vp, np.round(w / np.sqrt(bform(w, w))), vm


_VP, _V0, _VM = _standard_frame()


def frame_at(p: UTBPoint) -> FlatFrame:
    """``p.g`` applied to the standard frame at ``(e3, e2)``.

    ``v+`` and ``v-`` are eigenvectors of the boost, with eigenvalues
    ``e^t`` and ``e^-t``; ``v0`` is the image of the cross of the standard
    pair, which equals the cross formula for ``g`` in SO(2,1).
    """
    g, t = p.base_matrix, p.time
    return FlatFrame(np.exp(t) * (g @ _VP), g @ _V0, np.exp(-t) * (g @ _VM))


def flow(p: UTBPoint, t: float) -> UTBPoint:
    """Geodesic flow: right multiplication by ``boost(t)``."""
    return UTBPoint(p.base_matrix, p.time + float(t))


def frame_on_geodesic(point, back, forward) -> FlatFrame:
    """Frame at a point of the geodesic with ideal endpoints ``back -> forward``."""
    P = hyperboloid_lift(point)
    e_f, e_b = as_vec3(forward), as_vec3(back)
    # P = s e_f + r e_b
    M = np.column_stack([e_f, e_b])
    (s, r), *_ = np.linalg.lstsq(M, P, rcond=None)
    vp, vm = SQRT2 * s * e_f, SQRT2 * r * e_b
    w = lorentz_cross(vm, vp)
    return FlatFrame(vp, w / np.sqrt(bform(w, w)), vm)


def foot_on_axis(x_zero, base=E3) -> np.ndarray:
    """Point of the geodesic ``x_zero^perp`` nearest the timelike ``base``."""
    p = hyperboloid_lift(base)
    q = p - bform(p, x_zero) * x_zero
    return hyperboloid_lift(q)


# cocycle decomposition ----------------------------------------------------


@dataclass(frozen=True)
class CocycleTriple:
    word: str
    alpha: float
    length_klein: float
    coords: np.ndarray  # (b+, b0, b-)
    frame: FlatFrame
    base: UTBPoint
    translation: np.ndarray

    @property
    def b_plus(self) -> float:
        return float(self.coords[0])

    @property
    def b_zero(self) -> float:
        return float(self.coords[1])

    @property
    def b_minus(self) -> float:
        return float(self.coords[2])

    @property
    def euclidean_norms(self) -> dict:
        pp, p0, pm = self.frame.projections(self.translation)
        return {
            "plus": float(np.linalg.norm(pp)),
            "zero": float(np.linalg.norm(p0)),
            "minus": float(np.linalg.norm(pm)),
            "total": float(np.linalg.norm(self.translation)),
        }


def axis_utb_point(g: AffIso, base=E3) -> UTBPoint:
    """Unit tangent at the axis point nearest ``base``, pointing at the attractor."""
    d = hyperbolic_eigendata(g)
    x = foot_on_axis(d.x_zero, base)
    # the axis is x_zero^perp, so its unit tangent at x is x_zero x x; this
    # stays well conditioned when x_plus and x_minus nearly coincide
    u = lorentz_cross(d.x_zero, x)
    u = u / np.sqrt(bform(u, u))
    if bform(u, d.x_plus) < 0:
        u = -u
    # lorentz_cross(u, x) is +-x_zero; recomputing it loses accuracy far out
    side = 1.0 if bform(lorentz_cross(u, x), d.x_zero) > 0 else -1.0
    return UTBPoint(np.column_stack([side * d.x_zero, u, x]))


def cocycle_decompose(G: GroupSpec, word, base=E3) -> CocycleTriple:
    w = G.parse_word(word) if isinstance(word, str) else tuple(word)
    g = G.evaluate(w)
    if classify(g).kind is not IsoClass.HYPERBOLIC:
        raise GeometryError("cocycle decomposition needs a hyperbolic word")
    d = hyperbolic_eigendata(g)
    p = axis_utb_point(g, base)
    fr = frame_at(p)
    return CocycleTriple(
        word=G.format_word(w),
        alpha=float(bform(g.b, d.x_zero)),
        length_klein=d.length_klein,
        coords=fr.coordinates(g.b),
        frame=fr,
        base=p,
        translation=np.array(g.b),
    )


# developing section and quadrature ----------------------------------------


class OrbitSection:
    """Equivariant section ``s(x) = sum_h w_h(x) h(O)`` over orbit points ``h(e3)``.

    The weights are a partition of unity built from a compactly supported
    smooth bump of the hyperbolic distance to ``h(e3)``, so
    ``s(g x) = L(g) s(x) + b_g`` holds exactly once every orbit point within
    ``radius`` of the region of interest has been collected.
    """

    def __init__(self, G: GroupSpec, samples: np.ndarray, radius: float = 3.0):
        self.G = G
        self.radius = float(radius)
        self.cosh_r = float(np.cosh(radius))
        self._collect(np.asarray(samples, float))

    def _collect(self, samples: np.ndarray) -> None:
        G = self.G
        letters = [i for k in range(1, G.rank + 1) for i in (k, -k)]
        step = max(float(np.arccosh(G.letter(i).A[2, 2])) for i in letters)
        keep_c = self.cosh_r
        grow_c = np.cosh(self.radius + 2.0 * step + 1.0)
        frontier = [((), np.eye(3), np.zeros(3))]
        pts, trans = [], []
        seen = 0
        while frontier:
            nxt = []
            for w, A, b in frontier:
                q = A[:, 2]
                c = np.min(-bform(samples, q))
                if c <= keep_c:
                    pts.append(q)
                    trans.append(b)
                if c > grow_c:
                    continue
                for i in letters:
                    if w and w[-1] == -i:
                        continue
                    gi = G.letter(i)
                    nxt.append((w + (i,), A @ gi.A, A @ gi.b + b))
            seen += len(frontier)
            if seen > 200000:
                raise NumericalError("orbit enumeration did not terminate")
            frontier = nxt
        self.orbit = np.array(pts)
        self.translations = np.array(trans)

    def _bump(self, c: np.ndarray):
        u = (c - 1.0) / (self.cosh_r - 1.0)
        inside = u < 1.0
        phi = np.zeros_like(u)
        dphi = np.zeros_like(u)
        ui = u[inside]
        phi[inside] = np.exp(-1.0 / (1.0 - ui))
        dphi[inside] = -phi[inside] / (1.0 - ui) ** 2 / (self.cosh_r - 1.0)
        return phi, dphi

    def evaluate(self, x: np.ndarray, xdot: np.ndarray | None = None):
        """Section values (and derivatives along ``xdot``) at hyperboloid points."""
        x = np.atleast_2d(x)
        c = -x @ J_STANDARD @ self.orbit.T  # cosh of distances
        phi, dphi = self._bump(c)
        total = phi.sum(axis=1)
        if np.any(total <= 1e-200):
            raise NumericalError("orbit bumps do not cover the path")
        w = phi / total[:, None]
        s = w @ self.translations
        if xdot is None:
            return s
        cdot = -np.atleast_2d(xdot) @ J_STANDARD @ self.orbit.T
        dp = dphi * cdot
        dw = (dp - w * dp.sum(axis=1)[:, None]) / total[:, None]
        return s, dw @ self.translations


@dataclass(frozen=True)
class CocycleIntegral:
    word: str
    steps: int
    integral: np.ndarray
    section_term: np.ndarray
    direct: np.ndarray
    error: float
    coarse_error: float
    richardson: float
    equivariance_residual: float

    @property
    def total(self) -> np.ndarray:
        return self.integral + self.section_term


def _simpson(f: np.ndarray, h: float) -> np.ndarray:
    return h / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum(axis=0) + 2.0 * f[2:-1:2].sum(axis=0))


def _path(x0, u, t):
    t = np.asarray(t)[:, None]
    return np.cosh(t) * x0 + np.sinh(t) * u, np.sinh(t) * x0 + np.cosh(t) * u


def integrate_cocycle(G: GroupSpec, word, steps: int = 2048, radius: float = 3.0,
                      tolerance: float = 1e-5) -> CocycleIntegral:
    """Recover ``b_g`` as the integral of ``ds`` along the axis plus ``(I - L(g)) s(x_g)``.

    The path runs from the axis point ``x_g`` to ``g(x_g)``; the integrand is
    the derivative of the orbit section of :class:`OrbitSection`, integrated
    by composite Simpson with ``steps`` intervals.
    """
    if steps < 4 or steps % 4:
        raise GeometryError("steps must be a positive multiple of 4")
    w = G.parse_word(word) if isinstance(word, str) else tuple(word)
    g = G.evaluate(w)
    if classify(g).kind is not IsoClass.HYPERBOLIC:
        raise GeometryError("integration needs a hyperbolic word")
    d = hyperbolic_eigendata(g)
    p = axis_utb_point(g)
    x0, u = p.base, p.direction
    ell = d.length_klein
    t = np.linspace(0.0, ell, steps + 1)
    X, Xdot = _path(x0, u, t)
    sec = OrbitSection(G, X[:: max(1, steps // 64)], radius)
    s, ds = sec.evaluate(X, Xdot)
    h = ell / steps
    fine = _simpson(ds, h)
    coarse = _simpson(ds[::2], 2.0 * h)
    section_term = s[0] - g.A @ s[0]
    eq = float(np.linalg.norm(s[-1] - (g.A @ s[0] + g.b)))
    rich = float(np.max(np.abs(fine - coarse)) / 15.0)
    err = float(np.max(np.abs(fine + section_term - g.b)))
    err_coarse = float(np.max(np.abs(coarse + section_term - g.b)))
    if rich > tolerance:
        raise NumericalError(f"quadrature did not converge (Richardson estimate {rich:.3e})")
    return CocycleIntegral(G.format_word(w), steps, fine, section_term, np.array(g.b),
                           err, err_coarse, rich, eq)


# cusp study ---------------------------------------------------------------


@dataclass(frozen=True)
class CuspProjection:
    R: float
    k: float
    norm_zero: float
    norm_minus: float
    norm_plus: float
    frame: FlatFrame
    entry: tuple


def _cusp_geodesic(R: float, side: int):
    if not R > 1.0:
        raise GeometryError("cusp study needs R > 1")
    if side not in (1, -1):
        raise GeometryError("side must be +1 or -1")
    back = half_plane_to_klein(0.0, 0.0)
    forward = half_plane_to_klein(2.0 * side * R, 0.0)
    return back, forward


def _circle_point(R: float, side: int, theta):
    """Point of the semicircle of radius ``R`` through 0 and ``2 side R``."""
    return side * (R - R * np.cos(theta)), R * np.sin(theta)


def cusp_projections(R: float, k: float = 1.0, side: int = -1) -> CuspProjection:
    """Projections of ``k (e2 + e3)`` at the entry point of the geodesic into ``y > 1``."""
    back, forward = _cusp_geodesic(R, side)
    theta0 = np.arcsin(1.0 / R)
    x, y = _circle_point(R, side, theta0)
    fr = frame_on_geodesic(half_plane_to_klein(x, y), back, forward)
    pp, p0, pm = fr.projections(k * CUSP)
    return CuspProjection(float(R), float(k), float(np.linalg.norm(p0)), float(np.linalg.norm(pm)),
                          float(np.linalg.norm(pp)), fr, (float(x), float(y)))


@dataclass(frozen=True)
class CuspIntegrals:
    R: float
    k: float
    b_minus: np.ndarray
    alpha_contrib: float
    b_minus_quadrature: np.ndarray
    alpha_quadrature: float
    delta_x: float


def cusp_segment_integrals(R: float, k: float = 1.0, side: int = -1, nodes: int = 64) -> CuspIntegrals:
    """Contributions of the cusp form ``k (e2 + e3) dx`` along the horodisk segment.

    Closed form: the projections are constant along the geodesic, so they
    multiply ``Delta x = 2 side sqrt(R^2 - 1)``.  The quadrature recomputes the
    local frame at every Gauss-Legendre node.
    """
    proj = cusp_projections(R, k, side)
    dx = 2.0 * side * np.sqrt(R * R - 1.0)
    _, _, pm = proj.frame.projections(k * CUSP)
    nu = proj.frame.v_zero
    alpha_cf = dx * bform(nu, k * CUSP)

    back, forward = _cusp_geodesic(R, side)
    theta0 = np.arcsin(1.0 / R)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    half = (np.pi - 2.0 * theta0) / 2.0
    thetas = theta0 + half * (xg + 1.0)
    bq = np.zeros(3)
    aq = 0.0
    for th, wt in zip(thetas, wg):
        x, y = _circle_point(R, side, th)
        fr = frame_on_geodesic(half_plane_to_klein(x, y), back, forward)
        dxdth = side * R * np.sin(th)
        _, p0, pmi = fr.projections(k * CUSP)
        bq += wt * half * dxdth * pmi
        aq += wt * half * dxdth * bform(fr.v_zero, k * CUSP)
    return CuspIntegrals(float(R), float(k), dx * pm, float(alpha_cf), bq, float(aq), float(dx))


# direction-limit experiment ----------------------------------------------


@dataclass(frozen=True)
class LimitRow:
    word: str
    length: int
    l_klein: float
    b_plus: float
    b_zero: float
    b_minus: float
    norm_bminus_E: float
    norm_b_E: float
    dist_to_zeta: float


def distance_to_accordant(d: np.ndarray, x_plus: np.ndarray) -> np.ndarray:
    """Spherical distance from unit directions ``d`` to the accordant segment at ``x_plus``.

    The segment is ``cos(s) a + sin(s) m`` for ``s`` in [0, pi], with ``a``
    the unit null direction and ``m`` the unit oriented boundary tangent.
    """
    a = x_plus / np.linalg.norm(x_plus, axis=-1, keepdims=True)
    m = np.stack([-x_plus[..., 1], x_plus[..., 0], np.zeros(x_plus.shape[:-1])], axis=-1)
    m = m - np.sum(m * a, axis=-1, keepdims=True) * a
    m = m / np.linalg.norm(m, axis=-1, keepdims=True)
    da = np.sum(d * a, axis=-1)
    dm = np.sum(d * m, axis=-1)
    inplane = np.arccos(np.clip(np.hypot(da, dm), -1.0, 1.0))
    ends = np.arccos(np.clip(np.abs(da), -1.0, 1.0))
    return np.where(dm >= 0, inplane, ends)


def _null_eigvectors(A: np.ndarray, lam: np.ndarray):
    """Attracting and repelling null eigenvectors (x3 = 1) via spectral projectors."""
    eye = np.eye(3)
    Ainv = J_STANDARD @ np.transpose(A, (0, 2, 1)) @ J_STANDARD
    li = (1.0 / lam)[:, None, None]
    k = np.array([0.0, 0.0, 1.0])

    def proj(M):
        v = np.einsum("nij,nj->ni", M - eye, (M - li * eye) @ k)
        return v / v[:, 2:3]

    return proj(A), proj(Ainv)


def direction_limit_experiment(G: GroupSpec, max_length: int, disk: KleinDisk,
                               min_length: int = 1) -> list:
    """Rows for every hyperbolic reduced word whose axis meets ``disk``."""
    levels = evaluate_levels(G, max_length)
    centre = disk.hyperboloid_centre
    rows = []
    for n in range(max(1, min_length), max_length + 1):
        lvl = levels[n]
        A, b = lvl.A, lvl.b
        tr = np.trace(A, axis1=1, axis2=2)
        tol = 1e-8 * np.maximum(1.0, np.linalg.norm(A, axis=(1, 2)))
        hyp = tr - 3.0 > tol
        if not np.any(hyp):
            continue
        A, b, words = A[hyp], b[hyp], lvl.words[hyp]
        t = np.trace(A, axis1=1, axis2=2) - 1.0
        lam = 0.5 * (t + np.sqrt((t - 2.0) * (t + 2.0)))
        v0 = fixed_vectors(A)
        v0 = v0 / np.sqrt(bform(v0, v0))[:, None]
        dist = np.arcsinh(np.abs(bform(centre, v0)))
        inside = dist <= disk.radius
        if not np.any(inside):
            continue
        A, b, words, lam, v0 = A[inside], b[inside], words[inside], lam[inside], v0[inside]
        xp, xm = _null_eigvectors(A, lam)
        foot = centre[None, :] - bform(centre, v0)[:, None] * v0
        foot = foot / np.sqrt(-bform(foot, foot))[:, None]
        # foot = s xp + r xm with B(xp, xm) < 0
        bpm = bform(xp, xm)
        s = bform(foot, xm) / bpm
        r = bform(foot, xp) / bpm
        vp = SQRT2 * s[:, None] * xp
        vm = SQRT2 * r[:, None] * xm
        bplus = -bform(b, vm)
        bzero = bform(b, v0)
        bminus = -bform(b, vp)
        nbm = np.abs(bminus) * np.linalg.norm(vm, axis=1)
        nb = np.linalg.norm(b, axis=1)
        dz = distance_to_accordant(b / nb[:, None], xp)
        for k in range(len(b)):
            rows.append(
                LimitRow(G.format_word(tuple(words[k].tolist())), n, float(np.log(lam[k])),
                         float(bplus[k]), float(bzero[k]), float(bminus[k]), float(nbm[k]),
                         float(nb[k]), float(dz[k]))
            )
    return rows


def band_summary(rows: list) -> dict:
    """Per-length maxima/minima used to read off the limiting behaviour."""
    out = {}
    for n in sorted({r.length for r in rows}):
        band = [r for r in rows if r.length == n]
        out[n] = {
            "count": len(band),
            "max_norm_bminus": max(r.norm_bminus_E for r in band),
            "min_norm_b": min(r.norm_b_E for r in band),
            "max_dist_to_zeta": max(r.dist_to_zeta for r in band),
        }
    return out
