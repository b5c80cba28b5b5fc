import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from margulis.flow_bundle import (
    CUSP,
    UTBPoint,
    axis_utb_point,
    band_summary,
    cocycle_decompose,
    cusp_projections,
    cusp_segment_integrals,
    direction_limit_experiment,
    distance_to_accordant,
    flow,
    frame_at,
    half_plane_distance,
    half_plane_to_klein,
    integrate_cocycle,
    klein_distance,
    klein_to_half_plane,
)
from margulis.group import Generator, GroupSpec, KleinDisk
from margulis.invariants import alpha
from margulis.isometry import AffIso, from_sl2, hyperbolic_eigendata, random_lorentz
from margulis.lorentz_core import GeometryError, accordant_segment, bdd_dist, bform, direction, lorentz_cross

seeds = st.integers(0, 2**32 - 1)


def test_half_plane_examples():
    assert np.allclose(half_plane_to_klein(0.0, 1.0), [0, 0, 1])
    assert np.allclose(half_plane_to_klein(1.0, 0.0), [1, 0, 1])
    far = half_plane_to_klein(0.0, 1e8)
    assert np.allclose(far, CUSP, atol=1e-12)
    with pytest.raises(GeometryError):
        half_plane_to_klein(0.0, -1.0)


@given(st.floats(-5, 5), st.floats(0.05, 5), st.floats(-5, 5), st.floats(0.05, 5))
@settings(max_examples=80, deadline=None)
def test_models_are_isometric(x1, y1, x2, y2):
    p, q = half_plane_to_klein(x1, y1), half_plane_to_klein(x2, y2)
    assert klein_distance(p, q) == pytest.approx(half_plane_distance((x1, y1), (x2, y2)), abs=1e-7)
    assert np.allclose(klein_to_half_plane(p), (x1, y1), atol=1e-6 * (1 + x1 * x1 + y1 * y1))


def test_unit_distance_example():
    p, q = half_plane_to_klein(0, 1), half_plane_to_klein(0, np.e)
    assert half_plane_distance((0, 1), (0, np.e)) == pytest.approx(1.0)
    assert klein_distance(p, q) == pytest.approx(1.0)


def test_base_frame():
    fr = frame_at(UTBPoint(np.eye(3)))
    assert np.allclose(fr.v_plus, np.array([0, 1, 1]) / np.sqrt(2))
    assert np.allclose(fr.v_minus, np.array([0, -1, 1]) / np.sqrt(2))
    w = lorentz_cross(fr.v_minus, fr.v_plus)
    assert np.allclose(fr.v_zero, w / np.sqrt(bform(w, w)))
    assert np.allclose(fr.v_zero, [-1, 0, 0])


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_frame_properties_and_equivariance(seed):
    r = np.random.default_rng(seed)
    g, h = random_lorentz(r), random_lorentz(r)
    fr, frh = frame_at(UTBPoint(g)), frame_at(UTBPoint(h @ g))
    assert abs(bform(fr.v_plus, fr.v_plus)) < 1e-9 and abs(bform(fr.v_minus, fr.v_minus)) < 1e-9
    assert bform(fr.v_plus, fr.v_minus) == pytest.approx(-1.0)
    assert bform(fr.v_zero, fr.v_zero) == pytest.approx(1.0)
    # cross formula for v0
    w = lorentz_cross(fr.v_minus, fr.v_plus)
    assert np.allclose(fr.v_zero, w / np.sqrt(bform(w, w)), atol=1e-9)
    for u, v in ((fr.v_plus, frh.v_plus), (fr.v_zero, frh.v_zero), (fr.v_minus, frh.v_minus)):
        assert np.allclose(h @ u, v, atol=1e-9 * np.linalg.norm(h @ g))
    x = r.normal(size=3)
    c = fr.coordinates(x)
    assert np.linalg.norm(fr.matrix @ c - x) < 1e-9 * (1 + np.linalg.norm(x))


def test_utb_point_validation():
    with pytest.raises(GeometryError):
        UTBPoint(np.eye(2))
    with pytest.raises(GeometryError):
        UTBPoint(2 * np.eye(3))


def test_from_point_direction():
    p = UTBPoint.from_point_direction([0.2, 0.1, 1.0], [1.0, 0.0, 0.0])
    assert bform(p.base, p.base) == pytest.approx(-1.0)
    assert bform(p.direction, p.base) == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(p.g.T @ np.diag([1, 1, -1]) @ p.g, np.diag([1, 1, -1]))


@given(seeds, st.floats(-20, 20), st.floats(-20, 20))
@settings(max_examples=60, deadline=None)
def test_flow_group_law_and_scaling(seed, s, t):
    r = np.random.default_rng(seed)
    p = UTBPoint(random_lorentz(r))
    assert np.allclose(flow(p, 0.0).g, p.g)
    assert flow(flow(p, s), t).time == pytest.approx(flow(p, s + t).time)
    w = frame_at(p)
    ft = frame_at(flow(p, t))
    assert ft.coordinates(w.v_plus)[0] == pytest.approx(np.exp(-t), rel=1e-10)
    assert ft.coordinates(w.v_minus)[2] == pytest.approx(np.exp(t), rel=1e-10)
    assert np.allclose(ft.v_zero, w.v_zero)


def test_flow_moves_base_point_by_distance():
    p = UTBPoint(random_lorentz(np.random.default_rng(1)))
    for t in (0.3, 1.0, 4.0):
        assert klein_distance(p.base, flow(p, t).base) == pytest.approx(t)


def _boost_group(translations):
    A = from_sl2(np.diag([np.e, 1 / np.e]))
    B = from_sl2(np.array([[np.cosh(1.0), np.sinh(1.0)], [np.sinh(1.0), np.cosh(1.0)]]) @ np.diag([2.0, 0.5]))
    gens = (Generator("a", AffIso(A, translations[0])), Generator("b", AffIso(B, translations[1])))
    return GroupSpec(gens)


def test_boost_plus_fixed_translation_decomposes_trivially():
    A = from_sl2(np.diag([np.e, 1 / np.e]))
    x0 = hyperbolic_eigendata(A).x_zero
    G = _boost_group([3.0 * x0, np.zeros(3)])
    tri = cocycle_decompose(G, "a")
    assert np.allclose(tri.coords, [0, 3, 0], atol=1e-12)


def test_decomposition_reconstructs_and_matches_alpha(torus):
    for w in ("a", "b", "ab", "aB", "abbA", "aaB"):
        tri = cocycle_decompose(torus, w)
        assert np.allclose(tri.frame.matrix @ tri.coords, tri.translation, atol=1e-9)
        assert tri.b_zero == pytest.approx(alpha(torus.evaluate(w)), abs=1e-10)
        n = tri.euclidean_norms
        assert n["total"] == pytest.approx(np.linalg.norm(tri.translation))


def test_axis_point_lies_on_axis_and_points_forward(torus):
    g = torus.evaluate("ab")
    d = hyperbolic_eigendata(g)
    p = axis_utb_point(g)
    assert abs(bform(p.base, d.x_zero)) < 1e-12
    assert bform(p.direction, d.x_plus) > 0


def test_translation_conjugation_leaves_b_zero(torus):
    h = AffIso.translation([0.3, -1.2, 0.5])
    conj = GroupSpec(tuple(Generator(g.label, g.iso.conjugate_by(h)) for g in torus.generators))
    for w in ("a", "ab", "aBB"):
        assert cocycle_decompose(conj, w).b_zero == pytest.approx(cocycle_decompose(torus, w).b_zero)


def test_decomposition_rejects_parabolic(torus):
    with pytest.raises(GeometryError):
        cocycle_decompose(torus, "abAB")


@pytest.mark.parametrize("word", ["a", "B", "ab", "Ba"])
def test_quadrature_recovers_translation(torus, word):
    q = integrate_cocycle(torus, word, steps=2048)
    assert q.error < 1e-6
    assert q.coarse_error >= 3.0 * q.error
    assert np.allclose(q.total, q.direct, atol=1e-6)
    assert q.equivariance_residual < 1e-9


def test_quadrature_of_zero_cocycle(torus):
    q = integrate_cocycle(torus.linear_part(), "ab", steps=256)
    assert np.allclose(q.total, 0.0, atol=1e-12)


def test_quadrature_validation(torus):
    with pytest.raises(GeometryError):
        integrate_cocycle(torus, "a", steps=10)
    with pytest.raises(GeometryError):
        integrate_cocycle(torus, "abAB")


def test_cusp_projection_linearity_and_domain():
    p1, p2 = cusp_projections(5.0, 1.0), cusp_projections(5.0, 2.0)
    for a, b in ((p1.norm_zero, p2.norm_zero), (p1.norm_minus, p2.norm_minus), (p1.norm_plus, p2.norm_plus)):
        assert b == pytest.approx(2 * a)
    with pytest.raises(GeometryError):
        cusp_projections(1.0)
    with pytest.raises(GeometryError):
        cusp_projections(3.0, side=0)


@pytest.mark.parametrize("R", [2.0, 5.0, 10.0, 50.0])
def test_cusp_closed_form_equals_quadrature(R):
    ci = cusp_segment_integrals(R)
    assert np.allclose(ci.b_minus, ci.b_minus_quadrature, atol=1e-7)
    assert ci.alpha_contrib == pytest.approx(ci.alpha_quadrature, abs=1e-7)
    assert ci.delta_x == pytest.approx(-2 * np.sqrt(R * R - 1))
    # entry point lies on the horocycle y = 1
    assert cusp_projections(R).entry[1] == pytest.approx(1.0)


def test_cusp_integrals_vanish_as_r_tends_to_one():
    ci = cusp_segment_integrals(1.0 + 1e-10)
    assert np.linalg.norm(ci.b_minus) < 1e-4 and abs(ci.alpha_contrib) < 1e-4


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_distance_to_accordant_against_sampling(seed):
    r = np.random.default_rng(seed)
    th = r.uniform(0, 2 * np.pi)
    x = np.array([np.cos(th), np.sin(th), 1.0])
    d = r.normal(size=3)
    d /= np.linalg.norm(d)
    seg = accordant_segment(x).sample(20001)
    brute = bdd_dist(direction(d), seg)
    assert distance_to_accordant(d[None], x[None])[0] == pytest.approx(brute, abs=2e-4)


def test_limit_rows_match_decomposition(torus):
    rows = direction_limit_experiment(torus, 5, KleinDisk((0.0, 0.0), 1.0))
    assert rows
    for row in rows[::7]:
        tri = cocycle_decompose(torus, row.word)
        scale = max(1.0, np.linalg.norm(tri.translation))
        assert np.allclose([row.b_plus, row.b_zero, row.b_minus], tri.coords, atol=1e-10 * scale)
        assert row.norm_b_E == pytest.approx(np.linalg.norm(tri.translation))
        assert row.l_klein == pytest.approx(tri.length_klein)
        _, _, pm = tri.frame.projections(tri.translation)
        assert row.norm_bminus_E == pytest.approx(np.linalg.norm(pm), rel=1e-8, abs=1e-12)
    bands = band_summary(rows)
    assert sum(b["count"] for b in bands.values()) == len(rows)


def test_negated_group_mirrors_coordinates(torus):
    disk = KleinDisk((0.0, 0.0), 0.8)
    rows = {r.word: r for r in direction_limit_experiment(torus, 4, disk)}
    neg = {r.word: r for r in direction_limit_experiment(torus.negated(), 4, disk)}
    assert rows.keys() == neg.keys()
    for w, r in rows.items():
        assert neg[w].b_zero == pytest.approx(-r.b_zero)
        assert neg[w].b_minus == pytest.approx(-r.b_minus)
