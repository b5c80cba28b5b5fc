import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from margulis.lorentz_core import J_PARABOLIC, GeometryError, bform, hausdorff_dist
from margulis.parabolic import invariant_f2, invariant_f3
from margulis.ruled_surfaces import (
    Mesh,
    RuledSpec,
    embeddedness_check,
    f3_gap_closed_form,
    leaf_D,
    leaf_parameter,
    leaf_point,
    limit_segment,
    line_direction,
    line_point,
    region_membership,
    surface_sample,
    sweep,
    swept_line_closure,
    triple_product,
    triple_product_direct,
)

SPEC = RuledSpec()


def violating_spec():
    rs = np.linspace(0.05, 0.995, 80)
    return RuledSpec(table=(rs, 1.5 * rs / np.sqrt(1 - rs**2)), strict=False)


def test_spec_validation():
    with pytest.raises(GeometryError):
        RuledSpec(mu=0.0)
    with pytest.raises(GeometryError):
        RuledSpec(kappa=(0.8, 0.5))
    with pytest.raises(GeometryError):
        RuledSpec(r0=1.0)
    with pytest.raises(GeometryError):
        RuledSpec(s0=10.0)  # profile at r0 below s0
    rs = np.linspace(0.05, 0.995, 80)
    with pytest.raises(GeometryError):
        RuledSpec(table=(rs, 1.5 * rs / np.sqrt(1 - rs**2)))
    with pytest.raises(GeometryError):
        RuledSpec(table=(rs, -rs))


def test_line_basics():
    assert np.allclose(line_point(SPEC, 0.6, 0.0), [0.0, float(SPEC.f(0.6)), 0.0])
    u = line_direction(0.6)
    # timelike for the parabolic form: 0 - 2 r sqrt(1 - r^2) < 0
    assert bform(u, u, J_PARABOLIC) == pytest.approx(-2 * 0.6 * 0.8)


def test_tabulated_profile_matches_midline():
    rs = np.linspace(0.05, 0.995, 400)
    tab = RuledSpec(table=(rs, SPEC.f(rs)))
    r = np.linspace(0.3, 0.9, 13)
    assert np.allclose(tab.f(r), SPEC.f(r), rtol=1e-6)
    assert np.allclose(tab.df(r), SPEC.df(r), rtol=1e-3)


@given(st.floats(0.5, 0.98), st.floats(-3, 3))
@settings(max_examples=60, deadline=None)
def test_triple_product_closed_form_against_determinant(r, s):
    assert triple_product(SPEC, r, s) == pytest.approx(triple_product_direct(SPEC, r, s), rel=1e-9, abs=1e-12)


def test_triple_product_examples():
    assert triple_product(SPEC, 0.7, 1.0) > 1.0
    assert triple_product(SPEC, 0.7, 0.0) > 0.0
    assert triple_product(violating_spec(), 0.7, 0.0) < 0.0


def test_certificate_passes_and_fails():
    ok = embeddedness_check(SPEC)
    assert ok.ok and ok.bound_margin > 0 and ok.min_f3_gap > 0
    bad = embeddedness_check(violating_spec())
    assert not bad.ok and bad.notes


def test_f3_gap_closed_form():
    r, s1 = 0.6, 0.9
    plus, minus = line_point(SPEC, r, s1), line_point(SPEC, r, -s1)
    direct = abs(invariant_f3(SPEC.mu, plus) - invariant_f3(SPEC.mu, minus))
    assert f3_gap_closed_form(SPEC, r, s1) == pytest.approx(float(direct))


def test_mesh_parameters_reproduce_vertices():
    mesh = surface_sample(SPEC, 0.6, nt=7, ns=9)
    for v, (r, t, s) in zip(mesh.vertices, mesh.params):
        assert np.allclose(v, leaf_point(SPEC, r, s, t), atol=1e-9)
    D = leaf_D(SPEC, 0.4, nr=5, ns=5)
    for v, (r, t, s) in zip(D.vertices, D.params):
        assert np.allclose(v, leaf_point(SPEC, r, s, t), atol=1e-9)


def test_s_leaf_is_permuted_by_the_flow():
    mesh = surface_sample(SPEC, 0.6, t_range=(-2, 2), nt=9, ns=5)
    h = 0.5  # grid step in t
    moved = sweep(SPEC, h, mesh.vertices).reshape(9, 5, 3)
    grid = mesh.vertices.reshape(9, 5, 3)
    assert np.allclose(moved[:-1], grid[1:], atol=1e-9)


def test_d_leaves_are_flow_equivariant():
    t, t0 = 0.3, 1.1
    a = sweep(SPEC, t0, leaf_D(SPEC, t).vertices)
    b = leaf_D(SPEC, t + t0).vertices
    assert np.max(np.abs(a - b)) < 1e-9


def test_f2_constant_along_flow_orbits():
    p = line_point(SPEC, 0.7, 0.4)
    vals = [float(invariant_f2(SPEC.mu, sweep(SPEC, t, p))) for t in np.linspace(-3, 3, 13)]
    assert np.ptp(vals) < 1e-9


def test_leaves_are_disjoint_on_matching_grids():
    a = surface_sample(SPEC, 0.6, nt=15, ns=15).vertices
    b = surface_sample(SPEC, 0.62, nt=15, ns=15).vertices
    assert np.min(np.linalg.norm(a - b, axis=1)) > 0


def test_obj_round_trip_is_exact(tmp_path):
    mesh = surface_sample(SPEC, 0.5, nt=6, ns=6)
    text = mesh.to_obj()
    assert "\r" not in text and text.endswith("\n")
    back = Mesh.from_obj(text)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.faces, mesh.faces)
    assert mesh.to_csv().splitlines()[0] == "x,y,z"


def test_leaf_solve_recovers_parameter():
    for r in (0.55, 0.7, 0.9):
        for s, t in ((0.4, -1.0), (1.3, 2.0)):
            p = leaf_point(SPEC, r, s, t)
            got, note = leaf_parameter(SPEC, p)
            assert got == pytest.approx(r, abs=1e-8)
            assert note == ""


def test_region_membership():
    inside = region_membership(SPEC, leaf_point(SPEC, 0.8, 0.5, 1.0))
    assert inside.inside and inside.leaf == pytest.approx(0.8)
    outside = region_membership(SPEC, leaf_point(SPEC, 0.3, 0.5, 1.0))
    assert not outside.inside
    far = region_membership(SPEC, [0.0, -1e6, 0.0])
    assert not far.inside and far.leaf is None and "outside" in far.note


def test_leaf_solve_is_monotone():
    # F3 along the leaf family on a fixed cylinder is monotone in r (unique roots)
    from margulis.ruled_surfaces import _leaf_f3

    rs = np.linspace(0.5, 0.99, 200)
    vals = _leaf_f3(SPEC, rs, 1.0)
    assert np.all(np.diff(vals) > 0) or np.all(np.diff(vals) < 0)


def test_swept_lines_converge_to_accordant_segment():
    seg = limit_segment().sample(1025)
    d = [hausdorff_dist(swept_line_closure(SPEC, 0.6, t, 1025), seg) for t in (8.0, 16.0, 32.0, 64.0)]
    assert all(b < a for a, b in zip(d, d[1:]))
    assert d[-1] < 0.1


def test_lines_approach_segment_as_r_tends_to_one():
    from margulis.lorentz_core import line_closure

    seg = limit_segment().sample(1025)
    rs = [0.9, 0.99, 0.999, 0.9999]
    d = [hausdorff_dist(line_closure(line_point(SPEC, r, 0.0), line_direction(r), 1025), seg) for r in rs]
    assert all(b < a for a, b in zip(d, d[1:]))
