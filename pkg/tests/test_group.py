import itertools

import numpy as np
import pytest

from margulis.group import (
    CERTIFY_DEPTH,
    DEFAULT_SEED,
    Generator,
    GroupSpec,
    KleinDisk,
    alphabet,
    boundary_fixed_points,
    class_representatives,
    conjugacy_representative,
    enumerate_words,
    evaluate_levels,
    example_group,
    fixed_vectors,
    fuchsian_group,
    gamma_K_filter,
    invert_word,
    is_cyclically_reduced,
    reduce_word,
    word_count,
)
from margulis.isometry import AffIso, IsoClass, classify, from_sl2
from margulis.lorentz_core import GeometryError, bform


def _brute_force_words(rank, n):
    letters = alphabet(rank)
    return [w for w in itertools.product(letters, repeat=n) if reduce_word(w) == w]


@pytest.mark.parametrize("rank, n", [(2, 1), (2, 3), (2, 5), (3, 3)])
def test_enumeration_matches_brute_force(rank, n):
    words = list(enumerate_words(rank, n))
    assert words == _brute_force_words(rank, n)  # same set, same lexicographic order
    assert len(words) == word_count(rank, n)


def test_reduce_and_invert():
    assert reduce_word((1, 2, -2, -1, 1)) == (1,)
    assert invert_word((1, -2, 2)) == (-2, 2, -1)
    with pytest.raises(GeometryError):
        reduce_word((0,))


def test_conjugacy_representatives_are_class_invariants():
    w = (1, 2, -1, 2, 2)
    reps = {conjugacy_representative(w[k:] + w[:k]) for k in range(len(w))}
    reps.add(conjugacy_representative(invert_word(w)))
    assert len(reps) == 1
    assert is_cyclically_reduced(w) and not is_cyclically_reduced((1, 2, -1))


def test_class_representatives_count():
    # closed curves of length <= 2 in F2 up to conjugacy and inversion:
    # a, b, aa, ab, aB, bb
    reps = class_representatives(2, 2)
    assert len(reps) == 6


def test_parse_and_format(torus):
    w = torus.parse_word("abAB")
    assert w == (1, 2, -1, -2)
    assert torus.format_word(w) == "abAB"
    assert torus.parse_word("aAb") == (2,)
    with pytest.raises(GeometryError):
        torus.parse_word("abc")


def test_evaluate_is_left_to_right(torus):
    g = torus.evaluate("ab")
    a, b = torus.generators[0].iso, torus.generators[1].iso
    p = np.array([0.3, -0.2, 1.1])
    assert np.allclose(g(p), a(b(p)))


def test_json_round_trip_is_exact(torus):
    text = torus.to_json()
    G2 = GroupSpec.from_json(text)
    for g, h in zip(torus.generators, G2.generators):
        assert np.array_equal(g.iso.A, h.iso.A) and np.array_equal(g.iso.b, h.iso.b)
    assert G2.certification == torus.certification
    assert G2.to_json() == text


@pytest.mark.parametrize("text", ["", "{}", '{"generators": [{"label": "a"}]}', "[1, 2]"])
def test_malformed_json(text):
    with pytest.raises(GeometryError):
        GroupSpec.from_json(text)


def test_group_validation():
    a = AffIso.linear(from_sl2(np.diag([2.0, 0.5])))
    rot = AffIso.linear(from_sl2([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(GeometryError):
        GroupSpec((Generator("a", a),))
    with pytest.raises(GeometryError):
        GroupSpec((Generator("a", a), Generator("a", a)))
    with pytest.raises(GeometryError):
        GroupSpec((Generator("a", a), Generator("B", a)))
    with pytest.raises(GeometryError):
        GroupSpec((Generator("a", a), Generator("b", rot)))


def test_levels_match_direct_evaluation(torus):
    levels = evaluate_levels(torus, 9)
    for n in (1, 4, 9):
        lvl = levels[n]
        assert [tuple(w) for w in lvl.words.tolist()] == list(enumerate_words(2, n))
        for k in range(0, len(lvl.words), max(1, len(lvl.words) // 25)):
            g = torus.evaluate(tuple(lvl.words[k].tolist()))
            scale = max(1.0, np.linalg.norm(g.A))
            assert np.allclose(lvl.A[k], g.A, atol=1e-9 * scale)
            assert np.allclose(lvl.b[k], g.b, atol=1e-9 * scale * max(1, np.linalg.norm(g.b)))


def test_fixed_vectors_against_svd(torus):
    lvl = evaluate_levels(torus, 4)[4]
    V = fixed_vectors(lvl.A)
    for A, v in zip(lvl.A, V):
        _, _, vt = np.linalg.svd(A - np.eye(3))
        u = vt[-1]
        cos = abs(u @ v) / np.linalg.norm(v)
        assert cos == pytest.approx(1.0, abs=1e-9)
        k = np.array([0.0, 0.0, 1.0])
        assert np.linalg.det(np.column_stack([v, k, A @ k])) > 0


def test_boundary_fixed_points(torus):
    fp = boundary_fixed_points(torus.evaluate("a"))
    assert fp.attractor.is_ideal and fp.attractor != fp.repeller
    par = boundary_fixed_points(torus.evaluate("abAB"))
    assert np.allclose(par.attractor.v, par.repeller.v)
    x = par.attractor.v[:3]
    assert abs(bform(x, x)) < 1e-12


def test_klein_disk_filter(torus):
    words = [w for n in range(1, 5) for w in enumerate_words(2, n)]
    big = gamma_K_filter(torus, words, KleinDisk((0.0, 0.0), 5.0))
    small = gamma_K_filter(torus, words, KleinDisk((0.0, 0.0), 0.3))
    assert set(small) <= set(big)
    assert (1, 2, -1, -2) not in big  # parabolic
    with pytest.raises(GeometryError):
        KleinDisk((1.0, 0.0), 1.0)


def test_fuchsian_linear_parts():
    G = fuchsian_group("PuncturedTorus")
    comm = G.evaluate("abAB")
    # commutator is parabolic with SL(2) trace -2
    assert classify(comm).kind is IsoClass.PARABOLIC
    a, b = (np.array(m) for m in ([[1, 1], [1, 2]], [[1, -1], [-1, 2]]))
    ai, bi = np.linalg.inv(a), np.linalg.inv(b)
    assert np.trace(a @ b @ ai @ bi) == pytest.approx(-2.0)
    with pytest.raises(GeometryError):
        fuchsian_group("nonexistent")


def test_example_group_is_deterministic_and_certified(torus, pants):
    assert torus.certification["certified"] and pants.certification["certified"]
    assert torus.certification["seed"] == DEFAULT_SEED
    assert torus.certification["scan_depth"] == CERTIFY_DEPTH
    again = example_group("PuncturedTorus", DEFAULT_SEED)
    assert again.to_json() == torus.to_json()


def test_negated_group_is_conjugate_by_minus_identity(torus):
    neg = torus.negated()
    g, h = torus.evaluate("abA"), neg.evaluate("abA")
    assert np.allclose(g.A, h.A) and np.allclose(g.b, -h.b)
