"""Finitely generated free groups of affine Lorentz isometries.

Words are tuples of signed generator indices (``+i`` for generator ``i``,
``-i`` for its inverse, ``i >= 1``).  In strings a lowercase label is a
generator and its uppercase a generator inverse, so ``"abA"`` is
``a b a^{-1}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .isometry import (
    REPROJECT_EVERY,
    AffIso,
    HyperbolicData,
    IsoClass,
    classify,
    from_sl2,
    hyperbolic_eigendata,
)
from ._io import dumps
from .lorentz_core import J_STANDARD, DirPoint, GeometryError, bform, direction

Word = tuple


@dataclass(frozen=True)
class Generator:
    label: str
    iso: AffIso


@dataclass(frozen=True)
class GroupSpec:
    """Labelled generators of a free group acting on Minkowski space."""

    generators: tuple
    certification: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        gens = tuple(self.generators)
        if len(gens) < 2:
            raise GeometryError("a group needs at least two generators")
        labels = [g.label for g in gens]
        if len(set(labels)) != len(labels):
            raise GeometryError("generator labels must be unique")
        for g in gens:
            if len(g.label) != 1 or not g.label.islower():
                raise GeometryError(f"label {g.label!r} must be one lowercase letter")
            c = classify(g.iso)
            if c.kind is IsoClass.ELLIPTIC:
                raise GeometryError(f"generator {g.label} is elliptic")
        object.__setattr__(self, "generators", gens)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def labels(self) -> list:
        return [g.label for g in self.generators]

    def letter(self, i: int) -> AffIso:
        g = self.generators[abs(i) - 1].iso
        return g if i > 0 else g.inverse()

    def with_translations(self, translations: Sequence) -> "GroupSpec":
        gens = [
            Generator(g.label, AffIso(g.iso.A, np.asarray(t, float)))
            for g, t in zip(self.generators, translations)
        ]
        return GroupSpec(tuple(gens))

    def negated(self) -> "GroupSpec":
        """Same linear parts, translations ``-b``: conjugation by ``-I``."""
        return self.with_translations([-g.iso.b for g in self.generators])

    def linear_part(self) -> "GroupSpec":
        return self.with_translations([np.zeros(3)] * self.rank)

    # words -----------------------------------------------------------------

    def parse_word(self, text: str) -> Word:
        labels = self.labels
        out = []
        for ch in text:
            if ch.lower() not in labels:
                raise GeometryError(f"unknown generator {ch!r} in word {text!r}")
            i = labels.index(ch.lower()) + 1
            out.append(i if ch.islower() else -i)
        return reduce_word(out)

    def format_word(self, word: Word) -> str:
        labels = self.labels
        return "".join(labels[abs(i) - 1] if i > 0 else labels[abs(i) - 1].upper() for i in word)

    def evaluate(self, word) -> AffIso:
        """Left-to-right composition ``g_{w1} o g_{w2} o ...``."""
        if isinstance(word, str):
            word = self.parse_word(word)
        result = AffIso.identity()
        for i in reduce_word(word):
            result = result.compose(self.letter(i))
        return result

    # serialisation ---------------------------------------------------------

    def to_json(self) -> str:
        data = {
            "generators": [
                {"label": g.label, "A": g.iso.A.tolist(), "b": g.iso.b.tolist()}
                for g in self.generators
            ]
        }
        if self.certification:
            data["certification"] = self.certification
        return dumps(data) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroupSpec":
        try:
            data = json.loads(text)
            gens = tuple(
                Generator(str(g["label"]), AffIso(np.array(g["A"], float), np.array(g["b"], float)))
                for g in data["generators"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, GeometryError):
                raise
            raise GeometryError(f"malformed group description: {exc}") from exc
        return cls(gens, dict(data.get("certification", {})))


def reduce_word(word) -> Word:
    out: list = []
    for i in word:
        i = int(i)
        if i == 0:
            raise GeometryError("generator index 0 is not allowed")
        if out and out[-1] == -i:
            out.pop()
        else:
            out.append(i)
    return tuple(out)


def invert_word(word: Word) -> Word:
    return tuple(-i for i in reversed(word))


def alphabet(rank: int) -> list:
    """Letters in lexicographic order ``a, A, b, B, ...``."""
    out = []
    for i in range(1, rank + 1):
        out += [i, -i]
    return out


def letter_key(i: int) -> int:
    return 2 * (abs(i) - 1) + (0 if i > 0 else 1)


def word_count(rank: int, length: int) -> int:
    if length == 0:
        return 1
    return 2 * rank * (2 * rank - 1) ** (length - 1)


def enumerate_words(rank: int, length: int) -> Iterator[Word]:
    """Freely reduced words of the given length in lexicographic order."""
    letters = alphabet(rank)

    def rec(prefix):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for i in letters:
            if prefix and prefix[-1] == -i:
                continue
            prefix.append(i)
            yield from rec(prefix)
            prefix.pop()

    yield from rec([])


def is_cyclically_reduced(word: Word) -> bool:
    return len(word) <= 1 or word[0] != -word[-1]


def conjugacy_representative(word: Word) -> Word:
    """Lexicographically least rotation of the word or of its inverse."""
    best = None
    for w in (word, invert_word(word)):
        for k in range(len(w)):
            r = w[k:] + w[:k]
            key = [letter_key(i) for i in r]
            if best is None or key < best[0]:
                best = (key, r)
    return best[1] if best else ()


def class_representatives(rank: int, max_length: int) -> list:
    """One representative per conjugacy class (up to inversion) of length <= max_length."""
    out = []
    for n in range(1, max_length + 1):
        for w in enumerate_words(rank, n):
            if is_cyclically_reduced(w) and conjugacy_representative(w) == w:
                out.append(w)
    return out


# batched evaluation --------------------------------------------------------


def _reproject_batch(A: np.ndarray) -> np.ndarray:
    eye = np.eye(3)
    for _ in range(2):
        E = J_STANDARD @ np.transpose(A, (0, 2, 1)) @ J_STANDARD @ A - eye
        A = A @ (eye - 0.5 * E)
    return A


@dataclass
class WordLevel:
    """All reduced words of one length with their linear and translation parts."""

    words: np.ndarray  # (n, length) signed indices
    A: np.ndarray  # (n, 3, 3)
    b: np.ndarray  # (n, 3)


def evaluate_levels(G: GroupSpec, max_length: int) -> list:
    """Word levels ``0..max_length`` in lexicographic order, built by prefix reuse."""
    letters = alphabet(G.rank)
    LA = {i: G.letter(i).A for i in letters}
    Lb = {i: G.letter(i).b for i in letters}
    levels = [WordLevel(np.zeros((1, 0), int), np.eye(3)[None], np.zeros((1, 3)))]
    for n in range(1, max_length + 1):
        prev = levels[-1]
        last = prev.words[:, -1] if n > 1 else np.zeros(1, int)
        parts = []
        for k, i in enumerate(letters):
            idx = np.nonzero(last != -i)[0]
            parts.append((idx, k, i))
        rows = np.concatenate([p[0] for p in parts])
        keys = np.concatenate([np.full(len(p[0]), p[1]) for p in parts])
        order = np.lexsort((keys, rows))
        rows, keys = rows[order], keys[order]
        letter_arr = np.array(letters)[keys]
        Aletter = np.stack([LA[i] for i in letters])[keys]
        bletter = np.stack([Lb[i] for i in letters])[keys]
        Ap = prev.A[rows]
        A = Ap @ Aletter
        b = np.einsum("nij,nj->ni", Ap, bletter) + prev.b[rows]
        if n % REPROJECT_EVERY == 0:
            A = _reproject_batch(A)
        words = np.concatenate([prev.words[rows], letter_arr[:, None]], axis=1)
        levels.append(WordLevel(words, A, b))
    return levels


def fixed_vectors(A: np.ndarray) -> np.ndarray:
    """Fixed vectors of a batch of SO(2,1) matrices from ``A - A^{-1}``.

    The skew-adjoint part acts as ``y -> v x y`` (Lorentz cross product);
    the sign is chosen so that ``det[v | k | A k] > 0`` with ``k = e3``.
    """
    Ainv = J_STANDARD @ np.transpose(A, (0, 2, 1)) @ J_STANDARD
    X = A - Ainv
    S = J_STANDARD @ X  # Euclidean cross-product matrix of v
    v = np.stack([S[:, 2, 1] - S[:, 1, 2], S[:, 0, 2] - S[:, 2, 0], S[:, 1, 0] - S[:, 0, 1]], axis=1) / 2
    k = np.array([0.0, 0.0, 1.0])
    Ak = A[:, :, 2]
    det = np.einsum("ni,ni->n", v, np.cross(np.broadcast_to(k, Ak.shape), Ak))
    return v * np.where(det < 0, -1.0, 1.0)[:, None]


# fixed points and filters --------------------------------------------------


@dataclass(frozen=True)
class FixedPoints:
    attractor: DirPoint
    repeller: DirPoint


def boundary_fixed_points(g: AffIso) -> FixedPoints:
    c = classify(g)
    if c.kind is IsoClass.HYPERBOLIC:
        d = hyperbolic_eigendata(g)
        return FixedPoints(direction(d.x_plus), direction(d.x_minus))
    if c.kind is IsoClass.PARABOLIC:
        from .parabolic import canonical_frame, unipotent_log

        fr = canonical_frame(unipotent_log(g.A))
        p = direction(fr.c / fr.c[2])
        return FixedPoints(p, p)
    raise GeometryError("elliptic elements have no ideal fixed points")


@dataclass(frozen=True)
class KleinDisk:
    """A closed hyperbolic disk with centre given in the Klein chart ``x3 = 1``."""

    centre: tuple
    radius: float

    def __post_init__(self) -> None:
        cx, cy = (float(v) for v in self.centre)
        if cx * cx + cy * cy >= 1.0:
            raise GeometryError("disk centre must lie inside the Klein disk")
        if not self.radius > 0:
            raise GeometryError("disk radius must be positive")
        object.__setattr__(self, "centre", (cx, cy))

    @property
    def hyperboloid_centre(self) -> np.ndarray:
        v = np.array([self.centre[0], self.centre[1], 1.0])
        return v / np.sqrt(-bform(v, v))


def axis_distance(centre: np.ndarray, x_zero: np.ndarray) -> np.ndarray:
    """Hyperbolic distance from a hyperboloid point to the geodesic ``x_zero^perp``."""
    return np.arcsinh(np.abs(bform(centre, x_zero)))


def gamma_K_filter(G: GroupSpec, words: Sequence[Word], disk: KleinDisk) -> list:
    """Hyperbolic words whose axis meets the disk."""
    p = disk.hyperboloid_centre
    keep = []
    for w in words:
        g = G.evaluate(w)
        if classify(g).kind is not IsoClass.HYPERBOLIC:
            continue
        if axis_distance(p, hyperbolic_eigendata(g).x_zero) <= disk.radius:
            keep.append(tuple(w))
    return keep


# example groups -------------------------------------------------------------

PUNCTURED_TORUS_SL2 = (
    np.array([[1.0, 1.0], [1.0, 2.0]]),
    np.array([[1.0, -1.0], [-1.0, 2.0]]),
)
THRICE_PUNCTURED_SL2 = (
    np.array([[1.0, 2.0], [0.0, 1.0]]),
    np.array([[1.0, 0.0], [-2.0, 1.0]]),
)

DEFAULT_SEED = 20240607
SEARCH_DEPTH = 6
CERTIFY_DEPTH = 8


def fuchsian_group(kind: str) -> GroupSpec:
    """Linear part of an example group, with zero translations."""
    mats = {"PuncturedTorus": PUNCTURED_TORUS_SL2, "ThricePunctured": THRICE_PUNCTURED_SL2}
    if kind not in mats:
        raise GeometryError(f"unknown example group {kind!r}")
    gens = tuple(
        Generator(label, AffIso.linear(from_sl2(m))) for label, m in zip("ab", mats[kind])
    )
    return GroupSpec(gens)


_EXAMPLE_CACHE: dict = {}


def example_group(kind: str = "PuncturedTorus", seed: int = DEFAULT_SEED) -> GroupSpec:
    """Example group with translations found by a seeded search, then certified.

    The search maximises the least normalised Margulis invariant over
    conjugacy classes of length <= 6; the result is certified by a scan of
    all classes of length <= 8, whose outcome is stored in ``certification``.
    """
    key = (kind, seed)
    if key not in _EXAMPLE_CACHE:
        from .invariants import positivity_scan, search_translations

        base = fuchsian_group(kind)
        trans, score = search_translations(base, seed=seed, max_length=SEARCH_DEPTH)
        G = base.with_translations(trans)
        report = positivity_scan(G, CERTIFY_DEPTH)
        cert = {
            "kind": kind,
            "seed": int(seed),
            "search_depth": SEARCH_DEPTH,
            "search_score": float(score),
            "scan_depth": CERTIFY_DEPTH,
            "violations": len(report.violations),
            "min_alpha": float(report.min_alpha),
            "certified": bool(report.certified),
        }
        _EXAMPLE_CACHE[key] = GroupSpec(G.generators, cert)
    return _EXAMPLE_CACHE[key]
