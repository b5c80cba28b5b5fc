"""Margulis invariants, crooked signs and positivity scans over a group."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._io import dumps
from .group import (
    GroupSpec,
    class_representatives,
    evaluate_levels,
    fixed_vectors,
)
from .isometry import (
    AffIso,
    IsoClass,
    classify,
    hyperbolic_eigendata,
    largest_eigenvalue,
)
from .lorentz_core import GeometryError, as_vec3, bform

TAU_FIXED = 1e-8
TAU_SIGN = 1e-9


class Sign(enum.Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"
    ZERO = "Zero"

    @classmethod
    def of(cls, value: float, tol: float) -> "Sign":
        if value > tol:
            return cls.POSITIVE
        if value < -tol:
            return cls.NEGATIVE
        return cls.ZERO

    def flipped(self) -> "Sign":
        return {Sign.POSITIVE: Sign.NEGATIVE, Sign.NEGATIVE: Sign.POSITIVE}.get(self, self)


def alpha(g: AffIso, base=None) -> float:
    """Margulis invariant ``B(g(p) - p, x0)``; independent of the base point ``p``."""
    x0 = hyperbolic_eigendata(g).x_zero
    if base is None:
        return float(bform(g.b, x0))
    p = as_vec3(base, "base point")
    return float(bform(g.apply(p) - p, x0))


def alpha_tilde(g: AffIso, v, base=None) -> float:
    """``B(g(p) - p, v)`` for a vector ``v`` fixed by the linear part."""
    v = as_vec3(v)
    if np.linalg.norm(g.A @ v - v) > TAU_FIXED * max(1.0, np.linalg.norm(g.A)) * np.linalg.norm(v):
        raise GeometryError("v is not fixed by the linear part")
    p = np.zeros(3) if base is None else as_vec3(base, "base point")
    return float(bform(g.apply(p) - p, v))


@dataclass(frozen=True)
class CDReport:
    sign: Sign
    witness: np.ndarray
    orientation_det: float
    value: float


def _fixed_direction(A: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(A - np.eye(3))
    return vt[-1]


def cd_sign(g: AffIso) -> CDReport:
    """Crooked sign: sign of the invariant on the positively oriented fixed vector.

    ``v`` is positive when ``det[v | x | L x] > 0`` for the test vector
    ``x = e3`` (nudged along ``e1`` if it happens to be fixed).
    """
    if classify(g).is_identity:
        raise GeometryError("identity has no crooked sign")
    A = g.A
    v = _fixed_direction(A)
    x = np.array([0.0, 0.0, 1.0])
    if np.linalg.norm(A @ x - x) < 1e-10 * np.linalg.norm(A):
        x = x + 1e-3 * np.array([1.0, 0.0, 0.0])
    det = float(np.linalg.det(np.column_stack([v, x, A @ x])))
    if det < 0:
        v, det = -v, -det
    val = alpha_tilde(g, v)
    tol = TAU_SIGN * (1.0 + np.linalg.norm(g.b))
    return CDReport(Sign.of(val, tol), v, det, val)


# scans ----------------------------------------------------------------------


@dataclass(frozen=True)
class ScanEntry:
    word: str
    kind: str
    lambda1: float | None = None
    alpha: float | None = None
    mu: float | None = None
    sign: str = ""

    def as_dict(self) -> dict:
        d = {"word": self.word, "class": self.kind, "sign": self.sign}
        if self.kind == IsoClass.HYPERBOLIC.value:
            d["lambda1"] = self.lambda1
            d["alpha"] = self.alpha
        elif self.kind == IsoClass.PARABOLIC.value:
            d["mu"] = self.mu
        return d


@dataclass
class ScanReport:
    max_length: int
    entries: list
    violations: list = field(default_factory=list)

    @property
    def min_alpha(self) -> float:
        vals = [e.alpha for e in self.entries if e.alpha is not None]
        return min(vals) if vals else float("nan")

    @property
    def parabolic_signs(self) -> dict:
        return {e.word: e.sign for e in self.entries if e.kind == IsoClass.PARABOLIC.value}

    @property
    def signs(self) -> list:
        return [e.sign for e in self.entries]

    @property
    def certified(self) -> bool:
        return not self.violations and all(s == Sign.POSITIVE.value for s in self.signs)

    def to_json(self) -> str:
        return dumps(
            {
                "max_length": self.max_length,
                "classes": len(self.entries),
                "min_alpha": self.min_alpha,
                "parabolic_signs": self.parabolic_signs,
                "violations": [v.as_dict() for v in self.violations],
                "entries": [e.as_dict() for e in self.entries],
            }
        )


def _class_data(G: GroupSpec, max_length: int):
    """Representatives with linear parts, translations and positive fixed vectors."""
    reps = class_representatives(G.rank, max_length)
    levels = evaluate_levels(G, max_length)
    index = {}
    for lvl in levels[1:]:
        for k, w in enumerate(map(tuple, lvl.words.tolist())):
            index[w] = (lvl, k)
    A = np.stack([index[w][0].A[index[w][1]] for w in reps])
    b = np.stack([index[w][0].b[index[w][1]] for w in reps])
    return reps, A, b


def positivity_scan(G: GroupSpec, max_length: int) -> ScanReport:
    """Signs of the invariants over all conjugacy classes of length <= max_length.

    Hyperbolic classes report ``alpha``; parabolic ones the crooked sign.
    A zero sign, an elliptic class, or a sign opposite to the majority is a
    violation: opposite signs rule out a proper action.
    """
    from .parabolic import parabolic_normal_form

    reps, A, b = _class_data(G, max_length)
    V = fixed_vectors(A)
    entries = []
    for w, Aw, bw, v in zip(reps, A, b, V):
        name = G.format_word(w)
        g = AffIso(Aw, bw)
        c = classify(Aw)
        if c.kind is IsoClass.HYPERBOLIC:
            al = float(bform(bw, v / np.sqrt(bform(v, v))))
            tol = TAU_SIGN * (1.0 + np.linalg.norm(bw))
            entries.append(
                ScanEntry(name, c.kind.value, lambda1=float(largest_eigenvalue(Aw)), alpha=al,
                          sign=Sign.of(al, tol).value)
            )
        elif c.kind is IsoClass.PARABOLIC:
            rep = cd_sign(g)
            mu = None
            if rep.sign is not Sign.ZERO:
                mu = float(parabolic_normal_form(g).mu)
            entries.append(ScanEntry(name, c.kind.value, mu=mu, sign=rep.sign.value))
        else:
            entries.append(ScanEntry(name, c.kind.value, sign=Sign.ZERO.value))
    pos = sum(e.sign == Sign.POSITIVE.value for e in entries)
    neg = sum(e.sign == Sign.NEGATIVE.value for e in entries)
    majority = Sign.POSITIVE.value if pos >= neg else Sign.NEGATIVE.value
    violations = [e for e in entries if e.sign != majority]
    return ScanReport(max_length, entries, violations)


# translation search -------------------------------------------------------


def _invariant_rows(G: GroupSpec, max_length: int):
    """Rows ``r_w`` with ``invariant_w = r_w . beta`` for stacked translations ``beta``."""
    base = G.linear_part()
    reps, A, _ = _class_data(base, max_length)
    V = fixed_vectors(A)
    kinds = [classify(a).kind for a in A]
    scale = np.ones(len(reps))
    for k, (a, v, kind) in enumerate(zip(A, V, kinds)):
        if kind is IsoClass.HYPERBOLIC:
            # alpha per unit translation length
            V[k] = v / np.sqrt(bform(v, v))
            scale[k] = np.log(largest_eigenvalue(a))
        else:
            V[k] = v / np.linalg.norm(v)
    dim = 3 * G.rank
    rows = np.zeros((len(reps), dim))
    for j in range(dim):
        trans = np.zeros((G.rank, 3))
        trans[j // 3, j % 3] = 1.0
        _, _, bj = _class_data(base.with_translations(trans), max_length)
        rows[:, j] = bform(bj, V) / scale
    return rows


def search_translations(G: GroupSpec, seed: int, max_length: int = 6,
                        samples: int = 400, refine_steps: int = 600):
    """Seeded random search for unit translations maximising the least invariant."""
    rows = _invariant_rows(G, max_length)
    rng = np.random.default_rng(seed)
    dim = rows.shape[1]

    def score(beta):
        return float(np.min(rows @ beta))

    cand = rng.normal(size=(samples, dim))
    cand /= np.linalg.norm(cand, axis=1, keepdims=True)
    vals = np.min(cand @ rows.T, axis=1)
    best = cand[int(np.argmax(vals))]
    best_val = score(best)
    step = 0.5
    for _ in range(refine_steps):
        trial = best + step * rng.normal(size=dim)
        trial /= np.linalg.norm(trial)
        v = score(trial)
        if v > best_val:
            best, best_val = trial, v
        else:
            step *= 0.99
    return best.reshape(G.rank, 3), best_val
