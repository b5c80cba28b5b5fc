"""Command-line interface.

Every command prints a human-readable summary, or JSON with ``--json``.
Files are written only where ``--out`` (or ``--save-group``) asks for them.
Exit status: 0 on success, 2 for bad input, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ._io import dumps, fmt
from .group import DEFAULT_SEED, GroupSpec, KleinDisk, example_group
from .lorentz_core import GeometryError, NumericalError

BUILTIN_GROUPS = ("PuncturedTorus", "ThricePunctured")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str, n: int | None = None, name: str = "value") -> list:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise GeometryError(f"{name} must be comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise GeometryError(f"{name} needs {n} numbers, got {len(vals)}")
    return vals


def _load_group(args) -> GroupSpec:
    if args.group is None:
        raise GeometryError("--group is required")
    if args.group in BUILTIN_GROUPS:
        return example_group(args.group, args.seed)
    try:
        text = Path(args.group).read_text()
    except OSError as exc:
        raise GeometryError(f"cannot read group file: {exc}") from exc
    return GroupSpec.from_json(text)


def _emit(args, data: dict, lines: list | None = None) -> None:
    if args.json:
        print(dumps(data))
        return
    for line in lines if lines is not None else _plain(data):
        print(line)


def _plain(data: dict, prefix: str = "") -> list:
    out = []
    for k, v in data.items():
        if isinstance(v, dict):
            out += _plain(v, f"{prefix}{k}.")
        elif isinstance(v, (list, tuple, np.ndarray)):
            vals = " ".join(_scalar(x) for x in np.ravel(np.asarray(v, dtype=object)))
            out.append(f"{prefix}{k}: {vals}")
        else:
            out.append(f"{prefix}{k}: {_scalar(v)}")
    return out


def _scalar(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise GeometryError(f"cannot write {path}: {exc}") from exc


def _word(args, G: GroupSpec):
    if not args.word:
        raise GeometryError("--word is required")
    return G.parse_word(args.word)


# commands -------------------------------------------------------------------


def cmd_classify(args) -> None:
    from .invariants import alpha
    from .isometry import IsoClass, classify, hyperbolic_eigendata
    from .parabolic import parabolic_normal_form

    G = _load_group(args)
    w = _word(args, G)
    g = G.evaluate(w)
    c = classify(g)
    data = {"word": G.format_word(w), "class": c.kind.value.lower(), "trace": c.trace,
            "identity": c.is_identity}
    if c.kind is IsoClass.HYPERBOLIC:
        d = hyperbolic_eigendata(g)
        data.update(lambda1=d.lambda1, length_klein=d.length_klein,
                    length_doubled=d.length_doubled, alpha=alpha(g))
    elif c.kind is IsoClass.PARABOLIC and not c.is_identity:
        try:
            nf = parabolic_normal_form(g)
            data.update(mu=nf.mu, t=nf.t, crooked_sign=nf.crooked_sign)
        except GeometryError as exc:
            data.update(note=str(exc))
    _emit(args, data)


def cmd_frame(args) -> None:
    from .parabolic import canonical_frame, parabolic_normal_form

    if args.nilpotent:
        N = np.array(_floats(args.nilpotent, 9, "--nilpotent")).reshape(3, 3)
        fr = canonical_frame(N)
        data = {}
    else:
        G = _load_group(args)
        w = _word(args, G)
        nf = parabolic_normal_form(G.evaluate(w))
        fr = nf.frame
        data = {"word": G.format_word(w), "mu": nf.mu, "t": nf.t, "origin": nf.origin.tolist(),
                "crooked_sign": nf.crooked_sign}
    data.update(a=fr.a.tolist(), b=fr.b.tolist(), c=fr.c.tolist(), orientation=fr.orientation,
                identities=fr.identities())
    _emit(args, data)


def cmd_orbit(args) -> None:
    from .parabolic import orbit_curve, parabolic_normal_form

    if args.n < 2:
        raise GeometryError("--n must be at least 2")
    ts = np.linspace(args.t_min, args.t_max, args.n)
    if args.group:
        G = _load_group(args)
        nf = parabolic_normal_form(G.evaluate(_word(args, G)))
        pts = nf.from_frame(orbit_curve(nf.mu, ts))
    else:
        start = _floats(args.point, 3, "--point") if args.point else None
        pts = orbit_curve(args.mu, ts, start)
    csv = "t,x,y,z\n" + "".join(f"{fmt(t)},{fmt(x)},{fmt(y)},{fmt(z)}\n" for t, (x, y, z) in zip(ts, pts))
    if args.out:
        _write(args.out, csv)
    data = {"points": len(ts), "first": pts[0].tolist(), "last": pts[-1].tolist()}
    if args.out:
        data["out"] = args.out
    if args.json or args.out:
        _emit(args, data)
    else:
        sys.stdout.write(csv)


def cmd_invariants(args) -> None:
    from .invariants import alpha, alpha_tilde, cd_sign
    from .isometry import IsoClass, classify, hyperbolic_eigendata
    from .parabolic import parabolic_normal_form

    G = _load_group(args)
    w = _word(args, G)
    g = G.evaluate(w)
    kind = classify(g).kind
    data = {"word": G.format_word(w), "class": kind.value.lower()}
    cd = cd_sign(g)
    data.update(cd_sign=cd.sign.value, cd_value=cd.value, fixed_vector=cd.witness.tolist())
    if kind is IsoClass.HYPERBOLIC:
        d = hyperbolic_eigendata(g)
        a = alpha(g)
        data.update(alpha=a, length_klein=d.length_klein, normalized_alpha=a / d.length_klein)
    elif kind is IsoClass.PARABOLIC:
        nf = parabolic_normal_form(g)
        data.update(mu=nf.mu, t=nf.t, crooked_sign=nf.crooked_sign,
                    alpha_tilde_c=alpha_tilde(g, nf.frame.c))
    _emit(args, data)


def cmd_scan(args) -> None:
    from .invariants import positivity_scan

    G = _load_group(args)
    report = positivity_scan(G, args.maxlen)
    if args.out:
        _write(args.out, report.to_json() + "\n")
    if args.save_group:
        _write(args.save_group, G.to_json())
    data = {"max_length": report.max_length, "classes": len(report.entries),
            "min_alpha": report.min_alpha, "violations": len(report.violations),
            "certified": report.certified, "parabolic_signs": report.parabolic_signs}
    _emit(args, data)


def cmd_cocycle(args) -> None:
    from .flow_bundle import cocycle_decompose, integrate_cocycle

    G = _load_group(args)
    w = _word(args, G)
    tri = cocycle_decompose(G, w)
    data = {"word": tri.word, "alpha": tri.alpha, "length_klein": tri.length_klein,
            "b_plus": tri.b_plus, "b_zero": tri.b_zero, "b_minus": tri.b_minus,
            "norms": tri.euclidean_norms}
    if args.steps:
        q = integrate_cocycle(G, w, steps=args.steps)
        data["quadrature"] = {"steps": q.steps, "recovered": q.total.tolist(),
                              "direct": q.direct.tolist(), "error": q.error,
                              "richardson": q.richardson,
                              "equivariance_residual": q.equivariance_residual}
    _emit(args, data)


def _fit_exponent(R: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(R), np.log(y), 1)[0])


def cmd_cusp_study(args) -> None:
    from .flow_bundle import cusp_projections, cusp_segment_integrals

    if not 1.0 < args.rmin < args.rmax or args.n < 2:
        raise GeometryError("need 1 < rmin < rmax and n >= 2")
    Rs = np.geomspace(args.rmin, args.rmax, args.n)
    rows = []
    for R in Rs:
        ci = cusp_segment_integrals(R, args.k, args.side)
        p = cusp_projections(R, args.k, args.side)
        rows.append((R, args.k, p.norm_zero, p.norm_minus, p.norm_plus,
                     float(np.linalg.norm(ci.b_minus)), ci.alpha_contrib))
    arr = np.array(rows)
    if args.out:
        lines = ["R,k,norm0,normm,normp,bminus_norm,alpha_contrib"]
        lines += [",".join(fmt(v) for v in row) for row in rows]
        _write(args.out, "\n".join(lines) + "\n")
    data = {"samples": len(rows),
            "exponent_norm0": _fit_exponent(arr[:, 0], arr[:, 2]),
            "exponent_normm": _fit_exponent(arr[:, 0], arr[:, 3]),
            "normp_range": [float(arr[:, 4].min()), float(arr[:, 4].max())],
            "max_bminus_times_R": float(np.max(arr[:, 5] * arr[:, 0])),
            "max_abs_alpha": float(np.max(np.abs(arr[:, 6])))}
    _emit(args, data)


def cmd_limits(args) -> None:
    from .flow_bundle import band_summary, direction_limit_experiment

    G = _load_group(args)
    cx, cy, r = _floats(args.khat, 3, "--khat")
    rows = direction_limit_experiment(G, args.maxlen, KleinDisk((cx, cy), r), args.min_length)
    if args.out:
        lines = ["word,length,l_klein,b_plus,b_zero,b_minus,norm_b_E,dist_to_zeta"]
        lines += [
            f"{r.word},{r.length},{fmt(r.l_klein)},{fmt(r.b_plus)},{fmt(r.b_zero)},"
            f"{fmt(r.b_minus)},{fmt(r.norm_b_E)},{fmt(r.dist_to_zeta)}"
            for r in rows
        ]
        _write(args.out, "\n".join(lines) + "\n")
    bands = band_summary(rows)
    data = {"rows": len(rows), "bands": {str(k): v for k, v in bands.items()}}
    lines = [f"rows: {len(rows)}", "length count max_norm_bminus min_norm_b max_dist_to_zeta"]
    lines += [
        f"{n} {b['count']} {fmt(b['max_norm_bminus'])} {fmt(b['min_norm_b'])} {fmt(b['max_dist_to_zeta'])}"
        for n, b in bands.items()
    ]
    _emit(args, data, lines)


def _ruled_spec(args):
    from .ruled_surfaces import RuledSpec

    return RuledSpec(mu=args.mu, kappa=(args.k1, args.k2), s0=args.s0, r0=args.r0)


def cmd_surface(args) -> None:
    from .ruled_surfaces import embeddedness_check, leaf_D, surface_sample

    spec = _ruled_spec(args)
    t_range = tuple(_floats(args.t_range, 2, "--t-range"))
    s_range = tuple(_floats(args.s_range, 2, "--s-range"))
    if args.leaf_t is None:
        mesh = surface_sample(spec, args.r, t_range, s_range, args.grid, args.grid)
    else:
        mesh = leaf_D(spec, args.leaf_t, None, s_range, args.grid, args.grid)
    if args.out:
        text = mesh.to_csv() if args.out.lower().endswith(".csv") else mesh.to_obj()
        _write(args.out, text)
    cert = embeddedness_check(spec)
    data = {"vertices": len(mesh.vertices), "faces": len(mesh.faces),
            "embedded": cert.ok, "bound_margin": cert.bound_margin,
            "min_triple_product": cert.min_triple_product, "min_f3_gap": cert.min_f3_gap}
    if args.out:
        data["out"] = args.out
    _emit(args, data)


def cmd_region(args) -> None:
    from .ruled_surfaces import region_membership

    spec = _ruled_spec(args)
    if not args.point:
        raise GeometryError("--point is required")
    m = region_membership(spec, _floats(args.point, 3, "--point"))
    data = {"inside": m.inside, "leaf": m.leaf, "note": m.note}
    _emit(args, data)


# parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="print machine-readable JSON")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="seed for the translation search of built-in groups")
    common.add_argument("--out", help="output file")

    grp = _Parser(add_help=False)
    grp.add_argument("--group", help=f"group JSON file or one of {', '.join(BUILTIN_GROUPS)}")
    grp.add_argument("--word", help="word in the generators; uppercase letters are inverses")

    ruled = _Parser(add_help=False)
    ruled.add_argument("--mu", type=float, default=1.0)
    ruled.add_argument("--k1", type=float, default=0.25)
    ruled.add_argument("--k2", type=float, default=0.75)
    ruled.add_argument("--s0", type=float, default=0.1)
    ruled.add_argument("--r0", type=float, default=0.5)

    p = _Parser(prog="margulis", description="Computations with proper affine Lorentz actions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("classify", parents=[common, grp], help="classify a group element")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("frame", parents=[common, grp], help="canonical parabolic frame")
    s.add_argument("--nilpotent", help="nine comma-separated entries of a nilpotent, row major")
    s.set_defaults(func=cmd_frame)

    s = sub.add_parser("orbit", parents=[common, grp], help="orbit polyline of a parabolic flow")
    s.add_argument("--mu", type=float, default=1.0)
    s.add_argument("--t-min", type=float, default=-2.0)
    s.add_argument("--t-max", type=float, default=2.0)
    s.add_argument("--n", type=int, default=101)
    s.add_argument("--point", help="start point x,y,z in frame coordinates (default: origin)")
    s.set_defaults(func=cmd_orbit)

    s = sub.add_parser("invariants", parents=[common, grp], help="Margulis and crooked invariants")
    s.set_defaults(func=cmd_invariants)

    s = sub.add_parser("scan", parents=[common, grp], help="positivity scan over conjugacy classes")
    s.add_argument("--maxlen", type=int, default=6)
    s.add_argument("--save-group", help="write the group JSON (with certification) here")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("cocycle", parents=[common, grp], help="flat-bundle cocycle decomposition")
    s.add_argument("--steps", type=int, default=0, help="also recover b_g by quadrature")
    s.set_defaults(func=cmd_cocycle)

    s = sub.add_parser("cusp-study", parents=[common], help="cusp scaling sweep")
    s.add_argument("--rmin", type=float, default=2.0)
    s.add_argument("--rmax", type=float, default=100.0)
    s.add_argument("--n", type=int, default=40)
    s.add_argument("--k", type=float, default=1.0)
    s.add_argument("--side", type=int, choices=(-1, 1), default=-1)
    s.set_defaults(func=cmd_cusp_study)

    s = sub.add_parser("limits", parents=[common, grp], help="direction-limit experiment")
    s.add_argument("--maxlen", type=int, default=8)
    s.add_argument("--min-length", type=int, default=1)
    s.add_argument("--khat", default="0,0,0.5", help="disk centre x, y (Klein chart) and radius")
    s.set_defaults(func=cmd_limits)

    s = sub.add_parser("surface", parents=[common, ruled], help="export a ruled surface mesh")
    s.add_argument("--r", type=float, default=0.5, help="leaf parameter in (0, 1)")
    s.add_argument("--leaf-t", type=float, help="export the transverse leaf at this time instead")
    s.add_argument("--t-range", default="-2,2")
    s.add_argument("--s-range", default="-2,2")
    s.add_argument("--grid", type=int, default=41)
    s.set_defaults(func=cmd_surface)

    s = sub.add_parser("region", parents=[common, ruled], help="membership in the foliated region")
    s.add_argument("--point", help="x,y,z in frame coordinates")
    s.set_defaults(func=cmd_region)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
