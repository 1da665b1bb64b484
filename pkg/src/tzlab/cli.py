"""Command-line front end.

Spec strings: "4x4" or "4x6x2" build tori, "cycle:N" / "path:N" build
graphs ("cycle:N" with even N also serves as a torus), "file:PATH" loads
the JSON graph dump.  Outputs are written atomically (temp file + rename);
a JSON summary always goes to stdout.  Exit codes: 0 success, 2 validation
error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NumericError, TzlabError, ValidationError
from . import clusterexp, contour, dynamics, exactpoly, lattice, qseries, transfer


def _fmt(x: float) -> float:
    """Round-trip exact float for JSON (17 significant digits)."""
    return float(f"{x:.17g}")


def _c2pair(z: complex):
    return [_fmt(z.real), _fmt(z.imag)]


def parse_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValidationError(f"cannot parse complex number from {text!r}")


def parse_torus(text: str) -> lattice.Torus:
    if text.startswith("cycle:"):
        return lattice.build_torus([int(text.split(":", 1)[1])])
    sides = text.lower().split("x")
    return lattice.build_torus([int(s) for s in sides])


def parse_graph(text: str) -> lattice.SiteGraph:
    if text.startswith("cycle:"):
        return lattice.SiteGraph.cycle(int(text.split(":", 1)[1]))
    if text.startswith("path:"):
        return lattice.SiteGraph.path(int(text.split(":", 1)[1]))
    if text.startswith("file:"):
        with open(text.split(":", 1)[1]) as fh:
            return lattice.SiteGraph.from_json(fh.read())
    if text == "k1":
        return lattice.SiteGraph.single_vertex()
    return parse_torus(text).graph


def atomic_write(path: str, data) -> None:
    """Write bytes or text via a temp file and rename; no partial outputs."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tzlab-tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunConfig:
    """Fully serializable run description; equal configs give equal outputs."""

    subcommand: str
    options: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"subcommand": self.subcommand, **self.options}, sort_keys=True)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tzlab", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, *names):
        if "torus" in names:
            p.add_argument("--torus", help="torus spec: 4x4, 4x6x2, cycle:8")
        if "graph" in names:
            p.add_argument("--graph", help="graph spec: cycle:N, path:N, file:PATH, k1, 4x4")
        if "out" in names:
            p.add_argument("--out", help="output file path")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=0, help="seed for randomized sampling")

    p = sub.add_parser("poly", help="exact independence polynomial")
    common(p, "graph", "torus", "out")

    p = sub.add_parser("zeros", help="high-magnitude zero search for C_n box T")
    common(p, "torus", "out")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--radius", type=float, required=True)

    p = sub.add_parser("spectrum", help="transfer-matrix spectrum at a point")
    common(p, "torus", "out")
    p.add_argument("--z", help="evaluation point re,im (default from --lambda)")
    p.add_argument("--lambda", dest="lam", help="fugacity re,im; z = 1/lambda")

    p = sub.add_parser("qseries", help="exact q+- power series")
    common(p, "torus", "out")
    p.add_argument("--order", type=int, required=True)

    p = sub.add_parser("contours", help="contour catalog of a torus")
    common(p, "torus", "out")

    p = sub.add_parser("cluster", help="Ursell values and a Kotecky-Preiss demo")
    common(p, "out")
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--eps", type=float, default=None, help="toy polymer weight scale")

    p = sub.add_parser("fptas", help="interpolation evaluation of Z at large fugacity")
    common(p, "torus", "out")
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--eps", type=float, required=True)

    p = sub.add_parser("raster", help="spherical-derivative raster")
    common(p, "torus", "graph", "out")
    p.add_argument("--kind", choices=["dary", "fibonacci", "torus_ratio", "constant"], default="dary")
    p.add_argument("--n", type=int, default=3, help="branching degree for kind=dary")
    p.add_argument("--window", default="-1,2.5,-1.5,1.5", help="re_min,re_max,im_min,im_max")
    p.add_argument("--res", default="512x512", help="WxH")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--format", choices=["pgm", "raw"], default="pgm")

    p = sub.add_parser("curve", help="equal-modulus accumulation curve")
    common(p, "torus", "out")
    p.add_argument("--z", help="curve seed re,im (default: scan for a tie)")
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--n", type=int, default=1, help="trace direction +1/-1", choices=[1, -1])

    p = sub.add_parser("bounds", help="combinatorial bound sequences x_n, y_n")
    common(p, "out")
    p.add_argument("--n", type=int, required=True, help="family size N")
    p.add_argument("--order", type=int, required=True)
    return ap


def _need(args, attr, flag):
    val = getattr(args, attr, None)
    if val is None:
        raise ValidationError(f"missing required {flag}")
    return val


def _cmd_poly(args):
    spec = args.graph or args.torus
    g = parse_graph(_need(args, "graph" if args.graph else "torus", "--graph/--torus"))
    p = exactpoly.indep_poly(g)
    payload = {"graph": spec, "coeffs": [str(c) for c in p.coeffs], "degree": p.degree}
    if args.out:
        atomic_write(args.out, p.to_json())
    return payload


def _cmd_zeros(args):
    t = parse_torus(_need(args, "torus", "--torus"))
    fam = lattice.independent_sets(t)
    zeros = transfer.zero_search(fam, args.n, args.radius, threads=args.threads)
    lines = ["n,re_lambda,im_lambda,residual,method"]
    for fz in zeros:
        lines.append(
            f"{args.n},{fz.lam.real:.17g},{fz.lam.imag:.17g},{fz.residual:.17g},{fz.method}"
        )
    if args.out:
        atomic_write(args.out, "\n".join(lines) + "\n")
    return {
        "torus": list(t.sides),
        "n": args.n,
        "radius": _fmt(args.radius),
        "count": len(zeros),
        "max_residual": _fmt(max((z.residual for z in zeros), default=0.0)),
    }


def _cmd_spectrum(args):
    t = parse_torus(_need(args, "torus", "--torus"))
    fam = lattice.independent_sets(t)
    if args.z is not None:
        z = parse_complex(args.z)
    elif args.lam is not None:
        lam = parse_complex(args.lam)
        if lam == 0:
            raise ValidationError("lambda must be nonzero")
        z = 1.0 / lam
    else:
        raise ValidationError("need --z or --lambda")
    tr = transfer.spectrum(fam, z)
    payload = {
        "torus": list(t.sides),
        "z": _c2pair(tr.z),
        "qplus": _c2pair(tr.qplus_val),
        "qminus": _c2pair(tr.qminus_val),
        "eigenvalues": [_c2pair(s) for s in tr.eigenvalues],
        "labels": list(tr.labels),
    }
    if args.out:
        atomic_write(args.out, json.dumps(payload))
    return payload


def _cmd_qseries(args):
    t = parse_torus(_need(args, "torus", "--torus"))
    qs = qseries.q_series(t, args.order)
    a, b = qseries.a_b_split(qs.qplus, qs.qminus)
    payload = {
        "torus": list(t.sides),
        "alpha": t.alpha,
        "qplus": qs.qplus.integer_coeffs(),
        "qminus": qs.qminus.integer_coeffs(),
        "a": [int(c) for c in a.coeffs],
        "b": [int(c) for c in b.coeffs],
    }
    if args.out:
        atomic_write(args.out, json.dumps(payload))
    return payload


def _cmd_contours(args):
    t = parse_torus(_need(args, "torus", "--torus"))
    cat = contour.contour_catalog(t)
    if args.out:
        atomic_write(args.out, contour.catalog_to_json(cat))
    return {
        "torus": list(t.sides),
        "small_even": len(cat.small_even),
        "small_odd": len(cat.small_odd),
        "large": len(cat.large),
    }


def _cmd_cluster(args):
    k = args.k
    table = [clusterexp.ursell_complete(i) for i in range(1, k + 1)]
    # chain toy system: 5 polymers, neighbors incompatible
    a_mult, b_mult = 8.0, 1.0
    eps = args.eps if args.eps is not None else a_mult / (3.0 * 2.718281828459045 ** (a_mult + b_mult)) / 2
    sys5 = clusterexp.PolymerSystem(
        tuple(range(5)), lambda i, j: abs(i - j) == 1, (eps,) * 5, (1,) * 5
    )
    report = clusterexp.kp_check(sys5, a_mult, b_mult)
    payload = {
        "ursell_complete": table,
        "toy_eps": _fmt(eps),
        "kp_ok": report.ok,
        "kp_worst_margin": _fmt(report.worst_margin),
    }
    if args.out:
        atomic_write(args.out, json.dumps(payload))
    return payload


def _cmd_fptas(args):
    t = parse_torus(_need(args, "torus", "--torus"))
    lam = parse_complex(args.lam)
    res = clusterexp.fptas_evaluate(t, lam, args.eps)
    payload = {"approx": _c2pair(res.value), "m": res.order}
    if args.out:
        atomic_write(args.out, json.dumps(payload))
    return payload


def _cmd_raster(args):
    window = tuple(float(x) for x in args.window.split(","))
    if len(window) != 4:
        raise ValidationError("--window needs re_min,re_max,im_min,im_max")
    w, h = (int(x) for x in args.res.lower().split("x"))
    params = {}
    if args.kind == "dary":
        params["d"] = args.n
    if args.kind == "torus_ratio":
        spec = args.torus or args.graph
        if spec is None:
            raise ValidationError("kind=torus_ratio needs --torus or --graph")
        params["graph"] = parse_graph(spec)
    ra = dynamics.spherical_raster(args.kind, params, window, (w, h), args.iters)
    payload = {
        "kind": args.kind,
        "window": [_fmt(x) for x in window],
        "res": [w, h],
        "iters": args.iters,
        "min": _fmt(float(ra.values.min())),
        "max": _fmt(float(ra.values.max())),
    }
    if args.out:
        if args.format == "pgm":
            atomic_write(args.out, ra.to_pgm())
        else:
            blob, sidecar = ra.to_raw()
            atomic_write(args.out, blob)
            atomic_write(args.out + ".json", sidecar)
    return payload


def _cmd_curve(args):
    t = parse_torus(_need(args, "torus", "--torus"))
    fam = lattice.independent_sets(t)
    if args.z is not None:
        seed = parse_complex(args.z)
    else:
        seed = transfer.find_equal_modulus_seed(fam, -10.0, -1.5)
    pts = transfer.equal_modulus_curve(fam, seed, steps=args.iters, direction=args.n)
    lines = ["re_z,im_z,re_lambda,im_lambda"]
    for z in pts:
        lam = 1.0 / z if z != 0 else complex("inf")
        lines.append(f"{z.real:.17g},{z.imag:.17g},{lam.real:.17g},{lam.imag:.17g}")
    if args.out:
        atomic_write(args.out, "\n".join(lines) + "\n")
    end = pts[-1]
    return {
        "torus": list(t.sides),
        "seed": _c2pair(seed),
        "points": len(pts),
        "end_z": _c2pair(end),
        "end_lambda": _c2pair(1.0 / end) if end != 0 else None,
    }


def _cmd_bounds(args):
    xs, ys = qseries.bound_sequences(args.n, args.order)
    payload = {
        "N": args.n,
        "x": [str(x) for x in xs],
        "y": [str(Fraction(y)) for y in ys],
    }
    if args.out:
        atomic_write(args.out, json.dumps(payload))
    return payload


_DISPATCH = {
    "poly": _cmd_poly,
    "zeros": _cmd_zeros,
    "spectrum": _cmd_spectrum,
    "qseries": _cmd_qseries,
    "contours": _cmd_contours,
    "cluster": _cmd_cluster,
    "fptas": _cmd_fptas,
    "raster": _cmd_raster,
    "curve": _cmd_curve,
    "bounds": _cmd_bounds,
}


_VALUE_FLAGS = {"--lambda", "--z", "--window"}


def _normalize_argv(argv):
    """Glue values like "-10,0" onto their flag so argparse accepts them."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def run(argv) -> int:
    """Parse argv, dispatch, print a JSON summary; return an exit code."""
    ap = _build_parser()
    try:
        args = ap.parse_args(_normalize_argv(list(argv)))
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        payload = _DISPATCH[args.cmd](args)
    except (ValidationError, ValueError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    except NumericError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 3
    except TzlabError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 3
    print(json.dumps(payload))
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
