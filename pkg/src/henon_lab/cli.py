"""Command-line frontend.

JSON goes to stdout, errors go to stderr as a JSON object.  Exit codes:
0 success, 1 computation error, 2 input error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np
from gmpy2 import mpq

from . import amalgam, automorphism, ergodic, green, heights, localdyn, periodic
from .automorphism import PolyAuto, auto_from_json, henon_auto, reversible_henon
from .errors import HenonLabError, InputError
from .polyalg import BivarPoly, UnivarPoly, rat, rat_str

# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _num(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        return "null"
    return format(v, ".17g")


def dumps(obj) -> str:
    """Deterministic JSON; doubles with 17 significant digits, rationals as "n/d"."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_num(obj.real)}, {_num(obj.imag)}]"
    if isinstance(obj, type(mpq(0))):
        return json.dumps(rat_str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if hasattr(obj, "to_json"):
        return dumps(obj.to_json())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


class CliError(Exception):
    def __init__(self, payload: dict, code: int):
        super().__init__(payload.get("message", ""))
        self.payload = payload
        self.code = code


# ---------------------------------------------------------------------------
# map specifications
# ---------------------------------------------------------------------------


class MapSpec:
    """A parsed map document: the automorphism, an optional reversor, seed, tolerances."""

    def __init__(self, f: PolyAuto, name: str, reversible: periodic.ReversiblePair | None = None,
                 seed: int = 0, tolerances: dict | None = None):
        self.f = f
        self.name = name
        self.reversible = reversible
        self.seed = seed
        self.tolerances = tolerances or {}


def corpus_names() -> list[str]:
    root = resources.files("henon_lab") / "corpus"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _field(path: str, fn, *args):
    try:
        return fn(*args)
    except (InputError, KeyError, TypeError, ValueError) as exc:
        raise CliError({"error": "input", "field": path, "message": str(exc)}, 2) from exc


def _univar(path: str, obj) -> UnivarPoly:
    if not isinstance(obj, list) or not obj:
        raise CliError({"error": "input", "field": path,
                        "message": "expected a non-empty list of coefficients, lowest degree first"}, 2)
    return UnivarPoly([_field(f"{path}[{k}]", _coef, c) for k, c in enumerate(obj)])


def _coef(c):
    if isinstance(c, bool) or not isinstance(c, (int, str)):
        raise InputError(f"coefficient {c!r} must be an integer or a \"num/den\" string")
    return rat(c)


def spec_from_json(doc, name: str = "<spec>") -> MapSpec:
    if not isinstance(doc, dict):
        raise CliError({"error": "input", "field": "$", "message": "spec must be a JSON object"}, 2)
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise CliError({"error": "input", "field": "seed", "message": "seed must be an integer"}, 2)
    tolerances = doc.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise CliError({"error": "input", "field": "tolerances", "message": "expected an object"}, 2)
    name = doc.get("name", name)
    rp = None
    if "P" in doc:
        P = _univar("P", doc["P"])
        rp = _field("P", periodic.make_reversible, P)
        f = rp.f
    elif "henon" in doc:
        h = doc["henon"]
        a = _field("henon.a", _coef, h.get("a", 1) if isinstance(h, dict) else None)
        f = _field("henon", henon_auto, a, _univar("henon.P", h.get("P")))
    elif "forward" in doc:
        for key in ("forward", "inverse"):
            for k, p in enumerate(doc.get(key) or []):
                _field(f"{key}[{k}]", BivarPoly.from_json, p)
        f = _field("forward", auto_from_json, doc)
    else:
        raise CliError({"error": "input", "field": "$",
                        "message": "spec needs one of 'forward'/'inverse', 'henon' or 'P'"}, 2)
    return MapSpec(f, name, rp, seed, tolerances)


def load_spec(ref: str) -> MapSpec:
    """A path to a JSON document, or the name of a bundled corpus map."""
    path = Path(ref)
    if path.is_file():
        text = path.read_text()
    else:
        res = resources.files("henon_lab") / "corpus" / f"{ref}.json"
        if not res.is_file():
            raise CliError({"error": "input", "path": ref,
                            "message": f"no such file or bundled map (bundled: {', '.join(corpus_names())})"}, 2)
        text = res.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError({"error": "parse", "path": ref, "line": exc.lineno, "column": exc.colno,
                        "message": exc.msg}, 2) from exc
    return spec_from_json(doc, path.stem)


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _complex_pair(s: str):
    parts = s.split(",")
    if len(parts) != 2:
        raise InputError(f"point {s!r} must be 'x,y'")
    return complex(parts[0].strip().replace("i", "j")), complex(parts[1].strip().replace("i", "j"))


def _rational_pair(s: str):
    parts = s.split(",")
    if len(parts) != 2:
        raise InputError(f"point {s!r} must be 'x,y' with rationals 'n/d'")
    return rat(parts[0].strip()), rat(parts[1].strip())


def _floats(s: str, count: int):
    parts = [float(v) for v in s.split(",")]
    if len(parts) != count:
        raise InputError(f"expected {count} comma-separated numbers, got {s!r}")
    return parts


def _resolution(s: str):
    if "x" in s:
        c, r = s.split("x")
        return int(c), int(r)
    return int(s)


def _tol(args, spec: MapSpec, default: float) -> float:
    tol = args.tol if args.tol is not None else spec.tolerances.get("tol", default)
    if not tol > 0:
        raise InputError("--tol must be positive")
    return float(tol)


def _max_iter(args, spec: MapSpec, default=None):
    m = args.max_iter if args.max_iter is not None else spec.tolerances.get("max_iter", default)
    if m is not None and int(m) < 1:
        raise InputError("--max-iter must be positive")
    return None if m is None else int(m)


def _seed(args, spec: MapSpec) -> int:
    return args.seed if args.seed is not None else spec.seed


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_decompose(args) -> dict:
    spec = load_spec(args.spec)
    f = spec.f
    out = {
        "map": spec.name,
        "degree": f.degree,
        "jacobian": f.jacobian,
        "jung_word": automorphism.jung_decompose(f).to_json(),
        "classification": amalgam.classify(f).to_json(),
        "henon_type": automorphism.is_henon_type(f),
        "regular": automorphism.is_regular(f),
    }
    if out["henon_type"]:
        form = automorphism.to_regular_form(f)
        out["dynamical_degree"] = form.degree
        out["regular_form"] = form.to_json()
    return out


def cmd_green_eval(args) -> dict:
    spec = load_spec(args.spec)
    tol, mi = _tol(args, spec, 1e-10), _max_iter(args, spec)
    p = _complex_pair(args.point)
    gs = green.green_system(spec.f)
    return {
        "point": list(p),
        "Gplus": gs.plus(p, tol, mi).to_json(),
        "Gminus": gs.minus(p, tol, mi).to_json(),
        "G": gs.max(p, tol, mi).to_json(),
        "escape": gs.escape_status(p, args.escape_steps).to_json(),
        "filtration": gs.filtration.to_json(),
        "log_plus_constant": gs.log_plus_constant,
    }


def cmd_green_render(args) -> dict:
    spec = load_spec(args.spec)
    tol, mi = _tol(args, spec, 1e-8), _max_iter(args, spec)
    window = _floats(args.window, 4)
    res = _resolution(args.res)
    vals = green.render_grid(spec.f, window, res, args.which, tol, mi)
    out = {"rows": int(vals.shape[0]), "cols": int(vals.shape[1]), "which": args.which,
           "min": float(vals.min()), "max": float(vals.max())}
    if args.out:
        meta = {"window": window, "which": args.which, "tol": tol}
        green.write_ppm(vals, args.out, meta)
        out["out"] = args.out
        out["sha256"] = hashlib.sha256(Path(args.out).read_bytes()).hexdigest()
    if args.csv:
        green.write_csv(vals, args.csv)
        out["csv"] = args.csv
    return out


def cmd_periodic(args) -> dict:
    spec = load_spec(args.spec)
    tol = _tol(args, spec, 1e-12)
    mi = _max_iter(args, spec, 100)
    pts = periodic.fixed_points_of_iterate(spec.f, args.n, tol, mi)
    d = automorphism.to_regular_form(spec.f).degree
    return {
        "n": args.n,
        "dynamical_degree": d,
        "total_multiplicity": sum(p.multiplicity for p in pts),
        "expected": d ** args.n,
        "distinct": len(pts),
        "points": [p.to_json() for p in pts],
    }


def cmd_reversible(args) -> dict:
    spec = load_spec(args.spec)
    if spec.reversible is None:
        raise InputError("reversible needs a spec given by the 'P' shorthand")
    tol = _tol(args, spec, 1e-12)
    mi = _max_iter(args, spec, 100)
    rp = spec.reversible
    sigma_ok = rp.sigma.compose(rp.f).compose(rp.sigma) == rp.f.inv()
    pts = periodic.diagonal_intersections(rp, args.n, tol, mi)
    return {
        "n": args.n,
        "sigma_conjugates_to_inverse": sigma_ok,
        "total_multiplicity": sum(p.multiplicity for p in pts),
        "expected": rp.f.degree ** args.n,
        "distinct": len(pts),
        "max_period_2n_residual": max(p.residual for p in pts),
        "points": [p.to_json() for p in pts],
    }


def cmd_lyapunov(args) -> dict:
    spec = load_spec(args.spec)
    tol = _tol(args, spec, 1e-12)
    mi = _max_iter(args, spec, 100)
    est = ergodic.lyapunov_from_periodic(spec.f, args.period, tol, mi)
    out = est.to_json()
    out["log_abs_jacobian"] = math.log(abs(float(spec.f.jacobian)))
    out["log_degree"] = math.log(automorphism.to_regular_form(spec.f).degree)
    return out


def cmd_holder(args) -> dict:
    spec = load_spec(args.spec)
    tol = _tol(args, spec, 1e-12)
    mi = _max_iter(args, spec)
    sad = localdyn.saddles(spec.f, args.period)
    if not 0 <= args.saddle_index < len(sad):
        raise InputError(f"--saddle-index must be in [0, {len(sad)})")
    s = sad[args.saddle_index]
    est = localdyn.holder_exponent(spec.f, s, args.side, N=args.order, samples=args.samples,
                                   tol=tol, max_iter=mi)
    out = est.to_json()
    out["saddle"] = s.base.to_json()
    out["side"] = args.side
    return out


def _curve(s: str):
    if s == "diagonal":
        t = UnivarPoly([0, 1])
        return (t, t), None
    try:
        doc = json.loads(s)
    except json.JSONDecodeError as exc:
        raise CliError({"error": "parse", "path": "--curve", "line": exc.lineno,
                        "column": exc.colno, "message": exc.msg}, 2) from exc
    if not isinstance(doc, list) or len(doc) != 2:
        raise InputError("--curve must be 'diagonal' or a JSON pair of coefficient lists")
    return (_univar("curve[0]", doc[0]), _univar("curve[1]", doc[1])), None


def cmd_proportionality(args) -> dict:
    spec = load_spec(args.spec)
    tol = _tol(args, spec, 1e-10)
    mi = _max_iter(args, spec)
    curve, _ = _curve(args.curve)
    rep = ergodic.proportionality_test(spec.f, curve, args.samples, tol, radius=args.radius,
                                       seed=_seed(args, spec), max_iter=mi)
    out = rep.to_json()
    out["passes"] = rep.passes(tol)
    return out


def cmd_height(args) -> dict:
    spec = load_spec(args.spec)
    tol = _tol(args, spec, 1e-12)
    mi = _max_iter(args, spec)
    p = _rational_pair(args.point)
    h = heights.dyn_height(spec.f, p, args.n, tol, mi)
    out = h.to_json()
    out["point"] = [rat_str(c) for c in p]
    out["agrees"] = h.agrees() if h.place_sum is not None else None
    if args.threshold is not None:
        out["verdict"] = heights.periodicity_from_height(spec.f, p, args.threshold, args.n).verdict
    return out


def cmd_common_iterate(args) -> dict:
    a, b = load_spec(args.spec_a), load_spec(args.spec_b)
    _tol(args, a, 1e-12)
    res = amalgam.common_iterate(a.f, b.f, args.bound)
    return {"bound": args.bound, "found": res is not None, "exponents": list(res) if res else None}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError({"error": "usage", "message": message}, 2)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=None, help="numerical tolerance (per-command default)")
    p.add_argument("--max-iter", type=int, default=None, help="iteration cap for iterative solvers")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized sampling")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="henon-lab", description="Dynamics and arithmetic of plane polynomial automorphisms.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="Jung word and tree classification")
    p.add_argument("spec")
    _common(p)
    p.set_defaults(func=cmd_decompose)

    g = sub.add_parser("green", help="Green functions")
    gsub = g.add_subparsers(dest="green_command", required=True, parser_class=_Parser)
    p = gsub.add_parser("eval", help="G+, G- and G at one point")
    p.add_argument("spec")
    p.add_argument("--point", required=True, help="x,y (complex allowed, e.g. 1+2j)")
    p.add_argument("--escape-steps", type=int, default=50)
    _common(p)
    p.set_defaults(func=cmd_green_eval)
    p = gsub.add_parser("render", help="grid of Green values to PPM/CSV")
    p.add_argument("spec")
    p.add_argument("--window", required=True, help="xmin,xmax,ymin,ymax")
    p.add_argument("--res", required=True, help="N or COLSxROWS")
    p.add_argument("--which", choices=("Gplus", "Gminus", "Gmax"), default="Gplus")
    p.add_argument("--out", help="PPM path")
    p.add_argument("--csv", help="CSV path")
    _common(p)
    p.set_defaults(func=cmd_green_render)

    p = sub.add_parser("periodic", help="solutions of f^n(p) = p")
    p.add_argument("spec")
    p.add_argument("--n", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_periodic)

    p = sub.add_parser("reversible", help="diagonal intersections of a reversible map")
    p.add_argument("spec")
    p.add_argument("--n", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_reversible)

    p = sub.add_parser("lyapunov", help="exponents averaged over saddle points of Fix(f^n)")
    p.add_argument("spec")
    p.add_argument("--period", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("holder", help="scaling exponent of G along an invariant manifold")
    p.add_argument("spec")
    p.add_argument("--saddle-index", type=int, default=0)
    p.add_argument("--side", choices=(localdyn.UNSTABLE, localdyn.STABLE), default=localdyn.UNSTABLE)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--order", type=int, default=10)
    p.add_argument("--samples", type=int, default=128)
    _common(p)
    p.set_defaults(func=cmd_holder)

    p = sub.add_parser("proportionality", help="fit G+ = alpha G- + H on a curve")
    p.add_argument("spec")
    p.add_argument("--curve", default="diagonal", help="'diagonal' or JSON [[c0, c1, ...], [c0, ...]]")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--radius", type=float, default=None)
    _common(p)
    p.set_defaults(func=cmd_proportionality)

    p = sub.add_parser("height", help="dynamical height of a rational point")
    p.add_argument("spec")
    p.add_argument("--point", required=True, help="x,y as integers or n/d")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--threshold", type=float, default=None)
    _common(p)
    p.set_defaults(func=cmd_height)

    g = sub.add_parser("group", help="group-theoretic queries")
    gsub = g.add_subparsers(dest="group_command", required=True, parser_class=_Parser)
    p = gsub.add_parser("common-iterate", help="search f^n = g^m")
    p.add_argument("spec_a")
    p.add_argument("spec_b")
    p.add_argument("--bound", type=int, default=3)
    _common(p)
    p.set_defaults(func=cmd_common_iterate)

    sub.add_parser("corpus", help="list bundled maps").set_defaults(func=lambda a: {"maps": corpus_names()})
    return ap


def _error_payload(exc: Exception) -> tuple[dict, int]:
    if isinstance(exc, CliError):
        return exc.payload, exc.code
    if isinstance(exc, HenonLabError):
        return ({"error": exc.kind, "kind": type(exc).__name__, "message": str(exc)},
                2 if exc.kind == "input" else 1)
    if isinstance(exc, (ValueError, TypeError, ZeroDivisionError)):
        return {"error": "input", "kind": type(exc).__name__, "message": str(exc)}, 2
    return {"error": "computation", "kind": type(exc).__name__, "message": str(exc)}, 1


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        result = args.func(args)
    except Exception as exc:  # every failure becomes a JSON object on stderr
        payload, code = _error_payload(exc)
        sys.stderr.write(dumps(payload) + "\n")
        return code
    sys.stdout.write(dumps(result) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
