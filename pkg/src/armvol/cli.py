"""Command-line front end: ``armvol``.

Subcommands
-----------
eval       signed volume (and projected area) of an explicit configuration
gradcheck  analytic tangent gradients vs central finite differences
critical   multistart critical-point search with Morse data + classification
classify   structure classification of an explicit configuration
gram       det | critical | surface | roundtrip on the Gram-determinant picture
bottmorse  exact Bott-Morse divisibility check on a critical inventory

Structured input and output are JSON with a versioned ``schema_version``
field; meshes are Wavefront OBJ; critical tables can be exported as CSV.
All floats are serialized with 17 significant digits so reports round-trip
exactly.  Randomized commands default to seed 0 and never use wall-clock
entropy.  The environment variable ``LVL_THREADS`` caps internal parallelism
without changing any output.

Exit codes: 0 success, 1 input error, 2 empty result, 3 identity failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from importlib import resources

import numpy as np

from . import __version__
from .classify import ClassificationReport, classify_critical
from .geometry import ArmConfiguration, Mode, projected_area, signed_volume
from .gram import (GramPoint, extract_isosurface, gram_critical_points,
                   gram_det, gram_from_config, gram_gradient,
                   reconstruct_from_gram, reflection_identity_residual,
                   write_obj)
from .morsepoly import CriticalManifoldDatum, IntPolynomial, bott_morse_check
from .search import (CriticalPointRecord, SearchOptions, SearchResult,
                     random_directions, search_critical_points)
from .variational import gradient_check, gradient_norm

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_INPUT = 1
EXIT_EMPTY = 2
EXIT_IDENTITY = 3


class InputError(Exception):
    """Bad user input: schema violation, unreadable file, invalid value."""


# ---------------------------------------------------------------------------
# JSON with fixed float formatting

def _float_str(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError("cannot serialize non-finite float")
    return format(float(x), ".17g")


def dumps_document(obj, indent: int = 0) -> str:
    """Deterministic JSON with all floats at 17 significant digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return _float_str(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps_document(v, indent + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{dumps_document(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, np.floating):
        return _float_str(float(obj))
    if isinstance(obj, np.ndarray):
        return dumps_document(obj.tolist(), indent)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _maybe_float(x) -> float | None:
    x = float(x)
    return x if np.isfinite(x) else None


# ---------------------------------------------------------------------------
# arm spec documents

def _fail(field: str, message: str) -> InputError:
    return InputError(f"{field}: {message}")


def load_arm_spec(path: str) -> dict:
    """Read and validate an arm spec document; see the README for the schema."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise _fail(path, "top-level value must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise _fail("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    lengths = doc.get("lengths")
    if not isinstance(lengths, list) or len(lengths) < 2:
        raise _fail("lengths", "need a list of at least two numbers")
    for i, val in enumerate(lengths):
        if not isinstance(val, (int, float)) or not np.isfinite(val) or val <= 0:
            raise _fail(f"lengths[{i}]", f"must be a positive number, got {val!r}")
    mode_name = doc.get("mode", "reduced")
    try:
        mode = Mode(mode_name)
    except ValueError:
        raise _fail("mode", f"must be one of full/reduced/plane_b, got {mode_name!r}")
    spec = {"lengths": np.array(lengths, dtype=float), "mode": mode,
            "directions": None, "projection": None, "search": {}}
    if "directions" in doc and doc["directions"] is not None:
        dirs = doc["directions"]
        if not isinstance(dirs, list) or len(dirs) != len(lengths):
            raise _fail("directions", f"need {len(lengths)} unit 3-vectors")
        for i, row in enumerate(dirs):
            if not isinstance(row, list) or len(row) != 3:
                raise _fail(f"directions[{i}]", "must be a 3-vector")
        spec["directions"] = np.array(dirs, dtype=float)
    if "projection" in doc and doc["projection"] is not None:
        proj = doc["projection"]
        if not isinstance(proj, list) or len(proj) != 3:
            raise _fail("projection", "must be a 3-vector")
        spec["projection"] = np.array(proj, dtype=float)
    search = doc.get("search", {})
    if search is None:
        search = {}
    if not isinstance(search, dict):
        raise _fail("search", "must be an object")
    allowed = {"restarts": int, "seed": int, "grad_tol": float,
               "step_tol": float, "max_iters": int}
    for key, val in search.items():
        if key not in allowed:
            raise _fail(f"search.{key}", "unknown option")
        try:
            search[key] = allowed[key](val)
        except (TypeError, ValueError):
            raise _fail(f"search.{key}", f"bad value {val!r}")
    spec["search"] = search
    return spec


def _config_from_spec(spec: dict) -> ArmConfiguration:
    if spec["directions"] is None:
        raise InputError("directions: this command needs an explicit configuration")
    try:
        return ArmConfiguration(spec["lengths"], spec["directions"], spec["mode"])
    except ValueError as exc:
        raise InputError(f"directions: {exc}") from exc


# ---------------------------------------------------------------------------
# report documents

def _circle_dict(report: ClassificationReport):
    if report.circle is None:
        return None
    return {"center": [float(report.circle.center[0]), float(report.circle.center[1])],
            "radius": _maybe_float(report.circle.radius),
            "rms": _maybe_float(report.circle.rms)}


def _verdict_dict(verdict):
    if verdict is None:
        return None
    return {"ok": bool(verdict.ok), "residual": _maybe_float(verdict.residual)}


def classification_dict(report: ClassificationReport | None):
    if report is None:
        return None
    return {
        "label": report.label.value,
        "split": report.split,
        "ambiguous": report.ambiguous,
        "pattern": [flag.value for flag in report.pattern],
        "circle": _circle_dict(report),
        "closing": _verdict_dict(report.closing),
        "diameter": _verdict_dict(report.diameter),
        "zigzag": _verdict_dict(report.zigzag),
        "planar_subtype": report.planar_subtype.value if report.planar_subtype else None,
    }


def record_dict(rec: CriticalPointRecord) -> dict:
    cfg = rec.configuration
    return {
        "value": float(rec.value),
        "grad_norm": float(rec.grad_norm),
        "multiplicity": int(rec.multiplicity),
        "mode": cfg.mode.value,
        "lengths": cfg.lengths.tolist(),
        "directions": cfg.directions.tolist(),
        "eigenvalues": rec.morse.eigenvalues.tolist() if rec.morse else None,
        "morse_index": rec.morse.morse_index if rec.morse else None,
        "nullity": rec.morse.nullity if rec.morse else None,
        "transversal_index": rec.morse.transversal_index if rec.morse else None,
        "tau": float(rec.morse.tau) if rec.morse else None,
        "classification": classification_dict(rec.classification),
    }


def report_document(spec_echo: dict, result: SearchResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "armvol", "version": __version__},
        "input": spec_echo,
        "records": [record_dict(r) for r in result.records],
        "summary": {"attempts": result.attempts, "converged": result.converged,
                    "failed": result.failed},
    }


CSV_COLUMNS = ["value", "grad_norm", "multiplicity", "morse_index", "nullity",
               "transversal_index", "label", "split", "ambiguous",
               "circle_radius", "circle_rms", "closing_ok", "diameter_ok",
               "zigzag_ok", "planar_subtype", "mode", "lengths", "directions"]


def report_csv(result: SearchResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in result.records:
        cls = rec.classification
        circle = cls.circle if cls else None

        def flag(v):
            return "" if v is None else str(bool(v.ok)).lower()

        writer.writerow([
            _float_str(rec.value), _float_str(rec.grad_norm), rec.multiplicity,
            rec.morse.morse_index if rec.morse else "",
            rec.morse.nullity if rec.morse else "",
            rec.morse.transversal_index if rec.morse else "",
            cls.label.value if cls else "",
            cls.split if cls and cls.split is not None else "",
            str(cls.ambiguous).lower() if cls else "",
            _float_str(circle.radius) if circle else "",
            _float_str(circle.rms) if circle else "",
            flag(cls.closing) if cls else "",
            flag(cls.diameter) if cls else "",
            flag(cls.zigzag) if cls else "",
            cls.planar_subtype.value if cls and cls.planar_subtype else "",
            rec.configuration.mode.value,
            ";".join(_float_str(x) for x in rec.configuration.lengths),
            ";".join(" ".join(_float_str(x) for x in row)
                     for row in rec.configuration.directions),
        ])
    return buf.getvalue()


def _write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
            if not text.endswith("\n"):
                handle.write("\n")


# ---------------------------------------------------------------------------
# subcommands

def cmd_eval(args) -> int:
    spec = load_arm_spec(args.spec)
    cfg = _config_from_spec(spec)
    doc = {"schema_version": SCHEMA_VERSION}
    if cfg.n >= 3:
        doc["V"] = signed_volume(cfg)
    elif spec["projection"] is None:
        raise InputError("lengths: signed volume needs at least three edges "
                         "(a 2-edge arm is evaluable only with a projection)")
    if spec["projection"] is not None:
        try:
            doc["PA"] = projected_area(spec["projection"], cfg)
        except ValueError as exc:
            raise InputError(f"projection: {exc}") from exc
    if args.format == "json":
        _write_output(dumps_document(doc), args.output)
    else:
        parts = []
        if "V" in doc:
            parts.append(f"V = {_float_str(doc['V'])}")
        if "PA" in doc:
            parts.append(f"PA = {_float_str(doc['PA'])}")
        _write_output("\n".join(parts), args.output)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    spec = load_arm_spec(args.spec)
    lengths, mode = spec["lengths"], spec["mode"]
    if len(lengths) < 3:
        raise InputError("lengths: gradient check needs at least three edges")
    worst = 0.0
    for i in range(args.samples):
        rng = np.random.default_rng([args.seed, i])
        cfg = ArmConfiguration(lengths, random_directions(len(lengths), mode, rng),
                               mode)
        worst = max(worst, gradient_check(cfg))
    ok = worst <= args.tol
    doc = {"schema_version": SCHEMA_VERSION, "samples": args.samples,
           "seed": args.seed, "max_relative_error": worst,
           "tolerance": args.tol, "ok": ok}
    if args.format == "json":
        _write_output(dumps_document(doc), args.output)
    else:
        _write_output(f"max relative gradient error over {args.samples} samples: "
                      f"{_float_str(worst)} ({'OK' if ok else 'FAIL'})", args.output)
    return EXIT_OK if ok else EXIT_IDENTITY


def _options_from(spec: dict, args) -> SearchOptions:
    fields = dict(spec["search"])
    if args.restarts is not None:
        fields["restarts"] = args.restarts
    if args.seed is not None:
        fields["seed"] = args.seed
    fields["mode"] = spec["mode"]
    if args.mode is not None:
        fields["mode"] = Mode(args.mode)
    if args.tol is not None:
        fields["classify_tol"] = args.tol
    try:
        return SearchOptions(**fields)
    except (TypeError, ValueError) as exc:
        raise InputError(f"search options: {exc}") from exc


def cmd_critical(args) -> int:
    spec = load_arm_spec(args.spec)
    opts = _options_from(spec, args)
    result = search_critical_points(spec["lengths"], opts)
    echo = {"lengths": spec["lengths"].tolist(), "mode": opts.mode.value,
            "restarts": opts.restarts, "seed": opts.seed,
            "grad_tol": opts.grad_tol, "classify_tol": opts.classify_tol}
    if args.format == "csv":
        _write_output(report_csv(result), args.output)
    else:
        _write_output(dumps_document(report_document(echo, result)), args.output)
    if result.records:
        return EXIT_OK
    print(f"no critical points converged in {result.attempts} attempts",
          file=sys.stderr)
    return EXIT_EMPTY


def cmd_classify(args) -> int:
    spec = load_arm_spec(args.spec)
    cfg = _config_from_spec(spec)
    if cfg.mode is Mode.PLANE_B:
        raise InputError("mode: classification applies to full/reduced configurations")
    report = classify_critical(cfg, tol=args.tol if args.tol is not None else 1e-6)
    doc = {"schema_version": SCHEMA_VERSION,
           "value": signed_volume(cfg),
           "grad_norm": gradient_norm(cfg),
           "classification": classification_dict(report)}
    _write_output(dumps_document(doc), args.output)
    return EXIT_OK


def _gram_point(args) -> GramPoint:
    try:
        return GramPoint(x=args.x, y=args.y, z=args.z, a=args.a, b=args.b, c=args.c)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_gram_det(args) -> int:
    pt = _gram_point(args)
    if not pt.in_box:
        print("warning: point lies outside the admissible box "
              "(the polynomial is still defined there)", file=sys.stderr)
    doc = {"schema_version": SCHEMA_VERSION,
           "det": gram_det(pt),
           "gradient": gram_gradient(pt).tolist(),
           "in_box": pt.in_box,
           "reflection_identity_residual": reflection_identity_residual(pt)}
    _write_output(dumps_document(doc), args.output)
    return EXIT_OK


def cmd_gram_critical(args) -> int:
    if min(args.a, args.b, args.c) <= 0:
        raise InputError("lengths: must be positive")
    points = gram_critical_points(args.a, args.b, args.c)
    doc = {"schema_version": SCHEMA_VERSION,
           "critical_points": [
               {"x": p.point.x, "y": p.point.y, "z": p.point.z,
                "value": p.value, "morse_index": p.morse_index,
                "gradient": gram_gradient(p.point).tolist()}
               for p in points]}
    _write_output(dumps_document(doc), args.output)
    return EXIT_OK


def cmd_gram_surface(args) -> int:
    if min(args.a, args.b, args.c) <= 0:
        raise InputError("lengths: must be positive")
    try:
        mesh = extract_isosurface(args.a, args.b, args.c, level=args.level,
                                  resolution=args.res)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    buf = io.StringIO()
    write_obj(mesh, buf)
    _write_output(buf.getvalue(), args.output)
    if mesh.is_empty:
        print("level set is empty over the box", file=sys.stderr)
        return EXIT_EMPTY
    return EXIT_OK


def cmd_gram_roundtrip(args) -> int:
    lengths = np.asarray(args.abc, dtype=float)
    if np.any(lengths <= 0):
        raise InputError("lengths: must be positive")
    worst = 0.0
    worst_recon = 0.0
    for i in range(args.samples):
        rng = np.random.default_rng([args.seed, i])
        cfg = ArmConfiguration(lengths, random_directions(3, Mode.REDUCED, rng),
                               Mode.REDUCED)
        v = signed_volume(cfg)
        pt = gram_from_config(cfg)
        worst = max(worst, abs(gram_det(pt) - v * v) / (1.0 + v * v))
        back = gram_from_config(reconstruct_from_gram(pt))
        worst_recon = max(worst_recon,
                          max(abs(back.x - pt.x), abs(back.y - pt.y),
                              abs(back.z - pt.z)))
    ok = worst <= args.tol
    doc = {"schema_version": SCHEMA_VERSION, "samples": args.samples,
           "seed": args.seed, "max_det_vs_v2_residual": worst,
           "max_reconstruction_residual": worst_recon,
           "tolerance": args.tol, "ok": ok}
    _write_output(dumps_document(doc), args.output)
    return EXIT_OK if ok else EXIT_IDENTITY


def _load_inventory(path: str) -> tuple[list[CriticalManifoldDatum], IntPolynomial]:
    if not os.path.exists(path) and path in ("s2xs2", "s1xs2"):
        text = resources.files("armvol").joinpath(f"data/{path}.json").read_text()
    else:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        raise _fail("schema_version", f"expected {SCHEMA_VERSION}")
    raw = doc.get("criticals")
    if not isinstance(raw, list) or not raw:
        raise _fail("criticals", "need a non-empty list")
    data = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise _fail(f"criticals[{i}]", "must be an object")
        lam = item.get("lambda")
        coeffs = item.get("poincare")
        if not isinstance(lam, int) or lam < 0:
            raise _fail(f"criticals[{i}].lambda", "need a non-negative integer")
        if not isinstance(coeffs, list) or \
                not all(isinstance(c, int) for c in coeffs):
            raise _fail(f"criticals[{i}].poincare", "need integer coefficients")
        data.append(CriticalManifoldDatum(index=lam,
                                          poincare=IntPolynomial(tuple(coeffs))))
    manifold = doc.get("manifold")
    if not isinstance(manifold, list) or \
            not all(isinstance(c, int) for c in manifold):
        raise _fail("manifold", "need integer coefficients")
    return data, IntPolynomial(tuple(manifold))


def cmd_bottmorse(args) -> int:
    criticals, manifold = _load_inventory(args.inventory)
    result = bott_morse_check(criticals, manifold)
    doc = {"schema_version": SCHEMA_VERSION,
           "quotient": list(result.quotient.coefficients),
           "quotient_str": str(result.quotient),
           "remainder": result.remainder,
           "ok": result.ok}
    if args.format == "json":
        _write_output(dumps_document(doc), args.output)
    else:
        status = "OK" if result.ok else \
            f"FAIL (remainder {result.remainder}, quotient {result.quotient})"
        _write_output(f"R(t) = {result.quotient}\n{status}", args.output)
    return EXIT_OK if result.ok else EXIT_IDENTITY


# ---------------------------------------------------------------------------
# parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _add_common(p, fmt=("json", "text"), default_fmt="text"):
    p.add_argument("--output", metavar="PATH", default=None,
                   help="write to PATH instead of stdout")
    p.add_argument("--format", choices=fmt, default=default_fmt)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="armvol", description=__doc__.splitlines()[0],
                     epilog="LVL_THREADS caps internal parallelism.")
    parser.add_argument("--version", action="version",
                        version=f"armvol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="signed volume / projected area of a spec")
    p.add_argument("spec")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient oracle")
    p.add_argument("spec")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("critical", help="multistart critical-point search")
    p.add_argument("spec")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None,
                   help="classification tolerance")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    _add_common(p, fmt=("json", "csv"), default_fmt="json")
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("classify", help="classify an explicit configuration")
    p.add_argument("spec")
    p.add_argument("--tol", type=float, default=None)
    _add_common(p, fmt=("json",), default_fmt="json")
    p.set_defaults(func=cmd_classify)

    g = sub.add_parser("gram", help="Gram-determinant picture for 3-edge arms")
    gsub = g.add_subparsers(dest="gram_command", required=True)

    p = gsub.add_parser("det", help="determinant value and gradient at a point")
    for name in ("a", "b", "c", "x", "y", "z"):
        p.add_argument(name, type=float)
    _add_common(p, fmt=("json",), default_fmt="json")
    p.set_defaults(func=cmd_gram_det)

    p = gsub.add_parser("critical", help="the five critical points with indices")
    for name in ("a", "b", "c"):
        p.add_argument(name, type=float)
    _add_common(p, fmt=("json",), default_fmt="json")
    p.set_defaults(func=cmd_gram_critical)

    p = gsub.add_parser("surface", help="level-set mesh as Wavefront OBJ")
    for name in ("a", "b", "c"):
        p.add_argument(name, type=float)
    p.add_argument("--level", type=float, default=0.0)
    p.add_argument("--res", type=int, default=64)
    p.add_argument("--output", metavar="PATH", default=None)
    p.set_defaults(func=cmd_gram_surface)

    p = gsub.add_parser("roundtrip", help="det G = V^2 on random samples")
    p.add_argument("--lengths", nargs=3, type=float, default=[1.0, 1.0, 1.0],
                   metavar=("A", "B", "C"), dest="abc")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    _add_common(p, fmt=("json",), default_fmt="json")
    p.set_defaults(func=cmd_gram_roundtrip)

    p = sub.add_parser("bottmorse", help="Bott-Morse divisibility check")
    p.add_argument("inventory",
                   help="inventory JSON path, or bundled name s2xs2 / s1xs2")
    _add_common(p)
    p.set_defaults(func=cmd_bottmorse)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"armvol: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
