"""Command-line front end.

Manifold files are JSON documents with a ``"format": 1`` key::

    {"format": 1, "kind": "normal_form", "coefficients": {"B3": 0.05},
     "points": [[0, 0, 0, 0]], "order": 6, "t": [1.0]}

``kind`` is one of ``cubic``, ``graph``, ``normal_form``, ``ode``.  Graphs
carry ``F1`` and ``F2`` and ODEs carry ``B`` as lists of
``[multi-index, coefficient]`` pairs; graph multi-indices are over ``(x, y)``,
ODE multi-indices over ``(x, y, p, q)``.

Exit status: 0 flat / umbilic / all checks pass, 1 otherwise, 2 on error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any

from . import cartan, cohomology, models
from .engel import EngelStructure, validate
from .errors import EngelCRError, InsufficientOrder, ManifoldFileError
from .fields import DEGENERACY_THRESHOLD, FRAME_LABELS
from .jets import DEFAULT_ORDER

FORMAT_VERSION = 1
KINDS = ("cubic", "graph", "normal_form", "ode")
MAX_GRAPH_DEGREE = 8
DUALITY_THRESHOLD = 1e-10
JACOBI_THRESHOLD = 1e-9
BIANCHI_RELATIVE = 1e-5


# ---------------------------------------------------------------------------
# manifold files


def _poly(entries, path: str, nvars: int) -> models.Poly:
    if not isinstance(entries, list):
        raise ManifoldFileError("polynomial must be a list of [multi-index, coefficient] pairs",
                                path=path)
    terms = {}
    for i, entry in enumerate(entries):
        where = f"{path}[{i}]"
        if not (isinstance(entry, list) and len(entry) == 2):
            raise ManifoldFileError("expected [multi-index, coefficient]", path=where)
        idx, coef = entry
        if not (isinstance(idx, list) and len(idx) == nvars
                and all(isinstance(k, int) and not isinstance(k, bool) and k >= 0 for k in idx)):
            raise ManifoldFileError(f"multi-index must be {nvars} non-negative integers",
                                    path=where + "[0]")
        if not isinstance(coef, (int, float)) or isinstance(coef, bool) or not math.isfinite(coef):
            raise ManifoldFileError("coefficient must be a finite number", path=where + "[1]")
        if nvars == 2 and sum(idx) > MAX_GRAPH_DEGREE:
            raise ManifoldFileError(f"degree exceeds supported truncation {MAX_GRAPH_DEGREE}",
                                    path=where + "[0]")
        key = tuple(idx) + (0,) * (4 - nvars)
        terms[key] = terms.get(key, 0.0) + float(coef)
    return models.Poly(terms)


def _points(raw, path: str) -> list[tuple]:
    if not isinstance(raw, list) or not raw:
        raise ManifoldFileError("points must be a non-empty list", path=path)
    out = []
    for i, p in enumerate(raw):
        if not (isinstance(p, list) and len(p) == 4
                and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                        and math.isfinite(v) for v in p)):
            raise ManifoldFileError("point must be 4 finite numbers", path=f"{path}[{i}]")
        out.append(tuple(float(v) for v in p))
    return out


class ManifoldFile:
    """Parsed manifold description."""

    def __init__(self, doc: dict, source: str = "<input>"):
        self.source = source
        if not isinstance(doc, dict):
            raise ManifoldFileError("top level must be an object", path="$")
        if doc.get("format") != FORMAT_VERSION:
            raise ManifoldFileError(f"unsupported or missing format (expected {FORMAT_VERSION})",
                                    path="$.format")
        kind = doc.get("kind")
        if kind not in KINDS:
            raise ManifoldFileError(f"kind must be one of {', '.join(KINDS)}", path="$.kind")
        self.kind = kind
        self.doc = doc
        self.points = _points(doc["points"], "$.points") if "points" in doc \
            else [models.ORIGIN]
        order = doc.get("order", DEFAULT_ORDER)
        if not isinstance(order, int) or isinstance(order, bool) or order < 0:
            raise ManifoldFileError("order must be a non-negative integer", path="$.order")
        self.order = order
        t = doc.get("t", [1.0])
        t = t if isinstance(t, list) else [t]
        if not t or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                            and math.isfinite(v) and v > 0 for v in t):
            raise ManifoldFileError("t must be positive finite numbers", path="$.t")
        self.t = [float(v) for v in t]
        self._spec = self._parse_kind(doc)

    def _parse_kind(self, doc):
        if self.kind == "cubic":
            return None
        if self.kind == "graph":
            for key in ("F1", "F2"):
                if key not in doc:
                    raise ManifoldFileError("missing polynomial", path=f"$.{key}")
            return models.GraphSpec(_poly(doc["F1"], "$.F1", 2), _poly(doc["F2"], "$.F2", 2),
                                    name=doc.get("name", "graph"))
        if self.kind == "normal_form":
            coeffs = doc.get("coefficients", {})
            if not isinstance(coeffs, dict):
                raise ManifoldFileError("coefficients must be an object", path="$.coefficients")
            allowed = models.NormalFormCoefficients().as_dict()
            for k, v in coeffs.items():
                if k not in allowed:
                    raise ManifoldFileError(f"unknown coefficient {k!r}",
                                            path=f"$.coefficients.{k}")
                if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                    raise ManifoldFileError("coefficient must be a finite number",
                                            path=f"$.coefficients.{k}")
            return models.NormalFormCoefficients(**{k: float(v) for k, v in coeffs.items()})
        return _poly(doc.get("B", []), "$.B", 4)

    def structure(self) -> EngelStructure:
        if self.kind == "cubic":
            return models.cubic()
        if self.kind == "graph":
            return models.graph_to_engel(self._spec, check_point=self.points[0])
        if self.kind == "normal_form":
            return models.normal_form_model(self._spec)
        return models.ode_normal_coordinates(self._spec)


def parse_manifold(text: str, source: str = "<input>") -> ManifoldFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifoldFileError(f"invalid JSON: {exc.msg}", line=exc.lineno,
                                column=exc.colno) from exc
    return ManifoldFile(doc, source)


def load_manifold(path: str) -> ManifoldFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ManifoldFileError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_manifold(text, path)


# ---------------------------------------------------------------------------
# commands


def _point_arg(s: str) -> tuple:
    try:
        vals = tuple(float(v) for v in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad point {s!r}")
    if len(vals) != 4 or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError("a point is four comma-separated finite numbers")
    return vals


def _settings(mf: ManifoldFile, args) -> tuple[list, int, list]:
    points = args.point or mf.points
    order = args.order if getattr(args, "order", None) is not None else mf.order
    ts = [args.t] if getattr(args, "t", None) is not None else mf.t
    return points, order, ts


def _gauge(E: EngelStructure) -> dict:
    meta = {k: v for k, v in E.metadata.items() if isinstance(v, (str, int, float, dict))}
    meta.setdefault("gauge", "tau(p) = 1" if not E.normalized else "as supplied")
    return meta


def cmd_invariants(args) -> tuple[dict, int]:
    mf = load_manifold(args.file)
    points, order, ts = _settings(mf, args)
    E = mf.structure()
    rows = []
    for p in points:
        inv = cartan.essential_curvatures(E, p, 1.0, order)
        row = {"point": list(p), "values": []}
        for t in ts:
            row["values"].append({"t": t, "invariants": {
                k: {"value": v.at(t), "weight": v.weight} for k, v in inv.items()}})
        if args.table:
            tab = cartan.curvature_table(E, p, ts[0], args.max_homogeneity, order)
            row["curvature_table"] = {
                f"{a}_{b}{c}": {"value": w.at(ts[0]), "homogeneity": cartan.homogeneity(a, b, c)}
                for (a, b, c), w in tab.items()}
        rows.append(row)
    flat = cartan.flatness_test(E, points, order, args.threshold)
    report = {"command": "invariants", "manifold": mf.kind, "order": order,
              "threshold": args.threshold, "gauge": _gauge(E), "points": rows,
              "flat": flat.flat, "max_residual": flat.max_residual}
    return report, 0


def _verdict(args, name: str) -> tuple[dict, int]:
    mf = load_manifold(args.file)
    points, order, _ = _settings(mf, args)
    E = mf.structure()
    res = cartan.flatness_test(E, points, order, args.threshold)
    report = {"command": name, "manifold": mf.kind, "order": order,
              "threshold": args.threshold, "gauge": _gauge(E),
              "per_point": [{"point": list(p), "invariants": inv} for p, inv in res.per_point],
              "max_residual": res.max_residual,
              ("flat" if name == "flatness" else "umbilic"): res.flat}
    if name == "umbilic":
        report["umbilic_points"] = [list(p) for p, inv in res.per_point
                                    if max(abs(v) for v in inv.values()) < args.threshold]
    return report, 0 if res.flat else 1


def cmd_flatness(args):
    return _verdict(args, "flatness")


def cmd_umbilic(args):
    return _verdict(args, "umbilic")


def cmd_cohomology(args) -> tuple[dict, int]:
    rep = cohomology.cohomology_report()
    out = {"command": "cohomology", **rep.as_dict()}
    ok = rep.d_squared_zero and rep.jacobi and rep.closed_conditions_hold \
        and rep.exact_conditions_hold
    return out, 0 if ok else 1


def cmd_check(args) -> tuple[dict, int]:
    mf = load_manifold(args.file)
    points, order, _ = _settings(mf, args)
    max_h = args.max_homogeneity
    need = cartan.MIN_ORDER[max_h]
    if order < need:
        raise InsufficientOrder(f"homogeneity {max_h} checks need jet order {need}, got {order}")
    E = mf.structure()
    checks = []

    def add(name, residual, threshold, relative=False):
        checks.append({"name": name, "residual": residual, "threshold": threshold,
                       "relative": relative, "pass": bool(residual < threshold)})

    diags = validate(E, points, raise_on_failure=False)
    for d in diags:
        det = abs(d.frame_determinant)
        add(f"engel_inverse_determinant@{list(d.point)}",
            1.0 / det if det else math.inf, 1.0 / DEGENERACY_THRESHOLD)
        add(f"d0_alignment@{list(d.point)}", d.d0_residual, 1e-8)
    for p in points:
        lc = cartan.local_connection(E, p, order)
        n = lc.coframe.order
        frame = [lc.frame[j].truncate(n) for j in FRAME_LABELS]
        add(f"coframe_duality@{list(p)}", lc.coframe.duality_residual(frame), DUALITY_THRESHOLD)
        add(f"jacobi@{list(p)}", max(cartan.jacobi_residuals(lc).values()), JACOBI_THRESHOLD)
        add(f"bracket_table@{list(p)}", max(cartan.bracket_table_residuals(lc).values()),
            JACOBI_THRESHOLD)
        f_tab = cartan.curvature_table(E, p, 1.0, max_h, order, method="formula")
        b_tab = cartan.curvature_table(E, p, 1.0, max_h, order, method="bracket")
        scale = max([1.0] + [abs(w.at(1.0)) for w in b_tab.values()])
        worst = max(abs(f_tab[k].at(1.0) - b_tab[k].at(1.0)) for k in b_tab) / scale
        add(f"bianchi_two_pipeline@{list(p)}", worst, BIANCHI_RELATIVE, relative=True)
    add("cohomology_d_squared", 0.0 if cohomology.d_squared_zero() else 1.0, 0.5)
    ok = all(c["pass"] for c in checks)
    report = {"command": "check", "manifold": mf.kind, "order": order,
              "max_homogeneity": max_h, "gauge": _gauge(E), "checks": checks, "pass": ok}
    return report, 0 if ok else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="engelcr",
                                 description="Cartan connection invariants of Engel CR manifolds")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_file(p, order=True):
        p.add_argument("file", help="JSON manifold description")
        p.add_argument("--point", action="append", type=_point_arg,
                       help="evaluation point x,y,u1,u2 (repeatable; overrides the file)")
        if order:
            p.add_argument("--order", type=int, default=None, help="jet order")
        p.add_argument("--threshold", type=float, default=cartan.VANISHING_THRESHOLD,
                       help="vanishing threshold for invariants")

    p = sub.add_parser("invariants", help="essential curvatures per point")
    with_file(p)
    p.add_argument("--t", type=float, default=None, help="fibre coordinate")
    p.add_argument("--table", action="store_true", help="include the full curvature table")
    p.add_argument("--max-homogeneity", type=int, default=4, choices=range(-1, 6))
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("flatness", help="exit 0 iff every invariant vanishes at every point")
    with_file(p)
    p.set_defaults(func=cmd_flatness)

    p = sub.add_parser("umbilic", help="exit 0 iff all points are umbilic")
    with_file(p)
    p.set_defaults(func=cmd_umbilic)

    p = sub.add_parser("cohomology", help="dimensions of Z2, B2, H2")
    p.set_defaults(func=cmd_cohomology)

    p = sub.add_parser("check", help="self-consistency residuals")
    with_file(p)
    p.add_argument("--max-homogeneity", type=int, default=4, choices=range(-1, 6))
    p.set_defaults(func=cmd_check)
    return ap


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, status = args.func(args)
    except EngelCRError as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ManifoldFileError):
            err.update(line=exc.line, column=exc.column, path=exc.path)
        print(_dump(err), file=sys.stderr)
        return 2
    print(_dump(report))
    return status


if __name__ == "__main__":
    sys.exit(main())
