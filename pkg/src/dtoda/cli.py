"""Command-line front end.

Every command prints one JSON artifact to stdout (schema-validated,
sorted keys, so reruns with the same config are byte-identical) and,
with --out-dir, drops the same JSON plus CSV/SVG side files there.
Errors become a structured JSON object on stderr and exit status 1;
a verify run with failing checks exits 2.
"""

import argparse
import csv
import json
import os
import sys
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from .conformal import (ExteriorMap, boundary_curve, map_from_json_dict,
                        univalence_check)
from .density import density_from_json_dict
from .growth import (grow_front_tracking, grow_moment_driven, initial_state,
                     map_to_cone, map_to_cylinder)
from .identities import run_suite
from .inverse import InverseProblem, cold_start_map, solve_domain
from .moments import (MomentVector, dual_moments, forward_moments,
                      moments_from_json_dict)
from .tau import tau_double_integral, tau_via_moments_auto


class CliError(Exception):
    """Configuration problem surfaced before any computation ran."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved for
    # verify-suite failure here, so route usage problems through the
    # common error path instead
    def error(self, message):
        raise CliError(message)


# ----------------------------------------------------------------------
# schema plumbing
# ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def _schema(name):
    with resources.files("dtoda.schemas").joinpath(name).open("r") as f:
        return json.load(f)


def _validate(obj, schema_name, source=None):
    try:
        jsonschema.validate(obj, _schema(schema_name))
    except jsonschema.ValidationError as e:
        where = source or schema_name
        raise CliError("%s does not match %s: %s"
                       % (where, schema_name, e.message)) from e


def _load_json(path, schema_name):
    try:
        with open(path, "r") as f:
            obj = json.load(f)
    except OSError as e:
        raise CliError("cannot read %s: %s" % (path, e.strerror)) from e
    except json.JSONDecodeError as e:
        raise CliError("%s is not valid JSON: %s" % (path, e)) from e
    _validate(obj, schema_name, source=path)
    return obj


def _load_map(path):
    return map_from_json_dict(_load_json(path, "map.schema.json"))


def _load_density(path):
    return density_from_json_dict(_load_json(path, "density.schema.json"))


def _load_moments(path):
    return moments_from_json_dict(_load_json(path, "moments.schema.json"))


# ----------------------------------------------------------------------
# serialization helpers
# ----------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _resolved_config(args):
    cfg = {k: _jsonable(v) for k, v in vars(args).items() if k != "func"}
    cfg["version"] = __version__
    return cfg


def _pairs(z):
    return [[float(v.real), float(v.imag)] for v in np.asarray(z).ravel()]


def _dump(doc):
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _out_dir(args):
    od = getattr(args, "out_dir", None)
    if od:
        os.makedirs(od, exist_ok=True)
    return od


def _cell(v):
    if isinstance(v, (int, np.integer)):
        return "%d" % v
    return "%.17g" % v


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


# ----------------------------------------------------------------------
# SVG output: static, one file per frame, no timestamps
# ----------------------------------------------------------------------

def _viewbox(curves, margin=0.06):
    xs = np.concatenate([np.asarray(c).real for c in curves])
    ys = np.concatenate([-np.asarray(c).imag for c in curves])
    w = max(xs.max() - xs.min(), 1e-12)
    h = max(ys.max() - ys.min(), 1e-12)
    pad = margin * max(w, h)
    return (xs.min() - pad, ys.min() - pad, w + 2 * pad, h + 2 * pad)


def _write_svg(path, samples, viewbox, closed):
    x0, y0, w, h = viewbox
    pts = " L ".join("%.9g %.9g" % (z.real, -z.imag) for z in samples)
    d = "M " + pts + (" Z" if closed else "")
    text = (
        '<svg xmlns="http://www.w3.org/2000/svg" '
        'viewBox="%.9g %.9g %.9g %.9g" width="480" height="480" '
        'preserveAspectRatio="xMidYMid meet">\n'
        '<path d="%s" fill="none" stroke="#000" stroke-width="%.6g"/>\n'
        "</svg>\n" % (x0, y0, w, h, d, 0.004 * max(w, h)))
    with open(path, "w") as f:
        f.write(text)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def _run_moments(args):
    d = _load_density(args.density)
    m = _load_map(args.map)
    if args.orders < 1:
        raise CliError("-N must be at least 1")
    mv = forward_moments(m, d, args.orders, M=args.contour_nodes)
    dm = dual_moments(m, d, args.orders, M=args.contour_nodes)
    od = _out_dir(args)
    csv_name = None
    if od:
        csv_name = "moments.csv"
        rows = [[0, mv.t0, 0.0, dm.v0, 0.0]]
        rows += [[k + 1, mv.t[k].real, mv.t[k].imag,
                  dm.v[k].real, dm.v[k].imag] for k in range(mv.N)]
        _write_csv(os.path.join(od, csv_name),
                   ["k", "t_re", "t_im", "v_re", "v_im"], rows)
    payload = {"moments": mv.to_json_dict(), "duals": dm.to_json_dict(),
               "artifacts": {"csv": csv_name}}
    return payload, "out.moments.schema.json", 0


def _run_invert(args):
    d = _load_density(args.density)
    targets = _load_moments(args.targets)
    if args.initial_map:
        init = _load_map(args.initial_map)
    else:
        init = cold_start_map(targets, d, J=args.degree)
    prob = InverseProblem(targets, d, init,
                          max_iter=args.max_iter, tol=args.tol)
    sol = solve_domain(prob, M=args.contour_nodes)
    achieved = forward_moments(sol.map, d, targets.N, verify=False)
    od = _out_dir(args)
    map_name = None
    if od:
        map_name = "map.json"
        map_doc = sol.map.to_json_dict()
        _validate(map_doc, "map.schema.json")
        with open(os.path.join(od, map_name), "w") as f:
            f.write(_dump(map_doc))
    payload = {"map": sol.map.to_json_dict(),
               "residual_norm": float(sol.residual_norm),
               "iterations": int(sol.iterations),
               "jacobian_condition": float(sol.jacobian_condition),
               "achieved": achieved.to_json_dict(),
               "artifacts": {"map": map_name}}
    return payload, "out.invert.schema.json", 0


def _run_tau(args):
    d = _load_density(args.density)
    m = _load_map(args.map)
    results = []
    if args.method in ("double", "both"):
        ts = tau_double_integral(m, d, tol=args.tol)
        results.append({"method": ts.method, "value": ts.value,
                        "estimated_error": ts.estimated_error})
    if args.method in ("moments", "both"):
        ts = tau_via_moments_auto(m, d, N=args.orders, M=args.contour_nodes)
        results.append({"method": ts.method, "value": ts.value,
                        "estimated_error": ts.estimated_error})
    vals = [r["value"] for r in results]
    spread = float(max(vals) - min(vals)) if len(vals) > 1 else None
    _out_dir(args)
    payload = {"results": results, "spread": spread}
    return payload, "out.tau.schema.json", 0


def _grow_states(args, m, d):
    N = args.orders if args.orders else m.J + 1
    if args.steps == 0:
        # zero steps: echo the input domain as a single-state trajectory
        s0 = initial_state(m, d, N=N)
        method = "MomentDriven" if args.method == "moment" else "FrontTracking"
        return [s0], np.zeros((1, s0.conserved.N)), method
    if args.dt is None or args.dt <= 0:
        raise CliError("--dt must be positive when --steps > 0")
    if args.method == "moment":
        s0 = initial_state(m, d, N=N)
        traj = grow_moment_driven(s0, d, args.dt, args.steps)
    else:
        c0 = boundary_curve(m, args.markers)
        refit = args.refit_J if args.refit_J else m.J + 3
        traj = grow_front_tracking(c0, d, args.dt, args.steps, refit,
                                   heun=args.heun)
    return list(traj.states), np.asarray(traj.drift_report), traj.method


def _run_grow(args):
    d = _load_density(args.density)
    m = _load_map(args.map)
    states, drift, method = _grow_states(args, m, d)
    final_map = m if args.steps == 0 else states[-1].map
    final = boundary_curve(final_map, args.markers).samples
    od = _out_dir(args)
    csv_name = None
    frames = []
    if od:
        csv_name = "states.csv"
        J = states[0].map.J
        header = ["step", "t0", "r"]
        for j in range(J + 1):
            header += ["u%d_re" % j, "u%d_im" % j]
        header.append("drift_max")
        rows = []
        for s, dr in zip(states, drift):
            row = [s.step_index, s.t0, s.map.conformal_radius]
            for u in s.map.coeffs:
                row += [u.real, u.imag]
            row.append(float(np.max(dr)) if len(dr) else 0.0)
            rows.append(row)
        _write_csv(os.path.join(od, csv_name), header, rows)
        if args.svg_every > 0:
            picks = [s for s in states
                     if s.step_index % args.svg_every == 0
                     or s.step_index == states[-1].step_index]
            curves = [boundary_curve(s.map, args.markers).samples
                      for s in picks]
            vb = _viewbox(curves)
            for s, c in zip(picks, curves):
                name = "frame_%04d.svg" % s.step_index
                _write_svg(os.path.join(od, name), c, vb, closed=True)
                frames.append(name)
    payload = {"method": method,
               "conserved": states[0].conserved.to_json_dict(),
               "states": [{"step": int(s.step_index), "t0": float(s.t0),
                           "map": s.map.to_json_dict()} for s in states],
               "drift": [[float(v) for v in row] for row in drift],
               "final_curve": _pairs(final),
               "artifacts": {"csv": csv_name, "frames": frames}}
    return payload, "out.grow.schema.json", 0


def _random_domain(d, t0, J, seed):
    """Seeded univalent perturbation of the circle matching t0."""
    circle = cold_start_map(MomentVector(float(t0), np.zeros(0, complex)),
                            d, J=J)
    r = circle.conformal_radius
    rng = np.random.default_rng(seed)
    raw = rng.uniform(-1.0, 1.0, (J + 1, 2))
    scale = 0.2 * r / np.arange(2.0, J + 3.0)
    u = (raw[:, 0] + 1j * raw[:, 1]) * scale
    for _ in range(8):
        m = ExteriorMap(r, u)
        if univalence_check(m):
            return m
        u = 0.5 * u
    raise CliError("random domain stayed non-univalent after shrinking")


def _run_verify(args):
    d = _load_density(args.density)
    base_map = None
    if args.random_domain:
        base_map = _random_domain(d, args.t0, args.degree, args.seed)
        base = forward_moments(base_map, d, base_map.J + 1, verify=False)
    elif args.targets:
        base = _load_moments(args.targets)
        if args.map:
            base_map = _load_map(args.map)
    elif args.map:
        base_map = _load_map(args.map)
        N = args.orders if args.orders else base_map.J + 1
        base = forward_moments(base_map, d, N, verify=False)
    else:
        raise CliError("verify needs --targets, --map, or --random-domain")
    reports = run_suite(base, d, suite=args.suite, base_map=base_map)
    _out_dir(args)
    all_passed = all(r.passed for r in reports)
    payload = {"all_passed": all_passed,
               "reports": [r.to_json_dict() for r in reports]}
    return payload, "out.verify.schema.json", 0 if all_passed else 2


def _run_curve(args, kind):
    m = _load_map(args.map)
    c = boundary_curve(m, args.markers)
    if kind == "cone":
        ic = map_to_cone(c, args.alpha)
    else:
        ic = map_to_cylinder(c, args.R, args.r0)
    od = _out_dir(args)
    csv_name = svg_name = None
    if od:
        csv_name = "curve.csv"
        rows = [[z.real, z.imag, t.real, t.imag]
                for z, t in zip(ic.samples, ic.tangents)]
        _write_csv(os.path.join(od, csv_name),
                   ["re", "im", "tangent_re", "tangent_im"], rows)
        svg_name = "curve.svg"
        _write_svg(os.path.join(od, svg_name), ic.samples,
                   _viewbox([ic.samples]), closed=False)
    payload = {"kind": kind, "samples": _pairs(ic.samples),
               "tangents": _pairs(ic.tangents),
               "artifacts": {"csv": csv_name, "svg": svg_name}}
    return payload, "out.curve.schema.json", 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def _build_parser():
    p = _Parser(prog="dtoda",
                description="Harmonic moments, tau-functions and Laplacian "
                            "growth for radial background densities.")
    p.add_argument("--version", action="version",
                   version="dtoda " + __version__)
    sub = p.add_subparsers(dest="command", required=True,
                           parser_class=_Parser)

    def add_common(sp):
        sp.add_argument("--out-dir", default=None, metavar="DIR",
                        help="directory for JSON/CSV/SVG artifacts")
        sp.add_argument("--seed", type=int, default=0,
                        help="seed for randomized domain generation")

    sp = sub.add_parser("moments", help="harmonic and dual moments of a "
                                        "mapped domain")
    sp.add_argument("--map", required=True, metavar="PATH")
    sp.add_argument("--density", required=True, metavar="PATH")
    sp.add_argument("-N", "--orders", type=int, required=True)
    sp.add_argument("-M", "--contour-nodes", type=int, default=None)
    add_common(sp)
    sp.set_defaults(func=_run_moments)

    sp = sub.add_parser("invert", help="recover the domain from target "
                                       "moments")
    sp.add_argument("--targets", required=True, metavar="PATH")
    sp.add_argument("--density", required=True, metavar="PATH")
    sp.add_argument("--initial-map", default=None, metavar="PATH")
    sp.add_argument("-J", "--degree", type=int, default=None,
                    help="truncation of the cold-start map")
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--max-iter", type=int, default=40)
    sp.add_argument("-M", "--contour-nodes", type=int, default=None)
    add_common(sp)
    sp.set_defaults(func=_run_invert)

    sp = sub.add_parser("tau", help="evaluate the tau-function")
    sp.add_argument("--map", required=True, metavar="PATH")
    sp.add_argument("--density", required=True, metavar="PATH")
    sp.add_argument("--method", choices=("double", "moments", "both"),
                    default="both")
    sp.add_argument("--tol", type=float, default=1e-6,
                    help="target accuracy of the double integral")
    sp.add_argument("-N", "--orders", type=int, default=None)
    sp.add_argument("-M", "--contour-nodes", type=int, default=None)
    add_common(sp)
    sp.set_defaults(func=_run_tau)

    sp = sub.add_parser("grow", help="Laplacian growth trajectory")
    sp.add_argument("--map", required=True, metavar="PATH")
    sp.add_argument("--density", required=True, metavar="PATH")
    sp.add_argument("--method", choices=("moment", "front"), required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--dt", type=float, default=None,
                    help="t0 increment per step")
    sp.add_argument("-N", "--orders", type=int, default=None,
                    help="conserved moment orders (moment method)")
    sp.add_argument("--markers", type=int, default=64)
    sp.add_argument("--refit-J", type=int, default=None,
                    help="map truncation refit at each front step")
    sp.add_argument("--heun", action="store_true")
    sp.add_argument("--svg-every", type=int, default=0,
                    help="write an SVG frame every K steps (0 = none)")
    add_common(sp)
    sp.set_defaults(func=_run_grow)

    sp = sub.add_parser("verify", help="run identity-check suites")
    sp.add_argument("--density", required=True, metavar="PATH")
    sp.add_argument("--suite", default="all",
                    choices=("all", "gradient", "green", "w", "hirota",
                             "third", "parameter", "homogeneity", "dkdv"))
    sp.add_argument("--targets", default=None, metavar="PATH")
    sp.add_argument("--map", default=None, metavar="PATH")
    sp.add_argument("-N", "--orders", type=int, default=None)
    sp.add_argument("--random-domain", action="store_true",
                    help="draw a seeded univalent test domain")
    sp.add_argument("--t0", type=float, default=1.0,
                    help="t0 of the random test domain")
    sp.add_argument("-J", "--degree", type=int, default=3,
                    help="truncation of the random test domain")
    add_common(sp)
    sp.set_defaults(func=_run_verify)

    sp = sub.add_parser("cone", help="boundary image on the cone z^alpha")
    sp.add_argument("--map", required=True, metavar="PATH")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--markers", type=int, default=256)
    add_common(sp)
    sp.set_defaults(func=lambda a: _run_curve(a, "cone"))

    sp = sub.add_parser("cylinder", help="boundary image on the cylinder "
                                         "R log(z/r0)")
    sp.add_argument("--map", required=True, metavar="PATH")
    sp.add_argument("-R", type=float, required=True)
    sp.add_argument("--r0", type=float, required=True)
    sp.add_argument("--markers", type=int, default=256)
    add_common(sp)
    sp.set_defaults(func=lambda a: _run_curve(a, "cylinder"))

    return p


def main(argv=None):
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    args = None
    try:
        args = _build_parser().parse_args(argv)
        payload, schema_name, code = args.func(args)
        doc = {"version": __version__, "config": _resolved_config(args)}
        doc.update(payload)
        _validate(doc, schema_name, source="artifact")
        text = _dump(doc)
        sys.stdout.write(text)
        od = getattr(args, "out_dir", None)
        if od:
            with open(os.path.join(od, args.command + ".json"), "w") as f:
                f.write(text)
        return code
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except Exception as e:
        err = {"version": __version__,
               "error": {"type": type(e).__name__, "message": str(e)},
               "config": (_resolved_config(args) if args is not None
                          else {"argv": argv})}
        sys.stderr.write(_dump(err))
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
