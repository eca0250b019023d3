"""Command-line front end: ``ulam-float {construct,verify,export-mesh,sweep}``.

Exit codes: 0 success, 2 parameter error, 3 construction failure,
4 verification failure.  Failures print a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bodyfile import dumps, mesh_to_obj, read_body, revolve_mesh, write_body
from .errors import ParameterError, UlamError, VerificationError
from .profile import ProfileBody

EXIT_OK, EXIT_PARAM, EXIT_CONSTRUCT, EXIT_VERIFY = 0, 2, 3, 4


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"not a number: {text}") from exc
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text}")
        return v
    return parse


def _amplitude(text):
    if text == "auto":
        return "auto"
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("amplitude must be a number or 'auto'") from exc
    if not v >= 0:
        raise argparse.ArgumentTypeError("amplitude must be non-negative")
    return v


def _apply_threads(args):
    if getattr(args, "threads", None) is not None:
        os.environ["ULAM_FLOAT_THREADS"] = str(args.threads)


# ---------------------------------------------------------------------------
# construct


def cmd_construct(args):
    dim, tau = args.dim, args.tau
    if dim < 3:
        raise ParameterError(f"dimension must be at least 3, got {dim}")
    if not 0.0 < tau < 0.25:
        raise ParameterError(f"tau must lie in (0, 1/4), got {tau}")
    params = {"dim": dim, "tau": tau, "amplitude_mode": "auto" if args.amplitude == "auto" else "fixed",
              "order": args.order, "eps0": args.eps0, "seed": args.seed}
    chart = None
    report = {}
    if args.amplitude == 0:
        body = ProfileBody.unit_ball(dim, meta={"generator": "ball", "dim": dim, "tau": tau,
                                                "amplitude": 0.0, "order": args.order})
        params["amplitude"] = 0.0
    else:
        kw = {"eps0": args.eps0, "order": args.order}
        if args.intervals:
            kw["n_intervals"] = args.intervals
        if dim % 2 == 0:
            from .even_construct import build_even_auto, build_even_body

            auto, fixed = build_even_auto, build_even_body
        else:
            from .odd_construct import build_odd_auto, build_odd_body

            auto, fixed = build_odd_auto, build_odd_body
        if args.amplitude == "auto":
            body, info = auto(dim, tau, **kw)
            params["halvings"] = len(info["attempts"]) - 1
        else:
            body, info = fixed(dim, tau, args.amplitude, **kw)
        params["amplitude"] = body.meta["amplitude"]
        params["n_intervals"] = body.meta["n_intervals"]
        chart = info["chart"]
        report = {k: info[k] for k in ("concavity_margin", "refinement", "overlap", "plus_r_residual",
                                       "slope_at_axis") if k in info}
    write_body(args.out, body, chart=chart, parameters=params, code_version=__version__)
    out = {"out": str(args.out), "dim": dim, "amplitude": params["amplitude"]}
    out.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in report.items()})
    print(dumps(out), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def run_checks(body, bump, args):
    """Run the enabled checks; returns ``(summary dict, csv text or None)``."""
    from . import verify as V
    from .hydrostatics import body_volume

    vol = body_volume(body)
    delta = args.delta * vol
    half = abs(args.delta - 0.5) < 1e-12
    constructed = body.meta.get("amplitude", 0.0) > 0
    checks = {}

    def add(name, value, threshold, ok=None):
        ok = bool(value < threshold) if ok is None else bool(ok)
        checks[name] = {"value": value, "threshold": threshold, "pass": ok}

    csv = None
    equilibrium = None
    if half:
        rep = V.equilibrium_sweep(body, args.directions, threads=args.threads, bump=bump)
        csv = rep.to_csv()
        add("max_tilt", rep.max_tilt, V.tilt_tolerance(body.dim))
        add("moment_spread", rep.moment_spread, 1e-6)
        add("max_vol_residual", rep.max_volume_residual, 1e-10 * vol)
        equilibrium = rep.summary()
        tab = V.slope_family_residuals(body, bump, np.linspace(0.0, 10.0, args.slopes))
        add("slope_volume_residual", float(tab["volume"].max()), 1e-7)
        add("slope_centroid_residual", float(tab["centroid"].max()), 1e-7)
        if constructed:
            add("asymmetry_certificate", rep.asymmetry, 0.0, ok=rep.asymmetry > 0)
    cpt = V.characteristic_point_check(body, delta, args.cpt_directions)
    add("characteristic_point_forward", cpt["forward_max"], 1e-6)
    add("characteristic_point_converse", cpt["converse_max_rel"], 1e-9)
    soc = V.surface_of_centers_check(body, delta, V.direction_angles(args.center_angles))
    add("centers_tangency", soc["tangency_max"], 1e-6)
    add("centers_derivative", soc["fl1_max"], 1e-5)
    add("centers_convex", 0.0, 0.0, ok=soc["convex"])
    if half:
        add("centers_circularity", soc["circularity"], 1e-6)
        add("centers_midpoint", soc["midpoint_max"], 1e-8)
    if body.dim % 2 == 1 and body.meta.get("generator") == "odd":
        tau = body.meta["tau"]
        alphas = np.linspace(0.0, np.arctan(1.0 - 2.0 * tau), 41)
        cs = V.central_section_residuals(body, alphas)
        add("central_sections", cs["max"], 1e-6)
    lines = V.random_section_lines(args.oracle_samples, args.seed)
    add("oracle_equivalence", V.oracle_equivalence(body, lines), 1e-8)
    summary = {
        "pass": all(c["pass"] for c in checks.values()),
        "dim": body.dim,
        "delta_fraction": args.delta,
        "equilibrium_sweep": "run" if half else "skipped",
        "checks": checks,
    }
    if equilibrium is not None:
        summary["equilibrium"] = equilibrium
    return summary, csv


def cmd_verify(args):
    if not 0.0 < args.delta < 1.0:
        raise ParameterError("--delta is a volume fraction in (0, 1)")
    body, bump, _ = read_body(args.body)
    summary, csv = run_checks(body, bump, args)
    stem = Path(args.out_prefix) if args.out_prefix else Path(args.body).with_suffix("")
    summary_path = Path(f"{stem}_summary.json")
    summary_path.write_text(dumps(summary), encoding="utf-8")
    if csv is not None:
        Path(f"{stem}_equilibrium.csv").write_text(csv, encoding="utf-8")
    print(dumps({"pass": summary["pass"], "summary": str(summary_path),
                 "failed": [k for k, c in summary["checks"].items() if not c["pass"]]}), end="")
    if not summary["pass"]:
        failed = ", ".join(k for k, c in summary["checks"].items() if not c["pass"])
        raise VerificationError(f"checks failed: {failed}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# export-mesh and sweep


def cmd_export_mesh(args):
    body, _, _ = read_body(args.body)
    n_polar = args.polar or args.resolution
    n_az = args.azimuth or args.resolution
    verts, faces = revolve_mesh(body, n_polar, n_az)
    Path(args.out).write_text(mesh_to_obj(verts, faces), encoding="utf-8")
    print(dumps({"out": str(args.out), "vertices": len(verts), "faces": len(faces)}), end="")
    return EXIT_OK


def cmd_sweep(args):
    from .verify import residual_table_csv, slope_family_residuals

    body, bump, _ = read_body(args.body)
    if not args.s_max > args.s_min:
        raise ParameterError("--s-max must exceed --s-min")
    tab = slope_family_residuals(body, bump, np.linspace(args.s_min, args.s_max, args.samples))
    text = residual_table_csv(tab)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="ulam-float", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--threads", type=_positive(int), default=None,
                        help="worker cap (also ULAM_FLOAT_THREADS)")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized spot checks")

    c = sub.add_parser("construct", help="build a body and write its JSON file")
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--tau", type=float, default=0.05)
    c.add_argument("--amplitude", type=_amplitude, default="auto")
    c.add_argument("--intervals", type=_positive(int), default=None, help="march grid intervals")
    c.add_argument("--order", type=_positive(int), default=6, help="bump derivative order")
    c.add_argument("--eps0", type=_positive(float), default=1e-6, help="concavity margin floor")
    c.add_argument("--out", required=True)
    common(c)
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", help="run the verification suite on a body file")
    v.add_argument("body")
    v.add_argument("--directions", type=_positive(int), default=128)
    v.add_argument("--delta", type=float, default=0.5, help="submerged volume fraction")
    v.add_argument("--slopes", type=_positive(int), default=50)
    v.add_argument("--cpt-directions", type=_positive(int), default=8)
    v.add_argument("--center-angles", type=_positive(int), default=32)
    v.add_argument("--oracle-samples", type=_positive(int), default=20)
    v.add_argument("--out-prefix", default=None, help="prefix for the CSV and summary JSON")
    common(v)
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("export-mesh", help="revolve the profile into an OBJ mesh")
    m.add_argument("body")
    m.add_argument("--resolution", type=int, default=64)
    m.add_argument("--polar", type=int, default=None)
    m.add_argument("--azimuth", type=int, default=None)
    m.add_argument("--out", required=True)
    common(m)
    m.set_defaults(func=cmd_export_mesh)

    s = sub.add_parser("sweep", help="CSV of the slope-family integral residuals")
    s.add_argument("body")
    s.add_argument("--s-min", type=float, default=0.0)
    s.add_argument("--s-max", type=float, default=10.0)
    s.add_argument("--samples", type=_positive(int), default=200)
    s.add_argument("--out", default=None)
    common(s)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_threads(args)
        return args.func(args)
    except UlamError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
