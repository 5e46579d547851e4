"""Command-line front end.

Subcommands map one-to-one onto the library modules:

    finslerlab validate  --metric spec.json [--samples N] [--seed S]
    finslerlab geodesic  --metric spec.json --x0 0,0 --v0 1,0 --T 1
    finslerlab distance  --metric spec.json --p 0,0 --q 0.3,0.1
    finslerlab transport --metric spec.json --x0 0,0 --v0 1,0 --w 0,1
    finslerlab curvature --metric spec.json [--x ... --v ... --w ...|--scan N]
    finslerlab classify  --metric spec.json [--seed S] [--strict]

Exit codes: 0 success; 1 negative verdict (validate always, classify
only with --strict); 2 input/spec error; 3 numerical failure.  CSV/JSON
artifacts land in --out (default: $FINSLERLAB_OUT or the working
directory).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import ClassifyConfig, classify_report
from .curvature import flag_data, nonpositivity_scan
from .errors import (
    BVPError,
    DegeneracyError,
    InputError,
    IntegrationError,
    QuadratureError,
    SamplingError,
    ValidationError,
)
from .geodesics import integrate_geodesic, local_distance
from .metrics import load_spec, validate_spec
from .transport import parallel_transport

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _vector(text):
    try:
        return np.array([float(part) for part in text.split(",")], dtype=float)
    except ValueError as exc:
        raise InputError(f"expected a comma-separated vector, got {text!r}") from exc


def _out_dir(args):
    out = args.out or os.environ.get("FINSLERLAB_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path, payload):
    payload = dict(payload)
    payload["tool_version"] = __version__
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_validate(args):
    spec = load_spec(args.metric)
    report = validate_spec(spec, sample_count=args.samples, seed=args.seed)
    print(report.summary())
    if args.json:
        _write_json(_out_dir(args) / args.json, report.to_dict())
    return EXIT_OK if report.passed else EXIT_VERDICT


def _cmd_geodesic(args):
    spec = load_spec(args.metric)
    trace = integrate_geodesic(
        spec, _vector(args.x0), _vector(args.v0), args.T, rtol=args.rtol,
        atol=args.atol,
    )
    out = _out_dir(args) / (args.csv or "geodesic.csv")
    trace.to_csv(out)
    end = trace.endpoint()
    print(f"status: {trace.status}")
    print("endpoint: " + ",".join(f"{c:.9g}" for c in end))
    print(f"speed drift: {trace.speed_drift():.3e}")
    print(f"trace written to {out}")
    return EXIT_OK


def _cmd_distance(args):
    spec = load_spec(args.metric)
    result = local_distance(spec, _vector(args.p), _vector(args.q), tol=args.tol)
    print(f"{result.value:.12g}")
    if args.json:
        _write_json(
            _out_dir(args) / args.json,
            {
                "p": result.p.tolist(),
                "q": result.q.tolist(),
                "distance": result.value,
                "v0": result.v0.tolist(),
                "iterations": result.iterations,
                "residual": result.residual,
            },
        )
    return EXIT_OK


def _cmd_transport(args):
    spec = load_spec(args.metric)
    trace = integrate_geodesic(spec, _vector(args.x0), _vector(args.v0), args.T)
    W0 = np.column_stack([_vector(w) for w in args.w])
    frame = parallel_transport(spec, trace, W0)
    out = _out_dir(args) / (args.csv or "frame.csv")
    frame.to_csv(out)
    drift = frame.norm_drift()
    print("F-norm drift per vector: " + ",".join(f"{d:.3e}" for d in drift))
    print(f"frame written to {out}")
    return EXIT_OK


def _cmd_curvature(args):
    spec = load_spec(args.metric)
    if args.scan:
        report = nonpositivity_scan(
            spec, sample_count=args.scan, seed=args.seed
        )
        print(
            f"nonpositive: {report.nonpositive}  "
            f"max eigenvalue: {report.max_eigenvalue:.6e}"
        )
        out = _out_dir(args)
        if args.csv:
            report.to_csv(out / args.csv)
            print(f"scan written to {out / args.csv}")
        if args.json:
            _write_json(out / args.json, report.to_dict())
        return EXIT_OK
    if args.x is None or args.v is None or args.w is None:
        raise InputError("curvature needs either --scan N or --x/--v/--w")
    fd = flag_data(spec, _vector(args.x), _vector(args.v), _vector(args.w))
    print(f"{fd.K:.12g}")
    return EXIT_OK


def _cmd_classify(args):
    spec = load_spec(args.metric)
    config = ClassifyConfig(
        seed=args.seed,
        busemann_pairs=args.pairs,
        holonomy_loops=args.loops,
        curvature_samples=args.curvature_samples,
    )
    report = classify_report(spec, config)
    out = _out_dir(args) / (args.json or "classify.json")
    payload = report.to_dict()
    payload["tool_version"] = __version__
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for key, val in report.verdicts.items():
        print(f"{key}: {val}")
    print(f"theorem_consistent: {report.consistent}")
    print(f"report written to {out}")
    if report.incomplete:
        print(f"INCOMPLETE: {report.incomplete}")
        return EXIT_NUMERICAL
    negative = (
        not report.verdicts["berwald"]
        or not report.verdicts["flag_nonpositive"]
        or report.verdicts["busemann_sampled"] != "pass"
    )
    if args.strict and negative:
        return EXIT_VERDICT
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="finslerlab",
        description="numerical laboratory for smooth Finsler metrics",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--metric", required=True, help="metric spec JSON file")
        p.add_argument("--out", help="output directory (or $FINSLERLAB_OUT)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="sample-check a metric spec")
    common(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("geodesic", help="integrate a geodesic, write a CSV trace")
    common(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--v0", required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--rtol", type=float, default=1e-9)
    p.add_argument("--atol", type=float, default=1e-11)
    p.add_argument("--csv", help="trace file name (default geodesic.csv)")
    p.set_defaults(func=_cmd_geodesic)

    p = sub.add_parser("distance", help="forward distance d_F(p, q)")
    common(p)
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--json", help="also write the result as JSON")
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("transport", help="parallel-transport vectors, write CSV")
    common(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--v0", required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument(
        "--w", action="append", required=True,
        help="initial vector (repeatable)",
    )
    p.add_argument("--csv", help="frame file name (default frame.csv)")
    p.set_defaults(func=_cmd_transport)

    p = sub.add_parser("curvature", help="flag curvature or nonpositivity scan")
    common(p)
    p.add_argument("--x")
    p.add_argument("--v")
    p.add_argument("--w")
    p.add_argument("--scan", type=int, help="run a scan with N samples")
    p.add_argument("--csv", help="scan CSV file name")
    p.add_argument("--json", help="scan report JSON file name")
    p.set_defaults(func=_cmd_curvature)

    p = sub.add_parser("classify", help="run all rigidity criteria")
    common(p)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--loops", type=int, default=20)
    p.add_argument("--curvature-samples", type=int, default=500)
    p.add_argument("--json", help="report file name (default classify.json)")
    p.add_argument(
        "--strict", action="store_true",
        help="exit 1 when any verdict is negative",
    )
    p.set_defaults(func=_cmd_classify)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (InputError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (
        IntegrationError,
        BVPError,
        DegeneracyError,
        QuadratureError,
        SamplingError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
