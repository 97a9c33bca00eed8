"""Command-line front end.

Exit codes: 0 pass, 1 check failure, 2 usage or spec error, 3 invariant
violation at load, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import bodies
from .bodies import BodyOracle, check_invariants, volume_monte_carlo
from .capacities_ehz import clarke_dual_solve, ehz_closed_form
from .capacities_gh import c_infinity_estimate, gh_capacity_concave, gh_capacity_convex
from .errors import (CaplabError, InvalidInputError, InvalidSpecError, InvariantViolation, SolverDidNotConverge,
                     TruncationError, UnsupportedBodyError, WrongConvexityError)
from .report import VerificationReport, _jsonable, emit_report
from .suite import CHECKS, run_verification_suite
from .systolic import systolic_ratio
from .toric import _number_list, cube_capacity, profile_from_spec, toric_body

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3, 4

_BODY_KEYS = {
    "ball": {"type", "dim", "capacity"},
    "ellipsoid": {"type", "a"},
    "polydisc": {"type", "a"},
    "box": {"type", "half_widths"},
    "pproduct": {"type", "p", "factors"},
    "toric": {"type", "profile"},
}


# -- spec parsing -------------------------------------------------------------------------


def _number(value, pointer):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise InvalidSpecError("expected a finite number", pointer)
    return value


def body_from_spec(spec, pointer: str = "") -> BodyOracle:
    """Build a body from a decoded JSON spec; unknown or missing keys are errors."""
    if not isinstance(spec, dict):
        raise InvalidSpecError("body must be a JSON object", pointer)
    kind = spec.get("type")
    if kind not in _BODY_KEYS:
        raise InvalidSpecError(f"unknown body type {kind!r}", pointer + "/type")
    for key in spec:
        if key not in _BODY_KEYS[kind]:
            raise InvalidSpecError(f"unknown key {key!r}", f"{pointer}/{key}")
    for key in sorted(_BODY_KEYS[kind] - {"type"}):
        if key not in spec:
            raise InvalidSpecError(f"missing key {key!r}", f"{pointer}/{key}")
    try:
        if kind == "ball":
            dim = spec["dim"]
            if isinstance(dim, bool) or not isinstance(dim, int):
                raise InvalidSpecError("dim must be an integer", "/dim")
            return bodies.ball(_number(spec["capacity"], "/capacity"), dim)
        if kind in ("ellipsoid", "polydisc"):
            a = _number_list(spec["a"], "/a")
            return bodies.ellipsoid(a) if kind == "ellipsoid" else bodies.polydisc(a)
        if kind == "box":
            return bodies.box(_number_list(spec["half_widths"], "/half_widths"))
        if kind == "toric":
            return toric_body(profile_from_spec(spec["profile"], "/profile"))
    except InvalidSpecError as exc:
        raise InvalidSpecError(exc.message, pointer + exc.pointer) from None
    p = spec["p"]
    if p == "inf":
        p = math.inf
    elif isinstance(p, bool) or not isinstance(p, (int, float)) or not p >= 1:
        raise InvalidSpecError('p must be a number >= 1 or "inf"', pointer + "/p")
    factors = spec["factors"]
    if not isinstance(factors, list) or not factors:
        raise InvalidSpecError("factors must be a non-empty list", pointer + "/factors")
    parsed = [body_from_spec(f, f"{pointer}/factors/{i}") for i, f in enumerate(factors)]
    return bodies.p_product(float(p), parsed)


def parse_body_spec(source: str, samples: int = 100, seed: int = 0) -> BodyOracle:
    """Parse inline JSON (starting with '{') or a path to a JSON file, then sample the invariants."""
    text = source
    if not source.lstrip().startswith("{"):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidSpecError(f"malformed JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    body = body_from_spec(spec)
    check_invariants(body, samples=samples, seed=seed)
    return body


# -- output ---------------------------------------------------------------------------------


def _emit_record(record: dict, fmt: str, out) -> None:
    record = _jsonable(record)
    if fmt == "json":
        text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        for key in sorted(record):
            value = record[key]
            writer.writerow([key, json.dumps(value, sort_keys=True) if isinstance(value, (dict, list)) else value])
        text = buf.getvalue()
    _write(text, out)


def _write(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _profile_of(body: BodyOracle):
    if body.kind != "toric":
        raise UnsupportedBodyError(f"this command needs a toric body, got {body.kind}")
    return body.params["profile"]


# -- commands -------------------------------------------------------------------------------


def cmd_capacity(args) -> int:
    body = parse_body_spec(args.spec, seed=args.seed)
    record = {"kind": body.kind, "dim": body.dim}
    try:
        record["c_ehz"] = ehz_closed_form(body)
    except UnsupportedBodyError as exc:
        record["c_ehz"] = None
        record["c_ehz_note"] = str(exc)
    if body.kind == "toric":
        profile = body.params["profile"]
        record["k"] = args.k
        record["convexity"] = profile.convexity
        if profile.convex:
            record["c_gh_convex"] = gh_capacity_convex(profile, args.k)
        if profile.concave:
            record["c_gh_concave"] = gh_capacity_concave(profile, args.k)
    status = EXIT_OK
    if args.solver:
        try:
            result = clarke_dual_solve(body, p=args.p, seed=args.seed)
            record.update({"c_solver": result.capacity, "solver_iterations": result.iterations,
                           "solver_grad_norm": result.grad_norm})
        except SolverDidNotConverge as exc:
            record.update({"c_solver": exc.best_capacity, "solver_grad_norm": exc.grad_norm,
                           "solver_error": str(exc)})
            status = EXIT_FAIL
    _emit_record(record, args.format, args.out)
    return status


def cmd_volume(args) -> int:
    body = parse_body_spec(args.spec, seed=args.seed)
    mean, se = volume_monte_carlo(body, args.samples, args.seed)
    exact = body.closed_form_volume
    record = {"kind": body.kind, "dim": body.dim, "closed_form": exact, "monte_carlo": mean,
              "standard_error": se, "samples": args.samples, "seed": args.seed}
    if exact is not None and se > 0:
        record["z_score"] = (mean - exact) / se
    _emit_record(record, args.format, args.out)
    return EXIT_OK


def cmd_systolic(args) -> int:
    body = parse_body_spec(args.spec, seed=args.seed)
    capacity = ehz_closed_form(body)
    volume = body.closed_form_volume
    source = "closed_form"
    if volume is None:
        volume, _ = volume_monte_carlo(body, args.samples, args.seed)
        source = "monte_carlo"
    n = body.dim // 2
    record = {"kind": body.kind, "n": n, "capacity": capacity, "volume": volume, "volume_source": source,
              "systolic_ratio": systolic_ratio(capacity, volume, n)}
    _emit_record(record, args.format, args.out)
    return EXIT_OK


def cmd_cinf(args) -> int:
    body = parse_body_spec(args.spec, seed=args.seed)
    profile = _profile_of(body)
    fn = gh_capacity_convex if profile.convex else gh_capacity_concave
    est = c_infinity_estimate(lambda k: fn(profile, k), args.kmax)
    record = {"k_max": args.kmax, "estimate": est.estimate, "tail_slope": est.tail_slope,
              "ks": list(est.ks), "c_k_over_k": list(est.normalized), "cube_capacity": cube_capacity(profile)}
    _emit_record(record, args.format, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    selection = []
    for item in args.check or []:
        selection.extend(s for s in item.split(",") if s)
    report = run_verification_suite(selection or None, seed=args.seed)
    text = emit_report(report, args.format)
    _write(text, args.out)
    print(report.summary(), file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_report(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        text = fh.read()
    try:
        report = VerificationReport.from_json(text)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InvalidSpecError(f"not a verification report: {exc}") from None
    if args.format == "summary":
        _write(report.summary() + "\n", args.out)
    else:
        _write(emit_report(report, args.format), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


# -- entry point ----------------------------------------------------------------------------


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _p_value(text):
    if text in ("inf", "infinity"):
        return math.inf
    value = float(text)
    if not value > 1:
        raise argparse.ArgumentTypeError("the dual exponent must exceed 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caplab", description="Symplectic capacities of convex bodies and p-products.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, spec=True, fmt=("json", "csv")):
        if spec:
            p.add_argument("--spec", required=True, help="body spec: inline JSON or a path to a JSON file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=fmt, default=fmt[0])
        p.add_argument("--out", help="write the output here instead of stdout")

    p = sub.add_parser("capacity", help="EHZ capacity (closed form, optional solver) and GH capacity c^k")
    common(p)
    p.add_argument("--k", type=_positive_int, default=1)
    p.add_argument("--p", type=_p_value, default=2.0, help="exponent of the dual action functional")
    p.add_argument("--solver", action="store_true", help="also run the loop-space solver")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("volume", help="closed-form and Monte Carlo volume")
    common(p)
    p.add_argument("--samples", type=_positive_int, default=10 ** 6)
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("systolic", help="systolic ratio c / (n! Vol)^(1/n)")
    common(p)
    p.add_argument("--samples", type=_positive_int, default=10 ** 6)
    p.set_defaults(func=cmd_systolic)

    p = sub.add_parser("cinf", help="c^k/k for a toric body at k = kmax")
    common(p)
    p.add_argument("--kmax", type=_positive_int, default=2000)
    p.set_defaults(func=cmd_cinf)

    p = sub.add_parser("verify", help="run the verification suite")
    common(p, spec=False)
    p.add_argument("--check", action="append", metavar="NAME",
                   help=f"check(s) to run, repeatable or comma-separated; default all of: {', '.join(sorted(CHECKS))}")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="re-emit a saved JSON report as JSON, CSV or a summary table")
    common(p, spec=False, fmt=("json", "csv", "summary"))
    p.add_argument("--in", dest="input", required=True, help="JSON report written by verify")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidSpecError as exc:
        where = f" at {exc.pointer}" if exc.pointer else ""
        print(f"caplab: spec error{where}: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"caplab: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InvalidInputError, WrongConvexityError, UnsupportedBodyError, TruncationError) as exc:
        print(f"caplab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"caplab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CaplabError as exc:
        print(f"caplab: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
