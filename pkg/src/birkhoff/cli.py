"""Command-line front end: ``birkhoff <subcommand> [options]``.

Every subcommand prints one JSON report to stdout (a list of reports when
several ``--input`` files are given).  Reports are deterministic for fixed
input and flags; wall-clock timings appear only with ``--timings``.

Exit codes: 0 success, 2 parse/usage error, 3 loop not invertible on the
circle, 4 factorization failed, 5 internal invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bch import (
    DEFAULT_ORDER,
    DEFAULT_RADIUS,
    LieAlgebraRep,
    LoopAlgebraElement,
    bch_multiply,
    bch_remainder,
    group_factorize_local,
    lipschitz_estimate,
    pointwise_expm,
    split_remainder,
)
from .errors import BirkhoffError, InvalidArgumentError, InvariantViolation
from .io import LoopSpec, matrix_to_json, read_loop_spec, spec_from_dict, spec_to_dict
from .laurent import MatrixLoop, get_policy, truncation_policy
from .matrix import (
    MatrixFactorization,
    full_factorize,
    partial_indices,
    total_index,
    verify_factorization,
)
from .norms import matrix_norm, norm_report, project_ominus, project_plus, wiener_distance
from .scalar import scalar_factorize, winding_number

__all__ = ["main", "run_command", "build_parser"]

DEFAULT_TOL = 1e-8
LIPSCHITZ_CONTRACTION = 1.0
# 1/4 plus sampling slack
LIPSCHITZ_BCH = 0.27


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _as_matrix(loop):
    if isinstance(loop, MatrixLoop):
        return loop
    return MatrixLoop(loop.coeffs[:, None, None], loop.kmin)


def _loop_dict(loop):
    return spec_to_dict(LoopSpec.from_loop(loop))


def _norms_dict(f):
    rep = norm_report(f)
    return {
        "wiener": rep.wiener,
        "weighted": {str(m): v for m, v in rep.weighted.items()},
        "sup_circle": rep.sup_circle,
        "annulus": {str(n): v for n, v in rep.annulus.items()},
    }


def _verify_block(g, fact, args):
    rep = verify_factorization(g, fact, samples_=args.samples, tol=args.tol)
    block = {
        "passed": rep.passed,
        "checks": rep.checks,
        "residual": rep.residual,
        "plus_disk_margin": _finite(rep.plus_disk_margin),
        "minus_exterior_margin": _finite(rep.minus_exterior_margin),
        "minus_at_infinity": matrix_to_json(rep.minus_at_infinity),
        "normalized": rep.normalized,
    }
    return block, rep.per_sample


# subcommand handlers: (spec, args) -> (report fields, per-sample trace or None)


def _factor(spec, args):
    g = spec.to_matrix_loop()
    if args.mode == "scalar":
        fact = scalar_factorize(spec.to_series(), method=args.method, tol=args.tol)
        mfact = MatrixFactorization(_as_matrix(fact.plus), (fact.kappa,), _as_matrix(fact.minus), fact.residual)
        result = {"method": fact.method, "kappa": fact.kappa, "indices": [fact.kappa]}
        recon = fact.residual
    elif args.mode == "matrix":
        mfact = full_factorize(g, bound=args.bound, order=args.enumeration, tol=args.tol)
        result = {"method": mfact.method, "indices": list(mfact.indices)}
        if g.n == 1:
            result["kappa"] = mfact.indices[0]
        recon = mfact.residual
    else:
        basis = spec.lie_basis if spec.lie_basis is not None else None
        rep = LieAlgebraRep(list(basis)) if basis is not None else LieAlgebraRep.gl(g.n)
        local = group_factorize_local(g, rep, order=args.order, radius=args.radius, tol=args.tol)
        mfact = MatrixFactorization(local.plus, (0,) * g.n, local.minus, local.residual, method="split")
        result = {
            "method": "split",
            "indices": [0] * g.n,
            "split_iterations": local.split.iterations,
            "split_contraction": local.split.contraction,
        }
        recon = local.residual
    verify, trace = _verify_block(g, mfact, args)
    result["plus"] = _loop_dict(mfact.plus)
    result["minus"] = _loop_dict(mfact.minus)
    fields = {
        "result": result,
        "residuals": {"reconstruction": recon, "verify": verify["residual"]},
        "margins": {"plus_disk": verify["plus_disk_margin"], "minus_exterior": verify["minus_exterior_margin"]},
        "verify": verify,
        "pass": verify["passed"] and recon <= args.tol,
    }
    return fields, trace


def _winding(spec, args):
    if spec.n == 1:
        k = winding_number(spec.to_series())
    else:
        k = total_index(spec.to_matrix_loop())
    return {"result": {"winding": k}, "pass": True}, None


def _indices(spec, args):
    idx = partial_indices(spec.to_matrix_loop(), bound=args.bound, order=args.enumeration, tol=args.tol)
    return {"result": {"indices": list(idx), "sum": sum(idx)}, "pass": True}, None


def _project(spec, args):
    g = spec.to_matrix_loop()
    p, m = project_plus(g), project_ominus(g)
    defect = wiener_distance(p + m, g)
    fields = {
        "result": {"plus": _loop_dict(p), "ominus": _loop_dict(m)},
        "residuals": {"decomposition": defect},
        "pass": defect == 0.0,
    }
    return fields, None


def _norms(spec, args):
    return {"result": {}, "pass": True}, None


def _verify(spec, args):
    try:
        with open(args.report, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidArgumentError(f"cannot read factor report {args.report}: {exc}") from None
    if isinstance(doc, list):
        doc = doc[0]
    try:
        payload = doc["result"]
        plus = spec_from_dict(payload["plus"]).to_matrix_loop()
        minus = spec_from_dict(payload["minus"]).to_matrix_loop()
        indices = tuple(int(k) for k in payload["indices"])
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"factor report lacks a factorization payload ({exc})") from None
    g = spec.to_matrix_loop()
    verify, trace = _verify_block(g, MatrixFactorization(plus, indices, minus), args)
    fields = {
        "result": {"indices": list(indices)},
        "residuals": {"verify": verify["residual"]},
        "verify": verify,
        "pass": verify["passed"],
    }
    return fields, trace


def _bch_check(args):
    rep = LieAlgebraRep.sl2()
    rng = np.random.default_rng(args.seed)
    scale = min(0.05, args.radius)
    worst, worst_trace = 0.0, None
    for _ in range(args.pairs):
        pair = []
        for _ in range(2):
            c = rng.normal(size=(5, rep.dim)) + 1j * rng.normal(size=(5, rep.dim))
            e = LoopAlgebraElement.from_coordinates(rep, c, -2)
            pair.append(e * (scale * rng.uniform(0.1, 1.0) / e.norm()))
        x, y = pair
        z = bch_multiply(x, y, args.order, args.radius)
        lhs = pointwise_expm(x.series, args.samples) @ pointwise_expm(y.series, args.samples)
        err = matrix_norm(lhs - pointwise_expm(z.series, args.samples))
        if worst_trace is None or err.max() > worst:
            worst, worst_trace = float(err.max()), err
    zero = LoopAlgebraElement.zero(rep)
    lip = lipschitz_estimate(
        lambda v: split_remainder(v, args.order, args.radius), zero, args.radius, samples=200, seed=args.seed
    )
    lip_bch = lipschitz_estimate(
        lambda a, b: bch_remainder(a, b, args.order, args.radius), (zero, zero), args.radius, samples=100, seed=args.seed
    )
    checks = {
        "exp_oracle": worst <= args.tol,
        "contraction": lip < LIPSCHITZ_CONTRACTION,
        "bch_lipschitz": lip_bch <= LIPSCHITZ_BCH,
    }
    fields = {
        "result": {
            "pairs": args.pairs,
            "order": args.order,
            "radius": args.radius,
            "lipschitz_remainder": lip,
            "lipschitz_bch": lip_bch,
        },
        "residuals": {"exp_oracle": worst},
        "checks": checks,
        "pass": all(checks.values()),
    }
    return fields, worst_trace


HANDLERS = {
    "factor": _factor,
    "winding": _winding,
    "indices": _indices,
    "project": _project,
    "norms": _norms,
    "verify": _verify,
}


def _config(args):
    cfg = {"tol": args.tol, "band_cap": get_policy().band_cap, "coeff_eps": get_policy().coeff_eps}
    for key in ("mode", "method", "samples", "order", "radius", "bound", "enumeration", "pairs", "seed"):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    return cfg


def _error_dict(exc, code):
    return {"type": type(exc).__name__, "message": str(exc), "exit_code": code}


def _classify(exc):
    if isinstance(exc, BirkhoffError):
        return exc.exit_code
    return InvariantViolation.exit_code


def _write_trace(path, values):
    N = len(values)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_index", "theta", "residual"])
        for k, r in enumerate(values):
            w.writerow([k, repr(2 * math.pi * k / N), repr(float(r))])


def _trace_path(base, i, count):
    if count == 1:
        return base
    p = Path(base)
    return str(p.with_name(f"{p.stem}.{i}{p.suffix}"))


def _run_one(args, argv, path, index, count):
    report = {"command": list(argv), "input": {"path": str(path)}}
    code, trace = 0, None
    started = time.perf_counter()
    try:
        with truncation_policy(band_cap=args.band_cap) if args.band_cap else truncation_policy():
            report["config"] = _config(args)
            if path is None:
                fields, trace = _bch_check(args)
            else:
                spec, raw = read_loop_spec(path)
                report["input"]["sha256"] = hashlib.sha256(raw).hexdigest()
                report["norms"] = _norms_dict(spec.to_matrix_loop())
                fields, trace = HANDLERS[args.command](spec, args)
            report.update(fields)
            report["error"] = None
    except OSError as exc:
        code = 2
        report.update({"pass": False, "error": _error_dict(exc, code)})
    except Exception as exc:  # noqa: BLE001
        code = _classify(exc)
        report.update({"pass": False, "error": _error_dict(exc, code)})
        if code == 5:
            print(f"internal error on {path}; please report:", file=sys.stderr)
            traceback.print_exc(file=sys.stderr)
    if code == 0 and report.get("pass") is False and args.command in ("factor", "verify"):
        code = 4
    if args.timings:
        report["timings"] = {"seconds": time.perf_counter() - started}
    if trace is not None and getattr(args, "trace_csv", None):
        _write_trace(_trace_path(args.trace_csv, index, count), trace)
    return code, report


def _add_common(p, *, inputs=True, trace=False):
    if inputs:
        p.add_argument("--input", "-i", nargs="+", action="extend", required=True, metavar="FILE",
                       help="loop-spec file(s)")
        p.add_argument("--jobs", "-j", type=int, default=1, help="process inputs concurrently")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="residual tolerance (default 1e-8)")
    p.add_argument("--band-cap", type=int, default=None, help="override the truncation band cap")
    p.add_argument("--samples", type=int, default=256, help="circle samples for residual checks")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings in reports")
    if trace:
        p.add_argument("--trace-csv", metavar="PATH", help="write per-sample residuals as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="birkhoff", description="Birkhoff factorization of loops on the unit circle.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factor", help="factor a loop")
    _add_common(p, trace=True)
    p.add_argument("--mode", choices=("scalar", "matrix", "group"), default="matrix")
    p.add_argument("--method", choices=("auto", "exp-log", "roots"), default="auto", help="scalar route")
    p.add_argument("--bound", type=int, default=None, help="bound on |partial index| in the search")
    p.add_argument("--enumeration", choices=("balanced", "spread-desc"), default="balanced")
    p.add_argument("--order", type=int, default=DEFAULT_ORDER, help="BCH truncation order (group mode)")
    p.add_argument("--radius", type=float, default=DEFAULT_RADIUS, help="BCH ball radius (group mode)")

    p = sub.add_parser("winding", help="winding number (of det g for matrix loops)")
    _add_common(p)

    p = sub.add_parser("indices", help="partial indices of a matrix loop")
    _add_common(p)
    p.add_argument("--bound", type=int, default=None)
    p.add_argument("--enumeration", choices=("balanced", "spread-desc"), default="balanced")

    p = sub.add_parser("project", help="split a loop into P+ and P- parts")
    _add_common(p)

    p = sub.add_parser("norms", help="Wiener, weighted, sup and annulus norms")
    _add_common(p)

    p = sub.add_parser("verify", help="re-check a factorization stored in a factor report")
    _add_common(p, trace=True)
    p.add_argument("--report", required=True, metavar="FILE", help="JSON report written by `factor`")

    p = sub.add_parser("bch-check", help="BCH exp-oracle and Lipschitz suites on random sl2 loops")
    _add_common(p, inputs=False, trace=True)
    p.add_argument("--order", type=int, default=DEFAULT_ORDER)
    p.add_argument("--radius", type=float, default=DEFAULT_RADIUS)
    p.add_argument("--pairs", type=int, default=50, help="number of random pairs")
    p.add_argument("--seed", type=int, default=0)
    return parser


def run_command(argv=None, stdout=None) -> int:
    """Run one CLI invocation and return its exit code.

    The report is written to ``stdout`` (default ``sys.stdout``).
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    inputs = getattr(args, "input", None) or [None]
    jobs = max(1, getattr(args, "jobs", 1))
    count = len(inputs)
    work = [(args, argv, path, i, count) for i, path in enumerate(inputs)]
    if jobs > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda w: _run_one(*w), work))
    else:
        outcomes = [_run_one(*w) for w in work]
    reports = [r for _, r in outcomes]
    payload = reports[0] if count == 1 else reports
    stdout.write(json.dumps(payload, indent=2, allow_nan=False) + "\n")
    stdout.flush()
    return max(code for code, _ in outcomes)


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
