"""
Command-line entry point: nmq-reduce <build|check|reduce|compare|bode>.

Builds augmented models from parameter files, checks physical
realizability, runs the H2 reduction pipeline, compares two models and
exports frequency-response data.  Exit codes: 0 success/pass, 1
check-fail, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .linalg import LinalgError, NotHurwitzError, is_hurwitz
from .model import QuadratureModel, build_complex, build_example, to_quadrature
from .model import paper_example_params, reference_reduced_model, with_input_count
from .realizability import MACHINE_TOL, check_quadrature
from .analysis import (
    bode_data,
    build_error_system,
    default_omega_grid,
    error_gramians,
    write_bode_csv,
)
from .reduction import ReductionSpec, reduce_model
from .io import FileFormatError, load_model, load_params, save_json, save_model
from .sdp import SdpError

_BUILTINS = {
    "paper-example": build_example,
    "paper-example-reduced": reference_reduced_model,
}


def _load_any(args, attr="model", builtin_attr="builtin") -> QuadratureModel:
    builtin = getattr(args, builtin_attr, None)
    if builtin is not None:
        if builtin not in _BUILTINS:
            raise FileFormatError(
                f"unknown builtin {builtin!r}; available: {sorted(_BUILTINS)}"
            )
        return _BUILTINS[builtin]()
    path = getattr(args, attr, None)
    if path is None:
        raise FileFormatError("either --model or --builtin is required")
    return load_model(path)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def cmd_build(args) -> int:
    if args.builtin is not None:
        if args.builtin not in _BUILTINS:
            raise FileFormatError(
                f"unknown builtin {args.builtin!r}; available: {sorted(_BUILTINS)}"
            )
        mdl = _BUILTINS[args.builtin]()
    elif args.params is not None:
        mdl = to_quadrature(build_complex(load_params(args.params)))
    else:
        raise FileFormatError("either --params or --builtin is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = check_quadrature(mdl, tol=args.tol)
    save_model(out / "model.json", mdl)
    save_json(out / "realizability.json", report.to_dict())
    print(
        f"model m={mdl.m} k={mdl.k} n_in={mdl.n_in} written to {out}/model.json "
        f"realizable={'yes' if report.passed else 'no'}"
    )
    return 0


def cmd_check(args) -> int:
    mdl = _load_any(args)
    report = check_quadrature(mdl, tol=args.tol)
    for name, residual in report.residuals.items():
        flag = "pass" if residual <= report.tol else "FAIL"
        print(f"{name:28s} residual={_fmt(residual):>12s}  {flag}")
    print(f"overall: {'pass' if report.passed else 'FAIL'} (tol={_fmt(report.tol)})")
    return 0 if report.passed else 1


def cmd_reduce(args) -> int:
    mdl = _load_any(args)
    if args.r >= mdl.k:
        print(f"error: r must be < n (got r={args.r}, n={mdl.k})", file=sys.stderr)
        return 2
    seed = args.seed
    if os.environ.get("NMQ_SEED"):
        seed = int(os.environ["NMQ_SEED"])
    spec = ReductionSpec(r=args.r, method=args.method, seed=seed,
                         grad_tol=args.tol if args.tol is not None else 1e-7)
    result = reduce_model(mdl, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(out / "reduced_model.json", result.reduced)
    save_json(
        out / "reduction.json",
        {
            "h2_error": result.h2_error,
            "realizability": result.report.to_dict(),
            "diagnostics": {
                k: (v if isinstance(v, (int, float, str, bool)) else str(v))
                for k, v in result.diagnostics.items()
            },
        },
    )
    hur = is_hurwitz(result.reduced.A)
    print(
        f"r={args.r} h2={_fmt(result.h2_error)} "
        f"realizable={'yes' if result.report.passed else 'no'} "
        f"hurwitz={'yes' if hur else 'no'}"
    )
    return 0


def cmd_compare(args) -> int:
    a = load_model(args.model_a)
    b = load_model(args.model_b)
    if a.m != b.m:
        print(
            f"error: principal dimensions differ ({a.m} vs {b.m})", file=sys.stderr
        )
        return 2
    orig, red = (a, b) if a.n_inputs >= b.n_inputs else (b, a)
    es = build_error_system(orig, red)
    g = error_gramians(es)
    j_p = float(np.trace(es.C_hat @ g.P @ es.C_hat.T))
    j_q = float(np.trace(es.B_hat.T @ g.Q @ es.B_hat))
    print(f"h2_error            = {_fmt(np.sqrt(max(j_p, 0.0)))}")
    print(f"trace_CPC           = {_fmt(j_p)}")
    print(f"trace_BQB           = {_fmt(j_q)}")
    out_contrib = np.diag(es.C_hat @ g.P @ es.C_hat.T)
    in_contrib = np.diag(es.B_hat.T @ g.Q @ es.B_hat)
    print("per-output:", " ".join(_fmt(v) for v in out_contrib))
    print("per-input: ", " ".join(_fmt(v) for v in in_contrib))
    if orig.n_inputs != red.n_inputs:
        trunc = with_input_count(orig, red.n_in)
        es_t = build_error_system(trunc, red)
        g_t = error_gramians(es_t)
        j_t = float(np.trace(es_t.C_hat @ g_t.P @ es_t.C_hat.T))
        print(f"h2_error (shared input channels only) = "
              f"{_fmt(np.sqrt(max(j_t, 0.0)))}")
    for name, mdl in (("first", a), ("second", b)):
        rep = check_quadrature(mdl, tol=args.tol)
        print(
            f"{name}: hurwitz={'yes' if is_hurwitz(mdl.A) else 'no'} "
            f"realizable={'yes' if rep.passed else 'no'}"
        )
    return 0


def _parse_grid(spec: str):
    try:
        lo, hi, points = spec.split(":")
        return default_omega_grid(float(lo), float(hi), int(points))
    except ValueError as exc:
        raise FileFormatError(
            f"--grid must be lo:hi:points (log-spaced), got {spec!r}"
        ) from exc


def cmd_bode(args) -> int:
    models = [load_model(p) for p in args.models]
    if not 1 <= len(models) <= 2:
        print("error: bode takes one or two model files", file=sys.stderr)
        return 2
    grid = _parse_grid(args.grid) if args.grid else default_omega_grid()
    if len(models) == 1:
        table = bode_data(models[0], grid)
        write_bode_csv(args.out, table)
        print(f"{len(table)} rows written to {args.out}")
        return 0
    a, b = models
    if a.m != b.m:
        print("error: principal dimensions differ", file=sys.stderr)
        return 2
    orig, red = (a, b) if a.n_inputs >= b.n_inputs else (b, a)
    red_padded = with_input_count(red, orig.n_in)
    table = bode_data(orig, grid)
    table_red = bode_data(red_padded, grid)
    delta = table_red["mag_db"] - table["mag_db"]
    write_bode_csv(args.out, table, delta_mag_db=delta)
    print(f"{len(table)} rows written to {args.out}")
    # summary over channels live in both models (structurally zero
    # channels of a padded reduced model sit at the -inf floor)
    live = (table["mag_db"] > -250.0) & (table_red["mag_db"] > -250.0)
    if np.any(live):
        low = grid <= np.median(grid)
        low_rows = np.repeat(low, len(table) // len(grid)) & live
        print(
            f"max |delta_mag_db| (live channels) = "
            f"{_fmt(float(np.max(np.abs(delta[live]))))}; "
            f"low-frequency half: "
            f"{_fmt(float(np.max(np.abs(delta[low_rows])))) if np.any(low_rows) else 'n/a'}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nmq-reduce",
        description=(
            "Build, verify and H2-reduce augmented models of linear "
            "non-Markovian quantum systems."
        ),
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a model from physical parameters")
    p.add_argument("--params", help="parameter file (JSON)")
    p.add_argument("--builtin", help="named built-in parameter set")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--tol", type=float, default=MACHINE_TOL)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("check", help="check physical realizability")
    p.add_argument("--model", help="model file")
    p.add_argument("--builtin", help="named built-in model")
    p.add_argument("--tol", type=float, default=MACHINE_TOL)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reduce", help="reduce the ancillary subsystem")
    p.add_argument("--model", help="model file")
    p.add_argument("--builtin", help="named built-in model")
    p.add_argument("--r", type=int, required=True, help="target ancillary modes")
    p.add_argument(
        "--method",
        default="sdp-then-gradient",
        choices=["gradient", "sdp-lift", "sdp-then-gradient"],
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None, help="gradient tolerance")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("compare", help="H2 distance between two models")
    p.add_argument("model_a")
    p.add_argument("model_b")
    p.add_argument("--tol", type=float, default=MACHINE_TOL)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bode", help="frequency-response CSV export")
    p.add_argument("models", nargs="+", help="one or two model files")
    p.add_argument("--grid", default=None, help="lo:hi:points (log-spaced)")
    p.add_argument("--out", default="bode.csv", help="output CSV file")
    p.set_defaults(func=cmd_bode)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NotHurwitzError, SdpError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except LinalgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
