"""Command-line front door.

Subcommands:
    solve    solve one instance, write trajectory CSV + diagnostics JSON
    band     solve a family over alpha/lambda, write per-run CSVs + envelope
    verify   run the hypothesis checks, write the report JSON
    vi       solve a single variational inequality given inline data
    example  materialize the built-in instance and run verify + solve + band

Exit codes: 0 success, 1 usage/config error, 2 non-convergence,
3 hypothesis failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile

import numpy as np

from .config import LoadedProblem, apply_overrides, build_problem, example_config, load_config
from .errors import (
    ConfigError,
    FdviError,
    MaxPicardExceeded,
    NonfiniteValue,
    NonMonotoneError,
    NotConvergedError,
)
from .hypotheses import verify
from .solver import BandRun, band_envelope, picard_solve, solve_band
from .vi import AffineOperator, BoxSet, VIInstance, solve_vi, vi_residual

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2
EXIT_HYPOTHESIS = 3


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_json(path: str, payload) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_bundle(bundle, out_dir: str, stem: str) -> None:
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".tmp-", suffix=".csv")
    os.close(fd)
    bundle.write_csv(tmp)
    os.replace(tmp, csv_path)
    _atomic_json(os.path.join(out_dir, f"{stem}_diagnostics.json"), bundle.diagnostics)


def _load(args) -> LoadedProblem:
    doc = load_config(args.config)
    doc = apply_overrides(doc, getattr(args, "override", None))
    if getattr(args, "seed", None) is not None:
        doc.setdefault("sampling", {})["seed"] = args.seed
    return build_problem(doc)


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        items = [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ConfigError("/", f"bad {what} list {text!r}: {exc}") from exc
    if not items:
        raise ConfigError("/", f"{what} list must not be empty")
    return items


def cmd_solve(args) -> int:
    problem = _load(args)
    os.makedirs(args.out, exist_ok=True)
    bundle = picard_solve(problem.spec, problem.solver, problem.selection)
    _write_bundle(bundle, args.out, "solution")
    print(f"converged in {bundle.diagnostics['iterations']} sweeps; "
          f"final residual {bundle.diagnostics['final_residual']:.3e}")
    print(f"wrote {os.path.join(args.out, 'solution.csv')}")
    return EXIT_OK


def _band_stem(alpha: float, lam: float) -> str:
    return f"band_alpha{alpha:g}_lambda{lam:g}"


def _run_band(problem: LoadedProblem, alphas, lambdas, out_dir: str) -> int:
    runs = solve_band(problem.spec, problem.solver, alphas, lambdas)
    status = []
    for run in runs:
        lam0 = float(run.lam[0])
        stem = _band_stem(run.alpha, lam0)
        entry = {"alpha": run.alpha, "lambda": run.lam.tolist(), "converged": run.ok}
        if run.ok:
            _write_bundle(run.bundle, out_dir, stem)
            entry["csv"] = f"{stem}.csv"
        else:
            entry["error"] = run.error
            print(f"run alpha={run.alpha:g} lambda={lam0:g} failed: {run.error}", file=sys.stderr)
        status.append(entry)
    ok_runs = [r for r in runs if r.ok]
    if ok_runs:
        nodes, ymin, ymax = band_envelope(ok_runs)
        n = ymin.shape[1]
        header = ["t"]
        for i in range(n):
            header += [f"y{i + 1}_min", f"y{i + 1}_max"]
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".tmp-", suffix=".csv")
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for j, t in enumerate(nodes):
                row = [f"{t:.17g}"]
                for i in range(n):
                    row += [f"{ymin[j, i]:.17g}", f"{ymax[j, i]:.17g}"]
                writer.writerow(row)
        os.replace(tmp, os.path.join(out_dir, "envelope.csv"))
    _atomic_json(os.path.join(out_dir, "band_runs.json"), status)
    print(f"{len(ok_runs)}/{len(runs)} runs converged; wrote {out_dir}")
    return EXIT_OK if len(ok_runs) == len(runs) else EXIT_NO_CONVERGENCE


def cmd_band(args) -> int:
    problem = _load(args)
    alphas = _parse_float_list(args.alpha, "alpha")
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise ConfigError("/", f"alpha {a} outside [0, 1]")
    lambdas = _parse_float_list(args.lam, "lambda")
    for l in lambdas:
        if not -1.0 <= l <= 1.0:
            raise ConfigError("/", f"lambda {l} outside [-1, 1]")
    os.makedirs(args.out, exist_ok=True)
    return _run_band(problem, alphas, lambdas, args.out)


def cmd_verify(args) -> int:
    problem = _load(args)
    report = verify(problem.spec, problem.sampling, claimed=problem.claimed)
    _atomic_json(args.out, report.as_dict())
    verdict = "pass" if report.overall_pass else "FAIL"
    print(f"hypotheses {verdict}: rho = {report.rho:.4f}, delta = {report.delta}")
    for flag in report.flags:
        print(f"note: {flag}")
    print(f"wrote {args.out}")
    return EXIT_OK if report.overall_pass else EXIT_HYPOTHESIS


def cmd_vi(args) -> int:
    w = np.array(_parse_float_list(args.w, "w"))
    rows = [r for r in args.M.split(";") if r.strip() != ""]
    mat = np.array([_parse_float_list(r, "M row") for r in rows])
    b = np.array(_parse_float_list(args.b, "b"))
    lo = [np.inf if x == "inf" else -np.inf if x == "-inf" else float(x) for x in args.k_lo.split(",")]
    hi = [np.inf if x == "inf" else -np.inf if x == "-inf" else float(x) for x in args.k_hi.split(",")]
    inst = VIInstance(BoxSet(np.array(lo), np.array(hi)), w, AffineOperator(mat, b))
    u = solve_vi(inst, tol=args.tol)
    payload = {"u": u.tolist(), "residual": vi_residual(inst, u), "mu": inst.s.mu}
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_example(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    doc = example_config()
    _atomic_json(os.path.join(args.out, "config.json"), doc)
    problem = build_problem(doc)
    report = verify(problem.spec, problem.sampling, claimed=problem.claimed)
    _atomic_json(os.path.join(args.out, "report.json"), report.as_dict())
    print(f"verify: rho = {report.rho:.4f} ({'pass' if report.overall_pass else 'FAIL'})")
    for flag in report.flags:
        print(f"note: {flag}")
    bundle = picard_solve(problem.spec, problem.solver, problem.selection)
    _write_bundle(bundle, args.out, "solution")
    print(f"solve: converged in {bundle.diagnostics['iterations']} sweeps")
    band_dir = os.path.join(args.out, "band")
    os.makedirs(band_dir, exist_ok=True)
    band_rc = _run_band(problem, [0.0, 0.5, 1.0], [-1.0, 0.0, 1.0], band_dir)
    if not report.overall_pass:
        return EXIT_HYPOTHESIS
    return band_rc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdvi", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", required=True, help="output directory")
    p_solve.add_argument("--override", action="append", metavar="KEY.PATH=VALUE")
    p_solve.add_argument("--seed", type=int)
    p_solve.set_defaults(fn=cmd_solve)

    p_band = sub.add_parser("band", help="solve a family over alpha/lambda")
    p_band.add_argument("--config", required=True)
    p_band.add_argument("--out", required=True)
    p_band.add_argument("--alpha", required=True, help="comma-separated levels, e.g. 0,0.5,1")
    p_band.add_argument("--lambda", dest="lam", required=True,
                        help="comma-separated selections, e.g. --lambda=-1,0,1")
    p_band.add_argument("--override", action="append", metavar="KEY.PATH=VALUE")
    p_band.add_argument("--seed", type=int)
    p_band.set_defaults(fn=cmd_band)

    p_verify = sub.add_parser("verify", help="check the existence hypotheses")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--out", required=True, help="report JSON path")
    p_verify.add_argument("--override", action="append", metavar="KEY.PATH=VALUE")
    p_verify.add_argument("--seed", type=int)
    p_verify.set_defaults(fn=cmd_verify)

    p_vi = sub.add_parser("vi", help="solve one variational inequality")
    p_vi.add_argument("--w", required=True, help="comma-separated constant term")
    p_vi.add_argument("--M", required=True, help="matrix rows separated by ';'")
    p_vi.add_argument("--b", required=True)
    p_vi.add_argument("--K-lo", dest="k_lo", required=True, help="box lower bounds (inf allowed)")
    p_vi.add_argument("--K-hi", dest="k_hi", required=True)
    p_vi.add_argument("--tol", type=float, default=1e-10)
    p_vi.set_defaults(fn=cmd_vi)

    p_ex = sub.add_parser("example", help="run the built-in worked instance end to end")
    p_ex.add_argument("--out", required=True)
    p_ex.set_defaults(fn=cmd_example)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MaxPicardExceeded, NotConvergedError, NonfiniteValue) as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except NonMonotoneError as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except FdviError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
