"""Command-line front end: multiply, verify, model, simulate.

multiply runs one algorithm on matrix files and writes the product;
verify sweeps seeded random instances checking results against the plain
product and instrumented counts against the closed-form predictions;
model emits the cost-model curve CSVs; simulate runs one MXU GEMM from a
key/value config and emits a report row.  All commands are deterministic
under a fixed seed, and any violated invariant exits nonzero with a
message naming it.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import costmodel, sim
from .algos import DigitParams, kmm_n, ksm_n, ksmm_n, mm1, mm_n, reference_product, sm_n
from .bitmat import (
    KmmError,
    OpCounter,
    UMatrix,
    ceil_log2,
    matrices_equal,
    random_matrix,
    read_matrix,
    write_matrix,
)

VERIFY_DIGITS = (1, 2, 4)
VERIFY_WIDTHS = (8, 16, 32)
VERIFY_DIMS = (2, 4, 8)


def _counter_lines(counts: OpCounter) -> list[str]:
    lines = []
    for name in ("mults", "adds", "accums", "shifts"):
        table = getattr(counts, name)
        if table:
            body = " ".join(f"{k}:{v}" for k, v in sorted(table.items()))
            lines.append(f"{name:7s} {body}")
    lines.append(f"total ops {counts.total_ops()}")
    return lines


def _cmd_multiply(args: argparse.Namespace) -> int:
    a = read_matrix(args.a)
    b = read_matrix(args.b)
    if args.alg in ("sm", "ksm"):
        if a.shape() != (1, 1) or b.shape() != (1, 1):
            raise KmmError(f"--alg {args.alg} is scalar; expected 1x1 matrices")
        if a.width != b.width:
            raise KmmError(f"operand widths differ: {a.width} vs {b.width}")
        params = DigitParams(args.n, a.width, args.p)
        if args.alg == "sm":
            res = sm_n(a.at(0, 0), b.at(0, 0), params)
        else:
            res = ksm_n(a.at(0, 0), b.at(0, 0), params, concat_free=args.concat_free)
        out = UMatrix.from_rows([[res.value]], 2 * a.width)
    elif args.alg == "mm1":
        res = mm1(a, b, args.p)
        out = res.value
    else:
        if a.width != b.width:
            raise KmmError(f"operand widths differ: {a.width} vs {b.width}")
        params = DigitParams(args.n, a.width, args.p)
        if args.alg == "mmn":
            res = mm_n(a, b, params)
        elif args.alg == "kmm":
            res = kmm_n(a, b, params)
        else:
            res = ksmm_n(a, b, params, concat_free=args.concat_free)
        out = res.value
    write_matrix(args.out, out)
    print(f"wrote {out.rows}x{out.cols} product (width {out.width}) to {args.out}")
    for line in _counter_lines(res.counts):
        print(line)
    return 0


def _first_count_diff(executed: OpCounter, predicted) -> str | None:
    for name in ("mults", "adds", "accums", "shifts"):
        got = getattr(executed, name)
        want = getattr(predicted, name)
        for key in sorted(set(got) | set(want)):
            if got.get(key, 0) != want.get(key, 0):
                return (f"{name}[{key}] executed={got.get(key, 0)} "
                        f"predicted={want.get(key, 0)}")
    return None


def _cmd_verify(args: argparse.Namespace) -> int:
    failures = 0
    fault_pending = args.self_test_fault
    case = 0
    for n in VERIFY_DIGITS:
        for w in VERIFY_WIDTHS:
            params = DigitParams(n, w, args.p)
            if n > 1:
                scalar_diff = _first_count_diff(
                    ksm_n((1 << w) - 1, (1 << w) - 2, params).counts,
                    costmodel.complexity_ksm_n(n, w))
                status = "ok" if scalar_diff is None else f"FAIL {scalar_diff}"
                failures += scalar_diff is not None
                print(f"[{status:>4s}] alg=ksm  n={n} w={w:2d}      counts")
            for d in VERIFY_DIMS:
                checks = (
                    ("mm1 ", lambda aa, bb: mm1(aa, bb, args.p),
                     costmodel.complexity_mm_n(1, w, d, args.p)),
                    ("mmn ", lambda aa, bb: mm_n(aa, bb, params),
                     costmodel.complexity_mm_n(n, w, d, args.p)),
                    ("kmm ", lambda aa, bb: kmm_n(aa, bb, params),
                     costmodel.complexity_kmm_n(n, w, d, args.p)),
                    ("ksmm", lambda aa, bb: ksmm_n(aa, bb, params),
                     costmodel.complexity_ksmm_n(n, w, d)),
                )
                for label, run, predicted in checks:
                    case += 1
                    seed = args.seed * 1000003 + case * 8191
                    a = random_matrix(d, d, w, seed)
                    b = random_matrix(d, d, w, seed + 1)
                    result = run(a, b)
                    executed = result.counts
                    if fault_pending:
                        bumped = dict(executed.mults)
                        first = next(iter(sorted(bumped)))
                        bumped[first] += 1
                        executed = OpCounter(bumped, dict(executed.adds),
                                             dict(executed.accums), dict(executed.shifts))
                        fault_pending = False
                    diff = _first_count_diff(executed, predicted)
                    oracle_bad = 0
                    for rep in range(args.reps):
                        aa = random_matrix(d, d, w, seed + 2 + 2 * rep)
                        bb = random_matrix(d, d, w, seed + 3 + 2 * rep)
                        if not matrices_equal(run(aa, bb).value, reference_product(aa, bb)):
                            oracle_bad += 1
                    if not matrices_equal(result.value, reference_product(a, b)):
                        oracle_bad += 1
                    bad = diff is not None or oracle_bad
                    failures += bad
                    status = "ok" if not bad else "FAIL"
                    detail = "counts+oracle" if args.reps else "counts"
                    if diff is not None:
                        detail = f"first differing count: {diff}"
                    elif oracle_bad:
                        detail = f"{oracle_bad} oracle mismatches"
                    print(f"[{status:>4s}] alg={label} n={n} w={w:2d} d={d} {detail}")
    print(f"verify: {failures} failing checks" if failures else "verify: all checks passed")
    return 1 if failures else 0


def _cmd_model(args: argparse.Namespace) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    counts_csv = os.path.join(args.out_dir, "arith_counts.csv")
    costmodel.write_csv(counts_csv, ("n", "alg", "arith_count"),
                        costmodel.arith_count_rows(d=args.d))
    mult_csv = os.path.join(args.out_dir, "mult_efficiency_roofs.csv")
    costmodel.write_csv(mult_csv, ("w_in", "alg", "roof"),
                        costmodel.mult_roof_rows(w_m=args.w_m))
    au_csv = os.path.join(args.out_dir, "au_efficiency_roofs.csv")
    costmodel.write_csv(au_csv, ("w_in", "alg", "relative_roof", "levels"),
                        costmodel.au_roof_rows(x=args.x, y=args.y, p=args.p))
    for path in (counts_csv, mult_csv, au_csv):
        print(f"wrote {path}")
    return 0


def _fast_reference(a: UMatrix, b: UMatrix) -> UMatrix:
    """Plain matrix product via one numpy matmul in an exact dtype."""
    bits = a.width + b.width + (ceil_log2(a.cols) if a.cols > 1 else 0)
    if bits <= 52:
        dtype = np.float64
    elif bits <= 62:
        dtype = np.int64
    else:
        dtype = object
    prod = np.array(a.to_lists(), dtype=dtype) @ np.array(b.to_lists(), dtype=dtype)
    if dtype is np.float64:
        rows = prod.astype(np.int64).tolist()
    else:
        rows = [[int(v) for v in row] for row in prod.tolist()]
    wa = ceil_log2(a.cols) if a.cols > 1 else 0
    return UMatrix.from_rows(rows, a.width + b.width + wa)


def _cmd_simulate(args: argparse.Namespace) -> int:
    fields: dict[str, str] = {}
    if args.config:
        with open(args.config, "r", encoding="ascii") as fh:
            text = fh.read()
        run = sim.parse_sim_config(text)
        fields = {
            "variant": run.config.variant.value, "x": str(run.config.x),
            "y": str(run.config.y), "w_m": str(run.config.w_m), "p": str(run.config.p),
            "w_in": str(run.w_in), "dims": f"{run.m}x{run.k}x{run.n}",
            "seed": str(run.seed), "reps": str(run.reps),
        }
        if run.config.pipeline_latency is not None:
            fields["pipeline_latency"] = str(run.config.pipeline_latency)
        if run.config.fixed_r is not None:
            fields["r"] = str(run.config.fixed_r)
    overrides = {
        "variant": args.variant, "x": args.x, "y": args.y, "w_m": args.w_m,
        "w_in": args.w_in, "p": args.p, "dims": args.dims, "seed": args.seed,
        "reps": args.reps, "pipeline_latency": args.pipeline_latency,
    }
    for key, value in overrides.items():
        if value is not None:
            fields[key] = str(value)
    run = sim.build_sim_run(fields)

    a = random_matrix(run.m, run.k, run.w_in, run.seed)
    b = random_matrix(run.k, run.n, run.w_in, run.seed + 1)
    result, report = sim.gemm_driver(run.config, a, b, run.w_in, run.reps)
    if not args.no_check:
        if not matrices_equal(result, _fast_reference(a, b)):
            print("simulated product differs from the plain matrix product",
                  file=sys.stderr)
            return 1
    header = ("variant", "w_in", "w_m", "x", "y", "m", "k", "n", "mode", "reads",
              "cycles", "efficiency")
    row = (report.variant, report.w_in, report.w_m, report.x, report.y, report.m,
           report.k, report.n, report.mode, report.reads_per_tile,
           report.total_cycles, report.efficiency)
    costmodel.write_csv(args.out, header, [row])
    for line in report.summary_lines():
        print(line)
    if not args.no_check:
        print("result matches the plain matrix product")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmm",
        description="Karatsuba matrix multiplication toolkit: exact algorithms, "
                    "cost models, and systolic-array simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    mul = sub.add_parser("multiply", help="multiply two matrix files")
    mul.add_argument("a", help="left operand matrix file")
    mul.add_argument("b", help="right operand matrix file")
    mul.add_argument("--alg", required=True,
                     choices=("sm", "ksm", "mm1", "mmn", "ksmm", "kmm"))
    mul.add_argument("--n", type=int, default=1, help="digit count (power of two)")
    mul.add_argument("--p", type=int, default=4, help="pre-accumulation group size")
    mul.add_argument("--concat-free", action="store_true",
                     help="count the aligned final addition as free wiring")
    mul.add_argument("--out", required=True, help="output matrix file")
    mul.set_defaults(func=_cmd_multiply)

    ver = sub.add_parser("verify", help="check executions against oracle and formulas")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--reps", type=int, default=3,
                     help="random oracle instances per grid point (0: counts only)")
    ver.add_argument("--p", type=int, default=4)
    ver.add_argument("--self-test-fault", action="store_true",
                     help="flip one count to prove the checker detects mismatches")
    ver.set_defaults(func=_cmd_verify)

    mod = sub.add_parser("model", help="emit cost-model curve CSVs")
    mod.add_argument("--out-dir", required=True)
    mod.add_argument("--d", type=int, default=64, help="matrix dimension for counts")
    mod.add_argument("--w-m", type=int, default=8)
    mod.add_argument("--x", type=int, default=64)
    mod.add_argument("--y", type=int, default=64)
    mod.add_argument("--p", type=int, default=4)
    mod.set_defaults(func=_cmd_model)

    simp = sub.add_parser("simulate", help="run one MXU GEMM simulation")
    simp.add_argument("--config", help="key/value run file")
    simp.add_argument("--variant", choices=tuple(v.value for v in sim.MxuVariant))
    simp.add_argument("--w-in", type=int, dest="w_in")
    simp.add_argument("--w-m", type=int, dest="w_m")
    simp.add_argument("--x", type=int)
    simp.add_argument("--y", type=int)
    simp.add_argument("--p", type=int)
    simp.add_argument("--dims", help="GEMM dimensions MxKxN")
    simp.add_argument("--seed", type=int)
    simp.add_argument("--reps", type=int)
    simp.add_argument("--pipeline-latency", type=int, dest="pipeline_latency")
    simp.add_argument("--out", required=True, help="report CSV path")
    simp.add_argument("--no-check", action="store_true",
                      help="skip the plain-product equality check")
    simp.set_defaults(func=_cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (KmmError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
