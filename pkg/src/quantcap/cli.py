"""Command-line front end: capacity runs, bounds, sweeps, table reproduction,
and self-verification.

Every command prints a human-readable summary to stdout; ``--out`` addition-
ally writes a machine-format report (CSV or JSON-lines, manifest embedded),
and ``--out -`` sends the machine format to stdout instead.  Exit codes:
0 success, 1 usage error, 2 computation error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import sys

from .bounds import best_symmetric_bound
from .channel import ChannelSpec, Quantizer
from .optimize import GridConfig, optimize_input_cutting_plane
from .quantopt import (
    BenchmarkScheme,
    benchmark_error_probability,
    benchmark_fano_lower_bound,
    benchmark_mutual_information,
    optimize_quantizer_2bit,
    optimize_quantizer_3bit_iterative,
)
from .report import RunManifest, render_report
from .tables import build_table, run_sweep
from .verify import all_passed, run_suite

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPUTE = 2
EXIT_VERIFY = 3

_PRECISION_LABELS = {1: "1-bit", 2: "2-bit", 3: "3-bit", "inf": "unquantized"}


class UsageError(Exception):
    """Bad flag values or combinations; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on parse errors, which collides with the
    # computation-error code; funnel everything through UsageError instead
    def error(self, message):
        raise UsageError(message)


def _snr_values(text: str, step: float):
    """A single dB value or an inclusive 'lo..hi' range walked by `step`."""
    try:
        if ".." in text:
            lo_s, hi_s = text.split("..", 1)
            lo, hi = float(lo_s), float(hi_s)
            if hi < lo:
                raise UsageError(f"empty SNR range {text!r}")
            if not step > 0.0:
                raise UsageError(f"--step must be > 0, got {step!r}")
            out = []
            k = 0
            while True:
                v = round(lo + k * step, 10)
                if v > hi + 1e-9:
                    break
                out.append(min(v, hi))
                k += 1
            return out
        return [float(text)]
    except ValueError:
        raise UsageError(f"invalid --snr-db value {text!r}") from None


def _parsed_thresholds(args):
    if getattr(args, "thresholds", None) is None:
        return None
    try:
        return tuple(float(tok) for tok in args.thresholds.split(","))
    except ValueError:
        raise UsageError(
            f"--thresholds must be comma-separated numbers, got {args.thresholds!r}"
        ) from None


def _quantizer_for(args, snr_db: float) -> Quantizer:
    thresholds = _parsed_thresholds(args)
    onebit = bool(getattr(args, "onebit", False))
    bits = getattr(args, "bits", None)
    if sum([thresholds is not None, onebit, bits is not None]) > 1:
        raise UsageError("give at most one of --thresholds, --onebit, --bits")
    if thresholds is not None:
        try:
            return Quantizer(thresholds)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if onebit or bits == 1:
        return Quantizer((0.0,))
    if bits in (2, 3):
        snr = 10.0 ** (snr_db / 10.0)
        scheme = BenchmarkScheme.build(2**bits, snr, noise_variance=args.sigma2)
        return scheme.quantizer
    raise UsageError("a quantizer is required: --thresholds, --onebit, or --bits")


def _solver_kwargs(args):
    kw = {}
    if getattr(args, "grid_points", None) is not None:
        try:
            kw["grid"] = GridConfig(point_count=args.grid_points)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if getattr(args, "tol", None) is not None:
        kw["tol"] = args.tol
    return kw


def _manifest(args, snrs=None, **extra) -> RunManifest:
    """Resolved invocation parameters.  Worker count and output destination
    never change the numbers, so they stay out of the manifest: reports must
    be byte-identical across --jobs and file names.
    """
    params = {"sigma2": getattr(args, "sigma2", 1.0)}
    if snrs is not None:
        params["snr_db"] = [float(v) for v in snrs]
    thresholds = _parsed_thresholds(args)
    if thresholds is not None:
        params["thresholds"] = list(thresholds)
    if getattr(args, "onebit", False):
        params["onebit"] = True
    if getattr(args, "bits", None) is not None:
        params["bits"] = args.bits
    if getattr(args, "grid_points", None) is not None:
        params["grid_points"] = args.grid_points
    if getattr(args, "tol", None) is not None:
        params["tol"] = args.tol
    params.update(extra)
    return RunManifest(command=args.command, parameters=params)


def _emit(args, manifest, header, rows, human_text: str) -> None:
    out = getattr(args, "out", None)
    if out == "-":
        sys.stdout.write(render_report(header, rows, args.format, manifest))
        return
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(render_report(header, rows, args.format, manifest))
    sys.stdout.write(human_text)


def _join(values) -> str:
    return " ".join(f"{float(v):.16e}" for v in values)


def cmd_capacity(args) -> int:
    snrs = _snr_values(args.snr_db, args.step)
    kw = _solver_kwargs(args)
    rows, blocks = [], []
    for db in snrs:
        spec = ChannelSpec.from_snr_db(db, _quantizer_for(args, db), args.sigma2)
        res = optimize_input_cutting_plane(spec, **kw)
        bound = None
        block = f"snr_db {db:g}\n" + res.to_text()
        if args.bound:
            bound, _ = best_symmetric_bound(spec)
            block += f"symmetric_upper_bound {bound:.16e}\n"
        blocks.append(block)
        rows.append(
            [
                db,
                res.capacity,
                res.gamma,
                res.kkt_max_violation,
                res.iterations,
                bound,
                _join(res.dist.locations),
                _join(res.dist.masses),
            ]
        )
    header = [
        "snr_db",
        "capacity",
        "gamma",
        "kkt_max_violation",
        "iterations",
        "symmetric_upper_bound",
        "support",
        "masses",
    ]
    _emit(args, _manifest(args, snrs), header, rows, "\n".join(blocks))
    return EXIT_OK


def cmd_bound(args) -> int:
    snrs = _snr_values(args.snr_db, args.step)
    rows, blocks = [], []
    for db in snrs:
        spec = ChannelSpec.from_snr_db(db, _quantizer_for(args, db), args.sigma2)
        bound, out_pmf = best_symmetric_bound(spec)
        blocks.append(
            f"snr_db {db:g}\nbound {bound:.16e}\noutput_pmf {_join(out_pmf.probs)}\n"
        )
        rows.append([db, bound, _join(out_pmf.probs)])
    header = ["snr_db", "bound", "output_pmf"]
    _emit(args, _manifest(args, snrs), header, rows, "\n".join(blocks))
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if args.bits is None:
        raise UsageError("benchmark requires --bits")
    bins = 2**args.bits
    snrs = _snr_values(args.snr_db, args.step)
    rows = []
    lines = ["  snr_db  mutual_info  error_prob  fano_bound"]
    for db in snrs:
        snr = 10.0 ** (db / 10.0)
        mi = benchmark_mutual_information(bins, snr, noise_variance=args.sigma2)
        pe = benchmark_error_probability(bins, snr)
        fano = benchmark_fano_lower_bound(bins, snr)
        rows.append([db, args.bits, mi, pe, fano])
        lines.append(f"{db:8.2f}  {mi:11.4f}  {pe:10.4f}  {fano:10.4f}")
    header = ["snr_db", "bits", "mutual_information", "error_probability", "fano_lower_bound"]
    _emit(args, _manifest(args, snrs), header, rows, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_optimize_quantizer(args) -> int:
    if args.bits not in (2, 3):
        raise UsageError("optimize-quantizer requires --bits 2 or --bits 3")
    snrs = _snr_values(args.snr_db, args.step)
    rows, blocks = [], []
    for db in snrs:
        snr = 10.0 ** (db / 10.0)
        if args.bits == 2:
            jr = optimize_quantizer_2bit(
                snr,
                noise_variance=args.sigma2,
                **({"tol": args.tol} if args.tol is not None else {}),
            )
        else:
            jr = optimize_quantizer_3bit_iterative(
                snr,
                noise_variance=args.sigma2,
                **({"tol": args.tol} if args.tol is not None else {}),
            )
        cr = jr.capacity_result
        blocks.append(f"snr_db {db:g}\n" + jr.to_text())
        rows.append(
            [
                db,
                args.bits,
                cr.capacity,
                cr.gamma,
                cr.kkt_max_violation,
                jr.method,
                _join(jr.quantizer.thresholds),
                _join(cr.dist.locations),
                _join(cr.dist.masses),
            ]
        )
    header = [
        "snr_db",
        "bits",
        "capacity",
        "gamma",
        "kkt_max_violation",
        "method",
        "thresholds",
        "support",
        "masses",
    ]
    _emit(args, _manifest(args, snrs), header, rows, "\n".join(blocks))
    return EXIT_OK


def cmd_sweep(args) -> int:
    snrs = _snr_values(args.snr_db, args.step)
    if args.curve and args.dump_dist:
        raise UsageError("--curve and --dump-dist are mutually exclusive")

    if args.curve:
        rows, blocks = [], []
        for db in snrs:
            snr = 10.0 ** (db / 10.0)
            jr = optimize_quantizer_2bit(snr, noise_variance=args.sigma2)
            for q, cap in jr.curve:
                rows.append([db, q, cap])
            best_q = jr.quantizer.thresholds[-1]
            cap = jr.capacity_result.capacity
            blocks.append(
                f"snr_db {db:g}: {len(jr.curve)} curve points, "
                f"best q {best_q:.4f} with capacity {cap:.4f}"
            )
        header = ["snr_db", "q", "capacity"]
        manifest = _manifest(args, snrs, curve="q")
        _emit(args, manifest, header, rows, "\n".join(blocks) + "\n")
        return EXIT_OK

    if args.dump_dist:
        kw = _solver_kwargs(args)
        rows, blocks = [], []
        for db in snrs:
            spec = ChannelSpec.from_snr_db(db, _quantizer_for(args, db), args.sigma2)
            res = optimize_input_cutting_plane(spec, **kw)
            for x, p in zip(res.dist.locations, res.dist.masses):
                rows.append([db, float(x), float(p)])
            blocks.append(f"snr_db {db:g}\n" + res.dist.to_text())
        header = ["snr_db", "location", "mass"]
        manifest = _manifest(args, snrs, dump_dist=True)
        _emit(args, manifest, header, rows, "\n".join(blocks))
        return EXIT_OK

    precisions = [args.bits] if args.bits is not None else [1, 2, 3, "inf"]
    records = run_sweep(precisions, snrs, jobs=args.jobs)
    rows = [[str(p), db, cap] for p, db, cap in records]
    by_cell = {(p, db): cap for p, db, cap in records}
    labels = [_PRECISION_LABELS[p] for p in precisions]
    lines = ["  snr_db  " + "  ".join(f"{lab:>11}" for lab in labels)]
    for db in snrs:
        cells = "  ".join(f"{by_cell[(p, db)]:11.4f}" for p in precisions)
        lines.append(f"{db:8.2f}  {cells}")
    header = ["precision", "snr_db", "capacity"]
    manifest = _manifest(args, snrs, precisions=[str(p) for p in precisions])
    _emit(args, manifest, header, rows, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    table = build_table(args.table, cache={})
    human = table.to_human() + f"max |deviation| {table.max_deviation():.4f}\n"
    rows = [list(item) for item in table.machine_rows()]
    header = ["row", "provenance", "column", "value"]
    manifest = _manifest(args, None, table=args.table, column_label=table.column_label)
    _emit(args, manifest, header, rows, human)
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_suite(args.suite, cache={})
    lines = []
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"{status}  {c.name}  margin {c.margin:.3e}  {c.detail}")
    passed = sum(1 for c in checks if c.passed)
    lines.append(f"{passed}/{len(checks)} checks passed")
    rows = [[c.name, bool(c.passed), float(c.margin), c.detail] for c in checks]
    header = ["check", "passed", "margin", "detail"]
    manifest = _manifest(args, None, suite=args.suite)
    _emit(args, manifest, header, rows, "\n".join(lines) + "\n")
    return EXIT_OK if all_passed(checks) else EXIT_VERIFY


def _add_snr_flags(sp, required=True):
    sp.add_argument(
        "--snr-db",
        required=required,
        help="SNR in dB: a number or an inclusive range 'lo..hi'",
    )
    sp.add_argument("--step", type=float, default=1.0, help="dB step for SNR ranges")
    sp.add_argument("--sigma2", type=float, default=1.0, help="noise variance")


def _add_quantizer_flags(sp):
    sp.add_argument("--thresholds", help="comma-separated ascending quantizer thresholds")
    sp.add_argument("--onebit", action="store_true", help="single threshold at zero")
    sp.add_argument(
        "--bits",
        type=int,
        choices=(1, 2, 3),
        help="preset uniform-spacing quantizer with 2^bits levels",
    )


def _add_solver_flags(sp):
    sp.add_argument("--grid-points", type=int, help="input search grid size (odd)")
    sp.add_argument("--tol", type=float, help="optimizer convergence tolerance")


def _add_output_flags(sp):
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument(
        "--out", help="write a machine-format report to this path ('-' for stdout)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="quantcap",
        description="Capacity tools for the power-constrained AWGN channel "
        "with few-bit output quantization.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    sp = sub.add_parser("capacity", help="optimal input for a fixed quantizer")
    _add_snr_flags(sp)
    _add_quantizer_flags(sp)
    _add_solver_flags(sp)
    _add_output_flags(sp)
    sp.add_argument(
        "--bound", action="store_true", help="also print the best symmetric duality bound"
    )
    sp.set_defaults(func=cmd_capacity)

    sp = sub.add_parser("bound", help="best symmetric duality upper bound")
    _add_snr_flags(sp)
    _add_quantizer_flags(sp)
    _add_output_flags(sp)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("benchmark", help="uniform-PAM benchmark rates")
    _add_snr_flags(sp)
    sp.add_argument("--bits", type=int, choices=(1, 2, 3), required=True)
    _add_output_flags(sp)
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser(
        "optimize-quantizer", help="jointly optimize thresholds and input"
    )
    _add_snr_flags(sp)
    sp.add_argument("--bits", type=int, choices=(2, 3), required=True)
    sp.add_argument("--tol", type=float, help="optimizer convergence tolerance")
    _add_output_flags(sp)
    sp.set_defaults(func=cmd_optimize_quantizer)

    sp = sub.add_parser("sweep", help="capacity cells over an SNR range")
    _add_snr_flags(sp)
    sp.add_argument(
        "--bits",
        type=int,
        choices=(1, 2, 3),
        help="single precision to sweep (default: 1, 2, 3 and unquantized)",
    )
    sp.add_argument(
        "--curve",
        choices=("q",),
        help="emit the symmetric-threshold capacity curve per SNR",
    )
    sp.add_argument(
        "--dump-dist",
        action="store_true",
        help="emit the optimal input distribution per SNR (needs a quantizer flag)",
    )
    sp.add_argument("--thresholds", help="comma-separated ascending quantizer thresholds")
    sp.add_argument("--onebit", action="store_true", help="single threshold at zero")
    _add_solver_flags(sp)
    sp.add_argument("--jobs", type=int, default=1, help="worker processes for sweep cells")
    _add_output_flags(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("reproduce", help="recompute a published comparison table")
    sp.add_argument("--table", required=True, choices=("I", "II", "III", "IV", "V"))
    _add_output_flags(sp)
    sp.set_defaults(func=cmd_reproduce)

    sp = sub.add_parser("verify", help="run a self-check suite")
    sp.add_argument(
        "suite", choices=("convexity", "kkt", "sandwich", "cardinality", "all")
    )
    _add_output_flags(sp)
    sp.set_defaults(func=cmd_verify)

    return parser


_VALUE_FLAGS = ("--thresholds", "--snr-db")


def _merge_negative_values(argv):
    """Join '--flag value' into '--flag=value' when the value starts with '-'.

    argparse classifies tokens like '-2,0,2' or '-20..20' as option strings
    (they are not plain negative numbers), so they never reach the flag that
    expects them unless pre-merged.
    """
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and argv[i + 1] != "-":
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_negative_values(list(argv)))
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return code if isinstance(code, int) else EXIT_OK
    except Exception as exc:  # the CLI boundary: anything else is a failed run
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    raise SystemExit(main())
