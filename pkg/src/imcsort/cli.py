"""Command-line entry point: ``imcsort <subcommand> [flags]``.

Exit status is 0 on success, 2 on usage or validation errors and 1 on
anything unexpected.  Output goes to ``--output`` when given, otherwise to
``$IMCSORT_OUTPUT_DIR/<default name>`` when that variable is set, otherwise
to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from . import engine, microcode, perfmodel, sortnet
from .errors import ImcSortError

OUTPUT_DIR_ENV = "IMCSORT_OUTPUT_DIR"


class UsageError(ImcSortError):
    pass


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _unsigned(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an unsigned integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"negative value: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imcsort",
        description="SRAM in-memory sorting simulator and microcode toolchain")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("json", "csv", "text"), mode=True):
        p.add_argument("--width", type=_positive_int, default=4, help="bit width (default 4)")
        p.add_argument("--t-op", type=_positive_float, default=perfmodel.DEFAULT_T_OP_NS,
                       help="per-cycle latency in ns (default 0.55)")
        if mode:
            p.add_argument("--mode", choices=engine.MODES, default="paper",
                           help="cycle accounting (default paper)")
        p.add_argument("--reuse-rows", action="store_true",
                       help="compile the CAS block with liveness-based row reuse")
        p.add_argument("--format", choices=formats, default="json")
        p.add_argument("--output", "-o", type=Path)

    p = sub.add_parser("cas", help="compare-and-swap two values")
    p.add_argument("a", type=_unsigned)
    p.add_argument("b", type=_unsigned)
    common(p, formats=("json", "text"))
    p.add_argument("--trace", type=Path, help="write the per-cycle CSV trace here")
    p.add_argument("--program", type=Path, help="write the compiled microprogram here")

    p = sub.add_parser("sort", help="sort a vector on the simulated array")
    p.add_argument("--input", "-i", type=Path,
                   help="whitespace-separated or JSON array file")
    p.add_argument("-n", type=_positive_int, help="random input length when no --input")
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser("netgen", help="emit the bitonic network")
    p.add_argument("-n", type=_positive_int, required=True)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--plan", action="store_true", help="include the partition plan")
    p.add_argument("--output", "-o", type=Path)

    p = sub.add_parser("trace", help="per-cycle row trace of a sort")
    p.add_argument("values", nargs="*", type=_unsigned)
    p.add_argument("--input", "-i", type=Path)
    p.add_argument("--width", type=_positive_int, default=4)
    p.add_argument("--reuse-rows", action="store_true")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", type=Path)

    p = sub.add_parser("report", help="performance report(s)")
    p.add_argument("-n", type=_positive_int, action="append",
                   help="input count; repeat for a sweep (default 8)")
    p.add_argument("--seed", type=int, default=0)
    common(p, formats=("json", "csv"))

    p = sub.add_parser("compare", help="speedups against a baseline config")
    p.add_argument("--baseline", type=Path, required=True)
    p.add_argument("-n", type=_positive_int, default=8)
    p.add_argument("--seed", type=int, default=0)
    common(p, formats=("json", "csv"))
    return parser


def _emit(text: str, args, default_name: str) -> None:
    target = args.output
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        target = Path(os.environ[OUTPUT_DIR_ENV]) / default_name
    if target is None:
        sys.stdout.write(text)
    else:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _random_values(n, width, seed):
    rng = random.Random(seed)
    return [rng.randrange(1 << width) for _ in range(n)]


def _load_input(args) -> tuple[list[int], dict]:
    if args.input is not None:
        try:
            return engine.read_values(args.input), {"input": str(args.input)}
        except OSError as exc:
            raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.input}: invalid JSON ({exc.msg})") from None
    if getattr(args, "n", None) is None:
        raise UsageError("give --input or -n")
    return _random_values(args.n, args.width, args.seed), {"seed": args.seed}


def cmd_cas(args) -> int:
    prog = microcode.compile_cas(args.width, reuse=args.reuse_rows)
    lo, hi, trace = microcode.run_cas(prog, args.a, args.b)
    measured = microcode.classify_cycles(prog)
    if args.mode == "paper":
        stats = perfmodel.cas_constants(args.width)[0]
    else:
        stats = measured
    if args.trace is not None:
        result = engine.sort([args.a, args.b], engine.SortConfig(
            width=args.width, reuse_rows=args.reuse_rows, emit_trace=True))
        args.trace.parent.mkdir(parents=True, exist_ok=True)
        args.trace.write_text(engine.trace_to_csv(engine.trace_export(result)))
    if args.program is not None:
        args.program.write_text(microcode.dumps(prog))
    report = {
        "a": args.a,
        "b": args.b,
        "min": lo,
        "max": hi,
        "width": args.width,
        "mode": args.mode,
        "cycles": stats.total,
        "latency_ns": stats.total * args.t_op,
        "op_cycles": stats.as_table(),
        "measured_cycles": measured.total,
        "rows": prog.total_rows,
        "compare_end": prog.compare_end,
        "mux_end": prog.mux_end,
    }
    if args.format == "text":
        text = (f"min {lo}\nmax {hi}\ncycles {stats.total} ({args.mode})\n"
                + "".join(f"{k} {v}\n" for k, v in stats.as_table().items()))
    else:
        text = _dump(report)
    _emit(text, args, "cas.json" if args.format == "json" else "cas.txt")
    return 0


def cmd_sort(args) -> int:
    values, provenance = _load_input(args)
    result = engine.sort(values, engine.SortConfig(
        width=args.width, accounting_mode=args.mode, reuse_rows=args.reuse_rows,
        t_op=args.t_op))
    if args.format == "text":
        text = " ".join(map(str, result.sorted)) + "\n"
        name = "sorted.txt"
    elif args.format == "csv":
        text = perfmodel.reports_to_csv([result.perf])
        name = "sort_report.csv"
    else:
        text = _dump({"values": values, **provenance, **result.to_dict()})
        name = "sort.json"
    _emit(text, args, name)
    return 0


def cmd_netgen(args) -> int:
    net = sortnet.build_bitonic(args.n)
    if args.format == "text":
        text = net.to_text()
        name = f"bitonic_{args.n}.txt"
    else:
        d = net.to_dict()
        if args.plan:
            d["plan"] = sortnet.plan_partitions(net).to_dict()
        text = _dump(d)
        name = f"bitonic_{args.n}.json"
    _emit(text, args, name)
    return 0


def cmd_trace(args) -> int:
    if args.values and args.input is not None:
        raise UsageError("give values or --input, not both")
    if args.values:
        values = list(args.values)
    else:
        values, _ = _load_input(args)
    result = engine.sort(values, engine.SortConfig(
        width=args.width, accounting_mode="measured", reuse_rows=args.reuse_rows,
        emit_trace=True))
    if args.format == "json":
        text = engine.trace_to_json(result)
    else:
        text = engine.trace_to_csv(engine.trace_export(result))
    _emit(text, args, f"trace.{args.format}")
    return 0


def _report_for(n, args):
    if args.mode == "paper":
        return perfmodel.paper_model(n, args.width, args.t_op)
    values = _random_values(n, args.width, args.seed)
    return engine.sort(values, engine.SortConfig(
        width=args.width, accounting_mode="measured", reuse_rows=args.reuse_rows,
        t_op=args.t_op)).perf


def cmd_report(args) -> int:
    ns = args.n or [8]
    reports = [_report_for(n, args) for n in ns]
    if args.format == "csv":
        text = perfmodel.reports_to_csv(reports)
    else:
        payload = [r.to_dict() for r in reports]
        if args.mode == "measured":
            for d in payload:
                d["seed"] = args.seed
        text = _dump(payload[0] if len(payload) == 1 else payload)
    _emit(text, args, f"report.{args.format}")
    return 0


def cmd_compare(args) -> int:
    try:
        baseline = perfmodel.load_baseline(args.baseline)
    except OSError as exc:
        raise UsageError(f"cannot read {args.baseline}: {exc.strerror}") from None
    report = _report_for(args.n, args)
    if args.format == "csv":
        text = perfmodel.comparison_plot_csv(report, baseline)
    else:
        text = _dump(perfmodel.compare(report, baseline))
    _emit(text, args, f"compare.{args.format}")
    return 0


COMMANDS = {
    "cas": cmd_cas,
    "sort": cmd_sort,
    "netgen": cmd_netgen,
    "trace": cmd_trace,
    "report": cmd_report,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ImcSortError as exc:
        print(f"imcsort {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"imcsort {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
