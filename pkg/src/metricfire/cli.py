"""Command line entry point: ``metricfire <subcommand> ...``.

Exit codes: 0 success, 1 invariant or run failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .dhar import ReductionError, reduce
from .divisor import chips_at_combinatorial_vertices, divisor_from_json, divisor_to_json, divisor_problems
from .exactnum import ParseError, approx, parse, render
from .firing import apply_firing
from .gadgets import GadgetError, build_euclid, build_omega_n
from .metric_graph import GraphError, graph_from_json, graph_to_json, validate
from .ordinal import render_ordinal
from .traceio import TraceFormatError, check, read_trace, write_trace
from .transfinite import Budget, Chain, DharStrategy, Outcome, RandomGreedyStrategy, StrategyError, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _number(text: str):
    try:
        return parse(text)
    except ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {n}")
    return n


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _load_instance(args):
    try:
        g = graph_from_json(_load_json(args.graph))
    except (KeyError, TypeError, ParseError, GraphError) as exc:
        raise UsageError(f"bad graph file {args.graph}: {exc}") from None
    problems = validate(g)
    if problems:
        raise UsageError(f"invalid graph {args.graph}: {'; '.join(problems)}")
    try:
        d = divisor_from_json(_load_json(args.divisor), g)
    except (KeyError, TypeError, ParseError, GraphError) as exc:
        raise UsageError(f"bad divisor file {args.divisor}: {exc}") from None
    problems = divisor_problems(g, d)
    if problems:
        raise UsageError(f"invalid divisor {args.divisor}: {'; '.join(problems)}")
    return g, d


def _distinct_paths(inputs, outputs) -> None:
    ins = {Path(p).resolve() for p in inputs if p}
    for p in outputs:
        if p and Path(p).resolve() in ins:
            raise UsageError(f"output path {p} would overwrite an input")


def _write_json(path: str, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _summary(trace, out) -> None:
    print(f"outcome: {trace.outcome.value}", file=out)
    print(f"fires: {len(trace.fires)}  limits: {len(trace.limits)}", file=out)
    print(f"final ordinal: {render_ordinal(trace.ordinal)}", file=out)
    print(f"cumulative length: {render(trace.cumulative_length)} ({approx(trace.cumulative_length)})", file=out)


# ---- subcommands ----------------------------------------------------------------------


def cmd_reduce(args, out) -> int:
    _distinct_paths([args.graph, args.divisor], [args.out, args.trace])
    g, d = _load_instance(args)
    if args.trace:
        trace = run(g, d, DharStrategy(), Budget(max_fires=args.max_steps))
        if trace.outcome is not Outcome.REDUCED:
            print(f"error: Dhar reduction exceeded {args.max_steps} firings", file=sys.stderr)
            return EXIT_FAIL
        write_trace(trace, args.trace)
        final, fires = trace.final, len(trace.fires)
    else:
        final, specs = reduce(g, d, args.max_steps)
        fires = len(specs)
    if args.out:
        _write_json(args.out, divisor_to_json(final))
    print(f"reduced after {fires} firings", file=out)
    print(json.dumps(divisor_to_json(final)), file=out)
    return EXIT_OK


def cmd_greedy(args, out) -> int:
    _distinct_paths([args.graph, args.divisor], [args.out, args.trace])
    g, d = _load_instance(args)
    if args.strategy == "dhar":
        strategy = DharStrategy()
    else:
        strategy = Chain(RandomGreedyStrategy(args.seed), DharStrategy())
    trace = run(g, d, strategy, Budget(max_fires=args.max_steps), meta={"strategy": args.strategy, "seed": args.seed})
    if args.trace:
        write_trace(trace, args.trace)
    if args.out:
        _write_json(args.out, divisor_to_json(trace.final))
    _summary(trace, out)
    print(json.dumps(divisor_to_json(trace.final)), file=out)
    return EXIT_OK


def _export(inst, args) -> None:
    if args.graph_out:
        _write_json(args.graph_out, graph_to_json(inst.graph))
    if args.divisor_out:
        _write_json(args.divisor_out, divisor_to_json(inst.divisor))


def _prediction_lines(p, out) -> None:
    if not p.closed_form:
        print("prediction: no closed form for these inputs", file=out)
        return
    if p.terminates:
        print(f"predicted subtractions: {p.subtractions}", file=out)
    else:
        print(f"predicted: non-terminating, every phase scales by {render(p.ratio)}", file=out)
    print(f"predicted sum of l_i: {render(p.sum_l)} ({approx(p.sum_l)}), bound 4b = {render(p.bound)}", file=out)
    print(f"predicted total scripted length: {render(p.total_length)} ({approx(p.total_length)})", file=out)


def cmd_euclid(args, out) -> int:
    _distinct_paths([], [args.trace, args.graph_out, args.divisor_out])
    try:
        inst = build_euclid(args.a, args.b, pivot=args.pivot)
    except GadgetError as exc:
        raise UsageError(str(exc)) from None
    _export(inst, args)
    budget = Budget(max_fires=args.max_steps, max_limits=args.limits)
    trace = inst.run(budget, phases=args.phases)
    if args.trace:
        write_trace(trace, args.trace)
    print(f"euclid gadget a={render(args.a)} b={render(args.b)} pivot={args.pivot}", file=out)
    _prediction_lines(inst.predictions, out)
    script = trace.meta.get("scripted_fires")
    limits = trace.limits
    if limits:
        first = limits[0]
        print("scripted run: non-terminating; the omega-limit was installed", file=out)
        print(f"limit total length: {render(first.cum)} ({approx(first.cum)})", file=out)
        placed = ", ".join(f"{k}->{p}" for k, p in sorted(first.chips.items()))
        print(f"limit chips: {placed}", file=out)
    elif script is not None:
        print(f"scripted run: terminated after {script // 2} subtractions", file=out)
        print(f"total scripted length: {trace.meta['scripted_length']}", file=out)
    elif trace.outcome is Outcome.NON_TERMINATING:
        print("scripted run: non-terminating (limit found, but the limit budget is used up)", file=out)
    else:
        print("scripted run: did not finish within the budget", file=out)
    _summary(trace, out)
    return EXIT_OK


def cmd_omega(args, out) -> int:
    _distinct_paths([], [args.trace, args.graph_out, args.divisor_out])
    try:
        inst = build_omega_n(args.n, args.a, args.b)
    except GadgetError as exc:
        raise UsageError(str(exc)) from None
    _export(inst, args)
    kwargs = {"phases": args.phases}
    if args.n > 1:
        kwargs["outer"] = args.outer
    trace = inst.run(Budget(max_fires=args.max_steps, max_limits=args.limits), **kwargs)
    if args.trace:
        write_trace(trace, args.trace)
    print(f"omega^{args.n} gadget a={render(args.a)} b={render(args.b)}", file=out)
    for s in trace.limits:
        count = chips_at_combinatorial_vertices(inst.graph, s.divisor)
        print(f"limit {render_ordinal(s.ordinal)} level {s.level}: {count} chips at combinatorial vertices", file=out)
    _summary(trace, out)
    return EXIT_OK


def cmd_check(args, out) -> int:
    try:
        trace = read_trace(args.trace)
    except OSError as exc:
        raise UsageError(f"cannot read {args.trace}: {exc.strerror}") from None
    except (TraceFormatError, KeyError, TypeError, ValueError) as exc:
        print(f"FAIL: unreadable trace: {exc}", file=out)
        return EXIT_FAIL
    problems = check(trace)
    if problems:
        print(f"FAIL: {problems[0]}", file=out)
        if len(problems) > 1:
            print(f"({len(problems) - 1} further violations)", file=out)
        return EXIT_FAIL
    print(f"OK: {len(trace.steps)} steps, final ordinal {render_ordinal(trace.ordinal)}", file=out)
    return EXIT_OK


def cmd_plot(args, out) -> int:
    _distinct_paths([args.trace], [args.out])
    try:
        trace = read_trace(args.trace)
    except OSError as exc:
        raise UsageError(f"cannot read {args.trace}: {exc.strerror}") from None
    g, d = trace.graph, trace.initial
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "ordinal", "epsilon", "cumulative_length", "chips_at_combinatorial_vertices"])
        w.writerow([0, "0", "0", "0", chips_at_combinatorial_vertices(g, d)])
        for i, s in enumerate(trace.steps, start=1):
            d = apply_firing(g, d, s.spec) if s.kind == "fire" else s.divisor
            w.writerow([i, render_ordinal(s.ordinal), render(s.eps), render(s.cum), chips_at_combinatorial_vertices(g, d)])
    print(f"wrote {len(trace.steps) + 1} rows to {args.out}", file=out)
    return EXIT_OK


# ---- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metricfire", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def instance_flags(sp):
        sp.add_argument("--graph", required=True, help="graph JSON file")
        sp.add_argument("--divisor", required=True, help="divisor JSON file")
        sp.add_argument("--out", help="write the final divisor here")
        sp.add_argument("--trace", help="write the JSONL trace here")
        sp.add_argument("--max-steps", type=_positive, default=10**5, help="firing budget")

    sp = sub.add_parser("reduce", help="Dhar reduction to the q-reduced divisor")
    instance_flags(sp)
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("greedy", help="greedy reduction under a chosen strategy")
    instance_flags(sp)
    sp.add_argument("--strategy", choices=["dhar", "random"], default="dhar")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_greedy)

    def gadget_flags(sp, phases):
        sp.add_argument("--a", type=_number, required=True, help="exact number, e.g. -1+1*sqrt(2)")
        sp.add_argument("--b", type=_number, required=True)
        sp.add_argument("--phases", type=_positive, default=phases, help="Euclid phases before a limit")
        sp.add_argument("--limits", type=int, default=10**3, help="maximum limit passages")
        sp.add_argument("--max-steps", type=_positive, default=10**5, help="firing budget")
        sp.add_argument("--trace", help="write the JSONL trace here")
        sp.add_argument("--graph-out", help="export the gadget graph JSON")
        sp.add_argument("--divisor-out", help="export the gadget divisor JSON")

    sp = sub.add_parser("euclid", help="Euclidean gadget demo with predictions")
    gadget_flags(sp, 40)
    sp.add_argument("--pivot", type=int, choices=[0, 1], default=1, help="row whose chip starts at u")
    sp.set_defaults(func=cmd_euclid)

    sp = sub.add_parser("omega", help="n-fold glued gadget with nested limits")
    sp.add_argument("--n", type=_positive, required=True)
    gadget_flags(sp, 4)
    sp.add_argument("--outer", type=_positive, default=5, help="blocks per level before its limit")
    sp.set_defaults(func=cmd_omega)

    sp = sub.add_parser("check", help="re-validate every invariant of a trace")
    sp.add_argument("--trace", required=True)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("plot", help="export a trace as CSV")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plot)
    return p


_NUMBER_FLAGS = ("--a", "--b")


def _glue_negative_numbers(argv: list[str]) -> list[str]:
    # argparse reads "-1+1*sqrt(2)" as an option name; bind it to its flag explicitly
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _NUMBER_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2].isdigit():
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_numbers(argv))
    if getattr(args, "limits", 0) < 0:
        parser.error("--limits must be >= 0")
    try:
        return args.func(args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GadgetError, StrategyError, ReductionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
