"""Command-line interface: localize, trace, sbfl, bench, sweep."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, tracing
from .errors import MiniImpSyntaxError, NoFailingTests, SemflError
from .lang import parse
from .pipeline import RunConfig, localize, traced_function_set
from .ranking import DSTAR, OCHIAI, export_combine_scores, method_level, sbfl_report

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_NO_FAILING = 2
EXIT_SYNTAX = 3

# Paper-default p0 sweeps: moderate (boolean-range) and low (wide-range).
SWEEP_MODERATE = (0.3, 0.4, 0.5, 0.6, 0.7)
SWEEP_LOW = (0.001, 0.005, 0.01, 0.05, 0.1)


def add_config_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("pipeline configuration")
    g.add_argument("--p0-moderate", type=float, default=0.5,
                   help="p0 for boolean-range statements (paper default 0.5)")
    g.add_argument("--p0-low", type=float, default=0.01,
                   help="p0 for wide-range statements (paper default 0.01)")
    g.add_argument("--prior", type=float, default=0.5,
                   help="statement prior (paper default 0.5)")
    g.add_argument("--max-passing-tests", type=int, default=50,
                   help="passing tests kept by test reduction (paper default 50)")
    g.add_argument("--trace-limit", type=int, default=1_200_000,
                   help="per-trace event budget (paper default 1.2M)")
    g.add_argument("--model-limit", type=int, default=1_000_000,
                   help="total modeled event budget (paper default 1M)")
    g.add_argument("--max-iters", type=int, default=100,
                   help="belief propagation iteration cap (artifact decision)")
    g.add_argument("--eps", type=float, default=1e-6,
                   help="message convergence threshold (artifact decision)")
    g.add_argument("--step-budget", type=int, default=1_000_000,
                   help="interpreter steps per test (artifact decision)")
    g.add_argument("--naive-inference", action="store_true",
                   help="use enumeration factor messages (ablation)")
    g.add_argument("--exact", action="store_true",
                   help="exact joint enumeration, capped at --exact-cap variables")
    g.add_argument("--exact-cap", type=int, default=20)
    g.add_argument("--no-loop-compression", action="store_true")
    g.add_argument("--no-adaptive-folding", action="store_true")
    g.add_argument("--no-virtual-call-edges", action="store_true")
    g.add_argument("--no-exception-control", action="store_true")
    g.add_argument("--no-test-reduction", action="store_true")
    g.add_argument("--jobs", type=int, default=1,
                   help="parallel tracing / benchmark workers")
    g.add_argument("--seed", type=int, default=0,
                   help="seed for fault seeding (pipeline itself is deterministic)")


def config_from_args(args) -> RunConfig:
    return RunConfig(
        max_passing_tests=args.max_passing_tests,
        trace_limit=args.trace_limit,
        model_limit=args.model_limit,
        loop_compression=not args.no_loop_compression,
        adaptive_folding=not args.no_adaptive_folding,
        test_reduction=not args.no_test_reduction,
        mode="naive" if args.naive_inference else "optimized",
        exact=args.exact,
        exact_cap=args.exact_cap,
        max_iterations=args.max_iters,
        convergence_eps=args.eps,
        p0_moderate=args.p0_moderate,
        p0_low=args.p0_low,
        statement_prior=args.prior,
        virtual_call_edges=not args.no_virtual_call_edges,
        exception_control=not args.no_exception_control,
        step_budget=args.step_budget,
        jobs=args.jobs,
        seed=args.seed,
    )


def _load_program(path):
    text = Path(path).read_text()
    return parse(text, str(path))


def _write(out_dir, name, text):
    if out_dir is None:
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def cmd_localize(args) -> int:
    program = _load_program(args.program)
    cfg = config_from_args(args)
    res = localize(program, cfg)
    print(res.report.to_table(), end="")
    methods = method_level(res.report, program)
    combine = export_combine_scores(res.report)
    _write(args.out, "report.json", res.report.to_json())
    _write(args.out, "report.txt", res.report.to_table())
    _write(args.out, "methods.json", json.dumps(
        [{"function": f, "score": round(s, 12)} for f, s in methods],
        indent=2) + "\n")
    _write(args.out, "combine.json", json.dumps(
        [{"id": sid, "suspiciousness": round(s, 12)} for sid, s in combine],
        indent=2) + "\n")
    # timings and logs are diagnostics, kept out of the deterministic reports
    _write(args.out, "timings.txt", "".join(
        f"{k}: {v:.6f}s\n" for k, v in res.timings.items()))
    _write(args.out, "log.txt", "".join(line + "\n" for line in res.log))
    return EXIT_OK


def cmd_trace(args) -> int:
    program = _load_program(args.program)
    cfg = config_from_args(args)
    prof = tracing.profile(program, step_budget=cfg.step_budget)
    if args.test not in prof.tests:
        raise SemflError(f"unknown test {args.test!r}")
    traced = traced_function_set(program, prof)
    if not traced:
        traced = frozenset(f for f in prof.tests[args.test].functions
                           if not f.startswith("test_"))
    tr = tracing.trace(program, args.test, traced,
                       step_budget=cfg.step_budget,
                       trace_limit=cfg.trace_limit)
    text = tracing.dump_trace(tr, program)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return EXIT_OK


def cmd_sbfl(args) -> int:
    program = _load_program(args.program)
    cfg = config_from_args(args)
    prof = tracing.profile(program, step_budget=cfg.step_budget)
    if prof.num_failing == 0:
        raise NoFailingTests("no failing tests")
    formula = OCHIAI if args.formula == "ochiai" else DSTAR
    report = sbfl_report(prof, formula, program)
    print(report.to_table(), end="")
    if args.out:
        _write(args.out, f"sbfl_{args.formula}.json", report.to_json())
    return EXIT_OK


ABLATIONS = (
    ("no-loop-compression", {"loop_compression": False}),
    ("no-adaptive-folding", {"adaptive_folding": False}),
    ("naive-inference", {"mode": "naive"}),
    ("no-virtual-call-edges", {"virtual_call_edges": False}),
    ("no-exception-control", {"exception_control": False}),
    ("no-test-reduction", {"test_reduction": False}),
)


def _bench_configs(args, base: RunConfig):
    configs = [("default", base)]
    if args.ablations:
        from dataclasses import replace
        for name, overrides in ABLATIONS:
            configs.append((name, replace(base, **overrides)))
    return configs


def _corpus_seeds(args):
    names = args.programs or [e["name"] for e in bench.load_manifest()]
    seeds = []
    for name in names:
        program = bench.load_corpus_program(name)
        seeds.extend(bench.seed_faults(program, args.per_program, args.seed,
                                       step_budget=args.step_budget))
    return seeds


def cmd_bench(args) -> int:
    base = config_from_args(args)
    seeds = _corpus_seeds(args)
    results = bench.run_benchmark(seeds, _bench_configs(args, base))
    print(bench.format_results(results), end="")
    if args.out:
        _write(args.out, "bench.json", bench.results_to_json(results))
        _write(args.out, "bench.txt", bench.format_results(results))
    return EXIT_OK


def cmd_sweep(args) -> int:
    from dataclasses import replace
    base = config_from_args(args)
    seeds = _corpus_seeds(args)
    configs = []
    for pm in args.moderate_values:
        for pl in args.low_values:
            configs.append((f"p0m={pm},p0l={pl}",
                            replace(base, p0_moderate=pm, p0_low=pl)))
    results = bench.run_benchmark(seeds, configs)
    print(bench.format_results(results), end="")
    if args.out:
        _write(args.out, "sweep.json", bench.results_to_json(results))
        _write(args.out, "sweep.txt", bench.format_results(results))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="semfl",
        description="Probabilistic fault localization for MiniImp programs.")
    sub = p.add_subparsers(dest="command", required=True)

    lp = sub.add_parser("localize", help="rank statements of a program")
    lp.add_argument("program", help="MiniImp source file")
    lp.add_argument("--out", help="directory for report files")
    add_config_args(lp)
    lp.set_defaults(func=cmd_localize)

    tp = sub.add_parser("trace", help="dump one test's value-level trace")
    tp.add_argument("program")
    tp.add_argument("--test", required=True)
    tp.add_argument("--out", help="trace output file (default stdout)")
    add_config_args(tp)
    tp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("sbfl", help="spectrum-based baseline ranking")
    sp.add_argument("program")
    sp.add_argument("--formula", choices=["ochiai", "dstar"], default="ochiai")
    sp.add_argument("--out", help="directory for report files")
    add_config_args(sp)
    sp.set_defaults(func=cmd_sbfl)

    bp = sub.add_parser("bench", help="seeded-fault benchmark on the corpus")
    bp.add_argument("--programs", nargs="*", help="corpus subset (default all)")
    bp.add_argument("--per-program", type=int, default=7)
    bp.add_argument("--ablations", action="store_true",
                    help="also run the six ablation configurations")
    bp.add_argument("--out", help="directory for result files")
    add_config_args(bp)
    bp.set_defaults(func=cmd_bench)

    wp = sub.add_parser("sweep", help="p0 grid sweep on the corpus")
    wp.add_argument("--programs", nargs="*")
    wp.add_argument("--per-program", type=int, default=3)
    wp.add_argument("--moderate-values", type=float, nargs="*",
                    default=list(SWEEP_MODERATE))
    wp.add_argument("--low-values", type=float, nargs="*",
                    default=list(SWEEP_LOW))
    wp.add_argument("--out", help="directory for result files")
    add_config_args(wp)
    wp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MiniImpSyntaxError as exc:
        print(f"syntax error: {exc}", file=sys.stderr)
        return EXIT_SYNTAX
    except NoFailingTests as exc:
        print(f"no failing tests: {exc}", file=sys.stderr)
        return EXIT_NO_FAILING
    except (SemflError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
