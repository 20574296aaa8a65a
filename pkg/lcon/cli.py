"""
Command-line entry point.

    lcon run FILE            evaluate a program
    lcon simplify FILE       print the simplified program
    lcon count FILE...       predicate checks before and after simplification
    lcon diff FILE...        run original and simplified programs side by side
    lcon fuzz                differential testing on random programs

Exit status: 0 success, 1 parse or usage error, 2 blame or a preservation
violation, 3 stuck, out of fuel or a failed normalization, 4 inconclusive.
"""

import argparse
import json
import os
import sys
from collections import Counter
from typing import List, Optional

from lcon import __version__
from lcon.baseline import BaselineTransformer
from lcon.config import Config
from lcon.constraints import ConstraintStore, DanglingVariableError
from lcon.evaluator import Evaluator, OutcomeKind
from lcon.fuzz import FuzzConfig, fuzz
from lcon.join import OptimizationReport, contract_census, optimize
from lcon.parser import LconSyntaxError, Printer, parse_lcon_file
from lcon.report import (
    LEVELS,
    TRANSFORM_ERRORS,
    Verdict,
    count_table,
    describe,
    diff,
    diff_table,
    export_counts,
)
from lcon.subcontract import GammaFileError, load_gamma

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BLAME = 2
EXIT_STUCK = 3
EXIT_INCONCLUSIVE = 4

_OUTCOME_STATUS = {
    OutcomeKind.VALUE: EXIT_OK,
    OutcomeKind.BLAME: EXIT_BLAME,
    OutcomeKind.STUCK: EXIT_STUCK,
    OutcomeKind.OUT_OF_FUEL: EXIT_STUCK,
}


def _config(args) -> Config:
    config = Config()
    if getattr(args, "fuel", None) is not None:
        config.FUEL = args.fuel
    if getattr(args, "strict", False):
        config.LENIENT = False
    if getattr(args, "gamma", None):
        config.GAMMA_FILE = args.gamma
    return config


def _env(args):
    return load_gamma(args.gamma) if getattr(args, "gamma", None) else None


def _name(filepath) -> str:
    return os.path.splitext(os.path.basename(filepath))[0]


def cmd_run(args) -> int:
    config = _config(args)
    program = parse_lcon_file(args.file)
    outcome = Evaluator(config).run(program)
    if args.json:
        print(
            json.dumps(
                {
                    "outcome": describe(outcome),
                    "predicate_checks": outcome.predicate_checks,
                    "steps": outcome.steps,
                }
            )
        )
    else:
        print(f"outcome: {describe(outcome)}")
        if outcome.reason:
            print(f"reason: {outcome.reason}")
        print(f"predicate checks: {outcome.predicate_checks}")
        print(f"steps: {outcome.steps}")
    if args.dump_constraints:
        print(outcome.store.dump())
    return _OUTCOME_STATUS[outcome.kind]


def cmd_simplify(args) -> int:
    config = _config(args)
    env = _env(args)
    program = parse_lcon_file(args.file)
    try:
        if args.level == "baseline":
            store, term, trace = BaselineTransformer(env, config).normalize(ConstraintStore(), program)
            evaluator = Evaluator(config)
            report = OptimizationReport(
                Counter(s.rule for s in trace),
                1,
                contract_census(term),
                predicates_before=evaluator.run(program).predicate_checks,
                predicates_after=evaluator.run(term, store).predicate_checks,
            )
        else:
            store, term, trace, report = optimize(program, env, config, join=not args.no_join)
    except TRANSFORM_ERRORS as e:
        print(f"Simplification failed: {e}", file=sys.stderr)
        return EXIT_STUCK

    printer = Printer(renumber=True)
    if args.trace:
        for s in trace:
            print(f"{s.rule} at {list(s.path)}")
    print(printer.term(term))
    if args.dump_constraints:
        print(store.dump(printer))
    if args.report:
        print(json.dumps(report.to_dict()))
    return EXIT_OK


def cmd_count(args) -> int:
    config = _config(args)
    programs = [(_name(f), parse_lcon_file(f)) for f in args.files]
    df = count_table(programs, _env(args), config)
    if args.json:
        print(df.to_json(orient="records"))
    else:
        print(df.to_string(index=False))
    if args.xlsx:
        export_counts(df, args.xlsx, config)
    return EXIT_OK


def cmd_diff(args) -> int:
    config = _config(args)
    env = _env(args)
    reports = [
        diff(parse_lcon_file(f), level, name=_name(f), env=env, config=config)
        for f in args.files
        for level in (LEVELS if args.level == "both" else (args.level,))
    ]
    df = diff_table(reports)
    if args.json:
        print(df.to_json(orient="records"))
    else:
        print(df.to_string(index=False))
    if any(not r.passed and r.verdict is not Verdict.INCONCLUSIVE for r in reports):
        return EXIT_BLAME
    if any(r.verdict is Verdict.INCONCLUSIVE for r in reports):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_fuzz(args) -> int:
    fuzz_config = FuzzConfig(
        seed=args.seed,
        cases=args.cases,
        term_depth=args.term_depth,
        contract_depth=args.contract_depth,
        label_budget=args.label_budget,
        level=args.level,
        fuel=args.fuel,
        shrink=not args.no_shrink,
    )
    summary = fuzz(fuzz_config, _env(args), _config(args))
    if args.json:
        print(summary.table.to_json(orient="records"))
    else:
        print(summary.text())
    return EXIT_BLAME if summary.violations else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcon", description="Contract interpreter and static contract simplifier")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate a program")
    p.add_argument("file")
    p.add_argument("--fuel", type=int, default=None, help="maximum number of reduction steps")
    p.add_argument("--strict", action="store_true", help="strict constraint solving")
    p.add_argument("--dump-constraints", action="store_true", help="print the final constraint store")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simplify", help="print the simplified program")
    p.add_argument("file")
    p.add_argument("--level", choices=LEVELS, default="subset")
    p.add_argument("--no-join", action="store_true", help="stop after subset normalization, leaving forks")
    p.add_argument("--trace", action="store_true", help="print every rule application")
    p.add_argument("--report", action="store_true", help="print a JSON report of the simplification")
    p.add_argument("--gamma", default=None, help="file of implication facts")
    p.add_argument("--fuel", type=int, default=None)
    p.add_argument("--dump-constraints", action="store_true")
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("count", help="predicate checks before and after simplification")
    p.add_argument("files", nargs="+")
    p.add_argument("--gamma", default=None)
    p.add_argument("--fuel", type=int, default=None)
    p.add_argument("--xlsx", default=None, help="also write the table and a chart to this workbook")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("diff", help="compare original and simplified runs")
    p.add_argument("files", nargs="+")
    p.add_argument("--level", choices=LEVELS + ("both",), default="subset")
    p.add_argument("--gamma", default=None)
    p.add_argument("--fuel", type=int, default=None)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("fuzz", help="differential testing on random programs")
    p.add_argument("--seed", type=int, default=Config.FUZZ_SEED)
    p.add_argument("--cases", type=int, default=Config.FUZZ_CASES)
    p.add_argument("--level", choices=LEVELS + ("both",), default="both")
    p.add_argument("--term-depth", type=int, default=Config.FUZZ_TERM_DEPTH)
    p.add_argument("--contract-depth", type=int, default=Config.FUZZ_CONTRACT_DEPTH)
    p.add_argument("--label-budget", type=int, default=Config.FUZZ_LABEL_BUDGET)
    p.add_argument("--fuel", type=int, default=Config.FUZZ_FUEL)
    p.add_argument("--gamma", default=None)
    p.add_argument("--no-shrink", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fuzz)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (LconSyntaxError, GammaFileError, OSError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DanglingVariableError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_STUCK
