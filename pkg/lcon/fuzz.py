"""
Random differential testing of the simplifiers.

Programs are generated simply typed and affine (every bound variable is used
at most once), except that a function bound by `((lam f M) N)` may be called
any number of times in `M`. They always terminate and never get stuck. Flat
contracts are total over the values of the type they are attached to. Each
generated program is simplified, both versions are run, and the pair is
classified (see `lcon.report`). Failing programs are shrunk to a small
counterexample.

Case `i` of seed `s` is generated from `numpy.random.default_rng([s, i])`,
so a case can be reproduced on its own and summaries are deterministic.
"""

from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Set, Tuple, Union

import numpy as np
import pandas as pd

from lcon.ast import (
    App,
    Assert,
    Cap,
    Const,
    Contract,
    Cup,
    Dep,
    Flat,
    Fun,
    If,
    Label,
    Lam,
    Named,
    Op,
    Term,
    Var,
    positions,
    replace_at,
)
from lcon.config import Config
from lcon.parser import normalize_intersections, print_term
from lcon.report import LEVELS, DiffReport, Verdict, diff

INT, BOOL, STR = "int", "bool", "str"
BASE_TYPES = (INT, BOOL, STR)


@dataclass(frozen=True)
class FunType:
    dom: "Type"
    rng: "Type"


Type = Union[str, FunType]

_FLATS = {
    INT: ("Number?", "Positive?", "Natural?", "Negative?"),
    BOOL: ("Boolean?",),
    STR: ("String?", "Number?"),
}

_COMPARISONS = ("<", ">", "<=", ">=")


@dataclass
class FuzzConfig:
    seed: int = Config.FUZZ_SEED
    cases: int = Config.FUZZ_CASES
    term_depth: int = Config.FUZZ_TERM_DEPTH
    contract_depth: int = Config.FUZZ_CONTRACT_DEPTH
    label_budget: int = Config.FUZZ_LABEL_BUDGET
    level: str = "both"
    fuel: int = Config.FUZZ_FUEL
    shrink: bool = True

    @property
    def levels(self) -> Tuple[str, ...]:
        return LEVELS if self.level == "both" else (self.level,)


class ProgramGenerator:
    """Generates one closed, well-typed, affine program per case index."""

    def __init__(self, fuzz_config: FuzzConfig, index: int):
        self.config = fuzz_config
        self.rng = np.random.default_rng([fuzz_config.seed, index])
        self.scope: List[Tuple[str, Type]] = []
        self.shared: Set[str] = set()
        self.names = 0
        self.labels = 0

    def pick(self, options):
        return options[int(self.rng.integers(len(options)))]

    def chance(self, p) -> bool:
        return bool(self.rng.random() < p)

    def fresh(self, base) -> str:
        self.names += 1
        return f"{base}{self.names}"

    def program(self) -> Term:
        ty = self.pick(BASE_TYPES)
        return self.term(ty, self.config.term_depth)

    # Types

    def arg_type(self, depth) -> Type:
        if depth > 1 and self.chance(0.2):
            return FunType(INT, INT)
        return self.pick(BASE_TYPES)

    # Terms

    def term(self, ty: Type, depth: int) -> Term:
        if isinstance(ty, FunType):
            return self.function(ty, depth)
        if depth <= 0:
            return self.leaf(ty)
        kind = self.pick(("leaf", "prim", "app", "app", "if", "let", "assert", "assert"))
        if kind == "prim":
            return self.primitive(ty, depth)
        if kind == "app":
            return self.application(ty, depth)
        if kind == "let" and depth > 1:
            return self.let(ty, depth)
        if kind == "if":
            test = self.term(BOOL, depth - 1)
            return If(test, self.term(ty, depth - 1), self.term(ty, depth - 1))
        if kind == "assert" and self.labels < self.config.label_budget:
            return self.assertion(ty, depth)
        return self.leaf(ty)

    def leaf(self, ty: Type) -> Term:
        var = self.variable(ty)
        if var is not None and self.chance(0.6):
            return var
        if ty == INT:
            return Const(int(self.rng.integers(-2, 4)))
        if ty == BOOL:
            return Const(self.chance(0.5))
        return Const(self.pick(("a", "b", "")))

    def variable(self, ty: Type) -> Optional[Var]:
        candidates = [name for name, t in self.scope if t == ty]
        if not candidates:
            return None
        name = self.pick(candidates)
        if name not in self.shared:
            self.scope = [(n, t) for n, t in self.scope if n != name]
        return Var(name)

    def primitive(self, ty: Type, depth: int) -> Term:
        if ty == INT:
            return Op(self.pick(("+", "-", "*")), (self.term(INT, depth - 1), self.term(INT, depth - 1)))
        if ty == STR:
            return Op("+", (self.term(STR, depth - 1), self.term(STR, depth - 1)))
        if self.chance(0.25):
            operand = self.pick(BASE_TYPES)
            return Op("=", (self.term(operand, depth - 1), self.term(operand, depth - 1)))
        return Op(self.pick(_COMPARISONS), (self.term(INT, depth - 1), self.term(INT, depth - 1)))

    def application(self, ty: Type, depth: int) -> Term:
        callable_ = [t for n, t in self.scope if n in self.shared and t.rng == ty]
        if callable_ and self.chance(0.6):
            dom = self.pick(callable_).dom
        else:
            dom = self.arg_type(depth)
        fn = self.term(FunType(dom, ty), depth - 1)
        return App(fn, self.term(dom, depth - 1))

    def let(self, ty: Type, depth: int) -> Term:
        fn_type = FunType(self.pick(BASE_TYPES), ty)
        fn = self.function(fn_type, depth - 1)
        name = self.fresh("f")
        self.scope.append((name, fn_type))
        self.shared.add(name)
        if self.chance(0.5):
            body = self.calls(name, fn_type, depth - 1)
        else:
            body = self.term(ty, depth - 1)
        self.scope = [(n, t) for n, t in self.scope if n != name]
        return App(Lam(name, body), fn)

    def calls(self, name: str, fn_type: FunType, depth: int) -> Term:
        """Two calls of `name`, combined into a value of its range type."""
        first = App(Var(name), self.term(fn_type.dom, depth - 1))
        second = App(Var(name), self.term(fn_type.dom, depth - 1))
        return Op("=" if fn_type.rng == BOOL else "+", (first, second))

    def function(self, ty: FunType, depth: int) -> Term:
        if depth > 0 and self.labels < self.config.label_budget and self.chance(0.4):
            return self.assertion(ty, depth)
        var = self.variable(ty)
        if var is not None and self.chance(0.5):
            return var
        name = self.fresh("x")
        self.scope.append((name, ty.dom))
        body = self.term(ty.rng, depth - 1)
        self.scope = [(n, t) for n, t in self.scope if n != name]
        return Lam(name, body)

    def assertion(self, ty: Type, depth: int) -> Term:
        self.labels += 1
        label = Label(f"l{self.labels}")
        subject = self.term(ty, depth - 1)
        return Assert(subject, label, normalize_intersections(self.contract(ty, self.config.contract_depth)))

    # Contracts

    def contract(self, ty: Type, depth: int) -> Contract:
        if depth > 0 and self.chance(0.3):
            cls = self.pick((Cap, Cup))
            return cls(self.contract(ty, depth - 1), self.contract(ty, depth - 1))
        if isinstance(ty, FunType):
            if ty.dom == INT and ty.rng == INT and self.chance(0.25):
                return self.dependent()
            return Fun(self.contract(ty.dom, depth - 1), self.contract(ty.rng, depth - 1))
        if ty == INT and self.chance(0.3):
            v = self.fresh("v")
            bound = Const(int(self.rng.integers(-2, 3)))
            return Flat(Lam(v, Op(self.pick(_COMPARISONS), (Var(v), bound))))
        return Named(self.pick(_FLATS[ty]))

    def dependent(self) -> Contract:
        x, v = self.fresh("x"), self.fresh("v")
        return Dep(x, Flat(Lam(v, Op(self.pick(_COMPARISONS), (Var(v), Var(x))))))


def generate(fuzz_config: FuzzConfig, index: int) -> Term:
    return ProgramGenerator(fuzz_config, index).program()


# Shrinking


def _contract_shrinks(c: Contract) -> Iterator[Contract]:
    if isinstance(c, (Cap, Cup)):
        yield c.left
        yield c.right
        for left in _contract_shrinks(c.left):
            yield type(c)(left, c.right)
        for right in _contract_shrinks(c.right):
            yield type(c)(c.left, right)
    elif isinstance(c, Fun):
        for dom in _contract_shrinks(c.dom):
            yield Fun(dom, c.rng)
        for rng in _contract_shrinks(c.rng):
            yield Fun(c.dom, rng)


def shrink_candidates(t: Term) -> Iterator[Term]:
    """Smaller programs of the same type: an assertion dropped, a conditional
    replaced by a branch, an intersection or union replaced by an operand."""
    for path, node in positions(t):
        if isinstance(node, Assert):
            yield replace_at(t, path, node.subject)
        elif isinstance(node, If):
            yield replace_at(t, path, node.then)
            yield replace_at(t, path, node.orelse)
    for path, node in positions(t):
        if isinstance(node, Assert):
            for c in _contract_shrinks(node.contract):
                yield replace_at(t, path, Assert(node.subject, node.blame, normalize_intersections(c)))


def shrink(program: Term, failing: Callable[[Term], bool], limit=500) -> Term:
    """Greedily take the first smaller candidate that still fails, until none does."""
    attempts = 0
    improved = True
    while improved and attempts < limit:
        improved = False
        for candidate in shrink_candidates(program):
            attempts += 1
            if failing(candidate):
                program = candidate
                improved = True
                break
            if attempts >= limit:
                break
    return program


# Driver


@dataclass
class FuzzSummary:
    table: pd.DataFrame
    counterexamples: List[Tuple[int, str, str]] = field(default_factory=list)

    @property
    def violations(self) -> int:
        if self.table.empty:
            return 0
        return int((~self.table["passed"] & (self.table["verdict"] != Verdict.INCONCLUSIVE.value)).sum())

    def text(self) -> str:
        lines = [f"cases: {len(self.table)}"]
        if not self.table.empty:
            counts = self.table.groupby(["level", "verdict"]).size()
            for (level, verdict), n in counts.items():
                lines.append(f"{level} {verdict}: {n}")
        for index, level, program in self.counterexamples:
            lines.append(f"counterexample case {index} ({level}): {program}")
        return "\n".join(lines)


_COLUMNS = ["case", "level", "verdict", "kind", "checks_original", "checks_transformed", "passed"]


def fuzz(fuzz_config: FuzzConfig = FuzzConfig(), env=None, config=Config()) -> FuzzSummary:
    rows, counterexamples = [], []
    for index in range(fuzz_config.cases):
        program = generate(fuzz_config, index)
        for level in fuzz_config.levels:
            report = _case(program, level, index, env, config, fuzz_config.fuel)
            rows.append(
                {
                    "case": index,
                    "level": level,
                    "verdict": report.verdict.value,
                    "kind": report.kind,
                    "checks_original": report.checks_original,
                    "checks_transformed": report.checks_transformed,
                    "passed": report.passed,
                }
            )
            if _failed(report) and fuzz_config.shrink:

                def failing(candidate, level=level):
                    return _failed(_case(candidate, level, index, env, config, fuzz_config.fuel))

                counterexamples.append((index, level, print_term(shrink(program, failing))))
    return FuzzSummary(pd.DataFrame(rows, columns=_COLUMNS), counterexamples)


def _case(program, level, index, env, config, fuel) -> DiffReport:
    return diff(program, level, name=f"case {index}", env=env, config=config, fuel=fuel)


def _failed(report: DiffReport) -> bool:
    return not report.passed and report.verdict is not Verdict.INCONCLUSIVE
