"""
Small-step evaluation of contract programs.

A configuration pairs a constraint store with a term. Every step first
consults the store: as soon as it implies blame the run stops with that
blame. Otherwise the leftmost-innermost redex under call-by-value is
reduced. Contracts on functions are delayed: the wrapped value stays a
value until it is applied, and each application unfolds one layer.
"""

import traceback
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from lcon.ast import (
    FALSE,
    TRUE,
    App,
    Assert,
    Blame,
    BlameVar,
    Bot,
    Cap,
    CapC,
    CheckResult,
    Const,
    Cup,
    CupC,
    Dep,
    Eval,
    Flat,
    Fun,
    FunC,
    If,
    Indirect,
    Inv,
    Label,
    Lam,
    Named,
    Op,
    Polarity,
    Program,
    Term,
    Top,
    is_delayed,
    is_value,
    program_term,
    substitute,
    substitute_contract,
    unwrap,
)
from lcon.config import Config
from lcon.constraints import ConstraintStore, blame_state


class StuckError(RuntimeError):
    def __init__(self, term, reason):
        self.term = term
        super().__init__(reason)


def _is_int(v):
    return isinstance(v, Const) and v.kind == "int"


BUILTIN_PREDICATES = {
    "Number?": _is_int,
    "String?": lambda v: isinstance(v, Const) and v.kind == "str",
    "Boolean?": lambda v: isinstance(v, Const) and v.kind == "bool",
    "Positive?": lambda v: _is_int(v) and v.value > 0,
    "Natural?": lambda v: _is_int(v) and v.value >= 0,
    "Negative?": lambda v: _is_int(v) and v.value < 0,
}

_ARITHMETIC = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
}

_COMPARISON = {
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


def delta(op: str, args: Sequence[Term]) -> Term:
    """
    Primitive operations on constants.

    `+ - *` on integers, `+` on strings (concatenation), `< > <= >=` on two
    integers or two strings, `=` on any two constants, `string?` on any
    value. Anything else is stuck.
    """
    if op == "string?" and len(args) == 1:
        return Const(isinstance(args[0], Const) and args[0].kind == "str")
    if len(args) != 2 or not all(isinstance(a, Const) for a in args):
        raise StuckError(Op(op, tuple(args)), f"'{op}' applied to non-constants")
    a, b = args
    if op == "=":
        return Const(a.kind == b.kind and a.value == b.value)
    if op == "+" and a.kind == b.kind == "str":
        return Const(a.value + b.value)
    if op in _ARITHMETIC and a.kind == b.kind == "int":
        return Const(_ARITHMETIC[op](a.value, b.value))
    if op in _COMPARISON and a.kind == b.kind and a.kind in ("int", "str"):
        return Const(_COMPARISON[op](a.value, b.value))
    raise StuckError(Op(op, tuple(args)), f"'{op}' is undefined on {a.kind} and {b.kind}")


class OutcomeKind(Enum):
    VALUE = "value"
    BLAME = "blame"
    STUCK = "stuck"
    OUT_OF_FUEL = "out_of_fuel"


@dataclass
class Configuration:
    store: ConstraintStore
    term: Term
    predicate_checks: int = 0
    fuel: int = Config.FUEL


@dataclass
class Outcome:
    kind: OutcomeKind
    term: Term
    store: ConstraintStore
    predicate_checks: int
    label: Optional[Label] = None
    polarity: Optional[Polarity] = None
    steps: int = 0
    reason: Optional[str] = field(default=None, compare=False)

    @property
    def blame(self):
        return (self.label, self.polarity) if self.kind is OutcomeKind.BLAME else None


class _Reducer:
    """One reduction step on a term, appending constraints to `store`."""

    def __init__(self, store: ConstraintStore):
        self.store = store
        self.checks = 0

    def reduce(self, t: Term) -> Term:
        if isinstance(t, Blame):
            return t
        if isinstance(t, App):
            if not is_value(t.fn):
                return self.within(t.fn, lambda r: App(r, t.arg))
            if not is_value(t.arg):
                return self.within(t.arg, lambda r: App(t.fn, r))
            return self.apply(t.fn, t.arg)
        if isinstance(t, Op):
            for index, arg in enumerate(t.args):
                if not is_value(arg):
                    return self.within(arg, lambda r: Op(t.op, t.args[:index] + (r,) + t.args[index + 1 :]))
            for index, arg in enumerate(t.args):
                # D-Op
                if isinstance(arg, Assert):
                    return Op(t.op, t.args[:index] + (arg.subject,) + t.args[index + 1 :])
            return delta(t.op, t.args)
        if isinstance(t, If):
            if not is_value(t.test):
                return self.within(t.test, lambda r: If(r, t.then, t.orelse))
            if isinstance(t.test, Assert):
                # D-If
                return If(t.test.subject, t.then, t.orelse)
            if t.test == TRUE:
                return t.then
            if t.test == FALSE:
                return t.orelse
            raise StuckError(t, "Condition is not a boolean")
        if isinstance(t, Assert):
            if not is_value(t.subject):
                return self.within(t.subject, lambda r: Assert(r, t.blame, t.contract))
            return self.check(t.subject, t.blame, t.contract)
        if isinstance(t, Eval):
            if not is_value(t.pred):
                return self.within(t.pred, lambda r: Eval(t.value, t.var, r))
            # Unit
            self.store.append(CheckResult(t.var, t.pred))
            return t.value
        raise StuckError(t, f"No rule applies to {type(t).__name__}")

    def within(self, sub, rebuild):
        r = self.reduce(sub)
        return r if isinstance(r, Blame) else rebuild(r)

    def check(self, v, b, c) -> Term:
        if isinstance(b, Label):
            # Assert
            var = self.store.fresh_var()
            self.store.append(Indirect(b, var))
            return Assert(v, var, c)
        if isinstance(c, Flat):
            self.checks += 1
            return Eval(v, b, App(c.pred, unwrap(v)))
        if isinstance(c, Named):
            self.checks += 1
            return Eval(v, b, Const(bool(BUILTIN_PREDICATES[c.name](unwrap(v)))))
        if isinstance(c, Top):
            self.store.append(CheckResult(b, TRUE))
            return v
        if isinstance(c, Bot):
            self.store.append(CheckResult(b, FALSE))
            return v
        if isinstance(c, (Cup, Cap)):
            left, right = self.store.fresh_var(), self.store.fresh_var()
            cls = CupC if isinstance(c, Cup) else CapC
            self.store.append(cls(b, left, right))
            return Assert(Assert(v, left, c.left), right, c.right)
        raise StuckError(Assert(v, b, c), "Unexpected contract")

    def apply(self, f, a) -> Term:
        if isinstance(f, Lam):
            return substitute(f.body, f.param, a)
        if not (isinstance(f, Assert) and is_delayed(f.contract)):
            raise StuckError(App(f, a), "Application of a non-function")
        v, b, c = f.subject, f.blame, f.contract
        if isinstance(c, Fun):
            if isinstance(c.dom, Top) and isinstance(c.rng, Bot):
                self.store.append(CheckResult(b, FALSE))
                return App(v, a)
            if isinstance(c.dom, Top):
                rng = self.store.fresh_var()
                self.store.append(Indirect(b, rng))
                return Assert(App(v, a), rng, c.rng)
            if isinstance(c.rng, Top):
                dom = self.store.fresh_var()
                self.store.append(Inv(b, dom))
                return App(v, Assert(a, dom, c.dom))
            dom, rng = self.store.fresh_var(), self.store.fresh_var()
            self.store.append(FunC(b, dom, rng))
            return Assert(App(v, Assert(a, dom, c.dom)), rng, c.rng)
        if isinstance(c, Dep):
            return Assert(App(v, a), b, substitute_contract(c.body, c.param, unwrap(a)))
        if isinstance(c, Cap):
            left, right = self.store.fresh_var(), self.store.fresh_var()
            self.store.append(CapC(b, left, right))
            return App(Assert(Assert(v, left, c.left), right, c.right), a)
        raise StuckError(App(f, a), "Unexpected delayed contract")


def step(cfg: Configuration) -> Configuration:
    """
    One reduction step. The store is shared with the returned configuration
    and extended in place.

    Raises
    ------
    StuckError
        When no rule applies.
    """
    reducer = _Reducer(cfg.store)
    term = reducer.reduce(cfg.term)
    return Configuration(cfg.store, term, cfg.predicate_checks + reducer.checks, cfg.fuel - 1)


def run(program: Program, fuel=Config.FUEL, store=None, strict=False) -> Outcome:
    """
    Evaluate `program` to an outcome.

    Parameters
    ----------
    program : Term or SourceProgram
    fuel : int
        Maximum number of steps.
    store : ConstraintStore, optional
        Initial constraints, e.g. the ones produced by a transformation. The
        store is copied, never modified.
    strict : bool, default False
        Strict constraint solving.
    """
    store = ConstraintStore() if store is None else store.copy()
    cfg = Configuration(store, program_term(program), 0, fuel)
    solved_upto = -1
    steps = 0
    while True:
        if len(cfg.store) != solved_upto:
            solved_upto = len(cfg.store)
            state = blame_state(cfg.store, strict=strict)
            if state is not None:
                label, polarity = state
                return Outcome(
                    OutcomeKind.BLAME, cfg.term, cfg.store, cfg.predicate_checks, label, polarity, steps
                )
        if isinstance(cfg.term, Blame):
            return Outcome(
                OutcomeKind.BLAME,
                cfg.term,
                cfg.store,
                cfg.predicate_checks,
                cfg.term.label,
                cfg.term.polarity,
                steps,
            )
        if is_value(cfg.term):
            return Outcome(OutcomeKind.VALUE, cfg.term, cfg.store, cfg.predicate_checks, steps=steps)
        if cfg.fuel <= 0:
            return Outcome(OutcomeKind.OUT_OF_FUEL, cfg.term, cfg.store, cfg.predicate_checks, steps=steps)
        try:
            cfg = step(cfg)
        except StuckError as e:
            return Outcome(
                OutcomeKind.STUCK, cfg.term, cfg.store, cfg.predicate_checks, steps=steps, reason=str(e)
            )
        steps += 1


class Evaluator:
    """
    Runs programs with a fixed configuration.

    Parameters
    ----------
    config : Config, optional
    fuel : int, optional
        Overrides `config.FUEL`.
    strict : bool, optional
        Strict constraint solving; defaults to `not config.LENIENT`.
    silent : bool, default False
        When True, an unexpected exception during a run is reported as a
        warning and the run returns None.
    """

    def __init__(self, config=Config(), fuel=None, strict=None, silent=False):
        self.config = config
        self.fuel = config.FUEL if fuel is None else fuel
        self.strict = (not config.LENIENT) if strict is None else strict
        self.silent = silent

    def run(self, program: Program, store=None) -> Optional[Outcome]:
        try:
            return run(program, fuel=self.fuel, store=store, strict=self.strict)
        except Exception as e:
            if self.silent:
                warnings.warn(f"Evaluation failed: {e}", category=UserWarning)
                traceback.print_exc()
                return None
            raise e

    def runall(self, programs: Sequence[Program]):
        return [self.run(program) for program in programs]
