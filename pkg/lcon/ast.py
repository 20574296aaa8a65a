"""
Abstract syntax of the contract calculus.

Terms, contracts, blame identifiers and constraints are immutable frozen
dataclasses, so they hash, compare structurally and can be shared freely
between configurations, rewrite traces and fork branches.

Helpers
-------
substitute / substitute_contract
    Capture-avoiding substitution, also into the predicates and the bodies of
    dependent contracts.
unwrap, is_value, is_immediate, is_delayed
    Classification used by the evaluator and the transformations.
alpha_equiv, erase_contracts, free_vars
    Comparison and inspection.
children, replace_child, subterm, replace_at, positions
    Path based navigation; a path is a tuple of child indexes.
NameSupply, names_of
    Fresh binder names for renaming.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Iterator, Tuple, Union

BINARY_OPS = ("+", "-", "*", "=", "<", ">", "<=", ">=")
UNARY_OPS = ("string?",)


class Polarity(Enum):
    POSITIVE = "+"
    NEGATIVE = "-"

    def invert(self) -> "Polarity":
        return Polarity.NEGATIVE if self is Polarity.POSITIVE else Polarity.POSITIVE


# Blame identifiers


@dataclass(frozen=True, order=True)
class Label:
    """A source-level blame label, written `#name`."""

    name: str

    def __str__(self):
        return f"#{self.name}"


@dataclass(frozen=True, order=True)
class BlameVar:
    """A blame variable, written `@n`. Allocated by a constraint store."""

    index: int

    def __str__(self):
        return f"@{self.index}"


BlameId = Union[Label, BlameVar]


# Terms


@dataclass(frozen=True)
class Const:
    value: Union[bool, int, str]
    # bool is a subclass of int; the kind keeps `true` and `1` apart
    kind: str = field(init=False, repr=False)

    def __post_init__(self):
        if isinstance(self.value, bool):
            kind = "bool"
        elif isinstance(self.value, int):
            kind = "int"
        elif isinstance(self.value, str):
            kind = "str"
        else:
            raise ValueError(f"Unsupported constant {self.value!r}")
        object.__setattr__(self, "kind", kind)


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    param: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Op:
    op: str
    args: Tuple["Term", ...]


@dataclass(frozen=True)
class If:
    test: "Term"
    then: "Term"
    orelse: "Term"


@dataclass(frozen=True)
class Assert:
    """`(assert subject b contract)` where `b` is a label or a blame variable."""

    subject: "Term"
    blame: BlameId
    contract: "Contract"

    @property
    def label(self):
        return self.blame if isinstance(self.blame, Label) else None

    @property
    def var(self):
        return self.blame if isinstance(self.blame, BlameVar) else None


@dataclass(frozen=True)
class Eval:
    """A flat check in progress: `value` is checked, `pred` is being evaluated."""

    value: "Term"
    var: BlameVar
    pred: "Term"


@dataclass(frozen=True)
class Blame:
    label: Label
    polarity: Polarity


@dataclass(frozen=True)
class Fork:
    left: "Term"
    right: "Term"


Term = Union[Const, Var, Lam, App, Op, If, Assert, Eval, Blame, Fork]


# Contracts


@dataclass(frozen=True)
class Flat:
    pred: Term


@dataclass(frozen=True)
class Named:
    """A built-in flat predicate such as `Positive?`."""

    name: str


@dataclass(frozen=True)
class Fun:
    dom: "Contract"
    rng: "Contract"


@dataclass(frozen=True)
class Dep:
    param: str
    body: "Contract"


@dataclass(frozen=True)
class Cap:
    left: "Contract"
    right: "Contract"


@dataclass(frozen=True)
class Cup:
    left: "Contract"
    right: "Contract"


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


TOP = Top()
BOT = Bot()

Contract = Union[Flat, Named, Fun, Dep, Cap, Cup, Top, Bot]


# Constraints


@dataclass(frozen=True)
class Indirect:
    """`target <- source`: both facets of `source` flow into `target`."""

    target: BlameId
    source: BlameVar


@dataclass(frozen=True)
class CheckResult:
    """`target <- value`: the result of a flat check (or `true`/`false`)."""

    target: BlameVar
    value: Term


@dataclass(frozen=True)
class FunC:
    target: BlameVar
    dom: BlameVar
    rng: BlameVar


@dataclass(frozen=True)
class CapC:
    target: BlameVar
    left: BlameVar
    right: BlameVar


@dataclass(frozen=True)
class CupC:
    target: BlameVar
    left: BlameVar
    right: BlameVar


@dataclass(frozen=True)
class Inv:
    target: BlameVar
    negated: BlameVar


Constraint = Union[Indirect, CheckResult, FunC, CapC, CupC, Inv]


def constraint_sources(c: Constraint) -> Tuple[BlameVar, ...]:
    """Blame variables read on the right-hand side of a constraint."""
    if isinstance(c, Indirect):
        return (c.source,)
    if isinstance(c, CheckResult):
        return ()
    if isinstance(c, FunC):
        return (c.dom, c.rng)
    if isinstance(c, (CapC, CupC)):
        return (c.left, c.right)
    if isinstance(c, Inv):
        return (c.negated,)
    raise ValueError(f"Unknown constraint {c!r}")


# Programs


@dataclass(frozen=True)
class SourceProgram:
    """A parsed source program, with where it was read from and the labels it uses."""

    term: Term
    origin: str = "<string>"
    labels: FrozenSet[Label] = frozenset()


Program = Union[Term, SourceProgram]


def program_term(program: Program) -> Term:
    return program.term if isinstance(program, SourceProgram) else program


# Fresh names

_SUFFIX = re.compile(r"_\d+$")


class NameSupply:
    """
    Fresh variable names `base_1`, `base_2`, ... that avoid the names in `used`.

    Names depend only on the terms involved, so renaming the same term twice
    gives the same result.
    """

    def __init__(self, used=()):
        self.used = set(used)

    def fresh(self, base: str) -> str:
        stem = _SUFFIX.sub("", base)
        for k in itertools.count(1):
            name = f"{stem}_{k}"
            if name not in self.used:
                self.used.add(name)
                return name


def names_of(t) -> frozenset:
    """Every variable name, bound or free, in a term or contract."""
    if isinstance(t, Var):
        return frozenset([t.name])
    if isinstance(t, (Lam, Dep)):
        return names_of(t.body) | {t.param}
    if isinstance(t, Assert):
        return names_of(t.subject) | names_of(t.contract)
    if isinstance(t, Flat):
        return names_of(t.pred)
    if isinstance(t, Fun):
        return names_of(t.dom) | names_of(t.rng)
    if isinstance(t, Eval):
        return names_of(t.value) | names_of(t.pred)
    if isinstance(t, (App, Op, If, Fork, Cap, Cup)):
        return frozenset().union(*(names_of(k) for k in _parts(t)))
    return frozenset()


def _parts(t):
    if isinstance(t, App):
        return (t.fn, t.arg)
    if isinstance(t, Op):
        return t.args
    if isinstance(t, If):
        return (t.test, t.then, t.orelse)
    return (t.left, t.right)


# Classification


def is_immediate(c: Contract) -> bool:
    return isinstance(c, (Flat, Named, Top, Bot))


def is_delayed(c: Contract) -> bool:
    if isinstance(c, (Fun, Dep)):
        return True
    if isinstance(c, Cap):
        return is_delayed(c.left) and is_delayed(c.right)
    return False


def is_value(t: Term) -> bool:
    if isinstance(t, (Const, Lam)):
        return True
    if isinstance(t, Assert):
        return isinstance(t.blame, BlameVar) and is_delayed(t.contract) and is_value(t.subject)
    return False


def unwrap(t: Term) -> Term:
    """Strip the delayed-contract wrappers of a value."""
    while isinstance(t, Assert) and is_delayed(t.contract):
        t = t.subject
    return t


# Navigation


def children(t: Term) -> Tuple[Term, ...]:
    if isinstance(t, Lam):
        return (t.body,)
    if isinstance(t, App):
        return (t.fn, t.arg)
    if isinstance(t, Op):
        return t.args
    if isinstance(t, If):
        return (t.test, t.then, t.orelse)
    if isinstance(t, Assert):
        return (t.subject,)
    if isinstance(t, Eval):
        return (t.value, t.pred)
    if isinstance(t, Fork):
        return (t.left, t.right)
    return ()


def replace_child(t: Term, index: int, new: Term) -> Term:
    if isinstance(t, Lam):
        return Lam(t.param, new)
    if isinstance(t, App):
        return App(new, t.arg) if index == 0 else App(t.fn, new)
    if isinstance(t, Op):
        args = list(t.args)
        args[index] = new
        return Op(t.op, tuple(args))
    if isinstance(t, If):
        parts = [t.test, t.then, t.orelse]
        parts[index] = new
        return If(*parts)
    if isinstance(t, Assert):
        return Assert(new, t.blame, t.contract)
    if isinstance(t, Eval):
        return Eval(new, t.var, t.pred) if index == 0 else Eval(t.value, t.var, new)
    if isinstance(t, Fork):
        return Fork(new, t.right) if index == 0 else Fork(t.left, new)
    raise ValueError(f"{type(t).__name__} has no children")


def subterm(t: Term, path: Tuple[int, ...]) -> Term:
    for index in path:
        t = children(t)[index]
    return t


def replace_at(t: Term, path: Tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    head, rest = path[0], path[1:]
    return replace_child(t, head, replace_at(children(t)[head], rest, new))


def positions(t: Term, path: Tuple[int, ...] = ()) -> Iterator[Tuple[Tuple[int, ...], Term]]:
    """Pre-order (outermost first, then left to right) walk over all subterms."""
    stack = [(path, t)]
    while stack:
        p, node = stack.pop()
        yield p, node
        kids = children(node)
        for index in range(len(kids) - 1, -1, -1):
            stack.append((p + (index,), kids[index]))


# Variables and substitution


def free_vars(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset([t.name])
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.param}
    if isinstance(t, Assert):
        return free_vars(t.subject) | contract_free_vars(t.contract)
    return frozenset().union(*(free_vars(k) for k in children(t)))


def contract_free_vars(c: Contract) -> frozenset:
    if isinstance(c, Flat):
        return free_vars(c.pred)
    if isinstance(c, (Fun,)):
        return contract_free_vars(c.dom) | contract_free_vars(c.rng)
    if isinstance(c, (Cap, Cup)):
        return contract_free_vars(c.left) | contract_free_vars(c.right)
    if isinstance(c, Dep):
        return contract_free_vars(c.body) - {c.param}
    return frozenset()


def substitute(t: Term, name: str, repl: Term) -> Term:
    """t[name := repl], renaming binders that would capture a free variable of repl."""
    return _subst(t, name, repl, free_vars(repl))


def substitute_contract(c: Contract, name: str, repl: Term) -> Contract:
    return _subst_contract(c, name, repl, free_vars(repl))


def _subst(t, name, repl, fv):
    if isinstance(t, Var):
        return repl if t.name == name else t
    if isinstance(t, (Const, Blame)):
        return t
    if isinstance(t, Lam):
        if t.param == name:
            return t
        if t.param in fv:
            fresh = NameSupply(fv | names_of(t.body) | {name}).fresh(t.param)
            body = _subst(t.body, t.param, Var(fresh), frozenset([fresh]))
            return Lam(fresh, _subst(body, name, repl, fv))
        return Lam(t.param, _subst(t.body, name, repl, fv))
    if isinstance(t, Assert):
        return Assert(
            _subst(t.subject, name, repl, fv),
            t.blame,
            _subst_contract(t.contract, name, repl, fv),
        )
    if isinstance(t, App):
        return App(_subst(t.fn, name, repl, fv), _subst(t.arg, name, repl, fv))
    if isinstance(t, Op):
        return Op(t.op, tuple(_subst(a, name, repl, fv) for a in t.args))
    if isinstance(t, If):
        return If(*(_subst(k, name, repl, fv) for k in (t.test, t.then, t.orelse)))
    if isinstance(t, Eval):
        return Eval(_subst(t.value, name, repl, fv), t.var, _subst(t.pred, name, repl, fv))
    if isinstance(t, Fork):
        return Fork(_subst(t.left, name, repl, fv), _subst(t.right, name, repl, fv))
    raise ValueError(f"Cannot substitute into {t!r}")


def _subst_contract(c, name, repl, fv):
    if isinstance(c, Flat):
        return Flat(_subst(c.pred, name, repl, fv))
    if isinstance(c, Fun):
        return Fun(_subst_contract(c.dom, name, repl, fv), _subst_contract(c.rng, name, repl, fv))
    if isinstance(c, Cap):
        return Cap(_subst_contract(c.left, name, repl, fv), _subst_contract(c.right, name, repl, fv))
    if isinstance(c, Cup):
        return Cup(_subst_contract(c.left, name, repl, fv), _subst_contract(c.right, name, repl, fv))
    if isinstance(c, Dep):
        if c.param == name:
            return c
        if c.param in fv:
            fresh = NameSupply(fv | names_of(c.body) | {name}).fresh(c.param)
            body = _subst_contract(c.body, c.param, Var(fresh), frozenset([fresh]))
            return Dep(fresh, _subst_contract(body, name, repl, fv))
        return Dep(c.param, _subst_contract(c.body, name, repl, fv))
    return c


# Comparison


def alpha_equiv(a, b) -> bool:
    """Equality of terms (or contracts) up to renaming of bound variables."""
    return _alpha(a, b, {}, {}, 0)


def _alpha(a, b, env_a, env_b, depth):
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        da, db = env_a.get(a.name), env_b.get(b.name)
        if da is None and db is None:
            return a.name == b.name
        return da == db
    if isinstance(a, (Lam, Dep)):
        ea = {**env_a, a.param: depth}
        eb = {**env_b, b.param: depth}
        return _alpha(a.body, b.body, ea, eb, depth + 1)
    if isinstance(a, Op):
        return (
            a.op == b.op
            and len(a.args) == len(b.args)
            and all(_alpha(x, y, env_a, env_b, depth) for x, y in zip(a.args, b.args))
        )
    if isinstance(a, Assert):
        return (
            a.blame == b.blame
            and _alpha(a.subject, b.subject, env_a, env_b, depth)
            and _alpha(a.contract, b.contract, env_a, env_b, depth)
        )
    if isinstance(a, Eval):
        return (
            a.var == b.var
            and _alpha(a.value, b.value, env_a, env_b, depth)
            and _alpha(a.pred, b.pred, env_a, env_b, depth)
        )
    if isinstance(a, Flat):
        return _alpha(a.pred, b.pred, env_a, env_b, depth)
    if isinstance(a, (Fun,)):
        return _alpha(a.dom, b.dom, env_a, env_b, depth) and _alpha(a.rng, b.rng, env_a, env_b, depth)
    if isinstance(a, (Cap, Cup)):
        return _alpha(a.left, b.left, env_a, env_b, depth) and _alpha(a.right, b.right, env_a, env_b, depth)
    kids_a, kids_b = children(a), children(b)
    if kids_a or kids_b:
        return all(_alpha(x, y, env_a, env_b, depth) for x, y in zip(kids_a, kids_b))
    return a == b


def erase_contracts(t: Term) -> Term:
    """Remove every assertion, keeping the asserted subjects."""
    if isinstance(t, Assert):
        return erase_contracts(t.subject)
    if isinstance(t, Eval):
        return erase_contracts(t.value)
    kids = children(t)
    for index, kid in enumerate(kids):
        t = replace_child(t, index, erase_contracts(kid))
    return t


def contracts_of(t: Term) -> Iterator[Contract]:
    """All asserted contracts of a term, outermost first."""
    for _, node in positions(t):
        if isinstance(node, Assert):
            yield node.contract


def blame_vars_of(t: Term) -> Iterator[BlameVar]:
    for _, node in positions(t):
        if isinstance(node, Assert) and isinstance(node.blame, BlameVar):
            yield node.blame
        elif isinstance(node, Eval):
            yield node.var
