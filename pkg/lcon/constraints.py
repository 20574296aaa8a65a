"""
Blame constraints and their solution.

A constraint store is an append-only list of constraints plus the supply of
fresh blame variables. Every blame identifier has two boolean facets:
`subject` (the contracted value kept its promise) and `context` (its context
kept its promise). Solving computes the least interpretation, in the order
true < false: a facet is false exactly when one of the constraints defining
its identifier requires it to be, given the facets that constraint reads.
"""

from collections import Counter, defaultdict, deque
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Dict, List, Optional, Tuple

from lcon.ast import (
    FALSE,
    Blame,
    BlameId,
    BlameVar,
    CapC,
    CheckResult,
    Constraint,
    CupC,
    FunC,
    Indirect,
    Inv,
    Label,
    Polarity,
    constraint_sources,
    unwrap,
)

SUBJECT = "subject"
CONTEXT = "context"


class DanglingVariableError(ValueError):
    pass


class OrphanVariableError(ValueError):
    pass


class ConstraintStore:
    def __init__(self, constraints=(), next_var=None):
        self.constraints: List[Constraint] = list(constraints)
        if next_var is None:
            used = [
                b.index
                for c in self.constraints
                for b in (c.target,) + constraint_sources(c)
                if isinstance(b, BlameVar)
            ]
            next_var = max(used, default=0) + 1
        self.next_var = next_var

    def fresh_var(self) -> BlameVar:
        var = BlameVar(self.next_var)
        self.next_var += 1
        return var

    def append(self, constraint: Constraint):
        self.constraints.append(constraint)

    def extend(self, constraints):
        self.constraints.extend(constraints)

    def copy(self) -> "ConstraintStore":
        return ConstraintStore(self.constraints, self.next_var)

    def __len__(self):
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    def __getitem__(self, index):
        return self.constraints[index]

    def __eq__(self, other):
        return isinstance(other, ConstraintStore) and self.constraints == other.constraints

    def dump(self, printer=None) -> str:
        from lcon.parser import Printer

        printer = printer or Printer()
        return "\n".join(format_constraint(c, printer) for c in self.constraints)


def fresh_var(store: ConstraintStore) -> BlameVar:
    return store.fresh_var()


def format_constraint(c: Constraint, printer) -> str:
    target = printer.blame(c.target)
    if isinstance(c, Indirect):
        rhs = printer.blame(c.source)
    elif isinstance(c, CheckResult):
        rhs = printer.term(c.value)
    elif isinstance(c, FunC):
        rhs = f"({printer.blame(c.dom)} -> {printer.blame(c.rng)})"
    elif isinstance(c, CapC):
        rhs = f"({printer.blame(c.left)} cap {printer.blame(c.right)})"
    elif isinstance(c, CupC):
        rhs = f"({printer.blame(c.left)} cup {printer.blame(c.right)})"
    elif isinstance(c, Inv):
        rhs = f"(not {printer.blame(c.negated)})"
    else:
        raise ValueError(f"Unknown constraint {c!r}")
    return f"{target} <- {rhs}"


def make_truth(value) -> bool:
    """Only `false` (possibly under delayed wrappers) is a failed check."""
    return unwrap(value) != FALSE


@dataclass
class Interpretation:
    """The facets forced to false; everything else is true."""

    false: set

    def subject(self, b: BlameId) -> bool:
        return (b, SUBJECT) not in self.false

    def context(self, b: BlameId) -> bool:
        return (b, CONTEXT) not in self.false

    def facets(self, b: BlameId) -> Tuple[bool, bool]:
        return self.subject(b), self.context(b)


def _required(c: Constraint, i: Interpretation) -> Tuple[bool, bool]:
    """The (subject, context) lower bounds a constraint puts on its target."""
    if isinstance(c, Indirect):
        return i.facets(c.source)
    if isinstance(c, CheckResult):
        return make_truth(c.value), True
    if isinstance(c, FunC):
        s1, c1 = i.facets(c.dom)
        s2, c2 = i.facets(c.rng)
        return c1 and (not s1 or s2), s1 and c2
    if isinstance(c, CapC):
        s1, c1 = i.facets(c.left)
        s2, c2 = i.facets(c.right)
        return s1 and s2, c1 or c2
    if isinstance(c, CupC):
        s1, c1 = i.facets(c.left)
        s2, c2 = i.facets(c.right)
        return s1 or s2, c1 and c2
    if isinstance(c, Inv):
        s1, c1 = i.facets(c.negated)
        return c1, s1
    raise ValueError(f"Unknown constraint {c!r}")


def _define(b: BlameId, definition: List[Constraint], i: Interpretation, falling=False) -> bool:
    """Set the facets of `b` to what its constraints require; report whether they changed."""
    subject = context = True
    for c in definition:
        s, k = _required(c, i)
        subject, context = subject and s, context and k
    before = i.facets(b)
    if falling:
        subject, context = subject and before[0], context and before[1]
    for facet, value in ((SUBJECT, subject), (CONTEXT, context)):
        if value:
            i.false.discard((b, facet))
        else:
            i.false.add((b, facet))
    return (subject, context) != before


def _iterate(definitions, graph, i: Interpretation) -> Interpretation:
    readers: Dict[BlameId, set] = defaultdict(set)
    for target, sources in graph.items():
        for source in sources:
            readers[source].add(target)
    # past this many changes an identifier may only fall, which ends oscillating cycles
    limit = 2 * len(graph) + 2
    changes = Counter()
    worklist = deque(graph)
    queued = set(graph)
    while worklist:
        b = worklist.popleft()
        queued.discard(b)
        if _define(b, definitions[b], i, falling=changes[b] >= limit):
            changes[b] += 1
            for reader in readers[b]:
                if reader not in queued:
                    worklist.append(reader)
                    queued.add(reader)
    return i


def solve(store: ConstraintStore, strict=False) -> Interpretation:
    """
    Solution of the store.

    The facets of an identifier are the conjunction of what its constraints
    require of them. Without cycles, identifiers are defined sources first,
    one pass in all. Cyclic stores are iterated from all-true to a fixpoint,
    which for cycles without function constraints is the least solution.

    Parameters
    ----------
    store : ConstraintStore
    strict : bool, default False
        Reject constraints that read a blame variable the store never allocated.

    Raises
    ------
    DanglingVariableError
        In strict mode only.
    """
    definitions: Dict[BlameId, List[Constraint]] = defaultdict(list)
    graph: Dict[BlameId, set] = {}
    for c in store:
        sources = constraint_sources(c)
        for source in sources:
            if strict and source.index >= store.next_var:
                raise DanglingVariableError(f"Constraint on {c.target} reads unallocated {source}")
        definitions[c.target].append(c)
        graph.setdefault(c.target, set()).update(sources)

    interpretation = Interpretation(false=set())
    try:
        order = list(TopologicalSorter(graph).static_order())
    except CycleError:
        return _iterate(definitions, graph, interpretation)
    for b in order:
        _define(b, definitions[b], interpretation)
    return interpretation


def blame_state(store: ConstraintStore, strict=False) -> Optional[Tuple[Label, Polarity]]:
    """
    The blame implied by the store, if any.

    A label with a false subject facet means positive blame, a false context
    facet negative blame. With several violated labels, the one whose first
    constraint is oldest wins, and the subject facet is looked at first.
    """
    interpretation = solve(store, strict=strict)
    if not interpretation.false:
        return None
    seen = set()
    for c in store:
        label = c.target
        if not isinstance(label, Label) or label in seen:
            continue
        seen.add(label)
        if not interpretation.subject(label):
            return label, Polarity.POSITIVE
        if not interpretation.context(label):
            return label, Polarity.NEGATIVE
    return None


def _parent(store: ConstraintStore, b: BlameVar) -> Tuple[BlameId, bool]:
    """The oldest constraint reading `b`, and whether the edge flips the sign."""
    for c in store:
        if isinstance(c, FunC) and c.dom == b:
            return c.target, True
        if isinstance(c, Inv) and c.negated == b:
            return c.target, True
        if b in constraint_sources(c):
            return c.target, False
    raise OrphanVariableError(f"{b} has no parent constraint")


def _walk(store: ConstraintStore, b: BlameId) -> Tuple[Label, Polarity]:
    sign = Polarity.POSITIVE
    seen = set()
    while not isinstance(b, Label):
        if b in seen:
            raise OrphanVariableError(f"{b} sits on a cycle of constraints")
        seen.add(b)
        b, flips = _parent(store, b)
        if flips:
            sign = sign.invert()
    return b, sign


def root_of(store: ConstraintStore, b: BlameId) -> Label:
    return _walk(store, b)[0]


def sign_of(store: ConstraintStore, b: BlameId) -> Polarity:
    return _walk(store, b)[1]


def blame_of(store: ConstraintStore, b: BlameId) -> Blame:
    """The blame term that a violation of `b` turns into."""
    return Blame(*_walk(store, b))
