"""
Joining forks and condensing duplicate assertions.

After subset normalization a program may be a tree of forks, one leaf per
combination of alternatives. Joining merges two sibling leaves into one
term: both must have the same structure once assertions are ignored, and a
blame term in one of them matches anything. Blame holes take the sibling's
code, and where the assertion frames around a position differ, both sides
receive the union of the frames. Identical siblings collapse.

Condensing finally removes an assertion whose contract is already asserted,
under another blame variable, further inside the same chain, and redirects
the removed variable to the kept one.
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Tuple

from lcon.ast import (
    App,
    Assert,
    Blame,
    Const,
    Contract,
    Eval,
    Fork,
    If,
    Indirect,
    Lam,
    Op,
    Program,
    Term,
    Var,
    children,
    contracts_of,
    positions,
    program_term,
    replace_at,
    replace_child,
)
from lcon.baseline import Path, StepBudgetExceeded, TransformStep, is_var_assert
from lcon.config import Config
from lcon.constraints import ConstraintStore
from lcon.evaluator import Evaluator
from lcon.subset import SubsetTransformer, observations

Frame = Tuple[object, Contract]


class JoinStuckError(RuntimeError):
    pass


@dataclass(frozen=True)
class AssertionContext:
    """A stack of assertion frames, innermost first."""

    frames: Tuple[Frame, ...] = ()

    def plug(self, t: Term) -> Term:
        for blame, contract in self.frames:
            t = Assert(t, blame, contract)
        return t

    def __sub__(self, other: "AssertionContext") -> "AssertionContext":
        return AssertionContext(tuple(f for f in self.frames if f not in other.frames))


def split_frames(t: Term) -> Tuple[AssertionContext, Term]:
    frames = []
    while isinstance(t, Assert):
        frames.append((t.blame, t.contract))
        t = t.subject
    return AssertionContext(tuple(reversed(frames))), t


def ctx_join(a: AssertionContext, b: AssertionContext) -> AssertionContext:
    """The frames of `a`, then the frames of `b` that `a` does not already have."""
    return AssertionContext(a.frames + (b - a).frames)


def _same_head(m: Term, n: Term) -> bool:
    if type(m) is not type(n):
        return False
    if isinstance(m, (Const, Var)):
        return m == n
    if isinstance(m, Lam):
        return m.param == n.param
    if isinstance(m, Op):
        return m.op == n.op and len(m.args) == len(n.args)
    if isinstance(m, Eval):
        return m.var == n.var
    return isinstance(m, (App, If, Fork))


def equiv_witness(m: Term, n: Term, m_path: Path = (), n_path: Path = ()) -> Optional[Tuple[Tuple[Path, Path], ...]]:
    """
    The aligned positions at which `m` and `n` differ only by assertion
    frames or by a blame term, or None when they are not equivalent.

    Each pair holds a path into `m` and a path into `n`, both pointing at the
    outermost frame of the aligned position. Equal terms give an empty witness.
    """
    m_core, n_core = m, n
    m_depth = n_depth = 0
    while isinstance(m_core, Assert):
        m_core, m_depth = m_core.subject, m_depth + 1
    while isinstance(n_core, Assert):
        n_core, n_depth = n_core.subject, n_depth + 1
    here = ((m_path, n_path),)
    if isinstance(m_core, Blame) or isinstance(n_core, Blame):
        return () if m == n else here
    if not _same_head(m_core, n_core):
        return None
    witness = () if split_frames(m)[0] == split_frames(n)[0] else here
    m_inner = m_path + (0,) * m_depth
    n_inner = n_path + (0,) * n_depth
    for i, (a, b) in enumerate(zip(children(m_core), children(n_core))):
        sub = equiv_witness(a, b, m_inner + (i,), n_inner + (i,))
        if sub is None:
            return None
        witness += sub
    return witness


def struct_equiv(m: Term, n: Term) -> bool:
    """Equality up to assertions, where a blame term is equivalent to anything."""
    return equiv_witness(m, n) is not None


def _synchronize(m: Term, n: Term) -> Optional[Tuple[str, Term, Term]]:
    """The leftmost synchronization between two siblings, or None when they already agree."""
    ctx_m, core_m = split_frames(m)
    ctx_n, core_n = split_frames(n)
    if isinstance(core_m, Blame) or isinstance(core_n, Blame):
        if core_m != core_n:
            if isinstance(core_n, Blame):
                return "Synchronize/Left", m, ctx_n.plug(core_m)
            return "Synchronize/Right", ctx_m.plug(core_n), n
    else:
        if not _same_head(core_m, core_n):
            raise JoinStuckError(f"Branches differ in structure: {type(core_m).__name__} and {type(core_n).__name__}")
        kids_m, kids_n = children(core_m), children(core_n)
        for index, (a, b) in enumerate(zip(kids_m, kids_n)):
            found = _synchronize(a, b)
            if found is not None:
                rule, a, b = found
                return (
                    rule,
                    ctx_m.plug(replace_child(core_m, index, a)),
                    ctx_n.plug(replace_child(core_n, index, b)),
                )
    if ctx_m != ctx_n:
        joined = ctx_join(ctx_n, ctx_m)
        return "Synchronize/Contract", joined.plug(core_m), joined.plug(core_n)
    return None


def _innermost_fork(t: Term):
    for path, node in positions(t):
        if isinstance(node, Fork) and not any(
            isinstance(x, Fork) for kid in children(node) for _, x in positions(kid)
        ):
            return path, node
    return None


def join_step(t: Term) -> Optional[TransformStep]:
    """
    One join rule on the leftmost innermost fork.

    Raises
    ------
    JoinStuckError
        When the two branches of the fork are not structurally equivalent.
    """
    found = _innermost_fork(t)
    if found is None:
        return None
    path, fork = found
    if fork.left == fork.right:
        rule, replacement = "Match", fork.left
    else:
        synced = _synchronize(fork.left, fork.right)
        if synced is None:
            raise JoinStuckError("Branches cannot be synchronized")
        rule, left, right = synced
        replacement = Fork(left, right)
    after = replace_at(t, path, replacement)
    return TransformStep(rule, path, t, after, ())


def condense_step(store: ConstraintStore, t: Term) -> Optional[TransformStep]:
    """Drop an outer assertion whose contract is asserted again further inside the chain."""
    for path, node in positions(t):
        if not is_var_assert(node):
            continue
        inner = node.subject
        while isinstance(inner, Assert):
            if is_var_assert(inner) and inner.contract == node.contract:
                added = () if inner.blame == node.blame else (Indirect(node.blame, inner.blame),)
                store.extend(added)
                after = replace_at(t, path, node.subject)
                return TransformStep("Condense", path, t, after, added)
            inner = inner.subject
    return None


def _exhaust(step, t, cap):
    trace = []
    while True:
        if len(trace) >= cap:
            raise StepBudgetExceeded(f"No normal form after {len(trace)} steps")
        s = step(t)
        if s is None:
            return t, trace
        trace.append(s)
        t = s.after


def join_all(t: Term, config=Config()):
    return _exhaust(join_step, t, config.STEP_CAP)


def condense_all(store: ConstraintStore, t: Term, config=Config()):
    return _exhaust(lambda term: condense_step(store, term), t, config.STEP_CAP)


@dataclass
class OptimizationReport:
    rule_counts: Counter = field(default_factory=Counter)
    branches_max: int = 1
    residual_contracts: Counter = field(default_factory=Counter)
    predicates_before: Optional[int] = None
    predicates_after: Optional[int] = None

    def to_dict(self):
        return {
            "rule_counts": dict(sorted(self.rule_counts.items())),
            "branches_max": self.branches_max,
            "residual_contracts": dict(sorted(self.residual_contracts.items())),
            "predicates_before": self.predicates_before,
            "predicates_after": self.predicates_after,
        }


def contract_census(t: Term) -> Counter:
    return Counter(type(c).__name__ for c in contracts_of(t))


def optimize(program: Program, env=None, config=Config(), join=True, count=True):
    """
    Subset normalization, then joining, then condensing.

    With `count`, the report also holds the predicate checks of one run of the
    program before and after. Forked results (`join=False`) are left uncounted.

    Returns
    -------
    (ConstraintStore, Term, list of TransformStep, OptimizationReport)
    """
    source = program_term(program)
    store = ConstraintStore()
    store, term, trace = SubsetTransformer(env, config).normalize(store, source)
    branches = [sum(1 for _ in observations(s.after)) for s in trace]
    if join:
        term, joined = join_all(term, config)
        term, condensed = condense_all(store, term, config)
        trace = trace + joined + condensed
    report = OptimizationReport(
        rule_counts=Counter(s.rule for s in trace),
        branches_max=max(branches, default=1),
        residual_contracts=contract_census(term),
    )
    if count and join:
        evaluator = Evaluator(config)
        report.predicates_before = evaluator.run(source).predicate_checks
        report.predicates_after = evaluator.run(term, store).predicate_checks
    return store, term, trace, report
