"""
Baseline contract simplification.

Rewrites a program at compile time so that it performs fewer predicate
checks while producing exactly the same outcome, blame label and polarity
included. Rules unfold assertions into blame constraints, decide flat
contracts on values (Verify), move immediate contracts towards their
subjects (Push), and move function contracts from use sites into function
bodies (Unroll) and back out to the function (Lower).

The rewrite driver here is shared with the subset transformation: at each
step the highest-priority rule that applies anywhere is taken, and among its
matches the leftmost-outermost one.
"""

import warnings
from dataclasses import dataclass
from typing import Callable, FrozenSet, Iterator, List, Optional, Tuple

from lcon.ast import (
    BOT,
    TOP,
    TRUE,
    App,
    Assert,
    BlameVar,
    Bot,
    Cap,
    CapC,
    CheckResult,
    Const,
    Constraint,
    Contract,
    Cup,
    CupC,
    Flat,
    Fork,
    Fun,
    FunC,
    If,
    Indirect,
    Label,
    Lam,
    Named,
    Op,
    Program,
    Term,
    Top,
    Var,
    children,
    constraint_sources,
    free_vars,
    is_delayed,
    is_immediate,
    is_value,
    positions,
    program_term,
    replace_at,
    subterm,
    substitute,
)
from lcon.config import Config
from lcon.constraints import ConstraintStore, make_truth
from lcon.evaluator import BUILTIN_PREDICATES, OutcomeKind, run
from lcon.subcontract import Subcontracting

Path = Tuple[int, ...]


class StepBudgetExceeded(RuntimeError):
    pass


@dataclass
class Rewrite:
    """A matched rule: `build` appends constraints and returns the replacement for `path`."""

    rule: str
    path: Path
    build: Callable[[ConstraintStore], Term]


@dataclass
class TransformStep:
    rule: str
    path: Path
    before: Term
    after: Term
    added: Tuple[Constraint, ...]

    @property
    def redex(self) -> Term:
        return subterm(self.before, self.path)


def is_var_assert(t) -> bool:
    return isinstance(t, Assert) and isinstance(t.blame, BlameVar)


def is_flat(c) -> bool:
    return isinstance(c, (Flat, Named))


def strip_bottoms(t: Term) -> Term:
    """The subject under a stack of `bot` assertions."""
    while is_var_assert(t) and isinstance(t.contract, Bot):
        t = t.subject
    return t


def assertion_chain(t: Term, path: Path = ()) -> Iterator[Tuple[Path, Assert]]:
    """The assertion frames directly nested in `t`, outermost first, with their paths."""
    while isinstance(t, Assert):
        yield path, t
        t, path = t.subject, path + (0,)


# Repeated evaluation

# How the value of a position is consumed
NOT_CALLED = "not-called"
ESCAPES = "escapes"


def repeated_positions(t: Term) -> FrozenSet[Path]:
    """
    Positions that one run of `t` may evaluate more than once.

    A lambda body runs at most once when the lambda is applied at most once:
    it is in operator position, or bound to a variable with a single use that
    is applied at most once, or never applied at all (the program result, an
    unused argument). Any other lambda escapes and its body counts as repeated.
    """
    repeated = set()
    _visit_calls(t, (), True, NOT_CALLED, {}, None, repeated)
    return frozenset(repeated)


def _visit_calls(t, path, once, use, env, binding, repeated):
    if not once:
        repeated.add(path)
    if isinstance(t, Var):
        uses = env.get(t.name)
        if uses is not None:
            uses.append((once, use))
    elif isinstance(t, Lam):
        if isinstance(use, tuple):
            body_once, body_use = once, use[1]
        elif use == NOT_CALLED:
            body_once, body_use = once, NOT_CALLED
        else:
            body_once, body_use = False, ESCAPES
        inner = dict(env)
        inner[t.param] = binding
        _visit_calls(t.body, path + (0,), body_once, body_use, inner, None, repeated)
    elif isinstance(t, App):
        core = t.fn
        while isinstance(core, Assert):
            core = core.subject
        uses = [] if isinstance(core, Lam) else None
        _visit_calls(t.fn, path + (0,), once, ("call", use), env, uses, repeated)
        if uses is None or len(uses) > 1 or (uses and not uses[0][0]):
            arg_use = ESCAPES
        else:
            arg_use = uses[0][1] if uses else NOT_CALLED
        _visit_calls(t.arg, path + (1,), once, arg_use, env, None, repeated)
    elif isinstance(t, Assert):
        _visit_calls(t.subject, path + (0,), once, use, env, binding, repeated)
    elif isinstance(t, If):
        _visit_calls(t.test, path + (0,), once, ESCAPES, env, None, repeated)
        _visit_calls(t.then, path + (1,), once, use, env, None, repeated)
        _visit_calls(t.orelse, path + (2,), once, use, env, None, repeated)
    elif isinstance(t, Fork):
        _visit_calls(t.left, path + (0,), once, use, env, None, repeated)
        _visit_calls(t.right, path + (1,), once, use, env, None, repeated)
    else:
        for index, kid in enumerate(children(t)):
            _visit_calls(kid, path + (index,), once, ESCAPES, env, None, repeated)


def only_immediate(c: Contract) -> bool:
    if isinstance(c, Cap):
        return only_immediate(c.left) and only_immediate(c.right)
    return is_immediate(c)


class Rewriter:
    """
    Priority-driven rewriting of a term.

    Parameters
    ----------
    env : ImplicationEnv, optional
        Implication facts for subcontracting; defaults to the shipped Γ.
    config : Config, optional
    """

    RULES: List[str] = []

    def __init__(self, env=None, config=Config()):
        self.config = config
        self.sub = Subcontracting(env)
        self.store: Optional[ConstraintStore] = None
        self._verdicts = {}
        self.repeated: FrozenSet[Path] = frozenset()

    # Driver

    def scopes(self, term) -> Iterator[Tuple[Path, Term]]:
        yield (), term

    def find(self, term: Term, store: Optional[ConstraintStore] = None) -> Optional[Rewrite]:
        self.store = store
        scopes = [(scope_path, scope, repeated_positions(scope)) for scope_path, scope in self.scopes(term)]
        for rule in self.RULES:
            matcher = getattr(self, "match_" + rule.replace("/", "_").replace("-", "_").lower())
            for scope_path, scope, repeated in scopes:
                self.repeated = repeated
                for path, node in positions(scope):
                    rewrite = matcher(node, path, scope)
                    if rewrite is not None:
                        rewrite.path = scope_path + rewrite.path
                        return rewrite
        return None

    def runs_once(self, path: Path) -> bool:
        """Whether the scope position at `path` is evaluated at most once per run."""
        return path not in self.repeated

    def beneath_alternative(self, var: BlameVar) -> bool:
        """
        Whether the oldest parent chain of `var` passes through an intersection
        or union. Without a store nothing is known and the answer is yes.
        """
        if self.store is None:
            return True
        seen = set()
        while isinstance(var, BlameVar) and var not in seen:
            seen.add(var)
            parent = next((c for c in self.store if var in constraint_sources(c)), None)
            if parent is None:
                return False
            if isinstance(parent, (CapC, CupC)):
                return True
            var = parent.target
        return False

    def step(self, store: ConstraintStore, term: Term) -> Optional[TransformStep]:
        rewrite = self.find(term, store)
        if rewrite is None:
            return None
        mark = len(store)
        after = replace_at(term, rewrite.path, rewrite.build(store))
        return TransformStep(rewrite.rule, rewrite.path, term, after, tuple(store.constraints[mark:]))

    def normalize(self, store: ConstraintStore, program: Program):
        """
        Rewrite until no rule applies. A `SourceProgram` is rewritten through its term.

        Returns
        -------
        (ConstraintStore, Term, list of TransformStep)

        Raises
        ------
        StepBudgetExceeded
            After `config.STEP_CAP` rule applications.
        """
        term = program_term(program)
        trace = []
        while True:
            if len(trace) >= self.config.STEP_CAP:
                raise StepBudgetExceeded(f"No normal form after {len(trace)} rewrite steps")
            s = self.step(store, term)
            if s is None:
                return store, term, trace
            trace.append(s)
            term = s.after

    def is_canonical(self, term: Term, store: Optional[ConstraintStore] = None) -> Optional[Rewrite]:
        """The first rewrite that still applies to `term`, or None when it is in normal form."""
        return self.find(term, store)

    # Verify

    def verdict(self, contract, value) -> Optional[bool]:
        """Decide a flat contract on a closed value, or None when that is not possible."""
        key = (contract, value)
        if key in self._verdicts:
            return self._verdicts[key]
        verdict = None
        if isinstance(contract, Named):
            verdict = bool(BUILTIN_PREDICATES[contract.name](value))
        elif not free_vars(contract.pred) and not free_vars(value):
            outcome = run(App(contract.pred, value), fuel=self.config.VERIFY_FUEL)
            if outcome.kind is OutcomeKind.VALUE:
                verdict = make_truth(outcome.term)
            else:
                from lcon.parser import print_contract

                warnings.warn(
                    f"Could not decide {print_contract(contract)} at compile time ({outcome.kind.value})",
                    category=UserWarning,
                )
        self._verdicts[key] = verdict
        return verdict


class BaselineTransformer(Rewriter):

    RULES = [
        "Simplify/Union",
        "Simplify/Intersection",
        "Verify",
        "Convert/True",
        "Push/Immediate",
        "Push/False",
        "Unfold/Assert",
        "Unfold/Union",
        "Unfold/Intersection",
        "Unfold/Op",
        "Unfold/D-Function",
        "Unfold/D-Intersection",
        "Unroll",
        "Push/If",
        "Lower",
    ]

    def match_simplify_union(self, node, path, scope):
        if isinstance(node, Assert) and isinstance(node.blame, Label) and isinstance(node.contract, Cup):
            c, d = node.contract.left, node.contract.right
            if not is_value(node.subject):
                return None
            if self.sub.ordinary_sub(c, d):
                keep = d
            elif self.sub.ordinary_sub(d, c):
                keep = c
            else:
                return None
            return Rewrite("Simplify/Union", path, lambda store: Assert(node.subject, node.blame, keep))

    def match_simplify_intersection(self, node, path, scope):
        if isinstance(node, Assert) and isinstance(node.blame, Label) and isinstance(node.contract, Cap):
            c, d = node.contract.left, node.contract.right
            if not is_value(node.subject):
                return None
            if self.sub.ordinary_sub(c, d):
                keep = c
            elif self.sub.ordinary_sub(d, c):
                keep = d
            else:
                return None
            return Rewrite("Simplify/Intersection", path, lambda store: Assert(node.subject, node.blame, keep))

    def match_verify(self, node, path, scope):
        if not (is_var_assert(node) and is_flat(node.contract)):
            return None
        value = strip_bottoms(node.subject)
        if not isinstance(value, (Const, Lam)):
            return None
        verdict = self.verdict(node.contract, value)
        if verdict is None:
            return None
        rule, contract = ("Verify/True", TOP) if verdict else ("Verify/False", BOT)
        return Rewrite(rule, path, lambda store: Assert(node.subject, node.blame, contract))

    def match_convert_true(self, node, path, scope):
        if is_var_assert(node) and isinstance(node.contract, Top):

            def build(store):
                store.append(CheckResult(node.blame, TRUE))
                return node.subject

            return Rewrite("Convert/True", path, build)

    def _push(self, node, path, pushed, rule):
        if is_var_assert(node) and pushed(node.contract):
            inner = node.subject
            if is_var_assert(inner) and is_delayed(inner.contract):
                return Rewrite(
                    rule,
                    path,
                    lambda store: Assert(
                        Assert(inner.subject, node.blame, node.contract), inner.blame, inner.contract
                    ),
                )

    def match_push_immediate(self, node, path, scope):
        return self._push(node, path, is_flat, "Push/Immediate")

    def match_push_false(self, node, path, scope):
        return self._push(node, path, lambda c: isinstance(c, Bot), "Push/False")

    def match_unfold_assert(self, node, path, scope):
        if isinstance(node, Assert) and isinstance(node.blame, Label):

            def build(store):
                var = store.fresh_var()
                store.append(Indirect(node.blame, var))
                return Assert(node.subject, var, node.contract)

            return Rewrite("Unfold/Assert", path, build)

    def _split(self, node, path, constraint, rule):
        def build(store):
            left, right = store.fresh_var(), store.fresh_var()
            store.append(constraint(node.blame, left, right))
            return Assert(Assert(node.subject, left, node.contract.left), right, node.contract.right)

        return Rewrite(rule, path, build)

    # a static union or intersection constraint would be shared by every evaluation

    def match_unfold_union(self, node, path, scope):
        if is_var_assert(node) and isinstance(node.contract, Cup) and self.runs_once(path):
            return self._split(node, path, CupC, "Unfold/Union")

    def match_unfold_intersection(self, node, path, scope):
        if is_var_assert(node) and isinstance(node.contract, Cap) and not is_delayed(node.contract):
            if not (self.runs_once(path) or only_immediate(node.contract)):
                return None
            return self._split(node, path, CapC, "Unfold/Intersection")

    def match_unfold_op(self, node, path, scope):
        if not isinstance(node, Op):
            return None
        for index, arg in enumerate(node.args):
            if is_var_assert(arg) and is_delayed(arg.contract):

                def build(store, index=index, arg=arg):
                    store.append(CheckResult(arg.blame, TRUE))
                    return Op(node.op, node.args[:index] + (arg.subject,) + node.args[index + 1 :])

                return Rewrite("Unfold/Op", path, build)

    def match_unfold_d_function(self, node, path, scope):
        if isinstance(node, App) and is_var_assert(node.fn) and isinstance(node.fn.contract, Fun):
            fn, contract = node.fn, node.fn.contract
            if not self.runs_once(path) and self.beneath_alternative(fn.blame):
                return None

            def build(store):
                dom, rng = store.fresh_var(), store.fresh_var()
                store.append(FunC(fn.blame, dom, rng))
                return Assert(App(fn.subject, Assert(node.arg, dom, contract.dom)), rng, contract.rng)

            return Rewrite("Unfold/D-Function", path, build)

    def match_unfold_d_intersection(self, node, path, scope):
        if (
            isinstance(node, App)
            and is_var_assert(node.fn)
            and isinstance(node.fn.contract, Cap)
            and is_delayed(node.fn.contract)
            and self.runs_once(path)
        ):
            fn = node.fn

            def build(store):
                left, right = store.fresh_var(), store.fresh_var()
                store.append(CapC(fn.blame, left, right))
                wrapped = Assert(Assert(fn.subject, left, fn.contract.left), right, fn.contract.right)
                return App(wrapped, node.arg)

            return Rewrite("Unfold/D-Intersection", path, build)

    def match_unroll(self, node, path, scope):
        if not (isinstance(node, App) and is_var_assert(node.arg) and is_delayed(node.arg.contract)):
            return None
        lam = strip_bottoms(node.fn)
        if not isinstance(lam, Lam):
            return None
        arg = node.arg

        def build(store):
            body = substitute(lam.body, lam.param, Assert(Var(lam.param), arg.blame, arg.contract))
            fn = _replace_core(node.fn, Lam(lam.param, body))
            return App(fn, arg.subject)

        return Rewrite("Unroll", path, build)

    def match_push_if(self, node, path, scope):
        if isinstance(node, If) and is_var_assert(node.then) and is_var_assert(node.orelse):
            then, orelse = node.then, node.orelse
            if then.blame == orelse.blame and then.contract == orelse.contract:
                return Rewrite(
                    "Push/If",
                    path,
                    lambda store: Assert(If(node.test, then.subject, orelse.subject), then.blame, then.contract),
                )

    def match_lower(self, node, path, scope):
        if isinstance(node, Lam) and is_var_assert(node.body):
            return self._lower(node, path)

    def _lower(self, node, path):
        body = node.body
        return Rewrite(
            "Lower",
            path,
            lambda store: Assert(Lam(node.param, body.subject), body.blame, Fun(TOP, body.contract)),
        )


def _replace_core(wrapped: Term, core: Term) -> Term:
    """Replace the term under a stack of `bot` assertions."""
    if is_var_assert(wrapped) and isinstance(wrapped.contract, Bot):
        return Assert(_replace_core(wrapped.subject, core), wrapped.blame, wrapped.contract)
    return core


def baseline_step(store: ConstraintStore, term: Term, env=None, config=Config()) -> Optional[TransformStep]:
    return BaselineTransformer(env, config).step(store, term)


def baseline_normalize(store: ConstraintStore, program: Program, env=None, config=Config()):
    return BaselineTransformer(env, config).normalize(store, program)


def is_canonical_baseline(term: Term, env=None, store: Optional[ConstraintStore] = None) -> Optional[Rewrite]:
    return BaselineTransformer(env).is_canonical(term, store)
