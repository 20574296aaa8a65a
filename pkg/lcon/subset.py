"""
Subset contract simplification.

Keeps the outcome class of a program (a value stays the same value, blame
stays blame) but lets the blamed label and polarity change. This allows:

- dropping an assertion implied by a stronger one on the same subject,
- reducing code that is certain to fail to a blame term,
- forking on unions and on intersections of function contracts, so that
  each alternative is simplified on its own (the branches are joined
  afterwards, see `lcon.join`),
- lifting immediate checks on a function's parameter to the function
  boundary, and merging domain and range halves into one function contract.

The baseline rules are included, except that forks replace the unfolding of
unions and of intersections of function contracts.
"""

from typing import Iterator, Optional, Tuple

from lcon.ast import (
    BOT,
    TOP,
    App,
    Assert,
    Blame,
    Bot,
    Cap,
    CapC,
    Cup,
    CupC,
    Fork,
    Fun,
    If,
    Indirect,
    Inv,
    Lam,
    Op,
    Program,
    Term,
    Top,
    Var,
    is_delayed,
    replace_at,
)
from lcon.baseline import (
    BaselineTransformer,
    Path,
    Rewrite,
    assertion_chain,
    is_flat,
    is_var_assert,
)
from lcon.config import Config
from lcon.constraints import ConstraintStore, OrphanVariableError, blame_of


class BranchLimitExceeded(RuntimeError):
    pass


def observations(t: Term, path: Path = ()) -> Iterator[Tuple[Path, Term]]:
    """The fork-free leaves of a fork tree, left to right."""
    if isinstance(t, Fork):
        yield from observations(t.left, path + (0,))
        yield from observations(t.right, path + (1,))
    else:
        yield path, t


def body_positions(t: Term, path: Path = ()) -> Iterator[Tuple[Path, Term]]:
    """
    Positions of `t` that are evaluated whenever `t` is: not under a lambda,
    not in a branch of a conditional. Pre-order, left to right.
    """
    yield path, t
    if isinstance(t, App):
        yield from body_positions(t.fn, path + (0,))
        yield from body_positions(t.arg, path + (1,))
    elif isinstance(t, Assert):
        yield from body_positions(t.subject, path + (0,))
    elif isinstance(t, If):
        yield from body_positions(t.test, path + (0,))
    elif isinstance(t, Op):
        for index, arg in enumerate(t.args):
            yield from body_positions(arg, path + (index,))


def _find_bottom(t: Term) -> Optional[Tuple[Path, Assert]]:
    for path, node in body_positions(t):
        if is_var_assert(node) and isinstance(node.contract, Bot) and not isinstance(node.subject, Blame):
            return path, node
    return None


class SubsetTransformer(BaselineTransformer):

    RULES = [
        "Blame/Global",
        "Blame",
        "Blame/If/True",
        "Blame/If/False",
        "Subset",
        "Fork/Union",
        "Fork/Intersection",
        "Merge",
        "Lift",
        "Simplify/Union",
        "Simplify/Intersection",
        "Verify",
        "Convert/True",
        "Push/Immediate",
        "Push/False",
        "Unfold/Assert",
        "Unfold/Intersection",
        "Unfold/Op",
        "Unfold/D-Function",
        "Unroll",
        "Push/If",
        "Lower",
    ]

    def scopes(self, term):
        return observations(term)

    def step(self, store, term):
        s = super().step(store, term)
        if s is not None and s.rule.startswith("Fork/"):
            live = sum(1 for _ in observations(s.after))
            if live > self.config.MAX_BRANCHES:
                raise BranchLimitExceeded(f"{live} live branches exceed the limit of {self.config.MAX_BRANCHES}")
        return s

    # Blame

    def match_blame_global(self, node, path, scope):
        if path != ():
            return None
        blamed = self._blamed(node)
        if blamed is not None:
            return Rewrite("Blame/Global", path, blamed)

    def _blamed(self, t):
        """The replacement for a region that is certain to fail, keeping the failed assertion."""
        found = _find_bottom(t)
        if found is None:
            return None
        bottom = found[1]
        return lambda store: Assert(blame_of(store, bottom.blame), bottom.blame, BOT)

    def match_blame(self, node, path, scope):
        if isinstance(node, Lam):
            blamed = self._blamed(node.body)
            if blamed is not None:
                return Rewrite("Blame", path, lambda store: Lam(node.param, blamed(store)))

    def match_blame_if_true(self, node, path, scope):
        if isinstance(node, If):
            blamed = self._blamed(node.then)
            if blamed is not None:
                return Rewrite("Blame/If/True", path, lambda store: If(node.test, blamed(store), node.orelse))

    def match_blame_if_false(self, node, path, scope):
        if isinstance(node, If):
            blamed = self._blamed(node.orelse)
            if blamed is not None:
                return Rewrite("Blame/If/False", path, lambda store: If(node.test, node.then, blamed(store)))

    # Subset

    def match_subset(self, node, path, scope):
        if not is_var_assert(node):
            return None
        outer = node.contract
        for inner_path, inner in assertion_chain(node.subject, (0,)):
            if not is_var_assert(inner):
                continue
            below = self.sub.naive_sub(inner.contract, outer)
            above = self.sub.naive_sub(outer, inner.contract)
            if below and not (above and inner.contract != outer):
                # the inner assertion implies the outer one
                return Rewrite("Subset/Left", path, lambda store: node.subject)
            if above:

                def build(store, inner_path=inner_path, inner=inner):
                    kept = Assert(inner.subject, node.blame, outer)
                    return replace_at(node, inner_path, kept).subject

                return Rewrite("Subset/Right", path, build)
        return None

    # Fork

    def match_fork_union(self, node, path, scope):
        if is_var_assert(node) and isinstance(node.contract, Cup) and self.runs_once(path):

            def build(store):
                left, right = store.fresh_var(), store.fresh_var()
                store.append(CupC(node.blame, left, right))
                return Fork(
                    replace_at(scope, path, Assert(node.subject, left, node.contract.left)),
                    replace_at(scope, path, Assert(node.subject, right, node.contract.right)),
                )

            return Rewrite("Fork/Union", (), build)

    def match_fork_intersection(self, node, path, scope):
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
                return Fork(
                    replace_at(scope, path, App(Assert(fn.subject, left, fn.contract.left), node.arg)),
                    replace_at(scope, path, App(Assert(fn.subject, right, fn.contract.right), node.arg)),
                )

            return Rewrite("Fork/Intersection", (), build)

    # Merge and Lift

    def match_merge(self, node, path, scope):
        if self.store is None:
            return None
        if not is_var_assert(node):
            return None
        if _is_range_half(node.contract):
            other = _is_domain_half
        elif _is_domain_half(node.contract):
            other = _is_range_half
        else:
            return None
        for inner_path, inner in assertion_chain(node.subject, (0,)):
            if not (is_var_assert(inner) and other(inner.contract)):
                continue
            try:
                same = blame_of(self.store, inner.blame) == blame_of(self.store, node.blame)
            except OrphanVariableError:
                same = False
            if not same:
                continue

            def build(store, inner_path=inner_path, inner=inner):
                merged = store.fresh_var()
                store.append(Indirect(node.blame, merged))
                store.append(Indirect(inner.blame, merged))
                if _is_domain_half(inner.contract):
                    contract = Fun(inner.contract.dom, node.contract.rng)
                else:
                    contract = Fun(node.contract.dom, inner.contract.rng)
                return replace_at(node, inner_path, Assert(inner.subject, merged, contract)).subject

            return Rewrite("Merge", path, build)
        return None

    def match_lift(self, node, path, scope):
        if not isinstance(node, Lam):
            return None
        for inner_path, inner in body_positions(node.body):
            if (
                is_var_assert(inner)
                and is_flat(inner.contract)
                and inner.subject == Var(node.param)
            ):

                def build(store, inner_path=inner_path, inner=inner):
                    lifted = store.fresh_var()
                    store.append(Inv(inner.blame, lifted))
                    body = replace_at(node.body, inner_path, Var(node.param))
                    return Assert(Lam(node.param, body), lifted, Fun(inner.contract, TOP))

                return Rewrite("Lift", path, build)
        return None

    # Push/If and Lower, generalized

    def match_push_if(self, node, path, scope):
        if not isinstance(node, If):
            return None
        for then_path, then in assertion_chain(node.then):
            if not is_var_assert(then):
                continue
            for else_path, orelse in assertion_chain(node.orelse):
                if orelse.blame == then.blame and orelse.contract == then.contract:

                    def build(store, then_path=then_path, then=then, else_path=else_path, orelse=orelse):
                        branch_then = replace_at(node.then, then_path, then.subject)
                        branch_else = replace_at(node.orelse, else_path, orelse.subject)
                        return Assert(If(node.test, branch_then, branch_else), then.blame, then.contract)

                    return Rewrite("Push/If", path, build)
        return None

    def match_lower(self, node, path, scope):
        if isinstance(node, Lam) and is_var_assert(node.body) and node.body.subject != Var(node.param):
            return self._lower(node, path)


def _is_range_half(c) -> bool:
    return isinstance(c, Fun) and isinstance(c.dom, Top) and not isinstance(c.rng, Top)


def _is_domain_half(c) -> bool:
    return isinstance(c, Fun) and isinstance(c.rng, Top) and not isinstance(c.dom, Top)


def subset_step(store: ConstraintStore, term: Term, env=None, config=Config()):
    return SubsetTransformer(env, config).step(store, term)


def subset_normalize(store: ConstraintStore, program: Program, env=None, config=Config()):
    return SubsetTransformer(env, config).normalize(store, program)


def is_canonical_subset(term: Term, env=None, store: Optional[ConstraintStore] = None) -> Optional[Rewrite]:
    return SubsetTransformer(env).is_canonical(term, store)
