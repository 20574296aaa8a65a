"""
Subcontracting.

Two judgments, each a recursive check over the structure of the contracts:

context_sub(C, D)   every context that satisfies C also satisfies D
subject_sub(C, D)   every value that satisfies C also satisfies D

Flat contracts are related through an implication environment Γ of facts
`P <= Q` between predicates, read from a small text file. Γ is taken as
given: no transitive closure is computed. `pred_implies` answers one such
question directly.
"""

import re
from functools import lru_cache
from typing import FrozenSet, Iterable, Tuple, Union

from lcon.ast import (
    Bot,
    Cap,
    Contract,
    Cup,
    Dep,
    Flat,
    Fun,
    Lam,
    Named,
    NameSupply,
    Top,
    Var,
    alpha_equiv,
    is_immediate,
    names_of,
    substitute,
    substitute_contract,
)
from lcon.config import Config


class GammaFileError(ValueError):
    pass


def predicate_key(c: Contract) -> str:
    """Key of a flat contract in Γ: the name, or the printed predicate up to renaming."""
    from lcon.parser import print_term

    if isinstance(c, Named):
        return c.name
    if isinstance(c, Flat):
        return print_term(_canonical_binders(c.pred, 0))
    raise ValueError(f"{c!r} is not a flat contract")


def _canonical_binders(t, depth):
    if isinstance(t, Lam):
        name = f"v{depth}"
        return Lam(name, _canonical_binders(substitute(t.body, t.param, Var(name)), depth + 1))
    return t


class ImplicationEnv:
    def __init__(self, facts: Iterable[Tuple[str, str]] = ()):
        self.facts: FrozenSet[Tuple[str, str]] = frozenset(facts)

    def implies(self, c: Contract, d: Contract) -> bool:
        return pred_implies(self, c, d)

    def __eq__(self, other):
        return isinstance(other, ImplicationEnv) and self.facts == other.facts

    def __hash__(self):
        return hash(self.facts)


def _key(p: Union[Contract, str]) -> str:
    if not isinstance(p, str):
        return predicate_key(p)
    if p.startswith("("):
        from lcon.parser import parse_term

        return predicate_key(Flat(parse_term(p)))
    return p


def pred_implies(env: ImplicationEnv, p: Union[Contract, str], q: Union[Contract, str]) -> bool:
    """
    Whether flat predicate `p` implies `q` under `env`: every predicate
    implies itself (up to renaming), anything else needs a fact.

    A side is a flat contract, a predicate name, or the text of a predicate
    term such as `"(lam x (> x 0))"`.
    """
    env = env if env is not None else default_env()
    p, q = _key(p), _key(q)
    return p == q or (p, q) in env.facts


_FACT = re.compile(r'^\s*("(?:[^"\\]|\\.)*"|\S+)\s*<=\s*("(?:[^"\\]|\\.)*"|\S+)\s*$')


def _side(text, lineno):
    from lcon.parser import LconSyntaxError, parse_term

    if text.startswith('"'):
        try:
            return predicate_key(Flat(parse_term(text[1:-1])))
        except LconSyntaxError as e:
            raise GammaFileError(f"Line {lineno}: bad predicate {text}: {e}") from None
    return text


def parse_gamma(text: str) -> ImplicationEnv:
    """
    Read implication facts, one `LHS <= RHS` per line. A side is a predicate
    name (`Positive?`) or a quoted predicate term (`"(lam x (> x 0))"`).
    Blank lines and lines starting with ';' are ignored.
    """
    facts = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith(";"):
            continue
        m = _FACT.match(line)
        if not m:
            raise GammaFileError(f"Line {lineno}: expected 'LHS <= RHS', got {line.strip()!r}")
        facts.append((_side(m.group(1), lineno), _side(m.group(2), lineno)))
    return ImplicationEnv(facts)


def load_gamma(filepath) -> ImplicationEnv:
    with open(filepath, "r", encoding="utf-8") as file:
        return parse_gamma(file.read())


def default_env(config=Config()) -> ImplicationEnv:
    return load_gamma(config.GAMMA_FILE)


class Subcontracting:
    """Both judgments under one Γ, memoized on contract pairs."""

    def __init__(self, env: ImplicationEnv = None):
        self.env = env if env is not None else default_env()
        self.context_sub = lru_cache(maxsize=None)(self._context_sub)
        self.subject_sub = lru_cache(maxsize=None)(self._subject_sub)

    def _context_sub(self, c: Contract, d: Contract) -> bool:
        if alpha_equiv(c, d):
            return True
        if is_immediate(c) and is_immediate(d):
            return True
        if isinstance(c, Fun) and isinstance(d, Fun):
            if self.subject_sub(c.dom, d.dom) and self.context_sub(c.rng, d.rng):
                return True
        if isinstance(c, Dep) and isinstance(d, Dep):
            if self.context_sub(*_align(c, d)):
                return True
        if isinstance(c, Cap) and self.context_sub(c.left, d) and self.context_sub(c.right, d):
            return True
        if isinstance(d, Cap) and (self.context_sub(c, d.left) or self.context_sub(c, d.right)):
            return True
        if isinstance(c, Cup) and (self.context_sub(c.left, d) or self.context_sub(c.right, d)):
            return True
        if isinstance(d, Cup) and self.context_sub(c, d.left) and self.context_sub(c, d.right):
            return True
        return False

    def _subject_sub(self, c: Contract, d: Contract) -> bool:
        if alpha_equiv(c, d) or isinstance(d, Top) or isinstance(c, Bot):
            return True
        if isinstance(c, (Flat, Named)) and isinstance(d, (Flat, Named)):
            return self.env.implies(c, d)
        if isinstance(c, Fun) and isinstance(d, Fun):
            if self.context_sub(c.dom, d.dom) and self.subject_sub(c.rng, d.rng):
                return True
        if isinstance(c, Dep) and isinstance(d, Dep):
            if self.subject_sub(*_align(c, d)):
                return True
        if isinstance(c, Cap) and (self.subject_sub(c.left, d) or self.subject_sub(c.right, d)):
            return True
        if isinstance(d, Cap) and self.subject_sub(c, d.left) and self.subject_sub(c, d.right):
            return True
        if isinstance(c, Cup) and self.subject_sub(c.left, d) and self.subject_sub(c.right, d):
            return True
        if isinstance(d, Cup) and (self.subject_sub(c, d.left) or self.subject_sub(c, d.right)):
            return True
        return False

    def naive_sub(self, c: Contract, d: Contract) -> bool:
        return self.context_sub(c, d) and self.subject_sub(c, d)

    def ordinary_sub(self, c: Contract, d: Contract) -> bool:
        return self.context_sub(d, c) and self.subject_sub(c, d)


def _align(c: Dep, d: Dep):
    shared = Var(NameSupply(names_of(c) | names_of(d)).fresh("x"))
    return substitute_contract(c.body, c.param, shared), substitute_contract(d.body, d.param, shared)


_default = None


def _session(env):
    global _default
    if env is not None:
        return Subcontracting(env)
    if _default is None:
        _default = Subcontracting()
    return _default


def context_sub(c: Contract, d: Contract, env: ImplicationEnv = None) -> bool:
    return _session(env).context_sub(c, d)


def subject_sub(c: Contract, d: Contract, env: ImplicationEnv = None) -> bool:
    return _session(env).subject_sub(c, d)


def naive_sub(c: Contract, d: Contract, env: ImplicationEnv = None) -> bool:
    return _session(env).naive_sub(c, d)


def ordinary_sub(c: Contract, d: Contract, env: ImplicationEnv = None) -> bool:
    return _session(env).ordinary_sub(c, d)
