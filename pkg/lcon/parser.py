"""
Reading and printing the S-expression syntax.

    (lam x M)  (M N)  (+ M N)  (string? M)  (if L M N)  (assert M #label C)
    (assert M @3 C)  (blame #label +)  (fork M N)
    Number?  (flat M)  (-> C D)  (dep (lam x C))  (cap C D)  (cup C D)  top  bot

`parse` reads source programs: labels only, no blame terms, forks, `top`,
`bot` or blame variables, and every label used once. The result is a
`SourceProgram` that also records where the text came from and its labels.
`parse_term` also accepts the intermediate forms produced by the evaluator
and the transformations. `print_term` is the inverse of both.
"""

import json
import re
from dataclasses import dataclass
from typing import Dict, Optional, Union

import pyparsing as pp

from lcon.ast import (
    BINARY_OPS,
    BOT,
    TOP,
    UNARY_OPS,
    App,
    Assert,
    Blame,
    BlameVar,
    Bot,
    Cap,
    Const,
    Contract,
    Cup,
    Dep,
    Eval,
    Flat,
    Fork,
    Fun,
    If,
    Label,
    Lam,
    Named,
    Op,
    Polarity,
    Program,
    SourceProgram,
    Term,
    Top,
    Var,
    is_delayed,
    is_immediate,
    program_term,
)

NAMED_PREDICATES = (
    "Number?",
    "String?",
    "Boolean?",
    "Positive?",
    "Natural?",
    "Negative?",
)

KEYWORDS = ("lam", "if", "assert", "blame", "fork", "flat", "dep", "cap", "cup", "->", "eval")

_INTEGER = re.compile(r"-?\d+$")
_BLAME_VAR = re.compile(r"@(\d+)$")
_LABEL = re.compile(r"#([^\s()\";#@]+)$")


class LconSyntaxError(ValueError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = f" (line {line}, col {col})" if line is not None else ""
        super().__init__(f"{message}{where}")


class DuplicateLabelError(LconSyntaxError):
    pass


class IntermediateFormError(LconSyntaxError):
    pass


@dataclass(frozen=True)
class _Atom:
    text: str
    loc: int
    quoted: bool = False


@dataclass(frozen=True)
class _SList:
    items: tuple
    loc: int


class SExpressionReader:
    def __init__(self):
        self.lpar = pp.Suppress(pp.Literal("("))
        self.rpar = pp.Suppress(pp.Literal(")"))
        self.comment = pp.Regex(r";[^\n]*")

        word_chars = "".join(c for c in pp.printables if c not in '()";')
        self.word = pp.Word(word_chars)
        self.word.set_parse_action(lambda s, loc, toks: _Atom(toks[0], loc))
        self.string = pp.QuotedString('"', esc_char="\\")
        self.string.set_parse_action(lambda s, loc, toks: _Atom(toks[0], loc, quoted=True))

        self.sexp = pp.Forward()
        self.slist = self.lpar + pp.ZeroOrMore(self.sexp) + self.rpar
        self.slist.set_parse_action(lambda s, loc, toks: _SList(tuple(toks), loc))
        self.sexp <<= self.string | self.word | self.slist
        self.sexp.ignore(self.comment)

    def read(self, text):
        try:
            return self.sexp.parse_string(text, parse_all=True)[0]
        except pp.ParseException as e:
            raise LconSyntaxError(f"Malformed S-expression: {e.msg}", e.lineno, e.col) from None


_reader = SExpressionReader()


class _Converter:
    """Turns S-expressions into terms, reporting errors with source positions."""

    def __init__(self, text, source=True):
        self.text = text
        self.source = source
        self.labels = set()

    def error(self, node, message, cls=LconSyntaxError):
        return cls(message, pp.lineno(node.loc, self.text), pp.col(node.loc, self.text))

    def intermediate(self, node, what):
        if self.source:
            raise self.error(node, f"{what} is not allowed in a source program", IntermediateFormError)

    def identifier(self, node):
        if (
            not isinstance(node, _Atom)
            or node.quoted
            or node.text in KEYWORDS
            or node.text in ("true", "false", "top", "bot")
            or node.text in BINARY_OPS
            or node.text in UNARY_OPS
            or _INTEGER.match(node.text)
            or node.text[0] in "#@"
        ):
            raise self.error(node, f"Expected an identifier")
        return node.text

    def blame_id(self, node):
        if isinstance(node, _Atom) and not node.quoted:
            m = _LABEL.match(node.text)
            if m:
                return Label(m.group(1))
            m = _BLAME_VAR.match(node.text)
            if m:
                self.intermediate(node, "A blame variable")
                return BlameVar(int(m.group(1)))
        raise self.error(node, "Expected a label (#name) or a blame variable (@n)")

    def term(self, node) -> Term:
        if isinstance(node, _Atom):
            return self.atom(node)
        items = node.items
        if not items:
            raise self.error(node, "Empty application")
        head = items[0]
        keyword = head.text if isinstance(head, _Atom) and not head.quoted else None

        if keyword == "lam":
            self.arity(node, 3, "(lam x M)")
            return Lam(self.identifier(items[1]), self.term(items[2]))
        if keyword == "if":
            self.arity(node, 4, "(if L M N)")
            return If(self.term(items[1]), self.term(items[2]), self.term(items[3]))
        if keyword == "assert":
            self.arity(node, 4, "(assert M b C)")
            blame = self.blame_id(items[2])
            if isinstance(blame, Label):
                if self.source and blame in self.labels:
                    raise self.error(items[2], f"Label {blame} is used twice", DuplicateLabelError)
                self.labels.add(blame)
            c = items[3]
            if isinstance(c, _SList) and c.items and getattr(c.items[0], "text", None) == "eval":
                self.intermediate(c, "A predicate evaluation")
                self.arity(c, 2, "(eval M)")
                if not isinstance(blame, BlameVar):
                    raise self.error(c, "A predicate evaluation needs a blame variable")
                return Eval(self.term(items[1]), blame, self.term(c.items[1]))
            contract = self.contract(c)
            if self.source:
                contract = normalize_intersections(contract)
            return Assert(self.term(items[1]), blame, contract)
        if keyword == "blame":
            self.intermediate(node, "A blame term")
            self.arity(node, 3, "(blame #label +|-)")
            label = self.blame_id(items[1])
            sign = items[2]
            if not isinstance(label, Label) or not isinstance(sign, _Atom) or sign.text not in ("+", "-"):
                raise self.error(node, "Expected (blame #label +|-)")
            return Blame(label, Polarity(sign.text))
        if keyword == "fork":
            self.intermediate(node, "A fork")
            self.arity(node, 3, "(fork M N)")
            return Fork(self.term(items[1]), self.term(items[2]))
        if keyword in BINARY_OPS:
            self.arity(node, 3, f"({keyword} M N)")
            return Op(keyword, (self.term(items[1]), self.term(items[2])))
        if keyword in UNARY_OPS:
            self.arity(node, 2, f"({keyword} M)")
            return Op(keyword, (self.term(items[1]),))
        if keyword in KEYWORDS:
            raise self.error(node, f"Unexpected '{keyword}'")
        self.arity(node, 2, "(M N)")
        return App(self.term(items[0]), self.term(items[1]))

    def atom(self, node) -> Term:
        if node.quoted:
            return Const(node.text)
        if _INTEGER.match(node.text):
            return Const(int(node.text))
        if node.text == "true":
            return Const(True)
        if node.text == "false":
            return Const(False)
        return Var(self.identifier(node))

    def contract(self, node) -> Contract:
        if isinstance(node, _Atom):
            if node.text in NAMED_PREDICATES and not node.quoted:
                return Named(node.text)
            if node.text in ("top", "bot") and not node.quoted:
                self.intermediate(node, f"'{node.text}'")
                return TOP if node.text == "top" else BOT
            raise self.error(node, f"Unknown contract '{node.text}'")
        items = node.items
        keyword = items[0].text if items and isinstance(items[0], _Atom) else None
        if keyword == "flat":
            self.arity(node, 2, "(flat M)")
            return Flat(self.term(items[1]))
        if keyword == "->":
            self.arity(node, 3, "(-> C D)")
            return Fun(self.contract(items[1]), self.contract(items[2]))
        if keyword == "dep":
            self.arity(node, 2, "(dep (lam x C))")
            lam = items[1]
            if not (
                isinstance(lam, _SList)
                and len(lam.items) == 3
                and getattr(lam.items[0], "text", None) == "lam"
            ):
                raise self.error(node, "Expected (dep (lam x C))")
            return Dep(self.identifier(lam.items[1]), self.contract(lam.items[2]))
        if keyword in ("cap", "cup"):
            self.arity(node, 3, f"({keyword} C D)")
            cls = Cap if keyword == "cap" else Cup
            return cls(self.contract(items[1]), self.contract(items[2]))
        raise self.error(node, "Unknown contract form")

    def arity(self, node, n, form):
        if len(node.items) != n:
            raise self.error(node, f"Expected {form}")


def normalize_intersections(c: Contract) -> Contract:
    """
    Rewrite intersections so that the evaluator finds them in one of its two
    shapes: `(cap I C)` with an immediate left operand, or an intersection of
    delayed contracts. Unions under an intersection are distributed outward.
    """
    if isinstance(c, Fun):
        return Fun(normalize_intersections(c.dom), normalize_intersections(c.rng))
    if isinstance(c, Dep):
        return Dep(c.param, normalize_intersections(c.body))
    if isinstance(c, Cup):
        return Cup(normalize_intersections(c.left), normalize_intersections(c.right))
    if not isinstance(c, Cap):
        return c

    left, right = normalize_intersections(c.left), normalize_intersections(c.right)
    if isinstance(left, Cup):
        return Cup(
            normalize_intersections(Cap(left.left, right)),
            normalize_intersections(Cap(left.right, right)),
        )
    if isinstance(right, Cup):
        return Cup(
            normalize_intersections(Cap(left, right.left)),
            normalize_intersections(Cap(left, right.right)),
        )
    if is_immediate(left):
        return Cap(left, right)
    if is_immediate(right):
        return Cap(right, left)
    if isinstance(left, Cap) and is_immediate(left.left):
        return Cap(left.left, normalize_intersections(Cap(left.right, right)))
    if isinstance(right, Cap) and is_immediate(right.left):
        return Cap(right.left, normalize_intersections(Cap(left, right.right)))
    # both delayed
    assert is_delayed(left) and is_delayed(right)
    return Cap(left, right)


def parse(text: str, origin: str = "<string>") -> SourceProgram:
    """Parse a source program."""
    converter = _Converter(text, source=True)
    term = converter.term(_reader.read(text))
    return SourceProgram(term, origin, frozenset(converter.labels))


def parse_term(text: str) -> Term:
    """Parse a term that may contain intermediate forms."""
    return _Converter(text, source=False).term(_reader.read(text))


def parse_contract(text: str, source=False) -> Contract:
    converter = _Converter(text, source=source)
    contract = converter.contract(_reader.read(text))
    return normalize_intersections(contract) if source else contract


def parse_lcon_file(filepath, source=True) -> Union[SourceProgram, Term]:
    with open(filepath, "r", encoding="utf-8") as file:
        text = file.read()
    return parse(text, origin=str(filepath)) if source else parse_term(text)


class Printer:
    """
    Prints terms in the canonical one-line form.

    With `renumber=True`, blame variables are renumbered in order of first
    appearance, starting at 1, so that printed terms compare modulo numbering.
    """

    def __init__(self, renumber=False, mapping: Optional[Dict[BlameVar, BlameVar]] = None):
        self.renumber = renumber
        self.mapping = {} if mapping is None else mapping

    def blame(self, b):
        if isinstance(b, BlameVar) and self.renumber:
            if b not in self.mapping:
                self.mapping[b] = BlameVar(len(self.mapping) + 1)
            b = self.mapping[b]
        return str(b)

    def term(self, t: Term) -> str:
        if isinstance(t, Const):
            if t.kind == "bool":
                return "true" if t.value else "false"
            if t.kind == "str":
                return json.dumps(t.value, ensure_ascii=False)
            return str(t.value)
        if isinstance(t, Var):
            return t.name
        if isinstance(t, Lam):
            return f"(lam {t.param} {self.term(t.body)})"
        if isinstance(t, App):
            return f"({self.term(t.fn)} {self.term(t.arg)})"
        if isinstance(t, Op):
            return "(" + " ".join([t.op] + [self.term(a) for a in t.args]) + ")"
        if isinstance(t, If):
            return f"(if {self.term(t.test)} {self.term(t.then)} {self.term(t.orelse)})"
        if isinstance(t, Assert):
            subject = self.term(t.subject)
            return f"(assert {subject} {self.blame(t.blame)} {self.contract(t.contract)})"
        if isinstance(t, Eval):
            value = self.term(t.value)
            return f"(assert {value} {self.blame(t.var)} (eval {self.term(t.pred)}))"
        if isinstance(t, Blame):
            return f"(blame {t.label} {t.polarity.value})"
        if isinstance(t, Fork):
            return f"(fork {self.term(t.left)} {self.term(t.right)})"
        raise ValueError(f"Cannot print {t!r}")

    def contract(self, c: Contract) -> str:
        if isinstance(c, Named):
            return c.name
        if isinstance(c, Flat):
            return f"(flat {self.term(c.pred)})"
        if isinstance(c, Fun):
            return f"(-> {self.contract(c.dom)} {self.contract(c.rng)})"
        if isinstance(c, Dep):
            return f"(dep (lam {c.param} {self.contract(c.body)}))"
        if isinstance(c, Cap):
            return f"(cap {self.contract(c.left)} {self.contract(c.right)})"
        if isinstance(c, Cup):
            return f"(cup {self.contract(c.left)} {self.contract(c.right)})"
        if isinstance(c, Top):
            return "top"
        if isinstance(c, Bot):
            return "bot"
        raise ValueError(f"Cannot print {c!r}")


def print_term(t: Program, renumber=False) -> str:
    return Printer(renumber=renumber).term(program_term(t))


def print_contract(c: Contract) -> str:
    return Printer().contract(c)
