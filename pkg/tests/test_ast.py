import pytest
from setup import *

from lcon.ast import (
    BOT,
    TOP,
    App,
    Assert,
    BlameVar,
    Const,
    Fun,
    If,
    Label,
    Lam,
    Named,
    NameSupply,
    Op,
    Polarity,
    Var,
    alpha_equiv,
    erase_contracts,
    free_vars,
    is_delayed,
    is_value,
    names_of,
    positions,
    replace_at,
    subterm,
    substitute,
    unwrap,
)
from lcon.parser import parse_term

IDENTITY = Lam("x", Var("x"))
NUM = Named("Number?")


@pytest.mark.parametrize(
    "value, kind",
    [(True, "bool"), (1, "int"), ("1", "str")],
)
def test_const_kind(value, kind):
    assert Const(value).kind == kind


def test_const_bool_is_not_int():
    assert Const(True) != Const(1)
    assert Const(0) != Const(False)


def test_const_rejects_other_values():
    with pytest.raises(ValueError):
        Const(1.5)


def test_polarity_invert():
    assert Polarity.POSITIVE.invert() is Polarity.NEGATIVE
    assert Polarity.NEGATIVE.invert() is Polarity.POSITIVE


@pytest.mark.parametrize(
    "term, expected",
    [
        (Const(1), True),
        (IDENTITY, True),
        (Var("x"), False),
        (App(IDENTITY, Const(1)), False),
        (Assert(IDENTITY, BlameVar(1), Fun(NUM, NUM)), True),
        (Assert(IDENTITY, Label("l"), Fun(NUM, NUM)), False),
        (Assert(Const(1), BlameVar(1), NUM), False),
        (Assert(Var("f"), BlameVar(1), Fun(NUM, NUM)), False),
    ],
)
def test_is_value(term, expected):
    assert is_value(term) == expected


def test_is_delayed():
    assert is_delayed(Fun(TOP, BOT))
    assert not is_delayed(NUM)
    assert is_delayed(parse_term("(assert 1 @1 (cap (-> top top) (-> bot bot)))").contract)
    assert not is_delayed(parse_term("(assert 1 @1 (cap Number? (-> top top)))").contract)


def test_unwrap():
    wrapped = Assert(Assert(IDENTITY, BlameVar(1), Fun(NUM, NUM)), BlameVar(2), Fun(TOP, NUM))
    assert unwrap(wrapped) == IDENTITY
    assert unwrap(Const(3)) == Const(3)


def test_substitute_simple():
    t = parse_term("(+ x (if y x 1))")
    assert substitute(t, "x", Const(2)) == parse_term("(+ 2 (if y 2 1))")


def test_substitute_stops_at_shadowing_binder():
    t = parse_term("(lam x x)")
    assert substitute(t, "x", Const(2)) == t


def test_substitute_avoids_capture():
    t = Lam("y", Var("x"))
    result = substitute(t, "x", Var("y"))
    assert result.param != "y"
    assert result.body == Var("y")
    assert free_vars(result) == {"y"}


def test_substitute_renames_the_same_way_every_time():
    t = parse_term("(lam y (+ x y))")
    first = substitute(t, "x", Var("y"))
    assert first == parse_term("(lam y_1 (+ y y_1))")
    assert substitute(t, "x", Var("y")) == first


def test_renamed_binder_avoids_names_in_the_body():
    t = parse_term("(lam y (lam y_1 (+ x y)))")
    assert substitute(t, "x", Var("y")) == parse_term("(lam y_2 (lam y_1 (+ y y_2)))")


def test_name_supply():
    names = NameSupply({"x_1", "x_3"})
    assert [names.fresh("x"), names.fresh("x_7"), names.fresh("x")] == ["x_2", "x_4", "x_5"]


def test_names_of_includes_binders_and_contracts():
    t = parse_term("(assert (lam y z) @1 (dep (lam x (flat (lam v (> v w))))))")
    assert names_of(t) == {"y", "z", "x", "v", "w"}


def test_substitute_into_contracts():
    t = parse_term("(assert z @1 (flat (lam v (> v x))))")
    assert substitute(t, "x", Const(0)) == parse_term("(assert z @1 (flat (lam v (> v 0))))")


def test_free_vars():
    assert free_vars(parse_term("(lam x (x y))")) == {"y"}
    assert free_vars(parse_term("(assert f @1 (dep (lam a (flat (lam v (> v b))))))")) == {"f", "b"}


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ("(lam x x)", "(lam y y)", True),
        ("(lam x y)", "(lam y y)", False),
        ("(lam x (lam y (x y)))", "(lam a (lam b (a b)))", True),
        ("(lam x (lam y (x y)))", "(lam a (lam b (b a)))", False),
        ("(+ 1 2)", "(+ 1 2)", True),
    ],
)
def test_alpha_equiv(a, b, expected):
    assert alpha_equiv(parse_term(a), parse_term(b)) == expected


def test_erase_contracts():
    t = parse_term("((assert (lam x (assert x @2 Number?)) @1 (-> Number? top)) 1)")
    assert erase_contracts(t) == parse_term("((lam x x) 1)")


def test_positions_preorder():
    t = parse_term("((lam x x) (if a b c))")
    paths = [p for p, _ in positions(t)]
    assert paths == [(), (0,), (0, 0), (1,), (1, 0), (1, 1), (1, 2)]


def test_subterm_and_replace_at():
    t = parse_term("(f (+ a b))")
    assert subterm(t, (1, 1)) == Var("b")
    assert replace_at(t, (1, 1), Const(1)) == App(Var("f"), Op("+", (Var("a"), Const(1))))
    assert replace_at(t, (), Const(0)) == Const(0)


def test_if_children_order():
    t = If(Var("a"), Var("b"), Var("c"))
    assert [subterm(t, (i,)) for i in range(3)] == [Var("a"), Var("b"), Var("c")]
