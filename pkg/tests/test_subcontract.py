import os
import tempfile

import pytest
from setup import *

from lcon.ast import BOT, TOP, Cap, Cup, Dep, Flat, Fun, Named
from lcon.parser import parse_contract, parse_term
from lcon.subcontract import (
    GammaFileError,
    ImplicationEnv,
    context_sub,
    load_gamma,
    naive_sub,
    ordinary_sub,
    parse_gamma,
    pred_implies,
    predicate_key,
    subject_sub,
)

NUM, POS, NAT, STR = Named("Number?"), Named("Positive?"), Named("Natural?"), Named("String?")


def test_default_env(env):
    assert ("Positive?", "Natural?") in env.facts
    assert ("Natural?", "Positive?") not in env.facts


@pytest.mark.parametrize(
    "c, d, expected",
    [
        (POS, NUM, True),
        (NUM, POS, False),
        (POS, POS, True),
        (STR, NUM, False),
        (NUM, TOP, True),
        (BOT, STR, True),
        (Fun(NUM, POS), Fun(POS, NUM), True),
        (Fun(NUM, NUM), Fun(NUM, POS), False),
        (Cap(POS, STR), NUM, True),
        (NUM, Cap(NUM, POS), False),
        (POS, Cap(NUM, NAT), True),
        (Cup(POS, NAT), NUM, True),
        (Cup(POS, STR), NUM, False),
        (POS, Cup(STR, NUM), True),
    ],
)
def test_subject_sub(env, c, d, expected):
    assert subject_sub(c, d, env) == expected


@pytest.mark.parametrize(
    "c, d, expected",
    [
        (POS, STR, True),
        (TOP, BOT, True),
        (Fun(POS, NUM), Fun(NUM, NUM), True),
        (Fun(NUM, NUM), Fun(POS, NUM), False),
        (Fun(NUM, Fun(POS, NUM)), Fun(NUM, Fun(NUM, NUM)), True),
        (Cap(Fun(NUM, NUM), Fun(STR, STR)), Fun(STR, STR), False),
        (Fun(STR, STR), Cap(Fun(NUM, NUM), Fun(STR, STR)), True),
        (Cup(Fun(NUM, NUM), Fun(STR, STR)), Fun(STR, STR), True),
    ],
)
def test_context_sub(env, c, d, expected):
    assert context_sub(c, d, env) == expected


def test_naive_and_ordinary_sub(env):
    assert naive_sub(POS, NUM, env)
    assert ordinary_sub(POS, NUM, env)
    assert not ordinary_sub(NUM, POS, env)
    assert naive_sub(Fun(POS, POS), Fun(POS, NUM), env)
    assert not naive_sub(Fun(NUM, NUM), Fun(POS, NUM), env)
    assert ordinary_sub(Fun(NUM, POS), Fun(POS, NUM), env)


def test_dependent_contracts_up_to_renaming(env):
    c = parse_contract("(dep (lam x (flat (lam v (> v x)))))")
    d = parse_contract("(dep (lam y (flat (lam w (> w y)))))")
    assert subject_sub(c, d, env)
    assert context_sub(c, d, env)


def test_predicate_key():
    assert predicate_key(POS) == "Positive?"
    a = predicate_key(Flat(parse_term("(lam x (> x 0))")))
    b = predicate_key(Flat(parse_term("(lam y (> y 0))")))
    assert a == b
    with pytest.raises(ValueError):
        predicate_key(Fun(NUM, NUM))


def test_flat_predicates_in_gamma():
    env = parse_gamma('"(lam x (> x 0))" <= Number?\n')
    positive = Flat(parse_term("(lam z (> z 0))"))
    assert subject_sub(positive, NUM, env)
    assert not subject_sub(NUM, positive, env)
    assert not subject_sub(positive, NUM, ImplicationEnv())


def test_gamma_is_not_closed_transitively():
    env = parse_gamma("Positive? <= Natural?\nNatural? <= Number?")
    assert subject_sub(POS, NAT, env)
    assert not subject_sub(POS, NUM, env)


@pytest.mark.parametrize(
    "text, n_facts",
    [
        ("", 0),
        ("; only a comment\n\n", 0),
        ("Positive? <= Number?", 1),
        ("  Positive?<=Number?  \n; x\nNegative? <= Number?\n", 2),
    ],
)
def test_parse_gamma(text, n_facts):
    assert len(parse_gamma(text).facts) == n_facts


@pytest.mark.parametrize(
    "text",
    ["Positive? Number?", "Positive? <= ", '"(lam x" <= Number?'],
)
def test_parse_gamma_errors(text):
    with pytest.raises(GammaFileError):
        parse_gamma(text)


def test_load_gamma():
    content = "; facts\nPositive? <= Natural?\n"
    with tempfile.NamedTemporaryFile(delete=False, suffix=".gamma") as temp_file:
        temp_file.write(content.encode())
        temp_file.flush()

    try:
        env = load_gamma(temp_file.name)
        assert env == ImplicationEnv([("Positive?", "Natural?")])
    finally:
        os.remove(temp_file.name)


@pytest.mark.parametrize(
    "p",
    [POS, STR, "Natural?", Flat(parse_term("(lam v (> v 0))")), "(lam x (> x 0))"],
)
def test_pred_implies_is_reflexive(p):
    assert pred_implies(ImplicationEnv(), p, p)


def test_pred_implies_on_raw_predicates():
    env = parse_gamma('"(lam x (> x 0))" <= Positive?\n')
    assert pred_implies(env, "(lam y (> y 0))", "Positive?")
    assert pred_implies(env, Flat(parse_term("(lam v (> v 0))")), POS)
    assert pred_implies(env, "(lam x (> x 0))", "(lam z (> z 0))")
    assert not pred_implies(env, "Positive?", "(lam x (> x 0))")
    assert not pred_implies(env, "(lam x (>= x 0))", POS)


def test_pred_implies_default_env():
    assert pred_implies(None, POS, NUM)
    assert not pred_implies(None, NUM, POS)
