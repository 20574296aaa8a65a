import pandas as pd
import pytest
from setup import *

from lcon.ast import App, Assert, Const, Fun, Lam, Named, Var, free_vars, positions
from lcon.fuzz import (
    FuzzConfig,
    ProgramGenerator,
    fuzz,
    generate,
    shrink,
    shrink_candidates,
)
from lcon.parser import parse
from lcon.report import LEVELS, diff

NUM, POS, STR = Named("Number?"), Named("Positive?"), Named("String?")


def test_levels():
    assert FuzzConfig().levels == LEVELS
    assert FuzzConfig(level="subset").levels == ("subset",)


@pytest.mark.parametrize("index", range(5))
def test_generation_is_deterministic(index):
    fuzz_config = FuzzConfig(seed=7)
    assert generate(fuzz_config, index) == generate(fuzz_config, index)


def test_seeds_differ():
    programs = {generate(FuzzConfig(seed=seed), 0) for seed in range(10)}
    assert len(programs) > 1


@pytest.mark.parametrize("index", range(20))
def test_generated_programs_are_closed(index):
    fuzz_config = FuzzConfig(seed=3)
    generator = ProgramGenerator(fuzz_config, index)
    program = generator.program()
    assert free_vars(program) == frozenset()
    assert generator.labels <= fuzz_config.label_budget


def test_shrink_candidates():
    program = parse("(if true (assert 1 #a Number?) 2)").term
    candidates = list(shrink_candidates(program))
    assert parse("(if true 1 2)").term in candidates
    assert parse("(assert 1 #a Number?)").term in candidates
    assert Const(2) in candidates


def test_shrink_contract_candidates():
    program = parse("(assert (lam x x) #a (cap (-> Number? Number?) (-> String? String?)))").term
    contracts = [t.contract for t in shrink_candidates(program) if isinstance(t, Assert)]
    assert Fun(NUM, NUM) in contracts
    assert Fun(STR, STR) in contracts


def test_shrink():
    program = parse("(if true (assert 1 #a Number?) (assert 2 #b Number?))").term
    shrunk = shrink(program, lambda t: count_asserts(t) > 0)
    assert shrunk == parse("(assert 1 #a Number?)").term


def test_shrink_keeps_program_when_nothing_fails():
    program = parse("(assert 1 #a (cap Positive? Number?))").term
    assert shrink(program, lambda t: False) == program


def test_no_cases():
    summary = fuzz(FuzzConfig(cases=0))
    assert summary.table.empty
    assert summary.violations == 0
    assert summary.text() == "cases: 0"


def test_fuzz_table():
    summary = fuzz(FuzzConfig(seed=1, cases=3, level="baseline", fuel=10_000, shrink=False))
    assert len(summary.table) == 3
    assert list(summary.table["case"]) == [0, 1, 2]
    assert list(summary.table.columns) == [
        "case",
        "level",
        "verdict",
        "kind",
        "checks_original",
        "checks_transformed",
        "passed",
    ]
    assert summary.text().startswith("cases: 3")


def test_fuzz_is_deterministic():
    fuzz_config = FuzzConfig(seed=5, cases=3, level="baseline", fuel=10_000, shrink=False)
    pd.testing.assert_frame_equal(fuzz(fuzz_config).table, fuzz(fuzz_config).table)


def test_baseline_preserves_outcomes():
    summary = fuzz(FuzzConfig(seed=42, cases=10, level="baseline", fuel=10_000))
    assert summary.violations == 0, summary.text()
    assert not summary.counterexamples


def _calls_of(body, name):
    return sum(1 for _, t in positions(body) if t == Var(name))


def _reuses(program):
    lets = [t.fn for _, t in positions(program) if isinstance(t, App) and isinstance(t.fn, Lam)]
    return any(fn.param.startswith("f") and _calls_of(fn.body, fn.param) >= 2 for fn in lets)


REUSING = [i for i in range(200) if _reuses(generate(FuzzConfig(seed=11), i))]


def test_let_bound_functions_are_called_more_than_once():
    assert len(REUSING) >= 5


@pytest.mark.parametrize("index", range(50))
def test_other_binders_stay_affine(index):
    program = generate(FuzzConfig(seed=11), index)
    for _, t in positions(program):
        if isinstance(t, Lam) and not t.param.startswith("f"):
            assert _calls_of(t.body, t.param) <= 1


@pytest.mark.parametrize("index", REUSING[:5])
def test_reused_functions_keep_their_outcome(index):
    program = generate(FuzzConfig(seed=11), index)
    assert diff(program, "baseline", fuel=10_000).passed
    report = diff(program, "subset", fuel=10_000)
    assert report.passed or report.kind == "transform", report.detail
