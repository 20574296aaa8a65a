import itertools

import numpy as np
import pytest
from setup import *

from lcon.ast import (
    FALSE,
    TRUE,
    Assert,
    Blame,
    BlameVar,
    CapC,
    CheckResult,
    Const,
    CupC,
    Fun,
    FunC,
    Indirect,
    Inv,
    Label,
    Polarity,
    Top,
)
from lcon.constraints import (
    CONTEXT,
    SUBJECT,
    ConstraintStore,
    DanglingVariableError,
    OrphanVariableError,
    blame_of,
    blame_state,
    make_truth,
    root_of,
    sign_of,
    solve,
)

L, K = Label("l"), Label("k")
B1, B2, B3, B4, B5, B6 = (BlameVar(i) for i in range(1, 7))

POS, NEG = Polarity.POSITIVE, Polarity.NEGATIVE


def test_fresh_vars_continue_after_store():
    store = ConstraintStore([Indirect(L, B3)])
    assert store.fresh_var() == BlameVar(4)
    assert ConstraintStore().fresh_var() == BlameVar(1)


def test_copy_is_independent():
    store = ConstraintStore([Indirect(L, B1)])
    copy = store.copy()
    copy.append(CheckResult(B1, FALSE))
    assert len(store) == 1
    assert len(copy) == 2
    assert copy.next_var == store.next_var


@pytest.mark.parametrize(
    "value, expected",
    [
        (TRUE, True),
        (FALSE, False),
        (Const(0), True),
        (Const(""), True),
        (Assert(FALSE, B1, Fun(Top(), Top())), False),
    ],
)
def test_make_truth(value, expected):
    assert make_truth(value) == expected


@pytest.mark.parametrize(
    "constraints, expected",
    [
        ([], None),
        ([Indirect(L, B1), CheckResult(B1, TRUE)], None),
        ([Indirect(L, B1), CheckResult(B1, FALSE)], (L, POS)),
        ([Indirect(L, B1), Inv(B1, B2), CheckResult(B2, FALSE)], (L, NEG)),
        # range failure blames the function, domain failure its context
        ([Indirect(L, B1), FunC(B1, B2, B3), CheckResult(B3, FALSE)], (L, POS)),
        ([Indirect(L, B1), FunC(B1, B2, B3), CheckResult(B2, FALSE)], (L, NEG)),
        # a failed domain excuses the range
        ([Indirect(L, B1), FunC(B1, B2, B3), CheckResult(B2, FALSE), CheckResult(B3, FALSE)], (L, NEG)),
        ([Indirect(L, B1), CapC(B1, B2, B3), CheckResult(B2, FALSE)], (L, POS)),
        ([Indirect(L, B1), CupC(B1, B2, B3), CheckResult(B2, FALSE)], None),
        ([Indirect(L, B1), CupC(B1, B2, B3), CheckResult(B2, FALSE), CheckResult(B3, FALSE)], (L, POS)),
        # an intersection's context is only blamed when both alternatives fail it
        (
            [Indirect(L, B1), CapC(B1, B2, B3), Inv(B2, B4), CheckResult(B4, FALSE)],
            None,
        ),
        (
            [
                Indirect(L, B1),
                CapC(B1, B2, B3),
                Inv(B2, B4),
                CheckResult(B4, FALSE),
                Inv(B3, B5),
                CheckResult(B5, FALSE),
            ],
            (L, NEG),
        ),
        # oldest label first
        (
            [Indirect(K, B1), Indirect(L, B2), CheckResult(B2, FALSE), CheckResult(B1, FALSE)],
            (K, POS),
        ),
    ],
)
def test_blame_state(constraints, expected):
    assert blame_state(ConstraintStore(constraints)) == expected


def test_solve_facets():
    store = ConstraintStore([Indirect(L, B1), FunC(B1, B2, B3), CheckResult(B2, FALSE)])
    i = solve(store)
    assert i.facets(B2) == (False, True)
    assert i.facets(B1) == (True, False)
    assert i.facets(L) == (True, False)
    assert i.facets(B3) == (True, True)


def test_solution_is_independent_of_order():
    constraints = [Indirect(L, B1), CapC(B1, B2, B3), CheckResult(B3, FALSE), Inv(B2, B4)]
    forward = solve(ConstraintStore(constraints)).false
    backward = solve(ConstraintStore(list(reversed(constraints)))).false
    assert forward == backward


def test_strict_rejects_unallocated_variables():
    store = ConstraintStore([Indirect(L, B5)], next_var=2)
    with pytest.raises(DanglingVariableError):
        solve(store, strict=True)
    assert blame_state(store) is None


def test_blame_of():
    store = ConstraintStore(
        [Indirect(L, B1), FunC(B1, B2, B3), FunC(B3, B4, B5), Inv(B1, B6)]
    )
    assert blame_of(store, L) == Blame(L, POS)
    assert blame_of(store, B1) == Blame(L, POS)
    assert blame_of(store, B2) == Blame(L, NEG)
    assert blame_of(store, B3) == Blame(L, POS)
    assert blame_of(store, B4) == Blame(L, NEG)
    assert blame_of(store, B5) == Blame(L, POS)
    assert blame_of(store, B6) == Blame(L, NEG)
    assert root_of(store, B4) == L
    assert sign_of(store, B4) == NEG


def test_blame_of_follows_oldest_parent():
    store = ConstraintStore([Indirect(L, B1), Indirect(K, B2), Inv(B2, B3), Indirect(B1, B3)])
    assert blame_of(store, B3) == Blame(K, NEG)


def test_blame_of_orphan():
    with pytest.raises(OrphanVariableError):
        blame_of(ConstraintStore([Indirect(L, B1)]), B2)


def test_blame_of_cycle():
    store = ConstraintStore([Indirect(B1, B2), Indirect(B2, B1)])
    with pytest.raises(OrphanVariableError):
        blame_of(store, B1)


def test_dump():
    store = ConstraintStore([Indirect(L, B1), FunC(B1, B2, B3), CheckResult(B2, FALSE)])
    assert store.dump().splitlines() == ["#l <- @1", "@1 <- (@2 -> @3)", "@2 <- false"]


@pytest.mark.parametrize("reverse", [False, True])
def test_failed_domain_is_restored_after_later_facts(reverse):
    # @2 fails as a function: its subject facet excuses the range failure on @3
    constraints = [
        Indirect(L, B1),
        FunC(B1, B2, B3),
        FunC(B2, B4, B5),
        CheckResult(B3, FALSE),
        CheckResult(B5, FALSE),
    ]
    if reverse:
        constraints.reverse()
    store = ConstraintStore(constraints)
    i = solve(store)
    assert i.facets(B2) == (False, True)
    assert i.facets(B1) == (True, False)
    assert i.facets(L) == (True, False)
    assert blame_state(store) == (L, NEG)


@pytest.mark.parametrize(
    "constraints, expected",
    [
        ([Indirect(L, B1), Indirect(B1, B2), Indirect(B2, B1)], None),
        ([Indirect(L, B1), Indirect(B1, B2), Indirect(B2, B1), CheckResult(B2, FALSE)], (L, POS)),
        ([Indirect(L, B1), Inv(B1, B2), Inv(B2, B1), CheckResult(B1, FALSE)], (L, POS)),
    ],
)
def test_cyclic_stores(constraints, expected):
    assert blame_state(ConstraintStore(constraints)) == expected


def test_oscillating_cycle_terminates():
    # the subject facet of @1 excuses its own failure
    store = ConstraintStore([FunC(B1, B1, B2), CheckResult(B2, FALSE)])
    assert solve(store).facets(B2) == (False, True)


# Solutions checked against every interpretation of six identifiers

IDS = [L, B1, B2, B3, B4, B5]
SHAPES = (Indirect, CheckResult, FunC, CapC, CupC, Inv)
FACETS = [(b, f) for b in IDS for f in (SUBJECT, CONTEXT)]
COLUMN = {facet: k for k, facet in enumerate(FACETS)}
# one row per interpretation, True where the facet holds
ROWS = np.array(list(itertools.product((True, False), repeat=len(FACETS))))


def _facets(b):
    return ROWS[:, COLUMN[(b, SUBJECT)]], ROWS[:, COLUMN[(b, CONTEXT)]]


def _demands(c):
    """What `c` requires of its target's facets, under every interpretation at once."""
    if isinstance(c, Indirect):
        return _facets(c.source)
    if isinstance(c, CheckResult):
        return np.full(len(ROWS), c.value != FALSE), np.ones(len(ROWS), dtype=bool)
    if isinstance(c, Inv):
        s, k = _facets(c.negated)
        return k, s
    if isinstance(c, FunC):
        (s1, c1), (s2, c2) = _facets(c.dom), _facets(c.rng)
        return c1 & (~s1 | s2), s1 & c2
    (s1, c1), (s2, c2) = _facets(c.left), _facets(c.right)
    if isinstance(c, CapC):
        return s1 & s2, c1 | c2
    return s1 | s2, c1 & c2


def _conjunctions(constraints):
    holds = {facet: np.ones(len(ROWS), dtype=bool) for facet in FACETS}
    for c in constraints:
        s, k = _demands(c)
        holds[(c.target, SUBJECT)] = holds[(c.target, SUBJECT)] & s
        holds[(c.target, CONTEXT)] = holds[(c.target, CONTEXT)] & k
    return holds


def _exact_models(constraints):
    """Interpretations where every facet is exactly what its constraints demand."""
    holds = _conjunctions(constraints)
    exact = np.ones(len(ROWS), dtype=bool)
    for facet in FACETS:
        exact &= ROWS[:, COLUMN[facet]] == holds[facet]
    return ROWS[exact]


def _models(constraints):
    """Interpretations that make every facet a constraint demands false, false."""
    holds = _conjunctions(constraints)
    ok = np.ones(len(ROWS), dtype=bool)
    for facet in FACETS:
        ok &= ~ROWS[:, COLUMN[facet]] | holds[facet]
    return ROWS[ok]


def _false_set(row):
    return {facet for facet, bit in zip(FACETS, row) if not bit}


def _random_store(rng, shapes, acyclic):
    """Up to eight constraints; acyclic stores only read identifiers younger than the target."""
    constraints = []
    for _ in range(int(rng.integers(1, 9))):
        shape = shapes[int(rng.integers(len(shapes)))]
        if shape is CheckResult:
            target = IDS[int(rng.integers(1, len(IDS)))]
            constraints.append(CheckResult(target, FALSE if rng.integers(2) else TRUE))
            continue
        if acyclic:
            t = int(rng.integers(len(IDS) - 1))
            pool = IDS[t + 1 :]
        else:
            t = int(rng.integers(len(IDS)))
            pool = IDS[1:]
        a, b = (pool[int(k)] for k in rng.integers(len(pool), size=2))
        if shape in (Indirect, Inv):
            constraints.append(shape(IDS[t], a))
        else:
            constraints.append(shape(IDS[t], a, b))
    return constraints


@pytest.mark.parametrize("seed", range(500))
def test_solve_matches_the_exact_model(seed):
    constraints = _random_store(np.random.default_rng(seed), SHAPES, acyclic=True)
    models = _exact_models(constraints)
    assert len(models) == 1
    assert solve(ConstraintStore(constraints)).false == _false_set(models[0])


@pytest.mark.parametrize("seed", range(500))
def test_solve_is_least_on_cyclic_monotone_stores(seed):
    monotone = (Indirect, CheckResult, CapC, CupC, Inv)
    constraints = _random_store(np.random.default_rng(seed), monotone, acyclic=False)
    models = _models(constraints)
    least = models.any(axis=0)
    assert (models == least).all(axis=1).any()
    assert solve(ConstraintStore(constraints)).false == _false_set(least)


def test_random_stores_cover_every_shape():
    seen = set()
    for seed in range(500):
        seen.update(type(c) for c in _random_store(np.random.default_rng(seed), SHAPES, acyclic=True))
    assert seen == set(SHAPES)


SOURCE_STATES = {
    "kept": lambda b, aux: [],
    "subject": lambda b, aux: [CheckResult(b, FALSE)],
    "context": lambda b, aux: [Inv(b, aux), CheckResult(aux, FALSE)],
}


@pytest.mark.parametrize("shape", [Indirect, FunC, CapC, CupC, Inv])
@pytest.mark.parametrize("left", SOURCE_STATES)
@pytest.mark.parametrize("right", SOURCE_STATES)
def test_every_shape_on_every_source_state(shape, left, right):
    head = shape(B1, B2) if shape in (Indirect, Inv) else shape(B1, B2, B3)
    constraints = [Indirect(L, B1), head] + SOURCE_STATES[left](B2, B4) + SOURCE_STATES[right](B3, B5)
    models = _exact_models(constraints)
    assert len(models) == 1
    assert solve(ConstraintStore(constraints)).false == _false_set(models[0])
