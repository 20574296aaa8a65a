import json
import os

import pytest
from setup import *

from lcon import __version__
from lcon.cli import (
    EXIT_BLAME,
    EXIT_OK,
    EXIT_STUCK,
    EXIT_USAGE,
    build_parser,
    main,
)


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert __version__ in capsys.readouterr().out


def test_missing_command():
    assert main([]) == EXIT_USAGE


def test_run_value(capsys):
    assert main(["run", corpus_path("addOne1_call")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "outcome: value 6" in out
    assert "predicate checks: 3" in out


def test_run_json(capsys):
    assert main(["run", "--json", corpus_path("addOne2_call")]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["outcome"] == "value 6"
    assert data["predicate_checks"] == 6


def test_run_blame(capsys):
    assert main(["run", corpus_path("blame_domain")]) == EXIT_BLAME
    assert "blame #l -" in capsys.readouterr().out


def test_run_dump_constraints(capsys):
    main(["run", "--dump-constraints", corpus_path("blame_range")])
    assert "#l <- @1" in capsys.readouterr().out


def test_run_out_of_fuel(tmp_path):
    path = write_temp(tmp_path, "((lam x (x x)) (lam x (x x)))")
    assert main(["run", "--fuel", "20", path]) == EXIT_STUCK


def test_run_stuck(tmp_path):
    assert main(["run", write_temp(tmp_path, "(1 2)")]) == EXIT_STUCK


def test_syntax_error(tmp_path, capsys):
    assert main(["run", write_temp(tmp_path, "(lam x")]) == EXIT_USAGE
    assert "LconSyntaxError" in capsys.readouterr().err


def test_missing_file():
    assert main(["run", os.path.join("no", "such", "file.lcon")]) == EXIT_USAGE


@pytest.mark.parametrize(
    "name, level",
    [("addOne1", "baseline"), ("addOne2", "baseline"), ("addOne2", "subset")],
)
def test_simplify(capsys, golden, name, level):
    assert main(["simplify", "--level", level, corpus_path(name)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == golden(name, level)


def test_simplify_report(capsys):
    assert main(["simplify", "--report", corpus_path("addOne2_call")]) == EXIT_OK
    data = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert data["predicates_before"] == 6
    assert data["predicates_after"] <= 6
    assert "Fork/Intersection" in data["rule_counts"]


def test_simplify_trace(capsys):
    assert main(["simplify", "--trace", "--level", "baseline", corpus_path("addOne1")]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("Unfold/Assert at ")


def test_simplify_bad_gamma(tmp_path):
    gamma = write_temp(tmp_path, "Positive? Number?", name="bad.gamma")
    assert main(["simplify", "--gamma", gamma, corpus_path("addOne1")]) == EXIT_USAGE


def test_count(capsys):
    files = [corpus_path("addOne1_call"), corpus_path("addOne2_call")]
    assert main(["count", "--json"] + files) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert [r["program"] for r in rows] == ["addOne1_call", "addOne2_call"]
    assert [r["original"] for r in rows] == [3, 6]


def test_count_xlsx(tmp_path):
    xlsx = str(tmp_path / "counts.xlsx")
    assert main(["count", "--xlsx", xlsx, corpus_path("addOne1_call")]) == EXIT_OK
    assert os.path.exists(xlsx)


def test_diff(capsys):
    files = [corpus_path(name) for name in ("addOne1_call", "blame_domain")]
    assert main(["diff", "--level", "both", "--json"] + files) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 4


def test_fuzz_no_cases(capsys):
    assert main(["fuzz", "--cases", "0"]) == EXIT_OK
    assert "cases: 0" in capsys.readouterr().out


def test_parser_defaults():
    args = build_parser().parse_args(["simplify", "x.lcon"])
    assert args.level == "subset"
    assert not args.no_join
