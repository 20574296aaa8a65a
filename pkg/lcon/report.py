"""
Differential reports and predicate-check tables.

A program and its simplified form are run side by side and the two outcomes
classified:

strong-ok      identical outcomes: equal values, or blame of the same label
               with the same polarity
weak-ok        the same outcome class, blame on both sides with a different
               label or polarity
violation      the first divergence: different outcome classes, different
               values, more predicate checks after simplification, or a
               transformation that failed
inconclusive   either side ran out of fuel

Baseline simplification has to be strong-ok, subset simplification weak-ok.
Predicate-check counts are collected in pandas tables and can be exported to
a workbook with a bar chart.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Optional, Tuple

import openpyxl as xl
import pandas as pd
from openpyxl.chart import Reference
from openpyxl.styles import Font
from openpyxl.utils.dataframe import dataframe_to_rows

from lcon.ast import Const, Lam, Program, Term, unwrap
from lcon.baseline import BaselineTransformer, StepBudgetExceeded
from lcon.config import Config
from lcon.constraints import ConstraintStore
from lcon.evaluator import Outcome, OutcomeKind, run
from lcon.join import JoinStuckError, optimize, struct_equiv
from lcon.subset import BranchLimitExceeded

LEVELS = ("baseline", "subset")

TRANSFORM_ERRORS = (StepBudgetExceeded, BranchLimitExceeded, JoinStuckError)


class Verdict(Enum):
    STRONG_OK = "strong-ok"
    WEAK_OK = "weak-ok"
    VIOLATION = "violation"
    INCONCLUSIVE = "inconclusive"


def values_equal(a: Term, b: Term) -> bool:
    """Constants by kind and value, functions by structure ignoring contracts."""
    a, b = unwrap(a), unwrap(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return a.kind == b.kind and a.value == b.value
    if isinstance(a, Lam) and isinstance(b, Lam):
        return struct_equiv(a, b)
    return False


def describe(outcome: Optional[Outcome]) -> str:
    from lcon.parser import print_term

    if outcome is None:
        return "-"
    if outcome.kind is OutcomeKind.VALUE:
        return f"value {print_term(unwrap(outcome.term))}"
    if outcome.kind is OutcomeKind.BLAME:
        return f"blame {outcome.label} {outcome.polarity.value}"
    return outcome.kind.value


@dataclass
class DiffReport:
    program: str
    level: str
    original: Outcome
    transformed: Optional[Outcome]
    verdict: Verdict
    kind: Optional[str] = None
    detail: Optional[str] = None

    @property
    def checks_original(self) -> int:
        return self.original.predicate_checks

    @property
    def checks_transformed(self) -> Optional[int]:
        return None if self.transformed is None else self.transformed.predicate_checks

    @property
    def passed(self) -> bool:
        if self.level == "baseline":
            return self.verdict is Verdict.STRONG_OK
        return self.verdict in (Verdict.STRONG_OK, Verdict.WEAK_OK)

    def to_dict(self) -> Dict:
        return {
            "program": self.program,
            "level": self.level,
            "outcome_original": describe(self.original),
            "outcome_transformed": describe(self.transformed),
            "checks_original": self.checks_original,
            "checks_transformed": self.checks_transformed,
            "verdict": self.verdict.value,
            "kind": self.kind,
            "detail": self.detail,
        }


def classify(original: Outcome, transformed: Outcome, level: str) -> Tuple[Verdict, Optional[str], Optional[str]]:
    """The verdict for two outcomes, with the kind and a description of the first divergence."""
    if OutcomeKind.OUT_OF_FUEL in (original.kind, transformed.kind):
        return Verdict.INCONCLUSIVE, None, None
    if original.kind is not transformed.kind:
        return (
            Verdict.VIOLATION,
            "outcome",
            f"{describe(original)} became {describe(transformed)}",
        )
    if original.kind is OutcomeKind.VALUE and not values_equal(original.term, transformed.term):
        return Verdict.VIOLATION, "value", f"{describe(original)} became {describe(transformed)}"

    checks_apply = level == "baseline" or original.kind is OutcomeKind.VALUE
    if checks_apply and transformed.predicate_checks > original.predicate_checks:
        return (
            Verdict.VIOLATION,
            "improvement",
            f"{original.predicate_checks} predicate checks became {transformed.predicate_checks}",
        )
    if original.kind is OutcomeKind.BLAME and original.blame != transformed.blame:
        return Verdict.WEAK_OK, None, f"{describe(original)} became {describe(transformed)}"
    return Verdict.STRONG_OK, None, None


def transform(program: Program, level: str, env=None, config=Config(), join=True):
    """
    Simplify a source program.

    Returns
    -------
    (ConstraintStore, Term, list of TransformStep)
    """
    if level == "baseline":
        return BaselineTransformer(env, config).normalize(ConstraintStore(), program)
    if level == "subset":
        store, term, trace, _ = optimize(program, env, config, join=join, count=False)
        return store, term, trace
    raise ValueError(f"Unknown level '{level}', expected one of {LEVELS}")


def diff(program: Program, level="subset", name="", env=None, config=Config(), fuel=None) -> DiffReport:
    """Run `program` and its simplified form under the same fuel and classify the pair."""
    fuel = config.FUEL if fuel is None else fuel
    original = run(program, fuel=fuel, strict=not config.LENIENT)
    try:
        store, term, _ = transform(program, level, env, config)
    except TRANSFORM_ERRORS as e:
        return DiffReport(name, level, original, None, Verdict.VIOLATION, "transform", str(e))
    transformed = run(term, fuel=fuel, store=store, strict=not config.LENIENT)
    verdict, kind, detail = classify(original, transformed, level)
    return DiffReport(name, level, original, transformed, verdict, kind, detail)


def diff_table(reports: Iterable[DiffReport]) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for r in reports])


def count_checks(program: Program, env=None, config=Config()) -> Dict[str, Optional[int]]:
    """Predicate checks of one run of the original and of both simplified forms."""
    counts = {"original": run(program, fuel=config.FUEL).predicate_checks}
    for level in LEVELS:
        try:
            store, term, _ = transform(program, level, env, config)
        except TRANSFORM_ERRORS:
            counts[level] = None
            continue
        counts[level] = run(term, fuel=config.FUEL, store=store).predicate_checks
    return counts


def count_table(programs: Iterable[Tuple[str, Program]], env=None, config=Config()) -> pd.DataFrame:
    rows = [{"program": name, **count_checks(program, env, config)} for name, program in programs]
    return pd.DataFrame(rows, columns=["program", "original", *LEVELS])


class CountChart:
    """
    Writes a count table to a worksheet with a clustered bar chart next to it.

    The first column holds the categories (program names), every other column
    is one series.
    """

    def __init__(self, config=Config()):
        self.config = config
        self.chart: xl.chart.BarChart = None

        # Data range, headings included
        self.min_row = -1
        self.min_col = -1
        self.max_row = -1
        self.max_col = -1

    def write_dataframe(self, df: pd.DataFrame, ws, row_start=1, column_start=1, section_heading=None):
        if section_heading:
            cell = ws.cell(row=row_start, column=column_start, value=section_heading)
            cell.font = Font(
                name=self.config.SECTION_HEADING_FONT_NAME,
                size=self.config.SECTION_HEADING_FONT_SIZE,
                bold=self.config.SECTION_HEADING_BOLD,
                color=self.config.SECTION_HEADING_FONT_COLOR,
            )
            row_start += 1

        r, c = df.shape
        self.min_row = row_start
        # First column is the categories
        self.min_col = column_start + 1
        self.max_row = row_start + r
        self.max_col = column_start + c - 1

        # Missing counts stay empty cells
        df = df.astype(object).where(df.notna(), None)
        for row_idx, row in enumerate(dataframe_to_rows(df, index=False, header=True)):
            for col_idx, value in enumerate(row):
                ws.cell(row=row_start + row_idx, column=column_start + col_idx, value=value)

    def plot(self, df: pd.DataFrame, ws, row_start=1, column_start=1, section_heading=None):
        self.write_dataframe(df, ws, row_start, column_start, section_heading)

        self.chart = xl.chart.BarChart()
        self.chart.type = "col"
        self.chart.style = self.config.CHART_STYLE
        self.chart.title = self.config.CHART_TITLE
        self.chart.y_axis.title = self.config.CHART_Y_TITLE
        self.chart.width = self.config.CHART_WIDTH
        self.chart.height = self.config.CHART_HEIGHT

        data = Reference(ws, min_col=self.min_col, min_row=self.min_row, max_col=self.max_col, max_row=self.max_row)
        categories = Reference(ws, min_col=self.min_col - 1, min_row=self.min_row + 1, max_row=self.max_row)
        self.chart.add_data(data, titles_from_data=True)
        self.chart.set_categories(categories)

        anchor_col = xl.utils.get_column_letter(self.max_col + self.config.DATA_CHART_SEPARATOR + 1)
        ws.add_chart(self.chart, f"{anchor_col}{self.min_row}")


def export_counts(df: pd.DataFrame, filename, config=Config()):
    wb = xl.Workbook()
    ws = wb.active
    ws.title = config.SHEET_TITLE
    CountChart(config).plot(df, ws, section_heading=config.CHART_TITLE)
    wb.save(filename)
