"""
Configuration module.

Defines the Config class holding the defaults for evaluation, the contract
transformations, the fuzzer and the workbook export.
"""

import os


class Config:

    # Evaluation
    # Number of reduction steps before a run gives up with `out_of_fuel`
    FUEL = 1_000_000
    # Fuel for the predicate evaluations performed by the Verify rules
    VERIFY_FUEL = 10_000

    # Constraint solving
    # Lenient: facets of never-defined variables read as true.
    # Strict: a constraint referring to a variable the store never allocated is an error
    LENIENT = True

    # Transformations
    # Rule applications allowed in one normalization before giving up
    STEP_CAP = 100_000
    # Live branches of a fork tree during subset normalization
    MAX_BRANCHES = 64

    # Implication facts between flat predicates
    GAMMA_FILE = os.path.join(os.path.dirname(__file__), "data", "default.gamma")

    # Fuzzing
    FUZZ_SEED = 42
    FUZZ_CASES = 1000
    FUZZ_TERM_DEPTH = 4
    FUZZ_CONTRACT_DEPTH = 2
    # Maximum number of labelled assertions in a generated program
    FUZZ_LABEL_BUDGET = 4
    # Fuel for each side of a differential run
    FUZZ_FUEL = 100_000

    # Workbook export
    SHEET_TITLE = "Predicate checks"
    SECTION_HEADING_FONT_NAME = "Calibri"
    SECTION_HEADING_FONT_SIZE = 11
    SECTION_HEADING_BOLD = True
    # Color in hex code: https://openpyxl.readthedocs.io/en/stable/styles.html
    SECTION_HEADING_FONT_COLOR = "1A1A1A"
    CHART_TITLE = "Predicate checks per program"
    CHART_Y_TITLE = "checks"
    CHART_STYLE = 10
    CHART_WIDTH = 18  # cm
    CHART_HEIGHT = 9
    # Empty columns between the table and the chart
    DATA_CHART_SEPARATOR = 1
