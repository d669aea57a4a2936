"""Gap probabilities of discrete orthogonal polynomial ensembles.

Three independent computation routes with cross-verification:

* a brute-force determinant oracle (orthogonal polynomials, projection
  kernel, Gram determinants, subset enumeration),
* a general matrix-recurrence engine driven by the compatibility condition
  of a discrete Riemann-Hilbert Lax pair,
* closed scalar recurrences of discrete Painleve type for the families
  that admit them.
"""
from __future__ import annotations

from .families import FAMILY_NAMES, RECURRENCE_FAMILY_NAMES, FamilySpec, make_family
from .lax import GapRow, GapTable, run
from .painleve import run_painleve
from .precision import DEFAULT_PRECISION, Real, get_precision, real, set_precision, tau
from .report import (
    FIGURE_PRESETS,
    VerifyReport,
    build_tables,
    cross_check,
    run_figure_preset,
    run_oracle,
    verify_family,
    verify_report_text,
    write_table_csv,
    write_table_json,
)

__all__ = [
    "DEFAULT_PRECISION",
    "FAMILY_NAMES",
    "FIGURE_PRESETS",
    "FamilySpec",
    "GapRow",
    "GapTable",
    "RECURRENCE_FAMILY_NAMES",
    "Real",
    "VerifyReport",
    "build_tables",
    "cross_check",
    "get_precision",
    "make_family",
    "real",
    "run",
    "run_figure_preset",
    "run_oracle",
    "run_painleve",
    "set_precision",
    "tau",
    "verify_family",
    "verify_report_text",
    "write_table_csv",
    "write_table_json",
]

__version__ = "0.1.0"
