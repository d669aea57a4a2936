"""Result tables, delimited output, verification reports, and figures.

This module turns the computation routes into user-facing artifacts:

* gap tables computed by any route ("oracle", "general", "painleve") or by
  all of them with a cross-route agreement check,
* CSV and JSON serialization with a decimal digit budget derived from the
  binary working precision; the density column of a file is recomputed from
  the rounded D column it sits next to, so re-reading a file and redoing the
  density arithmetic reproduces the stored strings exactly,
* a plain-text gnuplot script plus a rendered PNG for the density figures,
* a verification report running the structural invariant suites of every
  layer with worst-case residuals and first-failure step indices.

Figure parameter presets reproduce the reference density plots. The scalar
and matrix recurrences are forward-unstable while D_s is many orders of
magnitude below 1, losing a roughly constant number of bits per step, so
each preset carries the working precision that keeps the whole range
accurate; the verification report run at low precision shows which invariant
degrades first.
"""
from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from mpmath import mp

from .errors import (
    Divergent,
    GapProbError,
    IndexOutOfRange,
    InvalidParameter,
    UnsupportedFamily,
)
from .families import (
    LatticeKind,
    FamilySpec,
    density_value,
    make_family,
    ratio_identity_residual,
)
from .lax import (
    GapTable,
    _assemble_table,
    _check_k,
    compatibility_residual,
    init_state,
    run,
    step_general,
    weights_positive,
)
from .oracle import (
    build_ortho_basis,
    gap_probability_enumeration,
    gap_probability_gram,
)
from .painleve import run_painleve
from .precision import Real, get_precision, real, rel_diff, set_precision
from .qpvi import js_extract_and_check, qp6_chain, qp6_compat_check

__all__ = [
    "CheckResult",
    "FIGURE_PRESETS",
    "FigurePreset",
    "METHODS",
    "VerifyReport",
    "build_tables",
    "cross_check",
    "decimal_digits",
    "read_table_csv",
    "render_png",
    "render_table_csv",
    "run_figure_preset",
    "run_oracle",
    "table_csv_rows",
    "table_document",
    "verify_family",
    "write_plot_script",
    "write_table_csv",
    "write_table_json",
    "verify_report_text",
]

METHODS = ("oracle", "general", "painleve")

CSV_HEADER = ("s", "x_coord", "D", "density", "method")

STRUCTURAL_TOL = "1e-25"
NILPOTENCY_TOL = "1e-30"
DISTRIBUTION_TOL = "1e-15"


def run_oracle(f: FamilySpec, k: int, s_max: int) -> GapTable:
    """Gap probabilities D_s for s = k..s_max by Gram determinants only."""
    _check_k(f, k)
    if s_max < k:
        raise InvalidParameter(f"s_max={s_max} is below k={k}")
    n = f.lattice.N
    if n is not None and s_max > n + 1:
        raise IndexOutOfRange(f"s_max={s_max} exceeds N+1={n + 1}")
    basis = build_ortho_basis(f, k)
    cache: dict[int, Real] = {}

    def d_of(s: int) -> Real:
        if s not in cache:
            cache[s] = gap_probability_gram(basis, k, s)
        return cache[s]

    return _assemble_table(f, k, s_max, d_of, "oracle")


def build_tables(
    f: FamilySpec, k: int, s_max: int, method: str
) -> list[GapTable]:
    """Gap tables for the requested route, or for every applicable route.

    method "all" runs the oracle plus, when the family admits the linear
    second equation, the general and painleve recurrences; families without
    a recurrence route degrade to the oracle alone.
    """
    if method == "oracle":
        return [run_oracle(f, k, s_max)]
    if method == "general":
        return [run(f, k, s_max)]
    if method == "painleve":
        return [run_painleve(f, k, s_max)]
    if method == "all":
        tables = [run_oracle(f, k, s_max)]
        if f.supports_linear_recurrence:
            tables.append(run(f, k, s_max))
            tables.append(run_painleve(f, k, s_max))
        return tables
    raise InvalidParameter(
        f"unknown method {method!r}; expected oracle, general, painleve or all"
    )


def cross_check(tables: Sequence[GapTable], tol: Real) -> Real:
    """Largest relative D deviation between any two tables.

    Raises Divergent when the worst deviation exceeds tol; tables must
    cover identical index ranges.
    """
    worst = real(0)
    worst_s = None
    base = tables[0]
    for other in tables[1:]:
        if len(other.rows) != len(base.rows):
            raise InvalidParameter("tables cover different index ranges")
        for ra, rb in zip(base.rows, other.rows):
            if ra.s != rb.s:
                raise InvalidParameter("tables cover different index ranges")
            d = rel_diff(ra.D, rb.D)
            if d > worst:
                worst = d
                worst_s = ra.s
    if worst > tol:
        raise Divergent(
            f"routes disagree: relative D deviation {mp.nstr(worst, 6)} "
            f"exceeds tol {mp.nstr(tol, 6)}",
            step=worst_s,
        )
    return worst


def decimal_digits(precision_bits: int) -> int:
    """Significant decimal digits carried by the serialized output."""
    return max(int(precision_bits / 3.32), 3)


def _fmt(x: Real, digits: int) -> str:
    return mp.nstr(x, digits)


def table_csv_rows(table: GapTable, digits: int | None = None) -> list[tuple[str, ...]]:
    """Serialized rows for one table, densities recomputed from rounded D.

    Interior densities are derived from the decimal-rounded D values that
    appear in the same output, which makes the file self-consistent: parsing
    the D column and redoing the density arithmetic reproduces the density
    column character for character. The final row has no successor D in the
    file, so it keeps the full-precision density.
    """
    if digits is None:
        digits = decimal_digits(table.precision)
    f = make_family(table.family, table.params)
    rounded = [real(_fmt(r.D, digits)) for r in table.rows]
    out = []
    for i, r in enumerate(table.rows):
        if i + 1 < len(rounded):
            dens = density_value(f, r.s, rounded[i], rounded[i + 1])
        else:
            dens = r.density
        out.append(
            (
                str(r.s),
                _fmt(r.x_coord, digits),
                _fmt(r.D, digits),
                _fmt(dens, digits),
                table.method,
            )
        )
    return out


def write_table_csv(
    tables: Sequence[GapTable], path: str | Path, digits: int | None = None
) -> None:
    """Write tables as one CSV with a mandatory header, blocks per method."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_csv_stream(tables, fh, digits)


def render_table_csv(tables: Sequence[GapTable], digits: int | None = None) -> str:
    """The CSV text for tables, for stdout use."""
    buf = io.StringIO()
    _write_csv_stream(tables, buf, digits)
    return buf.getvalue()


def _write_csv_stream(tables, fh, digits) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for t in tables:
        w.writerows(table_csv_rows(t, digits))


def read_table_csv(path: str | Path) -> list[dict]:
    """Parse an emitted CSV back into rows of working-precision values."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise InvalidParameter(f"unexpected CSV header {header!r}")
        for rec in reader:
            s, x_coord, d, dens, method = rec
            rows.append(
                {
                    "s": int(s),
                    "x_coord": real(x_coord),
                    "D": real(d),
                    "density": real(dens),
                    "method": method,
                }
            )
    return rows


def table_document(tables: Sequence[GapTable], digits: int | None = None) -> dict:
    """JSON-ready document for tables, numbers as decimal strings."""
    base = tables[0]
    if digits is None:
        digits = decimal_digits(base.precision)
    return {
        "family": base.family,
        "params": {k: _fmt(v, digits) for k, v in base.params.items()},
        "k": base.k,
        "precision": base.precision,
        "digits": digits,
        "tables": [
            {
                "method": t.method,
                "rows": [
                    {
                        "s": int(rec[0]),
                        "x_coord": rec[1],
                        "D": rec[2],
                        "density": rec[3],
                    }
                    for rec in table_csv_rows(t, digits)
                ],
            }
            for t in tables
        ],
    }


def write_table_json(
    tables: Sequence[GapTable], path: str | Path, digits: int | None = None
) -> None:
    """Write tables as a single JSON document with decimal-string numbers."""
    doc = table_document(tables, digits)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_plot_script(
    csv_path: str | Path, tables: Sequence[GapTable], script_path: str | Path
) -> None:
    """Write a gnuplot script that plots density against x from the CSV.

    The script indexes each method's contiguous block of data lines, so it
    needs nothing beyond the CSV it sits next to.
    """
    csv_name = Path(csv_path).name
    png_name = Path(csv_path).stem + ".gnuplot.png"
    base = tables[0]
    clauses = []
    start = 1
    for t in tables:
        end = start + len(t.rows) - 1
        clauses.append(
            f'"{csv_name}" every ::{start}::{end} using 2:4 '
            f'with linespoints pointtype 7 pointsize 0.4 title "{t.method}"'
        )
        start = end + 1
    lines = [
        f"# density of the {base.family} ensemble, k={base.k}",
        'set datafile separator ","',
        "set terminal pngcairo size 960,640",
        f'set output "{png_name}"',
        'set xlabel "x"',
        'set ylabel "density"',
        "set key top right",
        "plot " + ", \\\n     ".join(clauses),
        "",
    ]
    Path(script_path).write_text("\n".join(lines), encoding="utf-8")


def render_png(
    tables: Sequence[GapTable], png_path: str | Path, title: str | None = None
) -> None:
    """Render the density curves to a PNG file with matplotlib."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    base = tables[0]
    fig, ax = plt.subplots(figsize=(9.6, 6.4))
    for t in tables:
        xs = [float(r.x_coord) for r in t.rows]
        ys = [float(r.density) for r in t.rows]
        ax.plot(xs, ys, marker=".", markersize=3, linewidth=1, label=t.method)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title(title or f"{base.family} density, k={base.k}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=110)
    plt.close(fig)


@dataclass(frozen=True)
class FigurePreset:
    """One reference density figure: family, parameters, range, precision.

    params is a callable so the parameter values are materialized at the
    preset's working precision, not at import time.
    """

    name: str
    family: str
    k: int
    s_max: int
    precision: int
    params: Callable[[], dict]


FIGURE_PRESETS: tuple[FigurePreset, ...] = (
    FigurePreset("charlier", "charlier", 6, 60, 512, lambda: {"a": 20}),
    FigurePreset(
        "meixner_low_c",
        "meixner",
        4,
        90,
        512,
        lambda: {"beta": 3000, "c": real("0.01")},
    ),
    FigurePreset(
        "meixner_high_c",
        "meixner",
        4,
        260,
        512,
        lambda: {"beta": real("0.5"), "c": real("0.9")},
    ),
    FigurePreset(
        "krawtchouk",
        "krawtchouk",
        5,
        81,
        512,
        lambda: {"p": real(10) / 17, "N": 80},
    ),
    FigurePreset(
        "q_krawtchouk",
        "q_krawtchouk",
        5,
        81,
        1024,
        lambda: {"p": real("0.7"), "N": 80, "q": real("0.98")},
    ),
    FigurePreset(
        "q_charlier",
        "q_charlier",
        6,
        160,
        2048,
        lambda: {"a": 20, "q": real("0.96")},
    ),
    FigurePreset(
        "alternative_q_charlier",
        "alternative_q_charlier",
        6,
        160,
        2048,
        lambda: {"a": 20, "q": real("0.96")},
    ),
    FigurePreset(
        "little_q_laguerre",
        "little_q_laguerre",
        6,
        60,
        1024,
        lambda: {"a": real("0.5"), "q": real("0.9")},
    ),
    FigurePreset(
        "little_q_jacobi",
        "little_q_jacobi",
        6,
        60,
        1024,
        lambda: {"a": real("0.5"), "b": real("1.5"), "q": real("0.9")},
    ),
)


def run_figure_preset(preset: FigurePreset, method: str = "painleve") -> GapTable:
    """Compute one reference figure's table at the preset's precision."""
    saved = get_precision()
    try:
        set_precision(preset.precision)
        f = make_family(preset.family, preset.params())
        (table,) = build_tables(f, preset.k, preset.s_max, method)
        return table
    finally:
        set_precision(saved)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named invariant check."""

    name: str
    status: str
    residual: Real | None = None
    detail: str = ""


@dataclass(frozen=True)
class VerifyReport:
    family: str
    k: int
    s_max: int
    precision: int
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)


def _residual_check(name, worst, worst_s, first_bad_s, threshold) -> CheckResult:
    detail = f"worst at s={worst_s}" if worst_s is not None else ""
    if worst <= threshold:
        return CheckResult(name, "pass", worst, detail)
    sep = "; " if detail else ""
    detail += f"{sep}exceeds threshold {mp.nstr(threshold, 3)}"
    if first_bad_s is not None:
        detail += f", first at s={first_bad_s}"
    return CheckResult(name, "fail", worst, detail)


class _Tracker:
    """Worst residual, where it occurred, and where it first went bad."""

    def __init__(self, name: str, threshold: Real):
        self.name = name
        self.threshold = threshold
        self.worst = real(0)
        self.worst_s = None
        self.first_bad_s = None

    def feed(self, value: Real, s: int) -> None:
        if value > self.worst:
            self.worst = value
            self.worst_s = s
        if self.first_bad_s is None and value > self.threshold:
            self.first_bad_s = s

    def result(self) -> CheckResult:
        return _residual_check(
            self.name, self.worst, self.worst_s, self.first_bad_s, self.threshold
        )


def _structural_checks(f: FamilySpec, k: int, s_max: int) -> list[CheckResult]:
    """Per-step identities of the matrix recurrence over s = k..s_max."""
    rng = random.Random(20417)
    structural = real(STRUCTURAL_TOL)
    nil = _Tracker("nilpotency", real(NILPOTENCY_TOL))
    detm = _Tracker("m-determinant", structural)
    trace = _Tracker("trace-identities", structural)
    compat = _Tracker("compatibility", structural)
    linear = f.lattice.kind is LatticeKind.LINEAR
    xi = f.d2.coeffs[1] if f.d2.degree >= 1 else real(0)
    tau_d2 = f.d2.coeffs[0]
    st = init_state(f, k)
    n = f.lattice.N
    aborted = None
    while st.s < s_max and (n is None or st.s <= n - 2):
        a_norm = max(abs(st.p), abs(st.q), abs(st.r))
        nil.feed(abs(st.p**2 + st.q * st.r) / max(a_norm**2, real(1)), st.s)
        zeta = f.point(st.s) + real(str(rng.uniform(0.25, 0.75))) * (
            f.point(st.s + 1) - f.point(st.s)
        )
        m = st.m_matrix(zeta)
        det_m = m.a11 * m.a22 - m.a12 * m.a21
        want = f.d1(zeta) * f.d2(zeta)
        detm.feed(abs(det_m - want) / max(abs(want), real(1)), st.s)
        if linear:
            r1 = abs(st.c11 + st.p + k)
            r2 = abs(st.c22 - xi * st.p - (xi * k + tau_d2))
            r3 = abs(st.c12 * st.c21 - st.c11 * st.c22)
            scale = max(abs(st.c11), abs(st.c22), abs(st.c12), abs(st.c21), real(1))
            trace.feed(max(r1, r2, r3 / scale) / max(real(k), real(1)), st.s)
        try:
            nxt = step_general(st, f)
        except GapProbError as exc:
            aborted = CheckResult(
                "recurrence-progress",
                "fail",
                None,
                f"step failed at s={st.s}: {type(exc).__name__}: {exc}",
            )
            break
        pole = f.point(st.s + 1)
        z2 = pole + (real(str(rng.uniform(0.5, 1.5)))) * max(real(1), abs(pole))
        compat.feed(compatibility_residual(st, nxt, f, z2), st.s)
        st = nxt
    checks = [nil.result(), detm.result()]
    if linear:
        checks.append(trace.result())
    else:
        checks.append(
            CheckResult(
                "trace-identities",
                "skip",
                None,
                "trace identities are specific to linear lattices",
            )
        )
    checks.append(compat.result())
    if aborted is not None:
        checks.append(aborted)
    return checks


def _spot_indices(k: int, s_max: int, count: int = 10) -> list[int]:
    span = list(range(k, s_max + 1))
    if len(span) <= count:
        return span
    step = (len(span) - 1) / (count - 1)
    return sorted({span[round(i * step)] for i in range(count)})


def verify_family(
    f: FamilySpec, k: int, s_max: int, tol: Real | None = None
) -> VerifyReport:
    """Run every applicable invariant suite and collect worst residuals."""
    if tol is None:
        tol = real("1e-15")
    checks: list[CheckResult] = []
    n = f.lattice.N
    if n is not None:
        s_max = min(s_max, n + 1)
    if s_max < k:
        raise InvalidParameter(f"s_max={s_max} is below k={k}")

    res = ratio_identity_residual(f, min(s_max + 8, n if n is not None else s_max + 8))
    checks.append(
        _residual_check("weight-ratio-identity", res, None, None, real(STRUCTURAL_TOL))
    )

    oracle_table = None
    try:
        oracle_table = run_oracle(f, k, s_max)
        checks.append(CheckResult("oracle-route", "pass", None, ""))
    except GapProbError as exc:
        checks.append(
            CheckResult(
                "oracle-route",
                "fail",
                None,
                f"{type(exc).__name__}: {exc}",
            )
        )

    if k <= 3:
        s_enum = min(s_max, k + 8)
        basis = build_ortho_basis(f, k)
        worst = real(0)
        worst_s = None
        for s in range(k, s_enum + 1):
            d = rel_diff(
                gap_probability_enumeration(f, k, s),
                gap_probability_gram(basis, k, s),
            )
            if d > worst:
                worst, worst_s = d, s
        checks.append(
            _residual_check("oracle-enumeration", worst, worst_s, None, real("1e-20"))
        )
    else:
        checks.append(
            CheckResult(
                "oracle-enumeration",
                "skip",
                None,
                "enumeration cost grows combinatorially; skipped for k > 3",
            )
        )

    if not f.supports_linear_recurrence:
        checks.append(
            CheckResult(
                "recurrence-checks",
                "skip",
                None,
                "oracle-only family; recurrence checks skipped",
            )
        )
    else:
        checks.extend(_structural_checks(f, k, s_max))
        general_table = None
        try:
            general_table = run(f, k, s_max)
            painleve_table = run_painleve(f, k, s_max)
            worst = real(0)
            worst_s = None
            for ra, rb in zip(general_table.rows, painleve_table.rows):
                d = rel_diff(ra.D, rb.D)
                if d > worst:
                    worst, worst_s = d, ra.s
            checks.append(
                _residual_check("painleve-general-agreement", worst, worst_s, None, tol)
            )
        except GapProbError as exc:
            checks.append(
                CheckResult(
                    "painleve-general-agreement",
                    "fail",
                    None,
                    f"{type(exc).__name__}: {exc}",
                )
            )
        if general_table is not None and oracle_table is not None:
            worst = real(0)
            worst_s = None
            by_s = {r.s: r.D for r in oracle_table.rows}
            for s in _spot_indices(k, s_max):
                d_gen = next(r.D for r in general_table.rows if r.s == s)
                d = rel_diff(d_gen, by_s[s])
                if d > worst:
                    worst, worst_s = d, s
            checks.append(
                _residual_check("oracle-agreement", worst, worst_s, None, tol)
            )
        else:
            checks.append(
                CheckResult(
                    "oracle-agreement",
                    "skip",
                    None,
                    "needs both the oracle and the general route",
                )
            )

    checks.append(_qpvi_check(f, k))
    checks.append(_distribution_check(f, k, s_max, oracle_table))
    return VerifyReport(
        family=f.name,
        k=k,
        s_max=s_max,
        precision=get_precision(),
        checks=tuple(checks),
    )


def _qpvi_check(f: FamilySpec, k: int) -> CheckResult:
    if f.lattice.kind is LatticeKind.LINEAR:
        return CheckResult(
            "qp6-js", "skip", None, "q-difference checks apply to q-lattices only"
        )
    if not f.supports_linear_recurrence:
        return CheckResult(
            "qp6-js", "skip", None, "oracle-only family; recurrence checks skipped"
        )
    steps = 10
    n = f.lattice.N
    if n is not None:
        steps = min(steps, n - k - 2)
    if steps < 2:
        return CheckResult("qp6-js", "skip", None, "lattice too short for a chain")
    try:
        chain = qp6_chain(f, k, k + 1, k + 1 + steps)
        for d_t, d_qt in zip(chain[1:], chain[:-1]):
            samples = [d_t.t, d_qt.t, real(2), real("-0.5")]
            if not qp6_compat_check(d_t, d_qt, samples):
                return CheckResult(
                    "qp6-js", "fail", None, f"compatibility failed at s={d_t.s}"
                )
            if not js_extract_and_check(d_t, d_qt):
                return CheckResult(
                    "qp6-js", "fail", None, f"step identities failed at s={d_t.s}"
                )
        return CheckResult("qp6-js", "pass", None, f"{steps} consecutive steps")
    except UnsupportedFamily as exc:
        return CheckResult("qp6-js", "skip", None, str(exc))
    except GapProbError as exc:
        return CheckResult("qp6-js", "fail", None, f"{type(exc).__name__}: {exc}")


def _distribution_check(
    f: FamilySpec, k: int, s_max: int, table: GapTable | None
) -> CheckResult:
    if table is None:
        return CheckResult(
            "distribution-range", "skip", None, "no table available to check"
        )
    if not weights_positive(f, s_max + 16):
        return CheckResult(
            "distribution-range",
            "skip",
            None,
            "signed weight; D has no probability interpretation",
        )
    bound = real(DISTRIBUTION_TOL)
    worst = real(0)
    worst_s = None
    prev = None
    for r in table.rows:
        bad = max(
            real(0),
            -r.density,
            r.D - 1,
            -r.D,
            (prev - r.D) if prev is not None else real(0),
        )
        if bad > worst:
            worst, worst_s = bad, r.s
        prev = r.D
    mass = table.rows[-1].D - table.rows[0].D
    if mass - 1 > worst:
        worst, worst_s = mass - 1, table.rows[-1].s
    return _residual_check("distribution-range", worst, worst_s, None, bound)


def verify_report_text(report: VerifyReport) -> str:
    """Human-readable rendering of a verification report."""
    lines = [
        f"verify {report.family} k={report.k} s_max={report.s_max} "
        f"precision={report.precision}"
    ]
    width = max(len(c.name) for c in report.checks)
    counts = {"pass": 0, "fail": 0, "skip": 0}
    for c in report.checks:
        counts[c.status] += 1
        res = f" worst {mp.nstr(c.residual, 4)}" if c.residual is not None else ""
        detail = f" ({c.detail})" if c.detail else ""
        lines.append(f"  {c.status.upper():4s}  {c.name:<{width}s}{res}{detail}")
    lines.append(
        f"{counts['pass']} passed, {counts['fail']} failed, {counts['skip']} skipped"
    )
    return "\n".join(lines) + "\n"
