"""Command-line front end for gap probability computations.

Subcommands:

* compute: build the gap table for one family by the chosen route (or all
  routes, cross-checked against --tol) and emit CSV or JSON. Writing CSV to
  a file also writes a gnuplot script and a rendered PNG next to it.
* verify: run the invariant suites of every layer and report pass/fail per
  invariant with worst-case residuals; exit status 0 only when all pass.
* list-families: print the family registry, optionally as JSON.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure (the
structured error names the step index), 3 unsupported operation. Errors are
reported on stderr as "family=... step=... reason=...".

A JSON config file (--config) may provide any of the keys family, params,
k, smax, method, precision, tol, out, format; explicit flags override the
file. Parameter values in the file may be strings to avoid binary float
rounding ("0.9" stays the decimal 0.9 at working precision).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    DegenerateWeight,
    GapProbError,
    IndexOutOfRange,
    InvalidParameter,
    InvalidQ,
    TooLarge,
    UnknownFamily,
    UnsupportedFamily,
)
from .families import (
    FAMILY_NAMES,
    RECURRENCE_FAMILY_NAMES,
    family_description,
    family_lattice_label,
    family_parameter_names,
    make_family,
)
from .precision import DEFAULT_PRECISION, real, set_precision
from .report import (
    build_tables,
    cross_check,
    render_png,
    render_table_csv,
    table_document,
    verify_family,
    verify_report_text,
    write_plot_script,
    write_table_csv,
    write_table_json,
)

__all__ = ["RunConfig", "build_parser", "main"]

_CONFIG_ERRORS = (
    UnknownFamily,
    InvalidParameter,
    InvalidQ,
    DegenerateWeight,
    TooLarge,
    IndexOutOfRange,
)

_CONFIG_KEYS = (
    "family",
    "params",
    "k",
    "smax",
    "method",
    "precision",
    "tol",
    "out",
    "format",
)


@dataclass(frozen=True)
class RunConfig:
    """One command's fully merged settings."""

    family: str
    params: dict
    k: int
    s_max: int
    method: str
    precision: int
    tol: str
    out: str | None
    fmt: str


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; 2 is reserved for
    numerical failures here, so usage errors exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", help="family name (see list-families)")
    p.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="family parameter, repeatable",
    )
    p.add_argument("--k", type=int, help="number of particles")
    p.add_argument("--smax", type=int, help="largest gap index s to compute")
    p.add_argument(
        "--method",
        choices=["oracle", "general", "painleve", "all"],
        help="computation route (default general)",
    )
    p.add_argument("--precision", type=int, help="working precision in bits")
    p.add_argument("--tol", help="cross-route agreement tolerance")
    p.add_argument("--out", help="output file path")
    p.add_argument("--format", choices=["csv", "json"], help="output format")
    p.add_argument("--config", help="JSON config file mirroring these flags")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="gapprob",
        description="Gap probabilities of discrete orthogonal polynomial ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_compute = sub.add_parser(
        "compute", help="compute a gap table and write CSV/JSON plus figures"
    )
    _add_run_flags(p_compute)
    p_verify = sub.add_parser(
        "verify", help="run the invariant suites and report residuals"
    )
    _add_run_flags(p_verify)
    p_list = sub.add_parser("list-families", help="print the family registry")
    p_list.add_argument("--json", action="store_true", help="machine-readable output")
    return parser


def _parse_param(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key or not value:
        raise InvalidParameter(f"--param expects KEY=VALUE, got {text!r}")
    return key, value


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InvalidParameter(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidParameter(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidParameter(f"config {path} must hold a JSON object")
    unknown = sorted(set(doc) - set(_CONFIG_KEYS))
    if unknown:
        raise InvalidParameter(f"config {path} has unknown keys {unknown}")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise InvalidParameter(f"config {path} key 'params' must be an object")
    return doc


def _merge_config(args: argparse.Namespace, smax_required: bool) -> RunConfig:
    file_cfg = _load_config(args.config) if args.config else {}

    def pick(flag_value, key, default=None):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(key, default)

    family = pick(args.family, "family")
    if not family:
        raise InvalidParameter("--family is required (flag or config file)")
    params = dict(file_cfg.get("params", {}))
    for item in args.param:
        key, value = _parse_param(item)
        params[key] = value
    k = pick(args.k, "k")
    if k is None:
        if smax_required:
            raise InvalidParameter("--k is required (flag or config file)")
        k = 2
    k = int(k)
    s_max = pick(args.smax, "smax")
    if s_max is None:
        if smax_required:
            raise InvalidParameter("--smax is required (flag or config file)")
        s_max = k + 20
    s_max = int(s_max)
    precision = int(pick(args.precision, "precision", DEFAULT_PRECISION))
    if precision <= 0:
        raise InvalidParameter(f"precision must be positive, got {precision}")
    return RunConfig(
        family=family,
        params=params,
        k=k,
        s_max=s_max,
        method=pick(args.method, "method", "general"),
        precision=precision,
        tol=str(pick(args.tol, "tol", "1e-15")),
        out=pick(args.out, "out"),
        fmt=pick(getattr(args, "format"), "format", "csv"),
    )


def cmd_compute(cfg: RunConfig) -> int:
    set_precision(cfg.precision)
    f = make_family(cfg.family, cfg.params)
    tol = real(cfg.tol)
    tables = build_tables(f, cfg.k, cfg.s_max, cfg.method)
    if cfg.method == "all" and not f.supports_linear_recurrence:
        print(
            f"note: {f.name} is an oracle-only family; recurrence routes skipped",
            file=sys.stderr,
        )
    if len(tables) > 1:
        cross_check(tables, tol)
    if cfg.out is None:
        if cfg.fmt == "csv":
            sys.stdout.write(render_table_csv(tables))
        else:
            json.dump(table_document(tables), sys.stdout, indent=2)
            sys.stdout.write("\n")
        return 0
    out = Path(cfg.out)
    written = [out]
    if cfg.fmt == "csv":
        write_table_csv(tables, out)
        script = out.with_suffix(".gp")
        png = out.with_suffix(".png")
        write_plot_script(out, tables, script)
        render_png(tables, png)
        written += [script, png]
    else:
        write_table_json(tables, out)
    rows = sum(len(t.rows) for t in tables)
    names = ", ".join(str(p) for p in written)
    print(f"wrote {names} ({rows} rows, methods: {', '.join(t.method for t in tables)})")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    set_precision(cfg.precision)
    f = make_family(cfg.family, cfg.params)
    report = verify_family(f, cfg.k, cfg.s_max, real(cfg.tol))
    text = verify_report_text(report)
    sys.stdout.write(text)
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    return 0 if report.passed else 2


def cmd_list_families(as_json: bool) -> int:
    if as_json:
        doc = [
            {
                "name": name,
                "parameters": list(family_parameter_names(name)),
                "lattice": family_lattice_label(name),
                "supports_linear_recurrence": name in RECURRENCE_FAMILY_NAMES,
                "description": family_description(name),
            }
            for name in FAMILY_NAMES
        ]
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0
    headers = ("family", "parameters", "lattice", "recurrence")
    rows = [
        (
            name,
            ", ".join(family_parameter_names(name)),
            family_lattice_label(name),
            "yes" if name in RECURRENCE_FAMILY_NAMES else "no",
        )
        for name in FAMILY_NAMES
    ]
    widths = [
        max(len(headers[i]), max(len(r[i]) for r in rows)) for i in range(len(headers))
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(headers))))
    print("\n".join(lines))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    family = getattr(args, "family", None) or "-"
    try:
        if args.command == "list-families":
            return cmd_list_families(args.json)
        cfg = _merge_config(args, smax_required=args.command == "compute")
        family = cfg.family
        if args.command == "compute":
            return cmd_compute(cfg)
        return cmd_verify(cfg)
    except _CONFIG_ERRORS as exc:
        _report_error(family, exc)
        return 1
    except UnsupportedFamily as exc:
        _report_error(family, exc)
        return 3
    except GapProbError as exc:
        _report_error(family, exc)
        return 2
    except OSError as exc:
        print(f"gapprob: error: family={family} step=- reason={exc}", file=sys.stderr)
        return 1


def _report_error(family: str, exc: GapProbError) -> None:
    step = getattr(exc, "step", None)
    step_text = str(step) if step is not None else "-"
    print(
        f"gapprob: error: family={family} step={step_text} "
        f"reason={type(exc).__name__}: {exc}",
        file=sys.stderr,
    )


if __name__ == "__main__":
    raise SystemExit(main())
