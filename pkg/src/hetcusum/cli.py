"""
Command line interface.

Exit codes: 0 success, 1 I/O, parse, configuration or usage error,
2 degenerate input (e.g. a constant series).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Any, NoReturn

import numpy as np
import pandas as pd

from hetcusum import log
from hetcusum.config import DEFAULT_ALPHAS, TestConfig, default_seed
from hetcusum.dgp import PROFILES, variance_profile
from hetcusum.errors import DegenerateInputError
from hetcusum.kernels import ad_weight_kernel, theoretical_kernel
from hetcusum.montecarlo import (
    classical_limit_spectrum,
    sample_weighted_chisq,
    vs_limit_spectrum,
)
from hetcusum.procedures import MethodId, empirical_kernel, run_test, spectrum_of
from hetcusum.regression import intercept_design, ols_residuals
from hetcusum.series import Series
from hetcusum.simulation import CSV_COLUMNS, load_grid, run_grid

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Sequence

    from hetcusum.spectrum import Spectrum

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEGENERATE = 2
DELIMITERS = (",", ";", "\t")


class CliError(Exception):

    """A user-facing error that ends the program with exit code 1."""


class _Parser(argparse.ArgumentParser):

    """ArgumentParser that exits with code 1 on usage errors."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# ================================================================
#  Input
# ================================================================
def _sniff_delimiter(path: Path) -> str | None:
    """Comma, semicolon or tab, judged from the first non-blank line."""
    with Path.open(path, encoding="utf-8") as file:
        for line in file:
            if line.strip():
                counts = {d: line.count(d) for d in DELIMITERS}
                best = max(counts, key=counts.get)
                return best if counts[best] else None
    return None


def _is_number(cell: Any) -> bool:  # noqa: ANN401
    try:
        float(cell)
    except (TypeError, ValueError):
        return False
    return True


def read_table(path: Path | str) -> pd.DataFrame:
    """
    Read a delimited text file of numeric columns.

    The delimiter is sniffed; a first row with a non-numeric cell is a
    header. Blank lines at the end are ignored. The returned frame keeps
    the 1-based file line of every row in the attribute ``lines``.
    """
    path = Path(path)
    try:
        delimiter = _sniff_delimiter(path)
        raw = pd.read_csv(path, sep=delimiter or ",", header=None, dtype=str,
                          skip_blank_lines=False, keep_default_na=False,
                          engine="python")
    except (OSError, UnicodeDecodeError) as error:
        msg = f"Cannot read '{path}': {error}"
        raise CliError(msg) from error
    except pd.errors.EmptyDataError as error:
        msg = f"'{path}' is empty."
        raise CliError(msg) from error
    except pd.errors.ParserError as error:
        msg = f"Cannot parse '{path}': {error}"
        raise CliError(msg) from error

    lines = np.arange(1, len(raw) + 1)
    raw = raw.apply(lambda column: column.str.strip())
    blank = (raw.isna() | (raw == "")).all(axis=1).to_numpy()
    raw, lines = raw[~blank], lines[~blank]
    if raw.empty:
        msg = f"'{path}' contains no data."
        raise CliError(msg)

    first = raw.iloc[0]
    if not all(_is_number(cell) for cell in first):
        raw.columns = [str(cell) for cell in first]
        raw, lines = raw.iloc[1:], lines[1:]
    else:
        raw.columns = [str(i) for i in range(raw.shape[1])]
    raw = raw.reset_index(drop=True)
    raw.attrs["lines"] = lines.tolist()
    raw.attrs["path"] = str(path)
    return raw


def select_column(table: pd.DataFrame, column: str | None) -> pd.Series:
    """Pick a column by name or 0-based index."""
    if column is None:
        if table.shape[1] > 1:
            msg = f"The input has {table.shape[1]} columns "
            msg += f"{list(table.columns)}; choose one with --column."
            raise CliError(msg)
        return table.iloc[:, 0]
    if column in table.columns:
        return table[column]
    if column.lstrip("-").isdigit() and -table.shape[1] <= int(column) < table.shape[1]:
        return table.iloc[:, int(column)]
    msg = f"Unknown column '{column}'. Columns are: {list(table.columns)}."
    raise CliError(msg)


def numeric_values(table: pd.DataFrame, column: pd.Series) -> np.ndarray:
    """Convert a column to floats, reporting bad cells with their lines."""
    values = pd.to_numeric(column, errors="coerce")
    bad = values.isna().to_numpy() | ~np.isfinite(values.to_numpy(dtype=float))
    if bad.any():
        lines = np.asarray(table.attrs["lines"])[bad]
        shown = ", ".join(f"line {line}: '{cell}'"
                          for line, cell in zip(lines[:10], column[bad][:10],
                                                strict=False))
        msg = f"Non-numeric cells in column '{column.name}' of "
        msg += f"{table.attrs['path']}: {shown}"
        if bad.sum() > 10:  # noqa: PLR2004
            msg += f" (and {bad.sum() - 10} more)"
        raise CliError(msg)
    return values.to_numpy(dtype=float)


def load_series(path: Path | str,
                columns: Sequence[str] | None,
                covariates: Sequence[str] = ()) -> list[Series]:
    """Read the requested series (OLS residuals when covariates are given)."""
    table = read_table(path)
    selected = [select_column(table, c) for c in (columns or [None])]
    design = None
    if covariates:
        regressors = [numeric_values(table, select_column(table, c))
                      for c in covariates]
        design = intercept_design(len(table), *regressors)
    result = []
    for column in selected:
        values = numeric_values(table, column)
        if len(values) < 4:  # noqa: PLR2004
            msg = f"Column '{column.name}' has {len(values)} values; "
            msg += "at least 4 are needed."
            raise CliError(msg)
        series = Series(values, name=str(column.name))
        if design is not None:
            series = ols_residuals(series, design)
        result.append(series)
    return result


# ================================================================
#  Output
# ================================================================
def _emit_frame(frame: pd.DataFrame, fmt: str) -> None:
    if fmt == "csv":
        frame.to_csv(sys.stdout, index=False)
    elif fmt == "json":
        sys.stdout.write(frame.to_json(orient="records", indent=2) + "\n")
    else:
        sys.stdout.write(frame.to_string(index=False) + "\n")


def _report_rows(reports: list) -> pd.DataFrame:
    rows = []
    for report in reports:
        row = {
            "series": report.series,
            "method": report.method.value,
            "n": report.n,
            "statistic": report.statistic,
            "p_value": report.p_value,
        }
        row.update({f"cv_{alpha!r}": value
                    for alpha, value in report.critical_values.items()})
        row.update({
            "spectrum_source": report.spectrum_source,
            "n_terms": report.n_terms,
            "seed": report.config["seed"],
            "warnings": "; ".join(report.warnings),
        })
        rows.append(row)
    return pd.DataFrame(rows)


def p_value_table(reports: list) -> pd.DataFrame:
    """P-values with one row per series and one column per method."""
    frame = pd.DataFrame([{"series": r.series, "method": r.method.value,
                           "p_value": r.p_value} for r in reports])
    table = frame.pivot(index="series", columns="method", values="p_value")
    methods = list(dict.fromkeys(frame["method"]))
    series = list(dict.fromkeys(frame["series"]))
    return table.loc[series, methods]


# ================================================================
#  Commands
# ================================================================
def _test_config(args: argparse.Namespace) -> TestConfig:
    table = None
    if args.kernel_table is not None:
        kernel_table = read_table(args.kernel_table)
        table = tuple(zip(numeric_values(kernel_table, kernel_table.iloc[:, 0]),
                          numeric_values(kernel_table, kernel_table.iloc[:, 1]),
                          strict=True))
    try:
        return TestConfig(
            grid_size=args.grid_size,
            n_terms=args.terms,
            mass_fraction=args.mass_fraction,
            max_terms=args.max_terms,
            kernel="custom" if table is not None else args.kernel,
            kernel_table=table,
            bandwidth=args.bandwidth,
            replications=args.replications,
            alphas=tuple(args.alpha or DEFAULT_ALPHAS),
            p_value_correction=args.p_value_correction,
            ad_variant=args.ad_variant,
        )
    except ValueError as error:
        raise CliError(str(error)) from error


def cmd_test(args: argparse.Namespace) -> int:
    """Run the requested tests on every requested series."""
    config = _test_config(args)
    seed = default_seed(args.seed)
    series_list = load_series(args.input, args.column, _split(args.covariates))
    methods = [MethodId.parse(m) for m in (args.method or ["HUCM", "HCCM"])]
    reports = [run_test(series, method, config, seed)
               for series in series_list for method in methods]
    for report in reports:
        for note in report.warnings:
            log.info(f"{report.series}/{report.method}: {note}")

    if args.format == "json":
        json.dump([r.to_dict() for r in reports], sys.stdout, indent=2)
        sys.stdout.write("\n")
    elif args.format == "csv":
        _report_rows(reports).to_csv(sys.stdout, index=False)
    else:
        frame = _report_rows(reports).drop(columns=["warnings"])
        sys.stdout.write(frame.to_string(index=False) + "\n")
        if len(series_list) > 1:
            sys.stdout.write("\nP-values\n")
            sys.stdout.write(p_value_table(reports).to_string() + "\n")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run a simulation grid and write the CSV table."""
    config = TestConfig(replications=args.replications)
    try:
        entries = load_grid(args.config)
    except OSError as error:
        msg = f"Cannot read '{args.config}': {error}"
        raise CliError(msg) from error
    table = run_grid(entries, seed=args.seed, config=config, mode=args.mode,
                     save_path=args.save, max_workers=args.workers)
    output = sys.stdout if args.output is None else args.output
    table.to_csv(output, index=False, columns=CSV_COLUMNS,
                 float_format="%.6g", lineterminator="\n")
    return EXIT_OK


def _named_spectrum(name: str, terms: int) -> Spectrum:
    if name.upper() == "VS":
        return vs_limit_spectrum(terms)
    return classical_limit_spectrum(name.upper(), terms)


def _data_spectrum(args: argparse.Namespace,
                   config: TestConfig) -> tuple[Spectrum, Any]:
    """The spectrum of the empirical or theoretical kernel."""
    if args.profile is not None:
        kernel = theoretical_kernel(variance_profile(args.profile),
                                    args.grid_size or 256)
        if args.weighted:
            kernel = ad_weight_kernel(kernel)
        return spectrum_of(kernel, config), kernel
    if args.input is None:
        msg = "Give an input file, --classical or --profile."
        raise CliError(msg)
    series = load_series(args.input, args.column)[0]
    method = MethodId.parse(args.method or "HUCM")
    if not method.heteroskedastic:
        msg = f"{method} has a data-independent law; use --classical."
        raise CliError(msg)
    kernel = empirical_kernel(series, method, config)
    return spectrum_of(kernel, config), kernel


def cmd_critical_values(args: argparse.Namespace) -> int:
    """Critical values of a classical or data-driven limit law."""
    config = _test_config(args)
    seed = default_seed(args.seed)
    if args.classical is not None:
        spectrum = _named_spectrum(args.classical, config.classical_terms)
    else:
        spectrum, _ = _data_spectrum(args, config)
        if not spectrum.weights.any():
            msg = "The kernel is zero (constant series); the law is degenerate."
            raise DegenerateInputError(msg)
    sample = sample_weighted_chisq(spectrum, config.replications, seed=seed)
    quantiles = sample.quantiles(config.alphas)
    frame = pd.DataFrame({"alpha": list(quantiles),
                          "critical_value": list(quantiles.values())})
    frame["source"] = spectrum.source
    frame["n_terms"] = spectrum.m
    frame["replications"] = sample.r
    frame["seed"] = seed
    _emit_frame(frame, args.format)
    return EXIT_OK


def cmd_eigen(args: argparse.Namespace) -> int:
    """Print the leading weights of a limit law."""
    config = _test_config(args)
    if args.classical is not None:
        spectrum = _named_spectrum(args.classical, args.terms or 10)
        if args.dump_kernel is not None:
            log.warning("--dump-kernel is ignored for closed-form spectra.")
    else:
        spectrum, kernel = _data_spectrum(args, config)
        if args.dump_kernel is not None:
            kernel.to_csv(args.dump_kernel)
            log.info(f"Wrote the {kernel.size}x{kernel.size} kernel to "
                     f"{args.dump_kernel}.")
    frame = pd.DataFrame({"k": np.arange(1, spectrum.m + 1),
                          "weight": spectrum.weights})
    frame["source"] = spectrum.source
    frame["dof"] = spectrum.dof
    if spectrum.clipped_mass:
        log.warning(f"Clipped negative eigenvalue mass: {spectrum.clipped_mass:.3g}")
    _emit_frame(frame, args.format)
    return EXIT_OK


def _split(value: str | None) -> list[str]:
    return [] if not value else [v.strip() for v in value.split(",") if v.strip()]


# ================================================================
#  Parser
# ================================================================
def _add_test_knobs(parser: argparse.ArgumentParser) -> None:
    knobs = parser.add_argument_group("test configuration")
    knobs.add_argument("-G", "--grid-size", type=int, default=None,
                       help="kernel grid points (default: min(N, 256))")
    knobs.add_argument("-m", "--terms", type=int, default=None,
                       help="number of eigenvalues (default: 99.9%% mass rule)")
    knobs.add_argument("--mass-fraction", type=float, default=0.999)
    knobs.add_argument("--max-terms", type=int, default=100)
    knobs.add_argument("--kernel", choices=["bartlett", "parzen"], default="bartlett",
                       help="lag window of the long-run variance")
    knobs.add_argument("--kernel-table", type=Path, default=None,
                       help="CSV of (u, K(u)) rows defining a custom lag window")
    knobs.add_argument("--bandwidth", type=float, default=None,
                       help="window parameter h (default: floor(N^(1/3)))")
    knobs.add_argument("-R", "--replications", type=int, default=10_000,
                       help="Monte Carlo draws of the limit law")
    knobs.add_argument("--alpha", type=float, action="append", default=None,
                       help="level of a reported critical value (repeatable)")
    knobs.add_argument("--p-value-correction", action="store_true",
                       help="use (1 + #exceedances)/(R + 1)")
    knobs.add_argument("--ad-variant", choices=["standard", "tied_down"],
                       default="standard")
    knobs.add_argument("--seed", type=int, default=None,
                       help="Monte Carlo seed (default: $HETCUSUM_SEED or 0)")


def build_parser() -> argparse.ArgumentParser:
    """The argument parser of the ``hetcusum`` command."""
    methods = [m.value for m in MethodId]
    parser = _Parser(prog="hetcusum",
                     description="CUSUM change point tests in the mean under "
                                 "heteroskedastic and dependent errors.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug messages")
    commands = parser.add_subparsers(dest="command", required=True,
                                     parser_class=_Parser)

    test = commands.add_parser("test", help="test series for a change in the mean")
    test.add_argument("input", type=Path, help="CSV/TSV file")
    test.add_argument("-c", "--column", action="append", default=None,
                      help="column name or 0-based index (repeatable)")
    test.add_argument("--method", action="append", type=str.upper, choices=methods,
                      help="test procedure (repeatable, default: HUCM and HCCM)")
    test.add_argument("--covariates", default=None,
                      help="comma-separated columns; test the OLS residuals")
    test.add_argument("--format", choices=["json", "csv", "table"], default="json")
    _add_test_knobs(test)
    test.set_defaults(handler=cmd_test)

    simulate = commands.add_parser("simulate", help="run a simulation grid")
    simulate.add_argument("config", type=Path, help="TOML grid configuration")
    simulate.add_argument("--seed", type=int, default=None,
                          help="top-level seed (default: $HETCUSUM_SEED or 0)")
    simulate.add_argument("-R", "--replications", type=int, default=10_000,
                          help="Monte Carlo draws of the limit laws")
    simulate.add_argument("-o", "--output", type=Path, default=None,
                          help="CSV output file (default: stdout)")
    simulate.add_argument("--save", type=Path, default=None,
                          help="sweep dataset (.nc, .cdf, .zarr, .pkl); resumes")
    simulate.add_argument("--mode", choices=["sequential", "parallel"],
                          default="sequential")
    simulate.add_argument("--workers", type=int, default=None)
    simulate.set_defaults(handler=cmd_simulate)

    for name, handler, text in [
            ("critical-values", cmd_critical_values, "critical values of a limit law"),
            ("eigen", cmd_eigen, "weights of a limit law")]:
        sub = commands.add_parser(name, help=text)
        sub.add_argument("input", type=Path, nargs="?", default=None,
                         help="CSV/TSV file for a data-driven law")
        sub.add_argument("-c", "--column", action="append", default=None)
        sub.add_argument("--method", type=str.upper, default=None,
                         choices=[m for m in methods if m.startswith("H")],
                         help="H method whose kernel is used (default: HUCM)")
        sub.add_argument("--classical", type=str.upper, choices=["CM", "AD", "VS"],
                         default=None, help="closed-form limit law")
        sub.add_argument("--profile", choices=list(PROFILES), default=None,
                         help="theoretical kernel of a variance profile")
        sub.add_argument("--weighted", action="store_true",
                         help="Anderson-Darling weighting of the theoretical kernel")
        sub.add_argument("--format", choices=["json", "csv", "table"],
                         default="table")
        if name == "eigen":
            sub.add_argument("--dump-kernel", type=Path, default=None,
                             help="write the kernel (.csv or .npy)")
        _add_test_knobs(sub)
        sub.set_defaults(handler=handler)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``hetcusum`` command."""
    parser = build_parser()
    args = parser.parse_args(argv)
    log.setLevel({0: logging.WARNING, 1: logging.INFO}.get(args.verbose,
                                                          logging.DEBUG))
    try:
        return args.handler(args)
    except DegenerateInputError as error:
        log.error(f"Degenerate input: {error}")
        return EXIT_DEGENERATE
    except (CliError, OSError, ValueError) as error:
        log.error(str(error))
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
