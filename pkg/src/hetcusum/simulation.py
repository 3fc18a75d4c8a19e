"""Rejection rates of the tests over simulated data, and simulation grids."""
from __future__ import annotations

import functools
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
import pandas as pd

from hetcusum import log
from hetcusum.config import TestConfig, default_seed
from hetcusum.dgp import DgpSpec
from hetcusum.errors import DegenerateInputError, GridConfigError
from hetcusum.procedures import MethodId, reference_limit_sample, run_test
from hetcusum.sweep import make_sweep

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

if TYPE_CHECKING:  # pragma: no cover
    from hetcusum.sweep import Sweep

MIN_REPS = 100
CSV_COLUMNS = ["dgp", "N", "method", "level", "reps", "rate", "mc_stderr", "seed"]


def derive_seed(*keys: int) -> int:
    """A 32-bit seed determined by a sequence of integer keys."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(1)
    return int(state[0])


@dataclass(frozen=True)
class RejectionRate:

    """
    Share of replications whose P-value fell below the level.

    Parameters
    ----------
    rate : float
        Rejections over valid replications (NaN if none was valid).
    mc_stderr : float
        Binomial standard error sqrt(rate (1 - rate) / valid).
    reps : int
        Requested replications.
    n_failed : int
        Replications with a degenerate (e.g. constant) series.

    """

    rate: float
    mc_stderr: float
    reps: int
    n_failed: int = 0


def rejection_rate(spec: DgpSpec,
                   method: MethodId | str,
                   level: float = 0.05,
                   reps: int = 1000,
                   seed: int | None = None,
                   config: TestConfig | None = None) -> RejectionRate:
    """
    Estimate the rejection probability of a test under a DGP.

    Replication ``r`` draws its data from the ``r``-th child of
    ``SeedSequence(seed)``. All replications share one Monte Carlo seed for
    the limit law, so the S and VS methods sample their law only once.

    Parameters
    ----------
    spec : DgpSpec
        The data-generating process (including N).
    method : MethodId | str
        The test.
    level : float, default=0.05
        Nominal level; a replication rejects if its P-value is below it.
    reps : int, default=1000
        Number of replications (at least 100).
    seed : int | None (optional)
        Top-level seed. Default: ``HETCUSUM_SEED`` or 0.
    config : TestConfig | None (optional)
        Knobs of the test.

    """
    if reps < MIN_REPS:
        msg = f"At least {MIN_REPS} replications are needed, got {reps}."
        raise ValueError(msg)
    if not 0 < level < 1:
        msg = f"The level must lie in (0, 1), got {level}."
        raise ValueError(msg)
    method = MethodId.parse(method)
    config = config or TestConfig()
    seed = default_seed(seed)
    mc_seed = derive_seed(seed, 0)
    children = np.random.SeedSequence(seed).spawn(reps)

    limit_sample = None
    if not method.heteroskedastic:
        limit_sample = reference_limit_sample(
            method.functional, config.classical_terms, config.replications, mc_seed)

    rejections = 0
    n_failed = 0
    for child in children:
        series = spec.generate(child)
        try:
            report = run_test(series, method, config, mc_seed,
                              limit_sample=limit_sample)
        except DegenerateInputError:
            n_failed += 1
            continue
        rejections += report.p_value < level

    valid = reps - n_failed
    if n_failed:
        log.warning(f"{n_failed} of {reps} replications of {spec.label} were "
                    "degenerate and are not counted.")
    if valid == 0:
        return RejectionRate(math.nan, math.nan, reps, n_failed)
    rate = rejections / valid
    stderr = math.sqrt(rate * (1.0 - rate) / valid)
    log.debug(f"{method} on {spec.label}, N={spec.n}: rate={rate:.4f}")
    return RejectionRate(rate, stderr, reps, n_failed)


# ================================================================
#  Grid configuration
# ================================================================
@dataclass(frozen=True)
class GridEntry:

    """One ``[[cell]]`` table: the product of its DGPs, methods and sizes."""

    dgps: tuple[DgpSpec, ...]
    methods: tuple[MethodId, ...]
    ns: tuple[int, ...]
    level: float
    reps: int
    seed: int | None = None

    @property
    def size(self) -> int:
        """Number of cells."""
        return len(self.dgps) * len(self.methods) * len(self.ns)


def _as_list(value: Any) -> list:  # noqa: ANN401
    return value if isinstance(value, list) else [value]


def _parse_entry(table: dict[str, Any]) -> GridEntry:
    known = {"dgp", "method", "n", "level", "reps", "seed"}
    unknown = set(table) - known
    if unknown:
        msg = f"unknown keys {sorted(unknown)}"
        raise ValueError(msg)
    missing = {"dgp", "method", "n"} - set(table)
    if missing:
        msg = f"missing keys {sorted(missing)}"
        raise ValueError(msg)
    ns = tuple(int(n) for n in _as_list(table["n"]))
    dgps = tuple(DgpSpec.from_dict(d) for d in _as_list(table["dgp"]))
    methods = tuple(MethodId.parse(m) for m in _as_list(table["method"]))
    level = float(table.get("level", 0.05))
    reps = int(table.get("reps", 1000))
    if not 0 < level < 1:
        msg = f"level must lie in (0, 1), got {level}"
        raise ValueError(msg)
    if reps < MIN_REPS:
        msg = f"reps must be at least {MIN_REPS}, got {reps}"
        raise ValueError(msg)
    for dgp in dgps:
        for n in ns:
            dgp.with_n(n)
    seed = table.get("seed")
    return GridEntry(dgps, methods, ns, level, reps,
                     None if seed is None else int(seed))


def parse_grid(data: dict[str, Any]) -> list[GridEntry]:
    """
    Validate a parsed grid configuration.

    Invalid entries are skipped with a warning naming their index.

    Raises
    ------
    GridConfigError
        If the grid has no usable entry.

    """
    tables = data.get("cell", [])
    if not tables:
        msg = "empty grid: the configuration has no [[cell]] entries."
        raise GridConfigError(msg)
    entries, problems = [], []
    for index, table in enumerate(tables):
        try:
            entries.append(_parse_entry(table))
        except (ValueError, TypeError, KeyError) as error:
            problems.append((index, str(error)))
            log.warning(f"Skipping grid entry {index}: {error}")
    if not entries:
        msg = "No usable grid entries: "
        msg += "; ".join(f"entry {i}: {reason}" for i, reason in problems)
        raise GridConfigError(msg, problems)
    log.info(f"Loaded {len(entries)} grid entries "
             f"({sum(e.size for e in entries)} cells).")
    return entries


def load_grid(path: Path | str) -> list[GridEntry]:
    """Read a TOML grid configuration file."""
    with Path.open(Path(path), "rb") as file:
        data = tomllib.load(file)
    return parse_grid(data)


# ================================================================
#  Running grids
# ================================================================
def _grid_cell(entry: int,
               dgp: str,
               method: str,
               n: int,
               seed: int,
               level: float,
               reps: int,
               specs: dict[str, DgpSpec],
               config: TestConfig) -> dict[str, float | int]:
    """Evaluate one grid cell (used as the sweep function)."""
    del entry  # only a sweep coordinate
    result = rejection_rate(specs[dgp].with_n(n), method, level, reps, seed, config)
    return {"rate": result.rate, "mc_stderr": result.mc_stderr,
            "n_failed": result.n_failed}


def _cells(entries: list[GridEntry]) -> list[tuple[int, str, str, int]]:
    """All (entry, dgp label, method, n) cells in file order."""
    return [(e, dgp.label, method.value, n)
            for e, entry in enumerate(entries)
            for dgp in entry.dgps
            for method in entry.methods
            for n in entry.ns]


def build_grid_sweep(entries: list[GridEntry],
                     seed: int | None = None,
                     config: TestConfig | None = None,
                     mode: Literal["sequential", "parallel"] = "sequential",
                     save_path: Path | str | None = None) -> Sweep:
    """
    Lay a grid out as one sweep over (entry, dgp, method, n).

    Combinations that belong to no entry are marked 'S' (skip). Every cell
    gets a seed derived from the top-level seed (or the entry's own seed)
    and its position in the entry.
    """
    seed = default_seed(seed)
    cells = _cells(entries)
    specs = {dgp.label: dgp for entry in entries for dgp in entry.dgps}
    parameters = {
        "entry": list(range(len(entries))),
        "dgp": list(dict.fromkeys(cell[1] for cell in cells)),
        "method": list(dict.fromkeys(cell[2] for cell in cells)),
        "n": sorted({cell[3] for cell in cells}),
    }
    func = functools.partial(_grid_cell, specs=specs, config=config or TestConfig())
    sweep = make_sweep(func, parameters, mode=mode, save_path=save_path)
    sweep.add_custom_argument("seed", 0)
    sweep.add_custom_argument("level", 0.05)
    sweep.add_custom_argument("reps", 0)

    position = {name: {value: i for i, value in enumerate(values)}
                for name, values in parameters.items()}
    used = np.zeros(sweep.shape, dtype=bool)
    for k, cell in enumerate(cells):
        entry = entries[cell[0]]
        index = tuple(position[name][value]
                      for name, value in zip(parameters, cell, strict=True))
        used[index] = True
        base = entry.seed if entry.seed is not None else derive_seed(seed, cell[0])
        sweep.data["seed"].data[index] = derive_seed(base, k)
        sweep.data["level"].data[index] = entry.level
        sweep.data["reps"].data[index] = entry.reps
    status = sweep.status.data
    status[~used & (status == "N")] = "S"
    return sweep


def grid_table(sweep: Sweep, entries: list[GridEntry]) -> pd.DataFrame:
    """
    The CSV table of a finished grid sweep, one row per cell in file order.

    Failed cells get a NaN rate.
    """
    frame = sweep.to_frame(status=None).set_index(["entry", "dgp", "method", "n"])
    rows = []
    for cell in _cells(entries):
        row = frame.loc[cell]
        done = row["status"] == "C"
        rows.append({
            "dgp": cell[1],
            "N": cell[3],
            "method": cell[2],
            "level": float(row["level"]),
            "reps": int(row["reps"]),
            "rate": float(row["rate"]) if done else math.nan,
            "mc_stderr": float(row["mc_stderr"]) if done else math.nan,
            "seed": int(row["seed"]),
        })
    failed = sum(1 for r in rows if math.isnan(r["rate"]))
    if failed:
        log.warning(f"{failed} grid cell(s) did not complete.")
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def run_grid(entries: list[GridEntry],
             seed: int | None = None,
             config: TestConfig | None = None,
             mode: Literal["sequential", "parallel"] = "sequential",
             save_path: Path | str | None = None,
             max_workers: int | None = None) -> pd.DataFrame:
    """
    Run every cell of a grid and return the result table.

    With a ``save_path`` the sweep dataset is saved after every cell, and
    a rerun with the same path resumes the unfinished cells.
    """
    sweep = build_grid_sweep(entries, seed, config, mode, save_path)
    if save_path is not None:
        sweep.auto_save = True
    sweep.run(max_workers=max_workers if mode == "parallel" else None)
    return grid_table(sweep, entries)
