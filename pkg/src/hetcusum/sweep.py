"""Cartesian parameter sweeps with scalar results stored in an xarray Dataset."""
from __future__ import annotations

import contextlib
import shutil
import time
import warnings
from numbers import Number
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

import dill
import numpy as np
import pandas as pd
import xarray as xr

from hetcusum import log

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Callable, Iterator


RESERVED_ARGUMENTS = {"status", "duration"}
POSSIBLE_STATUSES = {"N", "C", "F", "S"}
SETTINGS = ("timeit", "auto_save")


# ================================================================
#  Storage formats
# ================================================================
@contextlib.contextmanager
def _zarr_v3_notes_silenced() -> Iterator[None]:
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".* Zarr format 3 specification.*")
        yield


def _write_zarr(data: xr.Dataset, path: Path) -> None:
    with _zarr_v3_notes_silenced():
        data.to_zarr(path)


def _read_zarr(path: Path) -> xr.Dataset:
    with _zarr_v3_notes_silenced():
        return xr.open_zarr(path)


def _write_pickle(data: xr.Dataset, path: Path) -> None:
    path.write_bytes(dill.dumps(data))


def _read_pickle(path: Path) -> xr.Dataset:
    return dill.loads(path.read_bytes())  # noqa: S301


def _write_netcdf(data: xr.Dataset, path: Path) -> None:
    data.to_netcdf(path)


# suffix -> (writer, reader)
STORAGE_FORMATS: dict[str, tuple[Callable, Callable]] = {
    ".zarr": (_write_zarr, _read_zarr),
    ".nc": (_write_netcdf, xr.open_dataset),
    ".cdf": (_write_netcdf, xr.open_dataset),
    ".pkl": (_write_pickle, _read_pickle),
}


def _storage_format(path: Path) -> tuple[Callable, Callable]:
    if path.suffix not in STORAGE_FORMATS:
        msg = f"The file extension '{path.suffix}' is not supported. "
        msg += f"Supported extensions are: {sorted(STORAGE_FORMATS)}."
        raise ValueError(msg)
    return STORAGE_FORMATS[path.suffix]


def _remove(path: Path) -> None:
    """Delete saved data; zarr stores are directories."""
    if path.is_dir():
        shutil.rmtree(path)
    elif path.exists():
        path.unlink()


class Sweep:

    """
    Evaluate a function on every cell of a parameter grid, one after another.

    Parameters
    ----------
    func : Callable
        Called with the parameters (and custom arguments) of a cell as
        keyword arguments. Returns a flat dictionary of scalars, or a single
        scalar (stored as ``result``).
    parameters : dict[str, list]
        The sweep coordinates: parameter name to list of values.
    save_path : Path | str | None (optional)
        Where to save the dataset ('.zarr', '.nc', '.cdf' or '.pkl'). If data
        exists at this path it is loaded, so unfinished cells can be resumed.
    timeit : bool, default=False
        Record the duration of every cell in the variable ``duration``.
    auto_save : bool, default=False
        Save the dataset after every finished cell.

    Description
    -----------
    Every cell has a status: N (not started), C (completed), F (failed) or
    S (skip). :meth:`run` evaluates the cells with a given status; a cell
    whose function raises is marked F and the sweep goes on.

    Examples
    --------
    .. code-block:: python

        from hetcusum.sweep import Sweep

        def cell(n: int, method: str) -> dict:
            return {"rate": 0.05, "mc_stderr": 0.005}

        sweep = Sweep(cell, {"n": [128, 512], "method": ["SUCM", "HCCM"]})
        sweep.run()
        sweep.to_frame()

    """

    def __init__(self,
                 func: Callable[..., Any],
                 parameters: dict[str, list],
                 save_path: Path | str | None = None,
                 *,
                 timeit: bool = False,
                 auto_save: bool = False) -> None:

        reserved = set(parameters) & RESERVED_ARGUMENTS
        if reserved:
            msg = f"The parameter names {sorted(reserved)} are reserved. "
            msg += "Please choose different names."
            raise ValueError(msg)

        self._func = func
        self._parameters = self._convert_parameters(parameters)
        self._save_path = None if save_path is None else Path(save_path)
        self._custom_arguments: set[str] = set()
        self._taken_names = set(self._parameters) | RESERVED_ARGUMENTS
        self._timeit = timeit
        self._auto_save = auto_save

        # load existing data to resume a sweep
        path_exists = self.save_path is not None and self.save_path.exists()
        self._data = self._load_data_from_file() if path_exists else self._create_data()

        # the setters write the settings into the dataset attributes
        self.timeit = self._timeit
        self.auto_save = self._auto_save

    def add_custom_argument(self, name: str, default_value: Any) -> None:  # noqa: ANN401
        """
        Pass an extra per-cell argument to the function.

        The values live in the data variable ``name`` and can be changed
        cell by cell before running.

        Examples
        --------
        .. code-block:: python

            sweep = Sweep(func, {"n": [128, 512]})
            sweep.add_custom_argument("seed", 0)
            sweep.data["seed"].data[1] = 7

        """
        if name in self._taken_names:
            msg = f"Argument '{name}' is taken. Please choose a different name."
            raise ValueError(msg)
        self._custom_arguments.add(name)
        self._taken_names.add(name)
        # a resumed sweep keeps the stored values
        if name in self.data.data_vars:
            return
        self.data[name] = xr.DataArray(
            data=np.full(self.shape, default_value),
            dims=tuple(self.parameters),
        )

    # ================================================================
    #  Running
    # ================================================================
    def run(self,
            status: str | list[str] | None = "N",
            max_workers: int | None = None,
            ) -> xr.Dataset:
        """
        Evaluate all cells with the given status.

        Parameters
        ----------
        status : str | list[str] | None, default="N"
            Status (or statuses) of the cells to run. None runs every cell.
        max_workers : int | None (optional)
            Only used by :class:`~hetcusum.sweep_parallel.SweepParallel`.

        Returns
        -------
        xr.Dataset
            The dataset with all results.

        """
        if max_workers is not None:
            msg = f"Argument 'max_workers={max_workers}' has no effect in the "
            msg += "sequential mode. Use mode='parallel' to run cells in parallel."
            log.warning(msg)

        indices = self._get_indices(status)
        remaining = len(indices[0])
        log.info(f"Found {remaining} cells to run.")
        for index in zip(*indices, strict=True):
            log.debug(f"{remaining} cells left.")
            remaining -= 1
            self._run_single(index)
        return self.data

    def _get_indices(self, status: str | list[str] | None) -> np.ndarray:
        """Indices of the cells with the given status."""
        status = status or list(POSSIBLE_STATUSES)
        if isinstance(status, str):
            status = [status]
        return np.argwhere(np.isin(self.status.data, status)).T

    def _get_kwargs(self, index: tuple[int, ...]) -> dict[str, Any]:
        """Keyword arguments of the cell at ``index``."""
        kwargs = {name: _native(self.parameters[name][i])
                  for name, i in zip(self.parameters, index, strict=True)}
        kwargs.update({name: _native(self.data[name].data[index])
                       for name in sorted(self.custom_arguments)})
        return kwargs

    def _run_single(self, index: tuple[int, ...]) -> None:
        kwargs = self._get_kwargs(index)
        log.debug(f"Starting: {kwargs}")
        start = time.time()
        try:
            results = self.func(**kwargs)
            status = "C"
        except Exception as error:  # noqa: BLE001
            log.error(f"Error in cell {kwargs}: {error}")
            results = {}
            status = "F"
        self._finish(index, status, results, time.time() - start)

    def _finish(self,
                index: tuple[int, ...],
                status: str,
                results: Any,  # noqa: ANN401
                duration: float) -> None:
        """Store the outcome of one cell."""
        self._set_status_at(index, status)
        self._set_results_at(index, results)
        if self.timeit:
            self.data["duration"].data[index] = duration
            log.debug(f"Cell took {duration:.2f} seconds.")
        if self.auto_save:
            self.save(mode="w")

    # ----------------------------------------------------------------
    #  Results
    # ----------------------------------------------------------------
    def _set_results_at(self, index: tuple[int, ...], results: Any) -> None:  # noqa: ANN401
        if not isinstance(results, dict):
            results = {"result": results}
        for name, value in results.items():
            if name in self._taken_names:
                log.error(f"Result name '{name}' collides with a parameter or "
                          "argument; the value is not stored.")
                continue
            if not isinstance(value, Number | np.number | np.bool_):
                log.error(f"Result '{name}' is not a scalar "
                          f"({type(value).__name__}); the value is not stored.")
                continue
            if name not in self.data.data_vars:
                self.data[name] = _empty_variable(self.shape, np.asarray(value).dtype,
                                                  tuple(self.parameters))
            variable = self.data[name]
            if not np.can_cast(np.asarray(value).dtype, variable.dtype):
                self.data[name] = variable.astype(float)
            self.data[name].data[index] = value

    # ================================================================
    #  Data handling
    # ================================================================
    def _create_data(self) -> xr.Dataset:
        data = xr.Dataset(
            data_vars={"status": (tuple(self.parameters),
                                  np.full(self.shape, "N", dtype=str))},
            coords=self.parameters,
        )
        data["status"].attrs = {
            "long_name": "Cell status.",
            "values": "N: not started, C: completed, F: failed, S: skip",
        }
        data.attrs = {"created_at": time.strftime("%Y-%m-%d %H:%M:%S")}
        return data

    def _load_data_from_file(self) -> xr.Dataset:
        log.info(f"Found data at {self.save_path}. Loading data.")
        data = self.load(self.save_path)

        if not set(self.parameters).issubset(data.coords):
            msg = f"Parameter mismatch: expected {sorted(self.parameters)}, "
            msg += f"got {sorted(data.coords)}."
            raise ValueError(msg)

        for name, values in self.parameters.items():
            stored = np.asarray(data.coords[name].values)
            if np.issubdtype(values.dtype, np.number):
                mismatch = (stored.shape != values.shape
                            or not np.allclose(values, stored))
            else:
                mismatch = (stored.shape != values.shape
                            or not all(str(a) == str(b)
                                       for a, b in zip(values, stored, strict=True)))
            if mismatch:
                msg = f"Parameter mismatch for '{name}': expected {values.tolist()}, "
                msg += f"got {stored.tolist()}."
                raise ValueError(msg)

        # settings stored with the data win over the constructor arguments
        for setting in SETTINGS:
            if setting in data.attrs:
                setattr(self, f"_{setting}", bool(data.attrs[setting]))
        return data.load()

    def save(self, mode: Literal["x", "w"] = "x") -> None:
        """
        Save the dataset to ``save_path``.

        Parameters
        ----------
        mode : "x" | "w", default="x"
            "x" raises a FileExistsError if data exists, "w" overwrites it.

        """
        if self.save_path is None:
            msg = "The save path is not set. Set the save path before saving."
            raise ValueError(msg)
        write, _ = _storage_format(self.save_path)
        if mode == "w":
            _remove(self.save_path)
        elif self.save_path.exists():
            msg = f"There is already data at {self.save_path}. "
            msg += "Use mode='w' to overwrite it."
            raise FileExistsError(msg)
        write(self.data, self.save_path)

    @staticmethod
    def load(save_path: Path | str) -> xr.Dataset:
        """Load a saved sweep dataset ('.zarr', '.nc', '.cdf' or '.pkl')."""
        save_path = Path(save_path)
        _, read = _storage_format(save_path)
        return read(save_path)

    def to_frame(self, status: str | list[str] | None = "C") -> pd.DataFrame:
        """
        The cells with the given status as a flat table.

        One row per cell, one column per parameter, custom argument and
        result.
        """
        frame = self.data.to_dataframe().reset_index()
        if status is None:
            return frame
        status = [status] if isinstance(status, str) else status
        return frame[frame["status"].isin(status)].reset_index(drop=True)

    # ================================================================
    #  Status handling
    # ================================================================
    def reset_status(self, states: str | list[str] | None = None) -> None:
        """
        Set the status of cells back to 'N'.

        Parameters
        ----------
        states : str | list[str] | None (optional)
            The statuses to reset. Default: 'C' and 'F'.

        """
        states = states or ["C", "F"]
        if isinstance(states, str):
            states = [states]
        if not set(states).issubset(POSSIBLE_STATUSES):
            msg = f"Invalid states {states}. "
            msg += f"Expected a subset of {sorted(POSSIBLE_STATUSES)}."
            raise ValueError(msg)
        for state in states:
            self._set_status_at(np.where(self.status.data == state), "N")

    def _set_status_at(self, index: tuple, status: str) -> None:
        self.status.data[index] = status

    # ================================================================
    #  Conversion
    # ================================================================
    @staticmethod
    def _convert_parameters(parameters: dict[str, list]) -> dict[str, np.ndarray]:
        converted = {}
        for name, values in parameters.items():
            if isinstance(values, np.ndarray):
                converted[name] = values
            elif all(isinstance(v, Number | np.generic) and not isinstance(v, bool)
                     for v in values):
                converted[name] = np.array(values)
            else:
                converted[name] = np.array(values, dtype=object)
        return converted

    # ================================================================
    #  Properties
    # ================================================================
    @property
    def func(self) -> Callable[..., Any]:
        """The function evaluated on every cell."""
        return self._func

    @property
    def parameters(self) -> dict[str, np.ndarray]:
        """The sweep coordinates."""
        return self._parameters

    @property
    def custom_arguments(self) -> set[str]:
        """Names of the extra per-cell arguments."""
        return self._custom_arguments

    @property
    def save_path(self) -> Path | None:
        """Where the dataset is saved."""
        return self._save_path

    @property
    def shape(self) -> tuple[int, ...]:
        """The shape of the parameter grid."""
        return tuple(len(values) for values in self.parameters.values())

    @property
    def data(self) -> xr.Dataset:
        """The sweep dataset."""
        return self._data

    @property
    def status(self) -> xr.DataArray:
        """The status of every cell (N, C, F or S)."""
        return self.data["status"]

    @property
    def auto_save(self) -> bool:
        """Whether the dataset is saved after every finished cell."""
        return self._auto_save

    @auto_save.setter
    def auto_save(self, auto_save: bool) -> None:
        self._auto_save = auto_save
        self.data.attrs["auto_save"] = int(auto_save)

    @property
    def timeit(self) -> bool:
        """Whether the duration of every cell is recorded."""
        return self._timeit

    @timeit.setter
    def timeit(self, timeit: bool) -> None:
        self._timeit = timeit
        self.data.attrs["timeit"] = int(timeit)
        if timeit and "duration" not in self.data.data_vars:
            self.data["duration"] = xr.DataArray(
                data=np.full(self.shape, np.nan),
                dims=tuple(self.parameters),
                attrs={"long_name": "Duration of the cell in seconds."},
            )

    @property
    def duration(self) -> xr.DataArray:
        """Duration of every cell in seconds (needs ``timeit``)."""
        if not self.timeit:
            msg = "Timeit is disabled. "
            msg += "Set 'timeit' to True before accessing the duration."
            raise AttributeError(msg)
        return self.data["duration"]


def _native(value: Any) -> Any:  # noqa: ANN401
    """Convert numpy scalars to Python scalars."""
    if isinstance(value, np.generic):
        return value.item()
    return value


def _empty_variable(shape: tuple[int, ...],
                    dtype: np.dtype,
                    dims: tuple[str, ...]) -> xr.DataArray:
    if np.issubdtype(dtype, np.bool_):
        fill_value = False
    elif np.issubdtype(dtype, np.integer):
        fill_value = np.iinfo(dtype).min
    else:
        dtype, fill_value = np.dtype(float), np.nan
    return xr.DataArray(np.full(shape, fill_value, dtype=dtype), dims=dims)


def make_sweep(func: Callable[..., Any],
               parameters: dict[str, list],
               mode: Literal["sequential", "parallel"] = "sequential",
               save_path: Path | str | None = None,
               **kwargs: bool) -> Sweep:
    """
    Create a sweep runner.

    Parameters
    ----------
    func, parameters, save_path
        See :class:`Sweep`.
    mode : "sequential" | "parallel", default="sequential"
        Run cells one after another or in worker processes.
    **kwargs : bool
        ``timeit`` and ``auto_save``.

    """
    if mode == "sequential":
        return Sweep(func, parameters, save_path, **kwargs)
    if mode == "parallel":
        from hetcusum.sweep_parallel import SweepParallel
        return SweepParallel(func, parameters, save_path, **kwargs)
    msg = f"Unknown mode '{mode}'. Supported modes are: 'sequential', 'parallel'."
    raise ValueError(msg)
