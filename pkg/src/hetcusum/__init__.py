"""
Change point tests in the mean under heteroskedastic and dependent errors.

CUSUM based Cramér-von Mises and Anderson-Darling statistics are calibrated
against weighted chi-square limit laws estimated from the data. A simulation
harness evaluates the size and power of the tests over parameter grids.
"""
from typing import TYPE_CHECKING

from lazypimp import setup

# ================================================================
#  Disable lazy loading for type checking
# ================================================================
if TYPE_CHECKING:  # pragma: no cover
    from .config import TestConfig, default_seed
    from .dgp import DgpSpec
    from .errors import (
        ConvergenceError,
        DegenerateInputError,
        EigenSolverError,
        GridConfigError,
        QuadratureError,
        RankDeficiencyError,
    )
    from .kernels import CovKernel, VarianceProfile, theoretical_kernel
    from .logger import log
    from .lrv import LrvConfig
    from .montecarlo import LimitSample, sample_weighted_chisq
    from .procedures import MethodId, TestReport, run_test
    from .regression import RegressionSpec, nls_residuals, ols_residuals
    from .series import MeanSpec, Series, cusum_process
    from .simulation import RejectionRate, load_grid, rejection_rate, run_grid
    from .spectrum import Spectrum, eigenvalues
    from .sweep import Sweep, make_sweep
    from .sweep_parallel import SweepParallel

# ================================================================
#  Setup lazy loading
# ================================================================

all_modules_by_origin = { }

all_imports_by_origin = {
    "hetcusum.config": ["TestConfig", "default_seed"],
    "hetcusum.dgp": ["DgpSpec"],
    "hetcusum.errors": ["ConvergenceError", "DegenerateInputError",
                        "EigenSolverError", "GridConfigError",
                        "QuadratureError", "RankDeficiencyError"],
    "hetcusum.kernels": ["CovKernel", "VarianceProfile", "theoretical_kernel"],
    "hetcusum.logger": ["log"],
    "hetcusum.lrv": ["LrvConfig"],
    "hetcusum.montecarlo": ["LimitSample", "sample_weighted_chisq"],
    "hetcusum.procedures": ["MethodId", "TestReport", "run_test"],
    "hetcusum.regression": ["RegressionSpec", "nls_residuals", "ols_residuals"],
    "hetcusum.series": ["MeanSpec", "Series", "cusum_process"],
    "hetcusum.simulation": ["RejectionRate", "load_grid", "rejection_rate",
                            "run_grid"],
    "hetcusum.spectrum": ["Spectrum", "eigenvalues"],
    "hetcusum.sweep": ["Sweep", "make_sweep"],
    "hetcusum.sweep_parallel": ["SweepParallel"],
}

setup(__name__, all_modules_by_origin, all_imports_by_origin)
