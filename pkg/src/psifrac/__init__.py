"""psi-Hilfer fractional operators, a Darboux problem solver and
Ulam-Hyers(-Rassias) stability certificates on a rectangle."""

__version__ = "0.1.0"

from psifrac.darboux import DarbouxProblem, GridTriple, IterationLog, picard_solve, residual
from psifrac.exceptions import (
    ConfigError,
    ContractionError,
    ConvergenceError,
    DomainError,
    PsifracError,
    ValidationError,
)
from psifrac.exprdsl import as_function, parse
from psifrac.fracops import (
    FracOrder,
    frac_integral_1d,
    frac_integral_2d,
    frac_integral_axis,
    hilfer_derivative_1d,
    hilfer_partial_2d,
    reduce_special_case,
)
from psifrac.grid import Grid2D, GridFn
from psifrac.gronwall import gronwall_bound, verify_gronwall
from psifrac.psi import PsiFunction, builtin
from psifrac.specfun import gamma, mittag_leffler
from psifrac.stability import RassiasWeight, uh_certify, uhr_certify, uh_constants, uhr_constants

__all__ = [
    "__version__",
    "ConfigError",
    "ContractionError",
    "ConvergenceError",
    "DarbouxProblem",
    "DomainError",
    "FracOrder",
    "Grid2D",
    "GridFn",
    "GridTriple",
    "IterationLog",
    "PsiFunction",
    "PsifracError",
    "RassiasWeight",
    "ValidationError",
    "as_function",
    "builtin",
    "frac_integral_1d",
    "frac_integral_2d",
    "frac_integral_axis",
    "gamma",
    "gronwall_bound",
    "hilfer_derivative_1d",
    "hilfer_partial_2d",
    "mittag_leffler",
    "parse",
    "picard_solve",
    "reduce_special_case",
    "residual",
    "uh_certify",
    "uh_constants",
    "uhr_certify",
    "uhr_constants",
    "verify_gronwall",
]
