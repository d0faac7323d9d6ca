"""q-scale functions of spectrally negative Levy processes with
matrix-exponential jumps."""

from .errors import (ConvergenceError, DegenerateRootError, DomainError,
                     InvalidTransformError, ModelError, NumericalError,
                     ScaleFnError)
from .levy import LevyModel, RootData, laplace_exponent, largest_root, phi_q
from .medist import (MERep, RationalLST, companion_from_rational, me_density,
                     me_from_rational, me_lst, me_sample, me_survival,
                     standardize, validate)
from .solver import (BVSolution, UVSolution, hitting_probability,
                     scale_derivative, scale_function, scale_integral, solve,
                     solve_psi_bv, solve_psi_uv)

__version__ = "0.1.0"

__all__ = [
    "ScaleFnError",
    "ConvergenceError",
    "DegenerateRootError",
    "DomainError",
    "InvalidTransformError",
    "ModelError",
    "NumericalError",
    "LevyModel",
    "RootData",
    "laplace_exponent",
    "largest_root",
    "phi_q",
    "MERep",
    "RationalLST",
    "companion_from_rational",
    "standardize",
    "me_from_rational",
    "me_density",
    "me_survival",
    "me_lst",
    "me_sample",
    "validate",
    "BVSolution",
    "UVSolution",
    "solve",
    "solve_psi_bv",
    "solve_psi_uv",
    "scale_function",
    "scale_derivative",
    "scale_integral",
    "hitting_probability",
]
