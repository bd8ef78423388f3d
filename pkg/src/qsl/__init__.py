"""Spectral and resolvent computations for Sturm-Liouville expressions with
distributional potentials, written through quasi-derivatives."""

from .boundary import (
    CanonicalK,
    Classification,
    TwoPointBC,
    canonical_to_two_point,
    classify,
    dirichlet,
    gamma_maps,
    separated_parameters,
)
from .coefficients import (
    CoefficientFamily,
    Coefficients,
    PiecewiseFunction,
    adjoint_coefficients,
    build_coefficients,
    l1_distance,
    l1_norm,
    mollified_family,
    ratios,
)
from .convergence import ConvergenceCase, ConvergenceReport, kernel_sup_distance, resolvent_gap_bound, run_case
from .errors import EigenvalueCollision, NumericalError, QSLError, ValidationError
from .ode_core import IntegratorConfig, fundamental_matrix, solve_cauchy
from .quasi_system import lagrange_defect, scalar_rhs_to_system, system_matrix
from .spectral import (
    CharacteristicFunction,
    characteristic_determinant,
    eigenvalues,
    generalized_resolvent_apply,
    green_function,
    green_matrix,
    resolvent_apply,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
