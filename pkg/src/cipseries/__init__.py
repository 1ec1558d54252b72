"""Truncated exponential-polynomial series in the wavenumber for the
k-differentiated log-field equation of inverse medium scattering.

Submodules: ``basis`` (orthonormal band basis), ``galerkin`` (D, S, B),
``projection`` (coefficients, projection errors, decay fits), ``fields``
(u -> p -> v, stencils, recovery of a), ``scattering`` (forward solver and
Cauchy data), ``residual`` (h_N - h decay study), ``cli``.
"""
__version__ = "0.1.0"

from .basis import Band, OrthonormalBasis, build_basis, eval_basis, eval_basis_deriv, gram_residual
from .errors import (BranchTrackingError, CipError, ConditioningError, ConfigError, DataIOError,
                     NumericalError, VanishingFieldError)
from .galerkin import GalerkinSystem, assemble_system, bullet
from .projection import (coefficient_decay_fit, fourier_coeffs, h1_projection_error,
                         l2_projection_error, synthesize)
from .fields import SpaceGrid, p_to_v, recover_a, total_to_p
from .scattering import Medium, extract_cauchy_data, solve_lippmann_schwinger
from .residual import compute_h, compute_hN, decay_study, manufactured_problem, solver_problem
