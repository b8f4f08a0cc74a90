"""Real stationary states of the cubic NLSE on a ring with a point defect."""

from .boundary import (DeltaBC, DeltaPrimeBC, GeneralBC, SubsetBC, TraceValues,
                       delta_from_trace, delta_prime_from_trace,
                       map_delta_to_delta_prime, map_to_subsets,
                       residual_delta, residual_delta_prime, residual_general,
                       trace)
from .elliptic import (circle_modulus, complete_E, complete_K, jacobi,
                       jacobi_derivative, period)
from .linear_limit import (LinearSolution, linear_spectrum_grid,
                           solve_linear_delta, solve_linear_delta_prime)
from .ring_limit import (PeriodicSolution, constant_and_plane_wave_spectrum,
                         emergence_points, solve_periodic)
from .solutions import (RingConfig, SolutionSpec, coefficients, evaluate,
                        evaluate_derivative, nlse_residual, norm_squared,
                        scaling_family)
from .spectrum import (SolveProblem, classify_regions, continue_in_g,
                       detect_bubble, map_surface_to_delta_prime, newton_solve,
                       parity_check, residual_system, sweep)
from .surface import MappedSurface, SpectrumSurface

__version__ = "0.1.0"
