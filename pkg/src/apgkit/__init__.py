"""apgkit: projected and accelerated projected gradient methods for
affine-quadratic problems, with limit identification certified against a
dense solution-set oracle, an exact-rational cone/affine two-limit
demonstration, and a DCT-constrained image-recovery study."""

__version__ = "0.1.0"

from .operators import (AffineMap, AffineSubspace, LinearMap, dct2d_map,
                        dense_map, identity_map, operator_norm_sq,
                        project_affine, project_orthant, row_sampling_map,
                        sampled_orthonormal_rows)
from .problem import (AffineQuadraticProblem, Diagnostics, SolutionSet,
                      best_approximation, closedness_diagnostics, dist_to_S,
                      energy_identity_check, make_random_problem, oracle_cap,
                      prox_grad_operator, solve_solution_set)
from .schedules import (Schedule, chambolle_dossal, classical_fista,
                        custom_schedule, linear_half, schedule_from_csv,
                        theta_family, validate_parameter_sequence)
from .solvers import (SolverTrace, StopRule, apg_iterates, gradient_mapping,
                      pgm_iterates, run_apg, run_pgm, shadow_decomposition,
                      stop_after, stop_on_gap, stop_on_gradmap)
from .cone_affine import (apg_cone_iterate, aux_sequence, detect_M_and_limit,
                          map_closed_form, separation_certificate)
from .inpaint import (InpaintInstance, Reconstruction, make_instance, psnr,
                      reconstruct, synthetic_image)
from .descriptors import problem_from_json, problem_to_json

__all__ = [name for name in dir() if not name.startswith("_")]
