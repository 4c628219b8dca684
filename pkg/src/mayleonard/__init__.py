"""Asymmetric May-Leonard dynamics.

Closed-form ray solutions of the three-species competitive system, the
admissibility constraint solver that produces them (any two of the nine data
slots may be unknown), and fixed-step plus adaptive integrators that certify
every closed-form claim numerically.
"""

from .closed_form import (AdmissibilityReport, SpecialSolution, VerifyReport,
                          blow_up_time, check_admissibility, eval_special,
                          eval_y_special, linear_forms, make_special,
                          period_of, t_of_tau, tau_of_t, transform_x_to_y,
                          transform_y_to_x, verify_special)
from .constraints import (MultiAffineCoeffs, OutcomeKind, ProblemInstance,
                          Slot, SolveOutcome, assignment_to_system,
                          extract_coeffs, random_admissible_instance,
                          residuals, solve_pair)
from .errors import (ConfigError, ExhaustedRetriesError, IllConditionedError,
                     MayLeonardError, OverflowSignal, PoleError,
                     RoundoffFloorError, SingularMatrixError, ZeroEtaError)
from .integrate import (StepControl, Termination, Trajectory, adaptive_45,
                        estimate_order, euler_fixed, integrate_on_grid,
                        rk4_fixed)
from .model import (ModelParams, SymmetricParams, interior_equilibrium,
                    jacobian, reduce_symmetric, rescale_to_unit_eta, rhs,
                    rhs_transformed)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport", "ConfigError", "ExhaustedRetriesError",
    "IllConditionedError", "MayLeonardError", "ModelParams",
    "MultiAffineCoeffs", "OutcomeKind", "OverflowSignal", "PoleError",
    "ProblemInstance", "RoundoffFloorError", "SingularMatrixError", "Slot",
    "SolveOutcome", "SpecialSolution", "StepControl", "SymmetricParams",
    "Termination", "Trajectory", "VerifyReport", "ZeroEtaError",
    "adaptive_45", "assignment_to_system", "blow_up_time",
    "check_admissibility", "estimate_order", "euler_fixed", "eval_special",
    "eval_y_special", "extract_coeffs", "integrate_on_grid",
    "interior_equilibrium", "jacobian", "linear_forms", "make_special",
    "period_of", "random_admissible_instance", "reduce_symmetric",
    "rescale_to_unit_eta", "residuals", "rhs", "rhs_transformed",
    "rk4_fixed", "solve_pair", "t_of_tau", "tau_of_t", "transform_x_to_y",
    "transform_y_to_x", "verify_special",
]
