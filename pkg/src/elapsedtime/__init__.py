"""Numerical schemes for the nonlinear elapsed-time (age-structured) neuron
population equations, with instantaneous transmission or distributed delay."""

from .ddm import ddm_run, ddm_run_exponential_ode, ddm_step
from .errors import (CFLViolationError, DomainTruncationError, ElapsedTimeError,
                     InvalidParameterError, NonFiringHazardError, OracleDomainError,
                     SolverError, UnboundedHazardError)
from .fixedpoint import (discrete_flux_map, find_all_roots, invertibility_psi,
                         select_branch, solve_activity_ddm)
from .grid import (DensityVector, Grid, build_grid, cfl_dt_ddm, cfl_dt_itm,
                   discretize_initial, suggest_s_max, total_mass, total_variation)
from .hazards import (HazardModel, QuadraticActivityHazard, StepHazard,
                      VariableRefractoryHazard, cumulative_hazard, hazard_dN,
                      hazard_eval, hazard_norms)
from .itm import itm_init, itm_run, itm_step, linear_run
from .kernels import Exponential, Gaussian, Scaled, kernel_eval, kernel_sample
from .oracles import blowup_activity, characteristics_density, root_scan_oracle
from .steady import stationary_density, stationary_flux_roots

__version__ = "0.1.0"
