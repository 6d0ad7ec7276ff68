"""Joint-sparse recovery from multiple measurement vectors with a prior.

Solves ``min ||X||_{2,1} + lam ||X - W||_{2,1}  s.t.  AX = Y``, bounds the
statistical dimension of its descent cone, and checks the predicted phase
transition with seeded Monte-Carlo sweeps.
"""
from .experiments import (ExperimentConfig, PriorType, crossing_m, gen_gaussian_matrix,
                          gen_joint_sparse, gen_prior, run_sweep, run_trial)
from .geometry import (PriorGeometry, SupportPartition, cos_terms, mc_sdim_estimate,
                       partition_supports, row_dist_sq)
from .sdim import (KinematicThresholds, SdimBounds, baseline_sdim, kinematic_thresholds,
                   psi_p, r_p, sdim_bounds)
from .solver import (SolveResult, SolverConfig, affine_project, prox_row_shrink,
                     prox_shifted_row_shrink, solve_ml1, solve_ml1p)

__version__ = "0.1.0"
