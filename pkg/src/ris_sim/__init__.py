"""Rate-independent system simulation and solution-concept verification.

Simulates quasistatic evolutions driven by a time-dependent energy on a
metric state space via three incremental minimization schemes (plain,
viscous, visco-energetic), certifies Energetic / Balanced-Viscosity /
Visco-Energetic solution conditions on the resulting curves, and probes
the singular limits of the visco-energetic parameter in both directions.
"""

from .bvcurve import BVCurve, JumpCostFunction, JumpRecord, metric_derivative
from .config import RunConfig, UsageError
from .jumpcost import (CostBreakdown, TransitionChain, bv_path_cost,
                       classify_transition, ve_chain_cost, ve_cost,
                       viscous_cost)
from .models import (ConfigurationError, DomainError, EnergyModel,
                     SlopeEstimate, StateSpace, d_stability_gap, make_model,
                     moreau_yosida, perturbed_energy, residual, residual_grid,
                     slope_difference_quotient, slope_via_duality)
from .runner import compare_trajectories, run_mu_sweep, run_single
from .solvers import (DiscreteTrajectory, Scheme, TimePartition,
                      energetic_step, interpolant, solve, ve_step,
                      viscous_step)
from .verify import (VerificationReport, check_bv, check_energetic, check_ve,
                     upper_energy_estimate)

__version__ = "0.1.0"
