"""Stability certificates, consensus simulation and velocity planning for
swarms coupled over weighted ring digraphs with two-agent macro-vertices."""

__version__ = "0.1.0"

from .consensus_sim import (CouplingGains, SwarmState, closed_loop_matrix,
                            control_input, is_certified, predict_final_velocity,
                            simulate, velocity_spread)
from .errors import (ConfigError, DivergenceError, GainInfeasibleError,
                     InfeasiblePlanError, PitchRangeError, RingformError)
from .quadrotor_sim import (CascadeGains, FormationSpec, QuadrotorParams,
                            QuadrotorState, attitude_controller,
                            dynamics_derivative, formation_control,
                            formation_metrics, saturate_command, simulate_swarm,
                            thrust_attitude_refs)
from .ring_graph import (RingTopology, WeightedLaplacian, build_laplacian,
                         left_null_vector)
from .spectral import (BlockDiagonalForm, SpectralReport, block_diagonalize,
                       block_eigenvalues, closed_form_blocks, coupling_bound,
                       fourier_matrix, hurwitz_stable_quadratic, k_threshold,
                       laplacian_spectrum, root_locus_sweep, spectral_report)
from .velocity_planner import (GainSolution, ReachabilityVectors, VelocityPlan,
                               apply_plan, plan_velocity,
                               plan_with_modified_agent, reachability_vectors,
                               solve_gain)

__all__ = [
    "BlockDiagonalForm", "CascadeGains", "ConfigError", "CouplingGains",
    "DivergenceError", "FormationSpec", "GainInfeasibleError", "GainSolution",
    "InfeasiblePlanError", "PitchRangeError", "QuadrotorParams",
    "QuadrotorState", "ReachabilityVectors", "RingTopology", "RingformError",
    "SpectralReport", "SwarmState", "VelocityPlan", "WeightedLaplacian",
    "apply_plan", "attitude_controller", "block_diagonalize",
    "block_eigenvalues", "build_laplacian", "closed_form_blocks",
    "closed_loop_matrix", "control_input", "coupling_bound",
    "dynamics_derivative", "formation_control", "formation_metrics",
    "fourier_matrix", "hurwitz_stable_quadratic", "is_certified",
    "k_threshold", "laplacian_spectrum", "left_null_vector",
    "plan_velocity", "plan_with_modified_agent", "predict_final_velocity",
    "reachability_vectors", "root_locus_sweep", "saturate_command",
    "simulate", "simulate_swarm", "solve_gain", "spectral_report",
    "thrust_attitude_refs", "velocity_spread",
]
