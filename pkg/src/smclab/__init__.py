"""Sliding-mode control simulation and benchmarking for serial manipulators.

Subpackages follow the pipeline: robot_model -> kinematics / dynamics ->
controllers -> trajectory -> harness -> metrics / tuning.
"""

from .robot_model import (DHParameters, JointLimits, LinkInertia, ModelError,
                          RobotModel, load_model, serialize_model, validate_model)
from .kinematics import (Pose, dls_ik, estimate_workspace_volume,
                         forward_kinematics, jacobian)
from .dynamics import (DynamicsTerms, JointState, coriolis_matrix,
                       forward_dynamics, gravity_vector, inertia_matrix,
                       inverse_dynamics, step)
from .controllers import (ControlDiagnostics, PIDGains, Reference,
                          SlidingParams, lyapunov_value, mbsmc_torque,
                          nmbsmc_torque, pid_torque, reaching_time_bound,
                          sliding_surface, tracking_error)
from .trajectory import (CartesianPath, JointTrajectory, cartesian_to_joint,
                         quintic_segment, sample, waypoint_trajectory)
from .metrics import (MetricsReport, SimulationLog, compute_report,
                      control_effort, rmse_cartesian, rmse_joint,
                      smoothness_metrics, steady_state_error, threshold_report)
from .tuning import CostWeights, SwarmConfig, pso_tune, tracking_cost, tune_controller
from .harness import (ComparisonTable, Scenario, compare_controllers,
                      export_log, import_log, load_scenario, run_scenario)

__version__ = "0.1.0"
