"""Scenario configuration, closed-loop runner and controller comparison.

A scenario bundles a robot model, a reference trajectory, controller gains
and the simulation settings into one YAML-loadable record.  Runs are
deterministic: the same scenario produces byte-identical logs.

The bundled ``benchmark_loop`` scenario is a six-waypoint joint-space loop
(20 s at 1 kHz) standing in for a gentle lab pick-and-place cycle.  It runs
with ``gravity_compensated: true``, emulating the firmware gravity
compensation of collaborative-arm torque interfaces: the plant and the
controller's model both see zero gravity, so the compared controllers
spend their effort on motion rather than on holding the arm up.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import _core
from .controllers import PIDGains, SlidingParams, INTEGRAL_CLAMP
from .metrics import MetricsReport, SimulationLog, compute_report
from .robot_model import ModelError, RobotModel, load_model
from .trajectory import (JointTrajectory, hold_trajectory, reference_arrays,
                         waypoint_trajectory)

CONTROLLER_CODES = {"mbsmc": _core.CTRL_MBSMC,
                    "nmbsmc": _core.CTRL_NMBSMC,
                    "pid": _core.CTRL_PID}

# Row labels of the comparison table, in report order.
TABLE_ROWS = (
    ("RMSE of joint motions", "joint_rmse"),
    ("Velocity Continuity", "velocity_continuity"),
    ("Acceleration Profile", "acceleration_profile"),
    ("Jerk Profile", "jerk"),
    ("Snap Profile", "snap"),
    ("Steady state error", "steady_state_error"),
)


@dataclass(frozen=True)
class Scenario:
    """One reproducible closed-loop experiment."""

    model: str | RobotModel
    trajectory: dict | JointTrajectory
    controller: str = "mbsmc"
    gains: dict = field(default_factory=dict)
    dt: float = 1e-3
    duration: float = 20.0
    torque_saturation: bool = True
    mass_scale: float = 1.0
    gravity_compensated: bool = False
    initial_q_offset: np.ndarray | None = None
    initial_qd_offset: np.ndarray | None = None
    rng_seed: int = 0
    name: str = "scenario"

    def validate(self) -> list[str]:
        out = []
        if self.dt <= 0.0:
            out.append("scenario: dt must be positive")
        if self.duration < 0.0:
            out.append("scenario: duration must be non-negative")
        if not self.mass_scale > 0.0:
            out.append("scenario: mass_scale must be positive")
        if self.controller not in CONTROLLER_CODES:
            out.append(f"scenario: unknown controller {self.controller!r}")
        return out


def _gains_from_doc(kind: str, doc) -> object:
    if isinstance(doc, (SlidingParams, PIDGains)):
        return doc
    doc = dict(doc)
    if kind in ("mbsmc", "nmbsmc"):
        return SlidingParams(p1=doc["p1"], p2=doc["p2"], p3=doc["p3"])
    if kind == "pid":
        return PIDGains(kp=doc["kp"], ki=doc["ki"], kd=doc["kd"])
    raise ValueError(f"unknown controller kind {kind!r}")


def load_scenario(source) -> Scenario:
    """Load a scenario from a YAML file, bundled name, or parsed mapping."""
    if isinstance(source, Scenario):
        return source
    if isinstance(source, dict):
        doc = source
    else:
        path = Path(source)
        if not path.exists():
            bundled = resources.files("smclab") / "scenarios" / f"{source}.yaml"
            if Path(str(bundled)).exists():
                path = Path(str(bundled))
            else:
                raise FileNotFoundError(f"no scenario file or bundled scenario {source!r}")
        doc = yaml.safe_load(path.read_text())

    gains = {kind: _gains_from_doc(kind, g)
             for kind, g in doc.get("gains", {}).items()}
    return Scenario(
        model=doc["model"],
        trajectory=doc["trajectory"],
        controller=doc.get("controller", "mbsmc"),
        gains=gains,
        dt=float(doc.get("dt", 1e-3)),
        duration=float(doc.get("duration", 20.0)),
        torque_saturation=bool(doc.get("torque_saturation", True)),
        mass_scale=float(doc.get("mass_scale", 1.0)),
        gravity_compensated=bool(doc.get("gravity_compensated", False)),
        rng_seed=int(doc.get("seed", 0)),
        name=str(doc.get("name", "scenario")),
    )


def build_trajectory(scenario: Scenario, model: RobotModel) -> JointTrajectory:
    spec = scenario.trajectory
    if isinstance(spec, JointTrajectory):
        return spec
    kind = spec.get("type", "joint_waypoints")
    if kind == "joint_waypoints":
        return waypoint_trajectory(spec["waypoints"], spec["durations"],
                                   dt=scenario.dt,
                                   order=int(spec.get("blend_order", 5)))
    if kind == "hold":
        return hold_trajectory(spec["q"], float(spec.get("duration", scenario.duration)),
                               dt=scenario.dt)
    if kind == "cartesian":
        from .kinematics import Pose
        from .trajectory import CartesianPath, cartesian_to_joint
        poses = tuple(Pose.from_position_rpy(w["position"], w["rpy"])
                      for w in spec["waypoints"])
        path = CartesianPath(waypoints=poses,
                             segment_durations=spec["durations"])
        return cartesian_to_joint(model, path, spec["seed_q"], dt=scenario.dt)
    raise ValueError(f"unknown trajectory type {kind!r}")


def _controller_vectors(scenario: Scenario, kind: str, n: int):
    try:
        gains = scenario.gains[kind]
    except KeyError:
        raise ValueError(f"scenario {scenario.name!r} has no gains for {kind!r}")
    if kind in ("mbsmc", "nmbsmc"):
        if not isinstance(gains, SlidingParams):
            gains = _gains_from_doc(kind, gains)
        return gains.as_arrays(n)
    if not isinstance(gains, PIDGains):
        gains = _gains_from_doc(kind, gains)
    return gains.as_arrays(n)


def reference_hash(ref_q: np.ndarray, ref_qd: np.ndarray, ref_qdd: np.ndarray) -> str:
    digest = hashlib.sha256()
    for arr in (ref_q, ref_qd, ref_qdd):
        digest.update(np.ascontiguousarray(arr).tobytes())
    return digest.hexdigest()


def run_scenario(scenario: Scenario, controller: str | None = None) -> SimulationLog:
    """Simulate the scenario closed loop and return the sampled history.

    One torque per step (zero-order hold through the RK4 update), optional
    torque saturation at the model limits, and an optional plant-side mass
    scale that the controller's internal model never sees.  Divergence
    truncates the log and sets ``diverged_at`` instead of raising.
    """
    problems = scenario.validate()
    if problems:
        raise ModelError("; ".join(problems))

    kind = controller or scenario.controller
    model = load_model(scenario.model)
    if scenario.gravity_compensated:
        model = model.with_gravity((0.0, 0.0, 0.0))
    plant = model.with_mass_scale(scenario.mass_scale) if scenario.mass_scale != 1.0 else model

    traj = build_trajectory(scenario, model)
    steps = int(round(scenario.duration / scenario.dt)) + 1
    ref_q, ref_qd, ref_qdd = reference_arrays(traj, steps, scenario.dt)

    q0 = ref_q[0].copy()
    qd0 = ref_qd[0].copy()
    if scenario.initial_q_offset is not None:
        q0 = q0 + np.asarray(scenario.initial_q_offset, dtype=float)
    if scenario.initial_qd_offset is not None:
        qd0 = qd0 + np.asarray(scenario.initial_qd_offset, dtype=float)

    g1, g2, g3 = _controller_vectors(scenario, kind, model.n)
    pa, pd_, palpha, poff, pmass, pcom, pin, pgrav = plant.packed
    ca, cd, calpha, coff, cmass, ccom, cin, cgrav = model.packed

    q_log, qd_log, tau_log, sigma_log, V_log, diverged_at = _core.closed_loop_run(
        pa, pd_, palpha, poff, pmass, pcom, pin, pgrav,
        ca, cd, calpha, coff, cmass, ccom, cin, cgrav,
        ref_q, ref_qd, ref_qdd,
        q0, qd0, scenario.dt, CONTROLLER_CODES[kind], g1, g2, g3,
        scenario.torque_saturation, model.limits.torque_max,
        INTEGRAL_CLAMP, _core.FD_STEP,
    )
    t = np.arange(steps, dtype=float) * scenario.dt
    return SimulationLog(dt=scenario.dt, t=t, q=q_log, qd=qd_log, tau=tau_log,
                         sigma=sigma_log, V=V_log, q_des=ref_q, qd_des=ref_qd,
                         diverged_at=int(diverged_at))


@dataclass(frozen=True)
class ComparisonTable:
    """Per-controller metric reports over one identical scenario."""

    scenario_name: str
    reference_hash: str
    reports: dict  # controller kind -> MetricsReport
    logs: dict     # controller kind -> SimulationLog

    def to_csv(self, path) -> None:
        kinds = list(self.reports)
        n = next(iter(self.logs.values())).n_joints
        lines = ["Metric," + ",".join(
            f"{kind} theta{j + 1}" for kind in kinds for j in range(n))]
        for label, attr in TABLE_ROWS:
            cells = []
            for kind in kinds:
                values = getattr(self.reports[kind], attr)
                cells.extend(f"{v:.6g}" for v in values)
            lines.append(f"{label}," + ",".join(cells))
        axes = ("x", "y", "z", "alpha", "beta", "gamma")
        header = "RMSE (Trajectory Error)," + ",".join(
            f"{kind} {ax}" for kind in kinds for ax in axes)
        lines.append(header)
        cells = []
        for kind in kinds:
            cart = self.reports[kind].cartesian_rmse
            cells.extend(f"{cart[ax]:.6g}" for ax in axes)
        lines.append("," + ",".join(cells))
        lines.append("Control effort," + ",".join(
            f"{self.reports[kind].control_effort:.6g}" for kind in kinds))
        Path(path).write_text("\n".join(lines) + "\n")


def compare_controllers(scenario: Scenario, controllers) -> ComparisonTable:
    """Run each controller over the identical reference and collect metrics.

    A per-run failure (divergence) is recorded in that controller's cells;
    it does not abort the other runs.
    """
    controllers = list(controllers)
    if len(controllers) < 2:
        raise ValueError("need at least two controllers to compare")

    model = load_model(scenario.model)
    if scenario.gravity_compensated:
        model = model.with_gravity((0.0, 0.0, 0.0))
    traj = build_trajectory(scenario, model)
    steps = int(round(scenario.duration / scenario.dt)) + 1
    ref_hash = reference_hash(*reference_arrays(traj, steps, scenario.dt))

    frozen = replace(scenario, trajectory=traj)
    reports: dict[str, MetricsReport] = {}
    logs: dict[str, SimulationLog] = {}
    for kind in controllers:
        log = run_scenario(frozen, controller=kind)
        check = reference_hash(log.q_des, log.qd_des,
                               reference_arrays(traj, steps, scenario.dt)[2])
        if check != ref_hash:
            raise RuntimeError(f"controller {kind} saw a different reference")
        logs[kind] = log
        reports[kind] = compute_report(model, log)
    return ComparisonTable(scenario_name=scenario.name, reference_hash=ref_hash,
                           reports=reports, logs=logs)


LOG_PREFIX_COLUMNS = ("t", "q", "qd", "tau", "sigma", "V")


def export_log(log: SimulationLog, path) -> None:
    """CSV with columns t, q1.., qd1.., tau1.., sigma1.., V, qdes1.., qddes1..

    Byte-stable for identical logs; shortest round-trip float formatting.
    """
    n = log.n_joints
    cols = (["t"]
            + [f"q{i + 1}" for i in range(n)]
            + [f"qd{i + 1}" for i in range(n)]
            + [f"tau{i + 1}" for i in range(n)]
            + [f"sigma{i + 1}" for i in range(n)]
            + ["V"]
            + [f"qdes{i + 1}" for i in range(n)]
            + [f"qddes{i + 1}" for i in range(n)])
    data = np.hstack([log.t[:, None], log.q, log.qd, log.tau, log.sigma,
                      log.V[:, None], log.q_des, log.qd_des])
    np.savetxt(path, data, delimiter=",", header=",".join(cols),
               comments="", fmt="%.17g")


def import_log(path, dt: float | None = None) -> SimulationLog:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] == 0:
        raise ValueError("log file has no rows")
    n = (data.shape[1] - 2) // 6
    t = data[:, 0]
    if dt is None:
        dt = float(t[1] - t[0]) if t.shape[0] > 1 else 1.0
    c = 1
    q = data[:, c:c + n]; c += n
    qd = data[:, c:c + n]; c += n
    tau = data[:, c:c + n]; c += n
    sigma = data[:, c:c + n]; c += n
    V = data[:, c]; c += 1
    q_des = data[:, c:c + n]; c += n
    qd_des = data[:, c:c + n]
    return SimulationLog(dt=dt, t=t, q=q, qd=qd, tau=tau, sigma=sigma, V=V,
                         q_des=q_des, qd_des=qd_des)


def export_report(report: MetricsReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
