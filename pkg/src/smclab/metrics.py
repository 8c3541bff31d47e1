"""Tracking-quality and motion-smoothness metrics over simulation logs.

The smoothness numbers follow the successive-difference convention: the
velocity / acceleration / jerk / snap series are repeated finite
differences of the logged joint positions, and each reported metric is the
maximum absolute difference between successive values of its series.  A
constant-velocity motion therefore scores zero velocity-continuity, and
the thresholds below bound discontinuity, not magnitude.

All functions are pure and every metric is checked against a brute-force
oracle in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _core
from .robot_model import RobotModel

# Compliance thresholds for precise, fragile-payload manipulation.
DEFAULT_THRESHOLDS = {
    "joint_rmse": 5e-3,              # rad
    "velocity_continuity": 1e-3,     # rad/s
    "acceleration_profile": 5e-3,    # rad/s^2
    "jerk": 5e-3,                    # rad/s^3
    "snap": 5e-3,                    # rad/s^4
    "cartesian_rmse": 5e-3,          # m
}

STEADY_STATE_WINDOW = 0.5  # s


@dataclass(frozen=True)
class SimulationLog:
    """Sampled closed-loop history at a fixed control rate.

    ``sigma`` and ``V`` are the sliding-surface diagnostics of the active
    controller (zero for PID, which has no surface).  ``diverged_at`` is -1
    for a clean run, else the first step whose state was non-finite; rows
    from that step on are zeroed.
    """

    dt: float
    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    tau: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    q_des: np.ndarray
    qd_des: np.ndarray
    diverged_at: int = -1

    @property
    def n_joints(self) -> int:
        return self.q.shape[1]

    @property
    def samples(self) -> int:
        return self.q.shape[0]

    @property
    def diverged(self) -> bool:
        return self.diverged_at >= 0

    @property
    def duration(self) -> float:
        return float(self.t[-1])


@dataclass(frozen=True)
class MetricsReport:
    """Per-joint and Cartesian summary of one simulation log."""

    joint_rmse: np.ndarray
    velocity_continuity: np.ndarray
    acceleration_profile: np.ndarray
    jerk: np.ndarray
    snap: np.ndarray
    steady_state_error: np.ndarray
    cartesian_rmse: dict = field(default_factory=dict)
    control_effort: float = 0.0
    diverged: bool = False

    def to_dict(self) -> dict:
        return {
            "joint_rmse": [float(v) for v in self.joint_rmse],
            "velocity_continuity": [float(v) for v in self.velocity_continuity],
            "acceleration_profile": [float(v) for v in self.acceleration_profile],
            "jerk": [float(v) for v in self.jerk],
            "snap": [float(v) for v in self.snap],
            "steady_state_error": [float(v) for v in self.steady_state_error],
            "cartesian_rmse": {k: float(v) for k, v in self.cartesian_rmse.items()},
            "control_effort": float(self.control_effort),
            "diverged": bool(self.diverged),
        }


def _require_rows(log: SimulationLog, minimum: int, what: str):
    if log.samples < minimum:
        raise ValueError(f"{what} needs at least {minimum} samples, "
                         f"log has {log.samples}")


def rmse_joint(log: SimulationLog) -> np.ndarray:
    """Root-mean-square tracking error per joint, rad."""
    _require_rows(log, 1, "rmse_joint")
    err = log.q - log.q_des
    return np.sqrt(np.mean(err * err, axis=0))


def derivative_chain(log: SimulationLog):
    """Velocity, acceleration, jerk and snap series per joint.

    Repeated forward differences of the logged positions; each level is
    one sample shorter than the one above.
    """
    _require_rows(log, 5, "derivative_chain")
    v = np.diff(log.q, axis=0) / log.dt
    a = np.diff(v, axis=0) / log.dt
    j = np.diff(a, axis=0) / log.dt
    s = np.diff(j, axis=0) / log.dt
    return v, a, j, s


def _max_successive_difference(series: np.ndarray) -> np.ndarray:
    if series.shape[0] < 2:
        return np.zeros(series.shape[1])
    return np.max(np.abs(np.diff(series, axis=0)), axis=0)


def smoothness_metrics(log: SimulationLog) -> dict:
    """Maximum successive difference of each derivative series, per joint."""
    v, a, j, s = derivative_chain(log)
    return {
        "velocity_continuity": _max_successive_difference(v),
        "acceleration_profile": _max_successive_difference(a),
        "jerk": _max_successive_difference(j),
        "snap": _max_successive_difference(s),
    }


def steady_state_error(log: SimulationLog, window: float = STEADY_STATE_WINDOW) -> np.ndarray:
    """Mean absolute tracking error over the final ``window`` seconds."""
    _require_rows(log, 1, "steady_state_error")
    if window > log.duration + log.dt:
        raise ValueError(f"window {window}s exceeds log duration {log.duration}s")
    rows = max(1, int(round(window / log.dt)))
    err = log.q[-rows:] - log.q_des[-rows:]
    return np.mean(np.abs(err), axis=0)


def _wrap_angle(x: np.ndarray) -> np.ndarray:
    return np.arctan2(np.sin(x), np.cos(x))


def _batch_poses(model: RobotModel, Q: np.ndarray):
    from scipy.spatial.transform import Rotation

    a, d, alpha, off = model.packed[:4]
    positions = np.empty((Q.shape[0], 3))
    mats = np.empty((Q.shape[0], 3, 3))
    for i in range(Q.shape[0]):
        R, p = _core.dh_rp(a, d, alpha, off, Q[i])
        positions[i] = p[model.n]
        mats[i] = R[model.n]
    rpy = Rotation.from_matrix(mats).as_euler("xyz")
    return positions, rpy


def rmse_cartesian(model: RobotModel, log: SimulationLog) -> dict:
    """End-effector RMSE per axis (x, y, z) and per RPY angle.

    Angle differences are wrapped to (-pi, pi] before squaring.
    """
    _require_rows(log, 1, "rmse_cartesian")
    pos, rpy = _batch_poses(model, log.q)
    pos_des, rpy_des = _batch_poses(model, log.q_des)
    dpos = pos - pos_des
    dang = _wrap_angle(rpy - rpy_des)
    rms_pos = np.sqrt(np.mean(dpos * dpos, axis=0))
    rms_ang = np.sqrt(np.mean(dang * dang, axis=0))
    return {"x": rms_pos[0], "y": rms_pos[1], "z": rms_pos[2],
            "alpha": rms_ang[0], "beta": rms_ang[1], "gamma": rms_ang[2]}


def control_effort(log: SimulationLog) -> float:
    """Integral of squared torque, sum ||tau||^2 dt over the run."""
    _require_rows(log, 1, "control_effort")
    return float(np.sum(log.tau * log.tau) * log.dt)


def compute_report(model: RobotModel, log: SimulationLog,
                   window: float = STEADY_STATE_WINDOW) -> MetricsReport:
    """Full metric sweep over one log."""
    smooth = smoothness_metrics(log)
    return MetricsReport(
        joint_rmse=rmse_joint(log),
        velocity_continuity=smooth["velocity_continuity"],
        acceleration_profile=smooth["acceleration_profile"],
        jerk=smooth["jerk"],
        snap=smooth["snap"],
        steady_state_error=steady_state_error(log, window),
        cartesian_rmse=rmse_cartesian(model, log),
        control_effort=control_effort(log),
        diverged=log.diverged,
    )


def threshold_report(report: MetricsReport, thresholds: dict | None = None) -> dict:
    """Boolean compliance per metric per joint/axis against the thresholds."""
    th = dict(DEFAULT_THRESHOLDS)
    if thresholds:
        th.update(thresholds)
    axes = ("x", "y", "z")
    return {
        "joint_rmse": [bool(v < th["joint_rmse"]) for v in report.joint_rmse],
        "velocity_continuity": [bool(v < th["velocity_continuity"])
                                for v in report.velocity_continuity],
        "acceleration_profile": [bool(v < th["acceleration_profile"])
                                 for v in report.acceleration_profile],
        "jerk": [bool(v < th["jerk"]) for v in report.jerk],
        "snap": [bool(v < th["snap"]) for v in report.snap],
        "cartesian_rmse": [bool(report.cartesian_rmse[ax] < th["cartesian_rmse"])
                           for ax in axes],
    }
