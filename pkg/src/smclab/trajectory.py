"""Smooth joint-space reference trajectories.

Waypoint interpolation uses polynomial smoothstep blends with zero velocity
and acceleration at segment ends.  Two blend orders are available:

  order 5 (quintic)   the classic minimum-order blend; position, velocity
                      and acceleration are continuous at junctions but jerk
                      jumps there
  order 9 (nonic)     additionally zeroes jerk and snap at segment ends, so
                      chained segments are C^4; this is what the bundled
                      benchmark scenario uses, since the smoothness metrics
                      difference successive samples four and five deep and
                      would otherwise be dominated by junction jerk steps

Both blends are monotone in time, so a trajectory through in-limit
waypoints never leaves the limits.  Trajectories are immutable after
generation and sampling is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .controllers import Reference
from .kinematics import Pose, dls_ik, forward_kinematics
from .robot_model import RobotModel


@dataclass(frozen=True)
class JointTrajectory:
    """Uniformly sampled desired positions, velocities and accelerations."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    dt: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.shape[0] < 1:
            raise ValueError("trajectory needs at least one sample")
        steps = np.diff(t)
        if t.shape[0] > 1 and (np.any(steps <= 0.0)
                               or np.max(np.abs(steps - self.dt)) > 1e-12):
            raise ValueError("timestamps must increase uniformly by dt")
        for name in ("q", "qd", "qdd"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (t.shape[0], self.n_joints):
                raise ValueError(f"{name} must have shape (samples, n)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def n_joints(self) -> int:
        return np.asarray(self.q).shape[1]

    @property
    def duration(self) -> float:
        return float(self.t[-1])


@dataclass(frozen=True)
class CartesianPath:
    """Ordered end-effector waypoints with per-segment durations."""

    waypoints: tuple[Pose, ...]
    segment_durations: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        durations = np.asarray(self.segment_durations, dtype=float).reshape(-1)
        if len(self.waypoints) < 2:
            raise ValueError("a Cartesian path needs at least two waypoints")
        if durations.shape[0] != len(self.waypoints) - 1:
            raise ValueError("need one duration per segment")
        if np.any(durations <= 0.0):
            raise ValueError("segment durations must be positive")
        object.__setattr__(self, "segment_durations", durations)


def _blend(s: np.ndarray, order: int):
    """Smoothstep value and first two derivatives w.r.t. s on [0, 1]."""
    if order == 5:
        pos = s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
        vel = s * s * (30.0 + s * (-60.0 + 30.0 * s))
        acc = s * (60.0 + s * (-180.0 + 120.0 * s))
    elif order == 9:
        pos = s ** 5 * (126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + 70.0 * s))))
        vel = s ** 4 * (630.0 + s * (-2520.0 + s * (3780.0 + s * (-2520.0 + 630.0 * s))))
        acc = s ** 3 * (2520.0 + s * (-12600.0 + s * (22680.0 + s * (-17640.0 + 5040.0 * s))))
    else:
        raise ValueError(f"unsupported blend order {order} (use 5 or 9)")
    return pos, vel, acc


def _segment(q0: np.ndarray, qf: np.ndarray, T: float, dt: float, order: int):
    if T <= 0.0 or dt <= 0.0:
        raise ValueError("durations must be positive")
    if dt > T:
        raise ValueError(f"dt={dt} exceeds segment duration {T}")
    m = max(1, int(round(T / dt)))
    s = np.arange(m + 1, dtype=float) / m
    pos, vel, acc = _blend(s, order)
    delta = qf - q0
    q = q0 + pos[:, None] * delta
    qd = (vel[:, None] * delta) / T
    qdd = (acc[:, None] * delta) / (T * T)
    return q, qd, qdd


def quintic_segment(q0, qf, T: float, dt: float) -> JointTrajectory:
    """Single quintic blend from rest at q0 to rest at qf over T seconds.

    Boundary velocity and acceleration are exactly zero; both endpoints are
    included in the samples.
    """
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    qf = np.atleast_1d(np.asarray(qf, dtype=float))
    if q0.shape != qf.shape:
        raise ValueError("q0 and qf must have equal length")
    q, qd, qdd = _segment(q0, qf, T, dt, order=5)
    t = np.arange(q.shape[0], dtype=float) * dt
    return JointTrajectory(t=t, q=q, qd=qd, qdd=qdd, dt=dt)


def waypoint_trajectory(waypoints, durations, dt: float, order: int = 5) -> JointTrajectory:
    """Chained blends through waypoints, at rest at every waypoint.

    Position, velocity and acceleration are continuous at junctions for
    either blend order; order 9 extends this through snap.
    """
    W = np.atleast_2d(np.asarray(waypoints, dtype=float))
    durations = np.atleast_1d(np.asarray(durations, dtype=float))
    if W.shape[0] < 2:
        raise ValueError("need at least two waypoints")
    if durations.shape[0] != W.shape[0] - 1:
        raise ValueError(f"{W.shape[0]} waypoints need {W.shape[0] - 1} durations")

    qs, qds, qdds = [], [], []
    for k in range(W.shape[0] - 1):
        q, qd, qdd = _segment(W[k], W[k + 1], durations[k], dt, order)
        if k > 0:
            q, qd, qdd = q[1:], qd[1:], qdd[1:]
        qs.append(q)
        qds.append(qd)
        qdds.append(qdd)
    q = np.vstack(qs)
    t = np.arange(q.shape[0], dtype=float) * dt
    return JointTrajectory(t=t, q=q, qd=np.vstack(qds), qdd=np.vstack(qdds), dt=dt)


def hold_trajectory(q, duration: float, dt: float) -> JointTrajectory:
    """Constant reference at q for the given duration."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    m = max(1, int(round(duration / dt)))
    t = np.arange(m + 1, dtype=float) * dt
    tiled = np.tile(q, (m + 1, 1))
    zeros = np.zeros_like(tiled)
    return JointTrajectory(t=t, q=tiled, qd=zeros, qdd=zeros.copy(), dt=dt)


class IKTrackingError(RuntimeError):
    """Raised when inverse kinematics fails along a Cartesian path."""

    def __init__(self, sample_index: int, error_norm: float):
        self.sample_index = sample_index
        self.error_norm = error_norm
        super().__init__(f"IK did not converge at sample {sample_index} "
                         f"(pose error {error_norm:.3g})")


def cartesian_to_joint(model: RobotModel, path: CartesianPath, seed, dt: float,
                       damping: float = 0.05, tol: float = 1e-5,
                       max_iters: int = 200) -> JointTrajectory:
    """Convert a Cartesian waypoint path to a joint trajectory via DLS IK.

    Poses are interpolated with a quintic time profile (linear in position,
    slerp in orientation), solved sample by sample warm-started from the
    previous solution, then differentiated numerically for the velocity and
    acceleration channels.
    """
    seed = np.asarray(seed, dtype=float).reshape(-1)
    q_rows = []
    q_prev = seed.copy()
    sample_idx = 0
    for k in range(len(path.waypoints) - 1):
        pose_a = path.waypoints[k]
        pose_b = path.waypoints[k + 1]
        T = float(path.segment_durations[k])
        m = max(1, int(round(T / dt)))
        s_grid, _, _ = _blend(np.arange(m + 1, dtype=float) / m, order=5)
        slerp = Slerp([0.0, 1.0], Rotation.from_quat(
            np.vstack([pose_a.orientation, pose_b.orientation])))
        start = 1 if k > 0 else 0
        for s in s_grid[start:]:
            pos = (1.0 - s) * pose_a.position + s * pose_b.position
            quat = slerp([s]).as_quat()[0]
            target = Pose(position=pos, orientation=quat / np.linalg.norm(quat))
            result = dls_ik(model, target, q_prev, damping=damping,
                            tol=tol, max_iters=max_iters)
            if not result.converged:
                raise IKTrackingError(sample_idx, result.error_norm)
            q_prev = result.q
            q_rows.append(result.q)
            sample_idx += 1

    q = np.asarray(q_rows)
    t = np.arange(q.shape[0], dtype=float) * dt
    qd = np.gradient(q, dt, axis=0, edge_order=2)
    qdd = np.gradient(qd, dt, axis=0, edge_order=2)
    return JointTrajectory(t=t, q=q, qd=qd, qdd=qdd, dt=dt)


def sample(traj: JointTrajectory, t: float) -> Reference:
    """Reference at time t: stored samples on-grid, linear blend between."""
    if t < 0.0 or t > traj.duration + 1e-12:
        raise ValueError(f"t={t} outside trajectory range [0, {traj.duration}]")
    x = t / traj.dt
    i = int(np.floor(x))
    i = min(i, traj.t.shape[0] - 1)
    frac = x - i
    if frac <= 1e-12 or i == traj.t.shape[0] - 1:
        return Reference(q=traj.q[i], qd=traj.qd[i], qdd=traj.qdd[i])
    return Reference(
        q=traj.q[i] + frac * (traj.q[i + 1] - traj.q[i]),
        qd=traj.qd[i] + frac * (traj.qd[i + 1] - traj.qd[i]),
        qdd=traj.qdd[i] + frac * (traj.qdd[i + 1] - traj.qdd[i]),
    )


def reference_arrays(traj: JointTrajectory, steps: int, dt: float):
    """Per-step reference arrays for a fixed-rate control loop.

    Times beyond the trajectory end hold the final waypoint at rest.  When
    the loop rate matches the trajectory grid the stored samples are used
    bit-exactly.
    """
    n = traj.n_joints
    last = traj.t.shape[0] - 1
    if abs(dt - traj.dt) < 1e-15:
        m = min(steps, last + 1)
        ref_q = np.empty((steps, n))
        ref_qd = np.zeros((steps, n))
        ref_qdd = np.zeros((steps, n))
        ref_q[:m] = traj.q[:m]
        ref_qd[:m] = traj.qd[:m]
        ref_qdd[:m] = traj.qdd[:m]
        if steps > m:
            ref_q[m:] = traj.q[last]
        return ref_q, ref_qd, ref_qdd

    ref_q = np.empty((steps, n))
    ref_qd = np.empty((steps, n))
    ref_qdd = np.empty((steps, n))
    for k in range(steps):
        ref = sample(traj, min(k * dt, traj.duration))
        ref_q[k], ref_qd[k], ref_qdd[k] = ref.q, ref.qd, ref.qdd
    return ref_q, ref_qd, ref_qdd


def to_csv(traj: JointTrajectory, path) -> None:
    """Write t, q1..qn, qd1..qdn, qdd1..qdn columns with a header row."""
    n = traj.n_joints
    header = (["t"] + [f"q{i + 1}" for i in range(n)]
              + [f"qd{i + 1}" for i in range(n)]
              + [f"qdd{i + 1}" for i in range(n)])
    data = np.hstack([traj.t[:, None], traj.q, traj.qd, traj.qdd])
    np.savetxt(path, data, delimiter=",", header=",".join(header),
               comments="", fmt="%.17g")


def from_csv(path) -> JointTrajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = (data.shape[1] - 1) // 3
    t = data[:, 0]
    dt = float(t[1] - t[0]) if t.shape[0] > 1 else 1.0
    return JointTrajectory(t=t, q=data[:, 1:n + 1], qd=data[:, n + 1:2 * n + 1],
                           qdd=data[:, 2 * n + 1:3 * n + 1], dt=dt)
