"""Forward kinematics, Jacobian, damped-least-squares IK and workspace.

All operations are pure functions of immutable inputs; the workspace
estimator draws from a seeded generator and is reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from . import _core
from .robot_model import RobotModel


@dataclass(frozen=True)
class Pose:
    """End-effector pose: position plus unit quaternion (x, y, z, w)."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        quat = np.asarray(self.orientation, dtype=float).reshape(4)
        norm = np.linalg.norm(quat)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {norm} is not 1 within 1e-9")
        p.setflags(write=False)
        quat.setflags(write=False)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", quat)

    @classmethod
    def from_matrix(cls, T: np.ndarray) -> "Pose":
        quat = Rotation.from_matrix(T[:3, :3]).as_quat()
        quat = quat / np.linalg.norm(quat)
        return cls(position=T[:3, 3].copy(), orientation=quat)

    @classmethod
    def from_position_rpy(cls, position, rpy) -> "Pose":
        quat = Rotation.from_euler("xyz", rpy).as_quat()
        return cls(position=np.asarray(position, dtype=float), orientation=quat)

    @property
    def rotation_matrix(self) -> np.ndarray:
        return Rotation.from_quat(self.orientation).as_matrix()

    @property
    def rpy(self) -> np.ndarray:
        """Roll/pitch/yaw (alpha, beta, gamma) about fixed x, y, z axes."""
        return Rotation.from_quat(self.orientation).as_euler("xyz")

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation_matrix
        T[:3, 3] = self.position
        return T


def _check_q(model: RobotModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != model.n:
        raise ValueError(f"expected {model.n} joint values, got {q.shape[0]}")
    return q


def frames(model: RobotModel, q) -> np.ndarray:
    """World transforms of every DH frame, shape (n + 1, 4, 4)."""
    q = _check_q(model, q)
    a, d, alpha, off = model.packed[:4]
    R, p = _core.dh_rp(a, d, alpha, off, q)
    T = np.tile(np.eye(4), (model.n + 1, 1, 1))
    T[:, :3, :3] = R
    T[:, :3, 3] = p
    return T


def forward_kinematics(model: RobotModel, q) -> Pose:
    """End-effector pose from the DH chain."""
    q = _check_q(model, q)
    a, d, alpha, off = model.packed[:4]
    return Pose.from_matrix(_core.ee_transform(a, d, alpha, off, q))


def jacobian(model: RobotModel, q) -> np.ndarray:
    """Geometric Jacobian, 6 x n: linear velocity rows, then angular."""
    q = _check_q(model, q)
    a, d, alpha, off = model.packed[:4]
    return _core.geometric_jacobian(*_core.dh_rp(a, d, alpha, off, q))


def pose_error(target: Pose, current: Pose) -> np.ndarray:
    """Stacked 6-vector: position error (m) and rotation-vector error (rad).

    The orientation part is the log map of R_target R_current^T, which is
    smooth near identity and the standard residual for damped least squares.
    """
    dp = target.position - current.position
    dR = target.rotation_matrix @ current.rotation_matrix.T
    rot = Rotation.from_matrix(dR).as_rotvec()
    return np.concatenate([dp, rot])


@dataclass(frozen=True)
class IKResult:
    q: np.ndarray
    converged: bool
    error_norm: float
    iterations: int


# Below roughly 1e-3 the damping no longer guarantees monotone progress
# near singular folds; the default is well above it.
DLS_LAMBDA_FLOOR = 1e-3


def dls_ik(model: RobotModel, target: Pose, seed, damping: float = 0.05,
           tol: float = 1e-5, max_iters: int = 200) -> IKResult:
    """Damped-least-squares inverse kinematics.

    Iterates dq = J^T (J J^T + damping^2 I)^{-1} e until the stacked pose
    error drops below ``tol``.  A step that would increase the error norm is
    halved a few times before giving up, so the error of accepted iterates
    never increases.  Non-convergence (including unreachable targets) is
    reported through ``converged`` rather than raised.
    """
    if damping < 0.0:
        raise ValueError("damping must be non-negative")
    q = _check_q(model, seed).copy()
    lam2 = damping * damping

    err = pose_error(target, forward_kinematics(model, q))
    best_q = q.copy()
    best_norm = float(np.linalg.norm(err))
    iterations = 0
    for iterations in range(1, max_iters + 1):
        if best_norm < tol:
            break
        J = jacobian(model, q)
        JJt = J @ J.T + lam2 * np.eye(6)
        dq = J.T @ np.linalg.solve(JJt, err)

        accepted = False
        scale = 1.0
        for _ in range(5):
            q_try = q + scale * dq
            err_try = pose_error(target, forward_kinematics(model, q_try))
            norm_try = float(np.linalg.norm(err_try))
            if norm_try <= best_norm:
                q = q_try
                err = err_try
                best_q = q_try.copy()
                best_norm = norm_try
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break

    return IKResult(q=best_q, converged=best_norm < tol,
                    error_norm=best_norm, iterations=iterations)


def workspace_positions(model: RobotModel, sample_count: int, rng_seed: int = 0) -> np.ndarray:
    """End-effector positions of ``sample_count`` uniform in-limit samples.

    For a fixed seed the i-th sample is the same regardless of
    ``sample_count``, so estimates grow monotonically with the budget.
    """
    if sample_count <= 0:
        raise ValueError("sample_count must be positive")
    rng = np.random.default_rng(rng_seed)
    lo = model.limits.position_min
    hi = model.limits.position_max
    Q = rng.uniform(lo, hi, size=(sample_count, model.n))
    a, d, alpha, off = model.packed[:4]
    return _core.fk_positions_batch(a, d, alpha, off, Q)


def occupied_voxels(positions: np.ndarray, voxel_size: float) -> np.ndarray:
    """Centers of the voxels touched by ``positions``, shape (m, 3)."""
    if voxel_size <= 0.0:
        raise ValueError("voxel_size must be positive")
    idx = np.floor(positions / voxel_size).astype(np.int64)
    unique = np.unique(idx, axis=0)
    return (unique + 0.5) * voxel_size


def estimate_workspace_volume(model: RobotModel, sample_count: int,
                              voxel_size: float = 0.02, rng_seed: int = 0) -> float:
    """Monte-Carlo reachable-position volume in m^3.

    Joint configurations are sampled uniformly within the limits, the
    end-effector position of each is binned into a cubic voxel grid, and
    the result is (occupied voxels) * voxel_size^3.
    """
    positions = workspace_positions(model, sample_count, rng_seed)
    centers = occupied_voxels(positions, voxel_size)
    return float(centers.shape[0]) * voxel_size ** 3
