"""Joint-space torque controllers and sliding-mode diagnostics.

Three control laws are provided, written with the error convention
e = q - q_desired (so stabilizing feedback is negative in e):

  model-based sliding mode (mbsmc)
      tau = C qd + G + M (qdd_des - (P1/P2) ed - (P3/P2) tanh(sigma))
      the equivalent control that keeps sigma' = 0, plus a switching term
      smoothed by tanh to suppress chattering

  non-model-based sliding mode (nmbsmc)
      tau = -(P1 e + P3 tanh(sigma))

  pid
      tau = -(Kp e + Ki int(e) + Kd ed), integral state owned by the caller

with the sliding surface sigma = P1 e + P2 ed.  The surface uses the error
rate ed = qd - qd_desired, which coincides with the raw joint velocity for
constant references and keeps the manifold meaningful for moving ones.

Gains accept scalars (broadcast to every joint) or per-joint arrays.  All
functions are pure and safe to evaluate concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import JointState, coriolis_matrix, gravity_vector, inertia_matrix
from .robot_model import RobotModel

# |sigma| below this is treated as "on the manifold" in diagnostics; the
# raw tanh(sigma) switching only saturates near |sigma| ~ 3.8, so a small
# band keeps the sliding-phase classification meaningful.
BOUNDARY_LAYER = 0.05

# PID integral state clamp (rad s): an unsaturated integral destabilizes
# the torque-limited plant.
INTEGRAL_CLAMP = 2.0


def _gain_vector(value, n: int, name: str, positive: bool) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name}: expected scalar or {n} per-joint values")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: gains must be finite")
    if positive and np.any(arr <= 0.0):
        raise ValueError(f"{name}: gains must be strictly positive")
    if not positive and np.any(arr < 0.0):
        raise ValueError(f"{name}: gains must be non-negative")
    return arr


@dataclass(frozen=True)
class SlidingParams:
    """Sliding-mode gain triple; scalars broadcast to every joint.

    p2 scales the input direction of the surface (the transversality term
    is p2 M^{-1}), so every component must be strictly positive.
    """

    p1: float | np.ndarray = 100.0
    p2: float | np.ndarray = 1.0
    p3: float | np.ndarray = 60.0

    def as_arrays(self, n: int):
        return (_gain_vector(self.p1, n, "p1", positive=True),
                _gain_vector(self.p2, n, "p2", positive=True),
                _gain_vector(self.p3, n, "p3", positive=True))


@dataclass(frozen=True)
class PIDGains:
    kp: float | np.ndarray = 0.0
    ki: float | np.ndarray = 0.0
    kd: float | np.ndarray = 0.0

    def as_arrays(self, n: int):
        return (_gain_vector(self.kp, n, "kp", positive=False),
                _gain_vector(self.ki, n, "ki", positive=False),
                _gain_vector(self.kd, n, "kd", positive=False))


@dataclass(frozen=True)
class Reference:
    """Desired position, velocity and acceleration at one instant."""

    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray

    def __post_init__(self):
        for name in ("q", "qd", "qdd"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"reference {name} contains non-finite values")
            object.__setattr__(self, name, arr)
        if not (self.q.shape == self.qd.shape == self.qdd.shape):
            raise ValueError("reference q, qd, qdd must have equal length")


@dataclass(frozen=True)
class ControlDiagnostics:
    sigma: np.ndarray
    V: float
    e: np.ndarray
    tau: np.ndarray


def tracking_error(state: JointState, ref: Reference):
    """(e, ed) = (q - q_des, qd - qd_des)."""
    if state.q.shape != ref.q.shape:
        raise ValueError(f"state has {state.q.shape[0]} joints, "
                         f"reference has {ref.q.shape[0]}")
    return state.q - ref.q, state.qd - ref.qd


def sliding_surface(e, ed, params: SlidingParams) -> np.ndarray:
    """sigma = P1 e + P2 ed, element-wise."""
    e = np.asarray(e, dtype=float).reshape(-1)
    ed = np.asarray(ed, dtype=float).reshape(-1)
    if e.shape != ed.shape:
        raise ValueError("e and ed must have equal length")
    p1, p2, _ = params.as_arrays(e.shape[0])
    return p1 * e + p2 * ed


def lyapunov_value(sigma) -> float:
    """V = 0.5 ||sigma||^2, summed over joints."""
    sigma = np.asarray(sigma, dtype=float)
    return float(0.5 * np.sum(sigma * sigma))


def reaching_time_bound(sigma0: float, p3: float) -> float:
    """Nominal finite reaching time |sigma0| / P3 of the switching design."""
    if p3 <= 0.0:
        raise ValueError("p3 must be strictly positive")
    return abs(float(sigma0)) / float(p3)


def tanh_reaching_time(sigma0: float, p3: float, eps: float = BOUNDARY_LAYER) -> float:
    """Exact time for |sigma| to decay to eps under sigma' = -P3 tanh(sigma).

    Integrating d sigma / tanh(sigma) gives t = ln(sinh|sigma0| / sinh eps)
    / P3.  This exceeds the nominal |sigma0|/P3 bound (which assumes hard
    sign switching) because tanh slows the approach near the surface.
    """
    if p3 <= 0.0:
        raise ValueError("p3 must be strictly positive")
    s0 = abs(float(sigma0))
    if s0 <= eps:
        return 0.0
    return float(np.log(np.sinh(s0) / np.sinh(eps)) / p3)


def mbsmc_torque(model: RobotModel, state: JointState, ref: Reference,
                 params: SlidingParams):
    """Model-based sliding-mode torque and diagnostics.

    The equivalent-control part cancels the model dynamics and steers the
    error onto sigma = 0; the switching part -(M/P2) P3 tanh(sigma) pulls
    toward the manifold with a torque bounded per joint by (||M||/P2) P3.
    Refuses gain sets with any P2 <= 0 (transversality would fail).
    """
    n = model.n
    p1, p2, p3 = params.as_arrays(n)
    e, ed = tracking_error(state, ref)
    if e.shape[0] != n:
        raise ValueError(f"state/reference dimension {e.shape[0]} != model n {n}")
    sigma = p1 * e + p2 * ed

    M = inertia_matrix(model, state.q)
    C = coriolis_matrix(model, state.q, state.qd)
    G = gravity_vector(model, state.q)
    v = ref.qdd - (p1 / p2) * ed - (p3 / p2) * np.tanh(sigma)
    tau = M @ v + C @ state.qd + G
    if not np.all(np.isfinite(tau)):
        raise ArithmeticError(f"mbsmc torque is non-finite at q={state.q}")
    return tau, ControlDiagnostics(sigma=sigma, V=lyapunov_value(sigma), e=e, tau=tau)


def nmbsmc_torque(e, ed, params: SlidingParams):
    """Non-model-based sliding-mode torque: tau = -(P1 e + P3 tanh(sigma))."""
    e = np.asarray(e, dtype=float).reshape(-1)
    ed = np.asarray(ed, dtype=float).reshape(-1)
    p1, p2, p3 = params.as_arrays(e.shape[0])
    sigma = p1 * e + p2 * ed
    tau = -(p1 * e + p3 * np.tanh(sigma))
    return tau, ControlDiagnostics(sigma=sigma, V=lyapunov_value(sigma), e=e, tau=tau)


def pid_torque(e, e_integral, ed, gains: PIDGains) -> np.ndarray:
    """tau = -(Kp e + Ki int(e) + Kd ed); the caller owns the integral."""
    e = np.asarray(e, dtype=float).reshape(-1)
    e_integral = np.asarray(e_integral, dtype=float).reshape(-1)
    ed = np.asarray(ed, dtype=float).reshape(-1)
    kp, ki, kd = gains.as_arrays(e.shape[0])
    return -(kp * e + ki * e_integral + kd * ed)
