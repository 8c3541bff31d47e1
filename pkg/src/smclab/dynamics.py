"""Rigid-body dynamics: M(q), C(q, qd), G(q), forward dynamics and stepping.

The inertia matrix comes from a tip-to-base composite-rigid-body pass, the
Coriolis matrix from Christoffel symbols of centrally finite-differenced
dM/dq (which preserves the skew symmetry of dM/dt - 2C that the stability
analysis needs), and the gravity vector from COM Jacobians, i.e. the exact
gradient of the potential energy.  A recursive Newton-Euler inverse
dynamics is included as an independent cross-check path.

All functions are pure; simulation stepping is single threaded and
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _core
from .robot_model import RobotModel


@dataclass(frozen=True)
class JointState:
    """Joint positions (rad), velocities (rad/s) and time (s)."""

    q: np.ndarray
    qd: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1)
        qd = np.asarray(self.qd, dtype=float).reshape(-1)
        if q.shape != qd.shape:
            raise ValueError(f"q has {q.shape[0]} entries but qd has {qd.shape[0]}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
            raise ValueError("joint state contains non-finite values")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qd", qd)
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class DynamicsTerms:
    M: np.ndarray
    C: np.ndarray
    G: np.ndarray


def _check(model: RobotModel, vec, name: str) -> np.ndarray:
    vec = np.asarray(vec, dtype=float).reshape(-1)
    if vec.shape[0] != model.n:
        raise ValueError(f"{name}: expected {model.n} entries, got {vec.shape[0]}")
    return vec


def inertia_matrix(model: RobotModel, q) -> np.ndarray:
    """Symmetric positive-definite joint-space inertia matrix."""
    q = _check(model, q, "q")
    a, d, alpha, off, mass, com, inertia, _ = model.packed
    return _core.inertia_matrix(a, d, alpha, off, mass, com, inertia, q)


def coriolis_matrix(model: RobotModel, q, qd, fd_step: float = _core.FD_STEP) -> np.ndarray:
    """Coriolis/centrifugal matrix from Christoffel symbols of M(q)."""
    q = _check(model, q, "q")
    qd = _check(model, qd, "qd")
    a, d, alpha, off, mass, com, inertia, _ = model.packed
    return _core.coriolis_matrix(a, d, alpha, off, mass, com, inertia, q, qd, fd_step)


def gravity_vector(model: RobotModel, q) -> np.ndarray:
    """Gravity torque G(q) = dP/dq, P the total potential energy."""
    q = _check(model, q, "q")
    a, d, alpha, off, mass, com, _, gravity = model.packed
    return _core.gravity_vector(a, d, alpha, off, mass, com, gravity, q)


def dynamics_terms(model: RobotModel, q, qd) -> DynamicsTerms:
    return DynamicsTerms(M=inertia_matrix(model, q),
                         C=coriolis_matrix(model, q, qd),
                         G=gravity_vector(model, q))


def potential_energy(model: RobotModel, q) -> float:
    q = _check(model, q, "q")
    a, d, alpha, off, mass, com, _, gravity = model.packed
    return float(_core.potential_energy(a, d, alpha, off, mass, com, gravity, q))


def kinetic_energy(model: RobotModel, q, qd) -> float:
    q = _check(model, q, "q")
    qd = _check(model, qd, "qd")
    a, d, alpha, off, mass, com, inertia, _ = model.packed
    return float(_core.kinetic_energy(a, d, alpha, off, mass, com, inertia, q, qd))


def total_energy(model: RobotModel, q, qd) -> float:
    return kinetic_energy(model, q, qd) + potential_energy(model, q)


def inverse_dynamics(model: RobotModel, q, qd, qdd) -> np.ndarray:
    """Joint torques for a prescribed motion, by recursive Newton-Euler.

    Independent of the M / C / G construction above; used as the
    cross-validation oracle in the test suite.
    """
    q = _check(model, q, "q")
    qd = _check(model, qd, "qd")
    qdd = _check(model, qdd, "qdd")
    a, d, alpha, off, mass, com, inertia, gravity = model.packed
    return _core.rnea(a, d, alpha, off, mass, com, inertia, gravity, q, qd, qdd)


def forward_dynamics(model: RobotModel, state: JointState, tau) -> np.ndarray:
    """Joint accelerations qdd = M^{-1} (tau - C qd - G).

    M is factorized, never inverted.  Raises if M is numerically singular,
    which cannot happen for a model with valid link inertias but guards
    hand-built configurations.
    """
    tau = _check(model, tau, "tau")
    a, d, alpha, off, mass, com, inertia, gravity = model.packed
    qdd = _core.forward_dynamics(a, d, alpha, off, mass, com, inertia, gravity,
                                 state.q, state.qd, tau, _core.FD_STEP)
    if not np.all(np.isfinite(qdd)):
        raise ArithmeticError("forward dynamics produced non-finite accelerations "
                              f"at q={state.q}, qd={state.qd}")
    return qdd


def step(model: RobotModel, state: JointState, tau, dt: float) -> JointState:
    """One explicit RK4 step under constant torque; t advances by dt."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    tau = _check(model, tau, "tau")
    a, d, alpha, off, mass, com, inertia, gravity = model.packed
    q_next, qd_next = _core.rk4_step(a, d, alpha, off, mass, com, inertia, gravity,
                                     state.q, state.qd, tau, dt, _core.FD_STEP)
    if not (np.all(np.isfinite(q_next)) and np.all(np.isfinite(qd_next))):
        raise ArithmeticError(f"integration diverged at t={state.t}: "
                              f"q={state.q}, qd={state.qd}, tau={tau}")
    return JointState(q=q_next, qd=qd_next, t=state.t + dt)
