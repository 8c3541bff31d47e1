"""Dynamics cross-validation: CRBA vs energy, Christoffel vs RNEA, RK4."""

import numpy as np
import pytest

from smclab.dynamics import (JointState, coriolis_matrix, forward_dynamics,
                             gravity_vector, inertia_matrix, inverse_dynamics,
                             kinetic_energy, potential_energy, step,
                             total_energy)
from smclab.robot_model import load_model

pend = load_model("pendulum1")
planar = load_model("planar2")
ur = load_model("ur5e_like")


def dh_matrix(a, d, alpha, theta):
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def frames_oracle(model, q):
    """World DH frames composed straight from the textbook transform."""
    frames = [np.eye(4)]
    for k in range(model.n):
        frames.append(frames[-1] @ dh_matrix(
            model.dh.a[k], model.dh.d[k], model.dh.alpha[k],
            q[k] + model.dh.theta_offset[k]))
    return frames


def kinetic_energy_oracle(model, q, qd):
    """Sum of per-link kinetic energies from link twists.

    Independent of the composite-rigid-body construction: accumulates each
    link's angular velocity and COM velocity joint by joint.
    """
    frames = frames_oracle(model, q)
    total = 0.0
    for i, link in enumerate(model.inertia):
        R_link = frames[i + 1][:3, :3]
        p_com = R_link @ link.center_of_mass + frames[i + 1][:3, 3]
        omega = np.zeros(3)
        v_com = np.zeros(3)
        for j in range(i + 1):
            z_j = frames[j][:3, 2]
            p_j = frames[j][:3, 3]
            omega += z_j * qd[j]
            v_com += np.cross(z_j, p_com - p_j) * qd[j]
        I_world = R_link @ link.inertia_tensor @ R_link.T
        total += 0.5 * link.mass * v_com @ v_com + 0.5 * omega @ (I_world @ omega)
    return total


def random_state(model, rng, q_scale=1.0, qd_scale=1.0):
    q = rng.uniform(model.limits.position_min * q_scale,
                    model.limits.position_max * q_scale)
    qd = rng.uniform(-model.limits.velocity_max * qd_scale,
                     model.limits.velocity_max * qd_scale)
    return q, qd


def test_pendulum_inertia_hand_formula():
    M = inertia_matrix(pend, [0.3])
    m, l_com, izz = 1.0, 0.5, 1.0 / 12.0
    assert M.shape == (1, 1)
    assert M[0, 0] == pytest.approx(m * l_com ** 2 + izz, abs=1e-14)


def test_kinetic_energy_matches_twist_oracle():
    rng = np.random.default_rng(11)
    for model in (pend, planar, ur):
        for _ in range(30):
            q, qd = random_state(model, rng)
            expected = kinetic_energy_oracle(model, q, qd)
            assert kinetic_energy(model, q, qd) == pytest.approx(expected, rel=1e-10)


def test_inertia_symmetric_positive_definite():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        q, _ = random_state(ur, rng)
        M = inertia_matrix(ur, q)
        assert np.max(np.abs(M - M.T)) < 1e-9
        assert np.linalg.eigvalsh(M).min() > 0.0


def test_coriolis_zero_velocity():
    C = coriolis_matrix(ur, np.full(6, 0.4), np.zeros(6))
    np.testing.assert_allclose(C @ np.zeros(6), np.zeros(6), atol=1e-15)


def test_coriolis_times_qd_matches_rnea():
    rng = np.random.default_rng(13)
    for model in (planar, ur):
        zero = np.zeros(model.n)
        for _ in range(50):
            q, qd = random_state(model, rng)
            C = coriolis_matrix(model, q, qd)
            G = gravity_vector(model, q)
            bias = inverse_dynamics(model, q, qd, zero)
            np.testing.assert_allclose(C @ qd, bias - G, atol=1e-8)


def test_skew_symmetry_of_mdot_minus_2c():
    rng = np.random.default_rng(14)
    h = 1e-6
    for _ in range(200):
        q, qd = random_state(ur, rng)
        x = rng.uniform(-1.0, 1.0, ur.n)
        C = coriolis_matrix(ur, q, qd)
        Mdot = (inertia_matrix(ur, q + h * qd) - inertia_matrix(ur, q - h * qd)) / (2 * h)
        assert abs(x @ ((Mdot - 2.0 * C) @ x)) < 1e-8


def test_gravity_zero_when_gravity_zero():
    model = ur.with_gravity((0.0, 0.0, 0.0))
    rng = np.random.default_rng(15)
    q, _ = random_state(model, rng)
    np.testing.assert_allclose(gravity_vector(model, q), np.zeros(6), atol=1e-15)


def test_gravity_matches_potential_energy_gradient():
    rng = np.random.default_rng(16)
    h = 1e-6
    for model in (pend, planar, ur):
        for _ in range(30):
            q, _ = random_state(model, rng)
            G = gravity_vector(model, q)
            fd = np.empty(model.n)
            for j in range(model.n):
                dq = np.zeros(model.n)
                dq[j] = h
                fd[j] = (potential_energy(model, q + dq)
                         - potential_energy(model, q - dq)) / (2 * h)
            np.testing.assert_allclose(G, fd, rtol=1e-6, atol=1e-7)


def test_pendulum_gravity_torque_magnitude():
    # horizontal rod: torque = m g l_com
    G = gravity_vector(pend, [0.0])
    assert abs(G[0]) == pytest.approx(1.0 * 9.81 * 0.5, rel=1e-12)
    # hanging straight down (-y): zero torque
    G = gravity_vector(pend, [-np.pi / 2])
    assert abs(G[0]) < 1e-12


def test_forward_dynamics_exact_cancellation():
    rng = np.random.default_rng(17)
    q, qd = random_state(ur, rng)
    tau = coriolis_matrix(ur, q, qd) @ qd + gravity_vector(ur, q)
    qdd = forward_dynamics(ur, JointState(q=q, qd=qd), tau)
    np.testing.assert_allclose(qdd, np.zeros(6), atol=1e-9)


def test_forward_inverse_round_trip():
    rng = np.random.default_rng(18)
    for model in (planar, ur):
        for _ in range(100):
            q, qd = random_state(model, rng)
            tau = rng.uniform(-30.0, 30.0, model.n)
            qdd = forward_dynamics(model, JointState(q=q, qd=qd), tau)
            tau_back = inverse_dynamics(model, q, qd, qdd)
            np.testing.assert_allclose(tau_back, tau, atol=1e-8)


def test_single_dof_no_velocity_torque():
    # 1-DOF, zero gravity: no Coriolis coupling, so tau=0 gives qdd=0
    model = pend.with_gravity((0.0, 0.0, 0.0))
    qdd = forward_dynamics(model, JointState(q=[0.7], qd=[2.0]), [0.0])
    np.testing.assert_allclose(qdd, [0.0], atol=1e-12)


def test_step_holds_static_equilibrium():
    q = np.array([0.4])
    tau = gravity_vector(pend, q)
    state = JointState(q=q, qd=np.zeros(1))
    for _ in range(10):
        state = step(pend, state, tau, 1e-3)
    np.testing.assert_allclose(state.q, q, atol=1e-12)
    np.testing.assert_allclose(state.qd, np.zeros(1), atol=1e-12)


def test_energy_drift_free_spin():
    # zero gravity, zero torque: kinetic energy is conserved tightly
    model = pend.with_gravity((0.0, 0.0, 0.0))
    state = JointState(q=np.zeros(1), qd=np.array([1.5]))
    e0 = kinetic_energy(model, state.q, state.qd)
    for _ in range(10_000):
        state = step(model, state, np.zeros(1), 1e-3)
    e1 = kinetic_energy(model, state.q, state.qd)
    assert abs(e1 - e0) / e0 < 1e-9


def test_planar_passivity_zero_gravity():
    # tau = 0, no gravity: total energy non-increasing up to integrator tolerance
    model = planar.with_gravity((0.0, 0.0, 0.0))
    state = JointState(q=np.array([0.3, -0.5]), qd=np.array([1.0, -2.0]))
    e0 = total_energy(model, state.q, state.qd)
    energies = [e0]
    for _ in range(5_000):
        state = step(model, state, np.zeros(2), 1e-3)
        energies.append(total_energy(model, state.q, state.qd))
    drift = (np.max(energies) - e0) / abs(e0)
    assert drift < 1e-9


def test_rk4_convergence_order():
    # swinging gravity pendulum, trajectory error vs a dt/8 reference
    def integrate(dt, steps):
        state = JointState(q=np.array([0.3]), qd=np.zeros(1))
        for _ in range(steps):
            state = step(pend, state, np.zeros(1), dt)
        return state.q[0]

    T = 2.0
    ref = integrate(T / 4000, 4000)     # dt/8 of the coarser grid
    err_coarse = abs(integrate(T / 500, 500) - ref)
    err_fine = abs(integrate(T / 1000, 1000) - ref)
    order = np.log2(err_coarse / err_fine)
    assert order >= 3.8


def test_step_rejects_bad_dt():
    with pytest.raises(ValueError):
        step(pend, JointState(q=[0.0], qd=[0.0]), [0.0], 0.0)


def test_dimension_checks():
    with pytest.raises(ValueError):
        inertia_matrix(ur, np.zeros(5))
    with pytest.raises(ValueError):
        forward_dynamics(ur, JointState(q=np.zeros(6), qd=np.zeros(6)), np.zeros(4))
