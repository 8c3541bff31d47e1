"""Control laws: surface algebra, torque formulas, reaching and stability."""

import numpy as np
import pytest

from smclab.controllers import (PIDGains, Reference, SlidingParams,
                                lyapunov_value, mbsmc_torque, nmbsmc_torque,
                                pid_torque, reaching_time_bound,
                                sliding_surface, tanh_reaching_time,
                                tracking_error)
from smclab.dynamics import (JointState, coriolis_matrix, gravity_vector,
                             inertia_matrix)
from smclab.robot_model import load_model

pend = load_model("pendulum1")
ur = load_model("ur5e_like")

P_DEFAULT = SlidingParams(p1=100.0, p2=1.0, p3=60.0)


def make_ref(q, qd=None, qdd=None):
    q = np.asarray(q, dtype=float)
    return Reference(q=q,
                     qd=np.zeros_like(q) if qd is None else qd,
                     qdd=np.zeros_like(q) if qdd is None else qdd)


def test_tracking_error_zero_and_sign():
    state = JointState(q=np.full(6, 0.2), qd=np.full(6, 0.1))
    ref = make_ref(np.full(6, 0.2), np.full(6, 0.1))
    e, ed = tracking_error(state, ref)
    np.testing.assert_array_equal(e, np.zeros(6))
    np.testing.assert_array_equal(ed, np.zeros(6))

    ref2 = make_ref(np.full(6, 0.1), np.full(6, 0.1))
    e, ed = tracking_error(state, ref2)
    np.testing.assert_allclose(e, np.full(6, 0.1))   # e = q - q_des
    np.testing.assert_allclose(ed, np.zeros(6))


def test_tracking_error_antisymmetry():
    rng = np.random.default_rng(21)
    q, qd = rng.normal(size=6), rng.normal(size=6)
    r, rd = rng.normal(size=6), rng.normal(size=6)
    e1, ed1 = tracking_error(JointState(q=q, qd=qd), make_ref(r, rd))
    e2, ed2 = tracking_error(JointState(q=r, qd=rd), make_ref(q, qd))
    np.testing.assert_allclose(e1, -e2)
    np.testing.assert_allclose(ed1, -ed2)


def test_sliding_surface_values():
    zero = sliding_surface(np.zeros(3), np.zeros(3), P_DEFAULT)
    np.testing.assert_array_equal(zero, np.zeros(3))
    # the tuned operating point: P1 e = 100 * 0.01 = 1.0 with zero rate
    sigma = sliding_surface(np.array([0.01]), np.array([0.0]), P_DEFAULT)
    assert sigma[0] == pytest.approx(1.0)


def test_sliding_surface_linearity():
    rng = np.random.default_rng(22)
    e, ed = rng.normal(size=4), rng.normal(size=4)
    params = SlidingParams(p1=7.0, p2=3.0, p3=1.0)
    np.testing.assert_allclose(sliding_surface(2 * e, 2 * ed, params),
                               2 * sliding_surface(e, ed, params))


def test_lyapunov_values():
    assert lyapunov_value(np.zeros(4)) == 0.0
    assert lyapunov_value(np.array([1.0, 0.0])) == 0.5
    rng = np.random.default_rng(23)
    s = rng.normal(size=6)
    assert lyapunov_value(s) > 0.0


def test_reaching_time_bound_values():
    assert reaching_time_bound(0.0, 60.0) == 0.0
    assert reaching_time_bound(0.6, 60.0) == pytest.approx(0.01)
    assert reaching_time_bound(-0.6, 60.0) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        reaching_time_bound(0.5, 0.0)


def test_mbsmc_on_manifold_is_computed_torque():
    # e = ed = 0, qdd_des = 0: tanh(0) kills the switching term and the
    # law reduces to exact bias compensation C qd + G
    rng = np.random.default_rng(24)
    q = rng.uniform(-1.0, 1.0, 6)
    qd = rng.uniform(-1.0, 1.0, 6)
    state = JointState(q=q, qd=qd)
    tau, diag = mbsmc_torque(ur, state, make_ref(q, qd), P_DEFAULT)
    expected = coriolis_matrix(ur, q, qd) @ qd + gravity_vector(ur, q)
    np.testing.assert_allclose(tau, expected, atol=1e-12)
    np.testing.assert_array_equal(diag.sigma, np.zeros(6))
    assert diag.V == 0.0


def test_mbsmc_hand_value_zero_gravity_pendulum():
    # at rest with e = 0.01 and gains (100, 1, 60): sigma = 1 and the law
    # reduces to -M (P1/P2 * 0 + 60 tanh(1)) = -60 M tanh(1)
    model = pend.with_gravity((0.0, 0.0, 0.0))
    state = JointState(q=np.array([0.01]), qd=np.zeros(1))
    tau, diag = mbsmc_torque(model, state, make_ref(np.zeros(1)), P_DEFAULT)
    M = inertia_matrix(model, state.q)[0, 0]
    assert diag.sigma[0] == pytest.approx(1.0)
    assert tau[0] == pytest.approx(-60.0 * M * np.tanh(1.0), rel=1e-12)


def test_mbsmc_switching_torque_bounded():
    # |tau - (C qd + G + M qdd_des)| <= ||M|| (P1/P2 |ed| + P3/P2) per joint
    rng = np.random.default_rng(25)
    for _ in range(50):
        q = rng.uniform(-1.5, 1.5, 6)
        qd = rng.uniform(-2.0, 2.0, 6)
        ref = make_ref(rng.uniform(-1.5, 1.5, 6), rng.uniform(-2, 2, 6),
                       rng.uniform(-3, 3, 6))
        state = JointState(q=q, qd=qd)
        tau, _ = mbsmc_torque(ur, state, ref, P_DEFAULT)
        M = inertia_matrix(ur, q)
        feedforward = (coriolis_matrix(ur, q, qd) @ qd + gravity_vector(ur, q)
                       + M @ ref.qdd)
        _, ed = tracking_error(state, ref)
        bound = np.abs(M) @ (100.0 * np.abs(ed) + 60.0) + 1e-9
        assert np.all(np.abs(tau - feedforward) <= bound)


def test_mbsmc_requires_positive_p2():
    state = JointState(q=np.zeros(6), qd=np.zeros(6))
    with pytest.raises(ValueError, match="p2"):
        mbsmc_torque(ur, state, make_ref(np.zeros(6)),
                     SlidingParams(p1=100.0, p2=0.0, p3=60.0))
    with pytest.raises(ValueError, match="p2"):
        mbsmc_torque(ur, state, make_ref(np.zeros(6)),
                     SlidingParams(p1=100.0, p2=-1.0, p3=60.0))


def test_nmbsmc_values():
    tau, diag = nmbsmc_torque(np.zeros(3), np.zeros(3), P_DEFAULT)
    np.testing.assert_array_equal(tau, np.zeros(3))

    # e = 0.01, ed = 0 with gains (100, 1, 60): sigma = 1,
    # tau = -(1.0 + 60 tanh(1)) ~= -46.7, opposing the positive error
    tau, diag = nmbsmc_torque(np.array([0.01]), np.array([0.0]), P_DEFAULT)
    expected = -(100.0 * 0.01 + 60.0 * np.tanh(1.0))
    assert tau[0] == pytest.approx(expected, rel=1e-12)
    assert abs(tau[0]) == pytest.approx(46.696, abs=1e-3)
    assert diag.V == pytest.approx(0.5)


def test_nmbsmc_switching_bounded_by_p3():
    rng = np.random.default_rng(26)
    for _ in range(100):
        e = rng.normal(scale=2.0, size=6)
        ed = rng.normal(scale=2.0, size=6)
        tau, _ = nmbsmc_torque(e, ed, P_DEFAULT)
        np.testing.assert_array_less(np.abs(tau + 100.0 * e), 60.0 + 1e-12)


def test_pid_values():
    gains = PIDGains(kp=1.0, ki=0.0, kd=0.0)
    tau = pid_torque(np.array([0.5]), np.zeros(1), np.zeros(1), gains)
    assert tau[0] == pytest.approx(-0.5)  # opposes e = q - q_des > 0
    tau = pid_torque(np.zeros(2), np.zeros(2), np.zeros(2),
                     PIDGains(kp=3.0, ki=2.0, kd=1.0))
    np.testing.assert_array_equal(tau, np.zeros(2))


def test_pid_step_response_zero_gravity_pendulum():
    from smclab.dynamics import step

    model = pend.with_gravity((0.0, 0.0, 0.0))
    gains = PIDGains(kp=40.0, ki=2.0, kd=10.0)
    target = np.array([0.5])
    state = JointState(q=np.zeros(1), qd=np.zeros(1))
    e_int = np.zeros(1)
    dt = 1e-3
    for _ in range(2000):
        e = state.q - target
        e_int = np.clip(e_int + e * dt, -2.0, 2.0)
        tau = pid_torque(e, e_int, state.qd, gains)
        state = step(model, state, tau, dt)
    assert abs(state.q[0] - target[0]) < 0.01


def test_gain_broadcast_and_per_joint():
    per_joint = SlidingParams(p1=np.array([10.0, 20.0]), p2=1.0, p3=5.0)
    sigma = sliding_surface(np.array([0.1, 0.1]), np.zeros(2), per_joint)
    np.testing.assert_allclose(sigma, [1.0, 2.0])
    with pytest.raises(ValueError, match="p1"):
        SlidingParams(p1=np.array([1.0, 2.0, 3.0]), p2=1.0, p3=1.0).as_arrays(2)


def test_closed_loop_sigma_decay_follows_tanh_law():
    # exact-model plant: sigma' = -P3 tanh(sigma) per joint, so |sigma|
    # reaches the boundary layer by the sinh-ratio time (plus slack),
    # later than the nominal |sigma0| / P3 of hard switching
    from smclab.harness import Scenario, run_scenario

    sigma0 = 0.6
    p3 = 60.0
    dt = 1e-3
    scenario = Scenario(
        model="ur5e_like",
        trajectory={"type": "hold", "q": [0.0] * 6, "duration": 0.2},
        controller="mbsmc",
        gains={"mbsmc": SlidingParams(p1=100.0, p2=1.0, p3=p3)},
        dt=dt, duration=0.2,
        initial_q_offset=np.full(6, sigma0 / 100.0),
        name="reaching",
    )
    log = run_scenario(scenario)
    t_pred = tanh_reaching_time(sigma0, p3, eps=0.05)
    reached = np.array([np.argmax(np.abs(log.sigma[:, j]) < 0.05) * dt
                        for j in range(6)])
    assert np.all(reached <= t_pred + 5 * dt)
    # and the descent is no faster than the ideal hard-switching rate
    assert np.all(reached >= reaching_time_bound(sigma0, p3) - 5 * dt)


def test_closed_loop_lyapunov_decreases_outside_layer():
    from smclab.harness import Scenario, run_scenario

    scenario = Scenario(
        model="ur5e_like",
        trajectory={"type": "hold", "q": [0.0] * 6, "duration": 0.3},
        controller="mbsmc",
        gains={"mbsmc": P_DEFAULT},
        dt=1e-3, duration=0.3,
        initial_q_offset=np.full(6, 0.008),
        name="lyapunov",
    )
    log = run_scenario(scenario)
    V = log.V
    outside = np.max(np.abs(log.sigma), axis=1) > 0.05
    dV = np.diff(V)
    assert np.all(dV[outside[:-1]] <= 0.0)
