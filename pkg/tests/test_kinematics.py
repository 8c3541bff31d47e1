"""Forward kinematics, Jacobian, DLS IK and workspace estimation."""

import numpy as np
import pytest

from smclab.kinematics import (Pose, dls_ik, estimate_workspace_volume,
                               forward_kinematics, jacobian, pose_error,
                               workspace_positions)
from smclab.robot_model import load_model

pend = load_model("pendulum1")
planar = load_model("planar2")
ur = load_model("ur5e_like")


def dh_matrix(a, d, alpha, theta):
    """Independent textbook DH transform for the hand-composed oracle."""
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def fk_oracle(model, q):
    T = np.eye(4)
    for k in range(model.n):
        T = T @ dh_matrix(model.dh.a[k], model.dh.d[k], model.dh.alpha[k],
                          q[k] + model.dh.theta_offset[k])
    return T


def random_in_limit(model, rng, scale=1.0):
    lo = model.limits.position_min * scale
    hi = model.limits.position_max * scale
    return rng.uniform(lo, hi)


def test_pendulum_fk_at_zero():
    pose = forward_kinematics(pend, [0.0])
    np.testing.assert_allclose(pose.position, [1.0, 0.0, 0.0], atol=1e-15)


def test_ur5e_fk_zero_matches_hand_composition():
    T = fk_oracle(ur, np.zeros(6))
    pose = forward_kinematics(ur, np.zeros(6))
    np.testing.assert_allclose(pose.position, T[:3, 3], atol=1e-14)
    np.testing.assert_allclose(pose.rotation_matrix, T[:3, :3], atol=1e-14)


def test_fk_matches_oracle_on_random_configurations():
    rng = np.random.default_rng(3)
    for model in (pend, planar, ur):
        for _ in range(20):
            q = random_in_limit(model, rng)
            T = fk_oracle(model, q)
            pose = forward_kinematics(model, q)
            np.testing.assert_allclose(pose.position, T[:3, 3], atol=1e-12)
            np.testing.assert_allclose(pose.rotation_matrix, T[:3, :3], atol=1e-12)


def test_fk_position_bounded_by_chain_length():
    rng = np.random.default_rng(4)
    for model in (pend, planar, ur):
        bound = float(np.sum(np.abs(model.dh.a)) + np.sum(np.abs(model.dh.d)))
        for _ in range(200):
            q = random_in_limit(model, rng)
            pos = forward_kinematics(model, q).position
            assert np.linalg.norm(pos) <= bound + 1e-12


def test_fk_dimension_mismatch():
    with pytest.raises(ValueError, match="joint values"):
        forward_kinematics(planar, [0.0])


def test_jacobian_matches_finite_difference():
    rng = np.random.default_rng(5)
    h = 1e-6
    for model in (pend, planar, ur):
        for _ in range(25):
            q = random_in_limit(model, rng, scale=0.45)
            J = jacobian(model, q)
            for j in range(model.n):
                dq = np.zeros(model.n)
                dq[j] = h
                pose_p = forward_kinematics(model, q + dq)
                pose_m = forward_kinematics(model, q - dq)
                lin = (pose_p.position - pose_m.position) / (2 * h)
                dR = (pose_p.rotation_matrix - pose_m.rotation_matrix) / (2 * h)
                W = dR @ forward_kinematics(model, q).rotation_matrix.T
                ang = np.array([W[2, 1], W[0, 2], W[1, 0]])
                np.testing.assert_allclose(J[:3, j], lin, atol=1e-6)
                np.testing.assert_allclose(J[3:, j], ang, atol=1e-6)


def test_pendulum_jacobian_at_zero():
    J = jacobian(pend, [0.0])
    np.testing.assert_allclose(J[:3, 0], [0.0, 1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(J[3:, 0], [0.0, 0.0, 1.0], atol=1e-15)


def test_planar2_fold_is_singular():
    # straight fold: both columns of the planar block are parallel
    J = jacobian(planar, [0.3, 0.0])
    planar_block = J[:2, :]
    assert np.linalg.matrix_rank(planar_block, tol=1e-10) < 2
    # away from the fold the rank is full
    J = jacobian(planar, [0.3, 0.8])
    assert np.linalg.matrix_rank(J[:2, :], tol=1e-10) == 2


def test_pose_quaternion_norm_enforced():
    with pytest.raises(ValueError, match="norm"):
        Pose(position=np.zeros(3), orientation=np.array([1.0, 0.0, 0.0, 0.5]))


def test_dls_fixed_point():
    q0 = np.array([0.4, -0.7])
    target = forward_kinematics(planar, q0)
    result = dls_ik(planar, target, q0)
    assert result.converged
    np.testing.assert_allclose(result.q, q0, atol=1e-9)


def test_dls_converges_from_perturbed_seed():
    rng = np.random.default_rng(6)
    for _ in range(10):
        q_true = random_in_limit(ur, rng, scale=0.3)
        target = forward_kinematics(ur, q_true)
        seed = q_true + rng.normal(scale=0.05, size=ur.n)
        result = dls_ik(ur, target, seed, tol=1e-6)
        assert result.converged
        err = pose_error(target, forward_kinematics(ur, result.q))
        assert np.linalg.norm(err[:3]) < 1e-4
        assert np.linalg.norm(err[3:]) < 1e-4


def test_dls_unreachable_flags_not_raises():
    target = Pose(position=np.array([2.0, 0.0, 0.0]),
                  orientation=np.array([0.0, 0.0, 0.0, 1.0]))
    result = dls_ik(ur, target, np.zeros(6), max_iters=60)
    assert not result.converged
    assert np.all(np.isfinite(result.q))


def test_dls_error_monotone_over_accepted_iterations():
    # progress check: the final error never exceeds the seed error
    rng = np.random.default_rng(7)
    for _ in range(10):
        q_true = random_in_limit(ur, rng, scale=0.3)
        target = forward_kinematics(ur, q_true)
        seed = q_true + rng.normal(scale=0.2, size=ur.n)
        e0 = np.linalg.norm(pose_error(target, forward_kinematics(ur, seed)))
        result = dls_ik(ur, target, seed, max_iters=50, tol=1e-12)
        assert result.error_norm <= e0 + 1e-15


def test_workspace_deterministic_and_monotone():
    v1 = estimate_workspace_volume(planar, 20_000, 0.02, rng_seed=9)
    v2 = estimate_workspace_volume(planar, 20_000, 0.02, rng_seed=9)
    assert v1 == v2
    v_small = estimate_workspace_volume(planar, 5_000, 0.02, rng_seed=9)
    assert v_small <= v1


def test_workspace_prefix_property():
    p1 = workspace_positions(ur, 1000, rng_seed=3)
    p2 = workspace_positions(ur, 2000, rng_seed=3)
    np.testing.assert_array_equal(p1, p2[:1000])


def test_pendulum_workspace_is_a_shell():
    # a 1-DOF circle has measure zero: volume vanishes as the voxels shrink
    volumes = [estimate_workspace_volume(pend, 50_000, voxel, rng_seed=1)
               for voxel in (0.08, 0.04, 0.02, 0.01)]
    assert volumes[-1] < volumes[0]
    assert volumes[-1] < 0.02


def test_workspace_rejects_bad_args():
    with pytest.raises(ValueError):
        estimate_workspace_volume(pend, 0, 0.02)
    with pytest.raises(ValueError):
        estimate_workspace_volume(pend, 10, -1.0)
