"""Compiled numerical kernels for kinematics, dynamics and simulation.

Every kernel takes the robot description as flat arrays (the tuple returned
by ``RobotModel.packed``):

    a, d, alpha, off : (n,) standard DH rows
    mass             : (n,) link masses
    com              : (n, 3) center of mass in the link's DH frame
    inertia          : (n, 3, 3) inertia tensor about the COM, link frame
    gravity          : (3,) world gravity vector

Frame bookkeeping: ``R[k]`` / ``p[k]`` are the world rotation and origin of
DH frame k, with index 0 the base.  Joint k (0-based) rotates about the z
axis of frame k and link k owns frame k + 1.

Small-matrix products are written out by hand: on 3x3 / 6-vector problems
the generic matmul path costs more than the arithmetic itself.  Everything
here is deterministic -- no randomness, no fastmath reordering.
"""

import numpy as np
from numba import njit

# Central-difference step for the dM/dq evaluation behind the Christoffel
# Coriolis matrix.  1e-5 balances truncation against rounding: smaller
# steps leak white noise from M's last bits into C, and the dt^-4
# amplification of the snap-smoothness metric makes that noise visible.
FD_STEP = 1e-5


@njit(cache=True, inline="always")
def _mm33(A, B, out):
    for r in range(3):
        a0 = A[r, 0]; a1 = A[r, 1]; a2 = A[r, 2]
        out[r, 0] = a0 * B[0, 0] + a1 * B[1, 0] + a2 * B[2, 0]
        out[r, 1] = a0 * B[0, 1] + a1 * B[1, 1] + a2 * B[2, 1]
        out[r, 2] = a0 * B[0, 2] + a1 * B[1, 2] + a2 * B[2, 2]


@njit(cache=True, inline="always")
def _mm33_bt(A, B, out):
    """out = A @ B.T"""
    for r in range(3):
        a0 = A[r, 0]; a1 = A[r, 1]; a2 = A[r, 2]
        out[r, 0] = a0 * B[0, 0] + a1 * B[0, 1] + a2 * B[0, 2]
        out[r, 1] = a0 * B[1, 0] + a1 * B[1, 1] + a2 * B[1, 2]
        out[r, 2] = a0 * B[2, 0] + a1 * B[2, 1] + a2 * B[2, 2]


@njit(cache=True, inline="always")
def _mv3(A, x, y, z, out):
    out[0] = A[0, 0] * x + A[0, 1] * y + A[0, 2] * z
    out[1] = A[1, 0] * x + A[1, 1] * y + A[1, 2] * z
    out[2] = A[2, 0] * x + A[2, 1] * y + A[2, 2] * z


@njit(cache=True, inline="always")
def _cross(ux, uy, uz, vx, vy, vz, out):
    out[0] = uy * vz - uz * vy
    out[1] = uz * vx - ux * vz
    out[2] = ux * vy - uy * vx


@njit(cache=True)
def dh_rp(a, d, alpha, off, q):
    """World rotations (n+1, 3, 3) and origins (n+1, 3) of all DH frames."""
    n = a.shape[0]
    R = np.zeros((n + 1, 3, 3))
    p = np.zeros((n + 1, 3))
    R[0, 0, 0] = 1.0
    R[0, 1, 1] = 1.0
    R[0, 2, 2] = 1.0
    Ra = np.empty((3, 3))
    t = np.empty(3)
    for k in range(n):
        th = q[k] + off[k]
        ct = np.cos(th)
        st = np.sin(th)
        ca = np.cos(alpha[k])
        sa = np.sin(alpha[k])
        Ra[0, 0] = ct; Ra[0, 1] = -st * ca; Ra[0, 2] = st * sa
        Ra[1, 0] = st; Ra[1, 1] = ct * ca;  Ra[1, 2] = -ct * sa
        Ra[2, 0] = 0.0; Ra[2, 1] = sa;      Ra[2, 2] = ca
        _mm33(R[k], Ra, R[k + 1])
        _mv3(R[k], a[k] * ct, a[k] * st, d[k], t)
        p[k + 1, 0] = p[k, 0] + t[0]
        p[k + 1, 1] = p[k, 1] + t[1]
        p[k + 1, 2] = p[k, 2] + t[2]
    return R, p


@njit(cache=True)
def ee_transform(a, d, alpha, off, q):
    """Homogeneous world transform of the end-effector frame."""
    n = a.shape[0]
    R, p = dh_rp(a, d, alpha, off, q)
    T = np.eye(4)
    T[:3, :3] = R[n]
    T[:3, 3] = p[n]
    return T


@njit(cache=True)
def fk_positions_batch(a, d, alpha, off, Q):
    """End-effector positions for a batch of configurations, shape (N, 3)."""
    N = Q.shape[0]
    n = a.shape[0]
    out = np.empty((N, 3))
    for i in range(N):
        R, p = dh_rp(a, d, alpha, off, Q[i])
        out[i, 0] = p[n, 0]
        out[i, 1] = p[n, 1]
        out[i, 2] = p[n, 2]
    return out


@njit(cache=True)
def geometric_jacobian(R, p):
    """6 x n geometric Jacobian (linear rows on top, angular below)."""
    n = R.shape[0] - 1
    J = np.empty((6, n))
    tmp = np.empty(3)
    for j in range(n):
        zx = R[j, 0, 2]; zy = R[j, 1, 2]; zz = R[j, 2, 2]
        rx = p[n, 0] - p[j, 0]
        ry = p[n, 1] - p[j, 1]
        rz = p[n, 2] - p[j, 2]
        _cross(zx, zy, zz, rx, ry, rz, tmp)
        J[0, j] = tmp[0]
        J[1, j] = tmp[1]
        J[2, j] = tmp[2]
        J[3, j] = zx
        J[4, j] = zy
        J[5, j] = zz
    return J


@njit(cache=True)
def com_world(R, p, com):
    """World positions of every link COM, shape (n, 3)."""
    n = com.shape[0]
    out = np.empty((n, 3))
    for i in range(n):
        _mv3(R[i + 1], com[i, 0], com[i, 1], com[i, 2], out[i])
        out[i, 0] += p[i + 1, 0]
        out[i, 1] += p[i + 1, 1]
        out[i, 2] += p[i + 1, 2]
    return out


@njit(cache=True)
def _world_tensors(R, inertia):
    """R_i I_i R_i^T for every link."""
    n = inertia.shape[0]
    out = np.empty((n, 3, 3))
    tmp = np.empty((3, 3))
    for i in range(n):
        _mm33(R[i + 1], inertia[i], tmp)
        _mm33_bt(tmp, R[i + 1], out[i])
    return out


@njit(cache=True)
def inertia_matrix_rp(R, p, mass, com, inertia):
    """Joint-space inertia via tip-to-base composite rigid bodies."""
    n = mass.shape[0]
    M = np.zeros((n, n))
    pc = com_world(R, p, com)
    Iw = _world_tensors(R, inertia)

    comp_mass = 0.0
    ccx = 0.0; ccy = 0.0; ccz = 0.0
    cI = np.zeros((3, 3))
    force = np.empty(3)
    torque = np.empty(3)
    lever = np.empty(3)
    for i in range(n - 1, -1, -1):
        m_i = mass[i]
        new_mass = comp_mass + m_i
        nx = (m_i * pc[i, 0] + comp_mass * ccx) / new_mass
        ny = (m_i * pc[i, 1] + comp_mass * ccy) / new_mass
        nz = (m_i * pc[i, 2] + comp_mass * ccz) / new_mass

        # own link tensor shifted to the new composite COM
        dx = pc[i, 0] - nx; dy = pc[i, 1] - ny; dz = pc[i, 2] - nz
        dd = dx * dx + dy * dy + dz * dz
        newI = np.empty((3, 3))
        newI[0, 0] = Iw[i, 0, 0] + m_i * (dd - dx * dx)
        newI[0, 1] = Iw[i, 0, 1] - m_i * dx * dy
        newI[0, 2] = Iw[i, 0, 2] - m_i * dx * dz
        newI[1, 1] = Iw[i, 1, 1] + m_i * (dd - dy * dy)
        newI[1, 2] = Iw[i, 1, 2] - m_i * dy * dz
        newI[2, 2] = Iw[i, 2, 2] + m_i * (dd - dz * dz)
        if comp_mass > 0.0:
            ex = ccx - nx; ey = ccy - ny; ez = ccz - nz
            ee = ex * ex + ey * ey + ez * ez
            newI[0, 0] += cI[0, 0] + comp_mass * (ee - ex * ex)
            newI[0, 1] += cI[0, 1] - comp_mass * ex * ey
            newI[0, 2] += cI[0, 2] - comp_mass * ex * ez
            newI[1, 1] += cI[1, 1] + comp_mass * (ee - ey * ey)
            newI[1, 2] += cI[1, 2] - comp_mass * ey * ez
            newI[2, 2] += cI[2, 2] + comp_mass * (ee - ez * ez)
        newI[1, 0] = newI[0, 1]
        newI[2, 0] = newI[0, 2]
        newI[2, 1] = newI[1, 2]

        comp_mass = new_mass
        ccx = nx; ccy = ny; ccz = nz
        cI[:] = newI

        # Unit acceleration of joint i spins the composite about its axis;
        # project the resulting wrench onto every proximal joint axis.
        zx = R[i, 0, 2]; zy = R[i, 1, 2]; zz = R[i, 2, 2]
        _cross(zx, zy, zz, ccx - p[i, 0], ccy - p[i, 1], ccz - p[i, 2], force)
        force[0] *= comp_mass
        force[1] *= comp_mass
        force[2] *= comp_mass
        _mv3(cI, zx, zy, zz, torque)
        for j in range(i + 1):
            _cross(ccx - p[j, 0], ccy - p[j, 1], ccz - p[j, 2],
                   force[0], force[1], force[2], lever)
            m_ji = (R[j, 0, 2] * (torque[0] + lever[0])
                    + R[j, 1, 2] * (torque[1] + lever[1])
                    + R[j, 2, 2] * (torque[2] + lever[2]))
            M[j, i] = m_ji
            M[i, j] = m_ji
    return M


@njit(cache=True)
def inertia_matrix(a, d, alpha, off, mass, com, inertia, q):
    R, p = dh_rp(a, d, alpha, off, q)
    return inertia_matrix_rp(R, p, mass, com, inertia)


@njit(cache=True)
def gravity_rp(R, p, mass, com, gravity):
    """dP/dq for total potential energy P = -sum_i m_i g . p_com_i."""
    n = mass.shape[0]
    pc = com_world(R, p, com)
    G = np.zeros(n)
    tmp = np.empty(3)
    for j in range(n):
        zx = R[j, 0, 2]; zy = R[j, 1, 2]; zz = R[j, 2, 2]
        acc = 0.0
        for i in range(j, n):
            _cross(zx, zy, zz,
                   pc[i, 0] - p[j, 0], pc[i, 1] - p[j, 1], pc[i, 2] - p[j, 2], tmp)
            acc -= mass[i] * (gravity[0] * tmp[0] + gravity[1] * tmp[1]
                              + gravity[2] * tmp[2])
        G[j] = acc
    return G


@njit(cache=True)
def gravity_vector(a, d, alpha, off, mass, com, gravity, q):
    R, p = dh_rp(a, d, alpha, off, q)
    return gravity_rp(R, p, mass, com, gravity)


@njit(cache=True)
def potential_energy(a, d, alpha, off, mass, com, gravity, q):
    R, p = dh_rp(a, d, alpha, off, q)
    pc = com_world(R, p, com)
    P = 0.0
    for i in range(mass.shape[0]):
        P -= mass[i] * (gravity[0] * pc[i, 0] + gravity[1] * pc[i, 1]
                        + gravity[2] * pc[i, 2])
    return P


@njit(cache=True)
def coriolis_matrix(a, d, alpha, off, mass, com, inertia, q, qd, h):
    """Christoffel-symbol C(q, qd) from central differences of M(q).

    Built so that qd' (dM/dt - 2 C) qd vanishes, which the sliding-mode
    stability argument relies on.
    """
    n = a.shape[0]
    dM = np.empty((n, n, n))
    qp = q.copy()
    for k in range(n):
        qk = q[k]
        qp[k] = qk + h
        Mp = inertia_matrix(a, d, alpha, off, mass, com, inertia, qp)
        qp[k] = qk - h
        Mm = inertia_matrix(a, d, alpha, off, mass, com, inertia, qp)
        qp[k] = qk
        inv = 1.0 / (2.0 * h)
        for i in range(n):
            for j in range(n):
                dM[k, i, j] = (Mp[i, j] - Mm[i, j]) * inv

    C = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc += (dM[k, i, j] + dM[j, i, k] - dM[i, j, k]) * qd[k]
            C[i, j] = 0.5 * acc
    return C


@njit(cache=True)
def rnea(a, d, alpha, off, mass, com, inertia, gravity, q, qd, qdd):
    """Recursive Newton-Euler inverse dynamics: tau for given (q, qd, qdd).

    Gravity enters through the usual fictitious base acceleration -g.
    """
    n = a.shape[0]
    R, p = dh_rp(a, d, alpha, off, q)
    pc = com_world(R, p, com)
    Iw = _world_tensors(R, inertia)

    omega = np.zeros((n + 1, 3))
    alpha_w = np.zeros((n + 1, 3))
    acc_origin = np.zeros((n + 1, 3))
    acc_origin[0, 0] = -gravity[0]
    acc_origin[0, 1] = -gravity[1]
    acc_origin[0, 2] = -gravity[2]

    force = np.empty((n, 3))
    torque = np.empty((n, 3))
    t1 = np.empty(3)
    t2 = np.empty(3)
    t3 = np.empty(3)

    for i in range(n):
        zx = R[i, 0, 2]; zy = R[i, 1, 2]; zz = R[i, 2, 2]
        omega[i + 1, 0] = omega[i, 0] + zx * qd[i]
        omega[i + 1, 1] = omega[i, 1] + zy * qd[i]
        omega[i + 1, 2] = omega[i, 2] + zz * qd[i]
        _cross(omega[i, 0], omega[i, 1], omega[i, 2], zx, zy, zz, t1)
        alpha_w[i + 1, 0] = alpha_w[i, 0] + zx * qdd[i] + t1[0] * qd[i]
        alpha_w[i + 1, 1] = alpha_w[i, 1] + zy * qdd[i] + t1[1] * qd[i]
        alpha_w[i + 1, 2] = alpha_w[i, 2] + zz * qdd[i] + t1[2] * qd[i]

        rx = p[i + 1, 0] - p[i, 0]
        ry = p[i + 1, 1] - p[i, 1]
        rz = p[i + 1, 2] - p[i, 2]
        _cross(alpha_w[i + 1, 0], alpha_w[i + 1, 1], alpha_w[i + 1, 2], rx, ry, rz, t1)
        _cross(omega[i + 1, 0], omega[i + 1, 1], omega[i + 1, 2], rx, ry, rz, t2)
        _cross(omega[i + 1, 0], omega[i + 1, 1], omega[i + 1, 2], t2[0], t2[1], t2[2], t3)
        acc_origin[i + 1, 0] = acc_origin[i, 0] + t1[0] + t3[0]
        acc_origin[i + 1, 1] = acc_origin[i, 1] + t1[1] + t3[1]
        acc_origin[i + 1, 2] = acc_origin[i, 2] + t1[2] + t3[2]

        rcx = pc[i, 0] - p[i + 1, 0]
        rcy = pc[i, 1] - p[i + 1, 1]
        rcz = pc[i, 2] - p[i + 1, 2]
        _cross(alpha_w[i + 1, 0], alpha_w[i + 1, 1], alpha_w[i + 1, 2], rcx, rcy, rcz, t1)
        _cross(omega[i + 1, 0], omega[i + 1, 1], omega[i + 1, 2], rcx, rcy, rcz, t2)
        _cross(omega[i + 1, 0], omega[i + 1, 1], omega[i + 1, 2], t2[0], t2[1], t2[2], t3)
        acx = acc_origin[i + 1, 0] + t1[0] + t3[0]
        acy = acc_origin[i + 1, 1] + t1[1] + t3[1]
        acz = acc_origin[i + 1, 2] + t1[2] + t3[2]
        force[i, 0] = mass[i] * acx
        force[i, 1] = mass[i] * acy
        force[i, 2] = mass[i] * acz

        _mv3(Iw[i], alpha_w[i + 1, 0], alpha_w[i + 1, 1], alpha_w[i + 1, 2], t1)
        _mv3(Iw[i], omega[i + 1, 0], omega[i + 1, 1], omega[i + 1, 2], t2)
        _cross(omega[i + 1, 0], omega[i + 1, 1], omega[i + 1, 2], t2[0], t2[1], t2[2], t3)
        torque[i, 0] = t1[0] + t3[0]
        torque[i, 1] = t1[1] + t3[1]
        torque[i, 2] = t1[2] + t3[2]

    tau = np.zeros(n)
    fcx = 0.0; fcy = 0.0; fcz = 0.0
    ncx = 0.0; ncy = 0.0; ncz = 0.0
    pcx = 0.0; pcy = 0.0; pcz = 0.0
    for i in range(n - 1, -1, -1):
        _cross(pc[i, 0] - p[i, 0], pc[i, 1] - p[i, 1], pc[i, 2] - p[i, 2],
               force[i, 0], force[i, 1], force[i, 2], t1)
        nx = torque[i, 0] + ncx + t1[0]
        ny = torque[i, 1] + ncy + t1[1]
        nz = torque[i, 2] + ncz + t1[2]
        if i < n - 1:
            _cross(pcx - p[i, 0], pcy - p[i, 1], pcz - p[i, 2], fcx, fcy, fcz, t2)
            nx += t2[0]
            ny += t2[1]
            nz += t2[2]
        fcx += force[i, 0]
        fcy += force[i, 1]
        fcz += force[i, 2]
        ncx = nx; ncy = ny; ncz = nz
        pcx = p[i, 0]; pcy = p[i, 1]; pcz = p[i, 2]
        tau[i] = R[i, 0, 2] * nx + R[i, 1, 2] * ny + R[i, 2, 2] * nz
    return tau


@njit(cache=True)
def forward_dynamics(a, d, alpha, off, mass, com, inertia, gravity, q, qd, tau, h):
    """qdd from M qdd = tau - C qd - G, solved by factorizing M."""
    M = inertia_matrix(a, d, alpha, off, mass, com, inertia, q)
    C = coriolis_matrix(a, d, alpha, off, mass, com, inertia, q, qd, h)
    R, p = dh_rp(a, d, alpha, off, q)
    G = gravity_rp(R, p, mass, com, gravity)
    n = q.shape[0]
    rhs = np.empty(n)
    for i in range(n):
        acc = tau[i] - G[i]
        for j in range(n):
            acc -= C[i, j] * qd[j]
        rhs[i] = acc
    return np.linalg.solve(M, rhs)


@njit(cache=True)
def rk4_step(a, d, alpha, off, mass, com, inertia, gravity, q, qd, tau, dt, h):
    """One fixed-step RK4 update of (q, qd) under constant joint torque."""
    k1v = forward_dynamics(a, d, alpha, off, mass, com, inertia, gravity, q, qd, tau, h)

    q2 = q + (0.5 * dt) * qd
    v2 = qd + (0.5 * dt) * k1v
    k2v = forward_dynamics(a, d, alpha, off, mass, com, inertia, gravity, q2, v2, tau, h)

    q3 = q + (0.5 * dt) * v2
    v3 = qd + (0.5 * dt) * k2v
    k3v = forward_dynamics(a, d, alpha, off, mass, com, inertia, gravity, q3, v3, tau, h)

    q4 = q + dt * v3
    v4 = qd + dt * k3v
    k4v = forward_dynamics(a, d, alpha, off, mass, com, inertia, gravity, q4, v4, tau, h)

    q_next = q + (dt / 6.0) * (qd + 2.0 * v2 + 2.0 * v3 + v4)
    qd_next = qd + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return q_next, qd_next


CTRL_MBSMC = 0
CTRL_NMBSMC = 1
CTRL_PID = 2


@njit(cache=True)
def closed_loop_run(
    pa, pd, palpha, poff, pmass, pcom, pinertia, pgravity,
    ca, cd, calpha, coff, cmass, ccom, cinertia, cgravity,
    ref_q, ref_qd, ref_qdd,
    q0, qd0, dt, ctrl_code, g1, g2, g3,
    saturate, tau_max, integral_clamp, h,
):
    """Fixed-step closed-loop simulation.

    The plant (p*) and the controller's internal model (c*) are separate so
    that model mismatch can be injected on the plant side only.  One torque
    is computed per step from the reference at that step and held constant
    through the RK4 update (control rate equals integration rate).

    Returns (q_log, qd_log, tau_log, sigma_log, V_log, diverged_at) where
    diverged_at is -1 for a clean run, else the index of the first
    non-finite step; rows from there on are zero.
    """
    steps = ref_q.shape[0]
    n = q0.shape[0]
    q_log = np.zeros((steps, n))
    qd_log = np.zeros((steps, n))
    tau_log = np.zeros((steps, n))
    sigma_log = np.zeros((steps, n))
    V_log = np.zeros(steps)

    q = q0.copy()
    qd = qd0.copy()
    e_int = np.zeros(n)
    sigma = np.zeros(n)
    tau = np.zeros(n)
    diverged_at = -1

    for k in range(steps):
        finite = True
        for j in range(n):
            if not (np.isfinite(q[j]) and np.isfinite(qd[j])):
                finite = False
        if not finite:
            diverged_at = k
            break

        e = q - ref_q[k]
        ed = qd - ref_qd[k]

        if ctrl_code == CTRL_MBSMC:
            sigma = g1 * e + g2 * ed
            M = inertia_matrix_rp(*dh_rp(ca, cd, calpha, coff, q), cmass, ccom, cinertia)
            C = coriolis_matrix(ca, cd, calpha, coff, cmass, ccom, cinertia, q, qd, h)
            G = gravity_vector(ca, cd, calpha, coff, cmass, ccom, cgravity, q)
            v = ref_qdd[k] - (g1 / g2) * ed - (g3 / g2) * np.tanh(sigma)
            tau = M @ v + C @ qd + G
        elif ctrl_code == CTRL_NMBSMC:
            sigma = g1 * e + g2 * ed
            tau = -(g1 * e + g3 * np.tanh(sigma))
        else:
            sigma = np.zeros(n)
            e_int = e_int + e * dt
            for j in range(n):
                if e_int[j] > integral_clamp:
                    e_int[j] = integral_clamp
                elif e_int[j] < -integral_clamp:
                    e_int[j] = -integral_clamp
            tau = -(g1 * e + g2 * e_int + g3 * ed)

        if saturate:
            tau = tau.copy()
            for j in range(n):
                if tau[j] > tau_max[j]:
                    tau[j] = tau_max[j]
                elif tau[j] < -tau_max[j]:
                    tau[j] = -tau_max[j]

        V = 0.0
        for j in range(n):
            V += 0.5 * sigma[j] * sigma[j]

        q_log[k] = q
        qd_log[k] = qd
        tau_log[k] = tau
        sigma_log[k] = sigma
        V_log[k] = V

        if k < steps - 1:
            q, qd = rk4_step(pa, pd, palpha, poff, pmass, pcom, pinertia, pgravity,
                             q, qd, tau, dt, h)

    return q_log, qd_log, tau_log, sigma_log, V_log, diverged_at


@njit(cache=True)
def kinetic_energy(a, d, alpha, off, mass, com, inertia, q, qd):
    """Total kinetic energy via the joint-space inertia matrix."""
    M = inertia_matrix(a, d, alpha, off, mass, com, inertia, q)
    n = q.shape[0]
    E = 0.0
    for i in range(n):
        for j in range(n):
            E += 0.5 * qd[i] * M[i, j] * qd[j]
    return E
