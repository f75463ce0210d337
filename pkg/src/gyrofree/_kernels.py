"""Array kernels for the closed-loop simulation.

Every function here takes and returns plain float64 numpy arrays so that it
can be compiled by numba (see :mod:`gyrofree._jit`). The public modules wrap
these in value types; the simulation harness calls them directly.

Conventions: ``Q`` is the rotational part of the symmetry element and evolves
by left multiplication, ``Q' = exp(w dt) Q``; attitudes ``R`` evolve by right
multiplication, ``R' = R exp(Omega dt)``.
"""

import numpy as np

from ._jit import jit

# Below this squared angle so3_exp switches to the second-order series.
SMALL_ANGLE_SQ = 1e-16
DROPOUT_NORM = 1e-6


@jit
def skew(v):
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


@jit
def so3_exp(w):
    theta_sq = w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
    W = skew(w)
    WW = W @ W
    if theta_sq < SMALL_ANGLE_SQ:
        return np.eye(3) + W + 0.5 * WW
    theta = np.sqrt(theta_sq)
    return np.eye(3) + (np.sin(theta) / theta) * W + ((1.0 - np.cos(theta)) / theta_sq) * WW


@jit
def rotation_angle(R):
    """Angle of ``R`` in [0, pi], accurate near both ends of the range."""
    c = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    s = 0.5 * np.sqrt(
        (R[2, 1] - R[1, 2]) ** 2 + (R[0, 2] - R[2, 0]) ** 2 + (R[1, 0] - R[0, 1]) ** 2
    )
    return np.arctan2(s, c)


@jit
def t_dot(A, v):
    """``A.T @ v`` without materialising the transpose."""
    return v @ A


@jit
def t_mat(A, B):
    """``A.T @ B``."""
    return np.ascontiguousarray(A.T) @ B


@jit
def mat_t(A, B):
    """``A @ B.T``."""
    return A @ np.ascontiguousarray(B.T)


# --------------------------------------------------------------------------
# sensors
# --------------------------------------------------------------------------


@jit
def sense(R, omega, theta, offsets, g, m_ring, acc_noise, mag_noise):
    """Four accelerometer readings and one unit magnetometer reading.

    The common term of every accelerometer is the gravity reaction
    ``g R^T e3``; ``acc_noise`` is (4, 3) and ``mag_noise`` is (3,), both
    already scaled by their standard deviations.
    """
    a0 = g * R[2, :]
    W = skew(omega)
    T = skew(theta)
    acc = np.empty((4, 3))
    for i in range(4):
        r = offsets[i]
        acc[i] = a0 + T @ r + W @ (W @ r) + acc_noise[i]
    m = t_dot(R, m_ring) + mag_noise
    m = m / np.sqrt(m @ m)
    return acc, m


@jit
def extract_theta(acc, ell):
    d1 = acc[1] - acc[0]
    d2 = acc[2] - acc[0]
    d3 = acc[3] - acc[0]
    out = np.empty(3)
    out[0] = d2[2] - d3[1]
    out[1] = d3[0] - d1[2]
    out[2] = d1[1] - d2[0]
    return out / (2.0 * ell)


@jit
def output_directions(acc, m):
    """Unit gravity direction from accelerometer 0 plus the magnetometer.

    A near-zero ``a0`` is a dropout: both directions come back as zero
    vectors, which makes the innovation vanish for that sample.
    """
    a0 = acc[0]
    n = np.sqrt(a0 @ a0)
    if n <= DROPOUT_NORM:
        return np.zeros(3), np.zeros(3)
    return a0 / n, m.copy()


# --------------------------------------------------------------------------
# observer
# --------------------------------------------------------------------------


@jit
def innovation(a, m, Q, R0, a_ring, m_ring):
    """``m x m_hat + a x a_hat`` with ``a_hat = (R0 Q)^T a_ring`` etc."""
    RQ = R0 @ Q
    a_hat = t_dot(RQ, a_ring)
    m_hat = t_dot(RQ, m_ring)
    return np.cross(m, m_hat) + np.cross(a, a_hat)


@jit
def lifted_rates(Q, q, omega0, pi, theta):
    """Right-hand side of the lifted kinematics.

    Returns ``(w, dq)`` with ``dQ/dt = skew(w) Q``.
    """
    u = omega0 + q
    Qpi = Q @ pi
    return u + Qpi, np.cross(Qpi, u) + Q @ theta


@jit
def euler_step(Q, q, a, m, theta, R0, omega0, a_ring, m_ring, k1, k2, dt):
    """Geometric Euler step that is exact in the projected coordinates.

    ``Q`` moves by ``exp(w dt)`` on the left and ``q`` is chosen so that the
    estimate's angular velocity ``Q^T (Omega0 + q)`` advances by exactly
    ``theta_hat dt``. In estimate coordinates this is the same recursion as
    the ground truth, ``R+ = R exp((Omega + pi) dt)``.

    ``q`` is obtained by solving ``Q+^T (Omega0 + q+) = Omega_hat+`` rather
    than multiplying by ``Q+``: the two agree on SO(3), but the solve keeps
    the round-off drift of ``Q`` away from orthogonality from compounding
    into the velocity estimate over long runs.
    """
    alpha = innovation(a, m, Q, R0, a_ring, m_ring)
    theta_hat = theta + k2 * alpha
    w, _ = lifted_rates(Q, q, omega0, k1 * alpha, theta_hat)
    Q_next = so3_exp(w * dt) @ Q
    omega_hat = t_dot(Q, omega0 + q)
    target = omega_hat + theta_hat * dt
    return Q_next, np.linalg.solve(np.ascontiguousarray(Q_next.T), target) - omega0


@jit
def euler_forward_step(Q, q, a, m, theta, R0, omega0, a_ring, m_ring, k1, k2, dt):
    """Geometric Euler for ``Q`` with a plain forward Euler step for ``q``."""
    alpha = innovation(a, m, Q, R0, a_ring, m_ring)
    w, dq = lifted_rates(Q, q, omega0, k1 * alpha, theta + k2 * alpha)
    return so3_exp(w * dt) @ Q, q + dq * dt


# --------------------------------------------------------------------------
# diagnostics
# --------------------------------------------------------------------------


@jit
def diagnostics(R, omega, Q, q, R0, omega0, a_ring, m_ring, k2):
    """Error metrics of one (truth, observer) pair.

    Returns ``(values, R_hat, omega_hat)`` where ``values`` holds
    ``att_err_rad, omega_err, lyapunov, innovation_norm, commutation_residual``.
    Direction terms use ``1 - x.y = |x - y|^2 / 2`` for unit vectors, which
    keeps the Lyapunov value non-negative and accurate near zero.
    """
    R_hat = R0 @ Q
    omega_hat = t_dot(Q, omega0 + q)
    a = t_dot(R, a_ring)
    m = t_dot(R, m_ring)
    a_hat = t_dot(R_hat, a_ring)
    m_hat = t_dot(R_hat, m_ring)
    da = a_hat - a
    dm = m_hat - m
    dw = omega - omega_hat
    lyap = 0.5 * (da @ da) + 0.5 * (dm @ dm) + (dw @ dw) / (2.0 * k2)
    alpha = np.cross(m, m_hat) + np.cross(a, a_hat)
    R_tilde = mat_t(R_hat, R)
    M = np.outer(m_ring, m_ring) + np.outer(a_ring, a_ring)
    C = t_mat(R_tilde, M) - M @ R_tilde
    out = np.empty(5)
    out[0] = rotation_angle(R_tilde)
    out[1] = np.sqrt(dw @ dw)
    out[2] = lyap
    out[3] = np.sqrt(alpha @ alpha)
    out[4] = np.sqrt(np.sum(C * C))
    return out, R_hat, omega_hat


# --------------------------------------------------------------------------
# run loops
# --------------------------------------------------------------------------


@jit
def truth_and_frames(R_init, omega_grid, theta_grid, n_steps, dt,
                     offsets, g, m_ring, acc_noise, mag_noise):
    """Ground truth ``R(k+1) = R(k) exp(Omega_k dt)`` and one sensor frame per step.

    ``omega_grid`` and ``theta_grid`` hold the trajectory at ``k dt`` for
    ``k = 0..n_steps``; a frame is produced at every grid point.
    """
    R = np.empty((n_steps + 1, 3, 3))
    acc = np.empty((n_steps + 1, 4, 3))
    mag = np.empty((n_steps + 1, 3))
    R_k = R_init.copy()
    for k in range(n_steps + 1):
        R[k] = R_k
        a_k, m_k = sense(R_k, omega_grid[k], theta_grid[k], offsets, g, m_ring,
                         acc_noise[k], mag_noise[k])
        acc[k] = a_k
        mag[k] = m_k
        if k < n_steps:
            R_k = R_k @ so3_exp(omega_grid[k] * dt)
    return R, omega_grid.copy(), acc, mag


SCHEME_EULER = 0
SCHEME_EULER_FORWARD = 1


@jit
def run_observer(acc, mag, ell, n_steps, scheme, dt, Q_init, q_init,
                 R0, omega0, a_ring, m_ring, k1, k2):
    """Drive the observer through a recorded measurement sequence.

    Step ``k`` consumes frame ``k``; frames beyond ``n_steps - 1`` are unused.
    """
    Q = np.empty((n_steps + 1, 3, 3))
    q = np.empty((n_steps + 1, 3))
    Q[0] = Q_init
    q[0] = q_init
    thetas = np.empty((n_steps, 3))
    for k in range(n_steps):
        a, m = output_directions(acc[k], mag[k])
        theta = extract_theta(acc[k], ell)
        thetas[k] = theta
        if scheme == SCHEME_EULER:
            Qn, qn = euler_step(Q[k], q[k], a, m, theta, R0, omega0, a_ring, m_ring, k1, k2, dt)
        else:
            Qn, qn = euler_forward_step(Q[k], q[k], a, m, theta, R0, omega0, a_ring, m_ring,
                                        k1, k2, dt)
        Q[k + 1] = Qn
        q[k + 1] = qn
    return Q, q, thetas


@jit
def project_estimates(Q, q, R0, omega0):
    """``(R0 Q_k, Q_k^T (Omega0 + q_k))`` for every step."""
    n = Q.shape[0]
    R_hat = np.empty((n, 3, 3))
    omega_hat = np.empty((n, 3))
    for k in range(n):
        R_hat[k] = R0 @ Q[k]
        omega_hat[k] = t_dot(Q[k], omega0 + q[k])
    return R_hat, omega_hat


@jit
def evaluate(R, omega, Q, q, R0, omega0, a_ring, m_ring, k2):
    n = R.shape[0]
    values = np.empty((n, 5))
    R_hat = np.empty((n, 3, 3))
    omega_hat = np.empty((n, 3))
    for k in range(n):
        v, Rh, wh = diagnostics(R[k], omega[k], Q[k], q[k], R0, omega0, a_ring, m_ring, k2)
        values[k] = v
        R_hat[k] = Rh
        omega_hat[k] = wh
    return values, R_hat, omega_hat
