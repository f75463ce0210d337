"""Equivariant observer for second-order attitude kinematics.

The observer state is an element ``(Qhat, qhat)`` of the symmetry group.
Its estimate of the physical state is the action of that element on a fixed
reference ``(R0, Omega0)``. The innovation

    alpha = m x m_hat + a x a_hat

feeds the first-order input with gain ``k1`` and corrects the measured
angular acceleration with gain ``k2``. Along the continuous closed loop the
Lyapunov function

    L = (1 - a_hat.a) + (1 - m_hat.m) + |Omega - Omega_hat|^2 / (2 k2)

satisfies ``dL/dt = -k1 |alpha|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels
from .geometry import State, SymElement, phi
from .sensors import E3, OutputPair, _default_m_ring

# The observer state lives in the symmetry group itself.
ObserverState = SymElement


@dataclass(frozen=True)
class ObserverConfig:
    """Gains, reference state and inertial reference directions."""

    k1: float
    k2: float
    reference: State = field(default_factory=lambda: State(np.eye(3), np.zeros(3)))
    a_ring: NDArray[np.float64] = field(default_factory=lambda: E3.copy())
    m_ring: NDArray[np.float64] = field(default_factory=_default_m_ring)

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError(f"gains must be positive, got k1={self.k1}, k2={self.k2}")
        a_ring = np.array(self.a_ring, dtype=float).reshape(3)
        m_ring = np.array(self.m_ring, dtype=float).reshape(3)
        for name, v in (("a_ring", a_ring), ("m_ring", m_ring)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a unit vector")
        if np.linalg.norm(np.cross(a_ring, m_ring)) < 1e-6:
            raise ValueError("a_ring and m_ring must be linearly independent")
        a_ring.flags.writeable = False
        m_ring.flags.writeable = False
        object.__setattr__(self, "k1", float(self.k1))
        object.__setattr__(self, "k2", float(self.k2))
        object.__setattr__(self, "a_ring", a_ring)
        object.__setattr__(self, "m_ring", m_ring)

    def reference_matrix(self) -> NDArray[np.float64]:
        """``M = m_ring m_ring^T + a_ring a_ring^T``."""
        return np.outer(self.m_ring, self.m_ring) + np.outer(self.a_ring, self.a_ring)


@dataclass(frozen=True)
class Diagnostics:
    lyapunov: float
    att_err_rad: float
    omega_err: float
    innovation_norm: float


_STEPS = {"projected": _kernels.euler_step, "forward": _kernels.euler_forward_step}


def _arrays(obs: ObserverState, cfg: ObserverConfig):
    return (
        np.array(obs.Q),
        np.array(obs.q),
        np.array(cfg.reference.R),
        np.array(cfg.reference.Omega),
        np.array(cfg.a_ring),
        np.array(cfg.m_ring),
    )


def innovation(y: OutputPair, obs: ObserverState, cfg: ObserverConfig):
    """Correction terms ``(pi_hat, delta_theta) = (k1 alpha, k2 alpha)``.

    The predicted directions are ``Qhat^T R0^T a_ring`` and
    ``Qhat^T R0^T m_ring``, i.e. the outputs of the current estimate.
    """
    Q, _, R0, _, a_ring, m_ring = _arrays(obs, cfg)
    alpha = _kernels.innovation(np.array(y.a_dir, float), np.array(y.m_dir, float), Q, R0, a_ring, m_ring)
    return cfg.k1 * alpha, cfg.k2 * alpha


def observer_step(
    obs: ObserverState,
    y: OutputPair | None,
    theta_meas: ArrayLike,
    cfg: ObserverConfig,
    dt: float,
    scheme: str = "projected",
) -> ObserverState:
    """Advance the observer by one geometric Euler step.

    ``Qhat`` moves by ``exp((Omega0 + qhat + Qhat pi_hat) dt)`` on the left.
    With ``scheme="projected"`` (default) ``qhat`` is then set so that the
    estimated angular velocity advances by exactly ``theta_hat dt``, which
    makes the projected estimate follow the same recursion as the ground
    truth. ``scheme="forward"`` takes a plain forward Euler step of ``qhat``
    instead; the two agree to first order in ``dt``. Passing ``y=None``
    (a measurement dropout) propagates with zero innovation.
    """
    dt = float(dt)
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    Q, q, R0, omega0, a_ring, m_ring = _arrays(obs, cfg)
    if y is None:
        a = m = np.zeros(3)
    else:
        a, m = np.array(y.a_dir, float), np.array(y.m_dir, float)
    theta = np.array(theta_meas, dtype=float).reshape(3)
    step = _STEPS.get(scheme)
    if step is None:
        raise ValueError(f"scheme must be one of {sorted(_STEPS)}, got {scheme!r}")
    Qn, qn = step(Q, q, a, m, theta, R0, omega0, a_ring, m_ring, cfg.k1, cfg.k2, dt)
    return ObserverState(Qn, qn)


def estimate(obs: ObserverState, cfg: ObserverConfig) -> State:
    """``(R0 Qhat, Qhat^T (Omega0 + qhat))``."""
    return phi(obs, cfg.reference)


def lift_state(x: State, cfg: ObserverConfig) -> ObserverState:
    """Observer state whose estimate is exactly ``x``."""
    R0, omega0 = cfg.reference.R, cfg.reference.Omega
    Q = R0.T @ x.R
    return ObserverState(Q, Q @ x.Omega - omega0)


def lyapunov(x_true: State, obs: ObserverState, cfg: ObserverConfig) -> Diagnostics:
    """Lyapunov value and error metrics from noise-free directions.

    The attitude error is the angle of ``R_tilde = R_hat R^T``.
    """
    Q, q, R0, omega0, a_ring, m_ring = _arrays(obs, cfg)
    values, _, _ = _kernels.diagnostics(
        np.array(x_true.R), np.array(x_true.Omega), Q, q, R0, omega0, a_ring, m_ring, cfg.k2
    )
    att, werr, lyap, alpha, _ = (float(v) for v in values)
    return Diagnostics(lyapunov=lyap, att_err_rad=att, omega_err=werr, innovation_norm=alpha)


def tilde_R_commutation_residual(x_true: State, obs: ObserverState, cfg: ObserverConfig) -> float:
    """``|R_tilde^T M - M R_tilde|_F``; zero exactly on the observer's equilibria."""
    R_tilde = estimate(obs, cfg).R @ x_true.R.T
    M = cfg.reference_matrix()
    return float(np.linalg.norm(R_tilde.T @ M - M @ R_tilde))
