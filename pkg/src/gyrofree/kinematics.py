"""Second-order attitude kinematics, their lift onto the symmetry group, and integrators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .geometry import InputVelocity, State, SymElement, phi, skew, so3_exp

__all__ = [
    "InputVelocity",
    "State",
    "StateDerivative",
    "SymDerivative",
    "integrate_state",
    "integrate_sym",
    "lifted_dynamics",
    "project_state",
    "system_dynamics",
]


@dataclass(frozen=True)
class StateDerivative:
    """Ambient tangent vector at a state: ``dR`` is 3x3, ``dOmega`` in rad/s^2."""

    dR: NDArray[np.float64]
    dOmega: NDArray[np.float64]


@dataclass(frozen=True)
class SymDerivative:
    """Ambient tangent vector at a group element: ``dQ`` is 3x3."""

    dQ: NDArray[np.float64]
    dq: NDArray[np.float64]


def _check_dt(dt: float) -> float:
    dt = float(dt)
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return dt


def system_dynamics(x: State, v: InputVelocity) -> StateDerivative:
    """``dR/dt = R (Omega + pi)^x``, ``dOmega/dt = theta``."""
    return StateDerivative(x.R @ skew(x.Omega + v.pi), np.array(v.theta))


def lifted_dynamics(X: SymElement, v: InputVelocity, x0: State) -> SymDerivative:
    """System lift at reference ``x0 = (R0, Omega0)``.

    ``dQ = ((Omega0 + q) + Q pi)^x Q`` and
    ``dq = (Q pi)^x (Omega0 + q) + Q theta``.
    """
    w, dq = _kernels.lifted_rates(
        np.array(X.Q), np.array(X.q), np.array(x0.Omega), np.array(v.pi), np.array(v.theta)
    )
    return SymDerivative(skew(w) @ X.Q, dq)


def project_state(X: SymElement, x0: State) -> State:
    """State represented by ``X`` relative to the reference ``x0``; same as ``phi(X, x0)``."""
    return phi(X, x0)


def integrate_state(x: State, v: InputVelocity, dt: float) -> State:
    """One step of ``R+ = R exp((Omega + pi) dt)``, ``Omega+ = Omega + theta dt``."""
    dt = _check_dt(dt)
    return State(x.R @ so3_exp((x.Omega + v.pi) * dt), x.Omega + v.theta * dt)


def integrate_sym(X: SymElement, v: InputVelocity, x0: State, dt: float) -> SymElement:
    """Geometric Euler step of the lifted kinematics.

    ``Q`` is advanced by the exponential of its left velocity so it stays on
    SO(3); ``q`` takes a forward Euler step.
    """
    dt = _check_dt(dt)
    w, dq = _kernels.lifted_rates(
        np.array(X.Q), np.array(X.q), np.array(x0.Omega), np.array(v.pi), np.array(v.theta)
    )
    return SymElement(so3_exp(w * dt) @ X.Q, X.q + dq * dt)
