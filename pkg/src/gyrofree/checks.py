"""Built-in invariant quick-suite behind ``gyrofree check``.

Each check draws seeded random samples, measures the worst violation of one
identity and compares it with a fixed tolerance. The suite is a smoke test
of a build; the full property tests live in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (
    InputVelocity,
    State,
    SymElement,
    phi,
    psi,
    random_rotation,
    random_vec3,
    rho,
    so3_exp,
    sym_compose,
    sym_inverse,
    vee,
)
from .kinematics import lifted_dynamics, system_dynamics
from .sensors import RigConfig, extract_theta, simulate_frame

ALGEBRA_TOL = 1e-12
FD_TOL = 1e-6
FD_STEP = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tol)


def _element(rng) -> SymElement:
    return SymElement(random_rotation(rng), random_vec3(rng))


def _state(rng) -> State:
    return State(random_rotation(rng), random_vec3(rng))


def _input(rng) -> InputVelocity:
    return InputVelocity(random_vec3(rng), random_vec3(rng))


def _state_err(x: State, y: State) -> float:
    return max(np.abs(x.R - y.R).max(), np.abs(x.Omega - y.Omega).max())


def _input_err(u: InputVelocity, v: InputVelocity) -> float:
    return max(np.abs(u.pi - v.pi).max(), np.abs(u.theta - v.theta).max())


def _elem_err(A: SymElement, B: SymElement) -> float:
    return max(np.abs(A.Q - B.Q).max(), np.abs(A.q - B.q).max())


def check_group_axioms(rng, n: int) -> float:
    """Associativity, identity and inverse of the semi-direct product."""
    err = 0.0
    e = SymElement.identity()
    for _ in range(n):
        A, B, C = _element(rng), _element(rng), _element(rng)
        err = max(err, _elem_err(sym_compose(sym_compose(A, B), C), sym_compose(A, sym_compose(B, C))))
        err = max(err, _elem_err(sym_compose(A, e), A), _elem_err(sym_compose(e, A), A))
        err = max(err, _elem_err(sym_compose(A, sym_inverse(A)), e))
        err = max(err, _elem_err(sym_compose(sym_inverse(A), A), e))
    return err


def check_right_actions(rng, n: int) -> float:
    """``act(B, act(A, .)) == act(A B, .)`` and identity for phi, psi and rho."""
    err = 0.0
    e = SymElement.identity()
    for _ in range(n):
        A, B = _element(rng), _element(rng)
        x, v, y = _state(rng), _input(rng), random_vec3(rng)
        AB = sym_compose(A, B)
        err = max(err, _state_err(phi(B, phi(A, x)), phi(AB, x)), _state_err(phi(e, x), x))
        err = max(err, _input_err(psi(B, psi(A, v)), psi(AB, v)), _input_err(psi(e, v), v))
        err = max(err, np.abs(rho(B, rho(A, y)) - rho(AB, y)).max(), np.abs(rho(e, y) - y).max())
    return err


def check_equivariance(rng, n: int) -> float:
    """Pushforward of the dynamics under phi equals the dynamics at the image."""
    err = 0.0
    for _ in range(n):
        X, x, v = _element(rng), _state(rng), _input(rng)
        f = system_dynamics(x, v)
        g = system_dynamics(phi(X, x), psi(X, v))
        # phi_X is linear in (R, Omega): (R Q, Q^T (Omega + q)).
        err = max(err, np.abs(f.dR @ X.Q - g.dR).max(), np.abs(X.Q.T @ f.dOmega - g.dOmega).max())
    return err


def check_lift(rng, n: int) -> float:
    """Central-difference check of ``d phi_x0 [F(X, v)] = f(phi_x0(X), v)``."""
    err = 0.0
    h = FD_STEP
    for _ in range(n):
        X, x0, v = _element(rng), _state(rng), _input(rng)
        F = lifted_dynamics(X, v, x0)
        w = vee(F.dQ @ X.Q.T)
        plus = phi(SymElement(so3_exp(h * w) @ X.Q, X.q + h * F.dq), x0)
        minus = phi(SymElement(so3_exp(-h * w) @ X.Q, X.q - h * F.dq), x0)
        f = system_dynamics(phi(X, x0), v)
        err = max(err, np.abs((plus.R - minus.R) / (2 * h) - f.dR).max())
        err = max(err, np.abs((plus.Omega - minus.Omega) / (2 * h) - f.dOmega).max())
    return err


def check_extraction(rng, n: int) -> float:
    """Noise-free angular acceleration is recovered exactly for any Omega."""
    err = 0.0
    for _ in range(n):
        l = float(rng.uniform(0.2, 2.0))
        rig = RigConfig(l=l)
        x = State(random_rotation(rng), random_vec3(rng, 3.0))
        theta = random_vec3(rng)
        frame = simulate_frame(x, theta, rig, linear_accel=random_vec3(rng, 5.0))
        err = max(err, np.abs(extract_theta(frame, l) - theta).max())
    return err


CHECKS: tuple[tuple[str, Callable, float], ...] = (
    ("group axioms", check_group_axioms, ALGEBRA_TOL),
    ("right actions phi/psi/rho", check_right_actions, ALGEBRA_TOL),
    ("equivariance (algebraic)", check_equivariance, ALGEBRA_TOL),
    ("lift property (finite difference)", check_lift, FD_TOL),
    ("angular acceleration extraction", check_extraction, ALGEBRA_TOL),
)


def run_checks(n: int = 200, seed: int = 0) -> list[CheckResult]:
    results = []
    for k, (name, fn, tol) in enumerate(CHECKS):
        rng = np.random.default_rng([seed, k])
        results.append(CheckResult(name, float(fn(rng, n)), tol))
    return results
