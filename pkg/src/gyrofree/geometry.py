"""Rotation primitives and the symmetry group of second-order attitude kinematics.

The symmetry group is the semi-direct product ``SO(3) x| R^3`` with elements
``(Q, q)``. It acts on the right of attitude/velocity states, inputs and
direction outputs through :func:`phi`, :func:`psi` and :func:`rho`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels

ORTHO_TOL = 1e-9
SKEW_TOL = 1e-9


def _frozen(x: ArrayLike, shape: tuple[int, ...]) -> NDArray[np.float64]:
    arr = np.array(x, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries")
    arr.flags.writeable = False
    return arr


def as_vec3(v: ArrayLike) -> NDArray[np.float64]:
    return np.array(v, dtype=np.float64).reshape(3)


def skew(v: ArrayLike) -> NDArray[np.float64]:
    """Matrix ``S`` with ``S @ w == cross(v, w)``."""
    return _kernels.skew(as_vec3(v))


def vee(S: ArrayLike, tol: float = SKEW_TOL) -> NDArray[np.float64]:
    """Inverse of :func:`skew`.

    Raises
    ------
    ValueError
        If the symmetric part of ``S`` exceeds ``tol`` in Frobenius norm.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {S.shape}")
    sym = 0.5 * (S + S.T)
    if np.linalg.norm(sym) > tol:
        raise ValueError(f"matrix is not skew-symmetric (|sym part| = {np.linalg.norm(sym):.3g})")
    return np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]]) * 0.5


def so3_exp(w: ArrayLike) -> NDArray[np.float64]:
    """Rodrigues' formula for ``expm(skew(w))``.

    Below ``|w| = 1e-8`` the second-order series ``I + W + W^2/2`` is used.
    """
    return _kernels.so3_exp(as_vec3(w))


def rotation_angle(R: ArrayLike) -> float:
    """Geodesic distance of ``R`` from the identity, in ``[0, pi]``."""
    return float(_kernels.rotation_angle(np.array(R, dtype=np.float64)))


def is_rotation(R: ArrayLike, tol: float = ORTHO_TOL) -> bool:
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return (
        np.linalg.norm(R.T @ R - np.eye(3)) <= tol and abs(np.linalg.det(R) - 1.0) <= tol
    )


def project_to_so3(M: ArrayLike) -> NDArray[np.float64]:
    """Closest rotation to ``M`` in Frobenius norm (polar factor)."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=np.float64))
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def random_rotation(rng: np.random.Generator) -> NDArray[np.float64]:
    """Haar-uniform rotation from the QR factorisation of a Gaussian matrix.

    The QR factor is sign-corrected so that ``R`` has a positive diagonal,
    which makes ``Q`` Haar on O(3); a column flip then maps det -1 to +1.
    """
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0.0:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_vec3(rng: np.random.Generator, scale: float = 1.0) -> NDArray[np.float64]:
    return scale * rng.standard_normal(3)


@dataclass(frozen=True)
class Rotation:
    """Validated attitude matrix; use where a checked boundary is wanted."""

    matrix: NDArray[np.float64]

    def __post_init__(self):
        m = _frozen(self.matrix, (3, 3))
        if not is_rotation(m):
            raise ValueError("matrix is not a rotation within 1e-9")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, M: ArrayLike, reproject: bool = False) -> "Rotation":
        return cls(project_to_so3(M) if reproject else M)


@dataclass(frozen=True)
class SymElement:
    """Element ``(Q, q)`` of ``SO(3) x| R^3``."""

    Q: NDArray[np.float64]
    q: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "Q", _frozen(self.Q, (3, 3)))
        object.__setattr__(self, "q", _frozen(self.q, (3,)))

    @classmethod
    def identity(cls) -> "SymElement":
        return cls(np.eye(3), np.zeros(3))

    def __matmul__(self, other: "SymElement") -> "SymElement":
        return sym_compose(self, other)

    def inverse(self) -> "SymElement":
        return sym_inverse(self)


@dataclass(frozen=True)
class State:
    """Attitude ``R`` and body-frame angular velocity ``Omega`` (rad/s)."""

    R: NDArray[np.float64]
    Omega: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "R", _frozen(self.R, (3, 3)))
        object.__setattr__(self, "Omega", _frozen(self.Omega, (3,)))


@dataclass(frozen=True)
class InputVelocity:
    """Input angular velocity ``pi`` (rad/s) and angular acceleration ``theta`` (rad/s^2)."""

    pi: NDArray[np.float64]
    theta: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "pi", _frozen(self.pi, (3,)))
        object.__setattr__(self, "theta", _frozen(self.theta, (3,)))


def sym_compose(A: SymElement, B: SymElement) -> SymElement:
    """``(A, a) . (B, b) = (AB, a + A b)``."""
    return SymElement(A.Q @ B.Q, A.q + A.Q @ B.q)


def sym_inverse(A: SymElement) -> SymElement:
    """``(A, a)^-1 = (A^T, -A^T a)``."""
    return SymElement(A.Q.T, -(A.Q.T @ A.q))


def phi(X: SymElement, x: State) -> State:
    """Right action on states: ``(R Q, Q^T (Omega + q))``."""
    return State(x.R @ X.Q, X.Q.T @ (x.Omega + X.q))


def psi(X: SymElement, v: InputVelocity) -> InputVelocity:
    """Right action on inputs: ``(Q^T (pi - q), Q^T theta)``."""
    return InputVelocity(X.Q.T @ (v.pi - X.q), X.Q.T @ v.theta)


def rho(X: SymElement, y: ArrayLike) -> NDArray[np.float64]:
    """Right action on a direction output: ``Q^T y``; ``q`` plays no part."""
    return X.Q.T @ as_vec3(y)


def transport_element(x: State, x_target: State) -> SymElement:
    """The group element taking ``x`` to ``x_target`` under :func:`phi`."""
    Q = x.R.T @ x_target.R
    return SymElement(Q, Q @ x_target.Omega - x.Omega)
