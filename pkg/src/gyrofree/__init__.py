"""Gyro-free attitude and angular-velocity estimation on the symmetry group of second-order attitude kinematics."""

from ._jit import NUMBA_ENABLED, backend_name
from .geometry import (
    InputVelocity,
    Rotation,
    State,
    SymElement,
    phi,
    psi,
    random_rotation,
    random_vec3,
    rho,
    skew,
    so3_exp,
    sym_compose,
    sym_inverse,
    vee,
)
from .observer import (
    Diagnostics,
    ObserverConfig,
    ObserverState,
    estimate,
    innovation,
    lyapunov,
    observer_step,
    tilde_R_commutation_residual,
)
from .sensors import MeasurementFrame, OutputPair, RigConfig, extract_theta, output_pair, simulate_frame
from .sim import SimConfig, load_config, paper_trajectory, run

__version__ = "0.1.0"
