"""Virtual accelerometer array and magnetometer.

Four accelerometers sit at ``r0 = 0`` and ``l`` along each body axis. Their
differences cancel both the common linear acceleration and the centripetal
terms, leaving the angular acceleration in closed form
(:func:`extract_theta`). Accelerometer 0 doubles as the gravity-direction
sensor and the magnetometer gives a second inertial direction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels
from .geometry import State, as_vec3, skew

E3 = np.array([0.0, 0.0, 1.0])
GRAVITY = 9.81
DROPOUT_NORM = _kernels.DROPOUT_NORM

LOG_HEADER = ["t"] + [f"a{i}{ax}" for i in range(4) for ax in "xyz"] + ["mx", "my", "mz"]


class MeasurementDropout(ValueError):
    """Accelerometer 0 reads (near) zero so no gravity direction is available."""


def default_offsets(ell: float) -> NDArray[np.float64]:
    return np.array([[0.0, 0.0, 0.0], [ell, 0.0, 0.0], [0.0, ell, 0.0], [0.0, 0.0, ell]])


def _default_m_ring() -> NDArray[np.float64]:
    return np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0)


@dataclass(frozen=True)
class RigConfig:
    """Geometry and noise levels of the sensor rig.

    Parameters
    ----------
    l : float
        Lever arm in metres; also the scale in :func:`extract_theta`.
    offsets : array (4, 3), optional
        Accelerometer positions in the body frame. Defaults to the
        tetrahedral placement ``0, l e1, l e2, l e3``.
    g : float
        Gravity magnitude in m/s^2.
    m_ring : array (3,)
        Inertial magnetic field direction (unit).
    accel_noise_std : float
        Per-axis accelerometer noise, m/s^2.
    mag_noise_std : float
        Per-axis noise added to the unit magnetic direction before renormalising.
    """

    l: float = 1.0
    offsets: NDArray[np.float64] | None = None
    g: float = GRAVITY
    m_ring: NDArray[np.float64] = field(default_factory=_default_m_ring)
    accel_noise_std: float = 0.3
    mag_noise_std: float = 0.3

    def __post_init__(self):
        if not self.l > 0.0:
            raise ValueError(f"lever arm must be positive, got {self.l}")
        offsets = default_offsets(self.l) if self.offsets is None else np.array(self.offsets, float)
        if offsets.shape != (4, 3):
            raise ValueError("offsets must have shape (4, 3)")
        volume = abs(np.linalg.det(offsets[1:] - offsets[0])) / 6.0
        if volume <= 1e-12:
            raise ValueError("accelerometer offsets are coplanar")
        m_ring = np.array(self.m_ring, dtype=float).reshape(3)
        if abs(np.linalg.norm(m_ring) - 1.0) > 1e-12:
            raise ValueError("m_ring must be a unit vector")
        if np.degrees(np.arccos(min(1.0, abs(m_ring @ E3)))) <= 1.0:
            raise ValueError("m_ring must not be parallel to the vertical")
        if self.accel_noise_std < 0 or self.mag_noise_std < 0:
            raise ValueError("noise standard deviations must be non-negative")
        offsets.flags.writeable = False
        m_ring.flags.writeable = False
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "m_ring", m_ring)


@dataclass(frozen=True)
class MeasurementFrame:
    """One sample: four accelerometer vectors ``a`` (4, 3) and a unit magnetometer vector ``m``."""

    t: float
    a: NDArray[np.float64]
    m: NDArray[np.float64]

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(4, 3)
        m = np.array(self.m, dtype=float).reshape(3)
        a.flags.writeable = False
        m.flags.writeable = False
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class OutputPair:
    a_dir: NDArray[np.float64]
    m_dir: NDArray[np.float64]


def _noise(rng: np.random.Generator | None, std: float, shape) -> NDArray[np.float64]:
    if rng is None or std == 0.0:
        return np.zeros(shape)
    return std * rng.standard_normal(shape)


def specific_force(x: State, rig: RigConfig, linear_accel: ArrayLike | None = None) -> NDArray[np.float64]:
    """Common accelerometer term in the body frame.

    ``linear_accel`` is the body's inertial-frame acceleration; by default the
    body is assumed not to translate and only the gravity reaction remains.
    """
    f = rig.g * E3
    if linear_accel is not None:
        f = f + as_vec3(linear_accel)
    return x.R.T @ f


def simulate_accelerometer(
    x: State,
    theta: ArrayLike,
    rig: RigConfig,
    i: int,
    rng: np.random.Generator | None = None,
    linear_accel: ArrayLike | None = None,
) -> NDArray[np.float64]:
    """Reading of accelerometer ``i``: ``a0 + theta^x r_i + Omega^x Omega^x r_i + noise``."""
    if i not in (0, 1, 2, 3):
        raise IndexError(f"accelerometer index must be 0..3, got {i}")
    r = rig.offsets[i]
    W = skew(x.Omega)
    a = specific_force(x, rig, linear_accel) + skew(theta) @ r + W @ (W @ r)
    return a + _noise(rng, rig.accel_noise_std, 3)


def simulate_frame(
    x: State,
    theta: ArrayLike,
    rig: RigConfig,
    t: float = 0.0,
    rng: np.random.Generator | None = None,
    mag_rng: np.random.Generator | None = None,
    linear_accel: ArrayLike | None = None,
) -> MeasurementFrame:
    """Sample all sensors at state ``x``.

    Accelerometer noise is drawn from ``rng`` as one (4, 3) block, magnetometer
    noise from ``mag_rng`` (falling back to ``rng``). Pass no generator for a
    noise-free frame.
    """
    if mag_rng is None:
        mag_rng = rng
    a0 = specific_force(x, rig, linear_accel)
    W = skew(x.Omega)
    T = skew(theta)
    offsets = rig.offsets
    a = a0 + offsets @ T.T + offsets @ (W @ W).T
    a = a + _noise(rng, rig.accel_noise_std, (4, 3))
    m = x.R.T @ rig.m_ring + _noise(mag_rng, rig.mag_noise_std, 3)
    return MeasurementFrame(t, a, m / np.linalg.norm(m))


def extract_theta(frame: MeasurementFrame, l: float) -> NDArray[np.float64]:
    """Angular acceleration from the accelerometer differences.

    Each component is ``1/(2l)`` times a difference of two cross-axis
    readings; the common term and the centripetal terms cancel exactly.
    """
    if not l > 0.0:
        raise ValueError(f"lever arm must be positive, got {l}")
    return _kernels.extract_theta(np.array(frame.a), float(l))


def output_pair(frame: MeasurementFrame) -> OutputPair:
    """Unit gravity and magnetic directions in the body frame.

    Raises
    ------
    MeasurementDropout
        If ``|a0| <= 1e-6``; the caller should skip the correction for this sample.
    """
    a0 = frame.a[0]
    n = np.linalg.norm(a0)
    if n <= DROPOUT_NORM:
        raise MeasurementDropout(f"|a0| = {n:.3g} is below {DROPOUT_NORM}")
    return OutputPair(a0 / n, np.array(frame.m))


def frames_to_arrays(frames: Sequence[MeasurementFrame]):
    t = np.array([f.t for f in frames])
    acc = np.array([f.a for f in frames]).reshape(-1, 4, 3)
    mag = np.array([f.m for f in frames]).reshape(-1, 3)
    return t, acc, mag


def arrays_to_frames(t, acc, mag) -> list[MeasurementFrame]:
    return [MeasurementFrame(t[j], acc[j], mag[j]) for j in range(len(t))]


def write_measurement_log(path, t, acc, mag) -> Path:
    """Write a replayable measurement log; values use 17 significant digits."""
    path = Path(path)
    t = np.asarray(t, float)
    table = np.column_stack([t, np.asarray(acc, float).reshape(len(t), 12), np.asarray(mag, float)])
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(LOG_HEADER)
            for row in table:
                writer.writerow([f"{v:.17g}" for v in row])
    except OSError as exc:
        raise OSError(f"cannot write measurement log {path}: {exc}") from exc
    return path


def read_measurement_log(path):
    """Inverse of :func:`write_measurement_log`; returns ``(t, acc, mag)`` arrays."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows: Iterable[list[str]] = list(reader)
    except OSError as exc:
        raise OSError(f"cannot read measurement log {path}: {exc}") from exc
    if header != LOG_HEADER:
        raise ValueError(f"{path}: unexpected header {header!r}")
    table = np.array([[float(v) for v in row] for row in rows if row], dtype=float)
    if table.size == 0:
        raise ValueError(f"{path}: measurement log has no samples")
    return table[:, 0], table[:, 1:13].reshape(-1, 4, 3), table[:, 13:16]
