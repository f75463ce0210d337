"""End-to-end simulation: trajectory, sensors, observer, diagnostics.

A run advances the ground truth with ``R(k+1) = R(k) exp(Omega_k dt)`` while
``Omega`` follows the analytic trajectory, samples the sensor rig, feeds the
observer and evaluates the error metrics at every step. The heavy lifting is
done by the array kernels; this module builds their inputs and wraps the
outputs.
"""

from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterator, NamedTuple

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .geometry import State, SymElement, is_rotation, random_rotation, random_vec3
from .observer import ObserverConfig, lift_state
from .sensors import E3, RigConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

TRACE_HEADER = ["t", "att_err_rad", "omega_err", "lyapunov", "innovation_norm", "commutation_residual"]
STATE_HEADER = (
    ["t"]
    + [f"R{i}{j}" for i in range(3) for j in range(3)]
    + ["Wx", "Wy", "Wz"]
    + [f"Rhat{i}{j}" for i in range(3) for j in range(3)]
    + ["What_x", "What_y", "What_z"]
)
# integrator name -> kernel scheme id
INTEGRATORS = {
    "euler": _kernels.SCHEME_EULER,
    "euler_forward": _kernels.SCHEME_EULER_FORWARD,
}


# --------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------


def paper_trajectory(t):
    """``Omega = (sin 0.1t, cos 0.1t, 1)`` and its derivative.

    Accepts a scalar or an array of times; returns arrays of shape (3,) or (n, 3).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("trajectory time must be non-negative")
    omega = np.stack([np.sin(0.1 * t), np.cos(0.1 * t), np.ones_like(t)], axis=-1)
    theta = np.stack([0.1 * np.cos(0.1 * t), -0.1 * np.sin(0.1 * t), np.zeros_like(t)], axis=-1)
    return omega, theta


def constant_rate(omega) -> Callable:
    omega = np.asarray(omega, dtype=float).reshape(3)

    def trajectory(t):
        t = np.asarray(t, dtype=float)
        shape = t.shape + (3,)
        return np.broadcast_to(omega, shape).copy(), np.zeros(shape)

    return trajectory


def table_trajectory(path) -> Callable:
    """Cubic-spline trajectory through a CSV table with columns ``t,wx,wy,wz``."""
    from scipy.interpolate import CubicSpline

    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read trajectory table {path}: {exc}") from exc
    if data.shape[1] != 4 or data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two rows of t,wx,wy,wz")
    spline = CubicSpline(data[:, 0], data[:, 1:], axis=0)
    deriv = spline.derivative()

    def trajectory(t):
        return spline(t), deriv(t)

    return trajectory


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one simulation run.

    ``trajectory`` is ``"paper_default"``, ``("constant_rate", omega)`` or
    ``("custom_table", path)``. ``reference_mode`` is ``"random"`` or a
    :class:`State`; ``init_mode`` is ``"random"``, ``"truth"`` (start on the
    true lifted state) or a :class:`SymElement`.
    """

    dt: float = 1e-3
    duration: float = 60.0
    seed: int = 0
    k1: float = 3.0
    k2: float = 1.0
    rig: RigConfig = field(default_factory=RigConfig)
    trajectory: Any = "paper_default"
    noise_on: bool = True
    reference_mode: Any = "random"
    init_mode: Any = "random"
    integrator: str = "euler"
    initial_attitude: NDArray[np.float64] | None = None
    output_path: Path | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.duration >= self.dt:
            raise ValueError("duration must be at least one time step")
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError("gains must be positive")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {sorted(INTEGRATORS)}")
        if self.initial_attitude is not None and not is_rotation(self.initial_attitude):
            raise ValueError("initial_attitude is not a rotation")
        _trajectory_fn(self.trajectory)  # fails early on a bad trajectory
        if not (self.reference_mode == "random" or isinstance(self.reference_mode, State)):
            raise ValueError("reference_mode must be 'random' or an explicit State")
        if not (self.init_mode in ("random", "truth") or isinstance(self.init_mode, SymElement)):
            raise ValueError("init_mode must be 'random', 'truth' or an explicit SymElement")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def scheme(self) -> int:
        return INTEGRATORS[self.integrator]


def _trajectory_fn(traj) -> Callable:
    if isinstance(traj, str):
        if traj in ("paper_default", "paper"):
            return paper_trajectory
        raise ValueError(f"unknown trajectory {traj!r}")
    kind, arg = traj
    if kind == "constant_rate":
        return constant_rate(arg)
    if kind == "custom_table":
        return table_trajectory(arg)
    raise ValueError(f"unknown trajectory kind {kind!r}")


def _mode_kind(value, name) -> tuple[str, dict]:
    if isinstance(value, str):
        return value, {}
    if isinstance(value, dict) and "kind" in value:
        return value["kind"], value
    raise ValueError(f"{name} must be a string or a table with a 'kind' key")


CONFIG_KEYS = {
    "dt", "duration", "seed", "k1", "k2", "l", "accel_noise_std", "mag_noise_std", "noise_on",
    "trajectory", "reference_mode", "init_mode", "out_dir", "integrator", "g", "m_ring",
    "initial_attitude",
}


def config_from_dict(data: dict, base_dir: Path | None = None) -> SimConfig:
    """Build a :class:`SimConfig` from the TOML schema (see README)."""
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    rig_kwargs = {}
    for key in ("l", "accel_noise_std", "mag_noise_std", "g"):
        if key in data:
            rig_kwargs[key] = float(data[key])
    if "m_ring" in data:
        m = np.asarray(data["m_ring"], dtype=float)
        rig_kwargs["m_ring"] = m / np.linalg.norm(m)

    kind, tbl = _mode_kind(data.get("trajectory", "paper_default"), "trajectory")
    if kind in ("paper_default", "paper"):
        trajectory: Any = "paper_default"
    elif kind == "constant_rate":
        trajectory = ("constant_rate", tuple(float(v) for v in tbl["omega"]))
    elif kind == "custom_table":
        p = Path(tbl["path"])
        trajectory = ("custom_table", p if p.is_absolute() else base_dir / p)
    else:
        raise ValueError(f"unknown trajectory kind {kind!r}")

    kind, tbl = _mode_kind(data.get("reference_mode", "random"), "reference_mode")
    if kind == "random":
        reference: Any = "random"
    elif kind == "explicit":
        reference = State(np.asarray(tbl["R"], float), np.asarray(tbl["Omega"], float))
    else:
        raise ValueError(f"unknown reference_mode {kind!r}")

    kind, tbl = _mode_kind(data.get("init_mode", "random"), "init_mode")
    if kind in ("random", "truth"):
        init: Any = kind
    elif kind == "explicit":
        init = SymElement(np.asarray(tbl["Q"], float), np.asarray(tbl["q"], float))
    else:
        raise ValueError(f"unknown init_mode {kind!r}")

    out_dir = data.get("out_dir")
    if out_dir is not None:
        out_dir = Path(out_dir)
        if not out_dir.is_absolute():
            out_dir = base_dir / out_dir

    initial_attitude = data.get("initial_attitude")
    return SimConfig(
        dt=float(data.get("dt", 1e-3)),
        duration=float(data.get("duration", 60.0)),
        seed=int(data.get("seed", 0)),
        k1=float(data.get("k1", 3.0)),
        k2=float(data.get("k2", 1.0)),
        rig=RigConfig(**rig_kwargs),
        trajectory=trajectory,
        noise_on=bool(data.get("noise_on", True)),
        reference_mode=reference,
        init_mode=init,
        integrator=str(data.get("integrator", "euler")),
        initial_attitude=None if initial_attitude is None else np.asarray(initial_attitude, float),
        output_path=out_dir,
    )


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ValueError(f"{path}: invalid TOML: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------


class TraceRecord(NamedTuple):
    t: float
    att_err_rad: float
    omega_err: float
    lyapunov: float
    innovation_norm: float
    commutation_residual: float


@dataclass
class Trace:
    """Column-wise trace; iterating yields :class:`TraceRecord` rows."""

    t: NDArray[np.float64]
    att_err_rad: NDArray[np.float64]
    omega_err: NDArray[np.float64]
    lyapunov: NDArray[np.float64]
    innovation_norm: NDArray[np.float64]
    commutation_residual: NDArray[np.float64]

    @classmethod
    def from_arrays(cls, t, values) -> "Trace":
        values = np.asarray(values, float)
        return cls(np.asarray(t, float), *(values[:, i].copy() for i in range(5)))

    def as_array(self) -> NDArray[np.float64]:
        return np.column_stack([getattr(self, name) for name in TRACE_HEADER])

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[TraceRecord]:
        for row in self.as_array():
            yield TraceRecord(*(float(v) for v in row))

    def __getitem__(self, k) -> TraceRecord:
        return TraceRecord(*(float(getattr(self, name)[k]) for name in TRACE_HEADER))


@dataclass
class SimResult:
    config: SimConfig
    observer_config: ObserverConfig
    init: SymElement
    trace: Trace
    R: NDArray[np.float64]
    omega: NDArray[np.float64]
    R_hat: NDArray[np.float64]
    omega_hat: NDArray[np.float64]
    Q_hat: NDArray[np.float64]
    q_hat: NDArray[np.float64]
    sample_t: NDArray[np.float64]
    acc: NDArray[np.float64]
    mag: NDArray[np.float64]
    theta_meas: NDArray[np.float64]


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------


def _streams(seed: int):
    ref, init, acc, mag = np.random.SeedSequence(seed).spawn(4)
    return (np.random.default_rng(s) for s in (ref, init, acc, mag))


def _setup(cfg: SimConfig):
    rng_ref, rng_init, rng_acc, rng_mag = _streams(cfg.seed)
    if cfg.reference_mode == "random":
        reference = State(random_rotation(rng_ref), random_vec3(rng_ref))
    else:
        reference = cfg.reference_mode
    obs_cfg = ObserverConfig(cfg.k1, cfg.k2, reference, E3, cfg.rig.m_ring)

    R_init = np.eye(3) if cfg.initial_attitude is None else np.asarray(cfg.initial_attitude, float)
    traj = _trajectory_fn(cfg.trajectory)
    sample_t = np.arange(cfg.n_steps + 1) * cfg.dt
    omega_grid, theta_grid = traj(sample_t)

    if cfg.init_mode == "random":
        init = SymElement(random_rotation(rng_init), random_vec3(rng_init))
    elif cfg.init_mode == "truth":
        init = lift_state(State(R_init, omega_grid[0]), obs_cfg)
    else:
        init = cfg.init_mode

    n = len(sample_t)
    if cfg.noise_on:
        acc_noise = cfg.rig.accel_noise_std * rng_acc.standard_normal((n, 4, 3))
        mag_noise = cfg.rig.mag_noise_std * rng_mag.standard_normal((n, 3))
    else:
        acc_noise = np.zeros((n, 4, 3))
        mag_noise = np.zeros((n, 3))
    return obs_cfg, init, R_init, sample_t, omega_grid, theta_grid, acc_noise, mag_noise


def _observer_args(obs_cfg: ObserverConfig, init: SymElement):
    return (
        np.array(init.Q),
        np.array(init.q),
        np.array(obs_cfg.reference.R),
        np.array(obs_cfg.reference.Omega),
        np.array(obs_cfg.a_ring),
        np.array(obs_cfg.m_ring),
        obs_cfg.k1,
        obs_cfg.k2,
    )


def run(cfg: SimConfig) -> SimResult:
    """Simulate the closed loop; deterministic for a fixed config and seed."""
    obs_cfg, init, R_init, sample_t, omega_grid, theta_grid, acc_noise, mag_noise = _setup(cfg)
    n, dt = cfg.n_steps, cfg.dt
    rig = cfg.rig
    R, omega, acc, mag = _kernels.truth_and_frames(
        np.ascontiguousarray(R_init), np.ascontiguousarray(omega_grid),
        np.ascontiguousarray(theta_grid), n, dt,
        np.array(rig.offsets), float(rig.g), np.array(rig.m_ring), acc_noise, mag_noise,
    )
    Q0, q0, R0, omega0, a_ring, m_ring, k1, k2 = _observer_args(obs_cfg, init)
    Q, q, theta_meas = _kernels.run_observer(
        acc, mag, float(rig.l), n, cfg.scheme, dt, Q0, q0, R0, omega0, a_ring, m_ring, k1, k2
    )
    values, R_hat, omega_hat = _kernels.evaluate(R, omega, Q, q, R0, omega0, a_ring, m_ring, k2)
    trace = Trace.from_arrays(np.arange(n + 1) * dt, values)
    return SimResult(cfg, obs_cfg, init, trace, R, omega, R_hat, omega_hat, Q, q,
                     sample_t, acc, mag, theta_meas)


@dataclass
class ReplayResult:
    Q_hat: NDArray[np.float64]
    q_hat: NDArray[np.float64]
    R_hat: NDArray[np.float64]
    omega_hat: NDArray[np.float64]
    trace: Trace | None


def replay(cfg: SimConfig, t, acc, mag, truth: tuple | None = None) -> ReplayResult:
    """Re-run the observer on a recorded measurement log.

    The reference state and initial observer state are regenerated from the
    config and seed, so the output is a function of the log and the config.
    ``truth`` is an optional ``(R, omega)`` pair on the step grid used to
    compute the error trace.
    """
    t = np.asarray(t, float)
    n = len(t) - 1
    if n < 1:
        raise ValueError("measurement log needs at least two samples")
    dt = (t[-1] - t[0]) / n
    if not math.isclose(dt, cfg.dt, rel_tol=1e-9):
        raise ValueError(f"log sample spacing implies dt={dt:g}, config has dt={cfg.dt:g}")
    obs_cfg, init, *_ = _setup(replace(cfg, duration=n * cfg.dt, noise_on=False))
    Q0, q0, R0, omega0, a_ring, m_ring, k1, k2 = _observer_args(obs_cfg, init)
    Q, q, _ = _kernels.run_observer(
        np.ascontiguousarray(acc, dtype=float), np.ascontiguousarray(mag, dtype=float),
        float(cfg.rig.l), n, cfg.scheme, cfg.dt, Q0, q0, R0, omega0, a_ring, m_ring, k1, k2,
    )
    R_hat, omega_hat = _kernels.project_estimates(Q, q, R0, omega0)
    trace = None
    if truth is not None:
        R_true = np.ascontiguousarray(truth[0], dtype=float)
        omega_true = np.ascontiguousarray(truth[1], dtype=float)
        if R_true.shape[0] != n + 1:
            raise ValueError(f"truth has {R_true.shape[0]} steps, log implies {n + 1}")
        values, R_hat, omega_hat = _kernels.evaluate(R_true, omega_true, Q, q, R0, omega0,
                                                     a_ring, m_ring, k2)
        trace = Trace.from_arrays(t[0] + np.arange(n + 1) * cfg.dt, values)
    return ReplayResult(Q, q, R_hat, omega_hat, trace)


# --------------------------------------------------------------------------
# files
# --------------------------------------------------------------------------


def _write_rows(path, header, table) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in table:
                writer.writerow([f"{v:.17g}" for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _read_rows(path, header) -> NDArray[np.float64]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            got = next(reader, None)
            rows = [row for row in reader if row]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    if got != header:
        raise ValueError(f"{path}: unexpected header {got!r}")
    return np.array([[float(v) for v in row] for row in rows], dtype=float).reshape(-1, len(header))


def write_trace_csv(trace: Trace, path) -> Path:
    if len(trace) == 0:
        raise ValueError("empty trace")
    return _write_rows(path, TRACE_HEADER, trace.as_array())


def read_trace_csv(path) -> Trace:
    table = _read_rows(path, TRACE_HEADER)
    return Trace.from_arrays(table[:, 0], table[:, 1:])


def write_states_csv(result: SimResult, path) -> Path:
    n = len(result.trace)
    table = np.column_stack([
        result.trace.t,
        result.R.reshape(n, 9),
        result.omega,
        result.R_hat.reshape(n, 9),
        result.omega_hat,
    ])
    return _write_rows(path, STATE_HEADER, table)


def read_states_csv(path):
    """Return ``(t, R, omega, R_hat, omega_hat)`` from a states file."""
    table = _read_rows(path, STATE_HEADER)
    n = table.shape[0]
    return (table[:, 0], table[:, 1:10].reshape(n, 3, 3), table[:, 10:13],
            table[:, 13:22].reshape(n, 3, 3), table[:, 22:25])
