import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from gyrofree.geometry import State, SymElement
from gyrofree.plot import SVG_NS, write_plot_svg
from gyrofree.sim import (
    STATE_HEADER,
    TRACE_HEADER,
    SimConfig,
    Trace,
    config_from_dict,
    constant_rate,
    load_config,
    paper_trajectory,
    read_states_csv,
    read_trace_csv,
    replay,
    run,
    table_trajectory,
    write_states_csv,
    write_trace_csv,
)

PAPER_TOML = Path(__file__).resolve().parents[1] / "src" / "gyrofree" / "configs" / "paper.toml"


class TestTrajectories:
    def test_default_trajectory_at_zero(self):
        omega, theta = paper_trajectory(0.0)
        np.testing.assert_array_equal(omega, [0.0, 1.0, 1.0])
        np.testing.assert_array_equal(theta, [0.1, 0.0, 0.0])

    def test_default_trajectory_at_five_pi(self):
        omega, _ = paper_trajectory(5 * np.pi)
        np.testing.assert_allclose(omega, [1.0, 0.0, 1.0], atol=1e-15)

    def test_default_trajectory_derivative(self):
        h = 1e-6
        for t in np.linspace(0.0, 60.0, 31)[1:]:
            fd = (paper_trajectory(t + h)[0] - paper_trajectory(t - h)[0]) / (2 * h)
            np.testing.assert_allclose(fd, paper_trajectory(t)[1], atol=1e-6)

    def test_default_trajectory_vectorised(self):
        t = np.array([0.0, 1.0, 2.0])
        omega, theta = paper_trajectory(t)
        assert omega.shape == theta.shape == (3, 3)
        np.testing.assert_array_equal(omega[1], paper_trajectory(1.0)[0])

    def test_default_trajectory_rejects_negative_time(self):
        with pytest.raises(ValueError):
            paper_trajectory(-0.1)

    def test_constant_rate(self):
        omega, theta = constant_rate([0.1, 0.2, 0.3])(np.arange(4.0))
        np.testing.assert_array_equal(omega, np.tile([0.1, 0.2, 0.3], (4, 1)))
        np.testing.assert_array_equal(theta, 0.0)

    def test_table_reproduces_quadratic(self, tmp_path):
        # a cubic spline is exact on polynomials of degree <= 3
        t = np.linspace(0.0, 2.0, 9)
        rows = np.column_stack([t, t**2, 1 - t, np.full_like(t, 0.5)])
        path = tmp_path / "traj.csv"
        np.savetxt(path, rows, delimiter=",", header="t,wx,wy,wz", comments="")
        omega, theta = table_trajectory(path)(np.array([0.3, 1.7]))
        np.testing.assert_allclose(omega[:, 0], [0.09, 2.89], atol=1e-12)
        np.testing.assert_allclose(theta[:, 0], [0.6, 3.4], atol=1e-12)
        np.testing.assert_allclose(theta[:, 1], -1.0, atol=1e-12)

    def test_table_errors(self, tmp_path):
        with pytest.raises(OSError, match="missing.csv"):
            table_trajectory(tmp_path / "missing.csv")
        bad = tmp_path / "bad.csv"
        bad.write_text("t,wx,wy,wz\n0,1,2,3\n")
        with pytest.raises(ValueError, match="two rows"):
            table_trajectory(bad)


class TestConfig:
    def test_shipped_config(self):
        cfg = load_config(PAPER_TOML)
        assert cfg.dt == 1e-3 and cfg.duration == 60.0
        assert (cfg.k1, cfg.k2) == (3.0, 1.0)
        assert cfg.rig.l == 1.0
        assert cfg.rig.accel_noise_std == 0.3 and cfg.rig.mag_noise_std == 0.3
        assert cfg.noise_on and cfg.trajectory == "paper_default"
        assert cfg.reference_mode == "random" and cfg.init_mode == "random"
        assert cfg.n_steps == 60_000

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            config_from_dict({"dt": 1e-3, "gain": 2})

    @pytest.mark.parametrize(
        "data",
        [
            {"dt": 0.0},
            {"dt": 1e-2, "duration": 1e-3},
            {"k1": -1.0},
            {"trajectory": "spiral"},
            {"trajectory": {"kind": "helix"}},
            {"reference_mode": "fixed"},
            {"init_mode": {"kind": "guess"}},
            {"integrator": "rk4"},
            {"l": 0.0},
        ],
    )
    def test_invalid_values(self, data):
        with pytest.raises(ValueError):
            config_from_dict(data)

    def test_explicit_modes(self):
        cfg = config_from_dict({
            "trajectory": {"kind": "constant_rate", "omega": [0.0, 0.0, 1.0]},
            "reference_mode": {"kind": "explicit", "R": np.eye(3).tolist(), "Omega": [0, 0, 0]},
            "init_mode": {"kind": "explicit", "Q": np.eye(3).tolist(), "q": [0.1, 0.0, 0.0]},
        })
        assert cfg.trajectory == ("constant_rate", (0.0, 0.0, 1.0))
        assert isinstance(cfg.reference_mode, State)
        assert isinstance(cfg.init_mode, SymElement)

    def test_relative_paths(self, tmp_path):
        table = tmp_path / "traj.csv"
        table.write_text("t,wx,wy,wz\n0,0,0,1\n1,0,0,1\n2,0,0,1\n")
        toml = tmp_path / "c.toml"
        toml.write_text(
            'duration = 0.01\nout_dir = "results"\n'
            'trajectory = { kind = "custom_table", path = "traj.csv" }\n'
        )
        cfg = load_config(toml)
        assert cfg.trajectory == ("custom_table", tmp_path / "traj.csv")
        assert cfg.output_path == tmp_path / "results"
        run(cfg)

    def test_invalid_toml(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("dt = = 1\n")
        with pytest.raises(ValueError, match="invalid TOML"):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError, match="nope.toml"):
            load_config(tmp_path / "nope.toml")

    def test_initial_attitude_must_be_rotation(self):
        with pytest.raises(ValueError):
            SimConfig(initial_attitude=2 * np.eye(3))


class TestRun:
    def test_exact_tracking_constant_rate(self):
        cfg = SimConfig(duration=60.0, noise_on=False, init_mode="truth",
                        trajectory=("constant_rate", (0.3, -0.2, 1.0)))
        trace = run(cfg).trace
        assert trace.att_err_rad.max() < 1e-9
        assert trace.omega_err.max() < 1e-9

    def test_truth_init_paper_trajectory(self):
        # Euler integration of theta vs the analytic Omega leaves an O(dt) floor
        trace = run(SimConfig(duration=60.0, noise_on=False, init_mode="truth")).trace
        assert trace.att_err_rad.max() < 1e-4
        assert trace.omega_err.max() < 1e-4

    def test_trace_shape_and_times(self):
        r = run(SimConfig(duration=0.05, seed=1))
        assert len(r.trace) == 51
        np.testing.assert_allclose(r.trace.t, np.arange(51) * 1e-3, rtol=0, atol=1e-15)
        assert np.all(np.diff(r.trace.t) > 0)
        assert np.all(np.isfinite(r.trace.as_array()))
        assert r.acc.shape == (51, 4, 3) and r.mag.shape == (51, 3)

    def test_seeds_change_the_run(self):
        a = run(SimConfig(duration=0.05, seed=1)).trace.as_array()
        b = run(SimConfig(duration=0.05, seed=2)).trace.as_array()
        assert not np.array_equal(a, b)

    def test_noise_off_has_clean_measurements(self):
        r = run(SimConfig(duration=0.05, noise_on=False))
        np.testing.assert_allclose(r.theta_meas, paper_trajectory(r.sample_t[:-1])[1], atol=1e-12)

    def test_noise_does_not_change_reference_or_init(self):
        a = run(SimConfig(duration=0.01, seed=4, noise_on=True))
        b = run(SimConfig(duration=0.01, seed=4, noise_on=False))
        np.testing.assert_array_equal(a.init.Q, b.init.Q)
        np.testing.assert_array_equal(a.observer_config.reference.R, b.observer_config.reference.R)

    def test_explicit_reference_and_init(self):
        ref = State(np.eye(3), np.zeros(3))
        init = SymElement(np.eye(3), np.zeros(3))
        r = run(SimConfig(duration=0.01, reference_mode=ref, init_mode=init))
        np.testing.assert_array_equal(r.Q_hat[0], np.eye(3))
        np.testing.assert_array_equal(r.R_hat[0], np.eye(3))

    def test_forward_integrator_runs(self):
        r = run(SimConfig(duration=0.05, integrator="euler_forward"))
        assert np.all(np.isfinite(r.trace.as_array()))


class TestFiles:
    @pytest.fixture(scope="class")
    @classmethod
    def result(cls):
        return run(SimConfig(duration=0.2, seed=7))

    def test_trace_header_and_round_trip(self, result, tmp_path):
        path = write_trace_csv(result.trace, tmp_path / "trace.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "t,att_err_rad,omega_err,lyapunov,innovation_norm,commutation_residual"
        assert lines[0].split(",") == TRACE_HEADER
        assert len(lines) == len(result.trace) + 1
        back = read_trace_csv(path)
        np.testing.assert_array_equal(back.as_array(), result.trace.as_array())

    def test_single_record(self, tmp_path):
        trace = Trace.from_arrays([0.0], [[0.1, 0.2, 0.3, 0.4, 0.5]])
        path = write_trace_csv(trace, tmp_path / "one.csv")
        assert len(path.read_text().splitlines()) == 2
        rec = read_trace_csv(path)[0]
        assert rec.lyapunov == 0.3 and rec.t == 0.0

    def test_empty_trace_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_trace_csv(Trace.from_arrays(np.zeros(0), np.zeros((0, 5))), tmp_path / "e.csv")

    def test_write_error_has_path(self, result, tmp_path):
        with pytest.raises(OSError, match="no_such_dir"):
            write_trace_csv(result.trace, tmp_path / "no_such_dir" / "t.csv")

    def test_states_round_trip(self, result, tmp_path):
        path = write_states_csv(result, tmp_path / "states.csv")
        assert path.read_text().splitlines()[0].split(",") == STATE_HEADER
        t, R, omega, R_hat, omega_hat = read_states_csv(path)
        np.testing.assert_array_equal(R, result.R)
        np.testing.assert_array_equal(omega_hat, result.omega_hat)

    def test_svg_structure(self, result, tmp_path):
        path = write_plot_svg(result.trace, tmp_path / "trace.svg")
        root = ET.parse(path).getroot()
        assert root.tag == f"{{{SVG_NS}}}svg"
        lines = root.findall(f"{{{SVG_NS}}}polyline")
        assert [p.get("id") for p in lines] == ["att_err_rad", "omega_err", "lyapunov"]
        for p in lines:
            pts = [tuple(map(float, xy.split(","))) for xy in p.get("points").split()]
            assert len(pts) == len(result.trace)
            assert all(np.isfinite(v) for xy in pts for v in xy)
        labels = [e.text for e in root.iter(f"{{{SVG_NS}}}text")]
        assert any(lbl and lbl.startswith("1e") for lbl in labels)

    def test_svg_log_axis_and_downsampling(self, tmp_path):
        t = np.linspace(0, 10, 10_001)
        vals = np.column_stack([np.exp(-t), np.exp(-2 * t), np.exp(-3 * t), t, t])
        vals[-1, 2] = 0.0  # clipped to the floor, not a crash
        trace = Trace.from_arrays(t, vals)
        root = ET.parse(write_plot_svg(trace, tmp_path / "p.svg")).getroot()
        p = root.find(f"{{{SVG_NS}}}polyline[@id='att_err_rad']")
        pts = np.array([list(map(float, xy.split(","))) for xy in p.get("points").split()])
        assert len(pts) <= 2000
        # exponential decay is a straight line on a log axis
        coef = np.polyfit(pts[:, 0], pts[:, 1], 1)
        assert np.abs(np.polyval(coef, pts[:, 0]) - pts[:, 1]).max() < 0.02
        assert coef[0] > 0  # decaying values move down the page


class TestReplay:
    def test_noise_free_replay_is_exact(self):
        cfg = SimConfig(duration=2.0, seed=9, noise_on=False)
        r = run(cfg)
        rep = replay(cfg, r.sample_t, r.acc, r.mag, truth=(r.R, r.omega))
        np.testing.assert_array_equal(rep.Q_hat, r.Q_hat)
        np.testing.assert_array_equal(rep.trace.as_array(), r.trace.as_array())

    def test_noisy_replay_is_exact(self):
        cfg = SimConfig(duration=0.5, seed=10, noise_on=True)
        r = run(cfg)
        rep = replay(cfg, r.sample_t, r.acc, r.mag)
        assert rep.trace is None
        np.testing.assert_array_equal(rep.R_hat, r.R_hat)
        np.testing.assert_allclose(rep.omega_hat, r.omega_hat, rtol=0, atol=1e-14)

    def test_dt_mismatch(self):
        cfg = SimConfig(duration=0.1, seed=1)
        r = run(cfg)
        with pytest.raises(ValueError, match="dt"):
            replay(SimConfig(dt=2e-3, duration=0.1), r.sample_t, r.acc, r.mag)

    def test_truth_length_mismatch(self):
        cfg = SimConfig(duration=0.1, seed=1)
        r = run(cfg)
        with pytest.raises(ValueError, match="truth"):
            replay(cfg, r.sample_t, r.acc, r.mag, truth=(r.R[:-1], r.omega[:-1]))

    def test_too_short(self):
        with pytest.raises(ValueError):
            replay(SimConfig(), [0.0], np.zeros((1, 4, 3)), np.zeros((1, 3)))
