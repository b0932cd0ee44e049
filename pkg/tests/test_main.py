"""Tests for the command-line entry point."""

import json

import pytest

from lattice_nls.lib.main import RunConfig, compute_bounds, load_config, run
from lattice_nls.lib.livetypes import ConfigError

POWER4 = {"kind": "power", "p": 4}
POWER8 = {"kind": "power", "p": 8}
SMALL_SWEEPS = {"trials": 2, "sweep_fields": 20, "sweep_dims": [1], "sweep_L": 2}


@pytest.fixture
def write_config(tmp_path):
    def write(data, name="run.json"):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
        return str(path)

    return write


def run_cli(command, config_path, out, *extra):
    return run([command, "--config", config_path, "--out", str(out), *extra])


class TestLoadConfig:
    """Tests for configuration parsing."""

    def test_defaults(self, write_config):
        """Only domain and nonlinearity are required."""
        config = load_config(write_config({"domain": {"d": 1, "L": 3}, "nonlinearity": POWER4}))
        assert isinstance(config, RunConfig)
        assert config.potential.kind == "zero"
        assert config.mass is None
        assert config.effective_seed == 0

    def test_strict_override_reaches_solver(self, write_config):
        """--strict lands in the solver section."""
        path = write_config({"domain": {"d": 1, "L": 1}, "nonlinearity": POWER4, "solver": {"tol": 1e-8}})
        config = load_config(path, {"strict": True, "seed": 5})
        assert config.solve_config.strict
        assert config.solve_config.tol == 1e-8
        assert config.solve_config.seed == 5

    def test_field_path_in_error(self, write_config):
        """Validation errors name the offending field."""
        path = write_config({"domain": {"d": 0, "L": 1}, "nonlinearity": POWER4})
        with pytest.raises(ConfigError, match="domain.d"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        """An unreadable path is a config error."""
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.json"))


class TestComputeBounds:
    """Tests for the bounds payload."""

    def test_subcritical(self, write_config):
        """Power(4), d=1: upper 5, trivial lower bound, alpha_zero."""
        bounds = compute_bounds(load_config(write_config({"domain": {"d": 1, "L": 3}, "nonlinearity": POWER4})))
        assert bounds["alpha_upper"] == 5
        assert bounds["alpha_lower"] == 0.0
        assert bounds["C_F"] is None
        assert bounds["criterion"] == "alpha_zero"
        assert not bounds["lower_is_heuristic"]

    def test_supercritical_with_configured_constant(self, write_config):
        """Power(8), d=1, C_gns = 0.5, delta = 0.5: lower = min(4, 0.25)."""
        path = write_config(
            {"domain": {"d": 1, "L": 3}, "nonlinearity": POWER8, "thresholds": {"C_gns": 0.5, "delta": 0.5}}
        )
        bounds = compute_bounds(load_config(path))
        assert bounds["alpha_upper"] == 9
        assert bounds["alpha_lower"] == pytest.approx(0.25)
        assert bounds["C_F"] == pytest.approx(1 / 32)
        assert not bounds["lower_is_heuristic"]

    def test_estimated_constant_is_heuristic(self, write_config):
        """Without C_gns the lower bound rests on a numerical estimate."""
        path = write_config({"domain": {"d": 1, "L": 3}, "nonlinearity": POWER8, "inequalities": SMALL_SWEEPS})
        bounds = compute_bounds(load_config(path))
        assert bounds["lower_is_heuristic"]
        assert bounds["C_gns"] >= 0.5


class TestSolveCommand:
    """Tests for `solve`."""

    def test_writes_artifacts(self, write_config, tmp_path):
        """solve.json reports convergence and field.csv has one row per site."""
        path = write_config({"domain": {"d": 1, "L": 3}, "nonlinearity": POWER4, "mass": 2.0})
        out = tmp_path / "out"
        assert run_cli("solve", path, out) == 0
        payload = json.loads((out / "solve.json").read_text())
        assert payload["converged"] is True
        assert payload["a"] == pytest.approx(2.0)
        assert len(payload["starts"]) == 6
        lines = (out / "field.csv").read_text().splitlines()
        assert lines[0] == "x1,value"
        assert len(lines) == 8

    def test_missing_mass(self, write_config, tmp_path, capsys):
        """solve without a mass exits 2 naming the field."""
        path = write_config({"domain": {"d": 1, "L": 3}, "nonlinearity": POWER4})
        assert run_cli("solve", path, tmp_path / "out") == 2
        assert "mass" in capsys.readouterr().err

    def test_strict_non_convergence(self, write_config, tmp_path):
        """--strict turns a non-converged solve into exit 3."""
        path = write_config(
            {"domain": {"d": 1, "L": 5}, "nonlinearity": POWER4, "mass": 2.0, "solver": {"max_iters": 1}}
        )
        assert run_cli("solve", path, tmp_path / "out", "--strict") == 3

    def test_non_convergence_without_strict(self, write_config, tmp_path):
        """Without --strict the best iterate is still written."""
        path = write_config(
            {"domain": {"d": 1, "L": 5}, "nonlinearity": POWER4, "mass": 2.0, "solver": {"max_iters": 1}}
        )
        out = tmp_path / "out"
        assert run_cli("solve", path, out) == 0
        assert json.loads((out / "solve.json").read_text())["converged"] is False


class TestConfigErrors:
    """Tests for configuration failures at the CLI."""

    def test_invalid_json(self, write_config, tmp_path):
        """Unparseable JSON exits 2."""
        assert run_cli("solve", write_config("{not json"), tmp_path / "out") == 2

    def test_unknown_field(self, write_config, tmp_path, capsys):
        """Unknown keys are rejected by name."""
        path = write_config({"domain": {"d": 1, "L": 1}, "nonlinearity": POWER4, "bogus": 1})
        assert run_cli("bounds", path, tmp_path / "out") == 2
        assert "bogus" in capsys.readouterr().err

    def test_bad_mass_grid(self, write_config, tmp_path, capsys):
        """Decreasing grids exit 2."""
        path = write_config({"domain": {"d": 1, "L": 1}, "nonlinearity": POWER4, "mass_grid": [1.0, 0.5]})
        assert run_cli("scan", path, tmp_path / "out") == 2
        assert "mass_grid" in capsys.readouterr().err

    def test_missing_config_flag(self):
        """argparse exits 2 when --config is absent."""
        with pytest.raises(SystemExit) as exc:
            run(["solve"])
        assert exc.value.code == 2


class TestScanCommand:
    """Tests for `scan`."""

    CONFIG = {
        "domain": {"d": 1, "L": 3},
        "nonlinearity": POWER8,
        "mass_grid": [0.5, 1.0, 2.0, 4.0, 8.0],
        "thresholds": {"bisection_iters": 2, "C_gns": 0.5},
        "inequalities": SMALL_SWEEPS,
    }

    def test_writes_artifacts(self, write_config, tmp_path):
        """scan.csv has the fixed header and summary.json the bracket."""
        out = tmp_path / "out"
        assert run_cli("scan", write_config(self.CONFIG), out) == 0
        lines = (out / "scan.csv").read_text().splitlines()
        assert lines[0] == "a,E,lambda,residual,iters,converged"
        assert len(lines) == 6
        summary = json.loads((out / "summary.json").read_text())
        assert set(summary) >= {"alpha_bracket", "alpha_status", "eps_neg", "bounds", "criterion", "all_converged"}
        assert summary["bounds"]["upper"] == 9
        assert summary["criterion"] == "alpha_positive"

    def test_byte_identical_reruns(self, write_config, tmp_path):
        """Two runs of the same config write identical files."""
        path = write_config(self.CONFIG)
        assert run_cli("scan", path, tmp_path / "a") == 0
        assert run_cli("scan", path, tmp_path / "b") == 0
        for name in ("scan.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestBoundsCommand:
    """Tests for `bounds`."""

    def test_bounds_json(self, write_config, tmp_path):
        """Power(4), d=1 yields alpha_upper = 5."""
        out = tmp_path / "out"
        path = write_config({"domain": {"d": 1, "L": 3}, "nonlinearity": POWER4})
        assert run_cli("bounds", path, out) == 0
        assert json.loads((out / "bounds.json").read_text())["alpha_upper"] == 5


class TestConstantCommands:
    """Tests for `gns` and `hardy`."""

    KEYS = {"inequality", "d", "p", "estimate", "direction", "box_L", "trials", "seed"}

    def test_gns(self, write_config, tmp_path):
        """gns.json is a lower estimate with its provenance."""
        out = tmp_path / "out"
        path = write_config({"domain": {"d": 1, "L": 3}, "nonlinearity": POWER4, "inequalities": {"trials": 2}})
        assert run_cli("gns", path, out, "--seed", "4") == 0
        payload = json.loads((out / "gns.json").read_text())
        assert set(payload) == self.KEYS
        assert payload["direction"] == "lower"
        assert payload["seed"] == 4
        assert payload["estimate"] >= 0.5

    def test_hardy(self, write_config, tmp_path):
        """hardy.json adds the admissibility check of the configured potential."""
        out = tmp_path / "out"
        path = write_config(
            {
                "domain": {"d": 3, "L": 2},
                "potential": {"kind": "well", "c": 1},
                "nonlinearity": POWER4,
                "inequalities": {"trials": 1},
            }
        )
        assert run_cli("hardy", path, out) == 0
        payload = json.loads((out / "hardy.json").read_text())
        assert set(payload) == self.KEYS | {"potential_check"}
        assert payload["direction"] == "upper"
        assert payload["estimate"] <= 6.0


class TestVerifyCommand:
    """Tests for `verify`."""

    def test_passes(self, write_config, tmp_path):
        """Power(4) without a potential passes hypotheses, curve checks and sweeps."""
        out = tmp_path / "out"
        path = write_config(
            {
                "domain": {"d": 1, "L": 2},
                "nonlinearity": POWER4,
                "mass_grid": [0.5, 1.0, 2.0],
                "inequalities": SMALL_SWEEPS,
            }
        )
        assert run_cli("verify", path, out) == 0
        payload = json.loads((out / "verify.json").read_text())
        assert payload["passed"] is True
        titles = [r["title"] for r in payload["reports"]]
        assert titles == ["hypotheses", "energy_curve", "inequalities"]

    def test_hard_failure_exits_four(self, write_config, tmp_path, capsys):
        """A potential above its limit at the origin fails V0 and exits 4."""
        out = tmp_path / "out"
        path = write_config(
            {
                "domain": {"d": 1, "L": 1},
                "potential": {"kind": "table", "sites": [[-1], [0], [1]], "values": [0.0, 0.5, 0.0], "v_limit": 0.0},
                "nonlinearity": POWER4,
                "inequalities": SMALL_SWEEPS,
            }
        )
        assert run_cli("verify", path, out) == 4
        payload = json.loads((out / "verify.json").read_text())
        assert payload["passed"] is False
        assert "V0" in capsys.readouterr().err


class TestEvolveCommand:
    """Tests for `evolve`."""

    def test_writes_trajectory(self, write_config, tmp_path):
        """trajectory.csv has one row per sample and evolve.json the drifts."""
        out = tmp_path / "out"
        path = write_config(
            {
                "domain": {"d": 1, "L": 3},
                "nonlinearity": POWER4,
                "mass": 1.0,
                "evolution": {"dt": 0.01, "T": 0.1, "samples": 5},
            }
        )
        assert run_cli("evolve", path, out) == 0
        lines = (out / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,mass,energy,mod_dev,phase_err"
        assert len(lines) == 6
        payload = json.loads((out / "evolve.json").read_text())
        assert payload["max_mod_dev"] <= 1e-4
        assert payload["scheme"] == "strang_split"
