import json

import numpy as np
import pytest

from anharmonic.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, build_config, build_parser, main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


class TestConfig:
    def test_defaults(self):
        cfg = build_config(build_parser().parse_args(["simulate"]))
        assert (cfg.a, cfg.c, cfg.y, cfg.dt) == (1.0, -1.0, 0.0, 1e-3)
        assert cfg.sigma is None and cfg.paths is None

    def test_flags_override_file(self, tmp_path):
        conf = tmp_path / "c.json"
        conf.write_text(json.dumps({"a": 2.0, "c": -1.5, "y": -0.5, "sigma": 0.3, "eta-sign": -1}))
        cfg = build_config(build_parser().parse_args(["simulate", "--config", str(conf), "--sigma", "0.1"]))
        assert cfg.a == 2.0 and cfg.eta_sign == -1
        assert cfg.sigma == 0.1

    def test_unknown_key(self, tmp_path):
        conf = tmp_path / "c.json"
        conf.write_text(json.dumps({"bogus": 1}))
        assert main(["simulate", "--config", str(conf)]) == EXIT_CONFIG

    @pytest.mark.parametrize(
        "args",
        [
            ["deterministic", "--a", "1", "--c", "1"],
            ["deterministic", "--y", "0.5"],
            ["simulate", "--dt", "-1"],
            ["simulate", "--sigma", "-0.1"],
            ["simulate", "--driver", "bounded-example", "--noise", "multiplicative"],
            ["validate", "--paths", "999"],
            ["convergence"],
        ],
    )
    def test_config_errors(self, tmp_path, args, capsys):
        assert run(tmp_path, *args) == EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err

    def test_env_output_dir(self, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("ANHARMONIC_OUT", str(target))
        assert main(["deterministic", "--t-end", "1"]) == EXIT_OK
        assert (target / "deterministic.csv").exists()


class TestDeterministic:
    def test_files(self, tmp_path):
        out = tmp_path / "missing" / "dir"
        assert run(out, "deterministic") == EXIT_OK
        data = np.genfromtxt(out / "deterministic.csv", delimiter=",", names=True)
        assert data.dtype.names == ("t", "x0", "u1", "u2", "w1", "w2")
        assert data["x0"].min() >= -1 - 1e-12 and data["x0"].max() <= 1e-12
        sweep = np.loadtxt(out / "mu_sweep.csv", delimiter=",", skiprows=1)
        assert sweep.shape == (99, 2)
        assert np.all(np.isfinite(sweep[:, 1]))
        np.testing.assert_allclose(sweep[[0, -1], 0], [0.01, 0.99])


class TestSimulate:
    def test_three_seeds(self, tmp_path):
        assert run(tmp_path, "simulate", "--seed", "5", "--t-end", "2") == EXIT_OK
        files = sorted(tmp_path.glob("path_seed*.csv"))
        assert [f.name for f in files] == ["path_seed5.csv", "path_seed6.csv", "path_seed7.csv"]
        contents = {f.read_bytes() for f in files}
        assert len(contents) == 3
        meta = json.loads((tmp_path / "simulate.json").read_text())
        assert meta["seed"] == 5 and meta["noise_mode"] == "additive"
        assert all(not p["exploded"] for p in meta["paths"])

    def test_byte_identical_rerun(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert run(d, "simulate", "--paths", "1", "--seed", "9", "--t-end", "3") == EXIT_OK
        assert (a / "path_seed9.csv").read_bytes() == (b / "path_seed9.csv").read_bytes()

    def test_zero_sigma(self, tmp_path):
        assert run(tmp_path, "simulate", "--paths", "1", "--sigma", "0", "--t-end", "2") == EXIT_OK
        data = np.genfromtxt(tmp_path / "path_seed0.csv", delimiter=",", names=True)
        np.testing.assert_array_equal(data["Xn_sigma"], data["x0"])
        # the coefficients themselves do not depend on sigma
        assert np.any(data["x1"] != 0)

    @pytest.mark.parametrize("extra", [["--noise", "multiplicative"], ["--driver", "bounded-example"]])
    def test_variants(self, tmp_path, extra):
        assert run(tmp_path, "simulate", "--paths", "1", "--t-end", "1", "--order", "2", *extra) == EXIT_OK
        header = (tmp_path / "path_seed0.csv").read_text().splitlines()[0]
        assert header == "t,x0,x1,x2,Xn_sigma,x_em"

    def test_explosion_recorded(self, tmp_path):
        # sigma large enough to kick the orbit past the saddle within the horizon
        assert run(tmp_path, "simulate", "--paths", "3", "--sigma", "3", "--t-end", "30", "--dt", "1e-2") == EXIT_OK
        meta = json.loads((tmp_path / "simulate.json").read_text())
        assert any(p["exploded"] for p in meta["paths"])


class TestValidateAndConvergence:
    def test_convergence_report(self, tmp_path):
        assert run(tmp_path, "convergence", "--driver", "bounded-example", "--sigma", "0.01") == EXIT_OK
        rep = json.loads((tmp_path / "convergence.json").read_text())
        assert set(rep) == {"params", "driver_name", "sigma", "T_sigma", "N_at_T_sigma", "tail_bound", "variant_flags"}
        assert rep["tail_bound"] == pytest.approx(1 / (2 * rep["N_at_T_sigma"]), rel=1e-15)

    def test_validate_small(self, tmp_path):
        assert run(tmp_path, "validate", "--paths", "1000", "--t-end", "3") == EXIT_OK
        rep = json.loads((tmp_path / "validate.json").read_text())
        assert rep["passed"]
        assert rep["bounds"]["n_paths"] == 1000

    def test_negative_control(self, tmp_path):
        assert run(tmp_path, "validate", "--paths", "1000", "--t-end", "3", "--negative-control") == EXIT_FAIL
        rep = json.loads((tmp_path / "validate.json").read_text())
        assert not rep["passed"]
        assert rep["convergence"]["checks"]["coefficient_envelope"] is False
