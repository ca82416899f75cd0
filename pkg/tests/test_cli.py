import warnings

import pytest

from sdgcd.cli import ConfigError, RunConfig, main, parse_config, read_config
from sdgcd.system import SingularSystemError


def test_dof_table(tmp_path, capsys):
    assert main(["--experiment", "dof", "--N", "16,64", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "dof_table.csv").read_text().splitlines()
    assert lines[1].startswith("16,3136,1825,")
    assert lines[2].startswith("64,49408,28801,")
    assert float(lines[2].split(",")[3]) == pytest.approx(28801 / 49408)


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sample\nexperiment = 2\nN = 2,4\nmu = 1, 0.01\nmethod = ESDG\n")
    config, _ = parse_config(["--config", str(cfg), "--mu", "0.5"])
    assert config.experiment == 2
    assert config.N_list == (2, 4)
    assert config.mu_list == (0.5,)
    assert config.methods == ("ESDG",)
    assert read_config(cfg)["mu_list"] == (1.0, 0.01)


@pytest.mark.parametrize(
    "argv",
    [
        ["--experiment", "5"],
        ["--experiment", "1", "--N", "2,8"],
        ["--experiment", "1", "--N", "3,6"],
        ["--experiment", "2", "--mu", "-1"],
        ["--experiment", "3", "--theta", "2"],
        ["--experiment", "1", "--degree", "2"],
        ["--experiment", "1", "--quad-degree", "1"],
        ["--experiment", "1", "--method", "CG"],
        ["--nonsense"],
        [],
    ],
)
def test_config_errors_exit_1(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == 1


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment = 1\ncolour = blue\n")
    with pytest.raises(ConfigError):
        read_config(cfg)


def test_theta_outside_experiment3_warns():
    with pytest.warns(UserWarning):
        cfg = RunConfig(experiment=2, N_list=(2, 4), mu_list=(1.0,), theta_list=(0.0,)).validate()
    assert cfg.theta_list == (0.5,)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        RunConfig(experiment=3, N_list=(4,), mu_list=(1.0,), theta_list=(0.0, 1.0)).validate()


def test_convergence_outputs_are_deterministic(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["--experiment", "2", "--N", "2,4", "--mu", "1,0.01", "--out", str(out), "--deterministic"]) == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert "exp2_SDG_mu1.csv" in names and "exp2_ESDG_mu0.01.md" in names
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_stability_sweep_and_samples(tmp_path):
    rc = main(["--experiment", "3", "--N", "4", "--mu", "1,0.001", "--out", str(tmp_path), "--sample", "--dump-mesh"])
    assert rc == 0
    lines = (tmp_path / "exp3_ESDG_N4.csv").read_text().splitlines()
    assert lines[0] == "mu,znorm_theta0,cond_theta0,znorm_theta0.5,cond_theta0.5,znorm_theta1,cond_theta1"
    assert len(lines) == 3
    assert "nan" not in (tmp_path / "exp3_ESDG_N4.md").read_text().lower()
    samples = (tmp_path / "sample_exp3_ESDG_mu0.001_N4.txt").read_text().splitlines()
    assert samples[0] == "# x y u zx zy"
    assert len(samples) == 1 + 101 * 101
    assert (tmp_path / "mesh_N4.txt").exists()


def test_experiment1_sample_file(tmp_path):
    assert main(["--experiment", "1", "--N", "2,4", "--method", "ESDG", "--out", str(tmp_path), "--sample"]) == 0
    assert (tmp_path / "sample_exp1_ESDG_mu1_N4.txt").exists()


def _failing_solve(real):
    def solve(self, method, mu, f, g=None, theta=0.5):
        if self.mesh.N >= 4 or theta == 0.0:
            raise SingularSystemError("zero pivot")
        return real(self, method, mu, f, g, theta)

    return solve


def test_solver_failure_exit_2(tmp_path, monkeypatch):
    from sdgcd.system import Discretization

    monkeypatch.setattr(Discretization, "solve", _failing_solve(Discretization.solve))
    assert main(["--experiment", "1", "--N", "2,4,8", "--method", "SDG", "--out", str(tmp_path)]) == 2
    rows = (tmp_path / "exp1_SDG_mu1.csv").read_text().splitlines()
    # the table stops at the first failed level
    assert len(rows) == 3 and rows[2].startswith("4,FAILED")

    out = tmp_path / "exp3"
    assert main(["--experiment", "3", "--N", "2", "--mu", "1", "--out", str(out)]) == 2
    row = (out / "exp3_ESDG_N2.csv").read_text().splitlines()[1].split(",")
    assert row[1] == "SINGULAR" and row[3] != "SINGULAR"
