import csv

import pytest
import yaml

from lightmpo import cli


def write_cfg(path, **overrides):
    cfg = {
        "case": "rabi",
        "model": {"gamma": 1.0, "eta": 0.5},
        "grid": {"theta": [0.3], "t_fin": [0.5]},
        "dt": 0.05,
        "methods": ["mpo_qfi"],
        "solver": {"restarts": 2, "bond_dim_max": 3},
    }
    cfg.update(overrides)
    with open(path, "w") as fh:
        yaml.safe_dump(cfg, fh)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_validate_accepts_good_config(tmp_path, capsys):
    p = write_cfg(tmp_path / "job.yaml")
    assert cli.main(["validate", "-c", str(p)]) == 0
    assert capsys.readouterr().out.strip() == "ok"


@pytest.mark.parametrize(
    "overrides",
    [
        {"case": "bogus"},
        {"model": {"gamma": 1.0}},  # missing eta
        {"grid": {"t_fin": [0.5]}},  # missing theta
        {"grid": {"theta": [0.3]}},  # missing t_fin
        {"methods": ["not_a_method"]},
        {"methods": []},
        {"dt": -0.1},
        {"grid": {"theta": [0.3], "t_fin": [0.52]}},  # not a dt multiple
    ],
)
def test_validate_rejects_bad_configs(tmp_path, overrides, capsys):
    p = write_cfg(tmp_path / "job.yaml", **overrides)
    assert cli.main(["validate", "-c", str(p)]) == 1
    assert "invalid:" in capsys.readouterr().err


def test_pulsed_config_requires_pulse_parameters(tmp_path):
    p = write_cfg(
        tmp_path / "job.yaml",
        case="pulsed",
        model={"gamma_perp": 0.1, "n_mean": 1.0, "pulse_T": 1.0},
    )
    with pytest.raises(cli.ConfigError, match="pulse_center"):
        cli.load_config(p)


def test_run_writes_combined_and_per_method_csv(tmp_path, capsys):
    p = write_cfg(
        tmp_path / "job.yaml",
        out=str(tmp_path / "res"),
        methods=["mpo_qfi", "tsme_qfi"],
        grid={"theta": [0.3, 0.5], "t_fin": [0.5]},
    )
    assert cli.main(["run", "-c", str(p)]) == 0
    rows = read_csv(tmp_path / "res" / "results.csv")
    assert rows[0] == ["method", "theta", "t_fin", "value", "stderr", "n_samples"]
    assert len(rows) == 1 + 4  # 2 methods x 2 thetas
    methods = {r[0] for r in rows[1:]}
    assert methods == {"mpo_qfi", "tsme_qfi"}
    per = read_csv(tmp_path / "res" / "mpo_qfi.csv")
    assert per[0] == ["theta", "t_fin", "bond_dim_max", "restarts", "qfi",
                      "spread", "converged"]
    assert len(per) == 3
    out = capsys.readouterr().out
    assert "wrote" in out and "results.csv" in out


def test_run_is_deterministic(tmp_path):
    p = write_cfg(
        tmp_path / "job.yaml",
        methods=["mpo_qfi", "pd_cfi"],
        trajectories={"n_traj": 50, "dt": 0.05},
    )
    cli.main(["run", "-c", str(p), "-o", str(tmp_path / "a")])
    cli.main(["run", "-c", str(p), "-o", str(tmp_path / "b")])
    for name in ("results.csv", "mpo_qfi.csv", "pd_cfi.csv"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, name


def test_run_seed_flag_changes_sampling(tmp_path):
    p = write_cfg(
        tmp_path / "job.yaml",
        methods=["pd_cfi"],
        grid={"theta": [1.0], "t_fin": [2.0]},
        trajectories={"n_traj": 50, "dt": 0.1},
    )
    cli.main(["run", "-c", str(p), "-o", str(tmp_path / "a"), "--seed", "1"])
    cli.main(["run", "-c", str(p), "-o", str(tmp_path / "b"), "--seed", "2"])
    a = read_csv(tmp_path / "a" / "results.csv")[1]
    b = read_csv(tmp_path / "b" / "results.csv")[1]
    assert a[3] != b[3]


def test_run_subqfi_and_hd(tmp_path):
    p = write_cfg(
        tmp_path / "job.yaml",
        methods=["sub_qfi", "hd_cfi"],
        subqfi={"eps": 0.02},
        trajectories={"n_traj": 40, "dt": 0.05, "phi": 1.5707963267948966},
    )
    cli.main(["run", "-c", str(p), "-o", str(tmp_path / "res")])
    rows = read_csv(tmp_path / "res" / "results.csv")
    by_method = {r[0]: r for r in rows[1:]}
    assert float(by_method["sub_qfi"][3]) > 0
    assert int(by_method["hd_cfi"][5]) == 40
    sub = read_csv(tmp_path / "res" / "sub_qfi.csv")
    assert sub[0] == ["theta", "t_fin", "eps", "subqfi", "subqfi_richardson",
                      "tr12", "purity1", "purity2"]
    assert float(dict(zip(sub[0], sub[1]))["eps"]) == 0.02


def test_oracle_check_passes_on_small_problem(capsys):
    assert cli.main(["oracle-check", "-n", "4", "--dt", "0.05"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 4
    assert "[FAIL]" not in out


def test_model_builders_from_config():
    cfg = cli.validate_config({
        **cli._DEFAULTS,
        "case": "pulsed",
        "model": {"gamma_perp": 0.05, "n_mean": 2.0, "pulse_T": 1.0,
                  "pulse_center": 6.5},
        "grid": {"theta": [0.1], "t_fin": [1.0]},
    })
    model = cli.build_model(cfg, 0.1)
    assert model.n_env == 1
    cfg2 = cli.validate_config({
        **cli._DEFAULTS,
        "case": "rabi",
        "model": {"gamma": 1.0, "eta": 1.0},
        "grid": {"theta": [0.1], "t_fin": [1.0]},
    })
    assert cli.build_model(cfg2, 0.1).n_env == 0
