from chve.cli import main

CONFIG = """
[grid]
nx = 16
ny = 16

[params]
eps = 0.05
c_elastic = 0.25
b0 = 0.1
b1 = 0.1

[time]
t_end = 0.001
dt0 = 1e-4
dt_max = 1e-4
adaptive = false

[initial]
phi = random-uniform
phi_amplitude = 0.05
seed = 3

[output]
directory = PLACEHOLDER
"""


def test_run_subcommand(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(CONFIG.replace("PLACEHOLDER", str(tmp_path / "ignored")))
    out = tmp_path / "out"
    rc = main(["run", str(cfg), "--output-dir", str(out)])
    assert rc == 0
    assert (out / "diagnostics.csv").exists()
    assert (out / "snap_00000000.vtk").exists()
    captured = capsys.readouterr().out
    assert "termination=t_end" in captured


def test_run_seed_override_changes_data(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(CONFIG.replace("PLACEHOLDER", str(tmp_path / "a")))
    assert main(["run", str(cfg)]) == 0
    assert main(["run", str(cfg), "--output-dir", str(tmp_path / "b"),
                 "--seed", "99"]) == 0
    a = (tmp_path / "a" / "diagnostics.csv").read_text().splitlines()
    b = (tmp_path / "b" / "diagnostics.csv").read_text().splitlines()
    assert a[0] == b[0]          # same header
    assert a[1] != b[1]          # different trajectories


def test_run_invalid_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[grid]\nnx = 16\nny = 16\n\n[params]\nf_min = 0.0\n")
    rc = main(["run", str(cfg)])
    assert rc == 2
    assert "f_min" in capsys.readouterr().err


def test_run_missing_file_exit_2(tmp_path):
    assert main(["run", str(tmp_path / "nope.ini")]) == 2


def test_verify_operators_suite(capsys):
    rc = main(["verify", "operators"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_verify_constitutive_suite(capsys):
    rc = main(["verify", "constitutive"])
    assert rc == 0
    assert "checks passed" in capsys.readouterr().out


def test_stokes_mms_subcommand(capsys):
    rc = main(["stokes-mms", "--levels", "16,32"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "L2(v)" in out
    assert "16" in out and "32" in out


def test_energy_report(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(CONFIG.replace("PLACEHOLDER", str(tmp_path / "er")))
    assert main(["run", str(cfg)]) == 0
    rc = main(["energy-report", str(tmp_path / "er" / "diagnostics.csv")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "mass drift" in out
    assert "max div residual" in out


def test_energy_report_missing_file(tmp_path):
    assert main(["energy-report", str(tmp_path / "nope.csv")]) == 2
