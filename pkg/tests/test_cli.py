"""Command-line driver: outputs, determinism, exit codes.

Runs go through main(argv) in-process for speed; one test shells out to
the installed entry point to check the wiring end to end.  Exit codes:
0 success, 2 invariant/contract violation (named on stderr), 3 solver
failure, 4 no oracle available.
"""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from frontcap.cli import main, snapshot_targets

BARENBLATT = """
geometry = 1d
model.m = 3
ic.kind = barenblatt
ic.t0 = 0.01
run.t_end = 0.02
grid.nx = 64
step.policy = fixed
step.dt = 1e-3
output.snapshots = 4
"""

ANNULUS = """
geometry = radial
model.m = 100
domain.rmax = 3
grid.nr = 60
ic.kind = pinf_seeded
ic.radii = 0.6,1.0
growth.kind = constant
growth.value = 1
step.policy = fixed
step.dt = 0.0025
run.t_end = 0.25
diagnostics.front = half_height
compare.times = 0.125,0.25
compare.front_tol_cells = 3
"""


def _write(tmp_path, text, name="config.txt"):
    path = tmp_path / name
    path.write_text(text.strip() + "\n")
    return path


def _run_cli(tmp_path, text, command="run", overrides=(), out_name="out"):
    config = _write(tmp_path, text)
    out = tmp_path / out_name
    argv = [command, "--config", str(config), "--out", str(out)]
    for item in overrides:
        argv += ["--override", item]
    return main(argv), out


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_snapshot_targets_layout():
    targets = snapshot_targets(1.0, 4)
    np.testing.assert_allclose(targets, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    assert snapshot_targets(2.0, 0) == [0.0, 2.0]


def test_run_writes_series_snapshots_and_json(tmp_path, capsys):
    code, out = _run_cli(tmp_path, BARENBLATT)
    assert code == 0
    assert "run:" in capsys.readouterr().out

    rows = _read_csv(out / "series.csv")
    assert rows[0] == ["step", "t", "dt", "mass", "energy", "l2",
                       "max_density", "min_density", "w_linf", "w_l2",
                       "solver_iterations", "fronts"]
    assert len(rows) == 22  # initial record + 20 steps
    assert rows[1][0] == "0" and rows[-1][0] == "20"
    # full-precision time stamps
    assert rows[3][1] == "0.002"
    # the residual column is exactly zero for non-relaxed runs
    assert all(r[8] == "0" for r in rows[1:])

    snaps = sorted(out.glob("rho_t*.csv"))
    assert [p.name for p in snaps] == [f"rho_t{i:04d}.csv" for i in range(6)]
    first = _read_csv(snaps[0])
    assert first[0] == ["x", "rho", "pressure"]
    assert len(first) == 65

    run = json.loads((out / "run.json").read_text())
    assert run["command"] == "run"
    assert run["backend"] in ("compiled", "numpy")
    assert run["summary"]["steps"] == 20
    assert run["summary"]["final_time"] == pytest.approx(0.02)
    assert [s["t"] for s in run["snapshots"]] == pytest.approx(
        [0.0, 0.004, 0.008, 0.012, 0.016, 0.02])
    assert run["config"]["model.m"] == "3"


def test_run_snapshot_times_report_actual_step(tmp_path):
    # dt = 3e-3 cannot land on the 0.004k grid: snapshots carry the first
    # step time at/after each target
    code, out = _run_cli(tmp_path, BARENBLATT, overrides=("step.dt=3e-3",))
    assert code == 0
    run = json.loads((out / "run.json").read_text())
    times = [s["t"] for s in run["snapshots"]]
    assert times == pytest.approx([0.0, 0.006, 0.009, 0.012, 0.018, 0.02])


def test_run_is_deterministic(tmp_path):
    _, out1 = _run_cli(tmp_path, BARENBLATT, out_name="a")
    _, out2 = _run_cli(tmp_path, BARENBLATT, out_name="b")
    for name in ["series.csv", "run.json"] + [f"rho_t{i:04d}.csv"
                                              for i in range(6)]:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_run_json_feeds_back_as_config(tmp_path):
    _, out1 = _run_cli(tmp_path, BARENBLATT, out_name="a")
    out2 = tmp_path / "b"
    code = main(["run", "--config", str(out1 / "run.json"),
                 "--out", str(out2)])
    assert code == 0
    assert (out1 / "series.csv").read_bytes() == (out2 / "series.csv").read_bytes()


def test_run_barenblatt_final_peak_matches_analytic(tmp_path):
    # after T=0.1 the self-similar peak is (t0+T)^(-1/4); the computed
    # maximum must land within 2%
    config = """
    geometry = 1d
    model.m = 3
    ic.kind = barenblatt
    ic.t0 = 0.01
    run.t_end = 0.1
    grid.nx = 320
    step.policy = dx_scaled
    step.dt_coeff = 0.01
    """
    code, out = _run_cli(tmp_path, config)
    assert code == 0
    run = json.loads((out / "run.json").read_text())
    expected = 0.11 ** -0.25
    assert abs(run["summary"]["max_density"] - expected) < 0.02 * expected


def test_run_vacuum_all_zero(tmp_path):
    config = """
    geometry = 1d
    model.m = 2
    ic.kind = zero
    run.t_end = 0.05
    grid.nx = 32
    step.policy = fixed
    step.dt = 0.01
    output.snapshots = 2
    """
    code, out = _run_cli(tmp_path, config)
    assert code == 0
    for snap in sorted(out.glob("rho_t*.csv")):
        rows = _read_csv(snap)
        assert all(r[1] == "0" for r in rows[1:]), snap.name


def test_exit_2_growth_cfl_named(tmp_path, capsys):
    config = """
    geometry = 1d
    model.m = 2
    ic.kind = gaussian
    ic.amplitude = 0.05
    run.t_end = 2.0
    grid.nx = 40
    step.policy = fixed
    step.dt = 1.5
    growth.kind = constant
    growth.value = 1
    """
    code, _ = _run_cli(tmp_path, config)
    assert code == 2
    err = capsys.readouterr().err
    assert "invariant violation [growth-cfl]" in err


def test_exit_2_unknown_key(tmp_path, capsys):
    code, _ = _run_cli(tmp_path, BARENBLATT + "\ngrid.nz = 7\n")
    assert code == 2
    assert "grid.nz" in capsys.readouterr().err


def test_exit_2_bad_value_prefixed(tmp_path, capsys):
    code, _ = _run_cli(tmp_path, BARENBLATT, overrides=("model.m=0.5",))
    assert code == 2
    assert "contract violation:" in capsys.readouterr().err


def test_exit_3_step_collapse(tmp_path, capsys):
    config = """
    geometry = 1d
    model.m = 5
    ic.kind = gaussian
    ic.amplitude = 1e70
    ic.width = 1
    run.t_end = 0.1
    grid.nx = 100
    step.policy = cfl
    """
    code, _ = _run_cli(tmp_path, config)
    assert code == 3
    assert "solver failure" in capsys.readouterr().err


def test_exit_3_krylov_budget(tmp_path, capsys):
    config = """
    geometry = 2d
    model.m = 40
    domain.xmin = -2
    domain.xmax = 2
    grid.nx = 24
    ic.kind = indicator
    ic.boxes = -0.5,0.5,-0.5,0.5
    run.t_end = 0.1
    step.policy = fixed
    step.dt = 0.005
    solver.max_iter = 1
    solver.restart = 5
    """
    code, _ = _run_cli(tmp_path, config)
    assert code == 3
    assert "solver failure" in capsys.readouterr().err


def test_exit_4_converge_without_oracle(tmp_path, capsys):
    config = BARENBLATT.replace("ic.kind = barenblatt", "ic.kind = zero")
    config += "\nconverge.dx_list = 0.3125,0.15625\n"
    code, _ = _run_cli(tmp_path, config, command="converge")
    assert code == 4
    assert "oracle unavailable" in capsys.readouterr().err


def test_exit_4_compare_oracle_unsupported_ic(tmp_path, capsys):
    code, _ = _run_cli(tmp_path, BARENBLATT, command="compare-oracle")
    assert code == 4
    assert "oracle unavailable" in capsys.readouterr().err


def test_converge_writes_eoc_table(tmp_path, capsys):
    config = """
    geometry = 1d
    model.m = 3
    ic.kind = barenblatt
    ic.t0 = 0.01
    run.t_end = 0.05
    step.policy = dx_scaled
    step.dt_coeff = 0.01
    converge.dx_list = 0.125,0.0625
    """
    code, out = _run_cli(tmp_path, config, command="converge")
    assert code == 0
    rows = _read_csv(out / "eoc.csv")
    assert rows[0] == ["dx", "error", "order"]
    assert len(rows) == 3
    assert rows[1][2] == ""  # first refinement has no order yet
    order = float(rows[2][2])
    assert order > 0.5
    run = json.loads((out / "run.json").read_text())
    assert len(run["table"]) == 2 and len(run["orders"]) == 1
    assert "finest-pair order" in capsys.readouterr().out


def test_converge_rejects_non_tiling_dx(tmp_path, capsys):
    config = BARENBLATT + "\nconverge.dx_list = 0.3,0.17\n"
    code, _ = _run_cli(tmp_path, config, command="converge")
    assert code == 2
    assert "tile" in capsys.readouterr().err


def test_compare_oracle_annulus_passes(tmp_path, capsys):
    code, out = _run_cli(tmp_path, ANNULUS, command="compare-oracle")
    assert code == 0
    rows = _read_csv(out / "compare.csv")
    assert rows[0] == ["t", "front_error", "front_tol",
                       "pressure_error", "pressure_tol", "status"]
    assert [r[5] for r in rows[1:]] == ["PASS", "PASS"]
    run = json.loads((out / "run.json").read_text())
    assert run["overall"] == "PASS"
    assert run["merged_at"] is None
    assert "compare-oracle: PASS" in capsys.readouterr().out


def test_compare_oracle_fail_still_exits_zero(tmp_path, capsys):
    # absurdly tight tolerance: a FAIL verdict is a result, not an error
    code, out = _run_cli(tmp_path,
                         ANNULUS.replace("compare.front_tol_cells = 3",
                                         "compare.front_tol_cells = 0.0001"),
                         command="compare-oracle")
    assert code == 0
    run = json.loads((out / "run.json").read_text())
    assert run["overall"] == "FAIL"
    assert "FAIL" in capsys.readouterr().out


def test_sweep_m_table_and_monotonicity(tmp_path, capsys):
    config = """
    geometry = 1d
    model.m = 2
    domain.xmin = -5
    domain.xmax = 5
    grid.nx = 60
    ic.kind = pinf_seeded
    ic.model = vitro
    ic.r0 = 1
    growth.kind = constant
    growth.value = 1
    step.policy = fixed
    step.dt = 0.01
    run.t_end = 0.5
    sweep.m_list = 2,8
    sweep.dt_lo = 1e-4
    sweep.dt_hi = 0.4
    sweep.bisections = 6
    sweep.max_density = 2.0
    """
    code, out = _run_cli(tmp_path, config, command="sweep-m")
    assert code == 0
    rows = _read_csv(out / "sweep.csv")
    assert rows[0] == ["m", "dt_max"]
    dt_max = [float(r[1]) for r in rows[1:]]
    assert np.all(np.isfinite(dt_max))
    assert dt_max[1] < dt_max[0]  # stiffer exponent allows a smaller step
    run = json.loads((out / "run.json").read_text())
    assert run["slope"] is not None and run["slope"] < 0.0
    assert "slope" in capsys.readouterr().out


def test_override_applies_and_echoes(tmp_path):
    code, out = _run_cli(tmp_path, BARENBLATT, overrides=("grid.nx=32",))
    assert code == 0
    run = json.loads((out / "run.json").read_text())
    assert run["config"]["grid.nx"] == "32"
    assert len(_read_csv(out / "rho_t0000.csv")) == 33


def test_console_entry_point(tmp_path):
    config = _write(tmp_path, BARENBLATT)
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "frontcap.cli", "run",
         "--config", str(config), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "series.csv").exists()
    assert "run:" in proc.stdout
