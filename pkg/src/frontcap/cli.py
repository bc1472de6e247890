"""Batch driver for the front-capturing solvers.

Four subcommands share one config format::

    frontcap run            --config c.txt --out dir [--override key=value]...
    frontcap converge       --config c.txt --out dir ...
    frontcap compare-oracle --config c.txt --out dir ...
    frontcap sweep-m        --config c.txt --out dir ...

``run`` writes ``series.csv`` (per-step diagnostics), field snapshots
``rho_tXXXX.csv`` with the pressure alongside the density, and ``run.json``
echoing the resolved config (the echo can be fed back in as a config).
``converge`` refines a grid list against a closed-form density and writes
``eoc.csv``; ``compare-oracle`` checks fronts and pressure profiles of
pressure-seeded runs against the front-ODE oracles; ``sweep-m`` bisects the
largest stable fixed step per stiffness exponent.

Exit codes: 0 success (a compare-oracle tolerance FAIL is still 0 -- it is
a result, not a malfunction); 2 invariant or contract violation, with the
violated invariant named on stderr; 3 solver failure; 4 oracle unavailable.
Identical config and build produce bit-identical CSV output.
"""

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from frontcap import kernels, oracles
from frontcap.config import (
    build_grid,
    build_initial_state,
    build_model_params,
    build_pqd_params,
    density_oracle,
    load_config,
)
from frontcap.diagnostics import (
    SpacetimeL1,
    eoc,
    front_positions,
    half_height_threshold,
    make_record,
)
from frontcap.errors import (
    ContractError,
    InvariantError,
    OracleUnavailableError,
    SolverError,
)
from frontcap.grid import Grid2D, RadialGrid
from frontcap.linsolve import KrylovConfig
from frontcap.multispecies import step_pqd
from frontcap.stepper1d import consistency_residual, correct_velocity, pressure, step
from frontcap.stepper2d import consistency_residual_2d, step_2d
from frontcap.stepper_radial import step_radial

_TIME_EPS = 1e-12


def _fmt(value):
    """Full double precision (17 significant digits) for CSV cells."""
    return format(float(value), ".17g")


def snapshot_targets(t_end, count):
    """Snapshot times: t=0, ``count`` evenly spaced interior times, t_end."""
    interior = [k * t_end / (count + 1) for k in range(1, count + 1)]
    return [0.0] + interior + [t_end]


# ---------------------------------------------------------------------------
# the shared time loop


@dataclass
class RunResult:
    """Everything a command needs after a simulation: series + snapshots."""

    config: object
    grid: object
    params: object
    records: list
    snapshots: list  # (t, state) pairs, t being the actual step time
    state: object    # final state


def _density_values(state, geometry):
    return state.rho_total.values if geometry == "pqd" else state.rho.values


def _make_stepper(config, params):
    geometry = config.geometry
    if geometry == "1d":
        return lambda s, max_dt: step(s, params, max_dt)
    if geometry == "radial":
        return lambda s, max_dt: step_radial(s, params, max_dt)
    if geometry == "2d":
        krylov = KrylovConfig(tol=config["solver.tol"],
                              restart=config["solver.restart"],
                              max_iter=config["solver.max_iter"])
        return lambda s, max_dt: step_2d(s, params, max_dt, krylov=krylov)
    pqd = build_pqd_params(config)
    return lambda s, max_dt: step_pqd(s, params, pqd, max_dt)


def _check_positivity(state, geometry):
    """Nonnegativity invariant: exact for single fields, tol 1e-10 for species."""
    if geometry == "pqd":
        worst = min(float(np.min(state.rho_p.values)),
                    float(np.min(state.rho_d.values)),
                    float(np.min(state.rho_total.values)))
        if worst < -1e-10:
            raise InvariantError(
                "positivity", f"species density reached {worst:.3e} < -1e-10")
    else:
        worst = float(np.min(state.rho.values))
        if worst < 0.0:
            raise InvariantError("positivity", f"density reached {worst:.3e} < 0")


def _record_for(state, config, params, step_index, dt):
    geometry = config.geometry
    grid = state.grid
    values = _density_values(state, geometry)
    front_threshold = None
    front_coords = None
    if geometry != "2d":
        if config["diagnostics.front"] == "half_height":
            front_threshold = half_height_threshold
        else:
            front_threshold = params.support_threshold
        front_coords = grid.cell_centers()
    w_linf = w_l2 = 0.0
    iterations = 0
    if geometry in ("1d", "radial"):
        _, w_linf, w_l2 = consistency_residual(state, params)
    elif geometry == "2d":
        _, _, w_linf, w_l2 = consistency_residual_2d(state, params)
        iterations = state.solver_iterations
    else:
        # same face residual as 1d: W = u - u_consistent on the total density
        u_c = correct_velocity(values, params.m, grid.dx, params.support_threshold)
        w = state.u.values - u_c
        w_linf = float(np.max(np.abs(w)))
        w_l2 = float(np.sqrt(np.sum(np.square(w)) * grid.dx))
    return make_record(step_index, state.t, dt, values, grid, params.m,
                       front_threshold=front_threshold, front_coords=front_coords,
                       w_linf=w_linf, w_l2=w_l2, solver_iterations=iterations)


def simulate(config, targets=None, observer=None):
    """Run the configured simulation to t_end, collecting series + snapshots.

    ``targets`` overrides the snapshot times; each is emitted at the first
    completed step whose time reaches it, labeled with the actual time.
    ``observer(state, dt)`` is called after every accepted step.  A field
    losing finiteness mid-run is reported as a solver failure rather than
    the contract violation the field container raises.
    """
    t_end = config["run.t_end"]
    if t_end <= 0.0:
        raise ContractError(f"run.t_end must be positive, got {t_end}")
    grid = build_grid(config)
    params = build_model_params(config, grid)
    state = build_initial_state(config)
    stepper = _make_stepper(config, params)
    if targets is None:
        targets = snapshot_targets(t_end, config["output.snapshots"])
    targets = sorted(set(targets))

    records = [_record_for(state, config, params, 0, 0.0)]
    snapshots = []
    next_target = 0

    def emit_reached():
        nonlocal next_target
        emitted = False
        while next_target < len(targets) and state.t >= targets[next_target] - _TIME_EPS:
            if not emitted:
                snapshots.append((state.t, state))
                emitted = True
            next_target += 1

    emit_reached()
    step_index = 0
    while state.t < t_end - _TIME_EPS:
        try:
            new_state = stepper(state, t_end - state.t)
        except ContractError as exc:
            if "non-finite" in str(exc):
                raise SolverError(
                    f"solution lost finiteness at t={state.t:.6g}: {exc}") from exc
            raise
        if not new_state.t > state.t:
            raise SolverError(f"time integration stalled at t={state.t:.6g}")
        dt = new_state.t - state.t
        if dt < 1e-15 * t_end:
            # an adaptive step this small (>1e15 steps to finish) means the
            # velocity blew up; stop instead of spinning in denormal time
            raise SolverError(
                f"time step collapsed to dt={dt:.3e} at t={state.t:.6g}")
        state = new_state
        step_index += 1
        _check_positivity(state, config.geometry)
        records.append(_record_for(state, config, params, step_index, dt))
        if observer is not None:
            observer(state, dt)
        emit_reached()
    return RunResult(config, grid, params, records, snapshots, state)


# ---------------------------------------------------------------------------
# output writers


def write_series(path, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "t", "dt", "mass", "energy", "l2",
                         "max_density", "min_density", "w_linf", "w_l2",
                         "solver_iterations", "fronts"])
        for r in records:
            writer.writerow([
                r.step, _fmt(r.t), _fmt(r.dt), _fmt(r.mass), _fmt(r.energy),
                _fmt(r.l2), _fmt(r.max_density), _fmt(r.min_density),
                _fmt(r.w_linf), _fmt(r.w_l2), r.solver_iterations,
                ";".join(_fmt(f) for f in r.fronts),
            ])


def write_snapshot(path, state, config):
    """One CSV per snapshot: coordinates, density (per species for pqd), pressure."""
    geometry = config.geometry
    m = config["model.m"]
    threshold = config["model.support_threshold"]
    grid = state.grid
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if geometry == "pqd":
            x = grid.cell_centers()
            total = state.rho_total.values
            rho_q = state.rho_q.values
            p = pressure(total, m, threshold)
            writer.writerow(["x", "rho_total", "rho_p", "rho_q", "rho_d", "pressure"])
            for i in range(grid.ncells):
                writer.writerow([_fmt(x[i]), _fmt(total[i]),
                                 _fmt(state.rho_p.values[i]), _fmt(rho_q[i]),
                                 _fmt(state.rho_d.values[i]), _fmt(p[i])])
        elif isinstance(grid, Grid2D):
            xs = grid.x_centers()
            ys = grid.y_centers()
            rho = state.rho.values
            p = pressure(rho, m, threshold)
            writer.writerow(["x", "y", "rho", "pressure"])
            for i in range(grid.nx):
                for j in range(grid.ny):
                    writer.writerow([_fmt(xs[i]), _fmt(ys[j]),
                                     _fmt(rho[i, j]), _fmt(p[i, j])])
        else:
            label = "r" if isinstance(grid, RadialGrid) else "x"
            coords = grid.cell_centers()
            rho = state.rho.values
            p = pressure(rho, m, threshold)
            writer.writerow([label, "rho", "pressure"])
            for i in range(grid.ncells):
                writer.writerow([_fmt(coords[i]), _fmt(rho[i]), _fmt(p[i])])


def _jsonable(value):
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_run_json(path, config, extra):
    payload = {"config": config.to_flat(), "backend": kernels.BACKEND}
    payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(config, out_dir):
    result = simulate(config)
    write_series(out_dir / "series.csv", result.records)
    snapshots_meta = []
    for idx, (t, state) in enumerate(result.snapshots):
        name = f"rho_t{idx:04d}.csv"
        write_snapshot(out_dir / name, state, config)
        snapshots_meta.append({"file": name, "t": t})
    last = result.records[-1]
    summary = {
        "steps": last.step,
        "final_time": result.state.t,
        "mass": last.mass,
        "max_density": last.max_density,
        "min_density": last.min_density,
        "w_linf_max": max(r.w_linf for r in result.records),
    }
    write_run_json(out_dir / "run.json", config,
                   {"command": "run", "summary": summary,
                    "snapshots": snapshots_meta})
    print(f"run: {last.step} steps to t={result.state.t:.6g}, "
          f"mass={last.mass:.6g}, max_density={last.max_density:.6g}")
    return 0


def cmd_converge(config, out_dir):
    dx_list = config["converge.dx_list"]
    if not dx_list:
        raise ContractError("converge.dx_list is required for the converge command")
    length = config["domain.xmax"] - config["domain.xmin"]
    errors = []
    for dx in dx_list:
        nx = int(round(length / dx))
        if nx < 4 or abs(nx * dx - length) > 1e-9 * length:
            raise ContractError(
                f"dx={dx:g} does not evenly tile a domain of length {length:g}")
        run_cfg = config.derive({"grid.nx": nx})
        grid = build_grid(run_cfg)
        exact = density_oracle(run_cfg, grid)
        accum = SpacetimeL1()
        simulate(run_cfg, targets=(),
                 observer=lambda s, dt: accum.add(s.rho.values, exact(s.t),
                                                  grid.dx, dt))
        errors.append(accum.value)
        print(f"converge: dx={_fmt(dx)} nx={nx} error={accum.value:.6e}")
    orders = eoc(errors, dx_list) if len(errors) >= 2 else np.array([])
    with open(out_dir / "eoc.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dx", "error", "order"])
        for i, (dx, err) in enumerate(zip(dx_list, errors)):
            writer.writerow([_fmt(dx), _fmt(err),
                             "" if i == 0 else _fmt(orders[i - 1])])
    write_run_json(out_dir / "run.json", config, {
        "command": "converge",
        "table": [{"dx": dx, "error": err} for dx, err in zip(dx_list, errors)],
        "orders": [_jsonable(float(o)) for o in orders],
    })
    if len(orders):
        print(f"converge: finest-pair order {float(orders[-1]):.3f}")
    return 0


def _oracle_fronts(config):
    """Callable t -> sorted oracle front positions, from the seeded IC."""
    t_end = config["run.t_end"]
    if config.geometry == "1d" and config["ic.kind"] == "pinf_seeded":
        times, radii = oracles.front_ode_1d(config["ic.model"], config["ic.r0"],
                                            t_end)
        traj = radii[:, 0]

        def fronts_1d(t):
            r = float(np.interp(t, times, traj))
            return np.array([-r, r])

        return fronts_1d, None
    if config.geometry == "radial" and config["ic.kind"] == "pinf_seeded":
        result = oracles.front_ode_radial(config["ic.radii"], t_end)

        def fronts_radial(t):
            if t > result.times[-1] + _TIME_EPS:
                return None
            return result.at(t)

        merged_at = result.times[-1] if result.merged else None
        return fronts_radial, merged_at
    raise OracleUnavailableError(
        "compare-oracle needs a pressure-seeded initial condition "
        "(ic.kind = pinf_seeded) in 1d or radial geometry")


def _oracle_pressure(config, coords, fronts):
    if config.geometry == "1d":
        return oracles.pressure_1d(config["ic.model"], coords, fronts[-1])
    return oracles.pressure_radial(coords, fronts)


def cmd_compare_oracle(config, out_dir):
    fronts_at, merged_at = _oracle_fronts(config)
    threshold = (half_height_threshold
                 if config["diagnostics.front"] == "half_height"
                 else config["model.support_threshold"])
    times = config["compare.times"]
    if not times:
        times = snapshot_targets(config["run.t_end"], config["output.snapshots"])
    result = simulate(config, targets=times)

    grid = result.grid
    spacing = grid.spacing
    coords = grid.cell_centers()
    front_tol = config["compare.front_tol_cells"] * spacing
    pressure_tol = config["compare.pressure_tol"]
    exclusion = config["compare.exclude_cells"] * spacing
    m = config["model.m"]

    rows = []
    skipped = []
    for t, state in result.snapshots:
        oracle_fronts = fronts_at(t)
        if oracle_fronts is None:
            skipped.append(t)
            continue
        values = state.rho.values
        thr = threshold(values) if callable(threshold) else threshold
        measured = np.asarray(front_positions(values, coords, thr))
        if measured.shape[0] == len(oracle_fronts):
            front_error = float(np.max(np.abs(measured - np.asarray(oracle_fronts))))
        else:
            front_error = float("inf")
        # pressure compared inside the oracle support, a few cells clear of
        # every front where the profile kinks
        p_num = pressure(values, m, config["model.support_threshold"])
        p_ref = _oracle_pressure(config, coords, oracle_fronts)
        mask = np.zeros(coords.shape, dtype=bool)
        pairs = np.asarray(oracle_fronts).reshape(-1, 2)
        for lo, hi in pairs:
            mask |= (coords >= lo + exclusion) & (coords <= hi - exclusion)
        pressure_error = (float(np.max(np.abs(p_num[mask] - p_ref[mask])))
                          if np.any(mask) else 0.0)
        ok = front_error <= front_tol and pressure_error <= pressure_tol
        rows.append((t, front_error, pressure_error, ok))

    with open(out_dir / "compare.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "front_error", "front_tol",
                         "pressure_error", "pressure_tol", "status"])
        for t, fe, pe, ok in rows:
            writer.writerow([_fmt(t), _fmt(fe), _fmt(front_tol),
                             _fmt(pe), _fmt(pressure_tol),
                             "PASS" if ok else "FAIL"])
    overall = bool(rows) and all(ok for *_, ok in rows)
    write_run_json(out_dir / "run.json", config, {
        "command": "compare-oracle",
        "overall": "PASS" if overall else "FAIL",
        "front_tol": front_tol,
        "pressure_tol": pressure_tol,
        "rows": [{"t": t, "front_error": _jsonable(fe),
                  "pressure_error": _jsonable(pe), "pass": ok}
                 for t, fe, pe, ok in rows],
        "skipped_times": skipped,
        "merged_at": merged_at,
    })
    for t, fe, pe, ok in rows:
        print(f"compare-oracle: t={t:.6g} front_error={fe:.4g} "
              f"pressure_error={pe:.4g} {'PASS' if ok else 'FAIL'}")
    print(f"compare-oracle: {'PASS' if overall else 'FAIL'}")
    return 0


def _probe_stable(config, m, dt, t_end, max_density):
    """True when the fixed-dt run survives: finite, nonnegative, bounded."""
    probe = config.derive({
        "model.m": float(m), "step.policy": "fixed", "step.dt": float(dt),
        "run.t_end": float(t_end), "output.snapshots": 0,
    })
    try:
        result = simulate(probe, targets=())
    except (InvariantError, SolverError):
        return False
    return max(r.max_density for r in result.records) <= max_density


def cmd_sweep_m(config, out_dir):
    m_list = config["sweep.m_list"]
    if not m_list:
        raise ContractError("sweep.m_list is required for the sweep-m command")
    t_end = config["sweep.t_end"]
    if t_end is None:
        t_end = config["run.t_end"]
    lo0 = config["sweep.dt_lo"]
    hi0 = config["sweep.dt_hi"]
    if not (0.0 < lo0 < hi0):
        raise ContractError("need 0 < sweep.dt_lo < sweep.dt_hi")
    max_density = config["sweep.max_density"]
    bisections = config["sweep.bisections"]

    table = []
    for m in m_list:
        if _probe_stable(config, m, hi0, t_end, max_density):
            dt_max = hi0
        elif not _probe_stable(config, m, lo0, t_end, max_density):
            dt_max = float("nan")
        else:
            lo, hi = lo0, hi0
            for _ in range(bisections):
                mid = float(np.sqrt(lo * hi))  # geometric: dt spans decades
                if _probe_stable(config, m, mid, t_end, max_density):
                    lo = mid
                else:
                    hi = mid
            dt_max = lo
        table.append((m, dt_max))
        print(f"sweep-m: m={m:g} dt_max={dt_max:.6g}")

    with open(out_dir / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["m", "dt_max"])
        for m, dt_max in table:
            writer.writerow([_fmt(m), _fmt(dt_max)])

    fit = [(m, d) for m, d in table if np.isfinite(d) and m > 1.0]
    slope = None
    if len(fit) >= 2:
        log_m1 = np.log([m - 1.0 for m, _ in fit])
        log_dt = np.log([d for _, d in fit])
        slope = float(np.polyfit(log_m1, log_dt, 1)[0])
        print(f"sweep-m: log-log slope of dt_max vs (m-1): {slope:.3f}")
    write_run_json(out_dir / "run.json", config, {
        "command": "sweep-m",
        "table": [{"m": m, "dt_max": _jsonable(d)} for m, d in table],
        "slope": slope,
    })
    return 0


# ---------------------------------------------------------------------------
# argument parsing and exit-code mapping

COMMANDS = {
    "run": cmd_run,
    "converge": cmd_converge,
    "compare-oracle": cmd_compare_oracle,
    "sweep-m": cmd_sweep_m,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="frontcap",
        description="Prediction-correction front-capturing solvers for "
                    "degenerate-diffusion tumor growth models.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("run", "advance one configured simulation, writing series + snapshots"),
        ("converge", "grid-refinement study against a closed-form density"),
        ("compare-oracle", "check fronts and pressure against the limit oracles"),
        ("sweep-m", "bisect the largest stable fixed dt per stiffness exponent"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="config file (text or run.json)")
        p.add_argument("--out", required=True, help="output directory (created)")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config entry")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.override)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](config, out_dir)
    except InvariantError as exc:
        print(f"invariant violation [{exc.name}]: {exc}", file=sys.stderr)
        return 2
    except ContractError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except OracleUnavailableError as exc:
        print(f"oracle unavailable: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
