"""Run configuration: flat key-value files, schema, and run assembly.

A config is a flat mapping of dotted keys to values, written either as
plain text (``key = value`` per line, ``#`` comments) or as JSON -- the
``run.json`` echo a run writes can be fed straight back in.  Every key is
declared in :data:`SCHEMA`; unknown keys are rejected by name so typos
cannot silently fall back to defaults.

The builders at the bottom turn a resolved config into grids, model
parameters and initial states for the four geometries (1d, 2d, radial,
pqd).
"""

import json
from dataclasses import dataclass

import numpy as np

from frontcap import oracles
from frontcap.errors import ContractError, OracleUnavailableError
from frontcap.grid import Grid1D, Grid2D, RadialGrid
from frontcap.multispecies import PQDParams, SpeciesState
from frontcap.stepper1d import GrowthSpec, ModelParams, State1D
from frontcap.stepper2d import State2D
from frontcap.stepper_radial import StateRadial

_REQUIRED = object()


@dataclass(frozen=True)
class _Key:
    kind: str                 # float | int | str | bool | float_list | opt_float
    default: object = None
    choices: tuple = ()


SCHEMA = {
    "geometry": _Key("str", _REQUIRED, ("1d", "2d", "radial", "pqd")),
    "domain.xmin": _Key("float", -5.0),
    "domain.xmax": _Key("float", 5.0),
    "domain.ymin": _Key("opt_float", None),
    "domain.ymax": _Key("opt_float", None),
    "domain.rmax": _Key("float", 3.0),
    "grid.nx": _Key("int", 100),
    "grid.ny": _Key("opt_float", None),
    "grid.nr": _Key("int", 60),
    "model.m": _Key("float", _REQUIRED),
    "model.support_threshold": _Key("float", 1e-6),
    "model.relaxation_epsilon": _Key("opt_float", None),
    "step.policy": _Key("str", "fixed", ("fixed", "cfl", "dx_scaled", "dx_squared")),
    "step.dt": _Key("opt_float", None),
    "step.cfl_factor": _Key("float", 0.5),
    "step.dt_coeff": _Key("float", 1.0),
    "run.t_end": _Key("float", _REQUIRED),
    "output.snapshots": _Key("int", 10),
    "ic.kind": _Key("str", _REQUIRED,
                    ("barenblatt", "pinf_seeded", "indicator", "flower",
                     "gaussian", "zero", "pqd")),
    "ic.c": _Key("float", 1.0),
    "ic.t0": _Key("float", 0.01),
    "ic.model": _Key("str", "vitro", ("vitro", "vivo")),
    "ic.r0": _Key("float", 1.0),
    "ic.radii": _Key("float_list", (0.6, 1.0)),
    "ic.boxes": _Key("float_list", ()),
    "ic.value": _Key("float", 0.99),
    "ic.amplitude": _Key("float", 0.05),
    "ic.width": _Key("float", 1.0),
    "ic.center": _Key("float", 0.0),
    "growth.kind": _Key("str", "none", ("none", "constant", "nutrient")),
    "growth.value": _Key("float", 1.0),
    "growth.model": _Key("str", "vitro", ("vitro", "vivo")),
    "growth.c_b": _Key("float", 1.0),
    "growth.exchange": _Key("float", 1.0),
    "pqd.a": _Key("float", 0.0),
    "pqd.b": _Key("float", 0.0),
    "pqd.d": _Key("float", 0.0),
    "pqd.mu": _Key("float", 0.0),
    "pqd.clip_quiescent": _Key("bool", False),
    "diagnostics.front": _Key("str", "support", ("support", "half_height")),
    "compare.front_tol_cells": _Key("float", 2.0),
    "compare.pressure_tol": _Key("float", 0.05),
    "compare.exclude_cells": _Key("int", 3),
    "compare.times": _Key("float_list", ()),
    "converge.dx_list": _Key("float_list", ()),
    "sweep.m_list": _Key("float_list", ()),
    "sweep.dt_lo": _Key("float", 1e-4),
    "sweep.dt_hi": _Key("float", 0.5),
    "sweep.bisections": _Key("int", 12),
    "sweep.t_end": _Key("opt_float", None),
    "sweep.max_density": _Key("float", 10.0),
    "solver.tol": _Key("float", 1e-10),
    "solver.restart": _Key("int", 30),
    "solver.max_iter": _Key("int", 5000),
}


def _coerce(name, key, raw):
    """Parse one raw (string or JSON-native) value against its schema kind."""
    try:
        if key.kind == "float":
            value = float(raw)
        elif key.kind == "int":
            value = int(str(raw).strip())
        elif key.kind == "bool":
            if isinstance(raw, bool):
                value = raw
            elif str(raw).strip().lower() in ("true", "false"):
                value = str(raw).strip().lower() == "true"
            else:
                raise ValueError(f"expected true/false, got {raw!r}")
        elif key.kind == "opt_float":
            if raw is None or str(raw).strip().lower() in ("", "none"):
                value = None
            else:
                value = float(raw)
        elif key.kind == "float_list":
            if isinstance(raw, (list, tuple)):
                value = tuple(float(v) for v in raw)
            else:
                text = str(raw).strip()
                value = tuple(float(tok) for tok in text.split(",")) if text else ()
        else:  # str
            value = str(raw).strip()
    except (TypeError, ValueError) as exc:
        raise ContractError(f"config key '{name}': {exc}") from exc
    if key.choices and value not in key.choices:
        raise ContractError(
            f"config key '{name}' must be one of {key.choices}, got {value!r}"
        )
    return value


def _format_value(key, value):
    """Canonical string form used in the run.json echo (round-trips exactly)."""
    if value is None:
        return "none"
    if key.kind == "bool":
        return "true" if value else "false"
    if key.kind == "float_list":
        return ",".join(format(float(v), ".17g") for v in value)
    if key.kind in ("float", "opt_float"):
        return format(float(value), ".17g")
    return str(value)


class RunConfig:
    """Resolved, typed configuration for one run."""

    def __init__(self, values):
        self._values = dict(values)

    def __getitem__(self, name):
        return self._values[name]

    @property
    def geometry(self):
        return self._values["geometry"]

    def derive(self, updates):
        """Copy with some typed values replaced (used by converge/sweep)."""
        merged = dict(self._values)
        for name, value in updates.items():
            if name not in SCHEMA:
                raise ContractError(f"unknown config key '{name}'")
            merged[name] = value
        return RunConfig(merged)

    def to_flat(self):
        """Canonical string mapping, suitable for echoing and re-parsing."""
        return {name: _format_value(SCHEMA[name], self._values[name])
                for name in sorted(self._values)}


def resolve_config(raw):
    """Typed RunConfig from a raw mapping; rejects unknown keys by name."""
    values = {}
    for name, raw_value in raw.items():
        if name not in SCHEMA:
            raise ContractError(f"unknown config key '{name}'")
        values[name] = _coerce(name, SCHEMA[name], raw_value)
    for name, key in SCHEMA.items():
        if name not in values:
            if key.default is _REQUIRED:
                raise ContractError(f"missing required config key '{name}'")
            values[name] = key.default
    return RunConfig(values)


def parse_config_text(text):
    """Raw mapping from ``key = value`` lines ('#' starts a comment)."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ContractError(f"config line {lineno} is not 'key = value': {line!r}")
        name, _, value = stripped.partition("=")
        raw[name.strip()] = value.strip()
    return raw


def load_config(path, overrides=()):
    """RunConfig from a text or JSON file plus ``key=value`` override strings."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    if text.lstrip().startswith("{"):
        obj = json.loads(text)
        raw = obj.get("config", obj) if isinstance(obj, dict) else None
        if not isinstance(raw, dict):
            raise ContractError("JSON config must be an object of key-value pairs")
        raw = dict(raw)
    else:
        raw = parse_config_text(text)
    for item in overrides:
        if "=" not in item:
            raise ContractError(f"override {item!r} is not of the form key=value")
        name, _, value = item.partition("=")
        raw[name.strip()] = value.strip()
    return resolve_config(raw)


# ---------------------------------------------------------------------------
# builders


def build_grid(config):
    geometry = config.geometry
    if geometry in ("1d", "pqd"):
        return Grid1D(config["domain.xmin"], config["domain.xmax"], config["grid.nx"])
    if geometry == "radial":
        return RadialGrid(config["domain.rmax"], config["grid.nr"])
    ymin = config["domain.ymin"]
    ymax = config["domain.ymax"]
    ny = config["grid.ny"]
    return Grid2D(
        config["domain.xmin"], config["domain.xmax"], config["grid.nx"],
        config["domain.ymin"] if ymin is not None else config["domain.xmin"],
        ymax if ymax is not None else config["domain.xmax"],
        int(ny) if ny is not None else config["grid.nx"],
    )


def resolve_step_policy(config, grid):
    """(dt, cfl_factor) pair for ModelParams from the step policy."""
    policy = config["step.policy"]
    if policy == "cfl":
        return None, config["step.cfl_factor"]
    if policy == "fixed":
        dt = config["step.dt"]
        if dt is None:
            raise ContractError("step.dt is required for step.policy = fixed")
        return dt, None
    spacing = min(grid.dx, grid.dy) if isinstance(grid, Grid2D) else grid.spacing
    coeff = config["step.dt_coeff"]
    if policy == "dx_scaled":
        return coeff * spacing, None
    return coeff * spacing * spacing, None


def build_growth(config):
    kind = config["growth.kind"]
    if kind == "none":
        return GrowthSpec(kind="none")
    if kind == "constant":
        return GrowthSpec(kind="constant", value=config["growth.value"])
    if config.geometry == "radial":
        raise ContractError(
            "growth.kind = nutrient is not available in radial geometry"
        )
    return GrowthSpec(kind="nutrient", model=config["growth.model"],
                      c_b=config["growth.c_b"], exchange=config["growth.exchange"])


def build_model_params(config, grid):
    dt, cfl = resolve_step_policy(config, grid)
    return ModelParams(
        m=config["model.m"],
        growth=build_growth(config),
        support_threshold=config["model.support_threshold"],
        relaxation_epsilon=config["model.relaxation_epsilon"],
        dt=dt,
        cfl_factor=cfl,
    )


def build_pqd_params(config):
    return PQDParams(
        a=config["pqd.a"], b=config["pqd.b"], d=config["pqd.d"],
        mu=config["pqd.mu"], nutrient=build_growth(config),
        clip_quiescent=config["pqd.clip_quiescent"],
    )


def seed_from_pressure(p_values, m):
    """Density profile whose pressure is the given field: ((m-1)/m p)^(1/(m-1))."""
    base = np.maximum((m - 1.0) / m * np.asarray(p_values, dtype=np.float64), 0.0)
    return np.power(base, 1.0 / (m - 1.0))


def _indicator_1d(x, boxes, value):
    if len(boxes) % 2 != 0 or not boxes:
        raise ContractError("1d ic.boxes needs pairs: x0,x1[,x0,x1,...]")
    rho = np.zeros_like(x)
    for i in range(0, len(boxes), 2):
        lo, hi = boxes[i], boxes[i + 1]
        rho[(x >= lo) & (x <= hi)] = value
    return rho


def _indicator_2d(xx, yy, boxes, value):
    if len(boxes) % 4 != 0 or not boxes:
        raise ContractError("2d ic.boxes needs quadruples: x0,x1,y0,y1[,...]")
    rho = np.zeros_like(xx)
    for i in range(0, len(boxes), 4):
        x0, x1, y0, y1 = boxes[i:i + 4]
        rho[(xx >= x0) & (xx <= x1) & (yy >= y0) & (yy <= y1)] = value
    return rho


def initial_density(config, grid):
    """Initial density values for the single-field geometries."""
    kind = config["ic.kind"]
    m = config["model.m"]
    if kind == "zero":
        shape = grid.shape if isinstance(grid, Grid2D) else (grid.ncells,)
        return np.zeros(shape)
    if isinstance(grid, Grid2D):
        xx, yy = grid.center_mesh()
        if kind == "indicator":
            return _indicator_2d(xx, yy, config["ic.boxes"], config["ic.value"])
        if kind == "flower":
            radius = np.sqrt(xx * xx + yy * yy)
            petal = 0.5 + np.sin(4.0 * np.arctan2(yy, xx)) / 2.0
            return np.where(radius - petal < 0.0, config["ic.value"], 0.0)
        raise ContractError(f"ic.kind = {kind} is not available in 2d geometry")
    if isinstance(grid, RadialGrid):
        if kind == "pinf_seeded":
            radii = config["ic.radii"]
            if len(radii) not in (2, 4):
                raise ContractError("radial ic.radii needs 2 or 4 entries")
            p = oracles.pressure_radial(grid.cell_centers(), radii)
            return seed_from_pressure(p, m)
        raise ContractError(f"ic.kind = {kind} is not available in radial geometry")
    x = grid.cell_centers()
    if kind == "barenblatt":
        # cell averages, not center samples: the scheme evolves cell means,
        # and at large m a center sample at the steep support edge carries
        # a grid-alignment-dependent O(1) error that pollutes convergence
        return oracles.barenblatt_cell_averages(grid.faces(), config["ic.t0"],
                                                m, config["ic.c"])
    if kind == "pinf_seeded":
        p = oracles.pressure_1d(config["ic.model"], x, config["ic.r0"])
        return seed_from_pressure(p, m)
    if kind == "indicator":
        return _indicator_1d(x, config["ic.boxes"], config["ic.value"])
    if kind == "gaussian":
        z = (x - config["ic.center"]) / config["ic.width"]
        return config["ic.amplitude"] * np.exp(-z * z)
    raise ContractError(f"ic.kind = {kind} is not available in 1d geometry")


def pqd_seed_profile(config, grid):
    """Initial proliferating-cell density (1 - cosh(x)/cosh(r0)) inside |x|<=r0."""
    x = grid.cell_centers()
    r0 = config["ic.r0"]
    profile = 1.0 - np.cosh(x) / np.cosh(r0)
    return np.where(np.abs(x) <= r0, np.maximum(profile, 0.0), 0.0)


def build_initial_state(config):
    """Initial state (with consistent velocity) for the configured geometry."""
    grid = build_grid(config)
    m = config["model.m"]
    threshold = config["model.support_threshold"]
    geometry = config.geometry
    if geometry == "pqd":
        if config["ic.kind"] != "pqd":
            raise ContractError("geometry pqd requires ic.kind = pqd")
        rho_p = pqd_seed_profile(config, grid)
        zeros = np.zeros_like(rho_p)
        return SpeciesState.from_components(grid, rho_p, zeros, zeros, m,
                                            threshold=threshold)
    rho = initial_density(config, grid)
    if geometry == "1d":
        return State1D.from_density(grid, rho, m, threshold=threshold)
    if geometry == "radial":
        return StateRadial.from_density(grid, rho, m, threshold=threshold)
    return State2D.from_density(grid, rho, m, threshold=threshold)


def density_oracle(config, grid):
    """Exact-density callable t -> values, for ICs with a closed-form solution."""
    if config.geometry == "1d" and config["ic.kind"] == "barenblatt":
        x = grid.cell_centers()
        m = config["model.m"]
        c = config["ic.c"]
        t0 = config["ic.t0"]
        return lambda t: oracles.barenblatt(x, t0 + t, m, c)
    raise OracleUnavailableError(
        f"no closed-form density for geometry={config.geometry!r}, "
        f"ic.kind={config['ic.kind']!r}"
    )
