"""Prediction-correction time stepping for the 1D tumor growth model.

One step of the scheme for rho_t + (rho u)_x = rho G, u = -(m/(m-1))
(rho^(m-1))_x advances in three stages:

1. *predict*: solve the implicit face-velocity system obtained by
   differentiating the velocity equation in time and freezing the density,
   a tridiagonal solve;
2. *transport*: update the density with a second-order central
   (minmod/Lax-Friedrichs) scheme using the predicted velocity, treating
   the growth term semi-implicitly;
3. *correct*: replace the velocity by the exact gradient expression
   evaluated on the new density, so velocity and density leave every step
   perfectly consistent.  With a relaxation time epsilon configured, the
   prediction instead decays toward the consistent velocity by the closed
   form u = u_c + exp(-dt/eps^2)(u* - u_c).

Degenerate powers rho^(m-2) are evaluated as exp((m-2) log rho) and forced
to zero below the support threshold, which both respects the degenerate
vacuum limit and avoids denormal noise for large m.
"""

from dataclasses import dataclass, field

import numpy as np

from frontcap.errors import CflViolationError, ContractError
from frontcap.grid import CellField, FaceField, face_average
from frontcap.kernels import minmod_slopes, reconstruct, transport_update
from frontcap.linsolve import TriDiagSystem, thomas_solve
from frontcap.nutrient import DEFAULT_THRESHOLD, solve_vitro, solve_vivo

#: margin keeping the growth denominator positive when the step is capped
GROWTH_CFL_MARGIN = 1e-6


@dataclass
class GrowthSpec:
    """Growth rate G: none, a constant, a fixed field, or nutrient-coupled.

    For ``kind="nutrient"`` the per-capita rate is G(c) = c with c from the
    in vitro or in vivo quasi-static solve on the current density.
    """

    kind: str = "none"
    value: float = 1.0
    cells: np.ndarray | None = None
    model: str = "vitro"
    c_b: float = 1.0
    exchange: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "constant", "field", "nutrient"):
            raise ContractError(f"unknown growth kind {self.kind!r}")
        if self.kind == "nutrient" and self.model not in ("vitro", "vivo"):
            raise ContractError(f"unknown nutrient model {self.model!r}")

    def resolve(self, rho, grid, threshold):
        """Per-capita growth rate at the cells for the given density."""
        n = rho.shape[0] if rho.ndim == 1 else rho.shape
        if self.kind == "none":
            return np.zeros(n)
        if self.kind == "constant":
            return np.full(n, self.value)
        if self.kind == "field":
            cells = np.asarray(self.cells, dtype=np.float64)
            if cells.shape != rho.shape:
                raise ContractError("growth field shape does not match the grid")
            return cells
        if self.model == "vitro":
            return solve_vitro(rho, grid, self.c_b, threshold).values
        return solve_vivo(rho, grid, self.c_b, self.exchange, threshold).values

    def rate_bound(self):
        """Upper bound on G, available without a nutrient solve."""
        if self.kind == "none":
            return 0.0
        if self.kind == "constant":
            return max(self.value, 0.0)
        if self.kind == "field":
            return max(float(np.max(self.cells)), 0.0)
        return max(self.c_b, 0.0)  # nutrient obeys 0 <= c <= c_B


@dataclass
class ModelParams:
    """Exponent, growth model and stepping policy of a run.

    Exactly one of ``dt`` (fixed step, taken literally) or ``cfl_factor``
    (adaptive step from the transport CFL bound) must be set.  A fixed step
    is trusted as given -- reference runs prescribe it -- and any growth-CFL
    violation it causes surfaces as an error from the density update.
    """

    m: float
    growth: GrowthSpec = field(default_factory=GrowthSpec)
    support_threshold: float = DEFAULT_THRESHOLD
    relaxation_epsilon: float | None = None
    dt: float | None = None
    cfl_factor: float | None = None

    def __post_init__(self):
        if self.m <= 1.0:
            raise ContractError(f"exponent must satisfy m > 1, got {self.m}")
        if not 0.0 < self.support_threshold <= 1e-3:
            raise ContractError(
                f"support threshold must lie in (0, 1e-3], got {self.support_threshold}"
            )
        if (self.dt is None) == (self.cfl_factor is None):
            raise ContractError("set exactly one of dt and cfl_factor")
        if self.dt is not None and self.dt <= 0.0:
            raise ContractError(f"dt must be positive, got {self.dt}")
        if self.cfl_factor is not None and not 0.0 < self.cfl_factor <= 1.0:
            raise ContractError(
                f"cfl_factor must lie in (0, 1], got {self.cfl_factor}"
            )
        if self.relaxation_epsilon is not None and self.relaxation_epsilon <= 0.0:
            raise ContractError("relaxation epsilon must be positive")


@dataclass
class State1D:
    """Density (cells), velocity (faces) and time of a 1D run."""

    rho: CellField
    u: FaceField
    t: float = 0.0

    @property
    def grid(self):
        return self.rho.grid

    @classmethod
    def from_density(cls, grid, rho_values, m, threshold=DEFAULT_THRESHOLD, t=0.0):
        """State with the velocity initialized consistently from the density."""
        rho = CellField(grid, rho_values)
        u = correct_velocity(rho.values, m, grid.dx, threshold)
        return cls(rho, FaceField(grid, u), t)


def degenerate_power(rho, exponent, threshold):
    """rho**exponent via exp(exponent * log rho), zero at/below the threshold.

    Large exponents (m - 1, m - 2 for stiff runs) make direct powers of
    near-vacuum cells denormal garbage; zeroing below the support threshold
    matches the degenerate limit of the mobility.
    """
    rho = np.asarray(rho, dtype=np.float64)
    out = np.zeros(rho.shape)
    mask = rho > threshold
    np.exp(exponent * np.log(rho, where=mask, out=np.zeros(rho.shape)),
           where=mask, out=out)
    return out


def pressure(rho, m, threshold=DEFAULT_THRESHOLD):
    """Mechanical pressure p = m/(m-1) rho^(m-1)."""
    return (m / (m - 1.0)) * degenerate_power(rho, m - 1.0, threshold)


def _pressure_gradient(rho, m, dx, threshold):
    """Face-centered gradient of the pressure; zero on the boundary faces.

    Shared by the velocity correction and the consistency residual so the
    two use bitwise-identical arithmetic.
    """
    p = pressure(rho, m, threshold)
    grad = np.zeros(rho.shape[0] + 1)
    grad[1:-1] = (p[1:] - p[:-1]) / dx
    return grad


def correct_velocity(rho, m, dx, threshold=DEFAULT_THRESHOLD):
    """Exact velocity u = -(m/(m-1)) (rho^(m-1))_x on the faces."""
    return -_pressure_gradient(rho, m, dx, threshold)


def prediction_system(rho, u, source, m, dt, dx, threshold):
    """Tridiagonal system for the predicted face velocities.

    Implicit discretization of u_t = m ((rho^(m-2)) ((rho u)_x - S))_x with
    S the absolute growth source (rho G for a single species); rho and S
    are frozen at the current time.  Face f couples to its neighbors
    through the divergence of rho u over the two adjacent cells; boundary
    faces are pinned to zero velocity.
    """
    n = rho.shape[0]
    rho_f = face_average(rho)
    w = degenerate_power(rho, m - 2.0, threshold)
    beta = m * dt / (dx * dx)
    diag = np.ones(n + 1)
    lower = np.zeros(n)
    upper = np.zeros(n)
    rhs = np.zeros(n + 1)
    # interior faces f = 1..n-1: left cell f-1, right cell f
    w_l = w[:-1]
    w_r = w[1:]
    diag[1:-1] += beta * rho_f[1:-1] * (w_l + w_r)
    upper[1:] = -beta * w_r * rho_f[2:]
    lower[:-1] = -beta * w_l * rho_f[:-2]
    rhs[1:-1] = u[1:-1] - (m * dt / dx) * (w_r * source[1:] - w_l * source[:-1])
    return TriDiagSystem(lower, diag, upper, rhs)


def predict_velocity(state, params, g_cells=None):
    """Predicted face velocity u* for the current density (implicit solve)."""
    grid = state.grid
    rho = state.rho.values
    if g_cells is None:
        g_cells = params.growth.resolve(rho, grid, params.support_threshold)
    dt = resolve_dt(state, params)
    source = rho * g_cells
    system = prediction_system(rho, state.u.values, source, params.m, dt,
                               grid.dx, params.support_threshold)
    return FaceField(grid, thomas_solve(system))


def growth_denominator(g_cells, dt):
    """1 - dt G per cell; raises if the growth CFL bound fails."""
    denom = 1.0 - dt * g_cells
    if np.any(denom <= 0.0):
        g_max = float(np.max(g_cells))
        raise CflViolationError(
            f"growth CFL violated: 1 - dt*max(G) = {1.0 - dt * g_max:.3e} <= 0 "
            f"(dt={dt:.3e}, max G={g_max:.3e})",
            dt=dt, g_max=g_max,
        )
    return denom


def update_density(rho, u_star, g_cells, dt, dx):
    """Density after one transport + semi-implicit growth update.

    The transport part is the minmod/Lax-Friedrichs central scheme in its
    nonnegative-combination form; the growth divides by (1 - dt G), whose
    positivity is enforced here.
    """
    denom = growth_denominator(g_cells, dt)
    slopes = minmod_slopes(rho, dx)
    left, right = reconstruct(rho, slopes, dx)
    return transport_update(left, right, u_star, dt / dx) / denom


def resolve_dt(state, params, max_dt=None):
    """Step size from the policy: the fixed dt, or the CFL bound.

    The adaptive policy takes factor * dx / (2 max|u|) using the current
    velocity as the speed proxy, capped by the growth bound
    (1 - margin)/max G; a fixed dt is returned as configured.  ``max_dt``
    additionally clips (used to land exactly on the final time).
    """
    if params.dt is not None:
        dt = params.dt
    else:
        dt = np.inf
        u_max = float(np.max(np.abs(state.u.values)))
        if u_max > 0.0:
            dt = params.cfl_factor * state.grid.spacing / (2.0 * u_max)
        g_bound = params.growth.rate_bound()
        if g_bound > 0.0:
            dt = min(dt, (1.0 - GROWTH_CFL_MARGIN) / g_bound)
        if not np.isfinite(dt):
            raise ContractError(
                "CFL policy needs nonzero velocity or growth to set a step; "
                "configure a fixed dt instead"
            )
    if max_dt is not None:
        dt = min(dt, max_dt)
    return float(dt)


def relax_velocity(state, params, dt):
    """Frozen-density relaxation of the velocity toward consistency.

    Closed-form solve of eps^2 u_t = -(u - u_consistent) over one step:
    u <- u_c + exp(-dt/eps^2) (u - u_c).  Requires a configured epsilon.
    """
    if params.relaxation_epsilon is None:
        raise ContractError("relax_velocity needs relaxation_epsilon set")
    grid = state.grid
    u_c = correct_velocity(state.rho.values, params.m, grid.spacing,
                           params.support_threshold)
    decay = np.exp(-dt / params.relaxation_epsilon ** 2)
    return FaceField(grid, u_c + decay * (state.u.values - u_c))


def consistency_residual(state, params):
    """Face residual W = u + (m/(m-1)) (rho^(m-1))_x and its norms.

    Returns (w, linf, l2) with the L2 norm weighted by dx.  Exactly zero
    (in floating point) right after a non-relaxed step, because the
    correction writes u as minus the identical gradient expression.
    """
    grad = _pressure_gradient(state.rho.values, params.m, state.grid.spacing,
                              params.support_threshold)
    w = state.u.values + grad
    linf = float(np.max(np.abs(w)))
    l2 = float(np.sqrt(np.sum(np.square(w)) * state.grid.spacing))
    return w, linf, l2


def step(state, params, max_dt=None):
    """Advance one step; returns the new state with consistent velocity."""
    grid = state.grid
    rho = state.rho.values
    dt = resolve_dt(state, params, max_dt)
    g_cells = params.growth.resolve(rho, grid, params.support_threshold)
    source = rho * g_cells
    system = prediction_system(rho, state.u.values, source, params.m, dt,
                               grid.dx, params.support_threshold)
    u_star = thomas_solve(system)
    rho_new = update_density(rho, u_star, g_cells, dt, grid.dx)
    u_new = correct_velocity(rho_new, params.m, grid.dx, params.support_threshold)
    if params.relaxation_epsilon is not None:
        decay = np.exp(-dt / params.relaxation_epsilon ** 2)
        u_new = u_new + decay * (u_star - u_new)
    return State1D(CellField(grid, rho_new), FaceField(grid, u_new), state.t + dt)
