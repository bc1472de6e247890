"""Prediction-correction stepping on a 2D rectangle.

The 2D velocity (u, v) lives at cell centers.  The prediction couples the
two components through the mixed divergence terms, giving one sparse
system of dimension 2 nx ny over the interleaved unknowns (u_ij, v_ij),
solved by restarted GMRES warm-started from the current velocity.  The
density update applies the 1D minmod/Lax-Friedrichs transport along each
axis on face-averaged velocities,

    rho_new = 1/2 T_x(2 dt/dx) + 1/2 T_y(2 dt/dy),

which is algebraically the unsplit central-flux update while exposing the
nonnegative-combination structure of each half.  The correction replaces
(u, v) with centered pressure-gradient differences (one-sided at the
boundary cells).
"""

from dataclasses import dataclass

import numpy as np

from frontcap.errors import ContractError
from frontcap.grid import CellField, Grid2D, half_grid_average_2d
from frontcap.kernels import minmod_slopes, reconstruct, transport_update
from frontcap.linsolve import KrylovConfig, SparseSystem, krylov_solve
from frontcap.nutrient import DEFAULT_THRESHOLD
from frontcap.stepper1d import (
    GROWTH_CFL_MARGIN,
    degenerate_power,
    growth_denominator,
    pressure,
)

#: GMRES settings for the interleaved (u*, v*) prediction solve
PREDICTION_KRYLOV = KrylovConfig(tol=1e-10, restart=30, max_iter=5000)


@dataclass
class State2D:
    """Density and cell-centered velocity components of a 2D run.

    ``solver_iterations`` records the GMRES iteration count of the
    prediction solve that produced this state (0 for an initial state).
    """

    rho: CellField
    u: CellField
    v: CellField
    t: float = 0.0
    solver_iterations: int = 0

    @property
    def grid(self):
        return self.rho.grid

    @classmethod
    def from_density(cls, grid, rho_values, m, threshold=DEFAULT_THRESHOLD, t=0.0):
        if not isinstance(grid, Grid2D):
            raise ContractError("State2D needs a Grid2D")
        rho = CellField(grid, rho_values)
        u, v = correct_velocity_2d(rho.values, m, grid, threshold)
        return cls(rho, CellField(grid, u), CellField(grid, v), t)


def _centered_gradient(values, spacing, axis):
    """Cell-centered derivative along one axis, one-sided at the boundary."""
    if axis == 1:
        return np.ascontiguousarray(_centered_gradient(values.T, spacing, 0).T)
    g = np.empty_like(values)
    g[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2.0 * spacing)
    g[0, :] = (values[1, :] - values[0, :]) / spacing
    g[-1, :] = (values[-1, :] - values[-2, :]) / spacing
    return g


def correct_velocity_2d(rho, m, grid, threshold=DEFAULT_THRESHOLD):
    """Exact cell-centered velocity (u, v) = -grad p on the new density."""
    p = pressure(rho, m, threshold)
    u = -_centered_gradient(p, grid.dx, 0)
    v = -_centered_gradient(p, grid.dy, 1)
    return u, v


def consistency_residual_2d(state, params):
    """Components and norms of W = (u, v) + grad p at the cell centers."""
    p = pressure(state.rho.values, params.m, params.support_threshold)
    grid = state.grid
    wx = state.u.values + _centered_gradient(p, grid.dx, 0)
    wy = state.v.values + _centered_gradient(p, grid.dy, 1)
    linf = float(max(np.max(np.abs(wx)), np.max(np.abs(wy))))
    l2 = float(np.sqrt((np.sum(np.square(wx)) + np.sum(np.square(wy)))
                       * grid.dx * grid.dy))
    return wx, wy, linf, l2


def prediction_system_2d(rho, u, v, g_cells, m, dt, grid, threshold):
    """Sparse interleaved system for the predicted (u*, v*).

    Row layout: cell (i, j) owns rows 2(i ny + j) for u and 2(i ny + j)+1
    for v.  The u-row discretizes u_t = m d/dx [rho^(m-2)((rho u)_x +
    (rho v)_y - rho G)] with face-averaged rho^(m-2) on the x-divergence,
    centered cross differences weighted by the cell values rho_{i+-1,j}^(m-2),
    and the source difference on the rhs; the v-row mirrors in y.  Boundary
    cells are pinned to u* = v* = 0.
    """
    nx, ny = grid.shape
    dx, dy = grid.dx, grid.dy
    wc = degenerate_power(rho, m - 2.0, threshold)
    wx = degenerate_power(half_grid_average_2d(rho, 0), m - 2.0, threshold)
    wy = degenerate_power(half_grid_average_2d(rho, 1), m - 2.0, threshold)
    q = wc * rho * g_cells
    bx = m * dt / (dx * dx)
    by = m * dt / (dy * dy)
    gam = m * dt / (4.0 * dx * dy)

    ii, jj = np.meshgrid(np.arange(1, nx - 1), np.arange(1, ny - 1),
                         indexing="ij")
    ii = ii.ravel()
    jj = jj.ravel()

    def uid(a, b):
        return 2 * (a * ny + b)

    def vid(a, b):
        return 2 * (a * ny + b) + 1

    rows, cols, vals = [], [], []

    def put(r, c, entry):
        rows.append(r)
        cols.append(c)
        vals.append(entry)

    urow = uid(ii, jj)
    vrow = vid(ii, jj)
    wxp = wx[ii + 1, jj]
    wxm = wx[ii, jj]
    wyp = wy[ii, jj + 1]
    wym = wy[ii, jj]
    # u-rows: x-divergence block, then the four v cross couplings
    put(urow, urow, 1.0 + bx * rho[ii, jj] * (wxp + wxm))
    put(urow, uid(ii + 1, jj), -bx * wxp * rho[ii + 1, jj])
    put(urow, uid(ii - 1, jj), -bx * wxm * rho[ii - 1, jj])
    put(urow, vid(ii + 1, jj + 1), -gam * wc[ii + 1, jj] * rho[ii + 1, jj + 1])
    put(urow, vid(ii + 1, jj - 1), gam * wc[ii + 1, jj] * rho[ii + 1, jj - 1])
    put(urow, vid(ii - 1, jj + 1), gam * wc[ii - 1, jj] * rho[ii - 1, jj + 1])
    put(urow, vid(ii - 1, jj - 1), -gam * wc[ii - 1, jj] * rho[ii - 1, jj - 1])
    # v-rows mirror with x and y exchanged
    put(vrow, vrow, 1.0 + by * rho[ii, jj] * (wyp + wym))
    put(vrow, vid(ii, jj + 1), -by * wyp * rho[ii, jj + 1])
    put(vrow, vid(ii, jj - 1), -by * wym * rho[ii, jj - 1])
    put(vrow, uid(ii + 1, jj + 1), -gam * wc[ii, jj + 1] * rho[ii + 1, jj + 1])
    put(vrow, uid(ii - 1, jj + 1), gam * wc[ii, jj + 1] * rho[ii - 1, jj + 1])
    put(vrow, uid(ii + 1, jj - 1), gam * wc[ii, jj - 1] * rho[ii + 1, jj - 1])
    put(vrow, uid(ii - 1, jj - 1), -gam * wc[ii, jj - 1] * rho[ii - 1, jj - 1])

    edge = np.zeros((nx, ny), dtype=bool)
    edge[0, :] = edge[-1, :] = True
    edge[:, 0] = edge[:, -1] = True
    bi, bj = np.nonzero(edge)
    ones = np.ones(bi.shape[0])
    put(uid(bi, bj), uid(bi, bj), ones)
    put(vid(bi, bj), vid(bi, bj), ones)

    rhs = np.zeros(2 * nx * ny)
    rhs[urow] = u[ii, jj] - (m * dt / (2.0 * dx)) * (q[ii + 1, jj] - q[ii - 1, jj])
    rhs[vrow] = v[ii, jj] - (m * dt / (2.0 * dy)) * (q[ii, jj + 1] - q[ii, jj - 1])

    return SparseSystem.from_coo(
        2 * nx * ny,
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
        rhs,
    )


def assemble_prediction_2d(state, params, g_cells=None):
    """Prediction system for the current state (see prediction_system_2d)."""
    grid = state.grid
    rho = state.rho.values
    if g_cells is None:
        g_cells = params.growth.resolve(rho, grid, params.support_threshold)
    dt = resolve_dt_2d(state, params)
    return prediction_system_2d(rho, state.u.values, state.v.values, g_cells,
                                params.m, dt, grid, params.support_threshold)


def _interleave(u, v):
    out = np.empty(2 * u.size)
    out[0::2] = u.ravel()
    out[1::2] = v.ravel()
    return out


def _transport_axis(values, u_face, lam, spacing, axis):
    """1D minmod/LLF transport applied along one axis of a 2D field."""
    if axis == 1:
        return _transport_axis(values.T, u_face.T, lam, spacing, 0).T
    out = np.empty_like(values)
    for j in range(values.shape[1]):
        col = np.ascontiguousarray(values[:, j])
        slopes = minmod_slopes(col, spacing)
        left, right = reconstruct(col, slopes, spacing)
        out[:, j] = transport_update(left, right,
                                     np.ascontiguousarray(u_face[:, j]), lam)
    return out


def update_density_2d(rho, u_star, v_star, g_cells, dt, grid):
    """Dimension-split transport halves plus the semi-implicit growth."""
    denom = growth_denominator(g_cells, dt)
    u_face = half_grid_average_2d(u_star, 0)
    v_face = half_grid_average_2d(v_star, 1)
    tx = _transport_axis(rho, u_face, 2.0 * dt / grid.dx, grid.dx, 0)
    ty = _transport_axis(rho, v_face, 2.0 * dt / grid.dy, grid.dy, 1)
    return 0.5 * (tx + ty) / denom


def resolve_dt_2d(state, params, max_dt=None):
    """Fixed dt, or the 2D CFL bound factor / (2 max(|u|/dx + |v|/dy)).

    The combined-speed form bounds both per-axis transport halves at once;
    factor = 1 sits at the marginal positivity bound when the speed is
    split evenly between the axes, and factor <= 1/2 is provably safe for
    any split.  Capped by the growth bound as in 1D.
    """
    if params.dt is not None:
        dt = params.dt
    else:
        grid = state.grid
        speed = np.abs(state.u.values) / grid.dx + np.abs(state.v.values) / grid.dy
        s_max = float(np.max(speed))
        dt = np.inf
        if s_max > 0.0:
            dt = params.cfl_factor / (2.0 * s_max)
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


def step_2d(state, params, max_dt=None, krylov=None):
    """Advance one 2D step: predict (GMRES), transport, correct."""
    grid = state.grid
    rho = state.rho.values
    dt = resolve_dt_2d(state, params, max_dt)
    g_cells = params.growth.resolve(rho, grid, params.support_threshold)
    system = prediction_system_2d(rho, state.u.values, state.v.values, g_cells,
                                  params.m, dt, grid, params.support_threshold)
    result = krylov_solve(system, krylov or PREDICTION_KRYLOV,
                          x0=_interleave(state.u.values, state.v.values))
    u_star = result.x[0::2].reshape(grid.shape)
    v_star = result.x[1::2].reshape(grid.shape)
    rho_new = update_density_2d(rho, u_star, v_star, g_cells, dt, grid)
    u_new, v_new = correct_velocity_2d(rho_new, params.m, grid,
                                       params.support_threshold)
    if params.relaxation_epsilon is not None:
        decay = np.exp(-dt / params.relaxation_epsilon ** 2)
        u_new = u_new + decay * (u_star - u_new)
        v_new = v_new + decay * (v_star - v_new)
    return State2D(CellField(grid, rho_new), CellField(grid, u_new),
                   CellField(grid, v_new), state.t + dt, result.iterations)
