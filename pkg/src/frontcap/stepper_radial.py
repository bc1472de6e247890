"""Prediction-correction stepping in cylindrical (radially symmetric) geometry.

Same three-stage scheme as the 1D slab stepper, with the transport
divergence replaced by (1/r) (r rho u)_r.  Velocities live on the faces
r_f = f dr; the origin face carries zero flux by symmetry (its metric
weight r = 0 removes it from every balance), and the correction remains
the plain radial pressure gradient.
"""

import numpy as np

from frontcap.errors import ContractError
from frontcap.grid import CellField, FaceField, RadialGrid, face_average
from frontcap.kernels import minmod_slopes, reconstruct, transport_update
from frontcap.linsolve import TriDiagSystem, thomas_solve
from frontcap.stepper1d import (
    State1D,
    correct_velocity,
    degenerate_power,
    growth_denominator,
    resolve_dt,
)


class StateRadial(State1D):
    """Radial run state; fields as in State1D on a RadialGrid."""

    @classmethod
    def from_density(cls, grid, rho_values, m, threshold=1e-6, t=0.0):
        if not isinstance(grid, RadialGrid):
            raise ContractError("StateRadial needs a RadialGrid")
        rho = CellField(grid, rho_values)
        u = correct_velocity(rho.values, m, grid.dr, threshold)
        return cls(rho, FaceField(grid, u), t)


def prediction_system_radial(rho, u, source, m, dt, grid, threshold):
    """Tridiagonal system for the predicted radial face velocities.

    Discretizes u_t = m ((rho^(m-2)) ((1/r)(r rho u)_r - S))_r with density
    and source frozen.  The divergence over cell c uses the face metric
    radii, so the origin face drops out automatically; both boundary faces
    are pinned to zero velocity.
    """
    n = rho.shape[0]
    dr = grid.dr
    r_face = grid.faces()
    r_cell = grid.cell_centers()
    rho_f = face_average(rho)
    w = degenerate_power(rho, m - 2.0, threshold)
    beta = m * dt / (dr * dr)
    diag = np.ones(n + 1)
    lower = np.zeros(n)
    upper = np.zeros(n)
    rhs = np.zeros(n + 1)
    # interior faces f = 1..n-1: left cell f-1, right cell f
    w_l = w[:-1]
    w_r = w[1:]
    ratio_l = r_face[1:-1] / r_cell[:-1]
    ratio_r = r_face[1:-1] / r_cell[1:]
    diag[1:-1] += beta * rho_f[1:-1] * (w_r * ratio_r + w_l * ratio_l)
    upper[1:] = -beta * w_r * rho_f[2:] * (r_face[2:] / r_cell[1:])
    lower[:-1] = -beta * w_l * rho_f[:-2] * (r_face[:-2] / r_cell[:-1])
    rhs[1:-1] = u[1:-1] - (m * dt / dr) * (w_r * source[1:] - w_l * source[:-1])
    return TriDiagSystem(lower, diag, upper, rhs)


def update_density_radial(rho, u_star, g_cells, dt, grid):
    """Radial transport + growth update in nonnegative-combination form.

    rho_i <- [rho_i - dt/(r_i dr) (r_{f+1} F_{f+1} - r_f F_f)] / (1 - dt G),
    realized through the weighted transport kernel with face weights r_f
    and cell weights r_i.
    """
    denom = growth_denominator(g_cells, dt)
    slopes = minmod_slopes(rho, grid.dr)
    left, right = reconstruct(rho, slopes, grid.dr)
    num = transport_update(left, right, u_star, dt / grid.dr,
                           face_weights=grid.faces(),
                           cell_weights=grid.cell_centers())
    return num / denom


def step_radial(state, params, max_dt=None):
    """Advance one radial step; growth must be constant or a fixed field."""
    grid = state.grid
    if params.growth.kind == "nutrient":
        raise ContractError(
            "nutrient-coupled growth is not available in radial geometry; "
            "use a constant or field growth rate"
        )
    rho = state.rho.values
    dt = resolve_dt(state, params, max_dt)
    g_cells = params.growth.resolve(rho, grid, params.support_threshold)
    source = rho * g_cells
    system = prediction_system_radial(rho, state.u.values, source, params.m,
                                      dt, grid, params.support_threshold)
    u_star = thomas_solve(system)
    rho_new = update_density_radial(rho, u_star, g_cells, dt, grid)
    u_new = correct_velocity(rho_new, params.m, grid.dr, params.support_threshold)
    if params.relaxation_epsilon is not None:
        decay = np.exp(-dt / params.relaxation_epsilon ** 2)
        u_new = u_new + decay * (u_star - u_new)
    return StateRadial(CellField(grid, rho_new), FaceField(grid, u_new),
                       state.t + dt)
