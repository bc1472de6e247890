"""Proliferating / quiescent / dead (PQD) three-species model in 1D.

All species are carried by the common velocity u = -(m/(m-1)) (rho^(m-1))_x
built from the total density rho = rho_P + rho_Q + rho_D.  Following the
reformulation that replaces the quiescent equation by the total-density
equation, the stored unknowns are rho_P, rho_D and rho_total, with
rho_Q derived as their difference -- which keeps the species-sum identity
exact by construction but means rho_Q's nonnegativity is monitored, not
guaranteed (minmod reconstruction is not additive across species).

Reactions per step (c is the nutrient concentration):

    rho_P: gains c rho_P (implicit) and b rho_Q (explicit), loses a rho_P
           (implicit);
    rho_D: gains d rho_Q (explicit), loses mu rho_D (implicit);
    total: gains c rho_P - mu rho_D, evaluated on the freshly updated
           species.

The velocity prediction reuses the single-species tridiagonal system with
source G - mu rho_D, so setting a=b=d=mu=0 and c constant reduces every
stage to the single-species scheme.
"""

from dataclasses import dataclass, field

import numpy as np

from frontcap.errors import CflViolationError, ContractError, InvariantError
from frontcap.grid import CellField, FaceField
from frontcap.kernels import minmod_slopes, reconstruct, transport_update
from frontcap.linsolve import thomas_solve
from frontcap.nutrient import DEFAULT_THRESHOLD
from frontcap.stepper1d import (
    GROWTH_CFL_MARGIN,
    GrowthSpec,
    correct_velocity,
    prediction_system,
)

#: largest tolerated undershoot of the derived quiescent density
QUIESCENT_TOL = 1e-10


@dataclass
class PQDParams:
    """Reaction rates and nutrient source of the PQD model.

    ``a``: proliferating -> quiescent; ``b``: quiescent -> proliferating;
    ``d``: quiescent -> dead; ``mu``: dead-cell clearance.  ``nutrient``
    describes the concentration c entering the growth G = c rho_P --
    a constant or one of the quasi-static nutrient models on the total
    density.  ``clip_quiescent`` lifts the total density so the derived
    rho_Q never goes negative instead of erroring out.
    """

    a: float = 0.0
    b: float = 0.0
    d: float = 0.0
    mu: float = 0.0
    nutrient: GrowthSpec = field(
        default_factory=lambda: GrowthSpec(kind="constant", value=1.0))
    clip_quiescent: bool = False

    def __post_init__(self):
        for name in ("a", "b", "d", "mu"):
            rate = getattr(self, name)
            if not (np.isfinite(rate) and rate >= 0.0):
                raise ContractError(f"rate {name} must be finite and >= 0, got {rate}")


@dataclass
class SpeciesState:
    """Three-species state; rho_Q is derived from the stored densities."""

    rho_p: CellField
    rho_d: CellField
    rho_total: CellField
    u: FaceField
    t: float = 0.0

    @property
    def grid(self):
        return self.rho_total.grid

    @property
    def rho_q(self):
        return CellField(self.grid, self.rho_total.values
                         - self.rho_p.values - self.rho_d.values)

    @classmethod
    def from_components(cls, grid, rho_p, rho_q, rho_d, m,
                        threshold=DEFAULT_THRESHOLD, t=0.0):
        """State from the three species, with consistent total and velocity."""
        p = CellField(grid, rho_p)
        q = CellField(grid, rho_q)
        d = CellField(grid, rho_d)
        total = CellField(grid, p.values + q.values + d.values)
        u = correct_velocity(total.values, m, grid.dx, threshold)
        return cls(p, d, total, FaceField(grid, u), t)


def _resolve_dt_pqd(state, params, pqd, max_dt=None):
    """Fixed dt, or the transport CFL capped by the proliferation balance.

    The implicit proliferating-cell denominator 1 + dt(a - c) must stay
    positive; with c <= c_B the binding bound is dt < 1/(c_B - a) when the
    nutrient can outrun the quiescent conversion.
    """
    if params.dt is not None:
        dt = params.dt
    else:
        dt = np.inf
        u_max = float(np.max(np.abs(state.u.values)))
        if u_max > 0.0:
            dt = params.cfl_factor * state.grid.dx / (2.0 * u_max)
        gap = pqd.nutrient.rate_bound() - pqd.a
        if gap > 0.0:
            dt = min(dt, (1.0 - GROWTH_CFL_MARGIN) / gap)
        if not np.isfinite(dt):
            raise ContractError(
                "CFL policy needs nonzero velocity or growth to set a step; "
                "configure a fixed dt instead"
            )
    if max_dt is not None:
        dt = min(dt, max_dt)
    return float(dt)


def _advect(values, u_star, lam, dx):
    slopes = minmod_slopes(values, dx)
    left, right = reconstruct(values, slopes, dx)
    return transport_update(left, right, u_star, lam)


def step_pqd(state, params, pqd, max_dt=None):
    """Advance the PQD system one step with a shared predicted velocity."""
    grid = state.grid
    dx = grid.dx
    rho_p = state.rho_p.values
    rho_d = state.rho_d.values
    rho = state.rho_total.values
    rho_q = rho - rho_p - rho_d
    dt = _resolve_dt_pqd(state, params, pqd, max_dt)

    c = pqd.nutrient.resolve(rho, grid, params.support_threshold)
    growth = c * rho_p
    source = growth - pqd.mu * rho_d
    system = prediction_system(rho, state.u.values, source, params.m, dt, dx,
                               params.support_threshold)
    u_star = thomas_solve(system)

    lam = dt / dx
    adv_p = _advect(rho_p, u_star, lam, dx)
    adv_d = _advect(rho_d, u_star, lam, dx)
    adv_total = _advect(rho, u_star, lam, dx)

    denom_p = 1.0 + dt * pqd.a - dt * c
    if np.any(denom_p <= 0.0):
        c_max = float(np.max(c))
        raise CflViolationError(
            f"proliferation CFL violated: 1 + dt*(a - max(c)) = "
            f"{1.0 + dt * (pqd.a - c_max):.3e} <= 0 (dt={dt:.3e})",
            dt=dt, g_max=c_max - pqd.a,
        )
    rho_p_new = (adv_p + dt * pqd.b * rho_q) / denom_p
    rho_d_new = (adv_d + dt * pqd.d * rho_q) / (1.0 + dt * pqd.mu)
    rho_new = adv_total + dt * (c * rho_p_new - pqd.mu * rho_d_new)

    rho_q_new = rho_new - rho_p_new - rho_d_new
    q_min = float(np.min(rho_q_new))
    if q_min < -QUIESCENT_TOL:
        if pqd.clip_quiescent:
            rho_new = np.maximum(rho_new, rho_p_new + rho_d_new)
        else:
            raise InvariantError(
                "quiescent-positivity",
                f"derived rho_Q reached {q_min:.3e} < -{QUIESCENT_TOL:.0e}; "
                "reduce dt or enable quiescent clipping",
            )

    u_new = correct_velocity(rho_new, params.m, dx, params.support_threshold)
    if params.relaxation_epsilon is not None:
        decay = np.exp(-dt / params.relaxation_epsilon ** 2)
        u_new = u_new + decay * (u_star - u_new)
    return SpeciesState(CellField(grid, rho_p_new), CellField(grid, rho_d_new),
                        CellField(grid, rho_new), FaceField(grid, u_new),
                        state.t + dt)
