"""Run diagnostics: norms, energy, fronts, convergence orders.

Everything here is a pure function of the arrays passed in, so a record can
be recomputed bit-for-bit from a saved state.
"""

from dataclasses import dataclass, field

import numpy as np

from frontcap.errors import ContractError
from frontcap.grid import Grid1D, Grid2D, RadialGrid


def cell_weights(grid):
    """Integration weight of each cell (dx; dx*dy; 2 pi r dr)."""
    if isinstance(grid, Grid2D):
        return np.full(grid.shape, grid.dx * grid.dy)
    if isinstance(grid, RadialGrid):
        return 2.0 * np.pi * grid.cell_centers() * grid.dr
    if isinstance(grid, Grid1D):
        return np.full(grid.nx, grid.dx)
    raise ContractError(f"unsupported grid type {type(grid).__name__}")


def total_mass(values, grid):
    """Integral of the field over the domain (radial grids weight by 2 pi r)."""
    return float(np.sum(values * cell_weights(grid)))


def l2_norm(values, grid):
    """Grid-weighted L2 norm."""
    return float(np.sqrt(np.sum(np.square(values) * cell_weights(grid))))


def discrete_energy(values, grid, m):
    """E = integral of rho^m / (m-1), the Lyapunov functional of the scheme.

    Under constant growth rate G the semi-discrete scheme satisfies
    E(t) <= exp(m G t) E(0).
    """
    if m <= 1.0:
        raise ContractError(f"energy needs m > 1, got m={m}")
    with np.errstate(over="ignore"):  # huge fields honestly have E = inf
        return float(np.sum(np.power(values, m) * cell_weights(grid)) / (m - 1.0))


def front_positions(values, coords, threshold):
    """Positions where the field crosses ``threshold``, by linear interpolation.

    Scans consecutive cell centers for sign changes of (value - threshold).
    Returns a (possibly empty) tuple ordered by coordinate.
    """
    v = np.asarray(values, dtype=np.float64) - threshold
    x = np.asarray(coords, dtype=np.float64)
    sign_change = v[:-1] * v[1:] < 0.0
    out = []
    for i in np.nonzero(sign_change)[0]:
        out.append(x[i] + (x[i + 1] - x[i]) * (-v[i]) / (v[i + 1] - v[i]))
    for i in np.nonzero(v == 0.0)[0]:
        out.append(x[i])
    return tuple(sorted(out))


def half_height_threshold(values):
    """Half the field maximum: the front threshold for sharp (large-m) profiles."""
    return 0.5 * float(np.max(values))


def eoc(errors, spacings):
    """Experimental orders of convergence between consecutive refinements."""
    e = np.asarray(errors, dtype=np.float64)
    h = np.asarray(spacings, dtype=np.float64)
    if e.shape != h.shape or e.shape[0] < 2:
        raise ContractError("need matching error/spacing sequences of length >= 2")
    if np.any(e <= 0.0) or np.any(h <= 0.0):
        raise ContractError("errors and spacings must be positive")
    steps = np.diff(h)
    if not (np.all(steps < 0.0) or np.all(steps > 0.0)):
        raise ContractError("spacings must be strictly monotone")
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


class SpacetimeL1:
    """Accumulator for the space-time L1 error sum_n sum_j |e_j^n| dx dt_n."""

    def __init__(self):
        self.value = 0.0

    def add(self, numeric, exact, dx, dt):
        self.value += float(np.sum(np.abs(numeric - exact))) * dx * dt
        return self.value


@dataclass
class SeriesRecord:
    """Per-step scalar diagnostics written to series.csv."""

    step: int
    t: float
    dt: float
    mass: float
    energy: float
    l2: float
    max_density: float
    min_density: float
    fronts: tuple = ()
    w_linf: float = 0.0
    w_l2: float = 0.0
    solver_iterations: int = 0


def make_record(step, t, dt, values, grid, m, front_threshold=None,
                front_coords=None, w_linf=0.0, w_l2=0.0, solver_iterations=0):
    """Assemble a SeriesRecord from a density field.

    ``front_threshold`` may be a float or a callable applied to the values
    (e.g. :func:`half_height_threshold`); fronts are only extracted for 1D
    fields.
    """
    fronts = ()
    if front_threshold is not None and values.ndim == 1:
        thr = front_threshold(values) if callable(front_threshold) else front_threshold
        coords = front_coords if front_coords is not None else grid.cell_centers()
        fronts = front_positions(values, coords, thr)
    return SeriesRecord(
        step=step, t=t, dt=dt,
        mass=total_mass(values, grid),
        energy=discrete_energy(values, grid, m),
        l2=l2_norm(values, grid),
        max_density=float(np.max(values)),
        min_density=float(np.min(values)),
        fronts=fronts,
        w_linf=w_linf, w_l2=w_l2,
        solver_iterations=solver_iterations,
    )


def bilinear_sample(values, grid, xs, ys):
    """Sample a 2D cell field at arbitrary points by bilinear interpolation.

    Points beyond the outermost cell centers clamp to the edge value.
    """
    xc = grid.x_centers()
    yc = grid.y_centers()
    fx = np.clip((xs - xc[0]) / grid.dx, 0.0, grid.nx - 1.0)
    fy = np.clip((ys - yc[0]) / grid.dy, 0.0, grid.ny - 1.0)
    i0 = np.minimum(fx.astype(np.int64), grid.nx - 2)
    j0 = np.minimum(fy.astype(np.int64), grid.ny - 2)
    tx = fx - i0
    ty = fy - j0
    return ((1 - tx) * (1 - ty) * values[i0, j0]
            + tx * (1 - ty) * values[i0 + 1, j0]
            + (1 - tx) * ty * values[i0, j0 + 1]
            + tx * ty * values[i0 + 1, j0 + 1])


def angular_front_radii(values, grid, threshold, center=None, n_angles=72):
    """Outermost threshold-crossing radius per ray from ``center``.

    Rays are sampled at dx/4 resolution out to the nearest domain edge;
    the radius per angle is found by linear interpolation around the last
    sample above the threshold.  Angles whose ray never exceeds the
    threshold give nan.
    """
    if center is None:
        w = np.maximum(values, 0.0)
        total = float(np.sum(w))
        if total == 0.0:
            raise ContractError("cannot locate a front in an all-zero field")
        xm, ym = grid.center_mesh()
        center = (float(np.sum(w * xm)) / total, float(np.sum(w * ym)) / total)
    cx, cy = center
    r_max = min(cx - grid.ax, grid.bx - cx, cy - grid.ay, grid.by - cy)
    rs = np.arange(0.0, r_max, 0.25 * min(grid.dx, grid.dy))
    radii = np.full(n_angles, np.nan)
    for k in range(n_angles):
        th = 2.0 * np.pi * k / n_angles
        line = bilinear_sample(values, grid,
                               cx + rs * np.cos(th), cy + rs * np.sin(th))
        above = np.nonzero(line >= threshold)[0]
        if above.size == 0:
            continue
        i = above[-1]
        if i == rs.shape[0] - 1:
            radii[k] = rs[i]
        else:
            f0, f1 = line[i] - threshold, line[i + 1] - threshold
            radii[k] = rs[i] + (rs[i + 1] - rs[i]) * f0 / (f0 - f1)
    return radii


def angular_spread(values, grid, threshold, center=None, n_angles=72):
    """Standard deviation of the angular front radius (nan rays excluded)."""
    radii = angular_front_radii(values, grid, threshold, center, n_angles)
    good = radii[np.isfinite(radii)]
    if good.size == 0:
        raise ContractError("no ray crossed the front threshold")
    return float(np.std(good))
