"""Uniform grids and the cell/face field containers.

All schemes in this package live on uniform cell-centered grids: density is
stored as cell averages, 1D velocities on faces, 2D velocities at cell
centers.  The containers here validate shapes and finiteness once at
construction so the numerical kernels can work on bare arrays.
"""

from dataclasses import dataclass, field

import numpy as np

from frontcap.errors import ContractError


def _check_finite(values, what):
    if not np.all(np.isfinite(values)):
        raise ContractError(f"{what} contains non-finite entries")


class Grid1D:
    """Uniform 1D grid on [a, b] with nx cells.

    Cell i is centered at a + (i + 1/2) dx; face f sits at a + f dx, so
    there are nx + 1 faces with the outermost ones on the domain boundary.
    """

    def __init__(self, a, b, nx):
        if not b > a:
            raise ContractError(f"domain must satisfy b > a, got [{a}, {b}]")
        if nx < 4:
            raise ContractError(f"need at least 4 cells, got nx={nx}")
        self.a = float(a)
        self.b = float(b)
        self.nx = int(nx)
        self.dx = (self.b - self.a) / self.nx

    @property
    def spacing(self):
        return self.dx

    @property
    def ncells(self):
        return self.nx

    @property
    def nfaces(self):
        return self.nx + 1

    def cell_centers(self):
        return self.a + (np.arange(self.nx) + 0.5) * self.dx

    def faces(self):
        return self.a + np.arange(self.nx + 1) * self.dx

    def __repr__(self):
        return f"Grid1D(a={self.a}, b={self.b}, nx={self.nx})"


class RadialGrid:
    """Uniform radial grid on [0, r_max] for cylindrically symmetric fields.

    Cell i is centered at (i + 1/2) dr; face f sits at f dr, so the first
    face is the origin (where the metric factor r vanishes and the flux is
    identically zero).
    """

    def __init__(self, r_max, nr):
        if not r_max > 0:
            raise ContractError(f"r_max must be positive, got {r_max}")
        if nr < 4:
            raise ContractError(f"need at least 4 cells, got nr={nr}")
        self.r_max = float(r_max)
        self.nr = int(nr)
        self.dr = self.r_max / self.nr

    @property
    def spacing(self):
        return self.dr

    @property
    def ncells(self):
        return self.nr

    @property
    def nfaces(self):
        return self.nr + 1

    def cell_centers(self):
        return (np.arange(self.nr) + 0.5) * self.dr

    def faces(self):
        return np.arange(self.nr + 1) * self.dr

    def __repr__(self):
        return f"RadialGrid(r_max={self.r_max}, nr={self.nr})"


class Grid2D:
    """Uniform tensor-product grid on [ax, bx] x [ay, by].

    Fields are stored with shape (nx, ny); index [i, j] is the cell centered
    at (ax + (i+1/2) dx, ay + (j+1/2) dy).
    """

    def __init__(self, ax, bx, nx, ay, by, ny):
        if not (bx > ax and by > ay):
            raise ContractError("domain must have positive extent in both axes")
        if nx < 4 or ny < 4:
            raise ContractError(f"need at least 4 cells per axis, got {nx}x{ny}")
        self.ax, self.bx, self.nx = float(ax), float(bx), int(nx)
        self.ay, self.by, self.ny = float(ay), float(by), int(ny)
        self.dx = (self.bx - self.ax) / self.nx
        self.dy = (self.by - self.ay) / self.ny

    @property
    def shape(self):
        return (self.nx, self.ny)

    def x_centers(self):
        return self.ax + (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self):
        return self.ay + (np.arange(self.ny) + 0.5) * self.dy

    def center_mesh(self):
        """Meshgrid of cell centers with indexing matching field arrays."""
        return np.meshgrid(self.x_centers(), self.y_centers(), indexing="ij")

    def __repr__(self):
        return (f"Grid2D(x=[{self.ax}, {self.bx}]x{self.nx}, "
                f"y=[{self.ay}, {self.by}]x{self.ny})")


@dataclass
class CellField:
    """Finite cell-averaged field on a grid (1D, radial or 2D)."""

    grid: object
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        expected = self.grid.shape if isinstance(self.grid, Grid2D) else (self.grid.ncells,)
        if self.values.shape != expected:
            raise ContractError(
                f"cell field shape {self.values.shape} does not match grid {expected}"
            )
        _check_finite(self.values, "cell field")


@dataclass
class FaceField:
    """Finite face-valued field on a 1D or radial grid (nx + 1 entries)."""

    grid: object
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.nfaces,):
            raise ContractError(
                f"face field shape {self.values.shape} does not match grid "
                f"({self.grid.nfaces},)"
            )
        _check_finite(self.values, "face field")


def face_average(rho):
    """Arithmetic face averages of a 1D/radial cell field.

    Interior face f takes (v[f-1] + v[f])/2; the boundary faces copy the
    single adjacent cell.  Linear in the input, so constants are preserved.
    """
    v = rho.values if isinstance(rho, CellField) else np.asarray(rho, dtype=np.float64)
    out = np.empty(v.shape[0] + 1)
    out[1:-1] = 0.5 * (v[:-1] + v[1:])
    out[0] = v[0]
    out[-1] = v[-1]
    if isinstance(rho, CellField):
        return FaceField(rho.grid, out)
    return out


def half_grid_average_2d(values, axis):
    """Face averages of a 2D field along one axis.

    For ``axis=0`` returns shape (nx+1, ny): entry [f, j] is the average of
    cells [f-1, j] and [f, j], with boundary faces copying the adjacent
    cell.  ``axis=1`` is the transposed analogue with shape (nx, ny+1).
    """
    v = np.asarray(values, dtype=np.float64)
    if axis == 0:
        out = np.empty((v.shape[0] + 1, v.shape[1]))
        out[1:-1, :] = 0.5 * (v[:-1, :] + v[1:, :])
        out[0, :] = v[0, :]
        out[-1, :] = v[-1, :]
    elif axis == 1:
        out = np.empty((v.shape[0], v.shape[1] + 1))
        out[:, 1:-1] = 0.5 * (v[:, :-1] + v[:, 1:])
        out[:, 0] = v[:, 0]
        out[:, -1] = v[:, -1]
    else:
        raise ValueError("axis must be 0 or 1")
    return out
