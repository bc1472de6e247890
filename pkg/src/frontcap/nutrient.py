"""Quasi-static nutrient solves feeding the growth term G(c) = c.

Two exterior models, in 1D and 2D:

* in vitro: the nutrient is held at the ambient value c_B outside the
  tumor support; inside, -Laplace(c) + rho c = 0.  The Dirichlet value is
  imposed at the mask interface *face* via a Shortley-Weller (half-cell)
  stencil, which keeps the solve second-order accurate in the max norm.
* in vivo: one solve over the whole domain,
  -Laplace(c) + rho c + d X c = d X c_B with X the indicator of the
  exterior (unmasked) cells and zero-Neumann domain boundaries.  As the
  exchange rate d grows this pins the exterior to c_B.

Both discrete operators are M-matrices, so solutions obey the maximum
principle 0 <= c <= c_B whenever rho >= 0.
"""

import numpy as np

from frontcap.errors import ContractError
from frontcap.grid import CellField, Grid1D, Grid2D
from frontcap.kernels import thomas_solve_arrays
from frontcap.linsolve import KrylovConfig, SparseSystem, krylov_solve

#: density below which a cell counts as outside the tumor support
DEFAULT_THRESHOLD = 1e-6


def support_mask(values, threshold=DEFAULT_THRESHOLD):
    """Boolean mask of cells strictly above the support threshold."""
    if not 0.0 < threshold <= 1e-3:
        raise ContractError(
            f"support threshold must lie in (0, 1e-3], got {threshold}"
        )
    return np.asarray(values) > threshold


def _values_and_grid(rho, grid):
    if isinstance(rho, CellField):
        return rho.values, rho.grid
    return np.ascontiguousarray(rho, dtype=np.float64), grid


def solve_vitro(rho, grid=None, c_b=1.0, threshold=DEFAULT_THRESHOLD):
    """Nutrient field with the exterior held at c_B (Dirichlet).

    Masked cells satisfy -Laplace(c) + rho c = 0 with c = c_B imposed at
    the face toward any unmasked neighbor (and at the domain boundary);
    unmasked cells are fixed to c_B.
    """
    values, grid = _values_and_grid(rho, grid)
    if np.any(values < 0.0):
        raise ContractError("density must be nonnegative for the nutrient solve")
    mask = support_mask(values, threshold)
    if isinstance(grid, Grid1D):
        c = _vitro_1d(values, mask, grid.dx, c_b)
    elif isinstance(grid, Grid2D):
        c = _vitro_2d(values, mask, grid, c_b)
    else:
        raise ContractError(f"unsupported grid type {type(grid).__name__}")
    return CellField(grid, c)


def solve_vivo(rho, grid=None, c_b=1.0, exchange=1.0,
               threshold=DEFAULT_THRESHOLD):
    """Nutrient field with exterior exchange at rate ``exchange``.

    Solves -Laplace(c) + rho c + d X c = d X c_B on the whole domain with
    zero-Neumann boundaries, X indicating cells outside the support mask.
    """
    values, grid = _values_and_grid(rho, grid)
    if np.any(values < 0.0):
        raise ContractError("density must be nonnegative for the nutrient solve")
    if exchange <= 0.0:
        raise ContractError(f"exchange rate must be positive, got {exchange}")
    mask = support_mask(values, threshold)
    chi = (~mask).astype(np.float64)
    if isinstance(grid, Grid1D):
        c = _vivo_1d(values, chi, grid.dx, c_b, exchange)
    elif isinstance(grid, Grid2D):
        c = _vivo_2d(values, chi, grid, c_b, exchange)
    else:
        raise ContractError(f"unsupported grid type {type(grid).__name__}")
    return CellField(grid, c)


# ---------------------------------------------------------------------------
# 1D assemblies

def _side_coeffs(dx, neighbor_masked):
    """(coupling h, shared h sum contribution) for one side of a masked cell.

    A masked neighbor couples at distance dx; an unmasked neighbor (or the
    domain edge) turns into a Dirichlet value at the shared face, distance
    dx/2.
    """
    return dx if neighbor_masked else 0.5 * dx


def _vitro_1d(values, mask, dx, c_b):
    n = values.shape[0]
    lower = np.zeros(n - 1)
    upper = np.zeros(n - 1)
    diag = np.ones(n)
    rhs = np.full(n, c_b)
    for i in np.nonzero(mask)[0]:
        left_in = i > 0 and mask[i - 1]
        right_in = i < n - 1 and mask[i + 1]
        h_l = _side_coeffs(dx, left_in)
        h_r = _side_coeffs(dx, right_in)
        c_l = 2.0 / (h_l * (h_l + h_r))
        c_r = 2.0 / (h_r * (h_l + h_r))
        diag[i] = 2.0 / (h_l * h_r) + values[i]
        rhs[i] = 0.0
        if left_in:
            lower[i - 1] = -c_l
        else:
            rhs[i] += c_l * c_b
        if right_in:
            upper[i] = -c_r
        else:
            rhs[i] += c_r * c_b
    return thomas_solve_arrays(lower, diag, upper, rhs)


def _vivo_1d(values, chi, dx, c_b, exchange):
    n = values.shape[0]
    inv2 = 1.0 / (dx * dx)
    lower = np.full(n - 1, -inv2)
    upper = np.full(n - 1, -inv2)
    diag = 2.0 * inv2 + values + exchange * chi
    # zero-Neumann: the missing neighbor coupling is dropped on each end
    diag[0] -= inv2
    diag[-1] -= inv2
    rhs = exchange * chi * c_b
    return thomas_solve_arrays(lower, diag, upper, rhs)


# ---------------------------------------------------------------------------
# 2D assemblies

_KRYLOV_2D = KrylovConfig(tol=1e-12, restart=30, max_iter=20000)


def _vitro_2d(values, mask, grid, c_b):
    nx, ny = grid.shape
    n = nx * ny
    idx = np.arange(n).reshape(nx, ny)
    rows, cols, vals = [], [], []
    rhs = np.full(n, c_b)
    offsets = ((-1, 0, grid.dx), (1, 0, grid.dx), (0, -1, grid.dy), (0, 1, grid.dy))
    for i, j in zip(*np.nonzero(mask)):
        k = idx[i, j]
        rhs[k] = 0.0
        diag = values[i, j]
        # one directional pair at a time so opposite sides share their h sum
        for (di, dj, h), (di2, dj2, _h2) in ((offsets[0], offsets[1]),
                                             (offsets[2], offsets[3])):
            ii, jj = i + di, j + dj
            i2, j2 = i + di2, j + dj2
            near = 0 <= ii < nx and 0 <= jj < ny and mask[ii, jj]
            far = 0 <= i2 < nx and 0 <= j2 < ny and mask[i2, j2]
            h_a = h if near else 0.5 * h
            h_b = h if far else 0.5 * h
            c_a = 2.0 / (h_a * (h_a + h_b))
            c_f = 2.0 / (h_b * (h_a + h_b))
            diag += 2.0 / (h_a * h_b)
            if near:
                rows.append(k); cols.append(idx[ii, jj]); vals.append(-c_a)
            else:
                rhs[k] += c_a * c_b
            if far:
                rows.append(k); cols.append(idx[i2, j2]); vals.append(-c_f)
            else:
                rhs[k] += c_f * c_b
        rows.append(k); cols.append(k); vals.append(diag)
    out_idx = idx[~mask].ravel()
    rows.extend(out_idx); cols.extend(out_idx); vals.extend(np.ones(out_idx.size))
    system = SparseSystem.from_coo(n, rows, cols, vals, rhs)
    return krylov_solve(system, _KRYLOV_2D).x.reshape(nx, ny)


def _vivo_2d(values, chi, grid, c_b, exchange):
    nx, ny = grid.shape
    n = nx * ny
    idx = np.arange(n).reshape(nx, ny)
    ivx = 1.0 / (grid.dx * grid.dx)
    ivy = 1.0 / (grid.dy * grid.dy)
    rows, cols, vals = [], [], []
    diag = values + exchange * chi
    for di, dj, w in ((-1, 0, ivx), (1, 0, ivx), (0, -1, ivy), (0, 1, ivy)):
        src_i = slice(max(0, -di), nx - max(0, di))
        src_j = slice(max(0, -dj), ny - max(0, dj))
        dst_i = slice(max(0, di), nx + min(0, di))
        dst_j = slice(max(0, dj), ny + min(0, dj))
        k_src = idx[src_i, src_j].ravel()
        k_dst = idx[dst_i, dst_j].ravel()
        rows.append(k_src); cols.append(k_dst)
        vals.append(np.full(k_src.size, -w))
        diag[src_i, src_j] += w  # Neumann: no coupling where no neighbor
    rows.append(idx.ravel()); cols.append(idx.ravel()); vals.append(diag.ravel())
    system = SparseSystem.from_coo(
        n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
        (exchange * chi * c_b).ravel(),
    )
    return krylov_solve(system, _KRYLOV_2D).x.reshape(nx, ny)
