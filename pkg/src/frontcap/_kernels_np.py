"""Pure numpy implementations of the hot stencil kernels.

These are the reference implementations of the per-step kernels: minmod
slope limiting, second-order edge reconstruction, local Lax-Friedrichs
fluxes, the positivity-preserving transport update and the tridiagonal
solve.  A Cython translation of the same formulas lives in
``_speedups.pyx``; either module can back :mod:`frontcap.kernels`.

All functions take C-contiguous float64 arrays and never modify their
inputs.
"""

import numpy as np
from scipy.linalg import solve_banded

from frontcap.errors import SingularSystemError


def minmod_slopes(values, dx):
    """Limited slope per cell: minmod of backward/central/forward quotients.

    The three candidates for cell i are (v[i]-v[i-1])/dx, (v[i+1]-v[i-1])/(2dx)
    and (v[i+1]-v[i])/dx.  The slope is their minimum if all are positive,
    their maximum if all are negative, and zero otherwise.  Boundary cells get
    zero slope.
    """
    n = values.shape[0]
    slopes = np.zeros(n)
    if n < 3:
        return slopes
    bwd = (values[1:-1] - values[:-2]) / dx
    fwd = (values[2:] - values[1:-1]) / dx
    ctr = (values[2:] - values[:-2]) / (2.0 * dx)
    pos = (bwd > 0.0) & (ctr > 0.0) & (fwd > 0.0)
    neg = (bwd < 0.0) & (ctr < 0.0) & (fwd < 0.0)
    smallest = np.minimum(np.minimum(bwd, ctr), fwd)
    largest = np.maximum(np.maximum(bwd, ctr), fwd)
    slopes[1:-1] = np.where(pos, smallest, np.where(neg, largest, 0.0))
    return slopes


def reconstruct(values, slopes, dx):
    """Left/right edge states at the n+1 faces from cell averages and slopes.

    ``left[f]`` is the state reconstructed from the cell left of face f,
    ``right[f]`` from the cell to its right.  The outermost entries have no
    neighbor on one side and copy the adjacent cell average; they sit on
    zero-velocity faces so they never enter a flux.
    """
    n = values.shape[0]
    half = 0.5 * dx
    left = np.empty(n + 1)
    right = np.empty(n + 1)
    left[1:] = values + half * slopes
    left[0] = values[0]
    right[:-1] = values - half * slopes
    right[n] = values[n - 1]
    return left, right


def llf_flux(left, right, u):
    """Local Lax-Friedrichs flux per face for the transport term rho*u.

    F = ((left + right) * u - |u| * (right - left)) / 2, which upwinds on the
    sign of u.
    """
    return 0.5 * ((left + right) * u - np.abs(u) * (right - left))


def transport_update(left, right, u, lam, face_weights=None, cell_weights=None):
    """One explicit transport update written as a nonnegative combination.

    Returns, per cell, rho_i - lam * (w_{f+1} F_{f+1} - w_f F_f) / wc_i with
    lam = dt/dx, assembled directly in the form

        (1/2 - c1) * left[f+1] + c2 * right[f+1]
      + c3 * left[f] + (1/2 - c4) * right[f]

    whose coefficients are nonnegative under the transport CFL condition
    lam * |u| <= 1/2 (scaled by the weight ratio when weights are given).
    Evaluating this form keeps cell averages exactly nonnegative in floating
    point whenever the edge states are nonnegative.

    ``face_weights``/``cell_weights`` carry metric factors (the radius for
    cylindrical geometry); both default to one.
    """
    uplus = 0.5 * (u + np.abs(u))
    uminus = 0.5 * (np.abs(u) - u)
    lamf = np.full(u.shape[0], lam) if face_weights is None else lam * face_weights
    if cell_weights is not None:
        lam_r = lamf[1:] / cell_weights
        lam_l = lamf[:-1] / cell_weights
    else:
        lam_r = lamf[1:]
        lam_l = lamf[:-1]
    return (
        (0.5 - lam_r * uplus[1:]) * left[1:]
        + (lam_r * uminus[1:]) * right[1:]
        + (lam_l * uplus[:-1]) * left[:-1]
        + (0.5 - lam_l * uminus[:-1]) * right[:-1]
    )


def thomas_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system; inputs are left unmodified.

    ``lower``/``upper`` hold the n-1 off-diagonal entries, ``lower[i]``
    multiplying x[i] in row i+1.  Delegates to LAPACK's banded solver; an
    exactly singular system raises :class:`SingularSystemError` naming the
    pivot row where plain elimination breaks down.
    """
    n = diag.shape[0]
    if n == 1:
        if diag[0] == 0.0:
            raise SingularSystemError(0)
        return np.array([rhs[0] / diag[0]])
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    try:
        return solve_banded((1, 1), ab, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        raise SingularSystemError(_zero_pivot_row(lower, diag, upper)) from None


def _zero_pivot_row(lower, diag, upper):
    """Locate the first zero pivot of unpivoted Gaussian elimination."""
    n = diag.shape[0]
    piv = diag[0]
    for i in range(n - 1):
        if piv == 0.0:
            return i
        piv = diag[i + 1] - lower[i] * upper[i] / piv
    return n - 1
