"""Compiled stencil kernels: the hot per-step loops of the 1D schemes.

Mirrors :mod:`frontcap._kernels_np` function for function.  The formulas
must stay in sync with the numpy reference; the test suite cross-checks the
two backends on random data.
"""

import numpy as np

cimport cython
cimport numpy as cnp

from frontcap.errors import SingularSystemError

cnp.import_array()


@cython.boundscheck(False)
@cython.wraparound(False)
def minmod_slopes(double[::1] values, double dx):
    """Limited slope per cell; see the numpy reference for the definition."""
    cdef Py_ssize_t n = values.shape[0]
    out = np.zeros(n)
    cdef double[::1] s = out
    cdef Py_ssize_t i
    cdef double bwd, fwd, ctr, m
    if n < 3:
        return out
    for i in range(1, n - 1):
        bwd = (values[i] - values[i - 1]) / dx
        fwd = (values[i + 1] - values[i]) / dx
        ctr = (values[i + 1] - values[i - 1]) / (2.0 * dx)
        if bwd > 0.0 and ctr > 0.0 and fwd > 0.0:
            m = bwd
            if ctr < m:
                m = ctr
            if fwd < m:
                m = fwd
            s[i] = m
        elif bwd < 0.0 and ctr < 0.0 and fwd < 0.0:
            m = bwd
            if ctr > m:
                m = ctr
            if fwd > m:
                m = fwd
            s[i] = m
    return out


@cython.boundscheck(False)
@cython.wraparound(False)
def reconstruct(double[::1] values, double[::1] slopes, double dx):
    """Left/right edge states at the n+1 faces."""
    cdef Py_ssize_t n = values.shape[0]
    cdef double half = 0.5 * dx
    left_arr = np.empty(n + 1)
    right_arr = np.empty(n + 1)
    cdef double[::1] left = left_arr
    cdef double[::1] right = right_arr
    cdef Py_ssize_t i
    left[0] = values[0]
    right[n] = values[n - 1]
    for i in range(n):
        left[i + 1] = values[i] + half * slopes[i]
        right[i] = values[i] - half * slopes[i]
    return left_arr, right_arr


@cython.boundscheck(False)
@cython.wraparound(False)
def llf_flux(double[::1] left, double[::1] right, double[::1] u):
    """Local Lax-Friedrichs flux per face."""
    cdef Py_ssize_t n = u.shape[0]
    out = np.empty(n)
    cdef double[::1] f = out
    cdef Py_ssize_t i
    cdef double au
    for i in range(n):
        au = u[i] if u[i] >= 0.0 else -u[i]
        f[i] = 0.5 * ((left[i] + right[i]) * u[i] - au * (right[i] - left[i]))
    return out


@cython.boundscheck(False)
@cython.wraparound(False)
def transport_update(double[::1] left, double[::1] right, double[::1] u,
                     double lam, face_weights=None, cell_weights=None):
    """Nonnegative-combination transport update; see the numpy reference."""
    cdef Py_ssize_t n = left.shape[0] - 1
    out = np.empty(n)
    cdef double[::1] res = out
    cdef double[::1] wf
    cdef double[::1] wc
    cdef bint weighted = face_weights is not None
    cdef Py_ssize_t i
    cdef double au_l, au_r, upl_l, upl_r, umn_l, umn_r, lam_l, lam_r
    if weighted:
        wf = face_weights
        wc = cell_weights
    for i in range(n):
        au_l = u[i] if u[i] >= 0.0 else -u[i]
        au_r = u[i + 1] if u[i + 1] >= 0.0 else -u[i + 1]
        upl_l = 0.5 * (u[i] + au_l)
        umn_l = 0.5 * (au_l - u[i])
        upl_r = 0.5 * (u[i + 1] + au_r)
        umn_r = 0.5 * (au_r - u[i + 1])
        if weighted:
            lam_l = lam * wf[i] / wc[i]
            lam_r = lam * wf[i + 1] / wc[i]
        else:
            lam_l = lam
            lam_r = lam
        res[i] = ((0.5 - lam_r * upl_r) * left[i + 1]
                  + (lam_r * umn_r) * right[i + 1]
                  + (lam_l * upl_l) * left[i]
                  + (0.5 - lam_l * umn_l) * right[i])
    return out


@cython.boundscheck(False)
@cython.wraparound(False)
def thomas_solve(double[::1] lower, double[::1] diag, double[::1] upper,
                 double[::1] rhs):
    """Tridiagonal elimination without pivoting; inputs unmodified.

    Raises SingularSystemError naming the row where a zero pivot appears.
    """
    cdef Py_ssize_t n = diag.shape[0]
    x_arr = np.empty(n)
    cdef double[::1] x = x_arr
    work_arr = np.empty(n)
    cdef double[::1] cp = work_arr
    cdef Py_ssize_t i
    cdef double piv = diag[0]
    if piv == 0.0:
        raise SingularSystemError(0)
    cp[0] = 0.0
    x[0] = rhs[0] / piv
    for i in range(1, n):
        cp[i] = upper[i - 1] / piv
        piv = diag[i] - lower[i - 1] * cp[i]
        if piv == 0.0:
            raise SingularSystemError(i)
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i + 1] * x[i + 1]
    return x_arr
