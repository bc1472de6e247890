"""Stencil kernels with a compiled fast path and a numpy fallback.

The per-step kernels of the 1D transport machinery (minmod slopes, edge
reconstruction, Lax-Friedrichs fluxes, the positivity-form transport update
and the tridiagonal solve) exist twice: a Cython extension built at install
time and a pure numpy reference.  The extension is selected at import when
available; set ``FRONTCAP_NO_SPEEDUPS=1`` to force the numpy path.

``benchmarks/kernel_benchmark.py`` compares the two implementations.
"""

import os
from collections import namedtuple

import numpy as np

from frontcap import _kernels_np

if os.environ.get("FRONTCAP_NO_SPEEDUPS"):
    _impl = _kernels_np
else:
    try:
        from frontcap import _speedups as _impl
    except ImportError:
        _impl = _kernels_np

BACKEND = "compiled" if _impl is not _kernels_np else "numpy"

EdgeStates = namedtuple("EdgeStates", ["left", "right"])
EdgeStates.__doc__ = """Reconstructed states on the two sides of each face.

``left[f]`` comes from the cell left of face ``f``, ``right[f]`` from the
cell to its right; both arrays have one more entry than there are cells.
"""


def available_backends():
    """Name -> module map of kernel implementations importable right now."""
    backends = {"numpy": _kernels_np}
    try:
        from frontcap import _speedups
        backends["compiled"] = _speedups
    except ImportError:
        pass
    return backends


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def minmod_slopes(values, dx):
    """Minmod-limited slope per cell (boundary cells get zero).

    Candidates are the backward, central and forward difference quotients;
    the result is their minimum if all three are positive, their maximum if
    all are negative, zero otherwise.
    """
    if dx <= 0.0:
        raise ValueError("dx must be positive")
    return _impl.minmod_slopes(_c(values), float(dx))


def reconstruct(values, slopes, dx):
    """Second-order edge states at the faces from cell averages and slopes.

    With minmod slopes the edge states inherit nonnegativity from the cell
    averages.
    """
    values = _c(values)
    slopes = _c(slopes)
    if slopes.shape != values.shape:
        raise ValueError("slopes and values must have matching shapes")
    left, right = _impl.reconstruct(values, slopes, float(dx))
    return EdgeStates(left, right)


def llf_flux(left, right, u):
    """Local Lax-Friedrichs flux of rho*u per face (upwinds on sign of u)."""
    return _impl.llf_flux(_c(left), _c(right), _c(u))


def transport_update(left, right, u, lam, face_weights=None, cell_weights=None):
    """Cell averages after one explicit transport step, before growth.

    Computes rho_i - lam*(w F)_diff / wc_i as a nonnegative combination of
    the four surrounding edge states so that nonnegative edges can never
    produce a negative cell average under the transport CFL bound
    lam*|u| <= 1/2 (weight-scaled when metric weights are supplied).
    """
    if (face_weights is None) != (cell_weights is None):
        raise ValueError("face_weights and cell_weights must be given together")
    if face_weights is not None:
        face_weights = _c(face_weights)
        cell_weights = _c(cell_weights)
    return _impl.transport_update(
        _c(left), _c(right), _c(u), float(lam), face_weights, cell_weights
    )


def thomas_solve_arrays(lower, diag, upper, rhs):
    """Raw-array tridiagonal solve; see :func:`frontcap.linsolve.thomas_solve`."""
    return _impl.thomas_solve(_c(lower), _c(diag), _c(upper), _c(rhs))
