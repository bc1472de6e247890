"""Closed-form references the numerical schemes are tested against.

Three families:

* the Barenblatt self-similar solution of the porous medium equation,
  which the growth-free scheme must converge to;
* limit pressure profiles of the stiff (m -> infinity) free-boundary
  problem, in 1D slab and radial annulus geometry, with the front-speed
  ODEs they induce;
* a fixed-step classical RK4 integrator for those front ODEs.

The radial front rates share the quotient Q(r-, r+) = (r+^2 - r-^2) /
(4 ln(r+/r-)), which degenerates to 0/0 for near-equal radii; below a
relative gap of 1e-6 it is replaced by its series expansion
(r-^2/4)(2 + 2s + s^2/3), s = r+/r- - 1, accurate to O(s^4).
"""

from dataclasses import dataclass, field

import numpy as np

from frontcap.errors import ContractError

#: relative radius gap below which the annulus quotient switches to its series
SERIES_GAP = 1e-6

#: default fixed RK4 step for front ODE integration
RK4_STEP = 1e-4


# ---------------------------------------------------------------------------
# Barenblatt profile

def barenblatt(x, t, m, c):
    """Self-similar source solution of rho_t = (rho^m)_xx in one dimension.

    rho(x, t) = t^(-alpha) * max(C - k x^2 t^(-2 alpha), 0)^(1/(m-1)) with
    alpha = 1/(m+1) and k = alpha (m-1) / (2m).  Mass is conserved in time;
    the support edge moves as t^alpha.
    """
    if m <= 1.0:
        raise ContractError(f"Barenblatt profile needs m > 1, got m={m}")
    if t <= 0.0:
        raise ContractError(f"Barenblatt profile needs t > 0, got t={t}")
    x = np.asarray(x, dtype=np.float64)
    alpha = 1.0 / (m + 1.0)
    k = alpha * (m - 1.0) / (2.0 * m)
    ta = t ** (-alpha)
    core = c - k * np.square(x) * t ** (-2.0 * alpha)
    return ta * np.maximum(core, 0.0) ** (1.0 / (m - 1.0))


def barenblatt_support_radius(t, m, c):
    """Position of the (positive) support edge of the Barenblatt profile."""
    alpha = 1.0 / (m + 1.0)
    k = alpha * (m - 1.0) / (2.0 * m)
    return t ** alpha * np.sqrt(c / k)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _gl_integrate(lo, hi, t, m, c):
    """Gauss-Legendre integral of the profile over [lo, hi] (smooth inside)."""
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return half * float(np.dot(_GL_WEIGHTS,
                               barenblatt(mid + half * _GL_NODES, t, m, c)))


def barenblatt_cell_averages(faces, t, m, c):
    """Cell averages of the Barenblatt profile between consecutive faces.

    This is the proper finite-volume initial datum: for large m the
    profile is nearly vertical at the support edge, and a cell-center
    sample there carries an O(1) error that depends on how the edge
    happens to align with the grid.  Averages are computed by 12-point
    Gauss-Legendre quadrature per cell, splitting the cells that contain
    a support edge at the edge so every panel is smooth (the integrand is
    a power of a quadratic, analytic away from the edge).
    """
    faces = np.asarray(faces, dtype=np.float64)
    if faces.ndim != 1 or faces.shape[0] < 2:
        raise ContractError("faces must be a 1D array of at least two positions")
    widths = np.diff(faces)
    if np.any(widths <= 0.0):
        raise ContractError("faces must be strictly increasing")
    edge = barenblatt_support_radius(t, m, c)
    mids = 0.5 * (faces[:-1] + faces[1:])
    halves = 0.5 * widths
    nodes = mids[:, None] + halves[:, None] * _GL_NODES[None, :]
    averages = (barenblatt(nodes, t, m, c) @ _GL_WEIGHTS) * halves / widths
    for cut in (-edge, edge):
        (affected,) = np.nonzero((faces[:-1] < cut) & (cut < faces[1:]))
        for i in affected:
            averages[i] = (_gl_integrate(faces[i], cut, t, m, c)
                           + _gl_integrate(cut, faces[i + 1], t, m, c)) / widths[i]
    return averages


# ---------------------------------------------------------------------------
# front ODEs: 1D slab geometry

def front_speed_1d(model, r):
    """Front speed dR/dt of the stiff-limit slab problem.

    In vitro (Dirichlet exterior nutrient): tanh(R).  In vivo (exchange
    exterior): sinh(R)/e^R, evaluated in the overflow-safe form
    (1 - e^(-2R))/2.
    """
    r = np.asarray(r, dtype=np.float64)
    if model == "vitro":
        return np.tanh(r)
    if model == "vivo":
        return 0.5 * (1.0 - np.exp(-2.0 * r))
    raise ContractError(f"unknown nutrient model {model!r}")


def front_ode_1d(model, r0, t_end, h=RK4_STEP):
    """Integrate the slab front ODE from R(0)=r0 to t_end with fixed-step RK4.

    Returns (times, radii) arrays covering every step taken.
    """
    if r0 <= 0:
        raise ContractError(f"front radius must be positive, got {r0}")
    return _rk4(lambda _t, r: front_speed_1d(model, r), np.array([r0]), t_end, h)


def front_radius_1d(model, r0, t, h=RK4_STEP):
    """Slab front radius at a single time."""
    times, radii = front_ode_1d(model, r0, t, h)
    return float(radii[-1, 0])


def pressure_1d(model, x, r):
    """Limit pressure of the slab problem with front at +-r.

    vitro: 1 - cosh(x)/cosh(R); vivo: (cosh(R) - cosh(x))/e^R.  Both vanish
    at |x| = R and are extended by zero outside; the vivo form uses
    e^(x-R)-type exponentials so large R cannot overflow.
    """
    x = np.asarray(x, dtype=np.float64)
    inside = np.abs(x) <= r
    if model == "vitro":
        p = 1.0 - np.cosh(np.where(inside, x, 0.0)) / np.cosh(r)
    elif model == "vivo":
        xs = np.where(inside, x, 0.0)
        cosh_r = 0.5 * (1.0 + np.exp(-2.0 * r))
        cosh_x = 0.5 * (np.exp(xs - r) + np.exp(-xs - r))
        p = cosh_r - cosh_x
    else:
        raise ContractError(f"unknown nutrient model {model!r}")
    return np.where(inside, p, 0.0)


# ---------------------------------------------------------------------------
# front ODEs: radial annulus geometry

def annulus_quotient(r_in, r_out):
    """Q = (r_out^2 - r_in^2) / (4 ln(r_out / r_in)), series-guarded.

    The direct form is evaluated through the factored difference and log1p
    so nearby radii lose no precision; below a relative gap of SERIES_GAP
    the series (r_in^2/4)(2 + 2s + s^2/3) takes over (the two agree to
    O(s^4) there).  As r_out -> r_in the quotient tends to r_in^2/2.
    """
    if r_in <= 0 or r_out <= r_in:
        raise ContractError(
            f"annulus radii must satisfy 0 < r_in < r_out, got ({r_in}, {r_out})"
        )
    s = (r_out - r_in) / r_in
    if s < SERIES_GAP:
        return 0.25 * r_in * r_in * (2.0 + 2.0 * s + s * s / 3.0)
    return (r_out - r_in) * (r_out + r_in) / (4.0 * np.log1p(s))


def annulus_rates(r_in, r_out):
    """Front speeds (dr_in/dt, dr_out/dt) of a stiff-limit annulus.

    Both fronts move with r/2 - Q/r where Q is the shared annulus quotient;
    the inner front typically recedes (the ring fills inward) while the
    outer one expands.
    """
    q = annulus_quotient(r_in, r_out)
    return r_in / 2.0 - q / r_in, r_out / 2.0 - q / r_out


@dataclass
class RadialFrontResult:
    """Trajectory of annulus fronts; ``merged`` marks early termination.

    ``radii`` has one row per recorded time and one column per front.  When
    adjacent fronts approach within 10 integration steps of each other (or
    the innermost approaches the origin), integration stops and ``merged``
    is set; the trajectory is valid up to its last row.
    """

    times: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    merged: bool = False

    def at(self, t):
        """Radii at time t by linear interpolation of the trajectory."""
        if t > self.times[-1] + 1e-12:
            raise ContractError(
                f"trajectory ends at t={self.times[-1]:.6g} (merged={self.merged}), "
                f"cannot evaluate at t={t:.6g}"
            )
        return np.array([
            np.interp(t, self.times, self.radii[:, k])
            for k in range(self.radii.shape[1])
        ])


def front_ode_radial(radii0, t_end, h=RK4_STEP):
    """Integrate annulus front ODEs (one or two disjoint annuli).

    ``radii0`` holds 2 or 4 increasing radii; consecutive pairs form
    annuli that evolve independently until fronts come within 10*h of each
    other, where integration stops with the merged flag set.
    """
    r = np.asarray(radii0, dtype=np.float64)
    if r.shape[0] not in (2, 4) or np.any(np.diff(r) <= 0) or r[0] <= 0:
        raise ContractError(
            f"need 2 or 4 strictly increasing positive radii, got {radii0}"
        )

    def rates(_t, y):
        out = np.empty_like(y)
        for k in range(0, y.shape[0], 2):
            out[k], out[k + 1] = annulus_rates(y[k], y[k + 1])
        return out

    gap_min = 10.0 * h

    def keep_going(y):
        return y[0] > gap_min and np.all(np.diff(y) > gap_min)

    def accept(y):
        return y[0] > 0.0 and bool(np.all(np.diff(y) > 0.0))

    times, radii = _rk4(rates, r, t_end, h, keep_going, accept)
    merged = times[-1] < t_end - 0.5 * h
    return RadialFrontResult(times, radii, merged)


def pressure_radial(r, radii):
    """Limit pressure of one or two annuli with fronts at ``radii``.

    On each annulus [r-, r+] the pressure is -r^2/4 + A ln r + B with
    A = Q(r-, r+) and B = r-^2/4 - A ln r-, which solves -(1/r)(r p')' = 1
    and vanishes at both fronts; outside every annulus the pressure is 0.
    """
    radii = np.asarray(radii, dtype=np.float64)
    if radii.shape[0] not in (2, 4):
        raise ContractError("radii must hold 2 or 4 entries")
    r = np.asarray(r, dtype=np.float64)
    p = np.zeros_like(r, dtype=np.float64)
    for k in range(0, radii.shape[0], 2):
        r_in, r_out = radii[k], radii[k + 1]
        a = annulus_quotient(r_in, r_out)
        b = 0.25 * r_in * r_in - a * np.log(r_in)
        inside = (r >= r_in) & (r <= r_out)
        rr = np.where(inside, r, r_in)
        p = np.where(inside, -0.25 * rr * rr + a * np.log(rr) + b, p)
    return p


# ---------------------------------------------------------------------------
# fixed-step RK4

def _rk4(f, y0, t_end, h, keep_going=None, accept=None):
    """Classical RK4 with fixed step h and an exact final partial step.

    Records every accepted step.  ``keep_going(y)`` may veto further
    stepping (the annulus merge guard) and ``accept(y)`` may reject a
    completed step, truncating the trajectory before it.  A stage
    evaluation raising ContractError (the rates left their domain, e.g. a
    front shot through the origin) likewise truncates at the last
    completed step -- near a collapse the front speed is unbounded, so no
    pre-step guard alone can be sufficient.
    """
    if t_end < 0 or h <= 0:
        raise ContractError("need t_end >= 0 and h > 0")
    n_full = int(np.floor(t_end / h + 1e-12))
    rem = t_end - n_full * h
    times = [0.0]
    states = [np.array(y0, dtype=np.float64)]
    y = states[0]
    t = 0.0
    for k in range(n_full + 1):
        step = h if k < n_full else rem
        if step <= 1e-15 * max(1.0, t_end):
            break
        if keep_going is not None and not keep_going(y):
            break
        try:
            k1 = f(t, y)
            k2 = f(t + 0.5 * step, y + 0.5 * step * k1)
            k3 = f(t + 0.5 * step, y + 0.5 * step * k2)
            k4 = f(t + step, y + step * k3)
        except ContractError:
            break
        y_new = y + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if accept is not None and not accept(y_new):
            break
        y = y_new
        t = t + step if k < n_full else t_end
        times.append(t)
        states.append(y)
    return np.array(times), np.array(states)
