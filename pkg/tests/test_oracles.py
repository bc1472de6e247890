"""Closed-form reference solutions and the front ODE integrators.

The frozen constants below were computed independently of the library:
closed-form antiderivatives for the Barenblatt masses, the exact solutions
sinh(R) = sinh(R0) e^t and e^{2R} = 1 + (e^{2R0}-1) e^t of the two slab
front ODEs, and direct evaluation of the pressure/quotient formulas.
"""

import numpy as np
import pytest

from frontcap import oracles
from frontcap.errors import ContractError, OracleUnavailableError


# ---------------------------------------------------------------------------
# Barenblatt profile


def test_barenblatt_peak_value_m3():
    # t^(-1/4) * C^(1/2) at the origin
    rho = oracles.barenblatt(np.array([0.0]), 0.01, 3.0, 1.0)
    assert rho[0] == pytest.approx(3.1622776601683795, rel=1e-14)


def test_barenblatt_m2_is_parabolic():
    # m=2: rho = t^(-1/3) (C - x^2 t^(-2/3) / 12)_+, a truncated parabola
    x = np.linspace(-3.0, 3.0, 13)
    t = 1.0
    expected = np.maximum(1.0 - x * x / 12.0, 0.0)
    np.testing.assert_allclose(oracles.barenblatt(x, t, 2.0, 1.0), expected,
                               rtol=1e-14)


@pytest.mark.parametrize("m,c,exact_mass,quad_tol", [
    # int (C - k y^2) dy = (4/3) C^(3/2) k^(-1/2), k = 1/12  ->  8/sqrt(3)
    (2.0, 1.0, 4.618802153517007, 1e-8),
    # int sqrt(C - k y^2) dy = (pi/2) C k^(-1/2), k = 1/12; the sqrt edge
    # limits trapezoid accuracy to O(h^(3/2)) locally
    (3.0, 1.0, 5.441398092702654, 5e-6),
])
def test_barenblatt_mass_conserved_and_exact(m, c, exact_mass, quad_tol):
    x = np.linspace(-8.0, 8.0, 160001)
    for t in (0.01, 0.5, 2.0):
        mass = np.trapezoid(oracles.barenblatt(x, t, m, c), x)
        assert mass == pytest.approx(exact_mass, abs=quad_tol)


def test_barenblatt_support_radius_cutoff():
    m, c, t = 3.0, 0.1, 0.37
    edge = oracles.barenblatt_support_radius(t, m, c)
    outside = oracles.barenblatt(np.array([edge * 1.0000001, -2.0 * edge]), t, m, c)
    np.testing.assert_array_equal(outside, 0.0)
    inside = oracles.barenblatt(np.array([0.9999 * edge, 0.0]), t, m, c)
    assert np.all(inside > 0.0)


def test_barenblatt_rejects_bad_m():
    with pytest.raises(ContractError):
        oracles.barenblatt(np.zeros(3), 1.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# slab front ODEs


def test_front_speed_values():
    assert oracles.front_speed_1d("vitro", 1.0) == pytest.approx(
        0.7615941559557649, rel=1e-14)
    assert oracles.front_speed_1d("vivo", 1.0) == pytest.approx(
        0.43233235838169365, rel=1e-14)
    # overflow-safe far field: both speeds saturate, vivo at exactly 1/2
    assert oracles.front_speed_1d("vivo", 500.0) == 0.5
    assert oracles.front_speed_1d("vitro", 500.0) == 1.0


def test_front_ode_vitro_matches_exact_solution():
    # separable: sinh(R(t)) = sinh(R0) e^t
    for t in (0.25, 1.0, 1.8737):
        exact = float(np.arcsinh(np.sinh(1.0) * np.exp(t)))
        assert oracles.front_radius_1d("vitro", 1.0, t) == pytest.approx(
            exact, abs=1e-10)
    assert oracles.front_radius_1d("vitro", 1.0, 1.0) == pytest.approx(
        1.8782301658116511, abs=1e-10)


def test_front_ode_vivo_matches_exact_solution():
    # substitution z = e^{2R}: z' = z - 1, so z(t) = 1 + (e^{2 R0} - 1) e^t
    for t in (0.1, 1.0, 2.0):
        exact = 0.5 * np.log(1.0 + (np.exp(2.0) - 1.0) * np.exp(t))
        assert oracles.front_radius_1d("vivo", 1.0, t) == pytest.approx(
            exact, abs=1e-10)
    assert oracles.front_radius_1d("vivo", 1.0, 1.0) == pytest.approx(
        1.455284732401537, abs=1e-10)


def test_front_ode_step_halving():
    coarse = oracles.front_radius_1d("vitro", 0.7, 0.62, h=2e-4)
    fine = oracles.front_radius_1d("vitro", 0.7, 0.62, h=1e-4)
    assert abs(coarse - fine) < 1e-10


def test_front_ode_records_exact_final_time():
    times, radii = oracles.front_ode_1d("vitro", 1.0, 0.12345)
    assert times[0] == 0.0
    assert times[-1] == 0.12345
    assert radii.shape == (times.shape[0], 1)
    assert np.all(np.diff(radii[:, 0]) > 0.0)  # vitro front always expands


def test_front_ode_rejects_bad_radius():
    with pytest.raises(ContractError):
        oracles.front_ode_1d("vitro", 0.0, 1.0)


# ---------------------------------------------------------------------------
# slab pressure profiles


def test_pressure_vitro_profile():
    x = np.array([0.0, 0.5, 1.0, 1.5, -1.0])
    p = oracles.pressure_1d("vitro", x, 1.0)
    assert p[0] == pytest.approx(0.35194572633611454, rel=1e-14)
    assert p[1] == pytest.approx(1.0 - np.cosh(0.5) / np.cosh(1.0), rel=1e-14)
    assert p[2] == 0.0 and p[4] == 0.0  # vanishes at the fronts
    assert p[3] == 0.0                  # zero outside the support


def test_pressure_vivo_profile():
    p = oracles.pressure_1d("vivo", np.array([0.0]), 1.0)
    assert p[0] == pytest.approx(0.19978820044686402, rel=1e-13)
    # large front radius: no overflow, interior value tends to 1/2
    p_far = oracles.pressure_1d("vivo", np.array([0.0]), 600.0)
    assert np.isfinite(p_far[0])
    assert p_far[0] == pytest.approx(0.5, abs=1e-12)


def test_pressure_solves_stiff_limit_equation():
    # -p'' = 1 inside the support for vitro pressure with G = 1 - p:
    # p = 1 - cosh/cosh(R) gives -p'' = cosh(x)/cosh(R) = 1 - p = G(c)
    x = np.linspace(-0.9, 0.9, 181)
    h = x[1] - x[0]
    p = oracles.pressure_1d("vitro", x, 1.0)
    lap = (p[:-2] - 2.0 * p[1:-1] + p[2:]) / (h * h)
    np.testing.assert_allclose(-lap, 1.0 - p[1:-1], atol=5e-5)


# ---------------------------------------------------------------------------
# annulus quotient and rates


def test_annulus_quotient_value():
    assert oracles.annulus_quotient(0.6, 1.0) == pytest.approx(
        0.3132184302353948, rel=1e-14)


def test_annulus_quotient_series_agrees_with_direct_form():
    # near the switch the naive formula still carries ~eps/s ~ 1e-10
    # relative accuracy, enough to validate the series branch against
    r = 0.8
    for s in (0.999e-6, 0.5e-6):
        r_out = r * (1.0 + s)
        naive = (r_out ** 2 - r ** 2) / (4.0 * np.log(r_out / r))
        assert oracles.annulus_quotient(r, r_out) == pytest.approx(naive,
                                                                   rel=1e-9)
        assert oracles.annulus_quotient(r, r_out) == pytest.approx(
            r * r / 2.0, rel=1e-5)


def test_annulus_quotient_monotone_across_series_switch():
    # dQ/ds ~ r^2/2 > 0: a precision cliff at the branch switch would show
    # up as a monotonicity break in a fine sweep of the gap
    r = 0.8
    gaps = np.logspace(-9.0, -4.0, 201)
    q = np.array([oracles.annulus_quotient(r, r * (1.0 + s)) for s in gaps])
    assert np.all(np.diff(q) > 0.0)


def test_annulus_quotient_narrow_limit():
    # Q -> r^2/2 as the annulus thins
    assert oracles.annulus_quotient(0.5, 0.5 * (1.0 + 1e-9)) == pytest.approx(
        0.125, rel=1e-8)


def test_annulus_rates_signs_and_values():
    inner, outer = oracles.annulus_rates(0.6, 1.0)
    assert inner == pytest.approx(-0.2220307170589914, rel=1e-13)
    assert outer == pytest.approx(0.1867815697646052, rel=1e-13)
    assert inner < 0.0 < outer  # ring fills inward while expanding outward


def test_annulus_quotient_validation():
    with pytest.raises(ContractError):
        oracles.annulus_quotient(1.0, 0.5)
    with pytest.raises(ContractError):
        oracles.annulus_quotient(0.0, 1.0)


# ---------------------------------------------------------------------------
# radial front trajectories


def test_radial_area_grows_exponentially():
    # d/dt (r_out^2 - r_in^2) = (r_out^2 - r_in^2) exactly, for any annulus:
    # the quotient terms cancel, so the area obeys A(t) = A(0) e^t
    result = oracles.front_ode_radial([0.6, 1.0], 0.5)
    assert not result.merged
    for t in (0.1, 0.3, 0.5):
        r_in, r_out = result.at(t)
        area = r_out ** 2 - r_in ** 2
        assert area == pytest.approx(0.64 * np.exp(t), rel=1e-9)


def test_radial_double_annulus_independent_areas():
    result = oracles.front_ode_radial([0.6, 0.9, 1.5, 1.8], 0.5)
    assert not result.merged
    r = result.at(0.5)
    assert r.shape == (4,)
    assert (r[1] ** 2 - r[0] ** 2) == pytest.approx(
        (0.81 - 0.36) * np.exp(0.5), rel=1e-9)
    assert (r[3] ** 2 - r[2] ** 2) == pytest.approx(
        (3.24 - 2.25) * np.exp(0.5), rel=1e-9)
    assert np.all(np.diff(r) > 0.0)  # fronts stay ordered pre-merge


def test_radial_step_halving():
    fine = oracles.front_ode_radial([0.6, 1.0], 0.5, h=5e-5).at(0.5)
    coarse = oracles.front_ode_radial([0.6, 1.0], 0.5, h=1e-4).at(0.5)
    np.testing.assert_allclose(coarse, fine, atol=1e-10)


def test_radial_merge_flag_and_truncation():
    # gap 0.02 between annuli closes quickly: outer front of the first ring
    # moves out while the inner front of the second moves in
    result = oracles.front_ode_radial([0.6, 0.9, 0.92, 1.5], 1.0)
    assert result.merged
    assert result.times[-1] < 1.0
    result.at(result.times[-1])  # last recorded time still valid
    with pytest.raises(ContractError):
        result.at(result.times[-1] + 0.01)


def test_radial_origin_collapse_sets_merged():
    # strongly receding inner front reaches the origin guard
    result = oracles.front_ode_radial([0.05, 1.0], 1.0)
    assert result.merged
    assert result.times[-1] < 1.0


def test_radial_validation():
    with pytest.raises(ContractError):
        oracles.front_ode_radial([1.0, 0.5], 1.0)       # not increasing
    with pytest.raises(ContractError):
        oracles.front_ode_radial([0.5, 1.0, 1.5], 1.0)  # odd count


# ---------------------------------------------------------------------------
# radial pressure


def test_pressure_radial_vanishes_at_fronts():
    radii = np.array([0.6, 1.0])
    p = oracles.pressure_radial(radii, radii)
    np.testing.assert_allclose(p, 0.0, atol=1e-15)


def test_pressure_radial_positive_inside_zero_outside():
    r = np.linspace(0.0, 2.0, 401)
    p = oracles.pressure_radial(r, [0.6, 1.0])
    inside = (r > 0.6) & (r < 1.0)
    outside = (r < 0.595) | (r > 1.005)
    assert np.all(p[inside] > 0.0)
    np.testing.assert_array_equal(p[outside], 0.0)


def test_pressure_radial_solves_source_equation():
    # -(1/r)(r p')' = 1 on the annulus, checked by finite differences
    r = np.linspace(0.65, 0.95, 601)
    h = r[1] - r[0]
    p = oracles.pressure_radial(r, [0.6, 1.0])
    dp = (p[2:] - p[:-2]) / (2.0 * h)
    d2p = (p[:-2] - 2.0 * p[1:-1] + p[2:]) / (h * h)
    residual = -(d2p + dp / r[1:-1])
    np.testing.assert_allclose(residual, 1.0, atol=1e-6)


def test_pressure_radial_double_annulus_piecewise():
    radii = [0.6, 0.9, 1.5, 1.8]
    r = np.array([0.75, 1.2, 1.65])
    p = oracles.pressure_radial(r, radii)
    assert p[0] > 0.0    # inside first ring
    assert p[1] == 0.0   # in the gap
    assert p[2] > 0.0    # inside second ring
    # each ring carries its own quotient: compare against the scalar formula
    q1 = oracles.annulus_quotient(0.6, 0.9)
    b1 = 0.36 / 4.0 - q1 * np.log(0.6)
    assert p[0] == pytest.approx(-0.75 ** 2 / 4.0 + q1 * np.log(0.75) + b1,
                                 rel=1e-13)


def test_oracle_unavailable_error_is_raisable():
    # the dedicated error type for configs without a closed form
    with pytest.raises(OracleUnavailableError):
        raise OracleUnavailableError("no closed form here")
