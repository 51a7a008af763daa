import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import RHO
from lorentz_cg import elliptic as ell, wdata as w
from lorentz_cg.errors import AtEnd, BranchLost, DomainError

ZS = [0.7 + 0.4j, 1.3 + 2.2j, 3.1 + 0.9j, 2.0 + 4.1j, 4.4 + 3.3j]


def curve_points(lam, zs=ZS):
    p = ell.periods(lam)
    return [ell.x_of_z(lam, p, z) for z in zs]


def random_case1(seed):
    rng = np.random.default_rng(seed)
    c = lambda s: complex(*(s * rng.normal(size=2)))
    return w.Case1Params(RHO + c(0.1), c(0.1), -RHO + c(0.1), c(0.1), c(0.03), -1 + c(0.1))


# rho ------------------------------------------------------------------------

def test_rho_two_derivations():
    g, p = w.cg_rho()
    assert abs(g - RHO) <= 1e-15
    assert abs(g - 0.8279) <= 5e-4
    assert abs(g - p) <= 1e-6


def test_rho_frozen_value_from_scipy_gamma():
    from scipy.special import gamma
    assert abs(RHO - math.sqrt(6) * gamma(0.75) / gamma(0.25)) <= 1e-15


def test_square_torus_obstruction():
    lhs, rhs = w.case2_square_obstruction()
    assert abs(lhs - RHO ** 4) <= 1e-12
    assert abs(lhs - 0.4699) < 1e-3
    assert rhs == 0.75 and abs(lhs - rhs) > 0.25


def test_phi1_omega1_ratio():
    p = ell.periods(-1)
    assert abs(abs(p.phi1 / p.omega1) - 2 * RHO ** 2 / 3) <= 1e-8


# sphere -----------------------------------------------------------------------

def test_sphere_point_rules():
    with pytest.raises(DomainError):
        w.SpherePoint(0, 0)
    assert w.SpherePoint.infinity().is_infinity
    assert w.SpherePoint.infinity().value is None
    assert w.SpherePoint.of(2 + 1j).conj().value == 2 - 1j


def test_sphere_distance_antipodal_and_equal():
    assert abs(w.sphere_distance(1, 0, 0, 1) - math.pi / 2) <= 1e-15
    z = 0.3 - 2j
    assert abs(w.sphere_distance(z, 1, -1, z.conjugate()) - math.pi / 2) <= 1e-15
    assert w.sphere_distance(z, 1, 2 * z, 2) <= 1e-15


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(max_magnitude=1e3), st.complex_numbers(max_magnitude=1e3))
def test_sphere_distance_is_projective_and_symmetric(a, b):
    d1 = w.sphere_distance(a, 1, b, 1)
    assert abs(d1 - w.sphere_distance(b, 1, a, 1)) <= 1e-12
    assert abs(d1 - w.sphere_distance(3j * a, 3j, b, 1)) <= 1e-12
    assert 0 <= d1 <= math.pi / 2 + 1e-15


# parameters -------------------------------------------------------------------

def test_x0_branch_at_origin():
    assert w.x0_implicit(-1, 0) == 0


def test_x0_small_y0_against_cubic_roots():
    eps = 1e-3
    x0 = w.x0_implicit(-1, eps)
    roots = np.roots([1, 0, -1, -eps * eps])      # x (x-1)(x+1) = eps^2
    assert abs(x0 - roots[np.argmin(np.abs(roots))]) <= 1e-15
    assert abs(x0 + eps * eps) <= 1e-11


def test_x0_partials_vanish_at_base():
    dl, dy = w.x0_partials(-1, 0, 0)
    assert dl == 0 and dy == 0
    h = 1e-5
    fd_l = (w.x0_implicit(-1 + h, 0) - w.x0_implicit(-1 - h, 0)) / (2 * h)
    fd_y = (w.x0_implicit(-1, h) - w.x0_implicit(-1, -h)) / (2 * h)
    assert abs(fd_l) <= 1e-8 and abs(fd_y) <= 1e-8


def test_x0_partials_against_finite_differences():
    lam, y0 = -1 + 0.1j, 0.2 + 0.1j
    x0 = w.x0_implicit(lam, y0)
    dl, dy = w.x0_partials(lam, y0, x0)
    h = 1e-6
    assert abs((w.x0_implicit(lam + h, y0) - w.x0_implicit(lam - h, y0)) / (2 * h) - dl) <= 1e-8
    assert abs((w.x0_implicit(lam, y0 + h) - w.x0_implicit(lam, y0 - h)) / (2 * h) - dy) <= 1e-8


def test_x0_branch_lost_for_large_y0():
    with pytest.raises(BranchLost):
        w.x0_implicit(-1, 3.0)


def test_case_params_validation():
    with pytest.raises(DomainError):
        w.Case1Params(0, 0, -1, 0, 0, -1)
    with pytest.raises(DomainError):
        w.Case1Params(1, 0, -1, 0, 0.5, -1, x0=0.0)
    with pytest.raises(DomainError):
        w.Case2Params(2.0, 1, 0, 0, -1)


def test_ab_coefficients_at_vstar():
    ab = w.coeffs_AB(w.Case1Params.vstar())
    assert abs(ab.A) <= 1e-15
    assert abs(ab.B - 2 * RHO ** 2 / 3) <= 1e-15
    assert abs(ab.B - 0.456947) < 1e-6


def test_ab_coefficients_reduce_psi_dh_periods():
    # psi dh and A x dz + B dz differ by an exact form: equal periods on both cycles
    p = random_case1(3)
    ab = w.coeffs_AB(p)
    d = w.case1_data(p)
    ps = ell.periods(p.lam)
    u = ell.Uniformizer.from_periods(ps)
    n = 4000
    for j, (start, step) in enumerate([(ps.omega2 / 2 + 0.1, ps.omega1), (ps.omega1 / 2 + 0.1, ps.omega2)], 1):
        s = (np.arange(n) + 0.5) / n
        x, y = u.xy(start + s * step)
        direct = np.sum(d.forms(x, y)[1]) / n * step    # psi dh = f dz, trapezoid on a periodic function
        reduced = ab.A * ps.phi(j) + ab.B * ps.omega(j)
        assert abs(direct - reduced) <= 1e-9


# evaluation -------------------------------------------------------------------

def test_vstar_gauss_maps(vstar_data):
    for pt in curve_points(-1):
        phi, psi, dh = w.eval_data(vstar_data, pt)
        assert abs(phi.value - pt.x / (RHO * pt.y)) <= 1e-12 * (1 + abs(phi.value))
        assert abs(psi.value + RHO * pt.y / pt.x) <= 1e-12 * (1 + abs(psi.value))
        assert abs(dh - RHO * pt.y) <= 1e-12 * abs(dh)
        assert abs(phi.value * psi.value + 1) <= 1e-12


def test_case1_phi_at_base_point():
    p = w.Case1Params(0.9, 0.1 + 0.2j, -0.7, 0.3j, 0.05 + 0.02j, -1 + 0.1j)
    phi = w.eval_data(w.case1_data(p), w.CurvePoint.on_curve(p.x0, p.y0))[0]
    x0, lam = p.x0, p.lam
    ref = 1 / (p.b * (3 * x0 ** 2 - 2 * (lam + 1) * x0 + lam) / (2 * p.y0) + p.c)
    assert abs(phi.value - ref) <= 1e-12


def test_case2_pole_of_phi_at_x0():
    c2 = w.Case2Params(cmath.exp(0.3j), 0.7 - 0.2j, 0.1 + 0.4j, 0.2 - 0.1j, -1)
    y = cmath.sqrt(c2.x0 * (c2.x0 - 1) * (c2.x0 + 1))
    phi, _, dh = w.eval_data(w.case2_data(c2), w.CurvePoint.on_curve(c2.x0, y))
    assert phi.is_infinity and dh == 0


def test_end_raises_with_limits(vstar_data):
    with pytest.raises(AtEnd) as info:
        w.eval_data(vstar_data, w.CurvePoint.infinity())
    assert info.value.phi.value == 0 and info.value.psi.is_infinity


def test_metric_density_two_factorizations(vstar_data):
    for pt in curve_points(-1):
        phi, psi, dh = w.eval_data(vstar_data, pt)
        direct = abs(phi.value - psi.value.conjugate()) ** 2 * abs(dh) ** 2
        G = phi.value
        assert abs(w.metric_density(vstar_data, pt) - direct) <= 1e-10 * direct
        assert abs(direct - abs(G + 1 / G.conjugate()) ** 2 * abs(dh) ** 2) <= 1e-10 * direct


def test_metric_density_positive_on_grid(vstar_data):
    _, x, y = w.torus_grid(-1, 64)
    assert np.min(w.metric_density_xy(vstar_data, x, y)) > 0


def test_metric_density_raises_at_end(vstar_data):
    with pytest.raises(AtEnd):
        w.metric_density(vstar_data, w.CurvePoint.infinity())


# Lorentz deformations -----------------------------------------------------------

def test_deform_identity_recovers_base(vstar_data):
    # same Gauss maps as v*; the height differential is dx rather than rho dx (a homothety)
    d = w.lorentz_deform(w.CGBase.classical(), 1)
    for pt in curve_points(-1):
        a, b = w.eval_data(d, pt), w.eval_data(vstar_data, pt)
        assert abs(a[0].value - b[0].value) <= 1e-12 * (1 + abs(b[0].value))
        assert abs(a[1].value - b[1].value) <= 1e-12 * (1 + abs(b[1].value))
        assert abs(RHO * a[2] - b[2]) <= 1e-12 * abs(b[2])


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 4, 1.2])
def test_deformed_gauss_maps(theta):
    z = cmath.exp(1j * theta)
    d = w.lorentz_deform(w.CGBase.classical(), z)
    for pt in curve_points(-1):
        G = pt.x / (RHO * pt.y)
        phi, psi, dh = w.eval_data(d, pt)
        assert abs(phi.value - G / z) <= 1e-12 * (1 + abs(G))
        assert abs(psi.value + 1 / (z * G)) <= 1e-12 * (1 + abs(1 / G))
        assert abs(dh - z * pt.y) <= 1e-12 * abs(dh)
        dens = w.metric_density(d, pt)
        ref = abs(G + cmath.exp(2j * theta) / G.conjugate()) ** 2 * abs(pt.y) ** 2
        assert abs(dens - ref) <= 1e-10 * ref


def test_deform_rejects_imaginary_zeta():
    with pytest.raises(DomainError):
        w.lorentz_deform(w.CGBase.classical(), 1j)
    with pytest.raises(DomainError):
        w.lorentz_deform(w.CGBase.classical(), 0)


def test_scaled_zeta_is_a_lorentz_transform():
    t, z = 2.5, cmath.exp(0.4j)
    base = w.CGBase.classical()
    d1 = w.lorentz_deform(base, z)
    d2 = w.lorentz_deform(base, t * z)
    g = np.diag([math.sqrt(t), 1 / math.sqrt(t)])
    d3 = w.normalize_lorentz(d2, g)
    for pt in curve_points(-1):
        assert abs(w.metric_density(d2, pt) - w.metric_density(d3, pt)) <= 1e-10 * w.metric_density(d2, pt)
        a, b = w.eval_data(d1, pt), w.eval_data(d3, pt)
        # diag(sqrt t, 1/sqrt t) scales phi, psi by t and dh by 1/t
        assert abs(b[0].value - a[0].value) <= 1e-12 * (1 + abs(a[0].value))
        assert abs(b[2] - a[2]) <= 1e-12 * abs(a[2])


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_normalize_lorentz_preserves_metric(entries):
    a, b, c = complex(entries[0], entries[1]), complex(entries[2], entries[3]), complex(entries[4], entries[5])
    if abs(a) < 0.2:
        return
    g = np.array([[a, b], [c, (1 + b * c) / a]])
    d = w.lorentz_deform(w.CGBase.classical(), cmath.exp(0.5j))
    dg = w.normalize_lorentz(d, g)
    for pt in curve_points(-1, ZS[:2]):
        m0 = w.metric_density(d, pt)
        assert abs(w.metric_density(dg, pt) - m0) <= 1e-9 * m0


def test_normalize_lorentz_identity_and_det_check(vstar_data):
    same = w.normalize_lorentz(vstar_data, np.eye(2))
    pt = curve_points(-1)[0]
    assert abs(w.eval_data(same, pt)[0].value - w.eval_data(vstar_data, pt)[0].value) <= 1e-15
    with pytest.raises(DomainError):
        w.normalize_lorentz(vstar_data, 2 * np.eye(2))


# regularity -------------------------------------------------------------------

def test_margin_at_vstar_is_antipodal(vstar_data):
    assert abs(w.regularity_margin(vstar_data, 64) - math.pi / 2) <= 1e-6


def test_deformed_margin_positive_and_stable(deformed_pi4):
    m64 = w.regularity_margin(deformed_pi4, 64)
    m256 = w.regularity_margin(deformed_pi4, 256)
    assert m64 > 0 and m256 > 0
    assert m256 <= m64 + 1e-12


def test_forced_imaginary_zeta_closes_margin():
    d = w.lorentz_deform(w.CGBase.classical(), 1j, force=True)
    assert w.regularity_margin(d, 64) < 1e-2


def test_regularity_margin_rejects_small_grid(vstar_data):
    with pytest.raises(DomainError):
        w.regularity_margin(vstar_data, 8)


def test_regularity_gap_zero_iff_phi_equals_conj_psi():
    p = random_case1(1)
    d = w.case1_data(p)
    _, x, y = w.torus_grid(p.lam, 16)
    gap = w.regularity_gap(p, x, y)
    dist = w.margin_values(d, x, y)
    assert np.all((gap > 1e-12) == (dist > 1e-12))


# serialization ----------------------------------------------------------------

@pytest.mark.parametrize("maker", [
    lambda: w.case1_data(random_case1(7)),
    lambda: w.case2_data(w.Case2Params(cmath.exp(0.3j), 0.7 - 0.2j, 0.1 + 0.4j, 0.2 - 0.1j, -1)),
    lambda: w.normalize_lorentz(w.lorentz_deform(w.CGBase.classical(), cmath.exp(0.2j)),
                                [[2, 1], [1, 1]]),
])
def test_json_round_trip(maker):
    d = maker()
    text = json.dumps(w.data_to_json(d))
    d2 = w.data_from_json(json.loads(text))
    assert w.data_to_json(d2) == w.data_to_json(d)
    pt = curve_points(d.lam)[1]
    assert abs(w.metric_density(d, pt) - w.metric_density(d2, pt)) <= 1e-12 * w.metric_density(d, pt)
