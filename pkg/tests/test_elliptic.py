import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import OMEGA1, PHI1
from lorentz_cg import elliptic as ell
from lorentz_cg.errors import BranchAmbiguity, DomainError, LeftRegion

LAMS = [-1, -0.5, -2, -0.3, -1 + 0.2j, -1.5 - 0.4j]


def hyp_oracle(lam):
    """Periods on gamma_1 from Gauss hypergeometric closed forms (mpmath)."""
    lam = mpmath.mpc(lam)
    omega1 = 2 * mpmath.pi * mpmath.hyp2f1(0.5, 0.5, 1, lam)
    phi1 = lam * mpmath.pi * mpmath.hyp2f1(0.5, 1.5, 2, lam)
    return complex(omega1), complex(phi1)


def cycle2_oracle(lam):
    # x = sin^2(u) removes both endpoint singularities
    f = lambda u, p: 2 * mpmath.sin(u) ** (2 * p) / mpmath.sqrt(mpmath.sin(u) ** 2 - lam)
    omega2 = 2j * complex(mpmath.quad(lambda u: f(u, 0), [0, mpmath.pi / 2]))
    phi2 = 2j * complex(mpmath.quad(lambda u: f(u, 1), [0, mpmath.pi / 2]))
    return omega2, phi2


def test_square_torus_periods():
    p = ell.periods(-1)
    assert abs(p.omega1 - OMEGA1) <= 1e-12
    assert abs(p.phi1 - PHI1) <= 1e-12
    assert abs(p.omega2.real) <= 1e-13 and p.omega2.imag > 0
    assert abs(p.phi2.real) <= 1e-13
    assert abs(p.tau - 1j) <= 1e-12


def test_frozen_constants_match_gamma_closed_forms():
    g = math.gamma
    assert abs(OMEGA1 - g(0.25) * g(0.5) / g(0.75)) <= 1e-13
    assert abs(PHI1 + g(0.75) * g(0.5) / g(1.25)) <= 1e-13


@pytest.mark.parametrize("lam", LAMS)
def test_cycle_one_against_hypergeometric_oracle(lam):
    p = ell.periods(lam)
    w1, f1 = hyp_oracle(lam)
    assert abs(p.omega1 - w1) <= 1e-11
    assert abs(p.phi1 - f1) <= 1e-11


@pytest.mark.parametrize("lam", LAMS)
def test_cycle_two_against_mpmath_quadrature(lam):
    p = ell.periods(lam)
    w2, f2 = cycle2_oracle(lam)
    assert abs(p.omega2 - w2) <= 1e-10
    assert abs(p.phi2 - f2) <= 1e-10


@pytest.mark.parametrize("lam", LAMS)
def test_legendre_relation(lam):
    assert abs(ell.legendre_residual(ell.periods(lam))) <= 1e-9


def test_swapped_cycles_flip_the_legendre_sign():
    p = ell.periods(-1)
    r = ell.legendre_residual(p)
    assert abs(ell.legendre_residual(p.swapped()) - (-r - 16j * math.pi)) <= 1e-9


@settings(max_examples=15, deadline=None)
@given(st.floats(-2.5, -0.1), st.floats(-0.8, 0.8))
def test_legendre_relation_property(re, im):
    assert abs(ell.legendre_residual(ell.periods(complex(re, im)))) <= 1e-8


def test_degenerate_lambda_rejected():
    for lam in (0, 1):
        with pytest.raises(DomainError):
            ell.periods(lam)


def test_unreachable_lambda_rejected():
    with pytest.raises(BranchAmbiguity):
        ell.periods(0.5)


def test_alpha_period_definitions():
    p = ell.periods(-1)
    assert abs(ell.alpha_period(0, 0, 0, -1, 1) - p.omega1) <= 1e-12
    assert abs(ell.alpha_period(1, 0, 0, -1, 1) - p.phi1) <= 1e-12
    x2 = ell.alpha_period(2, 0, 0, -1, 1)
    assert abs(x2 - p.omega1 / 3) <= 1e-11
    assert abs(x2 - 1.74804) < 1e-5


@pytest.mark.parametrize("lam", LAMS)
@pytest.mark.parametrize("j", [1, 2])
def test_x2_reduction(lam, j):
    p = ell.periods(lam)
    assert abs(ell.alpha_period(2, 0, 0, lam, j) - ell.reduced_x2_period(p, j)) <= 1e-10


def test_sigma_square_torus():
    s = ell.sigma(0, 0, 0, -1)
    assert abs(s.real) <= 1e-12 and s.imag > 0


def test_weber_identity_holds_only_at_minus_one():
    s100 = ell.sigma(1, 0, 0, -1)
    s011 = ell.sigma(0, 1, 1, -1)
    assert abs(s100.conjugate() - s011) <= 1e-10
    off = ell.sigma(1, 0, 0, -0.5).conjugate() - ell.sigma(0, 1, 1, -0.5)
    assert abs(off) > 1e-3


def test_kernel_derivatives_match_finite_differences():
    k = ell.period_derivatives(-1)
    fd = ell.period_derivatives(-1, method="fd")
    assert max(abs(a - b) for a, b in zip(k, fd)) <= 1e-6


def test_derivative_types_at_minus_one():
    p = ell.periods(-1)
    assert abs(p.d_phi1.imag) <= 1e-13
    assert abs(p.d_omega2.real) <= 1e-13 and abs(p.d_phi2.real) <= 1e-13
    assert abs(p.d_phi1 - 1.9100988945138564) <= 1e-10


def test_complex_lambda_derivative_against_hypergeometric_derivative():
    lam = -1 + 0.3j
    w1 = lambda l: 2 * mpmath.pi * mpmath.hyp2f1(0.5, 0.5, 1, l)
    ref = complex(mpmath.diff(w1, mpmath.mpc(lam)))
    assert abs(ell.periods(lam).d_omega1 - ref) <= 1e-10


@pytest.mark.parametrize("lam0", [-1, -1.2, -0.8 + 0.05j, -1 + 0.1j])
def test_weber_root_converges_to_minus_one(lam0):
    assert abs(ell.weber_root(lam0) + 1) <= 1e-8


def test_weber_root_real_segment_bisection_oracle():
    from scipy.optimize import brentq
    # for real lambda the residual is purely imaginary
    f = lambda t: ell.weber_residual(t).imag
    assert abs(brentq(f, -1.3, -0.7, xtol=1e-14) + 1) <= 1e-8


def test_weber_direct_and_reduced_residuals_agree():
    for lam in (-0.7, -1.3 + 0.2j):
        assert abs(ell.weber_residual(lam) - ell.weber_residual(lam, direct=True)) <= 1e-9


def test_weber_root_leaves_trusted_region():
    with pytest.raises(LeftRegion):
        ell.weber_root(3.0)


def test_half_periods_map_to_branch_points():
    p = ell.periods(-1 + 0.2j)
    xs = [ell.x_of_z(p.lam, p, z).x for z in (p.omega1 / 2, p.omega2 / 2, (p.omega1 + p.omega2) / 2)]
    for target in (0, 1, p.lam):
        assert min(abs(x - target) for x in xs) <= 1e-9


def test_uniformizer_leading_behaviour_near_lattice():
    p = ell.periods(-1)
    for z in (1e-3, 1e-3j, 7e-4 * cmath.exp(0.3j)):
        x = ell.x_of_z(-1, p, z).x
        assert abs(x * z * z / 4 - 1) <= 1e-4


def test_uniformizer_dz_equals_dx_over_y_by_integration():
    # integrate dz = dx / y from a large-|x| anchor along a straight x-path
    p = ell.periods(-1 + 0.2j)
    u = ell.Uniformizer.from_periods(p)
    z0, z1 = 0.05 + 0.02j, 0.4 + 0.3j
    x0, y0 = u.xy(np.array([z0]))
    x1, _ = u.xy(np.array([z1]))
    # follow x(z) along the z segment; dz = x'(z) dz / y must integrate to z1 - z0
    s = np.linspace(0, 1, 2001)
    zs = z0 + s * (z1 - z0)
    xs, ys = u.xy(zs)
    dx = np.diff(xs)
    mid = 0.5 * (ys[1:] + ys[:-1])
    assert abs(np.sum(dx / mid) - (z1 - z0)) <= 1e-5


def test_uniformizer_lies_on_curve_and_is_periodic():
    p = ell.periods(-1 + 0.2j)
    u = ell.Uniformizer.from_periods(p)
    s = (np.arange(10) + 0.37) / 10
    S, T = np.meshgrid(s, s)
    z = (S * p.omega1 + T * p.omega2).ravel()
    x, y = u.xy(z)
    assert np.max(np.abs(y * y - x * (x - 1) * (x - p.lam)) / (1 + np.abs(x) ** 3)) <= 1e-9
    for w in (p.omega1, p.omega2):
        xw, _ = u.xy(z + w)
        assert np.max(np.abs(xw - x)) <= 1e-9


def test_weber_scan_finds_only_minus_one():
    scan = ell.weber_scan(n_radii=4, n_angles=8)
    assert not scan["other_zeros"]
    assert scan["min_residual"] > 1e-3


def reduce_to_fundamental_domain(tau):
    for _ in range(100):
        tau = tau - round(tau.real)
        if abs(tau) < 1 - 1e-14:
            tau = -1 / tau
        else:
            return tau
    raise AssertionError("reduction did not terminate")


def test_square_quotient_real_part():
    assert abs(ell.sigma(0, 0, 0, -1).real) <= 1e-9


def test_equilateral_lattice_up_to_modular_action():
    lam = cmath.exp(1j * math.pi / 3)
    tau = reduce_to_fundamental_domain(ell.periods(lam).tau)
    # e^{i pi/3} and e^{2 i pi/3} are the same point of the modular curve
    assert min(abs(tau - cmath.exp(1j * math.pi / 3)), abs(tau - cmath.exp(2j * math.pi / 3))) <= 1e-9


def test_x_has_degree_two():
    p = ell.periods(-1 + 0.2j)
    u = ell.Uniformizer.from_periods(p)
    rng = np.random.default_rng(5)
    s = (np.arange(12) + 0.5) / 12
    S, T = np.meshgrid(s, s)
    starts = (S * p.omega1 + T * p.omega2).ravel()
    for target in rng.normal(size=3) + 1j * rng.normal(size=3):
        roots = []
        for z in starts:
            for _ in range(50):
                x, y = u.xy(np.array([z]))
                step = (x[0] - target) / y[0]
                z -= step
                if abs(step) < 1e-13:
                    break
            x, _ = u.xy(np.array([z]))
            if abs(x[0] - target) > 1e-9:
                continue
            if all(u.distance_to_lattice(np.array([z - r]))[0] > 1e-6 for r in roots):
                roots.append(z)
        assert len(roots) == 2


@pytest.mark.parametrize("lam", [-1, -0.5, -1 + 0.2j])
def test_omega1_is_four_K(lam):
    from lorentz_cg.quadrature import agm_elliptic_K
    assert abs(ell.periods(lam).omega1 - 4 * agm_elliptic_K(lam)) <= 1e-11
