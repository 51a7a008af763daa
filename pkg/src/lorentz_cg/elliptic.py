"""Periods of the Legendre curve y^2 = x(x-1)(x-lambda) and its uniformization.

Cycle conventions: gamma_1 encircles the cut [lambda, 0] and gamma_2 the cut
[0, 1]. For lambda < 0 the periods are twice the real segment integrals

    omega_1 = 2 int_0^1 dt / sqrt(t(1-t)(1-lambda t))          (x = lambda t)
    omega_2 = 2i int_0^1 dx / sqrt(x(1-x)(x-lambda))

and with principal square roots these expressions are analytic on
C minus [0, inf). That domain is exactly the set of lambda reachable from -1
by a straight segment that never meets 0 or 1, so the closed-form kernels
*are* the continuation of the periods from lambda = -1.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (AtPole, BranchAmbiguity, DomainError, LeftRegion,
                     NonConvergence, NonIntegrable)
from .quadrature import SingularIntegrand, integrate_singular

LEGENDRE_CONSTANT = 8j * math.pi
BRANCH_CLEARANCE = 0.05
TRUSTED_RADIUS = 0.95   # |lambda + 1| bound for the Weber solver and scans
DEFAULT_TOL = 1e-13


@dataclass(frozen=True)
class ModularLambda:
    value: complex

    def __post_init__(self):
        v = complex(self.value)
        object.__setattr__(self, "value", v)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise DomainError("lambda must be finite")
        if v == 0 or v == 1:
            raise DomainError("lambda must avoid the degenerate values 0 and 1")


def _as_lambda(lam) -> complex:
    if isinstance(lam, ModularLambda):
        return lam.value
    return ModularLambda(lam).value


def _segment_distance(a: complex, b: complex, p: complex) -> float:
    d = b - a
    if d == 0:
        return abs(p - a)
    s = ((p - a) * d.conjugate()).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(a + s * d - p)


def check_reachable(lam: complex) -> None:
    """Raise :class:`BranchAmbiguity` unless the segment -1 -> lam clears {0, 1}."""
    for p in (0.0, 1.0):
        if _segment_distance(-1.0 + 0j, lam, p) < BRANCH_CLEARANCE:
            raise BranchAmbiguity(
                f"path from -1 to lambda={lam} passes within {BRANCH_CLEARANCE} of {p:g}")


@dataclass(frozen=True)
class PeriodSet:
    """Periods of dx/y and x dx/y on both cycles and their lambda-derivatives."""

    lam: complex
    omega1: complex
    omega2: complex
    phi1: complex
    phi2: complex
    d_omega1: complex
    d_omega2: complex
    d_phi1: complex
    d_phi2: complex

    def omega(self, j: int) -> complex:
        return (self.omega1, self.omega2)[j - 1]

    def phi(self, j: int) -> complex:
        return (self.phi1, self.phi2)[j - 1]

    def d_omega(self, j: int) -> complex:
        return (self.d_omega1, self.d_omega2)[j - 1]

    def d_phi(self, j: int) -> complex:
        return (self.d_phi1, self.d_phi2)[j - 1]

    @property
    def tau(self) -> complex:
        return self.omega2 / self.omega1

    def swapped(self) -> "PeriodSet":
        return PeriodSet(self.lam, self.omega2, self.omega1, self.phi2, self.phi1,
                         self.d_omega2, self.d_omega1, self.d_phi2, self.d_phi1)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "lam", "omega1", "omega2", "phi1", "phi2",
            "d_omega1", "d_omega2", "d_phi1", "d_phi2")}


def _quad(g, a, b, tol):
    return integrate_singular(SingularIntegrand(g, a, b), tol).value


def _cycle1(lam, tol, weight_power, extra=None):
    """2 int_0^1 t^p (1-t)^(-1/2) (1-lam t)^(-1/2) extra(t) dt, p = weight_power - 1/2."""
    def g(t):
        out = 1.0 / np.sqrt(1.0 - lam * t.astype(complex))
        return out if extra is None else out * extra(t)
    return _quad(g, weight_power - 0.5, -0.5, tol)


def _cycle2(lam, tol, weight_power, extra=None):
    def g(x):
        out = 1.0 / np.sqrt(x.astype(complex) - lam)
        return out if extra is None else out * extra(x)
    return _quad(g, weight_power - 0.5, -0.5, tol)


def _raw_periods(lam: complex, tol: float):
    q = tol / 4
    omega1 = 2 * _cycle1(lam, q, 0)
    phi1 = 2 * lam * _cycle1(lam, q, 1)
    omega2 = 2j * _cycle2(lam, q, 0)
    phi2 = 2j * _cycle2(lam, q, 1)
    return omega1, omega2, phi1, phi2


def _kernel_derivatives(lam: complex, tol: float):
    q = tol / 4
    d_omega1 = _cycle1(lam, q, 0, lambda t: t / (1.0 - lam * t))
    d_phi1 = _cycle1(lam, q, 1, lambda t: 2.0 + lam * t / (1.0 - lam * t))
    d_omega2 = 1j * _cycle2(lam, q, 0, lambda x: 1.0 / (x - lam))
    d_phi2 = 1j * _cycle2(lam, q, 1, lambda x: 1.0 / (x - lam))
    return d_omega1, d_omega2, d_phi1, d_phi2


@lru_cache(maxsize=1)
def _reference_orientation():
    """Signs (s1, s2) that put omega1(-1) > 0 and Im omega2(-1) > 0."""
    w1, w2, p1, p2 = _raw_periods(-1.0 + 0j, 1e-14)
    s1 = 1.0 if w1.real > 0 else -1.0
    s2 = 1.0 if w2.imag > 0 else -1.0
    res = (s1 * w1) * (s2 * p2) - (s2 * w2) * (s1 * p1) - LEGENDRE_CONSTANT
    if abs(res) > 1e-8:
        raise NonConvergence(f"no sign choice satisfies the Legendre relation (residual {abs(res):.2e})")
    return s1, s2


def periods(lam, tol: float = DEFAULT_TOL) -> PeriodSet:
    """All eight period values at ``lam`` (continued from lambda = -1)."""
    lam = _as_lambda(lam)
    check_reachable(lam)
    s1, s2 = _reference_orientation()
    w1, w2, p1, p2 = _raw_periods(lam, tol)
    dw1, dw2, dp1, dp2 = _kernel_derivatives(lam, tol)
    return PeriodSet(lam, s1 * w1, s2 * w2, s1 * p1, s2 * p2,
                     s1 * dw1, s2 * dw2, s1 * dp1, s2 * dp2)


def period_derivatives(lam, tol: float = DEFAULT_TOL, method: str = "kernel"):
    """(d omega1, d omega2, d Phi1, d Phi2) with respect to lambda.

    ``method="kernel"`` differentiates under the integral sign (valid on the
    whole cut plane); ``method="fd"`` uses central differences of
    :func:`periods` with step ``1e-5 (1 + |lambda|)`` and one Richardson step.
    """
    lam = _as_lambda(lam)
    if method == "kernel":
        p = periods(lam, tol)
        return p.d_omega1, p.d_omega2, p.d_phi1, p.d_phi2
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    h = 1e-5 * (1 + abs(lam))

    def central(step):
        plus = _raw_periods(lam + step, tol)
        minus = _raw_periods(lam - step, tol)
        return np.array([(a - b) / (2 * step) for a, b in zip(plus, minus)])

    for shift in (h, -h):
        check_reachable(lam + shift)
    d_h, d_2h = central(h), central(2 * h)
    rich = (4 * d_h - d_2h) / 3
    s1, s2 = _reference_orientation()
    w1, w2, p1, p2 = rich
    return s1 * w1, s2 * w2, s1 * p1, s2 * p2


def legendre_residual(p: PeriodSet) -> complex:
    """omega1 Phi2 - omega2 Phi1 - 8 pi i."""
    return p.omega1 * p.phi2 - p.omega2 * p.phi1 - LEGENDRE_CONSTANT


def _cpow(base, e):
    """Principal power that keeps integer exponents exact for complex bases."""
    if float(e).is_integer():
        return base ** int(e)
    return np.power(base.astype(complex) if isinstance(base, np.ndarray) else complex(base), e)


def alpha_period(r: float, s: float, t: float, lam, cycle: int, tol: float = DEFAULT_TOL) -> complex:
    """Period of x^r (x-1)^s (x-lambda)^t dx/y over gamma_1 or gamma_2.

    Non-integer exponents use principal powers of each factor along the
    segment parametrization.
    """
    lam = _as_lambda(lam)
    check_reachable(lam)
    if cycle not in (1, 2):
        raise ValueError("cycle must be 1 or 2")
    s1, s2 = _reference_orientation()
    if cycle == 1:
        left, right = r - 0.5, t - 0.5        # x -> 0 at t=0, x -> lambda at t=1
        if left <= -1 or right <= -1:
            raise NonIntegrable(f"alpha({r},{s},{t}) is not integrable over gamma_1")
        const = _cpow(lam + 0j, r) * _cpow(-lam + 0j, t)

        def g(u):
            uc = u.astype(complex)
            return _cpow(lam * uc - 1.0, s) / np.sqrt(1.0 - lam * uc)
        return s1 * 2 * const * _quad(g, left, right, tol / 2)
    left, right = r - 0.5, s - 0.5            # x -> 0 and x -> 1
    if left <= -1 or right <= -1:
        raise NonIntegrable(f"alpha({r},{s},{t}) is not integrable over gamma_2")
    const = _cpow(-1.0 + 0j, s)

    def g(x):
        return _cpow(x.astype(complex) - lam, t - 0.5)
    return s2 * 2j * const * _quad(g, left, right, tol / 2)


def sigma(r: float, s: float, t: float, lam, tol: float = DEFAULT_TOL) -> complex:
    """Period quotient alpha_2 / alpha_1."""
    a1 = alpha_period(r, s, t, lam, 1, tol)
    a2 = alpha_period(r, s, t, lam, 2, tol)
    if a1 == 0:
        raise ZeroDivisionError("alpha_1 vanishes; period quotient undefined")
    return a2 / a1


def reduced_x2_period(p: PeriodSet, j: int) -> complex:
    """Period of x^2 dx/y from the exact-form reduction (2(l+1)/3) Phi - (l/3) omega."""
    lam = p.lam
    return 2 * (lam + 1) / 3 * p.phi(j) - lam / 3 * p.omega(j)


def _weber_parts(p: PeriodSet):
    """sigma(1,0,0), sigma(0,1,1) and their lambda-derivatives from one PeriodSet."""
    lam = p.lam
    # (x-1)(x-lambda) dx/y = x^2 dx/y - (1+lambda) x dx/y + lambda dx/y
    a = [-(lam + 1) / 3 * p.phi(j) + 2 * lam / 3 * p.omega(j) for j in (1, 2)]
    da = [-p.phi(j) / 3 - (lam + 1) / 3 * p.d_phi(j) + 2 * p.omega(j) / 3
          + 2 * lam / 3 * p.d_omega(j) for j in (1, 2)]
    S = p.phi2 / p.phi1
    dS = (p.d_phi2 * p.phi1 - p.phi2 * p.d_phi1) / p.phi1 ** 2
    T = a[1] / a[0]
    dT = (da[1] * a[0] - a[1] * da[0]) / a[0] ** 2
    return S, dS, T, dT


def weber_residual(lam, tol: float = DEFAULT_TOL, direct: bool = False) -> complex:
    """conj(sigma(1,0,0;lambda)) - sigma(0,1,1;lambda).

    ``direct=True`` evaluates both quotients by contour quadrature instead
    of through the exact-form reduction.
    """
    if direct:
        return sigma(1, 0, 0, lam, tol).conjugate() - sigma(0, 1, 1, lam, tol)
    S, _, T, _ = _weber_parts(periods(lam, tol))
    return S.conjugate() - T


def weber_root(lam0, tol: float = 1e-12, max_iter: int = 40) -> complex:
    """Newton iteration on the real 2x2 system Re/Im of :func:`weber_residual`."""
    lam = _as_lambda(lam0)
    qtol = min(DEFAULT_TOL, tol * 1e-2)
    for _ in range(max_iter):
        if abs(lam + 1) > TRUSTED_RADIUS:
            raise LeftRegion(f"Newton left the trusted region at lambda={lam}")
        S, dS, T, dT = _weber_parts(periods(lam, qtol))
        R = S.conjugate() - T
        if abs(R) <= tol:
            return lam
        dRu = dS.conjugate() - dT
        dRv = -1j * dS.conjugate() - 1j * dT
        J = np.array([[dRu.real, dRv.real], [dRu.imag, dRv.imag]])
        step = np.linalg.solve(J, -np.array([R.real, R.imag]))
        lam = lam + complex(step[0], step[1])
    raise NonConvergence(f"Weber root not found from {lam0} (last lambda {lam})")


# ---------------------------------------------------------------------------
# Uniformization: x(z) = 4 P(z) + (1 + lambda)/3, y = dx/dz, dz = dx/y
# ---------------------------------------------------------------------------

_N_LAURENT = 24


def _laurent_coefficients(g2: complex, g3: complex, n: int = _N_LAURENT):
    c = [0j] * (n + 1)
    c[2] = g2 / 20
    c[3] = g3 / 28
    for k in range(4, n + 1):
        acc = sum(c[m] * c[k - m] for m in range(2, k - 1))
        c[k] = 3 * acc / ((2 * k + 1) * (k - 3))
    return c


@dataclass(frozen=True)
class CurvePoint:
    x: complex
    y: complex
    sheet: int = 0
    at_infinity: bool = False

    @classmethod
    def infinity(cls) -> "CurvePoint":
        return cls(complex("nan"), complex("nan"), 0, True)

    @classmethod
    def on_curve(cls, x: complex, y: complex) -> "CurvePoint":
        y = complex(y)
        sheet = 0 if (y.real, y.imag) >= (0.0, 0.0) else 1
        return cls(complex(x), y, sheet)


@dataclass(frozen=True)
class Uniformizer:
    """Doubly periodic x(z), y(z) on the lattice generated by two periods."""

    lam: complex
    omega1: complex
    omega2: complex
    g2: complex = field(init=False)
    g3: complex = field(init=False)
    _coef: tuple = field(init=False, repr=False)
    _rmin: float = field(init=False, repr=False)

    def __post_init__(self):
        lam = complex(self.lam)
        A, B = -(1 + lam), lam
        p = B - A * A / 3
        q = 2 * A ** 3 / 27 - A * B / 3
        object.__setattr__(self, "g2", -p / 4)
        object.__setattr__(self, "g3", -q / 16)
        object.__setattr__(self, "_coef", tuple(_laurent_coefficients(self.g2, self.g3)))
        lat = [self.omega1, self.omega2, self.omega1 + self.omega2, self.omega1 - self.omega2]
        object.__setattr__(self, "_rmin", min(abs(w) for w in lat))

    @classmethod
    def from_periods(cls, p: PeriodSet) -> "Uniformizer":
        return cls(p.lam, p.omega1, p.omega2)

    @property
    def shift(self) -> complex:
        return (1 + self.lam) / 3

    def lattice_coords(self, z):
        """Real coordinates (s, t) with z = s omega1 + t omega2."""
        z = np.asarray(z, dtype=complex)
        M = np.array([[self.omega1.real, self.omega2.real],
                      [self.omega1.imag, self.omega2.imag]])
        inv = np.linalg.inv(M)
        s = inv[0, 0] * z.real + inv[0, 1] * z.imag
        t = inv[1, 0] * z.real + inv[1, 1] * z.imag
        return s, t

    def reduce(self, z):
        """Representative of z in the parallelogram centred at the origin."""
        s, t = self.lattice_coords(z)
        return np.asarray(z, dtype=complex) - np.round(s) * self.omega1 - np.round(t) * self.omega2

    def distance_to_lattice(self, z) -> np.ndarray:
        zr = self.reduce(z)
        best = np.abs(zr)
        for a in (-1, 0, 1):
            for b in (-1, 0, 1):
                if a or b:
                    best = np.minimum(best, np.abs(zr - a * self.omega1 - b * self.omega2))
        return best

    def wp(self, z):
        """Weierstrass P and P' for the lattice (vectorized)."""
        z = self.reduce(z)
        if np.any(z == 0):
            raise AtPole("z lies on the period lattice (the point at infinity)")
        r0 = 0.3 * self._rmin
        k = np.maximum(0, np.ceil(np.log2(np.maximum(np.abs(z), 1e-300) / r0))).astype(int)
        w = z / 2.0 ** k
        c = self._coef
        w2 = w * w
        P = np.zeros_like(w)
        dP = np.zeros_like(w)
        for j in range(len(c) - 1, 1, -1):      # Horner in w^2
            P = P * w2 + c[j]
            dP = dP * w2 + (2 * j - 2) * c[j]
        P = 1.0 / w2 + P * w2
        dP = -2.0 / (w2 * w) + dP * w
        g2 = self.g2
        for step in range(int(k.max(initial=0))):
            m = k > step
            if not np.any(m):
                break
            p, dp = P[m], dP[m]
            ddp = 6 * p * p - g2 / 2
            P_new = 0.25 * (ddp / dp) ** 2 - 2 * p
            dP_new = ddp / (4 * dp ** 3) * (12 * p * dp * dp - ddp * ddp) - dp
            P[m], dP[m] = P_new, dP_new
        return P, dP

    def xy(self, z):
        P, dP = self.wp(z)
        return 4 * P + self.shift, 4 * dP


def x_of_z(lam, p: PeriodSet, z: complex) -> CurvePoint:
    """Point (x(z), y(z)) of the curve, y = dx/dz."""
    u = Uniformizer(_as_lambda(lam), p.omega1, p.omega2)
    x, y = u.xy(np.array([complex(z)]))
    return CurvePoint.on_curve(x[0], y[0])


def weber_scan(n_radii: int = 10, n_angles: int = 20, threshold: float = 1e-3,
               tol: float = DEFAULT_TOL) -> dict:
    """Weber residual on a polar grid of the trusted disk |lambda + 1| <= 0.95.

    Grid points whose residual is below ``threshold`` are polished by Newton;
    any that do not land on -1 are reported as ``other_zeros``.
    """
    points, values, other = [], [], []
    for i in range(1, n_radii + 1):
        r = TRUSTED_RADIUS * i / n_radii
        for k in range(n_angles):
            lam = -1 + r * cmath.exp(2j * math.pi * (k + 0.5 * (i % 2)) / n_angles)
            res = abs(weber_residual(lam, tol))
            points.append(lam)
            values.append(res)
            if res < threshold:
                try:
                    root = weber_root(lam)
                except (NonConvergence, LeftRegion):
                    other.append(lam)
                    continue
                if abs(root + 1) > 1e-7:
                    other.append(root)
    return {"points": points, "residuals": values, "other_zeros": other,
            "min_residual": min(values)}
