"""Weierstrass data (phi, psi, dh) on the curve y^2 = x(x-1)(x-lambda).

Gauss-map values are carried as homogeneous pairs ``[num : den]`` so that
poles are ordinary points of the Riemann sphere. Every data object exposes the
four 1-forms of the representation formula as coefficients of ``dz = dx/y``::

    phi dh, psi dh, dh, phi psi dh

which stay finite away from the end P and transform linearly under the
SL(2, C) action on the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .elliptic import (CurvePoint, Uniformizer, alpha_period,
                       periods)
from .errors import AtEnd, BranchLost, DomainError, ImaginaryZeta, NonConvergence
from .quadrature import gamma

CASE1, CASE2, DEFORMED = "case1", "case2", "deformed_r3"


# ---------------------------------------------------------------------------
# Riemann sphere
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpherePoint:
    """Point [num : den] of the Riemann sphere; den == 0 is infinity."""

    num: complex
    den: complex

    def __post_init__(self):
        if self.num == 0 and self.den == 0:
            raise DomainError("[0 : 0] is not a point of the sphere")

    @classmethod
    def of(cls, w: complex) -> "SpherePoint":
        return cls(complex(w), 1 + 0j)

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls(1 + 0j, 0j)

    @property
    def is_infinity(self) -> bool:
        return self.den == 0

    @property
    def value(self) -> complex | None:
        """Affine value, or None at infinity."""
        return None if self.is_infinity else self.num / self.den

    def conj(self) -> "SpherePoint":
        return SpherePoint(self.num.conjugate(), self.den.conjugate())

    def to_json(self):
        return {"num": [self.num.real, self.num.imag], "den": [self.den.real, self.den.imag]}


def sphere_distance(p1, q1, p2, q2):
    """Geodesic distance between [p1:q1] and [p2:q2] on the sphere of diameter 1.

    Antipodal points are pi/2 apart. Works elementwise on arrays.
    """
    cross = np.abs(p1 * q2 - q1 * p2)
    dot = np.abs(p1 * np.conj(p2) + q1 * np.conj(q2))
    return np.arctan2(cross, dot)


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

def _g(x, lam):
    return x * (x - 1) * (x - lam)


def _g_prime(x, lam):
    return 3 * x * x - 2 * (lam + 1) * x + lam


def x0_implicit(lam: complex, y0: complex, tol: float = 1e-14, max_iter: int = 60) -> complex:
    """Root of y0^2 = x0(x0-1)(x0-lam) on the branch through x0(-1, 0) = 0."""
    lam, y0 = complex(lam), complex(y0)
    target = y0 * y0
    x = 0j
    for _ in range(max_iter):
        f = _g(x, lam) - target
        d = _g_prime(x, lam)
        if d == 0:
            raise BranchLost(f"critical point of the cubic reached at x0={x}")
        step = f / d
        x -= step
        if abs(x) > 0.5:
            raise BranchLost(f"Newton for x0 left the basin of 0 (x0={x})")
        if abs(step) <= tol * max(1.0, abs(x)) and abs(_g(x, lam) - target) <= 1e-13:
            return x
    raise BranchLost(f"Newton for x0 did not converge at lambda={lam}, y0={y0}")


def x0_partials(lam: complex, y0: complex, x0: complex) -> tuple[complex, complex]:
    """(d x0 / d lambda, d x0 / d y0) by implicit differentiation."""
    d = _g_prime(x0, lam)
    return x0 * (x0 - 1) / d, 2 * y0 / d


@dataclass(frozen=True)
class Case1Params:
    b: complex
    c: complex
    l: complex
    m: complex
    y0: complex
    lam: complex
    x0: complex = field(default=None)

    def __post_init__(self):
        for name in ("b", "c", "l", "m", "y0", "lam"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.b == 0 or self.l == 0:
            raise DomainError("b and l must be nonzero")
        if self.lam in (0, 1):
            raise DomainError("lambda must avoid 0 and 1")
        if self.x0 is None:
            object.__setattr__(self, "x0", x0_implicit(self.lam, self.y0))
        else:
            object.__setattr__(self, "x0", complex(self.x0))
            if abs(self.y0 ** 2 - _g(self.x0, self.lam)) > 1e-10:
                raise DomainError("(x0, y0) is not a point of the curve")

    @classmethod
    def vstar(cls, rho: float | None = None) -> "Case1Params":
        r = cg_rho()[0] if rho is None else rho
        return cls(r, 0, -r, 0, 0, -1, 0j)


@dataclass(frozen=True)
class Case2Params:
    a: complex
    b: complex
    c: complex
    x0: complex
    lam: complex

    def __post_init__(self):
        for name in ("a", "b", "c", "x0", "lam"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.a == 0 or self.b == 0:
            raise DomainError("a and b must be nonzero")
        if abs(abs(self.a) - 1) > 1e-12:
            raise DomainError("the normalization |a| = 1 is required")
        if self.lam in (0, 1):
            raise DomainError("lambda must avoid 0 and 1")


@dataclass(frozen=True)
class CGBase:
    """Chen-Gackstatter data on the square torus: G = x/(rho y), dh = dx."""

    rho: float

    lam = -1 + 0j

    @classmethod
    def classical(cls) -> "CGBase":
        return cls(cg_rho()[0])


@dataclass(frozen=True)
class DeformedR3:
    zeta: complex
    rho: float
    lam: complex = -1 + 0j

    @property
    def base(self) -> CGBase:
        return CGBase(self.rho)


@dataclass(frozen=True)
class ABCoefficients:
    A: complex
    B: complex


def coeffs_AB(p: Case1Params) -> ABCoefficients:
    """Coefficients with psi dh = A x dz + B dz up to an exact form."""
    b, c, l, m, y0, lam, x0 = p.b, p.c, p.l, p.m, p.y0, p.lam, p.x0
    A = b * l * (x0 - (lam + 1) / 3) + c * m
    B = (c * l - b * m) * y0 + b * l * (x0 * x0 - (lam + 1) * x0 + 2 * lam / 3) - c * m * x0
    return ABCoefficients(A, B)


# ---------------------------------------------------------------------------
# Data objects
# ---------------------------------------------------------------------------

def _mat(g) -> tuple:
    g = np.asarray(g, dtype=complex)
    if g.shape != (2, 2):
        raise DomainError("transform must be a 2x2 matrix")
    if abs(g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0] - 1) > 1e-10:
        raise DomainError("transform must have determinant 1")
    return tuple(tuple(complex(v) for v in row) for row in g)


@dataclass(frozen=True)
class WeierstrassData:
    """Case 1, Case 2 or Lorentz-deformed Chen-Gackstatter data.

    ``transform`` is an optional SL(2, C) matrix applied on top of the base
    data (see :func:`normalize_lorentz`).
    """

    case: str
    params: Case1Params | Case2Params | DeformedR3
    transform: tuple | None = None

    def __post_init__(self):
        expected = {CASE1: Case1Params, CASE2: Case2Params, DEFORMED: DeformedR3}
        if self.case not in expected or not isinstance(self.params, expected[self.case]):
            raise DomainError(f"params do not match case {self.case!r}")

    @property
    def lam(self) -> complex:
        return self.params.lam

    # base data -------------------------------------------------------------

    def _base_forms(self, x, y):
        p = self.params
        if self.case == CASE1:
            b, c, l, m, y0, x0, lam = p.b, p.c, p.l, p.m, p.y0, p.x0, p.lam
            dx = x - x0
            Q = x * x + x * x0 + x0 * x0 - (lam + 1) * (x + x0) + lam
            phidh = dx
            dh = b * (y - y0) + c * dx
            phipsidh = l * (y + y0) + m * dx
            psidh = l * b * Q + l * c * (y + y0) + m * b * (y - y0) + m * c * dx
        elif self.case == CASE2:
            a, b, c, x0 = p.a, p.b, p.c, p.x0
            dh = a * (x - x0)
            phidh = np.ones_like(x)
            phipsidh = b * x + c
            psidh = a * (b * x + c) * (x - x0)
        else:
            z, r, lam = p.zeta, p.rho, p.lam
            phidh = x / r
            psidh = -r * (x - 1) * (x - lam)
            dh = z * y
            phipsidh = -y / z
        return phidh, psidh, dh, phipsidh

    def _base_gauss(self, x, y):
        p = self.params
        if self.case == CASE1:
            b, c, l, m, y0, x0, lam = p.b, p.c, p.l, p.m, p.y0, p.x0, p.lam
            dx = x - x0
            Q = x * x + x * x0 + x0 * x0 - (lam + 1) * (x + x0) + lam
            alt = np.abs(y + y0) >= np.abs(dx)
            pn = np.where(alt, y + y0, dx)
            pd = np.where(alt, b * Q + c * (y + y0), b * (y - y0) + c * dx)
            alt = np.abs(y - y0) >= np.abs(dx)
            qn = np.where(alt, l * Q + m * (y - y0), l * (y + y0) + m * dx)
            qd = np.where(alt, y - y0, dx)
        elif self.case == CASE2:
            pn = np.ones_like(x)
            pd = p.a * (x - p.x0)
            qn = p.b * x + p.c
            qd = np.ones_like(x)
        else:
            z, r, lam = p.zeta, p.rho, p.lam
            # x/y = y/((x-1)(x-lam)) removes the 0/0 at the branch point x = 0
            alt = np.abs(x) <= np.abs(y)
            y2 = (x - 1) * (x - lam)
            pn = np.where(alt, y, x)
            pd = np.where(alt, z * r * y2, z * r * y)
            qn = np.where(alt, -r * y2, -r * y)
            qd = np.where(alt, z * y, z * x)
        return pn, pd, qn, qd

    def _base_end(self):
        # phi -> 0 and psi -> infinity at P in every case handled here
        return (0j, 1 + 0j), (1 + 0j, 0j)

    # transformed data ------------------------------------------------------

    def forms(self, x, y):
        """(phi dh, psi dh, dh, phi psi dh) as coefficients of dz."""
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        f1, f2, f3, f4 = self._base_forms(x, y)
        if self.transform is None:
            return f1, f2, f3, f4
        (a, b), (c, d) = self.transform
        ac, bc, cc, dc = a.conjugate(), b.conjugate(), c.conjugate(), d.conjugate()
        phidh = a * cc * f4 + a * dc * f1 + b * cc * f2 + b * dc * f3
        psidh = ac * c * f4 + ac * d * f2 + bc * c * f1 + bc * d * f3
        dh = c * cc * f4 + c * dc * f1 + d * cc * f2 + d * dc * f3
        phipsidh = a * ac * f4 + a * bc * f1 + b * ac * f2 + b * bc * f3
        return phidh, psidh, dh, phipsidh

    def _apply(self, pn, pd, qn, qd):
        if self.transform is None:
            return pn, pd, qn, qd
        (a, b), (c, d) = self.transform
        return (a * pn + b * pd, c * pn + d * pd,
                a.conjugate() * qn + b.conjugate() * qd, c.conjugate() * qn + d.conjugate() * qd)

    def gauss(self, x, y):
        """Homogeneous pairs (phi_num, phi_den, psi_num, psi_den)."""
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        return self._apply(*self._base_gauss(x, y))

    def end_gauss(self) -> tuple[SpherePoint, SpherePoint]:
        (pn, pd), (qn, qd) = self._base_end()
        pn, pd, qn, qd = self._apply(pn, pd, qn, qd)
        return SpherePoint(complex(pn), complex(pd)), SpherePoint(complex(qn), complex(qd))

    def special_points(self) -> list[CurvePoint]:
        """Finite points where a Gauss map is given by a limit formula."""
        if self.case == CASE1:
            p = self.params
            return [CurvePoint.on_curve(p.x0, p.y0), CurvePoint.on_curve(p.x0, -p.y0)]
        if self.case == CASE2:
            p = self.params
            y = np.sqrt(complex(_g(p.x0, p.lam)))
            return [CurvePoint.on_curve(p.x0, y), CurvePoint.on_curve(p.x0, -y)]
        return [CurvePoint.on_curve(0, 0)]

    def to_json(self) -> dict:
        return data_to_json(self)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def case1_data(p: Case1Params) -> WeierstrassData:
    return WeierstrassData(CASE1, p)


def case2_data(p: Case2Params) -> WeierstrassData:
    return WeierstrassData(CASE2, p)


def lorentz_deform(base: CGBase, zeta: complex, force: bool = False) -> WeierstrassData:
    """phi = G/zeta, psi = -1/(zeta G), dh -> zeta dh for the Chen-Gackstatter base.

    Purely imaginary ``zeta`` breaks regularity; pass ``force=True`` to build
    such data anyway (for diagnostics).
    """
    zeta = complex(zeta)
    if zeta == 0:
        raise DomainError("zeta must be nonzero")
    if zeta.real == 0 and not force:
        raise ImaginaryZeta("zeta is purely imaginary; the deformed data is not regular")
    return WeierstrassData(DEFORMED, DeformedR3(zeta, float(base.rho)))


def normalize_lorentz(d: WeierstrassData, g) -> WeierstrassData:
    """Apply the Lorentz rotation given by g in SL(2, C)."""
    gm = np.array(_mat(g))
    if d.transform is not None:
        gm = gm @ np.array(d.transform)
    return WeierstrassData(d.case, d.params, _mat(gm))


def eval_data(d: WeierstrassData, pt: CurvePoint):
    """(phi, psi, dh coefficient) at a finite curve point.

    phi and psi are :class:`SpherePoint` values. At the end P an
    :class:`AtEnd` error is raised carrying the limiting Gauss values as
    ``err.phi`` and ``err.psi``.
    """
    if pt.at_infinity:
        phi, psi = d.end_gauss()
        err = AtEnd("the end P is a pole of dh")
        err.phi, err.psi = phi, psi
        raise err
    x, y = np.array([pt.x]), np.array([pt.y])
    pn, pd, qn, qd = d.gauss(x, y)
    dh = d.forms(x, y)[2]
    return (SpherePoint(complex(pn[0]), complex(pd[0])),
            SpherePoint(complex(qn[0]), complex(qd[0])), complex(dh[0]))


def metric_density_xy(d: WeierstrassData, x, y):
    """|phi - conj(psi)|^2 |dh|^2 from the four forms (vectorized)."""
    phidh, psidh, dh, _ = d.forms(x, y)
    mag = np.abs(dh)
    with np.errstate(invalid="ignore", divide="ignore"):
        phase = np.where(mag > 0, dh / np.where(mag > 0, np.conj(dh), 1), 1)
    return np.abs(phidh - np.conj(psidh) * phase) ** 2


def metric_density(d: WeierstrassData, pt: CurvePoint) -> float:
    if pt.at_infinity:
        raise AtEnd("the metric blows up at the end P")
    return float(metric_density_xy(d, np.array([pt.x]), np.array([pt.y]))[0])


@lru_cache(maxsize=64)
def _uniformizer(lam: complex) -> Uniformizer:
    return Uniformizer.from_periods(periods(lam))


def torus_grid(lam: complex, n: int, exclude_radius: float | None = None):
    """Cell-centred n x n grid of the fundamental parallelogram.

    Returns (z, x, y) arrays with points within ``exclude_radius`` of the
    lattice (default 0.02 |omega1|) removed.
    """
    u = _uniformizer(complex(lam))
    s = (np.arange(n) + 0.5) / n
    S, T = np.meshgrid(s, s, indexing="ij")
    z = (S * u.omega1 + T * u.omega2).ravel()
    r = 0.02 * abs(u.omega1) if exclude_radius is None else exclude_radius
    z = z[u.distance_to_lattice(z) > r]
    x, y = u.xy(z)
    return z, x, y


def margin_values(d: WeierstrassData, x, y):
    pn, pd, qn, qd = d.gauss(x, y)
    return sphere_distance(pn, pd, np.conj(qn), np.conj(qd))


def regularity_margin(d: WeierstrassData, grid_n: int = 64) -> float:
    """Minimum sphere distance between phi and conj(psi).

    Taken over a grid_n x grid_n torus grid, the special points where a
    limit formula applies, and the end P. Distances live on the sphere of
    diameter 1, so antipodal values give pi/2.
    """
    if grid_n < 16:
        raise DomainError("grid_n must be at least 16")
    _, x, y = torus_grid(d.lam, grid_n)
    vals = [float(np.min(margin_values(d, x, y)))]
    sp = d.special_points()
    if sp:
        vals.append(float(np.min(margin_values(
            d, np.array([p.x for p in sp]), np.array([p.y for p in sp])))))
    phi, psi = d.end_gauss()
    vals.append(float(sphere_distance(phi.num, phi.den, np.conj(psi.num), np.conj(psi.den))))
    return min(vals)


def regularity_gap(p: Case1Params, x, y):
    """| |x-x0|^2 - conj(b(y-y0)+c(x-x0)) (l(y+y0)+m(x-x0)) |, zero iff phi = conj(psi)."""
    dx = x - p.x0
    D = p.b * (y - p.y0) + p.c * dx
    N = p.l * (y + p.y0) + p.m * dx
    return np.abs(np.abs(dx) ** 2 - np.conj(D) * N)


def cg_rho(tol: float = 1e-14) -> tuple[float, float]:
    """rho from the Gamma closed form and from the horizontal period condition.

    For G = x/(rho y), dh = dx the condition conj(int phi dh) = -int psi dh
    over gamma_1 reads conj(Phi_1)/rho = rho alpha_1(0,1,1), so
    rho^2 = Phi_1 / conj(alpha_1(0,1,1)), both periods computed by quadrature.
    """
    rho_gamma = math.sqrt(6) * gamma(0.75) / gamma(0.25)
    phi1 = alpha_period(1, 0, 0, -1, 1, tol)
    a011 = alpha_period(0, 1, 1, -1, 1, tol)
    ratio = phi1 / a011.conjugate()
    if ratio.real <= 0 or abs(ratio.imag) > 1e-10 * abs(ratio):
        raise NonConvergence(f"horizontal period condition has no positive root (ratio {ratio})")
    return rho_gamma, math.sqrt(ratio.real)


def case2_square_obstruction() -> tuple[float, float]:
    """(rho^4, 3/4): the square-torus Case 2 system would need them equal."""
    p = periods(-1)
    rho2 = -1.5 * p.phi1.real / p.omega1.real
    return rho2 * rho2, 0.75


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _c(v: complex) -> list:
    v = complex(v)
    return [v.real, v.imag]


def _uc(v) -> complex:
    return complex(v[0], v[1])


_FIELDS = {CASE1: ("b", "c", "l", "m", "y0", "lam", "x0"),
           CASE2: ("a", "b", "c", "x0", "lam"),
           DEFORMED: ("zeta", "lam")}


def data_to_json(d: WeierstrassData) -> dict:
    out = {"case": d.case}
    for name in _FIELDS[d.case]:
        out["lambda" if name == "lam" else name] = _c(getattr(d.params, name))
    if d.case == DEFORMED:
        out["rho"] = d.params.rho
    if d.transform is not None:
        out["transform"] = [[_c(v) for v in row] for row in d.transform]
    return out


def data_from_json(obj: dict) -> WeierstrassData:
    case = obj["case"]
    if case not in _FIELDS:
        raise DomainError(f"unknown case {case!r}")
    kw = {name: _uc(obj["lambda" if name == "lam" else name]) for name in _FIELDS[case]}
    if case == CASE1:
        params = Case1Params(**kw)
    elif case == CASE2:
        params = Case2Params(**kw)
    else:
        params = DeformedR3(kw["zeta"], float(obj["rho"]), kw["lam"])
    transform = obj.get("transform")
    if transform is not None:
        transform = _mat([[_uc(v) for v in row] for row in transform])
    return WeierstrassData(case, params, transform)
