"""Case 1 period mapping R^12 -> R^8, its Jacobian and the solution family near v*.

Parameter order: (Re b, Im b, Re c, Im c, Re l, Im l, Re m, Im m,
Re y0, Im y0, Re lambda, Im lambda). Residual order: Re of the dh periods on
gamma_1, gamma_2; Re of the phi psi dh periods; then Re, Re, Im, Im of the
horizontal condition A Phi_j + B omega_j + conj(Phi_j) - conj(x0 omega_j).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .elliptic import (LEGENDRE_CONSTANT, PeriodSet,
                       check_reachable, periods, weber_residual)
from .errors import (BranchAmbiguity, BranchLost, DomainError, LeftRegion,
                     NonConvergence, RankDeficient)
from .quadrature import SingularIntegrand, integrate_singular
from .wdata import (Case1Params, Case2Params, case1_data, cg_rho, coeffs_AB,
                    regularity_margin, torus_grid, x0_partials)

NAMES = ("b", "c", "l", "m", "y0", "lam")
DEFAULT_TOL = 1e-13


@dataclass(frozen=True)
class ParamVector:
    v: tuple

    def __post_init__(self):
        arr = tuple(float(t) for t in np.asarray(self.v, dtype=float).ravel())
        if len(arr) != 12:
            raise DomainError("a parameter vector has 12 real entries")
        object.__setattr__(self, "v", arr)
        b, _, l, _, _, lam = self.complex_values()
        if abs(b) < 1e-6 or abs(l) < 1e-6:
            raise DomainError("b and l must be nonzero")
        if abs(lam) < 1e-6 or abs(lam - 1) < 1e-6:
            raise DomainError("lambda must avoid 0 and 1")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.v)

    def complex_values(self):
        a = self.v
        return tuple(complex(a[2 * k], a[2 * k + 1]) for k in range(6))

    def to_params(self) -> Case1Params:
        return Case1Params(*self.complex_values())

    @classmethod
    def from_complex(cls, b, c, l, m, y0, lam) -> "ParamVector":
        vals = []
        for w in (b, c, l, m, y0, lam):
            w = complex(w)
            vals += [w.real, w.imag]
        return cls(tuple(vals))

    @classmethod
    def vstar(cls) -> "ParamVector":
        rho = cg_rho()[0]
        return cls.from_complex(rho, 0, -rho, 0, 0, -1)

    def to_json(self) -> dict:
        return {n: [self.v[2 * k], self.v[2 * k + 1]] for k, n in enumerate(NAMES)}


def _periods_for(lam: complex, tol: float) -> PeriodSet:
    try:
        return periods(lam, tol)
    except BranchAmbiguity as exc:
        raise LeftRegion(str(exc)) from exc


def _residual_from(p: Case1Params, ps: PeriodSet) -> np.ndarray:
    b, c, l, m, y0, x0 = p.b, p.c, p.l, p.m, p.y0, p.x0
    ab = coeffs_AB(p)
    out = np.empty(8)
    for j in (1, 2):
        w, F = ps.omega(j), ps.phi(j)
        out[j - 1] = (c * F - (c * x0 + b * y0) * w).real
        out[j + 1] = (m * F - (m * x0 - l * y0) * w).real
        h = ab.A * F + ab.B * w + F.conjugate() - (x0 * w).conjugate()
        out[j + 3] = h.real
        out[j + 5] = h.imag
    return out


def period_map(v: ParamVector, tol: float = DEFAULT_TOL) -> np.ndarray:
    """The 8 real period residuals at v."""
    p = v.to_params()
    return _residual_from(p, _periods_for(p.lam, tol))


@dataclass(frozen=True)
class JacobianMatrix:
    matrix: np.ndarray
    singular_values: np.ndarray = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (8, 12):
            raise DomainError("the period Jacobian is 8 x 12")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "singular_values", np.linalg.svd(m, compute_uv=False))

    @property
    def rank_ratio(self) -> float:
        return float(self.singular_values[-1] / self.singular_values[0])

    def kernel(self) -> np.ndarray:
        return kernel_directions(self.matrix)


def _holomorphic_jacobian(p: Case1Params, ps: PeriodSet) -> np.ndarray:
    """Chain rule through the holomorphic parameter dependence."""
    b, c, l, m, y0, lam, x0 = p.b, p.c, p.l, p.m, p.y0, p.lam, p.x0
    xl, xy = x0_partials(lam, y0, x0)
    ab = coeffs_AB(p)
    S = x0 * x0 - (lam + 1) * x0 + 2 * lam / 3
    dA = {"b": l * (x0 - (lam + 1) / 3), "c": m, "l": b * (x0 - (lam + 1) / 3), "m": c,
          "y0": b * l * xy, "lam": b * l * (xl - 1 / 3)}
    dB = {"b": -m * y0 + l * S, "c": l * y0 - m * x0, "l": c * y0 + b * S,
          "m": -b * y0 - c * x0,
          "y0": (c * l - b * m) + b * l * (2 * x0 - (lam + 1)) * xy - c * m * xy,
          "lam": b * l * (2 * x0 * xl - x0 - (lam + 1) * xl + 2 / 3) - c * m * xl}
    J = np.zeros((8, 12))
    for j in (1, 2):
        w, F, dw, dF = ps.omega(j), ps.phi(j), ps.d_omega(j), ps.d_phi(j)
        g1 = {"b": -y0 * w, "c": F - x0 * w, "l": 0j, "m": 0j,
              "y0": -(c * xy + b) * w,
              "lam": c * dF - c * xl * w - (c * x0 + b * y0) * dw}
        g2 = {"b": 0j, "c": 0j, "l": y0 * w, "m": F - x0 * w,
              "y0": -(m * xy - l) * w,
              "lam": m * dF - m * xl * w - (m * x0 - l * y0) * dw}
        h = {k: dA[k] * F + dB[k] * w for k in NAMES}
        h["lam"] += ab.A * dF + ab.B * dw
        k3 = {k: 0j for k in NAMES}
        k3["y0"] = -xy * w
        k3["lam"] = dF - xl * w - x0 * dw
        for col, name in enumerate(NAMES):
            du1, dv1 = g1[name], 1j * g1[name]
            du2, dv2 = g2[name], 1j * g2[name]
            du3 = h[name] + k3[name].conjugate()
            dv3 = 1j * h[name] - 1j * k3[name].conjugate()
            J[j - 1, 2 * col], J[j - 1, 2 * col + 1] = du1.real, dv1.real
            J[j + 1, 2 * col], J[j + 1, 2 * col + 1] = du2.real, dv2.real
            J[j + 3, 2 * col], J[j + 3, 2 * col + 1] = du3.real, dv3.real
            J[j + 5, 2 * col], J[j + 5, 2 * col + 1] = du3.imag, dv3.imag
    return J


def inequality_quantities(rho: float, ps: PeriodSet) -> dict:
    """C_j, D_j, e_j, f_j assembled from periods and derivatives at lambda = -1."""
    r2 = rho * rho
    q = {}
    for j in (1, 2):
        w, F, dw, dF = ps.omega(j), ps.phi(j), ps.d_omega(j), ps.d_phi(j)
        q[f"C{j}"] = r2 / 3 * F.real - 2 * r2 / 3 * w.real + 2 * r2 / 3 * dw.real
        q[f"D{j}"] = -r2 / 3 * F.imag + 2 * r2 / 3 * w.imag - 2 * r2 / 3 * dw.imag
        q[f"e{j}"] = dF.real
        q[f"f{j}"] = dF.imag
    return q


def vstar_matrix(rho: float, ps: PeriodSet) -> np.ndarray:
    """Closed-form 12 x 8 matrix of partial derivatives at v* (rows = parameters).

    This is the displayed matrix without its overall factor 2.
    """
    q = inequality_quantities(rho, ps)
    w1, w2, F1, F2 = ps.omega1, ps.omega2, ps.phi1, ps.phi2
    k = 2 * rho / 3
    M = np.zeros((12, 8))
    M[0, 4:] = [k * w1.real, k * w2.real, k * w1.imag, k * w2.imag]
    M[1, 4:] = [-k * w1.imag, -k * w2.imag, k * w1.real, k * w2.real]
    M[2, :2] = [F1.real, F2.real]
    M[3, :2] = [-F1.imag, -F2.imag]
    M[4, 4:] = [-k * w1.real, -k * w2.real, -k * w1.imag, -k * w2.imag]
    M[5, 4:] = [k * w1.imag, k * w2.imag, -k * w1.real, -k * w2.real]
    M[6, 2:4] = [F1.real, F2.real]
    M[7, 2:4] = [-F1.imag, -F2.imag]
    M[8, :4] = [-rho * w1.real, -rho * w2.real, -rho * w1.real, -rho * w2.real]
    M[9, :4] = [rho * w1.imag, rho * w2.imag, rho * w1.imag, rho * w2.imag]
    M[10, 4:] = [q["C1"] + q["e1"], q["C2"] + q["e2"], -q["D1"] - q["f1"], -q["D2"] - q["f2"]]
    M[11, 4:] = [q["D1"] - q["f1"], q["D2"] - q["f2"], q["C1"] - q["e1"], q["C2"] - q["e2"]]
    return M


def simplified_zero_mask() -> np.ndarray:
    """Structural zeros of the simplified 8 x 12 Jacobian at v* (True = zero)."""
    nz = np.zeros((12, 8), dtype=bool)
    for r, cols in {0: (4, 7), 1: (5, 6), 2: (0,), 3: (1,), 4: (4, 7), 5: (5, 6),
                    6: (2,), 7: (3,), 8: (0, 2), 9: (1, 3), 10: (4, 7), 11: (5, 6)}.items():
        nz[r, list(cols)] = True
    return ~nz.T


def jacobian(v: ParamVector, mode: str = "holomorphic", tol: float = DEFAULT_TOL,
             h: float = 1e-6) -> JacobianMatrix:
    """8 x 12 Jacobian of :func:`period_map`.

    ``mode``: ``"analytic-at-vstar"`` (closed form, v must be v*),
    ``"holomorphic"`` (chain rule, any v) or ``"finite-difference"``
    (central differences with step h).
    """
    if mode == "analytic-at-vstar":
        b, c, l, m, y0, lam = v.complex_values()
        rho = b.real
        if not (lam == -1 and c == 0 and m == 0 and y0 == 0 and b.imag == 0
                and l == -b and rho > 0):
            raise DomainError("the closed-form Jacobian is only valid at v*")
        return JacobianMatrix(vstar_matrix(rho, _periods_for(-1 + 0j, tol)).T)
    if mode == "holomorphic":
        p = v.to_params()
        return JacobianMatrix(_holomorphic_jacobian(p, _periods_for(p.lam, tol)))
    if mode == "finite-difference":
        base = v.array
        J = np.zeros((8, 12))
        for i in range(12):
            e = np.zeros(12)
            e[i] = h
            J[:, i] = (period_map(ParamVector(base + e), tol)
                       - period_map(ParamVector(base - e), tol)) / (2 * h)
        return JacobianMatrix(J)
    raise DomainError(f"unknown Jacobian mode {mode!r}")


def kernel_directions(J: np.ndarray, dim: int = 4) -> np.ndarray:
    """Right singular vectors of the ``dim`` smallest singular values (rows).

    Signs are fixed so the largest-magnitude entry of each vector is positive.
    """
    _, _, vt = np.linalg.svd(J)
    K = vt[-dim:].copy()
    for row in K:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return K


@dataclass(frozen=True)
class InequalityReport:
    C1: float
    C2: float
    D1: float
    D2: float
    e1: float
    e2: float
    f1: float
    f2: float
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in ("C1", "C2", "D1", "D2", "e1", "e2", "f1", "f2", "lhs", "rhs")}
        out["margin"] = self.margin
        out["holds"] = self.lhs < self.rhs
        return out


def inequality_check(tol: float = DEFAULT_TOL) -> InequalityReport:
    """Quantities C, D, e, f at lambda = -1 and the comparison |C1+D2| < |e1+f2|."""
    rho = cg_rho()[0]
    q = inequality_quantities(rho, periods(-1, tol))
    return InequalityReport(**q, lhs=abs(q["C1"] + q["D2"]), rhs=abs(q["e1"] + q["f2"]))


def inequality_integrals(tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """|C1+D2| and |e1+f2| from their single-integral forms on the square torus."""
    def g_c(t):
        return 2 * t + (1 - t) / (1 + t)

    def g_e(t):
        return 2 * t + (1 - t) * t / (1 + t)

    def weight(t):
        return 1.0 / np.sqrt(1 + t)

    rho = cg_rho()[0]
    ic = integrate_singular(SingularIntegrand(lambda t: weight(t) * g_c(t), -0.5, -0.5), tol).value.real
    ie = integrate_singular(SingularIntegrand(lambda t: weight(t) * g_e(t), -0.5, -0.5), tol).value.real
    return abs(-2 * rho * rho / 3 * ic), abs(ie)


# ---------------------------------------------------------------------------
# Correction and continuation
# ---------------------------------------------------------------------------

def _check_region(v: ParamVector):
    lam = v.complex_values()[5]
    try:
        check_reachable(lam)
    except BranchAmbiguity as exc:
        raise LeftRegion(str(exc)) from exc


def correct(v0: ParamVector, tol: float = 1e-11, max_iter: int = 12,
            basin: float = 0.1) -> ParamVector:
    """Minimum-norm Gauss-Newton onto P(v) = 0."""
    v = v0
    r = period_map(v)
    if np.max(np.abs(r)) >= basin:
        raise NonConvergence(f"|P(v0)| = {np.max(np.abs(r)):.3e} is outside the Gauss-Newton basin")
    for _ in range(max_iter + 1):
        if np.max(np.abs(r)) <= tol:
            return v
        J = jacobian(v).matrix
        U, s, Vt = np.linalg.svd(J, full_matrices=False)
        if s[-1] < 1e-6 * s[0]:
            raise RankDeficient(f"sigma_8/sigma_1 = {s[-1] / s[0]:.2e}")
        step = -Vt.T @ ((U.T @ r) / s)
        try:
            v = ParamVector(v.array + step)
        except DomainError as exc:
            raise LeftRegion(str(exc)) from exc
        _check_region(v)
        r = period_map(v)
    raise NonConvergence(f"Gauss-Newton stalled at |P| = {np.max(np.abs(r)):.3e}")


def phipsi_variance(p: Case1Params, n_points: int = 50) -> float:
    """Mean squared deviation of phi psi over fixed torus points."""
    _, x, y = torus_grid(p.lam, 8, exclude_radius=0.1)
    x, y = x[:n_points], y[:n_points]
    num = p.l * (y + p.y0) + p.m * (x - p.x0)
    den = p.b * (y - p.y0) + p.c * (x - p.x0)
    vals = num / den
    return float(np.mean(np.abs(vals - vals.mean()) ** 2))


@dataclass(frozen=True)
class TraceNode:
    direction: int
    step: int
    v: ParamVector
    residual: float
    sigma8: float
    margin: float
    phipsi_variance: float

    @property
    def flagged(self) -> bool:
        return not self.margin > 0

    def to_json(self) -> dict:
        return {"direction": self.direction, "step": self.step, "v": self.v.to_json(),
                "residual": self.residual, "sigma8": self.sigma8,
                "regularity_margin": self.margin, "phipsi_variance": self.phipsi_variance,
                "flagged": self.flagged}


def lorentz_directions(rho: float | None = None) -> np.ndarray:
    """Unit tangents at v* of b = rho zeta, l = -rho/zeta for zeta near 1 and 1 + i t."""
    out = np.zeros((2, 12))
    out[0, [0, 4]] = 1.0     # d zeta real: db = rho, dl = rho
    out[1, [1, 5]] = 1.0     # d zeta imaginary
    return out / math.sqrt(2)


def _node(direction: int, step: int, v: ParamVector, margin_grid: int) -> TraceNode:
    res = float(np.max(np.abs(period_map(v, 1e-14))))
    s = jacobian(v).singular_values
    p = v.to_params()
    margin = regularity_margin(case1_data(p), margin_grid)
    return TraceNode(direction, step, v, res, float(s[-1]), margin, phipsi_variance(p))


def trace_family(steps: int = 10, step_size: float = 0.02, directions=None,
                 start: ParamVector | None = None, margin_grid: int = 32,
                 tol: float = 1e-11) -> list[TraceNode]:
    """Predictor-corrector continuation of P(v) = 0 along kernel directions.

    Each direction is followed for ``steps`` nodes; the tangent is re-projected
    onto the local kernel after each step so the branch does not turn back.
    Stops a direction early (keeping earlier nodes) at a family boundary.
    """
    if step_size > 0.05:
        raise DomainError("step_size must not exceed 0.05")
    start = ParamVector.vstar() if start is None else start
    J0 = jacobian(start).matrix
    if directions is None:
        directions = kernel_directions(J0)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    nodes = []
    for k, t in enumerate(directions):
        v, tangent = start, t / np.linalg.norm(t)
        for i in range(1, steps + 1):
            try:
                v_new = correct(ParamVector(v.array + step_size * tangent), tol=tol)
                K = kernel_directions(jacobian(v_new).matrix)
            except (NonConvergence, RankDeficient, LeftRegion, BranchLost, DomainError):
                break
            proj = K.T @ (K @ tangent)
            tangent = proj / np.linalg.norm(proj)
            v = v_new
            nodes.append(_node(k, i, v, margin_grid))
    return nodes


def trace_to_jsonl(nodes: list[TraceNode]) -> str:
    return "".join(json.dumps(n.to_json(), sort_keys=True) + "\n" for n in nodes)


# ---------------------------------------------------------------------------
# Case 2 and the x0 = 0 reduction
# ---------------------------------------------------------------------------

def case2_residual(p: Case2Params, tol: float = DEFAULT_TOL) -> np.ndarray:
    """8 real residuals of the Case 2 period conditions."""
    ps = _periods_for(p.lam, tol)
    a, b, c, x0, lam = p.a, p.b, p.c, p.x0, p.lam
    out = np.empty(8)
    for j in (1, 2):
        w, F = ps.omega(j), ps.phi(j)
        out[j - 1] = (a * F - a * x0 * w).real
        out[j + 1] = (b * F + c * w).real
        e = ((2 * b * (lam + 1) / 3 + c - b * x0) * F - (b * lam / 3 + c * x0) * w
             + w.conjugate() / a)
        out[j + 3] = e.real
        out[j + 5] = e.imag
    return out


def case2_square_params(a: complex, b: complex) -> Case2Params:
    """Case 2 parameters at lambda = -1 solving the four vertical conditions."""
    ps = periods(-1)
    k = -ps.phi1.real / ps.omega1.real      # 2 rho^2 / 3
    a = complex(a) / abs(a)
    b = complex(b)
    return Case2Params(a, b, k * b.conjugate(), -k * a.conjugate() / a, -1)


def case2_lower_bound() -> float:
    """Lower bound for max |rows 5-8| once rows 1-4 hold on the square torus."""
    ps = periods(-1)
    k = -ps.phi1.real / ps.omega1.real
    return ps.omega1.real / math.sqrt(2) * min(abs(k * k - 1 / 3) / (4 * k * k), 0.5)


def case2_scan(n: int = 20, b_max: float = 2.0) -> dict:
    """Rows 5-8 over an n x n grid of b, with arg(a) varying across the grid."""
    grid = (np.arange(n) + 0.5) / n * 2 * b_max - b_max
    worst_vertical = 0.0
    best = math.inf
    for i, br in enumerate(grid):
        for j, bi in enumerate(grid):
            a = complex(math.cos(2 * math.pi * (i * n + j) / (n * n)),
                        math.sin(2 * math.pi * (i * n + j) / (n * n)))
            r = case2_residual(case2_square_params(a, complex(br, bi)))
            worst_vertical = max(worst_vertical, float(np.max(np.abs(r[:4]))))
            best = min(best, float(np.max(np.abs(r[4:]))))
    rho4 = (1.5 * case2_square_params(1, 1).c.real) ** 2
    return {"n": n, "max_rows_1_4": worst_vertical, "min_rows_5_8": best,
            "lower_bound": case2_lower_bound(), "rho4": rho4, "required_rho4": 0.75}


def prop52_check(lam_grid, flag_below: float = 1e-3) -> dict:
    """Weber residual and Legendre determinant over a list of lambda values."""
    rows = []
    for lam in lam_grid:
        lam = complex(lam)
        ps = periods(lam)
        res = abs(weber_residual(lam))
        det = ps.omega1 * ps.phi2 - ps.omega2 * ps.phi1
        rows.append({"lambda": [lam.real, lam.imag], "weber_residual": res,
                     "legendre_det_abs": abs(det), "flagged": res < flag_below})
    flagged = [r["lambda"] for r in rows if r["flagged"]]
    return {"rows": rows, "flagged": flagged,
            "unique_root_at_minus_one": len(flagged) == 1 and
            abs(complex(*flagged[0]) + 1) < 1e-6,
            "min_legendre_det": min(r["legendre_det_abs"] for r in rows),
            "expected_det": abs(LEGENDRE_CONSTANT)}
