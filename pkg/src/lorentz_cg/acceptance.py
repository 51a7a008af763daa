"""The twelve acceptance checks, shared by the ``report`` command and the test suite."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import elliptic as ell
from . import solver, surface, wdata

LAMBDAS = (-1 + 0j, -0.5 + 0j, -2 + 0j, -1 + 0.2j)
THETAS = (math.pi / 6, math.pi / 4, math.pi / 3)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0
    budget: float | None = None

    @property
    def within_budget(self) -> bool:
        return self.budget is None or self.seconds <= self.budget

    def line(self) -> str:
        status = "PASS" if self.passed and self.within_budget else "FAIL"
        return f"[{status}] {self.number:2d}. {self.title} ({self.seconds:.2f}s)"

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title,
                "passed": bool(self.passed), "within_time_budget": self.within_budget,
                "details": self.details}


def _rho():
    g, p = wdata.cg_rho()
    return {"rho_gamma": g, "rho_period": p}, (abs(g - 0.8279) <= 5e-4 and abs(p - 0.8279) <= 5e-4
                                                and abs(g - p) <= 1e-6)


def _legendre():
    res = {str(lam): abs(ell.legendre_residual(ell.periods(lam))) for lam in LAMBDAS}
    return {"residuals": res}, max(res.values()) <= 1e-8


def _reduction():
    worst = 0.0
    for lam in LAMBDAS:
        ps = ell.periods(lam)
        for j in (1, 2):
            direct = ell.alpha_period(2, 0, 0, lam, j)
            worst = max(worst, abs(direct - ell.reduced_x2_period(ps, j)))
    return {"max_abs_difference": worst}, worst <= 1e-8


def _weber():
    at_root = max(abs(ell.weber_residual(-1)), abs(ell.weber_residual(-1, direct=True)))
    roots = {str(l0): ell.weber_root(l0) for l0 in (-1.2, -0.8, -1 + 0.1j)}
    err = max(abs(r + 1) for r in roots.values())
    scan = ell.weber_scan()
    ok = at_root <= 1e-9 and err <= 1e-7 and not scan["other_zeros"] and len(scan["points"]) >= 200
    return {"residual_at_minus_one": at_root,
            "newton_roots": {k: [v.real, v.imag] for k, v in roots.items()},
            "scan_points": len(scan["points"]), "scan_other_zeros": len(scan["other_zeros"]),
            "scan_min_residual": scan["min_residual"]}, ok


def _pmap():
    r = float(np.max(np.abs(solver.period_map(solver.ParamVector.vstar()))))
    return {"residual_inf": r}, r <= 1e-8


def _jacobian():
    v = solver.ParamVector.vstar()
    Ja = solver.jacobian(v, "analytic-at-vstar")
    Jf = solver.jacobian(v, "finite-difference")
    mask = solver.simplified_zero_mask()
    diff = float(np.max(np.abs(Ja.matrix - Jf.matrix)))
    zeros = float(max(np.max(np.abs(Ja.matrix[mask])), np.max(np.abs(Jf.matrix[mask]))))
    ratio = Ja.rank_ratio
    return {"max_entry_difference": diff, "structural_zeros": int(mask.sum()),
            "max_abs_on_zeros": zeros, "sigma8_over_sigma1": ratio,
            "singular_values": Ja.singular_values.tolist()}, \
        diff <= 1e-4 and zeros <= 1e-6 and ratio > 1e-4


def _inequality():
    rep = solver.inequality_check()
    ok = abs(rep.D1) <= 1e-9 and abs(rep.C2) <= 1e-9 and rep.lhs < rep.rhs and rep.margin > 0
    return rep.to_json(), ok


def _trace():
    nodes = solver.trace_family(steps=10, step_size=0.02)
    worst = max(n.residual for n in nodes)
    min_margin = min(n.margin for n in nodes)
    var = max(n.phipsi_variance for n in nodes)
    ok = len(nodes) == 40 and worst <= 1e-9 and min_margin > 0 and var > 1e-4
    return {"roots": len(nodes), "max_residual": worst, "min_margin": min_margin,
            "max_phipsi_variance": var}, ok


def _deformations():
    base = wdata.CGBase.classical()
    rows, ok = {}, True
    for th in THETAS:
        d = wdata.lorentz_deform(base, complex(math.cos(th), math.sin(th)))
        loop = float(np.max(np.abs(surface.loop_residuals(d))))
        margin = wdata.regularity_margin(d, 64)
        deg, flux = surface.total_curvature(d)
        sym = surface.symmetry_check(d, 32)["max"]
        pts = surface.find_self_intersections(th)
        good = (loop <= 1e-7 and margin > 0 and deg == 2 and sym <= 1e-6 and len(pts) == 2
                and all(p.residual <= 1e-7 for p in pts))
        ok &= good
        rows[f"{th:.6f}"] = {"loop_residual": loop, "margin": margin, "degree": deg,
                             "total_curvature": 4 * math.pi * deg, "curvature_flux": flux,
                             "symmetry_deviation": sym, "self_intersections": len(pts)}
    return rows, ok


def _margin_vstar():
    m = wdata.regularity_margin(wdata.case1_data(wdata.Case1Params.vstar()), 64)
    return {"margin": m, "target": math.pi / 2}, abs(m - math.pi / 2) <= 1e-6


def _case2():
    scan = solver.case2_scan(20)
    ok = (scan["max_rows_1_4"] <= 1e-10 and scan["min_rows_5_8"] >= scan["lower_bound"] > 0
          and abs(scan["rho4"] - 0.4699) < 1e-3)
    return scan, ok


def _involution():
    rho = wdata.cg_rho()[0]
    c2 = wdata.Case2Params(np.exp(0.3j), 0.7 - 0.2j, 0.1 + 0.4j, 0.2 - 0.1j, -1)
    c1 = wdata.case1_data(wdata.Case1Params(rho, 0.1, -rho, 0.05j, 0.0, -1))
    r2 = surface.involution_pullback_check(c2, 50, seed=0)
    r1 = surface.involution_pullback_check(c1, 50, seed=0)
    return {"case2_residual": r2, "case1_control": r1}, r2 <= 1e-12 and r1 > 1e-3


CRITERIA = (
    (1, "rho reproduction", _rho, 1.0),
    (2, "Legendre relation", _legendre, 5.0),
    (3, "exact-form reduction", _reduction, None),
    (4, "Weber root", _weber, 60.0),
    (5, "period mapping root at v*", _pmap, 5.0),
    (6, "Jacobian structure and rank", _jacobian, 60.0),
    (7, "integral inequality", _inequality, None),
    (8, "family tracing", _trace, 600.0),
    (9, "Lorentz deformation validity", _deformations, 300.0),
    (10, "regularity margin at v*", _margin_vstar, None),
    (11, "Case 2 square-torus obstruction", _case2, 60.0),
    (12, "involution identity", _involution, None),
)


def run_criterion(number: int) -> CriterionResult:
    num, title, fn, budget = CRITERIA[number - 1]
    t0 = time.perf_counter()
    try:
        details, ok = fn()
    except Exception as exc:            # a crash is a failed criterion, not a crashed report
        details, ok = {"error": f"{type(exc).__name__}: {exc}"}, False
    return CriterionResult(num, title, bool(ok), details, time.perf_counter() - t0, budget)


def run_all() -> list[CriterionResult]:
    return [run_criterion(k) for k in range(1, len(CRITERIA) + 1)]
