"""Immersion X = 2 Re int (phi+psi, -i(phi-psi), 1-phi psi, 1+phi psi) dh in R^4_1.

Points of the torus are addressed by the uniformizing coordinate z (dz = dx/y);
the end P sits on the period lattice. All four component forms have zero
residue at P, so integrals in the z-plane are path independent as long as
paths do not run through a lattice point.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .elliptic import Uniformizer
from .errors import (DegreeAmbiguous, DomainError, NonConvergence,
                     PathThroughPole, SearchInconclusive)
from .wdata import (DEFORMED, CGBase, Case2Params, WeierstrassData,
                    _uniformizer, case2_data, lorentz_deform,
                    metric_density_xy, sphere_distance)

SIGNATURE = (1, 1, 1, -1)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _uni(d: WeierstrassData) -> Uniformizer:
    return _uniformizer(complex(d.lam))


def theta(d: WeierstrassData, z) -> np.ndarray:
    """The four holomorphic components of X_z at z, shape (4, ...)."""
    x, y = _uni(d).xy(np.asarray(z, dtype=complex))
    phidh, psidh, dh, phipsidh = d.forms(x, y)
    return np.stack([phidh + psidh, -1j * (phidh - psidh), dh - phipsidh, dh + phipsidh])


# ---------------------------------------------------------------------------
# Path integration
# ---------------------------------------------------------------------------

def _route(u: Uniformizer, a: complex, b: complex, radius: float) -> list[complex]:
    """Polyline a -> b that keeps at least ``radius`` away from the lattice."""
    if u.distance_to_lattice(np.array([a]))[0] <= radius or \
            u.distance_to_lattice(np.array([b]))[0] <= radius:
        raise PathThroughPole("path endpoint lies inside the puncture disk")
    length = abs(b - a)
    if length == 0:
        return [a, b]
    t_hat = (b - a) / length
    # lattice points near the segment
    s_lo, t_lo = u.lattice_coords(np.array([a, b]))
    cand = []
    for m in range(int(math.floor(min(s_lo))) - 1, int(math.ceil(max(s_lo))) + 2):
        for n in range(int(math.floor(min(t_lo))) - 1, int(math.ceil(max(t_lo))) + 2):
            L = m * u.omega1 + n * u.omega2
            s = ((L - a) * t_hat.conjugate()).real
            if -radius < s < length + radius:
                foot = a + s * t_hat
                if abs(foot - L) < radius:
                    cand.append((s, L, foot))
    pts = [a]
    for s, L, foot in sorted(cand, key=lambda c: c[0]):
        off = foot - L
        n_hat = off / abs(off) if abs(off) > 0 else 1j * t_hat
        s_in, s_out = max(s - radius, 0.0), min(s + radius, length)
        r = radius * 1.05
        pts += [a + s_in * t_hat, L + (s_in - s) * t_hat + r * n_hat,
                L + (s_out - s) * t_hat + r * n_hat, a + s_out * t_hat]
    pts.append(b)
    return pts


def _integrate_segments(d: WeierstrassData, a: np.ndarray, b: np.ndarray,
                        tol: float, max_rounds: int = 40) -> np.ndarray:
    """int_a^b theta dz for each segment (a_k, b_k); returns shape (4, K)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out = np.zeros((4, a.size), dtype=complex)
    owner = np.arange(a.size)
    lo, hi = a.copy(), b.copy()
    scale = abs(_uni(d).omega1)

    def rule(p, q):
        mid, half = (p + q) / 2, (q - p) / 2
        z = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = theta(d, z.ravel()).reshape(4, *z.shape)
        return np.einsum("kpn,n->kp", vals, _GL_W) * half[None, :]

    whole = rule(lo, hi)
    for _ in range(max_rounds):
        if owner.size == 0:
            return out
        mid = (lo + hi) / 2
        left, right = rule(lo, mid), rule(mid, hi)
        fine = left + right
        err = np.max(np.abs(fine - whole), axis=0)
        ok = err <= tol * np.maximum(np.abs(hi - lo) / scale, 1e-3)
        np.add.at(out, (slice(None), owner[ok]), fine[:, ok])
        bad = ~ok
        owner = np.concatenate([owner[bad], owner[bad]])
        lo, hi = np.concatenate([lo[bad], mid[bad]]), np.concatenate([mid[bad], hi[bad]])
        whole = np.concatenate([left[:, bad], right[:, bad]], axis=1)
    raise NonConvergence("path quadrature did not reach the requested tolerance")


def default_puncture_radius(d: WeierstrassData) -> float:
    return 0.02 * abs(_uni(d).omega1)


def default_base(d: WeierstrassData) -> complex:
    return _uni(d).omega1 / 2


def path_integrals(d: WeierstrassData, starts, ends, tol: float = 1e-11,
                   puncture_radius: float | None = None) -> np.ndarray:
    """int theta dz along routed paths start_k -> end_k; shape (4, K) complex."""
    u = _uni(d)
    r = default_puncture_radius(d) if puncture_radius is None else puncture_radius
    seg_a, seg_b, who = [], [], []
    for k, (s, e) in enumerate(zip(np.atleast_1d(starts), np.atleast_1d(ends))):
        pts = _route(u, complex(s), complex(e), r)
        for p, q in zip(pts[:-1], pts[1:]):
            if p != q:
                seg_a.append(p)
                seg_b.append(q)
                who.append(k)
    n = len(np.atleast_1d(starts))
    total = np.zeros((4, n), dtype=complex)
    if seg_a:
        vals = _integrate_segments(d, np.array(seg_a), np.array(seg_b), tol)
        np.add.at(total, (slice(None), np.array(who)), vals)
    return total


def immerse(d: WeierstrassData, z: complex, base: complex | None = None,
            tol: float = 1e-11, puncture_radius: float | None = None) -> np.ndarray:
    """X(z) - X(base) along the straight path, detouring around the end."""
    base = default_base(d) if base is None else base
    return 2 * path_integrals(d, [base], [z], tol, puncture_radius)[:, 0].real


def immerse_many(d: WeierstrassData, zs, base: complex | None = None,
                 tol: float = 1e-11, puncture_radius: float | None = None) -> np.ndarray:
    """X at many points (shape (K, 4)); each z is first reduced to the cell around (w1+w2)/2."""
    u = _uni(d)
    base = default_base(d) if base is None else base
    c0 = (u.omega1 + u.omega2) / 2
    zs = c0 + u.reduce(np.asarray(zs, dtype=complex) - c0)
    return 2 * path_integrals(d, np.full(zs.shape, base), zs, tol, puncture_radius).real.T


def loop_residuals(d: WeierstrassData, tol: float = 1e-11) -> np.ndarray:
    """X-periods along the two generators; shape (2, 4)."""
    u = _uni(d)
    starts = np.array([u.omega2 / 2, u.omega1 / 2])
    ends = starts + np.array([u.omega1, u.omega2])
    return 2 * path_integrals(d, starts, ends, tol).real.T


# ---------------------------------------------------------------------------
# Meshes
# ---------------------------------------------------------------------------

@dataclass
class SurfaceMesh:
    z: np.ndarray                 # (V,) complex
    X: np.ndarray                 # (V, 4)
    faces: np.ndarray             # (F, 4) vertex indices
    puncture_radius: float
    grid_index: np.ndarray = field(default=None)   # (V, 2) integer grid coordinates
    signature: tuple = SIGNATURE

    def vertex_map(self) -> dict:
        return {tuple(ij): k for k, ij in enumerate(self.grid_index)}


def sample_mesh(d: WeierstrassData, n: int = 64, puncture_radius: float | None = None,
                tol: float = 1e-11) -> SurfaceMesh:
    """n x n grid on the period cell centred at (w1+w2)/2.

    Grid node (i, j) is c0 + (i/n - 1/2) w1 + (j/n - 1/2) w2, so the grid for n
    contains the grid for n/2. X is accumulated along grid edges from the
    centre, which is itself joined to the base point w1/2.
    """
    if n < 16:
        raise DomainError("n must be at least 16")
    u = _uni(d)
    r = default_puncture_radius(d) if puncture_radius is None else puncture_radius
    c0 = (u.omega1 + u.omega2) / 2
    s = np.arange(n) / n - 0.5
    S, T = np.meshgrid(s, s, indexing="ij")
    Z = c0 + S * u.omega1 + T * u.omega2
    keep = (u.distance_to_lattice(Z.ravel()) > r).reshape(Z.shape)
    h = n // 2
    # spanning tree: centre row outwards, then every column outwards from it
    edges = []
    for i in range(h, n - 1):
        edges.append(((i, h), (i + 1, h)))
    for i in range(h, 0, -1):
        edges.append(((i, h), (i - 1, h)))
    for i in range(n):
        for j in range(h, n - 1):
            edges.append(((i, j), (i, j + 1)))
        for j in range(h, 0, -1):
            edges.append(((i, j), (i, j - 1)))
    edges = [e for e in edges if keep[e[0]] and keep[e[1]]]
    ints = path_integrals(d, [Z[e[0]] for e in edges], [Z[e[1]] for e in edges], tol, r)
    X = np.full((n, n, 4), np.nan)
    X[h, h] = immerse(d, Z[h, h], tol=tol, puncture_radius=r)
    for k, (p, q) in enumerate(edges):     # edges are listed parent-first
        if not np.isnan(X[p][0]):
            X[q] = X[p] + 2 * ints[:, k].real
    keep &= ~np.isnan(X[..., 0])
    idx = -np.ones((n, n), dtype=int)
    idx[keep] = np.arange(int(keep.sum()))
    faces = [(idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1])
             for i in range(n - 1) for j in range(n - 1)
             if keep[i, j] and keep[i + 1, j] and keep[i + 1, j + 1] and keep[i, j + 1]]
    ij = np.argwhere(keep)
    return SurfaceMesh(Z[keep], X[keep], np.array(faces, dtype=int).reshape(-1, 4), r, ij)


def _project(X: np.ndarray, projection) -> np.ndarray:
    if isinstance(projection, str):
        if projection == "drop-X4":
            return X[:, :3]
        if projection == "drop-X3":
            return X[:, [0, 1, 3]]
        raise DomainError(f"unknown projection {projection!r}")
    P = np.asarray(projection, dtype=float)
    if P.shape != (3, 4):
        raise DomainError("a custom projection is a 3 x 4 matrix")
    return X @ P.T


def export_mesh(m: SurfaceMesh, fmt: str = "obj", projection="drop-X4", path=None) -> str:
    """Write the mesh as OBJ (projected to 3D) or CSV (all four coordinates).

    Returns the text; also writes it to ``path`` when given.
    """
    buf = io.StringIO()
    if fmt == "obj":
        for p in _project(m.X, projection):
            buf.write("v " + " ".join(repr(float(c)) for c in p) + "\n")
        for f in m.faces:
            buf.write("f " + " ".join(str(int(k) + 1) for k in f) + "\n")
    elif fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re_z", "im_z", "x1", "x2", "x3", "x4"])
        for z, x in zip(m.z, m.X):
            w.writerow([repr(float(z.real)), repr(float(z.imag))] + [repr(float(c)) for c in x])
    else:
        raise DomainError(f"unknown mesh format {fmt!r}")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def read_mesh_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != ["re_z", "im_z", "x1", "x2", "x3", "x4"]:
        raise DomainError("unexpected CSV header")
    data = np.array([[float(c) for c in r] for r in rows[1:]])
    return data[:, 0] + 1j * data[:, 1], data[:, 2:]


# ---------------------------------------------------------------------------
# Curvature and degree
# ---------------------------------------------------------------------------

def _winding_counts(d: WeierstrassData, w: complex, n: int, sub: int) -> np.ndarray:
    """Winding number of phi - w around each cell of an n x n grid."""
    u = _uni(d)
    off = np.array([0.1234567, 0.3141593]) / n
    m = n * sub
    s = np.arange(m + 1) / m + off[0]
    t = np.arange(m + 1) / m + off[1]
    S, T = np.meshgrid(s, t, indexing="ij")
    Z = S * u.omega1 + T * u.omega2
    x, y = u.xy(Z.ravel())
    pn, pd, _, _ = d.gauss(x, y)
    # arg(phi - w) = arg(pn - w pd) - arg(pd)
    ang = (np.angle(pn - w * pd) - np.angle(pd)).reshape(Z.shape)

    def inc(a, b):
        return np.angle(np.exp(1j * (b - a)))

    du = inc(ang[:-1, :], ang[1:, :])      # steps along s
    dv = inc(ang[:, :-1], ang[:, 1:])      # steps along t
    wind = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            i0, i1, j0, j1 = i * sub, (i + 1) * sub, j * sub, (j + 1) * sub
            tot = (du[i0:i1, j0].sum() + dv[i1, j0:j1].sum()
                   - du[i0:i1, j1].sum() - dv[i0, j0:j1].sum())
            wind[i, j] = tot / (2 * math.pi)
    return wind


def degree(d: WeierstrassData, targets=None, n: int = 48, sub: int = 4, seed: int = 0) -> int:
    """Number of preimages of phi over 3 sphere targets (must agree)."""
    if targets is None:
        rng = np.random.default_rng(seed)
        targets = rng.normal(size=3) + 1j * rng.normal(size=3)
    counts = []
    for w in targets:
        wind = _winding_counts(d, complex(w), n, sub)
        if np.max(np.abs(wind - np.round(wind))) > 1e-6:
            raise DegreeAmbiguous("non-integer winding; refine the grid")
        counts.append(int(np.sum(np.clip(np.round(wind), 0, None))))
    if len(set(counts)) != 1:
        raise DegreeAmbiguous(f"preimage counts disagree: {counts}")
    return counts[0]


def curvature_flux(d: WeierstrassData, radius: float | None = None, m: int = 512) -> float:
    """-int K dM over the torus minus a disk at the end, as a boundary flux.

    With ds = rho |dz|, -K dM = Laplacian(log rho) dx dy, which integrates to
    -(circulation of d(log rho)/dr) on the small circle around the end.
    """
    u = _uni(d)
    r = 0.05 * abs(u.omega1) if radius is None else radius
    ang = 2 * math.pi * np.arange(m) / m
    e = np.exp(1j * ang)
    h = 1e-4 * r

    def log_rho(rr):
        x, y = u.xy(rr * e)
        return 0.5 * np.log(metric_density_xy(d, x, y))

    dr = (log_rho(r + h) - log_rho(r - h)) / (2 * h)
    return float(-np.sum(dr) * r * 2 * math.pi / m)


def total_curvature(d: WeierstrassData, seed: int = 0) -> tuple[int, float]:
    """(deg phi, numerical -int K dM); Jorge-Meeks predicts 4 pi deg phi."""
    return degree(d, seed=seed), curvature_flux(d)


def jorge_meeks(genus: int, ends: int, multiplicities) -> float:
    return 2 * math.pi * (2 * genus - 2 + ends + sum(multiplicities))


# ---------------------------------------------------------------------------
# Self-intersections of deformed Chen-Gackstatter surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntersectionPoint:
    z_plus: complex
    z_minus: complex
    X: tuple
    residual: float

    def to_json(self) -> dict:
        return {"z_plus": [self.z_plus.real, self.z_plus.imag],
                "z_minus": [self.z_minus.real, self.z_minus.imag],
                "X": list(self.X), "residual": self.residual}


def _polish(d: WeierstrassData, z: complex, tol: float, max_iter: int = 30) -> complex:
    for _ in range(max_iter):
        X = immerse(d, z, tol=1e-13)
        th = theta(d, np.array([z]))[:, 0]
        J = np.array([[2 * th[0].real, -2 * th[0].imag],
                      [2 * th[1].real, -2 * th[1].imag]])
        if np.hypot(X[0], X[1]) <= tol:
            return z
        du, dv = np.linalg.solve(J, -X[:2])
        z = z + complex(du, dv)
    raise SearchInconclusive(f"root polish did not converge near z={z}")


def find_self_intersections(theta_: float, tol: float = 1e-9, n: int = 64,
                            rho: float | None = None) -> list[IntersectionPoint]:
    """Self-intersections of the Lorentz-deformed surface with zeta = e^{i theta}.

    Candidates solve X1 = X2 = 0 away from the half-periods; each solution z
    is paired with -z, whose image coincides with it.
    """
    base = CGBase.classical() if rho is None else CGBase(rho)
    d = lorentz_deform(base, complex(math.cos(theta_), math.sin(theta_)))
    u = _uni(d)
    mesh = sample_mesh(d, n)
    W = np.hypot(mesh.X[:, 0], mesh.X[:, 1])
    vmap = mesh.vertex_map()
    cands = []
    for k, (i, j) in enumerate(mesh.grid_index):
        nb = [vmap.get(((i + a) % n, (j + b) % n)) for a in (-1, 0, 1) for b in (-1, 0, 1)
              if a or b]
        if any(q is None for q in nb):
            continue
        if all(W[k] <= W[q] for q in nb):
            cands.append(mesh.z[k])
    half = [u.omega1 / 2, u.omega2 / 2, (u.omega1 + u.omega2) / 2]
    spacing = abs(u.omega1) / n
    roots = []
    for z0 in cands:
        try:
            z = _polish(d, complex(z0), tol)
        except SearchInconclusive:
            continue
        zr = complex(u.reduce(np.array([z]))[0])
        if u.distance_to_lattice(np.array([zr]))[0] < 2 * mesh.puncture_radius:
            continue
        if min(abs(complex(u.reduce(np.array([zr - hp]))[0])) for hp in half) < spacing:
            continue
        if all(abs(complex(u.reduce(np.array([zr - q]))[0])) > 1e-6 for q in roots):
            roots.append(zr)
    out, used = [], set()
    for k, z in enumerate(roots):
        if k in used:
            continue
        partner = None
        for q, z2 in enumerate(roots):
            if q != k and q not in used and abs(complex(u.reduce(np.array([z + z2]))[0])) < 1e-6:
                partner = q
                break
        if partner is None:
            raise SearchInconclusive(f"root {z} has no partner -z")
        used |= {k, partner}
        Xp, Xm = immerse(d, z, tol=1e-13), immerse(d, -z, tol=1e-13)
        res = float(np.max(np.abs(Xp - Xm)))
        out.append(IntersectionPoint(z, roots[partner], tuple(float(c) for c in Xp), res))
    out.sort(key=lambda p: p.X[2])
    return out


# ---------------------------------------------------------------------------
# Symmetry and involution checks
# ---------------------------------------------------------------------------

_UNITS = (1, 1j, -1, -1j)


def _symmetry_applicable(d: WeierstrassData):
    if d.lam != -1 or d.transform is not None:
        raise DomainError("symmetry_check needs square-torus data without a transform")
    if d.case == DEFORMED:
        if abs(abs(d.params.zeta) - 1) > 1e-12:
            raise DomainError("symmetry_check needs |zeta| = 1")
        return
    if d.case == "case1":
        p = d.params
        if p.y0 != 0 or p.x0 != 0 or p.c != 0 or p.m != 0 or p.b.imag != 0 or p.l != -p.b:
            raise DomainError("symmetry_check needs v*-type Case 1 data")
        return
    raise DomainError("symmetry_check is defined for v* and its Lorentz deformations")


def symmetry_check(d: WeierstrassData, n: int = 32, force: bool = False) -> dict:
    """Max deviation |g X(z) - X(T z)| over the 8 elements of D4.

    T runs over z -> eps z and z -> eps conj(z) (eps^4 = 1), which fix the end
    and the centre c0 = (w1+w2)/2 of the square torus; g is the matching
    ambient isometry acting on X - X(c0). ``force`` skips the applicability
    test (used for negative controls).
    """
    if not force:
        _symmetry_applicable(d)
    u = _uni(d)
    c0 = (u.omega1 + u.omega2) / 2
    s = (np.arange(n) + 0.5) / n - 0.5
    S, T = np.meshgrid(s, s, indexing="ij")
    Z = (c0 + S * u.omega1 + T * u.omega2).ravel()
    Z = Z[u.distance_to_lattice(Z) > 0.1 * abs(u.omega1)]
    Xc = immerse(d, c0)
    X = immerse_many(d, Z) - Xc
    out = {}
    for anti in (False, True):
        for eps in _UNITS:
            TZ = eps * (np.conj(Z) if anti else Z)
            Y = immerse_many(d, TZ) - Xc
            Wz = X[:, 0] + 1j * X[:, 1]
            e2 = (eps * eps).real
            if anti:
                Wg = np.conj(eps) * np.conj(Wz)
                g = np.stack([Wg.real, Wg.imag, e2 * X[:, 2], -e2 * X[:, 3]], axis=1)
            else:
                Wg = np.conj(eps) * Wz
                g = np.stack([Wg.real, Wg.imag, e2 * X[:, 2], e2 * X[:, 3]], axis=1)
            name = ("reflect" if anti else "rotate") + f"[{complex(eps)}]"
            out[name] = float(np.max(np.abs(Y - g)))
    out["max"] = max(out.values())
    return out


def involution_pullback_check(p, n: int = 50, seed: int = 0) -> float:
    """Max residual of I*(X_z dz) = -X_z dz for I(x, y) = (x, -y) at seeded points.

    Since I* dz = -dz, the identity holds iff each component coefficient of dz
    takes equal values at (x, y) and (x, -y).
    """
    d = case2_data(p) if isinstance(p, Case2Params) else p
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n)
    y = np.sqrt(x * (x - 1) * (x - d.lam))
    a = np.stack(d.forms(x, y))
    b = np.stack(d.forms(x, -y))
    pn, pd, qn, qd = d.gauss(x, y)
    pn2, pd2, qn2, qd2 = d.gauss(x, -y)
    form_res = np.max(np.abs(a - b) / (1 + np.abs(a)))
    gauss_res = max(np.max(sphere_distance(pn, pd, pn2, pd2)),
                    np.max(sphere_distance(qn, qd, qn2, qd2)))
    return float(max(form_res, gauss_res))


def involution_fixed_points(lam: complex) -> list[tuple[complex, complex]]:
    """Finite fixed points of (x, y) -> (x, -y): the branch points."""
    return [(0j, 0j), (1 + 0j, 0j), (complex(lam), 0j)]
