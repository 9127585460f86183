"""Discrete cylinder-with-squares layouts from extremal transboundary distributions.

Stage 1 solves the transboundary modulus M of the family joining the
inner hole to the outer one; the cylinder height is 2 pi / M and each
hole's square side is the height times its extremal weight.  Stage 2
places squares radially by a discrete Dirichlet potential on the grid
graph with every other hole contracted to a single node.  Stage 3 assigns
angles by transporting the inner-boundary flux angle along the gradient
flow; a final relaxation pushes overlapping squares apart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import cg

from .errors import ConvergenceError, DomainError, TopologyError
from .geometry import TWO_PI, wrap_angle
from .grid import EXTERIOR, INTERIOR, FamilySpec, Grid, discretize
from .modulus import EPS, extremal_distances, transboundary_modulus

L_MIN_FRACTION = 1e-3


@dataclass(frozen=True)
class Square:
    u: float        # log-radius of the center, in (0, h_A)
    theta: float    # angle of the center, in [0, 2 pi)
    side: float


@dataclass
class Layout:
    h_A: float
    squares: dict                       # label -> Square
    residual_density_mass: float = 0.0
    modulus: float = float("nan")
    gap: float = 0.0
    relaxation: float = 0.0
    flags: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)

    @property
    def residual_fraction(self) -> float:
        """Share of 2 pi h_A not covered by squares (density mass over modulus)."""
        return self.residual_density_mass * self.h_A / TWO_PI

    def rotated(self, angle: float) -> "Layout":
        sq = {k: Square(s.u, (s.theta + angle) % TWO_PI, s.side) for k, s in self.squares.items()}
        return Layout(self.h_A, sq, self.residual_density_mass, self.modulus, self.gap, self.relaxation,
                      list(self.flags), list(self.degenerate))

    @classmethod
    def from_cylinder(cls, d) -> "Layout":
        lo = math.log(d.r)
        sq = {k: Square(q.u - lo, q.theta % TWO_PI, q.side) for k, q in d.squares.items()}
        resid = (TWO_PI * d.h_A - d.area_sum()) / d.h_A ** 2
        return cls(d.h_A, sq, resid, TWO_PI / d.h_A)


# ---------------------------------------------------------------------------
# stage 2: potential on the hole-contracted graph

def _contracted_graph(grid: Grid, inner: int, outer: int):
    lab = grid.labels
    ny, nx = lab.shape
    N = ny * nx
    flat = lab.ravel()
    node = np.full(N, -1)
    free_cells = np.flatnonzero(flat == INTERIOR)
    node[free_cells] = np.arange(len(free_cells))
    n = len(free_cells)
    hole_nodes = {}
    for L in grid.hole_labels:
        hole_nodes[L] = n
        node[flat == L] = n
        n += 1
    J, I = np.divmod(np.arange(N), nx)
    a_list, b_list, c_list = [], [], []
    for dj, di in ((0, 1), (1, 0)):
        jj, ii = J + dj, I + di
        ok = ii < nx
        if grid.periodic_y:
            jj = jj % ny
        else:
            ok &= jj < ny
        src = np.flatnonzero(ok)
        dst = jj[src] * nx + ii[src]
        na, nb = node[src], node[dst]
        keep = (na >= 0) & (nb >= 0) & (na != nb)
        cond = grid.hy / grid.hx if di else grid.hx / grid.hy
        a_list.append(na[keep])
        b_list.append(nb[keep])
        c_list.append(np.full(keep.sum(), cond))
    a, b, c = np.concatenate(a_list), np.concatenate(b_list), np.concatenate(c_list)
    return node, n, hole_nodes, a, b, c, free_cells


def dirichlet_potential(grid: Grid, inner: int, outer: int, rtol: float = 1e-8):
    """Potential equal to 0 on ``inner`` and 1 on ``outer``; holes are equipotential nodes."""
    node, n, hole_nodes, a, b, c, free_cells = _contracted_graph(grid, inner, outer)
    W = sp.coo_matrix((np.concatenate([c, c]), (np.concatenate([a, b]), np.concatenate([b, a]))),
                      shape=(n, n)).tocsr()
    deg = np.asarray(W.sum(axis=1)).ravel()
    Lap = sp.diags(deg) - W
    fixed = np.array([hole_nodes[inner], hole_nodes[outer]])
    vals = np.array([0.0, 1.0])
    free = np.setdiff1d(np.arange(n), fixed)
    free = free[deg[free] > 0]
    phi = np.full(n, np.nan)
    phi[fixed] = vals
    Lff = Lap[free][:, free]
    rhs = -(Lap[free][:, fixed] @ vals)
    # Jacobi-preconditioned CG
    Minv = sp.diags(1.0 / Lff.diagonal())
    x, info = cg(Lff, rhs, rtol=rtol, maxiter=20 * len(free) + 100, M=Minv)
    if info != 0:
        raise ConvergenceError("CG did not reach the requested residual", partial=x)
    phi[free] = x
    return phi, node, hole_nodes, (a, b, c), free_cells


# ---------------------------------------------------------------------------
# stage 3: angles

def _flux_angles(grid: Grid, phi, node, hole_nodes, edges, inner: int):
    a, b, c = edges
    n = len(phi)
    pa, pb = phi[a], phi[b]
    ok = np.isfinite(pa) & np.isfinite(pb)
    a, b, c, pa, pb = a[ok], b[ok], c[ok], pa[ok], pb[ok]
    up = np.where(pa <= pb, a, b)
    down = np.where(pa <= pb, b, a)
    flow = c * np.abs(pb - pa)
    inn = hole_nodes[inner]
    # inner boundary: order the adjacent cells by angle
    centers = grid.centers_complex().ravel()
    X, Y = grid.centers()
    cell_of_node = {}
    free_cells = np.flatnonzero(node >= 0)
    for cell in free_cells:
        cell_of_node.setdefault(node[cell], cell)
    first = up == inn
    if grid.coords == "logpolar":
        ang_of = lambda nd: Y.ravel()[cell_of_node[nd]] % TWO_PI  # noqa: E731
    else:
        ctr = centers[grid.labels.ravel() == inner].mean()
        ang_of = lambda nd: np.angle(centers[cell_of_node[nd]] - ctr) % TWO_PI  # noqa: E731
    bnodes = down[first]
    bflow = flow[first]
    agg: dict = {}
    for nd, f in zip(bnodes, bflow):
        agg[nd] = agg.get(nd, 0.0) + f
    order = sorted(agg, key=ang_of)
    tot = sum(agg.values())
    vec = np.zeros(n, complex)
    cum = 0.0
    for nd in order:
        f = agg[nd]
        t = TWO_PI * (cum + 0.5 * f) / tot
        cum += f
        vec[nd] += f * np.exp(1j * t)
    # propagate along increasing potential
    keep = up != inn
    up, down, flow = up[keep], down[keep], flow[keep]
    order_nodes = np.argsort(np.where(np.isfinite(phi), phi, np.inf), kind="stable")
    by_up: dict = {}
    for k in np.argsort(up, kind="stable"):
        by_up.setdefault(int(up[k]), []).append(k)
    for nd in order_nodes:
        nd = int(nd)
        if nd == inn or nd not in by_up or vec[nd] == 0:
            continue
        unit = vec[nd] / abs(vec[nd])
        for k in by_up[nd]:
            vec[down[k]] += flow[k] * unit
    return np.angle(vec) % TWO_PI


# ---------------------------------------------------------------------------
# relaxation

def _overlap(s: Square, t: Square):
    du = t.u - s.u
    dt = float(wrap_angle(t.theta - s.theta))
    half = (s.side + t.side) / 2
    pu, pt = half - abs(du), half - abs(dt)
    return pu, pt, du, dt


def _relax(squares: dict, h_A: float, budget: int = 500):
    sq = dict(squares)
    moved = {k: 0.0 for k in sq}
    flags = []
    for k, s in sq.items():
        if s.side >= h_A:
            flags.append(f"square {k} taller than the cylinder")
            continue
        u = min(max(s.u, s.side / 2), h_A - s.side / 2)
        moved[k] += abs(u - s.u)
        sq[k] = Square(u, s.theta, s.side)
    keys = list(sq)
    for _ in range(budget):
        changed = False
        for x in range(len(keys)):
            for y in range(x + 1, len(keys)):
                s, t = sq[keys[x]], sq[keys[y]]
                pu, pt, du, dt = _overlap(s, t)
                if pu <= 0 or pt <= 0:
                    continue
                changed = True
                if pu <= pt:
                    d = (pu / 2 + 1e-12) * (1 if du >= 0 else -1)
                    s2 = Square(min(max(s.u - d, s.side / 2), h_A - s.side / 2), s.theta, s.side)
                    t2 = Square(min(max(t.u + d, t.side / 2), h_A - t.side / 2), t.theta, t.side)
                else:
                    d = (pt / 2 + 1e-12) * (1 if dt >= 0 else -1)
                    s2 = Square(s.u, (s.theta - d) % TWO_PI, s.side)
                    t2 = Square(t.u, (t.theta + d) % TWO_PI, t.side)
                moved[keys[x]] += abs(s2.u - s.u) + abs(float(wrap_angle(s2.theta - s.theta)))
                moved[keys[y]] += abs(t2.u - t.u) + abs(float(wrap_angle(t2.theta - t.theta)))
                sq[keys[x]], sq[keys[y]] = s2, t2
        if not changed:
            break
    else:
        flags.append("overlap unresolved within relaxation budget")
    return sq, max(moved.values(), default=0.0), flags


# ---------------------------------------------------------------------------
# driver

def uniformize(scene, inner: int = 0, outer: int = 1, h: float = 1 / 64, seed: int | None = None,
               eps: float = EPS, convention: str = "closed", l_min_fraction: float = L_MIN_FRACTION,
               grid: Grid | None = None, radial: str = "extremal") -> Layout:
    """Cylinder height, square sides and positions for the holes of ``scene``.

    ``radial="extremal"`` centers each square between its extremal distance
    to the inner hole and its extremal distance to the outer one;
    ``radial="potential"`` uses the Dirichlet potential of the hole instead.
    """
    if radial not in ("extremal", "potential"):
        raise DomainError(f"unknown radial placement {radial!r}")
    if inner == outer:
        raise DomainError("inner and outer labels must differ")
    for L in (inner, outer):
        if L not in scene.labels:
            raise DomainError(f"scene has no boundary labeled {L}")
    grid = grid if grid is not None else discretize(scene, h, seed=seed)
    fam = FamilySpec(inner, outer, convention)
    res = transboundary_modulus(grid, fam, eps=eps)
    if res.empty_family:
        raise TopologyError(f"holes {inner} and {outer} cannot be connected")
    M = res.value
    h_A = TWO_PI / M
    D = res.distribution.density_mass(grid)
    phi, node, hole_nodes, edges, _ = dirichlet_potential(grid, inner, outer)
    angles = _flux_angles(grid, phi, node, hole_nodes, edges, inner)
    if radial == "extremal":
        dS, dT = extremal_distances(grid, fam, res.distribution)
    l_min = h_A * l_min_fraction
    squares, degenerate = {}, []
    for L, w in sorted(res.weights.items()):
        side = h_A * w
        if radial == "extremal":
            cells = grid.labels == L
            d_in = float(dS[cells].min()) - w
            d_out = float(dT[cells].min())
            u = h_A * (d_in + 1.0 - d_out) / 2
        else:
            u = h_A * phi[hole_nodes[L]]
        squares[L] = Square(float(u), float(angles[hole_nodes[L]]), float(side))
        if side < l_min:
            degenerate.append(L)
    live = {k: v for k, v in squares.items() if k not in degenerate}
    relaxed, moved, flags = _relax(live, h_A)
    squares.update(relaxed)
    flags = ["angles: flux heuristic"] + flags
    if res.gap_estimate > eps:
        flags.append("modulus gap above tolerance")
    return Layout(h_A, squares, D, M, res.gap_estimate, moved, flags, degenerate)


# ---------------------------------------------------------------------------
# validation and comparison

@dataclass
class LayoutReport:
    ok: bool
    area_residual: float        # (sum l^2 + D h_A^2 - 2 pi h_A) / (2 pi h_A)
    min_gap: float
    degenerate: int
    witness: tuple | None
    problems: list


def layout_validate(L: Layout, tol: float = 1e-9, l_min_fraction: float = L_MIN_FRACTION) -> LayoutReport:
    problems = []
    sq = L.squares
    if not L.h_A > 0:
        problems.append("nonpositive height")
    for k, s in sq.items():
        if s.side < 0:
            problems.append(f"square {k} has negative side")
        if s.side > 0 and (s.u - s.side / 2 < -tol or s.u + s.side / 2 > L.h_A + tol):
            problems.append(f"square {k} leaves the band")
    keys = [k for k, s in sq.items() if s.side >= L.h_A * l_min_fraction]
    min_gap, witness = math.inf, None
    for x in range(len(keys)):
        for y in range(x + 1, len(keys)):
            pu, pt, _, _ = _overlap(sq[keys[x]], sq[keys[y]])
            gap = -min(pu, pt)
            if gap < min_gap:
                min_gap = gap
                if gap < -tol:
                    witness = (keys[x], keys[y])
    if witness is not None:
        problems.append(f"squares {witness[0]} and {witness[1]} overlap")
    total = sum(s.side ** 2 for s in sq.values()) + L.residual_density_mass * L.h_A ** 2
    resid = (total - TWO_PI * L.h_A) / (TWO_PI * L.h_A)
    deg = sum(1 for s in sq.values() if s.side < L.h_A * l_min_fraction)
    return LayoutReport(not problems, float(resid), float(min_gap), deg, witness, problems)


@dataclass
class CompareReport:
    discrepancy: float
    rotation: float
    log_offset: float
    per_label: dict
    worst: object


def _disc(L1: Layout, L2: Layout, alpha: float):
    out = {}
    for k, s in L1.squares.items():
        t = L2.squares[k]
        ell = 0.5 * (s.side + t.side)
        out[k] = max(abs(s.u - t.u), ell * abs(float(wrap_angle(t.theta + alpha - s.theta))), abs(s.side - t.side))
    return out


def layout_compare(L1: Layout, L2: Layout) -> CompareReport:
    """Best rotation aligning L2 to L1 and the remaining max discrepancy."""
    if set(L1.squares) != set(L2.squares):
        raise DomainError("layouts have different hole labels")
    if not L1.squares:
        return CompareReport(abs(L1.h_A - L2.h_A), 0.0, 0.0, {}, None)
    keys = list(L1.squares)
    cands = [float(wrap_angle(L1.squares[k].theta - L2.squares[k].theta)) for k in keys]
    cands = cands + [0.0]
    f = lambda a: max(_disc(L1, L2, a).values())  # noqa: E731
    best = min(cands, key=f)
    step = TWO_PI / 64
    r = minimize_scalar(f, bounds=(best - step, best + step), method="bounded", options={"xatol": 1e-12})
    alpha = float(r.x) if r.fun < f(best) else best
    per = _disc(L1, L2, alpha)
    worst = max(per, key=per.get)
    offs = float(np.median([L1.squares[k].u - L2.squares[k].u for k in keys]))
    return CompareReport(float(per[worst]), alpha % TWO_PI, offs, per, worst)
