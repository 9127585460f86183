"""Discrete classical, transboundary and carpet modulus by constraint generation.

Admissibility of a cell path ``c_0 ... c_k`` (c_0 in E, c_k in F, the
intermediate cells outside E and F) for a mass distribution (rho, rho_i):

* an intermediate interior cell entered by a horizontal move contributes
  ``rho * lam * hx`` (vertical: ``hy``);
* every weight-bearing hole label met by an intermediate cell contributes
  ``rho_i`` once;
* endpoint cells contribute nothing under the open convention; under the
  closed convention they count like intermediate cells, an interior
  endpoint with the mean step ``(hx + hy) / 2``.

Moves are 4-connected.  The QP variables are ``sqrt(area_c) * rho_c`` for
density cells and ``rho_i`` for holes, so the total mass is a plain sum of
squares.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .errors import ConvergenceError, DomainError
from .grid import EXTERIOR, INTERIOR, FamilySpec, Grid, select
from .qp import make_qp

log = logging.getLogger(__name__)

EPS = 1e-3
ITER_CAP = 10_000
_DELTA = 1e-13  # keeps zero-cost edges visible to the shortest-path routine


@dataclass
class MassDistribution:
    density: np.ndarray           # rho per cell (zero off the density cells)
    weights: dict                 # hole label -> rho_i

    def total_mass(self, grid: Grid) -> float:
        return float(np.sum(self.density ** 2 * grid.cell_area)) + float(sum(w * w for w in self.weights.values()))

    def density_mass(self, grid: Grid) -> float:
        return float(np.sum(self.density ** 2 * grid.cell_area))


@dataclass
class ModulusResult:
    value: float
    distribution: MassDistribution
    active_constraints: int
    gap_estimate: float
    iterations: int
    n_paths: int = 0
    mode: str = "classical"
    empty_family: bool = False
    infeasible: bool = False
    paths: list = field(default_factory=list, repr=False)
    elapsed: float = 0.0

    @property
    def weights(self) -> dict:
        return self.distribution.weights

    @property
    def density(self) -> np.ndarray:
        return self.distribution.density


def admissibility_sum(grid: Grid, dist: MassDistribution, path, convention: str = "closed") -> float:
    """Admissibility sum of an explicit cell path ``[(j, i), ...]``."""
    path = [tuple(map(int, c)) for c in path]
    lam = grid.factor
    total = 0.0
    seen = set()
    last = len(path) - 1
    for k, (j, i) in enumerate(path):
        if convention == "open" and k in (0, last):
            continue
        lab = int(grid.labels[j, i])
        if lab >= 0:
            if lab not in seen:
                seen.add(lab)
                total += dist.weights.get(lab, 0.0)
            continue
        if lab != INTERIOR:
            continue
        if k == 0:
            step = 0.5 * (grid.hx + grid.hy)
        else:
            pj, pi = path[k - 1]
            step = grid.hy if pi == i else grid.hx
        total += float(dist.density[j, i]) * lam[j, i] * step
    return total


class _Separation:
    """Graph of cell moves whose edge weights are affine in the mass distribution."""

    def __init__(self, grid: Grid, fam: FamilySpec, weight_labels, density: bool):
        self.grid = grid
        ny, nx = grid.shape
        self.ny, self.nx = ny, nx
        N = ny * nx
        lab = grid.labels.ravel()
        E = select(grid, fam.E).ravel()
        F = select(grid, fam.F).ravel()
        if not E.any() or not F.any():
            raise DomainError("E and F must be nonempty")
        if np.any(E & F):
            raise DomainError("E and F overlap")
        region = np.ones(N, bool) if fam.region is None else np.asarray(fam.region, bool).ravel()
        self.closed = fam.convention == "closed"
        wl = sorted(set(int(v) for v in weight_labels))
        self.weight_labels = wl
        hole_var = {L: k for k, L in enumerate(wl)}
        is_int = lab == INTERIOR
        self.use_density = density
        dens_cells = np.flatnonzero(is_int & region & ~E & ~F) if density else np.zeros(0, int)
        if density and self.closed:
            dens_cells = np.flatnonzero(is_int & (region | E | F))
        self.dens_cells = dens_cells
        nd = len(dens_cells)
        self.nd = nd
        self.nvar = nd + len(wl)
        dvar = np.full(N, -1)
        dvar[dens_cells] = np.arange(nd)
        hvar = np.full(N, -1)
        for L, k in hole_var.items():
            hvar[lab == L] = nd + k
        self.dvar, self.hvar = dvar, hvar
        lamv = grid.factor.ravel()
        area = grid.cell_area.ravel()
        self.scale = np.ones(self.nvar)
        if nd:
            self.scale[:nd] = np.sqrt(area[dens_cells])
        mid = (is_int | (hvar >= 0)) & region & ~E & ~F
        self.E, self.F, self.mid, self.lab = E, F, mid, lab
        # neighbor pairs a -> b
        J, I = np.divmod(np.arange(N), nx)
        src, dst, horiz = [], [], []
        for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            jj, ii = J + dj, I + di
            ok = (ii >= 0) & (ii < nx)
            if grid.periodic_y:
                jj = jj % ny
            else:
                ok &= (jj >= 0) & (jj < ny)
            a = np.flatnonzero(ok)
            b = jj[a] * nx + ii[a]
            src.append(a)
            dst.append(b)
            horiz.append(np.full(len(a), di != 0))
        src, dst, horiz = np.concatenate(src), np.concatenate(dst), np.concatenate(horiz)
        step = np.where(horiz, grid.hx, grid.hy)
        keep = (mid[src] | E[src]) & (mid[dst] | F[dst])
        src, dst, step = src[keep], dst[keep], step[keep]
        # cost of entering dst
        var = np.full(len(src), -1)
        coef = np.zeros(len(src))
        into_int = lab[dst] == INTERIOR
        counts = mid[dst] | (self.closed & F[dst])
        dv = dvar[dst]
        m = into_int & counts & (dv >= 0)
        var[m] = dv[m]
        coef[m] = lamv[dst[m]] * step[m]
        hv = hvar[dst]
        same = (lab[src] == lab[dst]) & (mid[src] | self.closed)
        m = (~into_int) & counts & (hv >= 0) & ~same
        var[m] = hv[m]
        coef[m] = 1.0
        # super source S = N, sink T = N + 1
        S, T = N, N + 1
        e_cells = np.flatnonzero(E)
        f_cells = np.flatnonzero(F)
        evar = np.full(len(e_cells), -1)
        ecoef = np.zeros(len(e_cells))
        if self.closed:
            ei = lab[e_cells] == INTERIOR
            evar[ei] = dvar[e_cells[ei]]
            ecoef[ei] = lamv[e_cells[ei]] * 0.5 * (grid.hx + grid.hy)
            eh = (~ei) & (hvar[e_cells] >= 0)
            evar[eh] = hvar[e_cells[eh]]
            ecoef[eh] = 1.0
            ecoef[evar < 0] = 0.0
        self.src = np.concatenate([src, np.full(len(e_cells), S), f_cells])
        self.dst = np.concatenate([dst, e_cells, np.full(len(f_cells), T)])
        self.var = np.concatenate([var, evar, np.full(len(f_cells), -1)])
        self.coef = np.concatenate([coef, ecoef, np.zeros(len(f_cells))])
        self.horiz_step = (grid.hx, grid.hy)
        self.N = N

    # -- paths ----------------------------------------------------------------
    def row(self, cells) -> dict:
        """Exact constraint row of a path in natural units {var: coefficient}."""
        out: dict = {}
        lam = self.grid.factor.ravel()
        seen = set()
        last = len(cells) - 1
        for k, c in enumerate(cells):
            endpoint = k in (0, last)
            if endpoint and not self.closed:
                continue
            L = int(self.lab[c])
            if L == INTERIOR:
                v = self.dvar[c]
                if v < 0:
                    continue
                if k == 0:
                    st = 0.5 * (self.grid.hx + self.grid.hy)
                else:
                    st = self.grid.hx if (cells[k - 1] // self.nx) == (c // self.nx) else self.grid.hy
                out[v] = out.get(v, 0.0) + lam[c] * st
            elif L >= 0:
                v = self.hvar[c]
                if v >= 0 and v not in seen:
                    seen.add(v)
                    out[v] = 1.0
        return out

    def weights_for(self, rho_nat: np.ndarray) -> sp.csr_matrix:
        w = np.full(len(self.var), _DELTA)
        on = self.var >= 0
        w[on] += self.coef[on] * rho_nat[self.var[on]]
        return sp.csr_matrix((w, (self.src, self.dst)), shape=(self.N + 2, self.N + 2))

    def shortest(self, rho_nat: np.ndarray, k_paths: int, eps: float):
        G = self.weights_for(rho_nat)
        S, T = self.N, self.N + 1
        dS, pS = dijkstra(G, indices=S, return_predecessors=True)
        if not np.isfinite(dS[T]):
            return None, []
        dT, pT = dijkstra(G.T.tocsr(), indices=T, return_predecessors=True)

        def build(c):
            head = []
            x = c
            while x != S and x >= 0:
                head.append(x)
                x = pS[x]
            head.reverse()
            tail = []
            x = pT[c]
            while x != T and x >= 0:
                tail.append(x)
                x = pT[x]
            return head + tail

        best = build(pT[S]) if pT[S] >= 0 else None
        best = best if best else build(int(pS[T]))
        through = dS[:self.N] + dT[:self.N]
        cand = np.flatnonzero(through < 1 - eps)
        cand = cand[np.argsort(through[cand], kind="stable")]
        used = np.zeros(self.N, bool)
        paths = []
        for c in cand:
            if len(paths) >= k_paths:
                break
            if used[c]:
                continue
            p = build(int(c))
            used[p] = True
            paths.append(p)
        return best, paths


def _solve(grid: Grid, fam: FamilySpec, weight_labels, density: bool, mode: str,
           eps: float = EPS, iter_cap: int = ITER_CAP, batch: int = 256, keep_paths: bool = False,
           initial_paths=(), qp_method: str = "interior-point", prune_above: int = 1000) -> ModulusResult:
    t0 = time.perf_counter()
    prob = _Separation(grid, fam, weight_labels, density)
    qp = make_qp(prob.nvar, qp_method)
    pool: dict = {}
    keys: list = []          # pool row -> path key
    n_pruned = 0
    paths_kept = []

    def add(paths):
        rows, cols, vals = [], [], []
        new = 0
        for p in paths:
            key = tuple(p)
            if key in pool:
                continue
            row = prob.row(p)
            if not row:
                return False
            pool[key] = len(pool)
            keys.append(key)
            paths_kept.append(p)
            for v, cval in row.items():
                rows.append(new)
                cols.append(v)
                vals.append(cval / prob.scale[v])
            new += 1
        if new:
            qp.add_rows(sp.csr_matrix((vals, (rows, cols)), shape=(new, prob.nvar)))
        return True

    def result(y, gap, it, empty=False, infeasible=False):
        rho = y / prob.scale if prob.nvar else np.zeros(0)
        dens = np.zeros(grid.shape)
        if prob.nd:
            dens.ravel()[prob.dens_cells] = rho[:prob.nd]
        weights = {L: float(rho[prob.nd + k]) for k, L in enumerate(prob.weight_labels)}
        dist = MassDistribution(dens, weights)
        value = math.inf if infeasible else float(y @ y) if prob.nvar else 0.0
        return ModulusResult(value, dist, int(qp.passive.sum()), gap, it, len(pool) + n_pruned, mode, empty, infeasible,
                             paths_kept if keep_paths else [], time.perf_counter() - t0)

    if initial_paths:
        if not add(initial_paths):
            return result(np.zeros(prob.nvar), 1.0, 0, infeasible=True)
    y = np.zeros(prob.nvar)
    for it in range(1, iter_cap + 1):
        if qp.m:
            y = qp.solve()
            if qp.m > prune_above:
                # slack rows without multiplier do not shape the optimum; separation re-finds them if needed
                keep = qp.passive | (qp.A @ y - 1.0 < 1e-6)
                if not keep.all():
                    keep = qp.keep_rows(keep)
                    for k in np.flatnonzero(~keep):
                        del pool[keys[k]]
                    keys[:] = [k for k, f in zip(keys, keep) if f]
                    n_pruned += int((~keep).sum())
        rho = y / prob.scale if prob.nvar else np.zeros(0)
        best, paths = prob.shortest(rho, batch, eps)
        if best is None:
            return result(np.zeros(prob.nvar), 0.0, it, empty=True)
        row = prob.row(best)
        adm = sum(c * rho[v] for v, c in row.items())
        gap = 1.0 - adm
        if not row:
            return result(y, gap, it, infeasible=True)
        if gap <= eps:
            log.debug("converged after %d rounds, %d paths", it, len(pool))
            return result(y, gap, it)
        if not paths:
            paths = [best]
        if not add(paths):
            return result(y, gap, it, infeasible=True)
    raise ConvergenceError(f"no convergence in {iter_cap} rounds", partial=result(y, gap, iter_cap))


def extremal_distances(grid: Grid, fam: FamilySpec, dist: MassDistribution, weight_labels=None):
    """Admissibility length of the cheapest path from E to each cell and from each cell to F.

    ``dS`` includes the cost of entering the cell (its hole toll for a hole
    cell); ``dT`` excludes it.  Both come back in grid shape.
    """
    wl = _default_weight_labels(grid, fam) if weight_labels is None else list(weight_labels)
    prob = _Separation(grid, fam, wl, True)
    rho = np.zeros(prob.nvar)
    rho[:prob.nd] = dist.density.ravel()[prob.dens_cells]
    for k, L in enumerate(prob.weight_labels):
        rho[prob.nd + k] = dist.weights.get(L, 0.0)
    G = prob.weights_for(rho)
    dS = dijkstra(G, indices=prob.N)[:prob.N]
    dT = dijkstra(G.T.tocsr(), indices=prob.N + 1)[:prob.N]
    return dS.reshape(grid.shape), dT.reshape(grid.shape)


def classical_modulus(grid: Grid, fam: FamilySpec, eps: float = EPS, iter_cap: int = ITER_CAP,
                      **kw) -> ModulusResult:
    """Density-only modulus; every hole cell is an obstacle."""
    return _solve(grid, fam, [], True, "classical", eps, iter_cap, **kw)


def _default_weight_labels(grid: Grid, fam: FamilySpec):
    excl = {s for s in (fam.E, fam.F) if isinstance(s, (int, np.integer))}
    return [L for L in grid.hole_labels if L not in excl]


def transboundary_modulus(grid: Grid, fam: FamilySpec, hole_labels=None, eps: float = EPS,
                          iter_cap: int = ITER_CAP, density: bool = True, **kw) -> ModulusResult:
    """Density plus one weight per hole in ``hole_labels``.

    By default every hole except those used as E/F selectors carries weight;
    holes outside ``hole_labels`` are obstacles.  ``density=False`` fixes the
    density at zero (this is the carpet-modulus problem).
    """
    labels = _default_weight_labels(grid, fam) if hole_labels is None else list(hole_labels)
    missing = set(labels) - set(grid.hole_labels)
    if missing:
        raise DomainError(f"unknown hole labels {sorted(missing)}")
    mode = "transboundary" if density else "carpet"
    return _solve(grid, fam, labels, density, mode, eps, iter_cap, **kw)


def carpet_modulus(grid: Grid, fam: FamilySpec, eps: float = EPS, iter_cap: int = ITER_CAP,
                   **kw) -> ModulusResult:
    """Weights only, every hole label a variable, open-path convention."""
    if fam.convention != "open":
        fam = FamilySpec(fam.E, fam.F, "open", fam.region)
    return _solve(grid, fam, grid.hole_labels, False, "carpet", eps, iter_cap, **kw)


def modulus(grid: Grid, fam: FamilySpec, mode: str = "classical", **kw) -> ModulusResult:
    if mode == "classical":
        return classical_modulus(grid, fam, **kw)
    if mode == "transboundary":
        return transboundary_modulus(grid, fam, **kw)
    if mode == "carpet":
        return carpet_modulus(grid, fam, **kw)
    raise DomainError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# profiles and suites

def _raster_segment(grid: Grid, allowed: np.ndarray, rng, max_len: int):
    ny, nx = grid.shape
    cells = np.argwhere(allowed)
    j, i = cells[rng.integers(len(cells))]
    ang = rng.uniform(0, 2 * math.pi)
    n = int(rng.integers(2, max_len + 1))
    out = []
    for k in range(n):
        jj = int(round(j + k * math.sin(ang)))
        ii = int(round(i + k * math.cos(ang)))
        if not (0 <= jj < ny and 0 <= ii < nx) or not allowed[jj, ii]:
            break
        if out and abs(out[-1][0] - jj) + abs(out[-1][1] - ii) == 2:
            # keep the set 4-connected
            corner = (out[-1][0], ii)
            if not allowed[corner]:
                break
            out.append(corner)
        out.append((jj, ii))
    return out


def loewner_profile(grid: Grid, trials: int = 50, seed: int = 0, max_len: int | None = None,
                    eps: float = 1e-2):
    """Scatter of (relative distance, classical modulus) for random disjoint
    grid continua, plus the lower envelope as a nonincreasing step function."""
    from .geometry import relative_distance

    rng = np.random.default_rng(seed)
    interior = grid.interior
    ny, nx = grid.shape
    max_len = max_len or max(3, min(ny, nx) // 3)
    pts = grid.centers_complex()
    out = []
    attempts = 0
    while len(out) < trials and attempts < 50 * trials:
        attempts += 1
        E = _raster_segment(grid, interior, rng, max_len)
        if len(E) < 2:
            continue
        Em = np.zeros(grid.shape, bool)
        Em[tuple(np.array(E).T)] = True
        grown = Em | np.roll(Em, 1, 0) | np.roll(Em, -1, 0) | np.roll(Em, 1, 1) | np.roll(Em, -1, 1)
        F = _raster_segment(grid, interior & ~grown, rng, max_len)
        if len(F) < 2:
            continue
        Fm = np.zeros(grid.shape, bool)
        Fm[tuple(np.array(F).T)] = True
        assert not np.any(Em & Fm)
        delta = relative_distance(pts[Em], pts[Fm], grid.metric if grid.coords == "cartesian" else "flat")
        res = classical_modulus(grid, FamilySpec(Em, Fm, "open"), eps=eps)
        out.append((float(delta), float(res.value)))
    out.sort()
    env = []
    cur = math.inf
    for d, m in out:
        cur = min(cur, m)
        env.append((d, cur))
    return out, env


def modulus_monotonicity_suite(grid: Grid, fam: FamilySpec | None = None, eps: float = 1e-6) -> dict:
    """Paired solver runs checking the monotonicity properties of modulus."""
    if fam is None:
        cols = np.flatnonzero(grid.interior.any(axis=0))
        E = np.zeros(grid.shape, bool)
        F = np.zeros(grid.shape, bool)
        E[:, cols[0]] = grid.interior[:, cols[0]]
        F[:, cols[-1]] = grid.interior[:, cols[-1]]
        fam = FamilySpec(E, F, "closed")
    full = classical_modulus(grid, fam, eps=eps, keep_paths=True)
    # (a1) fewer constraints: the QP over 10 of the generated paths
    # one round: the pool QP is solved on the seeded paths, then the cap trips
    try:
        sub = _solve(grid, fam, [], True, "classical", eps, 1, initial_paths=full.paths[:10])
    except ConvergenceError as e:
        sub = e.partial
    # (a2) subfamily: paths confined to the lower half of the rows
    ny = grid.shape[0]
    region = np.zeros(grid.shape, bool)
    region[: max(1, ny // 2)] = True
    try:
        half = classical_modulus(grid, FamilySpec(fam.E, fam.F, fam.convention, region), eps=eps)
        half_val = half.value
    except DomainError:
        half_val = 0.0
    # (b, c) on the hole-avoiding family
    avoid = grid.labels < 0
    fam_avoid = FamilySpec(fam.E, fam.F, fam.convention, avoid | select(grid, fam.E) | select(grid, fam.F))
    cl = classical_modulus(grid, fam_avoid, eps=eps)
    tb = transboundary_modulus(grid, fam_avoid, hole_labels=grid.hole_labels, eps=eps)
    tb_none = transboundary_modulus(grid, fam_avoid, hole_labels=[], eps=eps)
    again = classical_modulus(grid, fam, eps=eps)
    tol = 1e-9 * max(1.0, full.value)
    return {
        "full": full.value,
        "ten_path_subfamily": sub.value,
        "region_subfamily": half_val,
        "subfamily_le_full": sub.value <= full.value + tol and half_val <= full.value * (1 + 10 * eps) + tol,
        "transboundary_le_classical": tb.value <= cl.value * (1 + 10 * eps) + tol,
        "more_weights_not_larger": tb.value <= tb_none.value * (1 + 10 * eps) + tol,
        "deterministic": again.value == full.value,
    }
