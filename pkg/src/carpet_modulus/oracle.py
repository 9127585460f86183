"""Exhaustive oracle for tiny grids.

Enumerates every path whose intermediate cells form an induced path of the
hole-contracted cell graph, writes one constraint per path and solves the
whole QP at once as a least-distance problem with ``scipy.optimize.nnls``
(Lawson-Hanson).  Every other path has a constraint row dominating one of
these, so the optimum is the exact discrete modulus.
"""
from __future__ import annotations

import math
import sys

import numpy as np
from scipy.optimize import nnls

from .errors import DomainError, ResourceError
from .grid import INTERIOR, FamilySpec, Grid, select
from .modulus import MassDistribution, ModulusResult

MAX_PATHS = 100_000
MAX_SIDE = 12


def ldp(G: np.ndarray, h: np.ndarray) -> np.ndarray:
    """min ||x|| subject to G x >= h (Lawson-Hanson least-distance programming)."""
    m, n = G.shape
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(n + 1)
    f[-1] = 1.0
    u, _ = nnls(E, f, maxiter=50 * (m + n + 1))
    r = E @ u - f
    if np.linalg.norm(r) < 1e-14:
        raise DomainError("least-distance problem is infeasible")
    return -r[:n] / r[n]


def brute_force_modulus(grid: Grid, fam: FamilySpec, mode: str = "classical", hole_labels=None,
                        max_paths: int = MAX_PATHS) -> ModulusResult:
    if max(grid.shape) > MAX_SIDE + 2:
        raise ResourceError(f"grid {grid.shape} too large for enumeration")
    if grid.hx != grid.hy:
        raise DomainError("the oracle needs square cells")
    h = grid.hx
    lab = grid.labels
    ny, nx = lab.shape
    E = select(grid, fam.E)
    F = select(grid, fam.F)
    region = np.ones(lab.shape, bool) if fam.region is None else fam.region
    closed = fam.convention == "closed" and mode != "carpet"
    if mode == "classical":
        wl = []
    elif mode == "carpet":
        wl = sorted(int(v) for v in np.unique(lab) if v >= 0)
    elif mode == "transboundary":
        if hole_labels is None:
            excl = {s for s in (fam.E, fam.F) if isinstance(s, (int, np.integer))}
            wl = [L for L in sorted(int(v) for v in np.unique(lab) if v >= 0) if L not in excl]
        else:
            wl = sorted(hole_labels)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    density = mode != "carpet"
    lam = grid.factor

    # contracted nodes: ('c', j, i) for interior/endpoint cells, ('h', L) for a weight-bearing hole
    def node_of(j, i):
        L = int(lab[j, i])
        if E[j, i] or F[j, i]:
            return ("c", j, i)
        if L == INTERIOR and region[j, i]:
            return ("c", j, i)
        if L in wl and region[j, i]:
            return ("h", L)
        return None

    adj: dict = {}
    for j in range(ny):
        for i in range(nx):
            a = node_of(j, i)
            if a is None:
                continue
            for dj, di in ((0, 1), (1, 0), (0, -1), (-1, 0)):
                jj, ii = j + dj, i + di
                if grid.periodic_y:
                    jj %= ny
                if not (0 <= jj < ny and 0 <= ii < nx):
                    continue
                b = node_of(jj, ii)
                if b is None or b == a:
                    continue
                adj.setdefault(a, set()).add(b)
                adj.setdefault(b, set()).add(a)

    def is_e(n):
        return n[0] == "c" and E[n[1], n[2]]

    def is_f(n):
        return n[0] == "c" and F[n[1], n[2]]

    # variables
    dcells = [(j, i) for j in range(ny) for i in range(nx)
              if density and lab[j, i] == INTERIOR and (region[j, i] or (closed and (E[j, i] or F[j, i])))
              and (closed or not (E[j, i] or F[j, i]))]
    dindex = {c: k for k, c in enumerate(dcells)}
    hindex = {L: len(dcells) + k for k, L in enumerate(wl)}
    nvar = len(dcells) + len(wl)

    def coeffs(node, endpoint):
        if endpoint and not closed:
            return {}
        if node[0] == "h":
            return {hindex[node[1]]: 1.0}
        j, i = node[1], node[2]
        L = int(lab[j, i])
        if L == INTERIOR and (j, i) in dindex:
            return {dindex[(j, i)]: lam[j, i] * h}
        if L in hindex:
            return {hindex[L]: 1.0}
        return {}

    rows = []
    seen_rows = set()
    count = [0]

    def emit(path):
        count[0] += 1
        if count[0] > max_paths:
            raise ResourceError(f"more than {max_paths} paths")
        row = {}
        for k, n in enumerate(path):
            for v, c in coeffs(n, k == 0 or k == len(path) - 1).items():
                if c == 1.0 and v >= len(dcells):
                    row[v] = 1.0  # each hole label once
                else:
                    row[v] = row.get(v, 0.0) + c
        key = tuple(sorted((v, round(c, 14)) for v, c in row.items()))
        if key not in seen_rows:
            seen_rows.add(key)
            rows.append(row)

    old_limit = sys.getrecursionlimit()

    def extend(path, on_path, blocked):
        last = path[-1]
        for b in sorted(adj.get(last, ())):
            if b in on_path or is_e(b):
                continue
            if is_f(b):
                emit(path + [b])
                continue
            if b in blocked:
                continue  # chord to an earlier intermediate node
            # nodes adjacent to the current intermediate nodes (except last) are blocked
            newly = [x for x in adj.get(last, ()) if x not in blocked] if len(path) > 1 else []
            for x in newly:
                blocked.add(x)
            on_path.add(b)
            path.append(b)
            extend(path, on_path, blocked)
            path.pop()
            on_path.discard(b)
            for x in newly:
                blocked.discard(x)

    starts = sorted(n for n in adj if is_e(n))
    any_path = False
    sys.setrecursionlimit(max(10000, old_limit))
    try:
        for s in starts:
            extend([s], {s}, set())
    finally:
        sys.setrecursionlimit(old_limit)
    any_path = bool(rows) or count[0] > 0
    if not any_path:
        return ModulusResult(0.0, MassDistribution(np.zeros(grid.shape), {L: 0.0 for L in wl}), 0, 0.0, 0,
                             0, mode, empty_family=True)
    if any(not r for r in rows):
        return ModulusResult(math.inf, MassDistribution(np.zeros(grid.shape), {L: 0.0 for L in wl}), 0, 1.0, 0,
                             count[0], mode, infeasible=True)
    # QP in scaled variables y = sqrt(area) * rho
    scale = np.ones(nvar)
    for (j, i), k in dindex.items():
        scale[k] = math.sqrt(grid.hx * grid.hy) * lam[j, i]
    G = np.zeros((len(rows), nvar))
    for r, row in enumerate(rows):
        for v, c in row.items():
            G[r, v] = c / scale[v]
    y = ldp(G, np.ones(len(rows)))
    rho = y / scale
    dens = np.zeros(grid.shape)
    for (j, i), k in dindex.items():
        dens[j, i] = rho[k]
    weights = {L: float(rho[k]) for L, k in hindex.items()}
    slack = G @ y - 1
    return ModulusResult(float(y @ y), MassDistribution(dens, weights), int(np.sum(np.abs(slack) < 1e-9)),
                         float(max(0.0, -slack.min())), 1, count[0], mode)
