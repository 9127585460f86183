"""Discretized domains and connecting path families.

A :class:`Grid` is a 2-d array of cells indexed ``[j, i]`` (j along the
second coordinate).  Cartesian grids cover planar scenes; flat-cylinder
scenes are discretized in log-polar coordinates ``(s, t) = (log|z|, arg z)``
with the angular axis periodic, so every cell is a flat rectangle.

Cell labels: ``INTERIOR`` (-1), ``EXTERIOR`` (-2) or a hole label >= 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import DomainError, ResolutionError
from .geometry import CHORDAL, EUCLIDEAN, FLAT, TWO_PI, MetricKind, metric_length_factor, set_diameter

INTERIOR = -1
EXTERIOR = -2


@dataclass(frozen=True, eq=False)
class Grid:
    labels: np.ndarray          # int64 (ny, nx)
    hx: float
    hy: float
    x0: float                   # lower-left corner of cell [0, 0]
    y0: float
    metric: MetricKind
    coords: str = "cartesian"   # or "logpolar"
    periodic_y: bool = False
    lam: np.ndarray | None = None   # metric length factor per cell (None = 1)
    synthetic: tuple = ()       # labels added by fill_residual

    @property
    def shape(self):
        return self.labels.shape

    @property
    def factor(self) -> np.ndarray:
        return np.ones(self.shape) if self.lam is None else self.lam

    @property
    def cell_area(self) -> np.ndarray:
        return self.hx * self.hy * self.factor ** 2

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    def centers(self):
        ny, nx = self.shape
        X = self.x0 + (np.arange(nx) + 0.5) * self.hx
        Y = self.y0 + (np.arange(ny) + 0.5) * self.hy
        return np.meshgrid(X, Y)

    def centers_complex(self) -> np.ndarray:
        """Cell centers as points of the plane (exp of log-polar centers)."""
        X, Y = self.centers()
        if self.coords == "logpolar":
            return np.exp(X + 1j * Y)
        return X + 1j * Y

    @property
    def hole_labels(self) -> list:
        return sorted(int(v) for v in np.unique(self.labels) if v >= 0)

    def hole_cell_counts(self) -> dict:
        vals, counts = np.unique(self.labels[self.labels >= 0], return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}

    @property
    def interior(self) -> np.ndarray:
        return self.labels == INTERIOR

    def interior_components(self) -> int:
        return _components(self.interior, self.periodic_y)[1]


def _components(mask, periodic_y: bool):
    lab, n = ndimage.label(mask)
    if periodic_y and n > 1:
        # glue first and last rows
        parent = list(range(n + 1))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a
        for a, b in zip(lab[0], lab[-1]):
            if a and b:
                parent[find(a)] = find(b)
        roots = {find(k) for k in range(1, n + 1)}
        remap = np.array([0] + [find(k) for k in range(1, n + 1)])
        lab = remap[lab]
        n = len(roots)
    return lab, n


def _hole_diameter(b, metric) -> float:
    if b.kind == "cstar-square":
        return b.params[2]
    if b.kind in ("square",):
        return b.params[2] * math.sqrt(2)
    if b.kind == "rect":
        return math.hypot(b.params[2], b.params[3])
    if b.kind in ("disk", "circle") and metric is not FLAT:
        return 2 * b.params[2]
    if metric is FLAT and b.kind in ("disk", "circle") and b.params[0] == 0 and b.params[1] == 0:
        return math.inf
    return set_diameter(b.curve, EUCLIDEAN if metric is CHORDAL else metric)


def discretize(scene, h: float, seed: int | None = None, check: bool = True) -> Grid:
    """Classify cell centers of a resolution-``h`` grid.

    Planar scenes get a Cartesian grid padded by one cell around the outer
    boundary (or around all holes when there is no outer curve).  Flat
    cylinder scenes need the inner boundary to be a disk centered at 0 and
    the outer a circle centered at 0; they get a log-polar grid with
    ``round(2 pi / h)`` angular cells.  ``seed`` shifts the grid origin by a
    random sub-cell offset.
    """
    if not h > 0:
        raise DomainError("resolution must be positive")
    offset = np.random.default_rng(seed).uniform(0, 1, size=2) if seed is not None else np.zeros(2)
    metric = scene.metric
    if metric is FLAT:
        o = scene.outer
        inner = [b for b in scene.holes if b.kind in ("disk", "circle") and b.params[:2] == (0.0, 0.0)]
        if o is None or o.kind not in ("disk", "circle") or o.params[:2] != (0.0, 0.0) or not inner:
            raise DomainError("flat scenes need concentric circles as inner hole and outer boundary")
        lo, hi = math.log(inner[0].params[2]), math.log(o.params[2])
        nu = max(1, int(round((hi - lo) / h)))
        nt = max(4, int(round(TWO_PI / h)))
        hu, ht = (hi - lo) / nu, TWO_PI / nt
        x0 = lo - hu
        y0 = offset[1] * ht
        S = x0 + (np.arange(nu + 2) + 0.5) * hu
        T = y0 + (np.arange(nt) + 0.5) * ht
        SS, TT = np.meshgrid(S, T)
        labels = scene.classify_lifted(SS, TT)
        # boundary rows belong to the distinguished circles exactly
        labels[:, 0] = inner[0].label
        labels[:, -1] = o.label if o.label is not None else EXTERIOR
        grid = Grid(labels, hu, ht, x0, y0, FLAT, "logpolar", True, None)
    else:
        if scene.outer is not None:
            v = scene.outer.curve.vertices
        else:
            v = np.concatenate([b.curve.vertices for b in scene.holes])
        xmin, xmax, ymin, ymax = v.real.min(), v.real.max(), v.imag.min(), v.imag.max()
        x0 = xmin - h * (1 + offset[0])
        y0 = ymin - h * (1 + offset[1])
        nx = int(math.ceil((xmax - x0) / h)) + 1
        ny = int(math.ceil((ymax - y0) / h)) + 1
        grid0 = Grid(np.zeros((ny, nx), np.int64), h, h, x0, y0, metric)
        z = grid0.centers_complex()
        labels = scene.classify(z)
        lam = None if metric is EUCLIDEAN else metric_length_factor(z, metric)
        grid = Grid(labels, h, h, x0, y0, metric, "cartesian", False, lam)
    if check:
        _check_resolution(scene, grid, h)
    return grid


def _check_resolution(scene, grid: Grid, h: float):
    counts = grid.hole_cell_counts()
    for b in scene.holes:
        if counts.get(b.label, 0) == 0:
            raise ResolutionError(f"hole {b.label} is not resolved at h={h:g}")
        d = _hole_diameter(b, scene.metric)
        if grid.h > d / 4 * (1 + 1e-9):
            raise ResolutionError(f"h={grid.h:g} exceeds a quarter of the diameter of hole {b.label}")
        _, n = _components(grid.labels == b.label, grid.periodic_y)
        if n != 1:
            raise ResolutionError(f"hole {b.label} is split into {n} cell components")


def fill_residual(grid: Grid, max_block: int | None = None) -> Grid:
    """Cover every interior cell with square k x k blocks of new holes.

    Greedy: scanning cells row-major, each uncovered interior cell starts the
    largest square block of uncovered interior cells (capped by
    ``max_block``).  Used to build hole-dense covers in which every path
    meets holes.
    """
    lab = grid.labels.copy()
    ny, nx = lab.shape
    free = lab == INTERIOR
    nxt = max(grid.hole_labels + [1]) + 1
    kmax = max_block or max(nx, ny)
    # largest square of free cells with lower-left corner at (j, i), by dynamic programming
    new = []
    for j in range(ny):
        for i in range(nx):
            if not free[j, i]:
                continue
            k = 1
            while k < kmax and j + k < ny and i + k < nx and free[j:j + k + 1, i:i + k + 1].all():
                k += 1
            lab[j:j + k, i:i + k] = nxt
            free[j:j + k, i:i + k] = False
            new.append(nxt)
            nxt += 1
    return replace(grid, labels=lab, synthetic=tuple(grid.synthetic) + tuple(new))


# ---------------------------------------------------------------------------
# path families

@dataclass(frozen=True, eq=False)
class FamilySpec:
    """Connecting family between cell sets E and F.

    Selectors: an ``int`` hole label, a rectangle ``(x0, y0, x1, y1)`` in grid
    coordinates (cell centers inside), or a boolean mask of the grid shape.
    ``region``, when given, is a boolean mask of cells paths may use.
    """

    E: object
    F: object
    convention: str = "closed"
    region: np.ndarray | None = None

    def __post_init__(self):
        if self.convention not in ("open", "closed"):
            raise DomainError("endpoint convention must be 'open' or 'closed'")


def select(grid: Grid, sel) -> np.ndarray:
    if isinstance(sel, np.ndarray) and sel.dtype == bool:
        if sel.shape != grid.shape:
            raise DomainError("mask selector has the wrong shape")
        return sel.copy()
    if isinstance(sel, (int, np.integer)):
        m = grid.labels == int(sel)
        if not m.any():
            raise DomainError(f"selector label {sel} has no cells")
        return m
    if isinstance(sel, (tuple, list)) and len(sel) == 4:
        X, Y = grid.centers()
        x0, y0, x1, y1 = map(float, sel)
        return (X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1)
    raise DomainError(f"cannot interpret selector {sel!r}")


def left_right(grid: Grid, scene_box=(0.0, 0.0, 1.0, 1.0)) -> FamilySpec:
    """Side-to-side family of a rectangle [x0,x1] x [y0,y1]: E, F are the pad columns."""
    x0, y0, x1, y1 = scene_box
    X, Y = grid.centers()
    rows = (Y > y0) & (Y < y1)
    E = rows & (X < x0) & (X > x0 - grid.hx)
    F = rows & (X > x1) & (X < x1 + grid.hx)
    return FamilySpec(E, F)
