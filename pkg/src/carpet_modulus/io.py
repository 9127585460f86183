"""Scene files, JSON/CSV reports and SVG renderings.

All JSON goes through :func:`dumps`, which rounds floats to 12 significant
digits and keeps insertion order, so equal inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .carpets import Boundary, Scene
from .errors import DomainError
from .geometry import TWO_PI, MetricKind

SCENE_VERSION = "1"
LAYOUT_VERSION = "1"
RESULT_VERSION = "1"


class SceneFileError(DomainError):
    """Malformed or unsupported scene file."""


# ---------------------------------------------------------------------------
# number formatting

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    if isinstance(x, complex):
        return [_clean(x.real), _clean(x.imag)]
    return x


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


# ---------------------------------------------------------------------------
# scenes

def scene_to_json(scene: Scene) -> dict:
    return {
        "version": SCENE_VERSION,
        "metric": scene.metric.value,
        "outer": None if scene.outer is None else scene.outer.to_json(),
        "holes": [b.to_json() for b in scene.holes],
    }


def _boundary(d, where: str, outer: bool = False) -> Boundary:
    if isinstance(d, list):  # bare vertex list
        d = {"label": None, "vertices": d}
    if not isinstance(d, dict):
        raise SceneFileError(f"{where}: expected an object or a vertex list")
    label = d.get("label")
    if label is None and not outer:
        raise SceneFileError(f"{where}: missing label")
    if label is not None and (not isinstance(label, int) or isinstance(label, bool)):
        raise SceneFileError(f"{where}: label must be an integer")
    try:
        if "vertices" in d:
            xy = np.asarray(d["vertices"], float)
            if xy.ndim != 2 or xy.shape[1] != 2:
                raise SceneFileError(f"{where}: vertices must be [x, y] pairs")
            return Boundary(label, "polygon", tuple(xy.ravel()))
        if "kind" in d and "params" in d:
            return Boundary(label, str(d["kind"]), tuple(float(p) for p in d["params"]))
    except SceneFileError:
        raise
    except (DomainError, TypeError, ValueError) as e:
        raise SceneFileError(f"{where}: {e}") from e
    raise SceneFileError(f"{where}: needs 'vertices' or 'kind' and 'params'")


def scene_from_json(d) -> Scene:
    if not isinstance(d, dict):
        raise SceneFileError("scene file must hold a JSON object")
    if str(d.get("version")) != SCENE_VERSION:
        raise SceneFileError(f"unsupported scene version {d.get('version')!r}")
    try:
        metric = MetricKind.parse(d.get("metric", "euclidean"))
    except ValueError as e:
        raise SceneFileError(f"unknown metric {d.get('metric')!r}") from e
    outer = None if d.get("outer") is None else _boundary(d["outer"], "outer", outer=True)
    holes = d.get("holes", [])
    if not isinstance(holes, list):
        raise SceneFileError("holes must be a list")
    bs = tuple(_boundary(h, f"holes[{k}]") for k, h in enumerate(holes))
    try:
        return Scene(outer, bs, metric).validate()
    except DomainError as e:
        raise SceneFileError(str(e)) from e


def write_scene(scene: Scene, path) -> None:
    Path(path).write_text(dumps(scene_to_json(scene)))


def read_scene(path) -> Scene:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SceneFileError(f"cannot read {path}: {e}") from e
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneFileError(f"{path}: invalid JSON ({e})") from e
    return scene_from_json(d)


# ---------------------------------------------------------------------------
# reports

def result_to_json(res, grid=None, timing: bool = False) -> dict:
    out = {
        "version": RESULT_VERSION,
        "mode": res.mode,
        "value": res.value,
        "gap_estimate": res.gap_estimate,
        "iterations": res.iterations,
        "n_paths": res.n_paths,
        "active_constraints": res.active_constraints,
        "empty_family": res.empty_family,
        "infeasible": res.infeasible,
        "weights": {str(k): v for k, v in sorted(res.weights.items())},
    }
    if grid is not None:
        out["density_mass"] = res.distribution.density_mass(grid)
        out["grid"] = {"shape": list(grid.shape), "hx": grid.hx, "hy": grid.hy, "coords": grid.coords}
    if timing:
        out["elapsed"] = res.elapsed
    return out


def layout_to_json(L, report=None) -> dict:
    out = {
        "version": LAYOUT_VERSION,
        "h_A": L.h_A,
        "modulus": L.modulus,
        "gap": L.gap,
        "residual_density_mass": L.residual_density_mass,
        "residual_fraction": L.residual_fraction,
        "relaxation": L.relaxation,
        "squares": [{"label": k, "u": s.u, "theta": s.theta, "side": s.side} for k, s in sorted(L.squares.items())],
        "degenerate": sorted(L.degenerate),
        "flags": list(L.flags),
    }
    if report is not None:
        out["validation"] = {
            "ok": report.ok,
            "area_residual": report.area_residual,
            "min_gap": report.min_gap,
            "degenerate": report.degenerate,
            "problems": list(report.problems),
        }
    return out


def layout_from_json(d):
    from .uniformizer import Layout, Square

    if str(d.get("version")) != LAYOUT_VERSION:
        raise SceneFileError(f"unsupported layout version {d.get('version')!r}")
    sq = {int(s["label"]): Square(float(s["u"]), float(s["theta"]), float(s["side"])) for s in d["squares"]}
    return Layout(float(d["h_A"]), sq, float(d.get("residual_density_mass", 0.0)),
                  float(d.get("modulus", "nan")), float(d.get("gap", 0.0)), float(d.get("relaxation", 0.0)),
                  list(d.get("flags", [])), list(d.get("degenerate", [])))


def to_csv(rows, header) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# SVG

def layout_svg(L, width: float = 800.0) -> str:
    """Unrolled cylinder: theta runs left to right over [0, 2 pi), log-radius bottom to top."""
    sx = width / TWO_PI
    H = L.h_A * sx
    pad = 10.0

    def X(theta):
        return pad + theta * sx

    def Y(u):
        return pad + H - u * sx

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 2 * pad:.2f}" height="{H + 2 * pad:.2f}">',
        f'<rect x="{pad:.2f}" y="{pad:.2f}" width="{width:.2f}" height="{H:.2f}" fill="white" stroke="black"/>',
        # seam at theta = 0 (the left and right edges are glued)
        f'<line x1="{pad:.2f}" y1="{pad:.2f}" x2="{pad:.2f}" y2="{pad + H:.2f}" stroke="red" '
        'stroke-dasharray="4,3" stroke-width="2"/>',
    ]
    for k, s in sorted(L.squares.items()):
        if k in L.degenerate:
            continue
        a = s.theta - s.side / 2
        pieces = [(a, s.side)]
        if a < 0:
            pieces = [(a + TWO_PI, -a), (0.0, s.side + a)]
        elif a + s.side > TWO_PI:
            pieces = [(a, TWO_PI - a), (0.0, a + s.side - TWO_PI)]
        for t0, w in pieces:
            parts.append(f'<rect x="{X(t0):.3f}" y="{Y(s.u + s.side / 2):.3f}" width="{w * sx:.3f}" '
                         f'height="{s.side * sx:.3f}" fill="#8ab" stroke="#234"><title>{k}</title></rect>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
