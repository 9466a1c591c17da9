"""Waveguide scenes: a bounded rectilinear junction glued to straight channels.

A scene consists of a counter-clockwise junction polygon, optional polygonal
Dirichlet obstacles inside it, and P semi-infinite straight channels ("ends").
Each end is attached to one junction edge; its outward axis is the outward
normal of that edge and its local coordinates are

    y in (0, width)   across the channel, measured along the attach edge,
    t >= 0            along the axis, t = 0 on the attach edge.

Truncating every end at t = R produces the bounded computational domain with
P artificial cross-section segments, one per end.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import GeometryError, InvalidRadiusError

DIRICHLET = "dirichlet"

_TOL = 1e-12


@dataclass(frozen=True)
class CrossSection:
    """Cross-section of a straight channel: an interval of given width."""

    width: float
    boundary_condition: str = DIRICHLET


@dataclass(frozen=True, eq=False)
class CylindricalEnd:
    """Semi-infinite straight channel attached to one junction edge.

    ``origin`` is the point (y, t) = (0, 0); ``axis`` the outward unit axis;
    ``y_dir`` the unit vector along the attach edge so that (y_dir, axis) is
    the local frame.
    """

    index: int
    cross_section: CrossSection
    origin: np.ndarray
    axis: np.ndarray
    y_dir: np.ndarray
    collar_length: float
    attach_edge: int | None = None

    @property
    def width(self) -> float:
        return self.cross_section.width

    def local_coords(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (y, t) coordinates of global points, shape-preserving."""
        p = np.atleast_2d(np.asarray(points, dtype=float)) - self.origin
        return p @ self.y_dir, p @ self.axis

    def global_point(self, y: float, t: float) -> np.ndarray:
        return self.origin + y * self.y_dir + t * self.axis

    def is_axis_aligned(self) -> bool:
        return bool(np.min(np.abs(self.axis)) < _TOL)


@dataclass(frozen=True, eq=False)
class WaveguideScene:
    """Junction polygon + ends + obstacles.  Immutable after construction."""

    junction: np.ndarray
    ends: tuple[CylindricalEnd, ...]
    obstacles: tuple[np.ndarray, ...] = ()
    name: str = "scene"


@dataclass(frozen=True, eq=False)
class GammaSegment:
    """Artificial cross-section {t^p = R} of one truncated end."""

    end_index: int
    p0: np.ndarray
    p1: np.ndarray
    width: float


@dataclass(frozen=True, eq=False)
class TruncatedDomain:
    """Scene with every end cut at t = R."""

    scene: WaveguideScene
    R: float
    gamma_segments: tuple[GammaSegment, ...]

    def boundary_vertices(self) -> np.ndarray:
        """Junction vertices plus the corners of each truncated end."""
        pts = [np.asarray(self.scene.junction, dtype=float)]
        for end in self.scene.ends:
            pts.append(
                np.vstack(
                    [end.global_point(0.0, self.R), end.global_point(end.width, self.R)]
                )
            )
        return np.vstack(pts)

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Closed-region membership test for an array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = points_in_polygon(pts, self.scene.junction, include_boundary=tol)
        for end in self.scene.ends:
            y, t = end.local_coords(pts)
            inside |= (
                (y >= -tol) & (y <= end.width + tol) & (t >= -tol) & (t <= self.R + tol)
            )
        for obs in self.scene.obstacles:
            inside &= ~points_in_polygon(pts, obs, include_boundary=-tol)
        return inside


# ---------------------------------------------------------------------------
# polygon utilities
# ---------------------------------------------------------------------------

def polygon_signed_area(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_is_rectilinear(vertices: np.ndarray, tol: float = _TOL) -> bool:
    v = np.asarray(vertices, dtype=float)
    d = np.roll(v, -1, axis=0) - v
    return bool(np.all((np.abs(d[:, 0]) < tol) | (np.abs(d[:, 1]) < tol)))


def points_in_polygon(
    points: np.ndarray, vertices: np.ndarray, include_boundary: float = 0.0
) -> np.ndarray:
    """Even-odd crossing test, vectorized over points.

    ``include_boundary`` > 0 treats points within that distance of an edge as
    inside; < 0 treats them as outside; 0 leaves boundary points undefined.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    tol = abs(include_boundary)
    for i in range(n):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % n]
        cond = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= cond & (x < np.where(cond, xint, np.inf))
        if tol > 0.0:
            dx, dy = x2 - x1, y2 - y1
            L2 = dx * dx + dy * dy
            s = np.clip(((x - x1) * dx + (y - y1) * dy) / max(L2, _TOL), 0.0, 1.0)
            dist2 = (x1 + s * dx - x) ** 2 + (y1 + s * dy - y) ** 2
            on_edge |= dist2 <= tol * tol
    if include_boundary > 0.0:
        inside |= on_edge
    elif include_boundary < 0.0:
        inside &= ~on_edge
    return inside


def _segments_properly_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def polygon_is_simple(vertices: np.ndarray) -> bool:
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    for i in range(n):
        a1, a2 = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = v[j], v[(j + 1) % n]
            if _segments_properly_intersect(a1, a2, b1, b2):
                return False
    return True


# ---------------------------------------------------------------------------
# scene construction
# ---------------------------------------------------------------------------

def end_from_edge(
    junction: np.ndarray,
    edge_index: int,
    collar_length: float,
    index: int,
    width: float | None = None,
) -> CylindricalEnd:
    """Build an end attached to junction edge ``edge_index`` (CCW order).

    The outward axis is the outward normal of the edge; y runs along the edge
    from its first vertex.  ``width`` defaults to the edge length.
    """
    v = np.asarray(junction, dtype=float)
    n = len(v)
    if not 0 <= edge_index < n:
        raise GeometryError(f"attach edge index {edge_index} out of range 0..{n - 1}")
    a = v[edge_index]
    b = v[(edge_index + 1) % n]
    d = b - a
    length = float(np.hypot(*d))
    if length <= 0.0:
        raise GeometryError(f"attach edge {edge_index} is degenerate")
    y_dir = d / length
    axis = np.array([d[1], -d[0]]) / length  # outward normal of a CCW polygon
    if width is None:
        width = length
    return CylindricalEnd(
        index=index,
        cross_section=CrossSection(width=float(width)),
        origin=a.copy(),
        axis=axis,
        y_dir=y_dir,
        collar_length=float(collar_length),
        attach_edge=edge_index,
    )


def make_scene(
    junction: Iterable,
    end_specs: Sequence[dict],
    obstacles: Iterable = (),
    name: str = "scene",
) -> WaveguideScene:
    """Assemble a scene from vertex lists and end specifications.

    ``end_specs`` entries are {"attach_edge_index": int, "width": float,
    "collar_length": float}; width may be omitted to use the edge length.
    """
    junction_arr = np.asarray(list(junction), dtype=float)
    ends = []
    for i, spec in enumerate(end_specs, start=1):
        ends.append(
            end_from_edge(
                junction_arr,
                int(spec["attach_edge_index"]),
                float(spec.get("collar_length", 0.0)),
                index=i,
                width=spec.get("width"),
            )
        )
    obs = tuple(np.asarray(o, dtype=float) for o in obstacles)
    return WaveguideScene(junction=junction_arr, ends=tuple(ends), obstacles=obs, name=name)


def scene_to_json(scene: WaveguideScene, path: str | Path | None = None) -> dict:
    doc = {
        "name": scene.name,
        "junction": [[float(x), float(y)] for x, y in scene.junction],
        "obstacles": [[[float(x), float(y)] for x, y in o] for o in scene.obstacles],
        "ends": [
            {
                "attach_edge_index": int(e.attach_edge if e.attach_edge is not None else -1),
                "width": float(e.width),
                "collar_length": float(e.collar_length),
            }
            for e in scene.ends
        ],
    }
    if path is not None:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    return doc


def scene_from_json(source: str | Path | dict) -> WaveguideScene:
    """Load a scene from a JSON file, JSON text, or an already-parsed dict."""
    if isinstance(source, dict):
        doc = source
        name = doc.get("name", "scene")
    else:
        p = Path(source)
        text = p.read_text() if p.exists() else str(source)
        doc = json.loads(text)
        name = doc.get("name", p.stem if p.exists() else "scene")
    required = {"junction", "ends"}
    missing = required - set(doc)
    if missing:
        raise GeometryError(f"scene document missing keys: {sorted(missing)}")
    return make_scene(
        doc["junction"], doc["ends"], doc.get("obstacles", ()), name=name
    )


# ---------------------------------------------------------------------------
# validation (diagnostics, not exceptions)
# ---------------------------------------------------------------------------

def _semicylinder_bounds(end: CylindricalEnd, t_max: float = math.inf):
    """Axis-aligned bounding intervals of {0<=y<=w, 0<=t<=t_max}."""
    corners = [end.global_point(y, 0.0) for y in (0.0, end.width)]
    far = [
        end.origin + y * end.y_dir + t_max * end.axis for y in (0.0, end.width)
    ]
    allc = np.vstack(corners + far)
    return (
        (float(np.min(allc[:, 0])), float(np.max(allc[:, 0]))),
        (float(np.min(allc[:, 1])), float(np.max(allc[:, 1]))),
    )


def _intervals_overlap(a, b, tol=1e-12) -> bool:
    return min(a[1], b[1]) - max(a[0], b[0]) > tol


def validate_scene(scene: WaveguideScene) -> list[str]:
    """Check all scene invariants; return one message per violation."""
    diags: list[str] = []
    v = np.asarray(scene.junction, dtype=float)
    if len(v) < 3:
        diags.append("junction polygon must have at least 3 vertices")
        return diags
    if polygon_signed_area(v) <= 0:
        diags.append("junction polygon must be counter-clockwise")
    if not polygon_is_simple(v):
        diags.append("junction polygon is self-intersecting")
    if not polygon_is_rectilinear(v):
        diags.append("junction polygon edges must be axis-aligned")

    n = len(v)
    for end in scene.ends:
        if end.width <= 0.0:
            diags.append(f"end {end.index}: cross-section width must be positive")
        if end.attach_edge is not None:
            if not 0 <= end.attach_edge < n:
                diags.append(f"end {end.index}: attach edge index out of range")
            else:
                a = v[end.attach_edge]
                b = v[(end.attach_edge + 1) % n]
                edge_len = float(np.hypot(*(b - a)))
                if end.width > 0 and abs(edge_len - end.width) > 1e-9 * max(1.0, end.width):
                    diags.append(
                        f"end {end.index}: attach edge length {edge_len:.12g} "
                        f"does not match width {end.width:.12g}"
                    )
        if not end.is_axis_aligned():
            diags.append(
                f"end {end.index}: axis is not axis-aligned (structured mesher "
                "cannot triangulate this scene)"
            )

    # pairwise disjoint semicylinders (rectangle intersection on bounds)
    big_t = 1e6
    for i in range(len(scene.ends)):
        for j in range(i + 1, len(scene.ends)):
            ei, ej = scene.ends[i], scene.ends[j]
            if ei.width <= 0 or ej.width <= 0:
                continue
            if not (ei.is_axis_aligned() and ej.is_axis_aligned()):
                continue
            bi = _semicylinder_bounds(ei, big_t)
            bj = _semicylinder_bounds(ej, big_t)
            if _intervals_overlap(bi[0], bj[0]) and _intervals_overlap(bi[1], bj[1]):
                diags.append(f"ends {ei.index},{ej.index} overlap")

    for k, obs in enumerate(scene.obstacles, start=1):
        o = np.asarray(obs, dtype=float)
        if len(o) < 3:
            diags.append(f"obstacle {k}: fewer than 3 vertices")
            continue
        if not polygon_is_rectilinear(o):
            diags.append(f"obstacle {k}: edges must be axis-aligned")
        if not np.all(points_in_polygon(o, v, include_boundary=1e-12)):
            diags.append(f"obstacle {k}: not inside the junction polygon")
        for m in range(k + 1, len(scene.obstacles) + 1):
            o2 = scene.obstacles[m - 1]
            if np.any(points_in_polygon(o2, o, include_boundary=-1e-12)) or np.any(
                points_in_polygon(o, o2, include_boundary=-1e-12)
            ):
                diags.append(f"obstacles {k},{m} overlap")

    # straight collar: edges adjacent to the attach edge must run along the
    # axis for at least collar_length
    for end in scene.ends:
        if end.attach_edge is None or end.width <= 0 or not end.is_axis_aligned():
            continue
        prev_edge = v[end.attach_edge] - v[(end.attach_edge - 1) % n]
        next_edge = v[(end.attach_edge + 2) % n] - v[(end.attach_edge + 1) % n]
        # the previous wall edge arrives at the attach edge travelling outward,
        # the next one leaves it travelling inward
        for name, d, direction in (
            ("previous", prev_edge, end.axis),
            ("next", next_edge, -end.axis),
        ):
            along = float(np.dot(d, direction))
            perp = float(abs(np.dot(d, end.y_dir)))
            if end.collar_length > 0 and (perp > 1e-12 or along + 1e-9 < end.collar_length):
                diags.append(
                    f"end {end.index}: {name} junction edge is shorter than the "
                    f"declared collar ({end.collar_length:.12g})"
                )

    if not diags and scene.ends:
        if not _scene_is_connected(scene):
            diags.append("domain is disconnected")
    return diags


def _scene_is_connected(scene: WaveguideScene) -> bool:
    """Connectivity of the rectilinear cell decomposition (ends cut at t=w)."""
    cut_x, cut_y = set(), set()
    for x, y in scene.junction:
        cut_x.add(float(x))
        cut_y.add(float(y))
    for obs in scene.obstacles:
        for x, y in obs:
            cut_x.add(float(x))
            cut_y.add(float(y))
    stubs = []
    for end in scene.ends:
        if not end.is_axis_aligned():
            continue
        corners = np.vstack(
            [end.global_point(y, t) for y in (0.0, end.width) for t in (0.0, end.width)]
        )
        lo = corners.min(axis=0)
        hi = corners.max(axis=0)
        stubs.append((lo, hi))
        cut_x.update((float(lo[0]), float(hi[0])))
        cut_y.update((float(lo[1]), float(hi[1])))
    xs = np.array(sorted(cut_x))
    ys = np.array(sorted(cut_y))
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    if len(cx) == 0 or len(cy) == 0:
        return True
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    centers = np.column_stack([X.ravel(), Y.ravel()])
    inside = points_in_polygon(centers, scene.junction)
    for lo, hi in stubs:
        inside |= (
            (centers[:, 0] > lo[0]) & (centers[:, 0] < hi[0])
            & (centers[:, 1] > lo[1]) & (centers[:, 1] < hi[1])
        )
    for obs in scene.obstacles:
        inside &= ~points_in_polygon(centers, obs)
    inside = inside.reshape(len(cx), len(cy))
    seeds = np.argwhere(inside)
    if len(seeds) == 0:
        return True
    seen = np.zeros_like(inside)
    stack = [tuple(seeds[0])]
    seen[tuple(seeds[0])] = True
    while stack:
        i, j = stack.pop()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if 0 <= a < inside.shape[0] and 0 <= b < inside.shape[1]:
                if inside[a, b] and not seen[a, b]:
                    seen[a, b] = True
                    stack.append((a, b))
    return bool(np.all(seen[inside]))


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------

def truncate(scene: WaveguideScene, R: float) -> TruncatedDomain:
    """Cut every end at t = R > 0 and expose the cross-section segments."""
    if not (R > 0.0):
        raise InvalidRadiusError(f"truncation radius must be positive, got {R!r}")
    segments = tuple(
        GammaSegment(
            end_index=end.index,
            p0=end.global_point(0.0, R),
            p1=end.global_point(end.width, R),
            width=end.width,
        )
        for end in scene.ends
    )
    return TruncatedDomain(scene=scene, R=float(R), gamma_segments=segments)
