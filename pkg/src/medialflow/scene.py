"""Polygonal scenes with position-dependent metrics.

A Scene is the problem instance the rest of the package consumes: a simple,
counterclockwise polygon bounding an open domain, a field of SPD matrices
``A(x)`` defining the scalar product ``g_x(u, w) = <A(x)u, w>``, an optional
lower curvature bound used by the hyperbolic-cosine semiconcavity estimate,
and a default lattice spacing for the grid backends.

Scene files are JSON (see `load_scene`).  Files violating an invariant are
rejected with a diagnostic naming the invariant; nothing is silently repaired.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

DEFAULT_GRID_H = 0.01

# Interior samples for SPD validation of the metric field.
_SPD_SAMPLE_RES = 33


class SceneValidationError(ValueError):
    """A scene file or in-memory scene violates a documented invariant."""


# ---------------------------------------------------------------------------
# polygon primitives


def signed_area(poly: np.ndarray) -> float:
    """Shoelace signed area; positive for counterclockwise orientation."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_scale(poly: np.ndarray) -> float:
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    return float(max(hi[0] - lo[0], hi[1] - lo[1]))


def polygon_is_simple(poly: np.ndarray) -> bool:
    """True when no two non-adjacent edges intersect or touch.

    Uses orientation predicates on all edge pairs; adjacency (shared
    endpoint between consecutive edges) is excluded.  Collinear overlap
    and vertex-on-edge contact both count as non-simple.
    """
    n = len(poly)
    a = poly
    b = np.roll(poly, -1, axis=0)
    eps = 1e-12 * polygon_scale(poly) ** 2

    i, j = np.triu_indices(n, k=1)
    adjacent = (j - i == 1) | ((i == 0) & (j == n - 1))
    i, j = i[~adjacent], j[~adjacent]
    if len(i) == 0:
        return True

    p, q = a[i], b[i]
    r, s = a[j], b[j]

    def cross(u, v):
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    d1 = cross(q - p, r - p)
    d2 = cross(q - p, s - p)
    d3 = cross(s - r, p - r)
    d4 = cross(s - r, q - r)

    proper = (d1 * d2 < -eps * eps) & (d3 * d4 < -eps * eps)
    if np.any(proper):
        return False

    # Touching / collinear contact: any orientation ~0 with bbox overlap.
    degen = (np.abs(d1) <= eps) | (np.abs(d2) <= eps) | (np.abs(d3) <= eps) | (np.abs(d4) <= eps)
    if np.any(degen):
        k = np.nonzero(degen)[0]
        for m in k:
            if _bbox_overlap(p[m], q[m], r[m], s[m]):
                # confirm an actual contact, not just a far-away collinearity
                if _segments_touch(p[m], q[m], r[m], s[m], eps):
                    return False
    return True


def _bbox_overlap(p, q, r, s) -> bool:
    return (
        min(p[0], q[0]) <= max(r[0], s[0])
        and min(r[0], s[0]) <= max(p[0], q[0])
        and min(p[1], q[1]) <= max(r[1], s[1])
        and min(r[1], s[1]) <= max(p[1], q[1])
    )


def _segments_touch(p, q, r, s, eps) -> bool:
    def on_seg(a, b, c):
        cr = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(cr) > eps:
            return False
        dot = (c[0] - a[0]) * (b[0] - a[0]) + (c[1] - a[1]) * (b[1] - a[1])
        return -eps <= dot <= (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + eps

    return on_seg(p, q, r) or on_seg(p, q, s) or on_seg(r, s, p) or on_seg(r, s, q)


def points_inside(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Crossing-number interior test, vectorized over `pts` (n, 2).

    Points numerically on the boundary are classified arbitrarily; use
    `classify_point` when the on-boundary case matters.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = len(pts)
    x0 = poly[:, 0]
    y0 = poly[:, 1]
    x1 = np.roll(x0, -1)
    y1 = np.roll(y0, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = (x1 - x0) / (y1 - y0)
    inside = np.empty(n, dtype=bool)
    chunk = max(1, (1 << 22) // max(len(poly), 1))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        py = pts[lo:hi, 1][:, None]
        px = pts[lo:hi, 0][:, None]
        cond = (y0[None, :] <= py) != (y1[None, :] <= py)
        with np.errstate(invalid="ignore"):
            xin = x0[None, :] + (py - y0[None, :]) * slope[None, :]
        crossings = np.count_nonzero(cond & (xin > px), axis=1)
        inside[lo:hi] = (crossings % 2) == 1
    return inside


def distance_to_edges(poly: np.ndarray, p: np.ndarray) -> float:
    """Euclidean distance from point `p` to the polygon boundary."""
    v0 = poly
    e = np.roll(poly, -1, axis=0) - poly
    w = p[None, :] - v0
    len2 = np.einsum("ij,ij->i", e, e)
    t = np.clip(np.einsum("ij,ij->i", w, e) / len2, 0.0, 1.0)
    q = v0 + t[:, None] * e
    d = p[None, :] - q
    return float(np.sqrt(np.einsum("ij,ij->i", d, d).min()))


def classify_point(poly: np.ndarray, p: np.ndarray, eps: float | None = None) -> str:
    """Return 'inside', 'boundary' or 'outside' for point `p`."""
    p = np.asarray(p, dtype=float)
    if eps is None:
        eps = 1e-12 * polygon_scale(poly)
    if distance_to_edges(poly, p) <= eps:
        return "boundary"
    return "inside" if bool(points_inside(poly, p[None, :])[0]) else "outside"


def segment_first_boundary_hit(poly: np.ndarray, a: np.ndarray, b: np.ndarray):
    """First intersection of segment a->b with the polygon boundary.

    Returns (t, point) with t in [0, 1], or None when the open segment is
    boundary-free.
    """
    v0 = poly
    v1 = np.roll(poly, -1, axis=0)
    d = b - a
    e = v1 - v0
    denom = d[0] * e[:, 1] - d[1] * e[:, 0]
    w = v0 - a[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / denom
        u = (w[:, 0] * d[1] - w[:, 1] * d[0]) / denom
    ok = np.isfinite(t) & (t >= 0.0) & (t <= 1.0) & (u >= 0.0) & (u <= 1.0)
    if not np.any(ok):
        return None
    tmin = float(t[ok].min())
    return tmin, a + tmin * d


def segment_inside(poly: np.ndarray, a: np.ndarray, b: np.ndarray) -> bool:
    """True when both endpoints are interior and the segment stays in the domain."""
    ins = points_inside(poly, np.stack([a, b]))
    if not (ins[0] and ins[1]):
        return False
    hit = segment_first_boundary_hit(poly, a, b)
    return hit is None


# ---------------------------------------------------------------------------
# metric fields


@dataclass
class MetricGrid:
    """Lattice of SPD matrix entries with bilinear interpolation."""

    origin: np.ndarray  # (2,)
    h: float
    nx: int
    ny: int
    a11: np.ndarray  # (ny, nx)
    a12: np.ndarray
    a22: np.ndarray

    def interp(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        fx = np.clip((pts[:, 0] - self.origin[0]) / self.h, 0.0, self.nx - 1 - 1e-12)
        fy = np.clip((pts[:, 1] - self.origin[1]) / self.h, 0.0, self.ny - 1 - 1e-12)
        ix = fx.astype(int)
        iy = fy.astype(int)
        tx = fx - ix
        ty = fy - iy
        out = np.empty((len(pts), 2, 2))
        for (r, c), arr in (((0, 0), self.a11), ((0, 1), self.a12), ((1, 1), self.a22)):
            v = (
                arr[iy, ix] * (1 - tx) * (1 - ty)
                + arr[iy, ix + 1] * tx * (1 - ty)
                + arr[iy + 1, ix] * (1 - tx) * ty
                + arr[iy + 1, ix + 1] * tx * ty
            )
            out[:, r, c] = v
        out[:, 1, 0] = out[:, 0, 1]
        return out

    def bbox(self):
        lo = self.origin
        hi = self.origin + np.array([(self.nx - 1) * self.h, (self.ny - 1) * self.h])
        return lo, hi


@dataclass
class MetricField:
    """Field of SPD matrices A(x); one of four variants.

    euclidean        -- identity everywhere.
    constant_matrix  -- one SPD matrix.
    control_field    -- A(x) = G(x) = (F*(x))^-1 F(x)^-1 for a control matrix F.
    grid_sampled     -- bilinear interpolation of sampled entries.
    """

    kind: str
    const: np.ndarray | None = None
    fspec: Any = None  # mintime.FSpec for control_field
    grid: MetricGrid | None = None
    lambda_min: float | None = None  # recorded during scene validation
    lambda_max: float | None = None

    @property
    def is_euclidean(self) -> bool:
        return self.kind == "euclidean"

    def matrices(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate A at points (n, 2) -> (n, 2, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = len(pts)
        if self.kind == "euclidean":
            return np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
        if self.kind == "constant_matrix":
            return np.broadcast_to(self.const, (n, 2, 2)).copy()
        if self.kind == "grid_sampled":
            return self.grid.interp(pts)
        if self.kind == "control_field":
            f = self.fspec.f_matrices(pts)  # (n, 2, 2)
            fft = np.einsum("nij,nkj->nik", f, f)  # F F^T
            return _inv2x2(fft)  # G = (F F^T)^-1 = (F^T)^-1 F^-1
        raise ValueError(f"unknown metric kind {self.kind!r}")

    def matrix(self, x: np.ndarray) -> np.ndarray:
        return self.matrices(np.asarray(x, dtype=float)[None, :])[0]

    def to_dict(self) -> dict:
        if self.kind == "euclidean":
            return {"type": "euclidean"}
        if self.kind == "constant_matrix":
            return {"type": "constant_matrix", "a": self.const.tolist()}
        if self.kind == "control_field":
            return {"type": "control_field", "f": self.fspec.to_dict()}
        if self.kind == "grid_sampled":
            g = self.grid
            return {
                "type": "grid_sampled",
                "origin": g.origin.tolist(),
                "h": g.h,
                "nx": g.nx,
                "ny": g.ny,
                "a11": g.a11.ravel().tolist(),
                "a12": g.a12.ravel().tolist(),
                "a22": g.a22.ravel().tolist(),
            }
        raise ValueError(f"unknown metric kind {self.kind!r}")


def _inv2x2(m: np.ndarray) -> np.ndarray:
    """Closed-form inverse of a stack (n, 2, 2)."""
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    out = np.empty_like(m)
    out[:, 0, 0] = m[:, 1, 1]
    out[:, 1, 1] = m[:, 0, 0]
    out[:, 0, 1] = -m[:, 0, 1]
    out[:, 1, 0] = -m[:, 1, 0]
    return out / det[:, None, None]


def metric_from_dict(d: dict) -> MetricField:
    kind = d.get("type")
    if kind == "euclidean":
        return MetricField(kind="euclidean")
    if kind == "constant_matrix":
        a = np.asarray(d["a"], dtype=float)
        if a.shape != (2, 2):
            raise SceneValidationError("constant_matrix metric: 'a' must be 2x2")
        if abs(a[0, 1] - a[1, 0]) > 1e-12 * (1 + np.abs(a).max()):
            raise SceneValidationError("non-SPD metric: matrix is not symmetric")
        return MetricField(kind="constant_matrix", const=a)
    if kind == "control_field":
        from .mintime import FSpec, metric_from_control

        return metric_from_control(FSpec.from_dict(d["f"]))
    if kind == "grid_sampled":
        nx, ny = int(d["nx"]), int(d["ny"])
        grid = MetricGrid(
            origin=np.asarray(d["origin"], dtype=float),
            h=float(d["h"]),
            nx=nx,
            ny=ny,
            a11=np.asarray(d["a11"], dtype=float).reshape(ny, nx),
            a12=np.asarray(d["a12"], dtype=float).reshape(ny, nx),
            a22=np.asarray(d["a22"], dtype=float).reshape(ny, nx),
        )
        return MetricField(kind="grid_sampled", grid=grid)
    raise SceneValidationError(f"parse error: unknown metric type {kind!r}")


# ---------------------------------------------------------------------------
# scenes


@dataclass(eq=False)
class Scene:
    """Immutable problem instance: domain polygon, metric, curvature bound.

    Treat Scene as read-only once validated; derived fields (lattice
    distance fields, edge caches) are memoized in `_caches` and shared by
    concurrent read-only queries.
    """

    boundary: np.ndarray  # (n, 2), CCW simple polygon
    metric: MetricField
    curvature_bound: float | None = None
    grid_h: float = DEFAULT_GRID_H
    _caches: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def bbox(self):
        return self.boundary.min(axis=0), self.boundary.max(axis=0)

    @property
    def scale(self) -> float:
        return polygon_scale(self.boundary)

    def contains(self, p: np.ndarray) -> bool:
        return classify_point(self.boundary, p) == "inside"


def validate_scene(scene: Scene) -> Scene:
    """Check all scene invariants; raises SceneValidationError on the first failure.

    Records `metric.lambda_min` from interior samples as a side effect.
    """
    poly = np.asarray(scene.boundary, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise SceneValidationError("polygon must have >= 3 two-dimensional vertices")
    if not np.all(np.isfinite(poly)):
        raise SceneValidationError("polygon has non-finite vertices")
    edge = np.roll(poly, -1, axis=0) - poly
    if np.any(np.einsum("ij,ij->i", edge, edge) <= (1e-14 * polygon_scale(poly)) ** 2):
        raise SceneValidationError("non-simple polygon: repeated vertex / zero-length edge")
    if not polygon_is_simple(poly):
        raise SceneValidationError("non-simple polygon")
    area = signed_area(poly)
    if area < 0:
        raise SceneValidationError("clockwise orientation (scene files must be counterclockwise)")
    if area == 0:
        raise SceneValidationError("polygon has empty interior")
    if scene.curvature_bound is not None and not (scene.curvature_bound > 0):
        raise SceneValidationError("curvature_bound must be positive")
    if not (scene.grid_h > 0):
        raise SceneValidationError("grid_h must be positive")

    scene.boundary = poly
    samples = _interior_samples(poly)
    if len(samples) == 0:
        raise SceneValidationError("cannot sample polygon interior (degenerate domain)")
    mats = scene.metric.matrices(samples)
    asym = np.abs(mats[:, 0, 1] - mats[:, 1, 0]).max()
    if asym > 1e-10 * (1 + np.abs(mats).max()):
        raise SceneValidationError("non-SPD metric: asymmetric sample")
    lam = _eigmin2x2(mats)
    lam_hi = _eigmax2x2(mats)
    if lam.min() <= 0:
        raise SceneValidationError("non-SPD metric: nonpositive eigenvalue at an interior sample")
    if scene.metric.kind == "grid_sampled":
        lo, hi = scene.metric.grid.bbox()
        plo, phi = poly.min(axis=0), poly.max(axis=0)
        pad = 0.5 * scene.metric.grid.h
        if np.any(plo < lo - pad) or np.any(phi > hi + pad):
            raise SceneValidationError("grid_sampled metric does not cover the polygon")
    scene.metric.lambda_min = float(lam.min())
    scene.metric.lambda_max = float(lam_hi.max())
    return scene


def _interior_samples(poly: np.ndarray) -> np.ndarray:
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    xs = np.linspace(lo[0], hi[0], _SPD_SAMPLE_RES)
    ys = np.linspace(lo[1], hi[1], _SPD_SAMPLE_RES)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    return pts[points_inside(poly, pts)]


def _eigmin2x2(mats: np.ndarray) -> np.ndarray:
    a, b, c = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 1]
    half = 0.5 * (a + c)
    rad = np.sqrt((0.5 * (a - c)) ** 2 + b * b)
    return half - rad


def _eigmax2x2(mats: np.ndarray) -> np.ndarray:
    a, b, c = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 1]
    half = 0.5 * (a + c)
    rad = np.sqrt((0.5 * (a - c)) ** 2 + b * b)
    return half + rad


def scene_from_dict(d: dict) -> Scene:
    try:
        poly = np.asarray(d["boundary"]["polygon"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise SceneValidationError(f"parse error: missing boundary polygon ({exc})") from exc
    metric = metric_from_dict(d.get("metric", {"type": "euclidean"}))
    curvature = d.get("curvature_bound")
    scene = Scene(
        boundary=poly,
        metric=metric,
        curvature_bound=None if curvature is None else float(curvature),
        grid_h=float(d.get("grid_h", DEFAULT_GRID_H)),
    )
    return validate_scene(scene)


def scene_to_dict(scene: Scene) -> dict:
    d: dict[str, Any] = {
        "boundary": {"polygon": scene.boundary.tolist()},
        "metric": scene.metric.to_dict(),
    }
    if scene.curvature_bound is not None:
        d["curvature_bound"] = scene.curvature_bound
    d["grid_h"] = scene.grid_h
    return d


def load_scene(path: str) -> Scene:
    """Load and validate a scene file; rejects invalid files with a diagnostic."""
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneValidationError(f"parse error: {exc}") from exc
    return scene_from_dict(d)


def save_scene(scene: Scene, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2, sort_keys=True)
        fh.write("\n")


def diameter(scene: Scene) -> float:
    """Domain diameter used to size the retraction horizon T = 2 diam.

    Euclidean scenes: exact (attained at polygon vertices).  Riemannian
    scenes: lattice-geodesic estimate on a grid of spacing grid_h / 2,
    seeded at vertex-nearest nodes with farthest-point sweeps.
    """
    cached = scene._caches.get("diameter")
    if cached is not None:
        return cached
    if scene.metric.is_euclidean:
        p = scene.boundary
        d2 = np.sum((p[:, None, :] - p[None, :, :]) ** 2, axis=-1)
        value = float(math.sqrt(d2.max()))
    else:
        from .lattice import riemannian_diameter

        value = riemannian_diameter(scene)
    scene._caches["diameter"] = value
    return value
