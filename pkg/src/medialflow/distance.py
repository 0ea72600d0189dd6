"""Distance to the domain boundary, nearest-point sets, and superdifferentials.

Two backends share one interface:

* exact     -- per-edge closest-point projection on the polygon (Euclidean
               metric only); distances are exact up to floating point.
* lattice   -- anisotropic shortest paths on a grid (any metric); O(grid_h)
               consistency, stated rather than hidden.

The superdifferential of the boundary distance at an interior point is the
convex hull of the unit covectors pointing away from its nearest boundary
points; its minimal-norm element (see `convexmin`) drives the generalized
gradient flow.  A point is flagged singular when the deduplicated fan has at
least two generators *and* the minimal squared speed s* sits below
1 - EPS_SING; when the two tests disagree the fan is flagged ambiguous
instead of guessing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import convexmin
from .scene import Scene, classify_point, points_inside

TAU_PROJ_EXACT = 1e-6  # relative tolerance admitting near-minimal projections
THETA_DEDUP = 1e-3  # radians; merge generators closer than this in metric angle
EPS_SING = 1e-3  # singular when 1 - s* exceeds this (exact backend)
GENERATOR_CAP = convexmin.N_MAX


class DomainError(ValueError):
    """Query point outside the open domain."""


@dataclass(frozen=True)
class ProjectionSet:
    point: np.ndarray
    delta: float
    projections: np.ndarray  # (k, 2) deduplicated nearest boundary points
    backend: str


@dataclass(frozen=True)
class SuperdiffFan:
    """Generators of the superdifferential at a point plus the minimal selection.

    generators   -- (k, 2) covectors, each saturating <A^-1 p, p> = 1
    coefficients -- simplex weights realizing the minimal-norm element
    velocity     -- v* = A^-1 p*, the flow's right derivative
    speed_sq     -- s* = <A v*, v*> in [0, 1]
    """

    point: np.ndarray
    delta: float
    generators: np.ndarray
    coefficients: np.ndarray
    velocity: np.ndarray
    speed_sq: float
    singular: bool
    ambiguous: bool
    projections: np.ndarray | None
    backend: str


# ---------------------------------------------------------------------------
# exact polygon backend


class _ExactGeo:
    """Per-scene cached edge arrays for vectorized projections and containment."""

    def __init__(self, poly: np.ndarray):
        self.poly = poly
        self.v0 = poly
        self.evec = np.roll(poly, -1, axis=0) - poly
        self.len2 = np.einsum("ij,ij->i", self.evec, self.evec)
        self.inv_len2 = 1.0 / self.len2
        self.scale = float(max(poly.max(axis=0) - poly.min(axis=0)))
        self.x0 = poly[:, 0].copy()
        self.y0 = poly[:, 1].copy()
        self.x1 = np.roll(self.x0, -1)
        self.y1 = np.roll(self.y0, -1)
        self.evx = self.x1 - self.x0
        self.evy = self.y1 - self.y0
        with np.errstate(divide="ignore", invalid="ignore"):
            self.slope = self.evx / self.evy

    def edge_d2_t(self, x: np.ndarray):
        """Squared distance to each edge and the clamped foot parameter."""
        wx = x[0] - self.x0
        wy = x[1] - self.y0
        dot = wx * self.evx + wy * self.evy
        t = np.clip(dot * self.inv_len2, 0.0, 1.0)
        d2 = wx * wx + wy * wy - (2.0 * dot - t * self.len2) * t
        return d2, t

    def feet(self, t: np.ndarray, idx: np.ndarray) -> np.ndarray:
        """Closest points on the selected edges from their foot parameters."""
        return np.column_stack(
            [self.x0[idx] + t[idx] * self.evx[idx], self.y0[idx] + t[idx] * self.evy[idx]]
        )

    def closest_points(self, x: np.ndarray):
        d2, t = self.edge_d2_t(x)
        q = np.column_stack([self.x0 + t * self.evx, self.y0 + t * self.evy])
        return q, d2

    def min_distance(self, x: np.ndarray) -> float:
        d2, _ = self.edge_d2_t(x)
        return float(np.sqrt(d2.min()))

    def inside(self, p: np.ndarray) -> bool:
        cond = (self.y0 <= p[1]) != (self.y1 <= p[1])
        with np.errstate(invalid="ignore"):
            xin = self.x0 + (p[1] - self.y0) * self.slope
        return (int(np.count_nonzero(cond & (xin > p[0]))) % 2) == 1


def _exact_geo(scene: Scene) -> _ExactGeo:
    geo = scene._caches.get("exact_geo")
    if geo is None:
        geo = _ExactGeo(scene.boundary)
        scene._caches["exact_geo"] = geo
    return geo


def _require_interior(scene: Scene, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if classify_point(scene.boundary, x) != "inside":
        raise DomainError("point outside domain")
    return x


def boundary_distance(scene: Scene, x) -> float:
    """Distance from an interior point to the boundary (no interiority check)."""
    x = np.asarray(x, dtype=float)
    if scene.metric.is_euclidean:
        return _exact_geo(scene).min_distance(x)
    from .lattice import boundary_field, query_delta

    return query_delta(boundary_field(scene), x)


def _is_inside_fast(scene: Scene, x: np.ndarray) -> bool:
    return bool(points_inside(scene.boundary, x[None, :])[0])


def project(scene: Scene, x, tau: float | None = None) -> ProjectionSet:
    """Nearest boundary points of an interior point, within relative tolerance tau."""
    x = np.asarray(x, dtype=float)
    if scene.metric.is_euclidean:
        q, delta = _exact_projections(scene, x, TAU_PROJ_EXACT if tau is None else tau)
        return ProjectionSet(point=x, delta=delta, projections=q, backend="exact")
    x = _require_interior(scene, x)
    from .lattice import boundary_field, lattice_projections

    field = boundary_field(scene)
    q, delta = lattice_projections(field, x, tau)
    return ProjectionSet(point=x, delta=delta, projections=q, backend="lattice")


def _exact_projections(scene: Scene, x: np.ndarray, tau: float):
    geo = _exact_geo(scene)
    d2, tpar = geo.edge_d2_t(x)
    delta = float(np.sqrt(d2.min()))
    if delta <= 1e-12 * geo.scale or not geo.inside(x):
        raise DomainError("point outside domain")
    keep = np.nonzero(np.sqrt(d2) <= delta * (1.0 + tau))[0]
    qk = geo.feet(tpar, keep)
    dirs = (x[None, :] - qk) / np.sqrt(d2[keep])[:, None]
    groups = _angle_groups(np.arctan2(dirs[:, 1], dirs[:, 0]), THETA_DEDUP)
    reps = np.array([g[int(np.argmin(d2[keep][g]))] for g in groups])
    qd = qk[reps]
    order = np.argsort(np.arctan2(x[1] - qd[:, 1], x[0] - qd[:, 0]))
    return qd[order], delta


def _angle_groups(angles: np.ndarray, theta: float) -> list[np.ndarray]:
    """Indices grouped by circular clusters separated by gaps > theta."""
    k = len(angles)
    if k == 1:
        return [np.array([0])]
    order = np.argsort(angles)
    srt = angles[order]
    gaps = np.diff(srt)
    wrap = srt[0] + 2.0 * np.pi - srt[-1]
    breaks = np.nonzero(gaps > theta)[0]
    if wrap > theta:
        seqs = np.split(order, breaks + 1)
        return [np.asarray(s) for s in seqs]
    if len(breaks) == 0:
        return [order]
    seqs = np.split(order, breaks + 1)
    # wrap-around: last cluster joins the first
    seqs[0] = np.concatenate([seqs[-1], seqs[0]])
    return [np.asarray(s) for s in seqs[:-1]]


def _merge_directions(dirs: np.ndarray, theta: float):
    """Cluster near-parallel unit directions; returns (merged dirs, groups)."""
    if len(dirs) == 2:
        cosang = float(np.clip(dirs[0] @ dirs[1], -1.0, 1.0))
        if np.arccos(cosang) > theta:
            return dirs, [np.array([0]), np.array([1])]
        m = dirs.sum(axis=0)
        n = np.linalg.norm(m)
        return (m / n if n > 0 else dirs[:1]).reshape(1, 2), [np.array([0, 1])]
    groups = _angle_groups(np.arctan2(dirs[:, 1], dirs[:, 0]), theta)
    merged = []
    for g in groups:
        m = dirs[g].sum(axis=0)
        n = np.linalg.norm(m)
        merged.append(m / n if n > 0 else dirs[g[0]])
    return np.asarray(merged), groups


def _cap_generators(p: np.ndarray, cap: int = GENERATOR_CAP) -> np.ndarray:
    """Thin a dense fan to `cap` generators, keeping the angular extremes.

    The minimal-norm point over equal-norm generators depends only on the
    angular extremes of the fan (plus whether the hull contains the origin),
    so thinning preserves the selection; interior generators are subsampled
    evenly to keep the hull's span.
    """
    k = len(p)
    if k <= cap:
        return p
    ang = np.arctan2(p[:, 1], p[:, 0])
    order = np.argsort(ang)
    srt = ang[order]
    gaps = np.diff(srt)
    wrap = srt[0] + 2.0 * np.pi - srt[-1]
    gap_all = np.append(gaps, wrap)
    start = (int(np.argmax(gap_all)) + 1) % k
    ring = np.concatenate([order[start:], order[:start]])
    pick = np.unique(np.round(np.linspace(0, k - 1, cap)).astype(int))
    return p[ring[pick]]


def superdifferential(scene: Scene, x, tau: float | None = None, need_projections: bool = True) -> SuperdiffFan:
    """Superdifferential fan and minimal selection at an interior point."""
    x = np.asarray(x, dtype=float)
    if scene.metric.is_euclidean:
        return _exact_fan(scene, x, TAU_PROJ_EXACT if tau is None else tau, need_projections)
    from .lattice import lattice_fan

    return lattice_fan(scene, x, tau=tau, need_projections=need_projections)


def _exact_fan(scene: Scene, x: np.ndarray, tau: float, need_projections: bool) -> SuperdiffFan:
    geo = _exact_geo(scene)
    d2, tpar = geo.edge_d2_t(x)
    kmin = int(np.argmin(d2))
    delta = float(np.sqrt(d2[kmin]))
    if delta <= 1e-12 * geo.scale or not geo.inside(x):
        raise DomainError("point outside domain")
    thresh = (delta * (1.0 + tau)) ** 2
    keep = np.nonzero(d2 <= thresh)[0]

    if len(keep) == 1:
        q0 = geo.feet(tpar, keep)[0]
        g = (x - q0) / delta
        return SuperdiffFan(
            point=x,
            delta=delta,
            generators=g[None, :],
            coefficients=_ONE,
            velocity=g,
            speed_sq=1.0,
            singular=False,
            ambiguous=False,
            projections=q0[None, :] if need_projections else None,
            backend="exact",
        )

    qk = geo.feet(tpar, keep)
    dirs = (x[None, :] - qk) / np.sqrt(d2[keep])[:, None]
    merged, groups = _merge_directions(dirs, THETA_DEDUP)
    gens = _cap_generators(merged)
    if len(gens) == 1:
        g = gens[0]
        sol_v = g
        sol_s = float(g @ g)
        coeffs = _ONE
    elif len(gens) == 2:
        d = gens[1] - gens[0]
        dd = float(d @ d)
        t = 0.0 if dd == 0.0 else float(np.clip(-(gens[0] @ d) / dd, 0.0, 1.0))
        sol_v = gens[0] + t * d
        sol_s = float(sol_v @ sol_v)
        coeffs = np.array([1.0 - t, t])
    else:
        sol = convexmin.min_norm_point(gens, _I2)
        sol_v, sol_s, coeffs = sol.velocity, sol.objective, sol.coefficients
    proj = None
    if need_projections:
        reps = np.array([g[int(np.argmin(d2[keep][g]))] for g in groups])
        proj = qk[reps]
    multi = len(gens) >= 2
    below = sol_s < 1.0 - EPS_SING
    return SuperdiffFan(
        point=x,
        delta=delta,
        generators=gens,
        coefficients=coeffs,
        velocity=sol_v,
        speed_sq=sol_s,
        singular=bool(multi and below),
        ambiguous=bool(multi and not below),
        projections=proj,
        backend="exact",
    )


_ONE = np.array([1.0])
_I2 = np.eye(2)


def _fan_from_solution(x, delta, gens, sol, eps_sing, projections, backend) -> SuperdiffFan:
    multi = len(gens) >= 2
    below = sol.objective < 1.0 - eps_sing
    return SuperdiffFan(
        point=x,
        delta=delta,
        generators=gens,
        coefficients=sol.coefficients,
        velocity=sol.velocity,
        speed_sq=sol.objective,
        singular=bool(multi and below),
        ambiguous=bool(multi and not below),
        projections=projections,
        backend=backend,
    )
