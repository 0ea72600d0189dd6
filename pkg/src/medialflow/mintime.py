"""Minimum-time exit problems as metric distance problems.

The control system y' = F(y) a(t) with controls in the closed unit ball exits
the domain in minimum time T(x) equal to the boundary distance under the
metric G = (F*)^-1 F^-1; `metric_from_control` performs the conversion, and
`min_time` is by construction the same computation as the lattice distance.
`hjb_residual` finite-differences T on a coarse grid away from the singular
set and checks the stationary Hamilton-Jacobi-Bellman residual
|<F F* DT, DT> - 1|.  `check_cosh_semiconcavity` samples lattice-geodesic
triples and tests the semiconcavity inequality for cosh(a d) with the
user-supplied curvature bound a.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .lattice import (
    boundary_field,
    node_at,
    node_graph,
    path_nodes,
    polyline_glengths,
    polyline_point_at,
    query_delta,
    single_source,
)
from .sampling import interior_points
from .scene import MetricField, Scene


@dataclass(frozen=True)
class FSpec:
    """Control matrix field F(x): constant invertible matrix or isotropic polynomial speed."""

    variant: str  # 'constant_matrix' | 'isotropic_poly'
    m: np.ndarray | None = None  # (2, 2), det != 0
    coeffs: np.ndarray | None = None  # coeffs[i][j] multiplies x^i y^j

    @staticmethod
    def from_dict(d: dict) -> "FSpec":
        variant = d.get("variant")
        if variant == "constant_matrix":
            m = np.asarray(d["m"], dtype=float)
            if m.shape != (2, 2):
                raise ValueError("control matrix must be 2x2")
            if abs(np.linalg.det(m)) < 1e-12 * (1.0 + np.abs(m).max() ** 2):
                raise ValueError("control matrix is singular")
            return FSpec(variant="constant_matrix", m=m)
        if variant == "isotropic_poly":
            c = np.atleast_2d(np.asarray(d["coeffs"], dtype=float))
            return FSpec(variant="isotropic_poly", coeffs=c)
        raise ValueError(f"unknown control field variant {variant!r}")

    def to_dict(self) -> dict:
        if self.variant == "constant_matrix":
            return {"variant": "constant_matrix", "m": self.m.tolist()}
        return {"variant": "isotropic_poly", "coeffs": self.coeffs.tolist()}

    def speed(self, pts: np.ndarray) -> np.ndarray:
        """Isotropic scalar speed c(x) at points (n, 2)."""
        pts = np.atleast_2d(pts)
        return npoly.polyval2d(pts[:, 0], pts[:, 1], self.coeffs)

    def f_matrices(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        n = len(pts)
        if self.variant == "constant_matrix":
            return np.broadcast_to(self.m, (n, 2, 2)).copy()
        c = self.speed(pts)
        if np.any(c <= 0):
            raise ValueError("isotropic control speed must be positive on the domain")
        out = np.zeros((n, 2, 2))
        out[:, 0, 0] = c
        out[:, 1, 1] = c
        return out

    def f_matrix(self, x) -> np.ndarray:
        return self.f_matrices(np.asarray(x, dtype=float)[None, :])[0]


def metric_from_control(f: FSpec) -> MetricField:
    """Metric G(x) = (F*(x))^-1 F(x)^-1 induced by the control matrix F."""
    return MetricField(kind="control_field", fspec=f)


def min_time(scene: Scene, x) -> float:
    """Minimum exit time from x; identical to the lattice boundary distance under G."""
    if scene.metric.kind != "control_field":
        raise ValueError("min_time requires a control_field scene")
    return query_delta(boundary_field(scene), np.asarray(x, dtype=float))


@dataclass
class HJBReport:
    max_residual: float
    mean_residual: float
    checked: int
    excluded: int
    spacing: float


def hjb_residual(scene: Scene, resolution: int = 24) -> HJBReport:
    """Max |<F F* DT, DT> - 1| with central differences on a coarse grid.

    Grid points whose five-point stencil touches a singular-or-ambiguous
    node (two-cell exclusion zone) are skipped: T is not differentiable
    across the skeleton, so residuals there are meaningless.
    """
    if scene.metric.kind != "control_field":
        raise ValueError("hjb_residual requires a control_field scene")
    from .distance import superdifferential

    lo, hi = scene.bbox
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    field = boundary_field(scene)

    inside = np.zeros((resolution, resolution), dtype=bool)
    bad = np.zeros((resolution, resolution), dtype=bool)
    tval = np.full((resolution, resolution), np.nan)
    from .scene import points_inside

    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    ins = points_inside(scene.boundary, pts).reshape(resolution, resolution)
    for i in range(resolution):
        for j in range(resolution):
            if not ins[i, j]:
                continue
            p = np.array([xs[i], ys[j]])
            try:
                fan = superdifferential(scene, p, need_projections=False)
            except Exception:
                continue
            inside[i, j] = True
            tval[i, j] = query_delta(field, p)
            bad[i, j] = fan.singular or fan.ambiguous

    # two-cell dilation of the exclusion mask
    excl = bad.copy()
    for di in range(-2, 3):
        for dj in range(-2, 3):
            src = bad[
                max(0, -di) : resolution - max(0, di),
                max(0, -dj) : resolution - max(0, dj),
            ]
            excl[
                max(0, di) : resolution - max(0, -di),
                max(0, dj) : resolution - max(0, -dj),
            ] |= src

    residuals = []
    excluded = 0
    for i in range(1, resolution - 1):
        for j in range(1, resolution - 1):
            stencil = [(i, j), (i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)]
            if not all(inside[a, b] for a, b in stencil):
                continue
            if any(excl[a, b] for a, b in stencil):
                excluded += 1
                continue
            dt_x = (tval[i + 1, j] - tval[i - 1, j]) / (2.0 * hx)
            dt_y = (tval[i, j + 1] - tval[i, j - 1]) / (2.0 * hy)
            p = np.array([dt_x, dt_y])
            fm = scene.metric.fspec.f_matrix(np.array([xs[i], ys[j]]))
            ham = float(p @ (fm @ fm.T) @ p)
            residuals.append(abs(ham - 1.0))
    if not residuals:
        raise ValueError("hjb_residual: no admissible stencil nodes (grid too coarse?)")
    arr = np.asarray(residuals)
    return HJBReport(
        max_residual=float(arr.max()),
        mean_residual=float(arr.mean()),
        checked=len(arr),
        excluded=excluded,
        spacing=float(max(hx, hy)),
    )


@dataclass
class CoshSemiconcavityReport:
    triples: int
    max_violation: float
    tol: float
    passed: bool
    alpha: float
    constant: float  # K = alpha^2 max v over the sampled set


def check_cosh_semiconcavity(
    scene: Scene,
    n_triples: int = 1000,
    n_sources: int = 20,
    tol_per_h: float = 8.0,
    min_delta_cells: float = 3.0,
) -> CoshSemiconcavityReport:
    """Semiconcavity of v = cosh(a d) along lattice-geodesic triples.

    For endpoints x, y joined by a lattice shortest path standing in for the
    geodesic, and the path point at length fraction r, checks

        (1 - r) v(x) + r v(y) - v(p(r)) <= r (1 - r) K d(x, y)^2 / 2 + tol

    with K = a^2 max v and tol = tol_per_h * grid_h budgeting lattice error.
    """
    alpha = scene.curvature_bound
    if alpha is None:
        raise ValueError("cosh semiconcavity check requires a curvature bound")
    graph = node_graph(scene)
    bfield = boundary_field(scene)
    h = scene.grid_h

    def v_of(pts: np.ndarray) -> np.ndarray:
        d = np.array([query_delta(bfield, p) for p in np.atleast_2d(pts)])
        return np.cosh(alpha * d)

    srcs = interior_points(scene, n_sources, skip=31)
    targets = interior_points(scene, 3 * max(n_triples, n_sources), skip=997)
    min_delta = min_delta_cells * h
    fracs = (0.25, 0.5, 0.75)

    worst = -np.inf
    vmax = 0.0
    used = 0
    ti = 0
    for s in srcs:
        if used >= n_triples:
            break
        if query_delta(bfield, s) < min_delta:
            continue
        src_node = node_at(graph, s)
        dist, pred = single_source(graph, src_node)
        per_src = max(1, n_triples // n_sources)
        taken = 0
        while taken < per_src and ti < len(targets):
            y = targets[ti]
            ti += 1
            if query_delta(bfield, y) < min_delta:
                continue
            dst_node = node_at(graph, y)
            if not np.isfinite(dist[dst_node]) or dst_node == src_node:
                continue
            chain = path_nodes(pred, src_node, dst_node)
            pts = graph.xy[chain]
            seglens = polyline_glengths(scene, pts)
            total = float(seglens.sum())
            if total <= 0:
                continue
            frac = fracs[used % len(fracs)]
            mid = polyline_point_at(pts, seglens, frac)
            vx, vy, vm = v_of(pts[0])[0], v_of(pts[-1])[0], v_of(mid)[0]
            vmax = max(vmax, vx, vy, vm)
            kconst = alpha**2 * max(vx, vy, vm)
            lhs = (1.0 - frac) * vx + frac * vy - vm
            rhs = frac * (1.0 - frac) * kconst * total**2 / 2.0
            worst = max(worst, lhs - rhs)
            used += 1
            taken += 1
    if used == 0:
        raise ValueError("no usable geodesic triples (domain too small for grid_h?)")
    tol = tol_per_h * h
    return CoshSemiconcavityReport(
        triples=used,
        max_violation=float(worst),
        tol=tol,
        passed=bool(worst <= tol),
        alpha=alpha,
        constant=float(alpha**2 * vmax),
    )
