"""Skeleton extraction and the deformation of the domain onto it.

The skeleton (medial axis) is extracted as the point cloud of grid points
flagged singular.  The deformation H(x, t) = gamma_x(t T) with horizon
T = 2 diam follows every point's generalized characteristic; `check_retraction`
verifies the three retraction conditions at sampled points: H(., 0) is the
identity, H(., 1) lands on the skeleton, and the skeleton maps into itself
at intermediate times.  Continuity of H is not asserted numerically; the
continuous-dependence ratio from the flow module is reported alongside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import integrate, is_singular
from .sampling import interior_points
from .scene import Scene, diameter, points_inside


@dataclass
class SkeletonCloud:
    points: np.ndarray  # (k, 2)
    speed_sq: np.ndarray
    delta: np.ndarray
    resolution: int
    scene: Scene

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class RetractionReport:
    sample_count: int
    skeleton_sample_count: int
    fraction_interior_to_skeleton: float  # H(x, 1) singular
    fraction_skeleton_stays: float  # H(y, t) singular for all tested t
    first_singular_time_max: float
    max_endpoint_drift: float  # endpoint shift under dt halving (subset)
    horizon: float
    dt: float
    time_stamps: tuple

    def passed(self) -> bool:
        return self.fraction_interior_to_skeleton == 1.0 and self.fraction_skeleton_stays == 1.0


def extract_skeleton(scene: Scene, resolution: int) -> SkeletonCloud:
    """Scan a resolution x resolution grid clipped to the domain for singular points."""
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    lo, hi = scene.bbox
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pts = pts[points_inside(scene.boundary, pts)]
    flagged, speeds, deltas = [], [], []
    from .distance import superdifferential

    for p in pts:
        try:
            fan = superdifferential(scene, p, need_projections=False)
        except Exception:
            continue
        if fan.singular:
            flagged.append(p)
            speeds.append(fan.speed_sq)
            deltas.append(fan.delta)
    k = len(flagged)
    return SkeletonCloud(
        points=np.asarray(flagged).reshape(k, 2),
        speed_sq=np.asarray(speeds),
        delta=np.asarray(deltas),
        resolution=resolution,
        scene=scene,
    )


def skeleton_to_csv(cloud: SkeletonCloud, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("x,y,speed_sq,delta\n")
        for k in range(len(cloud)):
            fh.write(
                "%.17g,%.17g,%.17g,%.17g\n"
                % (cloud.points[k, 0], cloud.points[k, 1], cloud.speed_sq[k], cloud.delta[k])
            )


def homotopy_map(scene: Scene, x, t: float, dt: float = 1e-3) -> np.ndarray:
    """H(x, t) = gamma_x(t T) with T = 2 diam; H(x, 0) = x exactly."""
    x = np.asarray(x, dtype=float)
    if not 0.0 <= t <= 1.0:
        raise ValueError("homotopy parameter t must lie in [0, 1]")
    if t == 0.0:
        return x.copy()
    horizon = 2.0 * diameter(scene)
    traj = integrate(scene, x, t * horizon, dt)
    return traj.points[-1].copy()


def check_retraction(
    scene: Scene,
    n_samples: int,
    dt: float = 1e-2,
    resolution: int = 129,
    time_stamps: tuple = (0.0, 0.25, 0.5, 0.75, 1.0),
    n_drift: int = 8,
) -> RetractionReport:
    """Exercise the retraction conditions on sampled points.

    Draws n_samples quasi-uniform interior seeds plus n_samples skeleton
    points; H(., 0) = identity holds by construction of the integrator
    (the first trajectory sample is the seed), so the report focuses on
    landing in, and staying in, the singular set.  n_samples = 0 yields the
    vacuous report with both fractions 1.
    """
    horizon = 2.0 * diameter(scene)
    if n_samples == 0:
        return RetractionReport(
            sample_count=0,
            skeleton_sample_count=0,
            fraction_interior_to_skeleton=1.0,
            fraction_skeleton_stays=1.0,
            first_singular_time_max=0.0,
            max_endpoint_drift=0.0,
            horizon=horizon,
            dt=dt,
            time_stamps=tuple(time_stamps),
        )

    seeds = interior_points(scene, n_samples, skip=17)
    cloud = extract_skeleton(scene, resolution)
    if len(cloud) > n_samples:
        pick = np.unique(np.round(np.linspace(0, len(cloud) - 1, n_samples)).astype(int))
        skel_pts = cloud.points[pick]
    else:
        skel_pts = cloud.points

    n_land = 0
    first_singular_max = 0.0
    drift = 0.0
    for i, x in enumerate(seeds):
        traj = integrate(scene, x, horizon, dt)
        end_ok = bool(traj.singular[-1])
        n_land += int(end_ok)
        k0 = traj.first_singular_index()
        if k0 is not None:
            first_singular_max = max(first_singular_max, float(traj.t[k0]))
        else:
            first_singular_max = max(first_singular_max, horizon)
        if i < n_drift:
            fine = integrate(scene, x, horizon, dt / 2.0)
            drift = max(drift, float(np.linalg.norm(traj.points[-1] - fine.points[-1])))

    n_stay = 0
    for y in skel_pts:
        traj = integrate(scene, y, horizon, dt)
        idx = np.searchsorted(traj.t, np.asarray(time_stamps) * horizon, side="right") - 1
        idx = np.clip(idx, 0, len(traj.t) - 1)
        n_stay += int(np.all(traj.singular[idx]))

    return RetractionReport(
        sample_count=len(seeds),
        skeleton_sample_count=len(skel_pts),
        fraction_interior_to_skeleton=n_land / len(seeds),
        fraction_skeleton_stays=(n_stay / len(skel_pts)) if len(skel_pts) else 1.0,
        first_singular_time_max=first_singular_max,
        max_endpoint_drift=drift,
        horizon=horizon,
        dt=dt,
        time_stamps=tuple(time_stamps),
    )
