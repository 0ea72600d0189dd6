"""Independent oracles used by the tests.

These deliberately avoid the library's own code paths: brute-force grid
search over the simplex for the minimal-norm point, dense boundary sampling
for distances, and two-projection counting for skeleton membership.
"""

from __future__ import annotations

import numpy as np


def simplex_grid(k: int, step: float) -> np.ndarray:
    """All weight vectors on the k-simplex with entries multiple of `step`."""
    n = int(round(1.0 / step))
    if k == 1:
        return np.array([[1.0]])
    out = []

    def rec(prefix, remaining):
        if len(prefix) == k - 1:
            out.append(prefix + [remaining])
            return
        for i in range(remaining + 1):
            rec(prefix + [i], remaining - i)

    rec([], n)
    return np.asarray(out, dtype=float) * step


def _local_grid(center: np.ndarray, halfwidth: float, step: float) -> np.ndarray:
    """Simplex points with entries multiple of `step` within halfwidth of center."""
    k = len(center)
    n = int(round(1.0 / step))
    lo = np.maximum(0, np.floor((center - halfwidth) / step).astype(int))
    hi = np.minimum(n, np.ceil((center + halfwidth) / step).astype(int))
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(k - 1)]
    mesh = np.meshgrid(*axes, indexing="ij")
    first = np.column_stack([m.ravel() for m in mesh])
    last = n - first.sum(axis=1)
    ok = (last >= lo[k - 1]) & (last <= hi[k - 1])
    pts = np.column_stack([first[ok], last[ok]]).astype(float) * step
    return pts


def grid_search_min_norm(generators: np.ndarray, a: np.ndarray, final_step: float = 1e-4) -> float:
    """Brute-force minimum of <A^-1 q, q> over the simplex, refined to final_step.

    Coarse-to-fine refinement of a plain grid search; the objective is convex,
    so narrowing around the coarse minimizer cannot lose the minimum value
    beyond the resolution of each level.
    """
    gens = np.asarray(generators, dtype=float)
    a_inv = np.linalg.inv(a)

    def values(lams: np.ndarray) -> np.ndarray:
        q = lams @ gens
        return np.einsum("ni,ij,nj->n", q, a_inv, q)

    k = len(gens)
    if k == 1:
        return float(values(np.array([[1.0]]))[0])
    step = 0.01 if k <= 3 else 0.02
    pts = simplex_grid(k, step)
    vals = values(pts)
    best_val = float(vals.min())
    best = pts[int(np.argmin(vals))]
    while step > final_step * 1.0001:
        new_step = max(step / 10.0, final_step)
        pts = _local_grid(best, 2.0 * step, new_step)
        vals = values(pts)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best = pts[i]
        step = new_step
    return best_val


def boundary_samples(poly: np.ndarray, n: int = 1_000_000) -> np.ndarray:
    """n points spread along the polygon boundary proportionally to edge length."""
    v0 = poly
    v1 = np.roll(poly, -1, axis=0)
    lengths = np.linalg.norm(v1 - v0, axis=1)
    counts = np.maximum(1, np.round(n * lengths / lengths.sum()).astype(int))
    pieces = []
    for k in range(len(poly)):
        t = np.linspace(0.0, 1.0, counts[k], endpoint=False)
        pieces.append(v0[k] + t[:, None] * (v1[k] - v0[k]))
    return np.vstack(pieces)


def sampled_boundary_distance(samples: np.ndarray, x: np.ndarray) -> float:
    d = samples - np.asarray(x, dtype=float)[None, :]
    return float(np.sqrt(np.einsum("ij,ij->i", d, d).min()))


def two_projection_mask(
    poly: np.ndarray,
    pts: np.ndarray,
    sep_min: float,
    excess: float,
    chunk: int = 2048,
) -> np.ndarray:
    """True where a point has two boundary projections separated by >= sep_min.

    A projection is admitted when its distance is within `excess` (absolute)
    of the minimum; this is the classic two-projection counting test for
    medial-axis membership, independent of the library's fan machinery.
    """
    v0 = poly
    e = np.roll(poly, -1, axis=0) - poly
    len2 = np.einsum("ij,ij->i", e, e)
    out = np.zeros(len(pts), dtype=bool)
    for lo in range(0, len(pts), chunk):
        hi = min(lo + chunk, len(pts))
        p = pts[lo:hi]
        w = p[:, None, :] - v0[None, :, :]
        t = np.clip(np.einsum("nij,ij->ni", w, e) / len2[None, :], 0.0, 1.0)
        q = v0[None, :, :] + t[..., None] * e[None, :, :]
        d = p[:, None, :] - q
        dist = np.sqrt(np.einsum("nij,nij->ni", d, d))
        dmin = dist.min(axis=1)
        admit = dist <= (dmin[:, None] + excess)
        for i in range(hi - lo):
            qa = q[i][admit[i]]
            if len(qa) < 2:
                continue
            span = np.sqrt(((qa[:, None, :] - qa[None, :, :]) ** 2).sum(-1)).max()
            out[lo + i] = span >= sep_min
    return out


def hausdorff_to_set(points: np.ndarray, targets: np.ndarray) -> float:
    """max over `points` of the distance to the nearest target point."""
    if len(points) == 0:
        return 0.0
    d2 = ((points[:, None, :] - targets[None, :, :]) ** 2).sum(-1)
    return float(np.sqrt(d2.min(axis=1).max()))
