"""Deterministic quasi-uniform sampling (Halton low-discrepancy points)."""

from __future__ import annotations

import numpy as np

from .scene import Scene, points_inside


def halton(n: int, base: int, skip: int = 0) -> np.ndarray:
    """First n van der Corput values in the given base, after `skip` entries."""
    out = np.empty(n)
    for k in range(n):
        i = skip + k + 1
        f = 1.0
        r = 0.0
        while i > 0:
            f /= base
            r += f * (i % base)
            i //= base
        out[k] = r
    return out


def halton_2d(n: int, skip: int = 0) -> np.ndarray:
    return np.column_stack([halton(n, 2, skip), halton(n, 3, skip)])


def interior_points(scene: Scene, n: int, skip: int = 0, max_rounds: int = 64) -> np.ndarray:
    """n deterministic interior points, Halton-mapped to the bounding box."""
    lo, hi = scene.bbox
    found: list[np.ndarray] = []
    offset = skip
    batch = max(n, 16)
    for _ in range(max_rounds):
        u = halton_2d(batch, skip=offset)
        pts = lo + u * (hi - lo)
        keep = points_inside(scene.boundary, pts)
        for p in pts[keep]:
            found.append(p)
            if len(found) == n:
                return np.asarray(found)
        offset += batch
    raise RuntimeError("could not draw enough interior samples (degenerate domain?)")
