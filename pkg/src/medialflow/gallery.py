"""Canonical test scenes used by the test suite, scripts, and docs."""

from __future__ import annotations

import numpy as np

from .mintime import FSpec, metric_from_control
from .scene import MetricField, MetricGrid, Scene, validate_scene


def square_scene(half: float = 1.0) -> Scene:
    poly = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    return validate_scene(Scene(boundary=poly, metric=MetricField(kind="euclidean")))


def disk_scene(n: int = 256, radius: float = 1.0) -> Scene:
    """Regular n-gon disk; vertices offset half a step so the axes pierce edge midpoints."""
    ang = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    poly = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return validate_scene(Scene(boundary=poly, metric=MetricField(kind="euclidean")))


def ellipse_scene(n: int = 512, a: float = 2.0, b: float = 1.0) -> Scene:
    """Inscribed n-gon of the ellipse; half-step offset keeps both mirror symmetries."""
    ang = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    poly = np.column_stack([a * np.cos(ang), b * np.sin(ang)])
    return validate_scene(Scene(boundary=poly, metric=MetricField(kind="euclidean")))


def lshape_scene(size: float = 2.0, notch: float = 1.0) -> Scene:
    """L-shaped hexagon: a size x size square minus its top-right notch x notch corner."""
    s, c = size, size - notch
    poly = np.array([[0.0, 0.0], [s, 0.0], [s, c], [c, c], [c, s], [0.0, s]])
    return validate_scene(Scene(boundary=poly, metric=MetricField(kind="euclidean")))


def regular_polygon_scene(n: int, circumradius: float = 1.0, offset: float = 0.0) -> Scene:
    ang = 2.0 * np.pi * np.arange(n) / n + offset
    poly = circumradius * np.column_stack([np.cos(ang), np.sin(ang)])
    return validate_scene(Scene(boundary=poly, metric=MetricField(kind="euclidean")))


def constant_metric_square(
    factor: float = 4.0, half: float = 1.0, curvature_bound: float | None = 0.5, grid_h: float = 0.01
) -> Scene:
    """Square with metric A = factor * Id (flat; any positive curvature bound is valid)."""
    poly = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    metric = MetricField(kind="constant_matrix", const=factor * np.eye(2))
    return validate_scene(
        Scene(boundary=poly, metric=metric, curvature_bound=curvature_bound, grid_h=grid_h)
    )


def control_square(
    speed: float = 2.0, half: float = 1.0, grid_h: float = 0.01, curvature_bound: float | None = None
) -> Scene:
    """Square with control field F = speed * Id (minimum-time test case)."""
    poly = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    fspec = FSpec(variant="constant_matrix", m=speed * np.eye(2))
    return validate_scene(
        Scene(
            boundary=poly,
            metric=metric_from_control(fspec),
            grid_h=grid_h,
            curvature_bound=curvature_bound,
        )
    )


def control_square_matrix(m, half: float = 1.0, grid_h: float = 0.01) -> Scene:
    fspec = FSpec(variant="constant_matrix", m=np.asarray(m, dtype=float))
    poly = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    return validate_scene(Scene(boundary=poly, metric=metric_from_control(fspec), grid_h=grid_h))


def two_speed_scene(half: float = 1.0, fast: float = 2.0, slow: float = 1.0, grid_h: float = 0.01) -> Scene:
    """Isotropic two-speed medium sampled on a grid: speed `fast` left of x=0, `slow` right.

    Stored as the metric A = Id / c^2 on a grid twice as fine as grid_h so the
    bilinear transition band stays narrow.
    """
    hg = grid_h / 2.0
    nx = int(round(2 * half / hg)) + 1
    ny = nx
    xs = -half + hg * np.arange(nx)
    c = np.where(xs < 0.0, fast, slow)
    a_diag = np.tile((1.0 / c**2)[None, :], (ny, 1))
    grid = MetricGrid(
        origin=np.array([-half, -half]),
        h=hg,
        nx=nx,
        ny=ny,
        a11=a_diag.copy(),
        a12=np.zeros((ny, nx)),
        a22=a_diag.copy(),
    )
    poly = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    return validate_scene(
        Scene(boundary=poly, metric=MetricField(kind="grid_sampled", grid=grid), grid_h=grid_h)
    )


def euclidean_square_on_lattice(half: float = 1.0, grid_h: float = 0.01) -> Scene:
    """Identity metric stored as a constant matrix: forces the lattice backend."""
    poly = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    metric = MetricField(kind="constant_matrix", const=np.eye(2))
    return validate_scene(Scene(boundary=poly, metric=metric, grid_h=grid_h))
