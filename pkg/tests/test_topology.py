import numpy as np
import pytest

import medialflow as mf
from medialflow.topology import check_retraction, extract_skeleton, homotopy_map

from helpers import hausdorff_to_set, two_projection_mask


def test_square_skeleton_on_diagonals(square):
    cloud = extract_skeleton(square, 129)
    pts = cloud.points
    cell = 2.0 / 128
    off = np.minimum(np.abs(pts[:, 0] - pts[:, 1]), np.abs(pts[:, 0] + pts[:, 1]))
    assert off.max() <= cell
    # coverage: each interior diagonal grid point is near a flagged point
    xs = np.linspace(-1, 1, 129)[2:-2]
    targets = np.vstack([np.column_stack([xs, xs]), np.column_stack([xs, -xs])])
    assert hausdorff_to_set(targets, pts) <= cell
    assert np.all(cloud.speed_sq < 1 - 1e-3)


def test_ellipse_skeleton_is_major_segment(ellipse):
    cloud = extract_skeleton(ellipse, 257)
    pts = cloud.points
    cell = 4.0 / 256
    assert np.abs(pts[:, 1]).max() <= cell
    assert np.abs(pts[:, 0]).max() <= 1.5 + cell
    xs = np.linspace(-1.45, 1.45, 59)
    targets = np.column_stack([xs, np.zeros_like(xs)])
    assert hausdorff_to_set(targets, pts) <= cell


def test_disk_skeleton_collapses_to_center(disk):
    cloud = extract_skeleton(disk, 129)
    cell = 2.0 / 128
    assert len(cloud) >= 1
    assert np.linalg.norm(cloud.points, axis=1).max() <= cell
    # refinement: a finer polygon leaves the same single-cell cluster
    from medialflow.gallery import disk_scene

    fine = disk_scene(n=512)
    cloud_fine = extract_skeleton(fine, 129)
    assert np.linalg.norm(cloud_fine.points, axis=1).max() <= cell


def test_skeleton_rejects_low_resolution(square):
    with pytest.raises(ValueError):
        extract_skeleton(square, 8)


def test_homotopy_identity_at_zero(square):
    x = np.array([0.123, -0.456])
    assert np.array_equal(homotopy_map(square, x, 0.0), x)


def test_homotopy_endpoint_square(square):
    end = homotopy_map(square, np.array([0.5, 0.1]), 1.0)
    assert np.linalg.norm(end) <= 1e-3


def test_homotopy_keeps_diagonal_in_diagonal(square):
    for t in (0.25, 0.5, 1.0):
        p = homotopy_map(square, np.array([0.4, 0.4]), t)
        assert abs(p[0] - p[1]) <= 1e-9


def test_homotopy_rejects_bad_parameter(square):
    with pytest.raises(ValueError):
        homotopy_map(square, np.array([0.0, 0.0]), 1.5)


def test_retraction_report_square(square):
    rep = check_retraction(square, 60, dt=1e-2, resolution=65)
    assert rep.fraction_interior_to_skeleton == 1.0
    assert rep.fraction_skeleton_stays == 1.0
    assert rep.first_singular_time_max <= mf.diameter(square)
    assert rep.horizon == pytest.approx(2 * mf.diameter(square))
    assert rep.passed()


def test_retraction_disk_endpoints_near_center(disk):
    rep = check_retraction(disk, 40, dt=1e-2, resolution=65)
    assert rep.passed()
    # endpoints park at the center
    from medialflow.flow import integrate
    from medialflow.sampling import interior_points

    for x in interior_points(disk, 10, skip=17):
        traj = integrate(disk, x, rep.horizon, 1e-2)
        assert np.linalg.norm(traj.points[-1]) <= 1e-3


def test_retraction_empty_is_vacuous(square):
    rep = check_retraction(square, 0)
    assert rep.fraction_interior_to_skeleton == 1.0
    assert rep.fraction_skeleton_stays == 1.0
    assert rep.sample_count == 0


def test_two_projection_oracle_matches_flags(ellipse):
    # independent medial-axis membership test agrees with the singular flags
    xs = np.linspace(-1.4, 1.4, 41)
    on_axis = np.column_stack([xs, np.zeros_like(xs)])
    off_axis = np.column_stack([xs, np.full_like(xs, 0.35)])
    mask_on = two_projection_mask(ellipse.boundary, on_axis, sep_min=0.2, excess=0.004)
    mask_off = two_projection_mask(ellipse.boundary, off_axis, sep_min=0.2, excess=0.004)
    assert mask_on.all()
    assert not mask_off.any()
