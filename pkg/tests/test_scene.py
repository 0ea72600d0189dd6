import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import medialflow as mf
from medialflow.gallery import regular_polygon_scene, square_scene, two_speed_scene
from medialflow.scene import (
    MetricField,
    Scene,
    classify_point,
    points_inside,
    polygon_is_simple,
    segment_inside,
    signed_area,
    validate_scene,
)


def _scene_dict(polygon, metric=None, **extra):
    d = {"boundary": {"polygon": polygon}, "metric": metric or {"type": "euclidean"}}
    d.update(extra)
    return d


def test_load_unit_square(tmp_path):
    path = tmp_path / "sq.json"
    path.write_text(json.dumps(_scene_dict([[0, 0], [1, 0], [1, 1], [0, 1]])))
    scene = mf.load_scene(str(path))
    assert len(scene.boundary) == 4
    assert scene.metric.is_euclidean
    assert scene.grid_h == 0.01


def test_reject_bowtie(tmp_path):
    path = tmp_path / "bow.json"
    path.write_text(json.dumps(_scene_dict([[0, 0], [1, 1], [1, 0], [0, 1]])))
    with pytest.raises(mf.SceneValidationError, match="non-simple"):
        mf.load_scene(str(path))


def test_reject_clockwise(tmp_path):
    path = tmp_path / "cw.json"
    path.write_text(json.dumps(_scene_dict([[0, 0], [0, 1], [1, 1], [1, 0]])))
    with pytest.raises(mf.SceneValidationError, match="clockwise"):
        mf.load_scene(str(path))


def test_reject_non_spd_metric(tmp_path):
    path = tmp_path / "bad.json"
    metric = {"type": "constant_matrix", "a": [[1, 0], [0, -1]]}
    path.write_text(json.dumps(_scene_dict([[0, 0], [1, 0], [1, 1], [0, 1]], metric)))
    with pytest.raises(mf.SceneValidationError, match="non-SPD"):
        mf.load_scene(str(path))


def test_reject_parse_error(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    with pytest.raises(mf.SceneValidationError, match="parse error"):
        mf.load_scene(str(path))


def test_reject_negative_curvature_bound():
    poly = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    with pytest.raises(mf.SceneValidationError, match="curvature_bound"):
        validate_scene(Scene(boundary=poly, metric=MetricField(kind="euclidean"), curvature_bound=-1.0))


def test_roundtrip_save_load(tmp_path):
    scene = two_speed_scene(grid_h=0.05)
    path = str(tmp_path / "ts.json")
    mf.save_scene(scene, path)
    again = mf.load_scene(path)
    d1 = mf.scene_to_dict(scene)
    d2 = mf.scene_to_dict(again)
    assert d1 == d2


def test_roundtrip_curvature_and_grid_h(tmp_path):
    poly = [[0, 0], [1, 0], [1, 1], [0, 1]]
    d = _scene_dict(poly, {"type": "constant_matrix", "a": [[2, 0.5], [0.5, 1]]},
                    curvature_bound=0.7, grid_h=0.02)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(d))
    scene = mf.load_scene(str(path))
    assert scene.curvature_bound == 0.7
    assert scene.grid_h == 0.02
    assert mf.scene_to_dict(scene)["metric"]["a"] == [[2, 0.5], [0.5, 1]]


def test_diameter_square(square):
    assert mf.diameter(square) == pytest.approx(2 * math.sqrt(2), abs=1e-15)


def test_diameter_hexagon():
    hexagon = regular_polygon_scene(6, circumradius=1.0)
    assert mf.diameter(hexagon) == pytest.approx(2.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    angle=st.floats(0, 2 * math.pi, allow_nan=False),
    dx=st.floats(-5, 5, allow_nan=False),
    dy=st.floats(-5, 5, allow_nan=False),
)
def test_diameter_rigid_motion_invariant(angle, dx, dy):
    scene = square_scene()
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    moved = validate_scene(
        Scene(boundary=scene.boundary @ rot.T + np.array([dx, dy]), metric=MetricField(kind="euclidean"))
    )
    assert mf.diameter(moved) == pytest.approx(mf.diameter(scene), rel=1e-12)


def test_signed_area_orientation():
    ccw = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    assert signed_area(ccw) == pytest.approx(1.0)
    assert signed_area(ccw[::-1]) == pytest.approx(-1.0)


def test_simplicity_hexagon(hexagon_vertices):
    assert polygon_is_simple(hexagon_vertices)


def test_containment_classification(square):
    assert classify_point(square.boundary, np.array([0.0, 0.0])) == "inside"
    assert classify_point(square.boundary, np.array([2.0, 0.0])) == "outside"
    assert classify_point(square.boundary, np.array([1.0, 0.0])) == "boundary"
    pts = np.array([[0.5, 0.5], [1.5, 0.0], [-0.99, 0.99]])
    assert points_inside(square.boundary, pts).tolist() == [True, False, True]


def test_segment_inside_lshape(lshape):
    a = np.array([0.5, 0.5])
    b = np.array([0.5, 1.8])
    assert segment_inside(lshape.boundary, a, b)
    c = np.array([1.8, 0.5])
    # straight segment from the upper arm to the lower arm clips the notch
    assert not segment_inside(lshape.boundary, b, c)


def test_grid_sampled_metric_interpolation():
    scene = two_speed_scene(grid_h=0.02, fast=2.0, slow=1.0)
    a_left = scene.metric.matrix(np.array([-0.5, 0.0]))
    a_right = scene.metric.matrix(np.array([0.5, 0.0]))
    assert a_left[0, 0] == pytest.approx(0.25)
    assert a_right[0, 0] == pytest.approx(1.0)
    assert scene.metric.lambda_min == pytest.approx(0.25, rel=1e-6)


def test_diameter_grid_sampled_constant_four():
    # metric 4*Id as a sampled grid: distances double, diameter ~ 4 sqrt(2)
    half = 1.0
    hg = 0.02
    nx = int(round(2 * half / hg)) + 1
    from medialflow.scene import MetricGrid

    grid = MetricGrid(
        origin=np.array([-half, -half]),
        h=hg,
        nx=nx,
        ny=nx,
        a11=np.full((nx, nx), 4.0),
        a12=np.zeros((nx, nx)),
        a22=np.full((nx, nx), 4.0),
    )
    poly = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    scene = validate_scene(
        Scene(boundary=poly, metric=MetricField(kind="grid_sampled", grid=grid), grid_h=0.02)
    )
    est = mf.diameter(scene)
    assert abs(est - 4 * math.sqrt(2)) <= 6 * scene.grid_h
