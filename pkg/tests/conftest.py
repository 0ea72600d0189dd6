import numpy as np
import pytest

from medialflow.gallery import (
    constant_metric_square,
    control_square,
    disk_scene,
    ellipse_scene,
    lshape_scene,
    square_scene,
)


@pytest.fixture(scope="session")
def square():
    return square_scene()


@pytest.fixture(scope="session")
def disk():
    return disk_scene()


@pytest.fixture(scope="session")
def ellipse():
    return ellipse_scene()


@pytest.fixture(scope="session")
def lshape():
    return lshape_scene()


@pytest.fixture(scope="session")
def g4_square():
    return constant_metric_square()


@pytest.fixture(scope="session")
def control2_square():
    return control_square(speed=2.0)


@pytest.fixture(scope="session")
def hexagon_vertices():
    # fixed star-shaped hexagon (vertices sorted by polar angle => simple)
    return np.array(
        [
            [1.8, 0.2],
            [0.9, 1.5],
            [-0.6, 1.7],
            [-1.7, 0.3],
            [-1.0, -1.4],
            [0.7, -1.6],
        ]
    )
