import numpy as np
import pytest

from skytrace.geometry import Building, Scene
from skytrace.materials import BUILTIN_MATERIALS


def rect(cx, cy, w, d):
    return np.array(
        [
            [cx - w / 2, cy - d / 2],
            [cx + w / 2, cy - d / 2],
            [cx + w / 2, cy + d / 2],
            [cx - w / 2, cy + d / 2],
        ]
    )


def make_scene(buildings=(), ground="perfect", building="concrete", bounds=None):
    return Scene.build(
        list(buildings),
        BUILTIN_MATERIALS[ground],
        BUILTIN_MATERIALS[building],
        bounds=bounds,
    )


def random_scene(rng, n_buildings=20, extent=400.0, hmin=5.0, hmax=40.0):
    buildings = []
    for _ in range(n_buildings):
        cx, cy = rng.uniform(-extent / 2, extent / 2, size=2)
        w, d = rng.uniform(10, 60, size=2)
        buildings.append(Building(rect(cx, cy, w, d), rng.uniform(hmin, hmax)))
    return make_scene(buildings, bounds=[[-extent, -extent], [extent, extent]])


@pytest.fixture
def ground_scene():
    """Bare perfect-reflector ground spanning +-2.6 km (two-ray geometries)."""
    return make_scene(bounds=[[-2600, -2600], [2600, 2600]])


@pytest.fixture
def slab_scene():
    """One 40 x 30 m slab, 20 m tall, centered at (50, 0)."""
    return make_scene([Building(rect(50, 0, 40, 30), 20.0)], bounds=[[-200, -200], [200, 200]])
