import numpy as np
import pytest

from polarshape import scenegen as sg
from polarshape import stokes as stk


def random_valid_stokes(rng, shape, s0_range=(0.05, 1.0), dtype=np.float32):
    """Physically valid random Stokes planes: s0 > 0, polarization <= s0."""
    s0 = rng.uniform(*s0_range, size=shape)
    dolp = rng.uniform(0.0, 1.0, size=shape)
    aolp = rng.uniform(-np.pi / 2, np.pi / 2, size=shape)
    s1 = s0 * dolp * np.cos(2 * aolp)
    s2 = s0 * dolp * np.sin(2 * aolp)
    return stk.StokesImage(s0.astype(dtype), s1.astype(dtype), s2.astype(dtype))


def backlit_probe_sphere(resolution=(256, 306)):
    """Single backlit sphere: shading sits at the s0 floor everywhere, so
    AoLP noise sensitivity depends on polarization strength alone."""
    camera = sg.CameraPose(azimuth=0.4, elevation=0.9, radius=2.5)
    view = camera.position / np.linalg.norm(camera.position)
    scene = sg.ToyScene(
        spheres=(sg.ToySphere(0.0, 0.0, 1.0, 1.0),),
        ground=False,
        light_dir=tuple(-view),
        kappa=0.6,
    )
    return sg.toy_render(scene, resolution, camera, frame_half_extent=1.4)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240817)
