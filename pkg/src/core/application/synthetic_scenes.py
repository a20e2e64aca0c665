# -*- coding: utf-8 -*-
"""
Deterministic test scenes, the camera each is meant to be viewed with and an
oval headset-style visibility mask.
"""
import math
from typing import Callable, Dict, List

import numpy as np

from src.core.application.gaussian_ops import SH_C0
from src.core.domain.models import CameraModel, Gaussian3D, Scene


def color_to_dc(color) -> np.ndarray:
    """Degree-0 coefficient whose evaluated color is ``color``."""
    return (np.asarray(color, dtype=np.float64) - 0.5) / SH_C0


def make_gaussian(mean, scale, opacity, color, rotation=(1.0, 0.0, 0.0, 0.0), degree=0) -> Gaussian3D:
    sh = np.zeros(((degree + 1) ** 2, 3))
    sh[0] = color_to_dc(color)
    scale = np.broadcast_to(np.asarray(scale, dtype=np.float64), (3,))
    return Gaussian3D(mean, rotation, scale, opacity, sh)


def default_camera(width: int = 64, height: int = 64, focal: float = None) -> CameraModel:
    """Camera at the origin looking down +z, principal point at the image center."""
    focal = float(focal if focal is not None else width)
    return CameraModel(
        position=np.zeros(3),
        orientation=np.eye(3),
        focal=(focal, focal),
        principal_point=(width / 2.0, height / 2.0),
        resolution=(width, height),
    )


def _random_rotations(rng: np.random.Generator, count: int) -> np.ndarray:
    q = rng.normal(size=(count, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def cluster_scene(count: int = 100, seed: int = 7) -> Scene:
    """Random anisotropic splats in a box in front of the camera, degree-1 colors."""
    rng = np.random.default_rng(seed)
    means = np.column_stack(
        [
            rng.uniform(-1.2, 1.2, count),
            rng.uniform(-1.2, 1.2, count),
            rng.uniform(3.0, 6.0, count),
        ]
    )
    scales = np.exp(rng.uniform(np.log(0.04), np.log(0.3), (count, 3)))
    opacities = rng.uniform(0.3, 0.95, count)
    rotations = _random_rotations(rng, count)
    colors = rng.uniform(0.05, 0.95, (count, 3))
    gaussians = []
    for i in range(count):
        sh = np.zeros((4, 3))
        sh[0] = color_to_dc(colors[i])
        sh[1:] = rng.normal(scale=0.15, size=(3, 3))
        gaussians.append(Gaussian3D(means[i], rotations[i], scales[i], opacities[i], sh))
    return Scene.from_list(gaussians)


def layers_scene() -> Scene:
    """Three overlapping fronto-parallel sheets of flattened splats at z = 3, 4, 5."""
    gaussians = []
    palette = [(0.9, 0.2, 0.2), (0.2, 0.8, 0.3), (0.2, 0.3, 0.9)]
    for layer, (depth, color) in enumerate(zip((3.0, 4.0, 5.0), palette)):
        shift = 0.15 * (layer - 1)
        for row in range(3):
            for column in range(3):
                mean = (-0.6 + 0.6 * column + shift, -0.6 + 0.6 * row - shift, depth)
                gaussians.append(make_gaussian(mean, (0.35, 0.35, 0.05), 0.7, color))
    return Scene.from_list(gaussians)


def offaxis_scene() -> Scene:
    """One large splat 60° off the optical axis next to a few small centered ones."""
    gaussians = [
        make_gaussian((math.sqrt(3.0), 0.0, 1.0), 0.5, 0.9, (0.95, 0.85, 0.2)),
        make_gaussian((0.0, 0.0, 4.0), 0.25, 0.8, (0.2, 0.4, 0.9)),
        make_gaussian((-0.4, 0.3, 5.0), 0.3, 0.6, (0.8, 0.3, 0.6)),
    ]
    return Scene.from_list(gaussians)


def backdrop_scene(seed: int = 11) -> Scene:
    """Opaque wall of large splats at z = 8 behind a handful of foreground splats."""
    rng = np.random.default_rng(seed)
    gaussians = []
    for y in np.linspace(-3.0, 3.0, 7):
        for x in np.linspace(-3.0, 3.0, 7):
            shade = 0.35 + 0.3 * rng.random()
            gaussians.append(make_gaussian((x, y, 8.0), (0.7, 0.7, 0.1), 0.95, (shade, shade, 0.6)))
    for _ in range(8):
        mean = (rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(3.0, 5.0))
        gaussians.append(make_gaussian(mean, rng.uniform(0.1, 0.3), 0.8, rng.uniform(0.1, 0.9, 3)))
    return Scene.from_list(gaussians)


BUNDLED_SCENES: Dict[str, Callable[[], Scene]] = {
    "cluster": cluster_scene,
    "layers": layers_scene,
    "offaxis": offaxis_scene,
    "backdrop": backdrop_scene,
}


def orbit_cameras(
    count: int = 3, width: int = 64, height: int = 64, radius: float = 0.4
) -> List[CameraModel]:
    """Cameras on a small arc around the origin, all looking down +z."""
    cameras = []
    for angle in np.linspace(-0.15, 0.15, count):
        c, s = math.cos(angle), math.sin(angle)
        # rotation about y; rows are the camera axes in world space
        orientation = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
        position = (radius * math.sin(angle), 0.0, 0.0)
        cameras.append(default_camera(width, height).with_pose(position, orientation))
    return cameras


def hmd_mask(width: int, height: int, radius_x: float = 0.4, radius_y: float = 0.45) -> np.ndarray:
    """Oval visibility mask (bool, (H, W)); semi-axes are fractions of the image size."""
    xs = (np.arange(width) + 0.5 - width / 2.0) / (radius_x * width)
    ys = (np.arange(height) + 0.5 - height / 2.0) / (radius_y * height)
    return xs[None, :] ** 2 + ys[:, None] ** 2 <= 1.0
