# -*- coding: utf-8 -*-
from typing import List, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from src.core.domain.errors import ConfigError
from src.core.domain.models import CameraModel


def interpolate_path(cameras: Sequence[CameraModel], samples: int = 30) -> List[CameraModel]:
    """
    Pose path through consecutive cameras: positions are interpolated
    linearly, orientations spherically. Each camera pair contributes
    ``samples`` poses; the shared joint between pairs appears once.

    :param cameras: At least two cameras; intrinsics follow the first of each pair.
    :param samples: Poses per camera pair, at least 2.
    :return: List of cameras.
    :raises ConfigError: If fewer than two cameras or samples are given.
    """
    if len(cameras) < 2:
        raise ConfigError("camera path needs at least 2 poses")
    if samples < 2:
        raise ConfigError("samples must be at least 2")

    path = []
    for pair, (start, end) in enumerate(zip(cameras[:-1], cameras[1:])):
        steps = np.linspace(0.0, 1.0, samples)
        if pair > 0:
            steps = steps[1:]
        slerp = Slerp([0.0, 1.0], Rotation.from_matrix([start.orientation, end.orientation]))
        orientations = slerp(steps).as_matrix()
        for step, orientation in zip(steps, orientations):
            position = (1.0 - step) * start.position + step * end.position
            path.append(start.with_pose(position, orientation))
    return path


def stereo_pair(cam: CameraModel, eye_offset: float) -> Tuple[CameraModel, CameraModel]:
    """Left and right eye cameras shifted by ∓``eye_offset`` along the camera x axis."""
    right_axis = cam.orientation[0]
    return (
        cam.with_pose(cam.position - eye_offset * right_axis, cam.orientation),
        cam.with_pose(cam.position + eye_offset * right_axis, cam.orientation),
    )
