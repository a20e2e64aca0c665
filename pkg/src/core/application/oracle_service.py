# -*- coding: utf-8 -*-
import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from src.core.application.gaussian_ops import ALPHA_THRESHOLD, project_scene, splat_alphas
from src.core.application.metrics import dequantize, psnr, quantize
from src.core.application.raster_service import RenderResult
from src.core.application.sort_hierarchy import Fragment, full_sort_blend, pixel_ray_depths
from src.core.domain.errors import ConfigError, InvariantViolation
from src.core.domain.models import (
    CameraModel,
    FrameStats,
    PixelRect,
    ProjectionMode,
    RenderSettings,
    Scene,
)

logger = logging.getLogger(__name__)

PIXEL_CHUNK = 2048


@dataclass
class LargeFovReport:
    wide_image: np.ndarray
    cropped_image: np.ndarray
    normal_image: np.ndarray
    psnr: float


class OracleService:
    def __init__(self, settings: RenderSettings = None):
        self.settings = settings or RenderSettings()

    def reference_render(
        self,
        scene: Scene,
        cam: CameraModel,
        projection_mode: ProjectionMode = None,
    ) -> np.ndarray:
        """
        Brute-force renderer: every pixel evaluates every projected splat along
        its own ray, sorts the contributions by ray depth and blends them front
        to back. No tiles, no windows.

        :param scene: Scene to render.
        :param cam: Camera.
        :param projection_mode: Overrides the settings' projection mode.
        :return: Linear RGB image (H, W, 3).
        """
        mode = projection_mode or self.settings.projection_mode
        background = np.asarray(self.settings.background, dtype=np.float64)
        splats = project_scene(scene, cam, mode, self.settings.depth_mode)
        points = cam.pixel_centers(0, 0, cam.width, cam.height)
        colors = np.tile(background, (points.shape[0], 1))

        for chunk_start in range(0, points.shape[0], PIXEL_CHUNK):
            chunk = points[chunk_start : chunk_start + PIXEL_CHUNK]
            if not splats:
                break
            directions = cam.pixel_directions(chunk)
            alphas = np.stack([splat_alphas(s, chunk, cam) for s in splats])
            depths = np.stack([pixel_ray_depths(s, directions, cam) for s in splats])
            for column in range(chunk.shape[0]):
                rows = np.flatnonzero(alphas[:, column] >= ALPHA_THRESHOLD)
                fragments = [
                    Fragment(
                        float(depths[row, column]),
                        splats[row].index,
                        float(alphas[row, column]),
                        splats[row].color,
                    )
                    for row in rows
                ]
                blend = full_sort_blend(fragments, self.settings.t_min)
                colors[chunk_start + column] = blend.composite(background)

        return colors.reshape(cam.height, cam.width, 3)

    def large_fov_protocol(
        self,
        scene: Scene,
        cam: CameraModel,
        renderer: Callable[[Scene, CameraModel], RenderResult],
        factor: int = 3,
    ) -> LargeFovReport:
        """
        Render with a field of view widened by ``factor`` (same focal length in
        pixels, ``factor`` times the resolution), cut out the original view
        pixel-perfectly and compare it against the normal render.

        :param scene: Scene to render.
        :param cam: Normal camera.
        :param renderer: Callable rendering (scene, camera) into a RenderResult.
        :param factor: Odd widening factor.
        :return: LargeFovReport; PSNR is measured on 8-bit quantized images.
        :raises ConfigError: If ``factor`` is not an odd integer ≥ 1.
        """
        wide_cam, crop = wide_fov_camera(cam, factor)
        wide = renderer(scene, wide_cam).image
        normal = renderer(scene, cam).image
        cropped = wide[crop.y0 : crop.y1, crop.x0 : crop.x1]
        value = psnr(dequantize(quantize(cropped)), dequantize(quantize(normal)))
        logger.info("Large-FOV crop PSNR %.3f dB (factor %d)", value, factor)
        return LargeFovReport(wide, cropped, normal, value)


def wide_fov_camera(cam: CameraModel, factor: int = 3) -> Tuple[CameraModel, PixelRect]:
    """Widened camera and the crop rectangle that reproduces ``cam`` inside it."""
    if factor < 1 or factor % 2 == 0:
        raise ConfigError(f"large-FOV factor must be an odd integer, got {factor}")
    margin = (factor - 1) // 2
    offset = np.array([margin * cam.width, margin * cam.height], dtype=np.float64)
    wide = CameraModel(
        cam.position,
        cam.orientation,
        cam.focal,
        cam.principal_point + offset,
        (factor * cam.width, factor * cam.height),
        cam.near_plane,
    )
    x0, y0 = int(offset[0]), int(offset[1])
    return wide, PixelRect(x0, y0, x0 + cam.width, y0 + cam.height)


def collect_stats(result: RenderResult) -> FrameStats:
    """
    Validated counters of a rendered frame.

    :raises InvariantViolation: If the tile classes do not account for every tile
        or more tiles are visible than exist.
    """
    stats = result.stats
    if sum(stats.tiles_by_class.values()) != stats.total_tiles:
        raise InvariantViolation(
            f"tile classes sum to {sum(stats.tiles_by_class.values())}, grid has {stats.total_tiles}"
        )
    if stats.visible_tiles > stats.total_tiles:
        raise InvariantViolation("more visible tiles than tiles")
    if stats.pairs_instantiated > stats.pairs_without_visibility:
        raise InvariantViolation("visibility culling added pairs")
    return stats
