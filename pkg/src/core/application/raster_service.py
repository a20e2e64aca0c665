# -*- coding: utf-8 -*-
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from PIL import Image

from src.core.application.foveation import (
    build_partition,
    crop_frustum,
    group_average,
    group_centers,
    half_resolution_camera,
    periphery_postprocess,
    reduce_mask,
    subtile_classes,
    uniform_partition,
    weighted_bounds,
)
from src.core.application.gaussian_ops import ALPHA_THRESHOLD, project_scene, splat_alphas
from src.core.application.sort_hierarchy import (
    Fragment,
    StreamEntry,
    pixel_ray_depths,
    resorted_blend,
    subtile_recull,
)
from src.core.application.tile_pipeline import (
    build_visibility_index,
    full_visibility,
    instantiate_pairs,
    sort_pairs,
)
from src.core.domain.errors import InvariantViolation
from src.core.domain.models import (
    CameraModel,
    FoveaConfig,
    FrameStats,
    PairList,
    PixelRect,
    RenderSettings,
    Scene,
    Splat2D,
    TileClass,
    TileGrid,
    TilePartition,
    VisibilityIndex,
)

logger = logging.getLogger(__name__)


@dataclass
class RenderResult:
    """Linear RGB image (H, W, 3) in [0, ∞) with the frame's counters and stage timings."""

    image: np.ndarray
    stats: FrameStats
    timings: Dict[str, float] = field(default_factory=dict)
    partition: Optional[TilePartition] = None


@dataclass
class _TileOutput:
    rect: PixelRect
    pixels: np.ndarray
    samples: int = 0
    overflows: int = 0


class RasterService:
    def __init__(self, settings: RenderSettings = None):
        self.settings = settings or RenderSettings()

    def _workers(self) -> int:
        return self.settings.threads or os.cpu_count() or 1

    def render_full(self, scene: Scene, cam: CameraModel) -> RenderResult:
        """
        Render every tile at full resolution.

        :param scene: Scene to render.
        :param cam: Camera.
        :return: RenderResult.
        """
        grid = TileGrid(cam.width, cam.height)
        vi = full_visibility(grid)
        return self._render_partitioned(scene, cam, grid, vi, uniform_partition(grid))

    def render_foveated_single_pass(
        self,
        scene: Scene,
        cam: CameraModel,
        cfg: FoveaConfig,
        mask: Optional[np.ndarray] = None,
    ) -> RenderResult:
        """
        Single-pass foveated render: one instantiate and sort pass over coarse
        tiles, each tile rendered according to its class.

        :param scene: Scene to render.
        :param cam: Camera.
        :param cfg: Foveation layout.
        :param mask: Optional (H, W) visibility raster, values > 0 visible.
        :return: RenderResult with the partition attached.
        :raises ResolutionMismatchError: If the mask does not match the camera.
        """
        grid = TileGrid(cam.width, cam.height)
        if mask is not None:
            mask_vi = build_visibility_index(mask, grid)
        else:
            mask_vi = full_visibility(grid)
        partition = build_partition(cfg, mask_vi, grid)
        pair_vi = mask_vi if cfg.enable_visibility_cull else full_visibility(grid)
        result = self._render_partitioned(scene, cam, grid, pair_vi, partition)
        result.partition = partition
        return result

    def render_foveated_two_pass(
        self,
        scene: Scene,
        cam: CameraModel,
        cfg: FoveaConfig,
        mask: Optional[np.ndarray] = None,
    ) -> RenderResult:
        """
        Two-pass baseline: a full-resolution pass over the tight frustum of the
        blended center, then a half-resolution pass over the whole frame that is
        bilinearly upsampled and blended in with the same weights.

        :param scene: Scene to render.
        :param cam: Camera.
        :param cfg: Foveation layout.
        :param mask: Optional (H, W) visibility raster for the periphery pass.
        :return: RenderResult whose counters sum both passes.
        """
        grid = TileGrid(cam.width, cam.height)
        mask_vi = build_visibility_index(mask, grid) if mask is not None else full_visibility(grid)
        partition = build_partition(cfg, mask_vi, grid)
        weights = partition.weights

        low_cam = half_resolution_camera(cam)
        low_grid = TileGrid(low_cam.width, low_cam.height)
        if mask is not None:
            low_vi = build_visibility_index(reduce_mask(mask), low_grid)
        else:
            low_vi = full_visibility(low_grid)
        low = self._render_partitioned(
            scene, low_cam, low_grid, low_vi, uniform_partition(low_grid, low_vi)
        )
        upsampled = upsample_bilinear(low.image, cam.width, cam.height)

        full_layer = upsampled.copy()
        stats = low.stats
        timings = dict(low.timings)
        rect = weighted_bounds(weights)
        if rect is not None:
            center = self.render_full(scene, crop_frustum(cam, rect))
            full_layer[rect.y0 : rect.y1, rect.x0 : rect.x1] = center.image
            stats = center.stats.merged(low.stats)
            for stage, seconds in center.timings.items():
                timings[stage] = timings.get(stage, 0.0) + seconds

        image = weights[..., None] * full_layer + (1.0 - weights[..., None]) * upsampled
        stats.tiles_by_class = partition.class_counts()
        stats.total_tiles = grid.tile_count
        stats.visible_tiles = mask_vi.visible_count
        return RenderResult(image=image, stats=stats, timings=timings, partition=partition)

    def _render_partitioned(
        self,
        scene: Scene,
        cam: CameraModel,
        grid: TileGrid,
        vi: VisibilityIndex,
        partition: TilePartition,
    ) -> RenderResult:
        settings = self.settings
        timings = {}

        started = time.perf_counter()
        splats = project_scene(scene, cam, settings.projection_mode, settings.depth_mode)
        timings["project"] = time.perf_counter() - started

        started = time.perf_counter()
        pairs, report = instantiate_pairs(splats, grid, vi, cam, per_tile_depth=settings.resort)
        timings["instantiate"] = time.perf_counter() - started

        started = time.perf_counter()
        pairs = sort_pairs(pairs)
        timings["sort"] = time.perf_counter() - started

        fine_classes = subtile_classes(partition, grid)
        started = time.perf_counter()
        with ThreadPoolExecutor(max_workers=self._workers()) as executor:
            outputs = list(
                executor.map(
                    lambda tile_id: self._render_tile(
                        tile_id, splats, pairs, grid, cam, partition, fine_classes
                    ),
                    range(grid.tile_count),
                )
            )
        image = np.empty((cam.height, cam.width, 3))
        coverage = np.zeros((cam.height, cam.width), dtype=np.int32)
        for output in outputs:
            rect = output.rect
            image[rect.y0 : rect.y1, rect.x0 : rect.x1] = output.pixels
            coverage[rect.y0 : rect.y1, rect.x0 : rect.x1] += 1
        if not np.all(coverage == 1):
            raise InvariantViolation("output pixels were not written exactly once")
        timings["rasterize"] = time.perf_counter() - started

        started = time.perf_counter()
        image = periphery_postprocess(image, partition, grid)
        timings["postprocess"] = time.perf_counter() - started

        stats = FrameStats(
            pairs_instantiated=report.reserved,
            pairs_after_exact_cull=report.emitted,
            tiles_by_class=partition.class_counts(),
            per_pixel_samples=sum(output.samples for output in outputs),
            resort_overflows=sum(output.overflows for output in outputs),
            gaussians_preprocessed=report.splats_in,
            total_tiles=grid.tile_count,
            visible_tiles=vi.visible_count,
            pairs_without_visibility=report.without_visibility,
        )
        if stats.resort_overflows:
            logger.warning("Resort window overflowed %d times", stats.resort_overflows)
        return RenderResult(image=image, stats=stats, timings=timings, partition=partition)

    def _render_tile(
        self,
        tile_id: int,
        splats: Sequence[Splat2D],
        pairs: PairList,
        grid: TileGrid,
        cam: CameraModel,
        partition: TilePartition,
        fine_classes: np.ndarray,
    ) -> _TileOutput:
        rect = grid.tile_pixels(tile_id)
        tile_class = partition.tile_class(*grid.tile_coords(tile_id))
        background = np.asarray(self.settings.background, dtype=np.float64)

        if tile_class == TileClass.INVISIBLE:
            pixels = np.broadcast_to(background, (rect.height, rect.width, 3)).copy()
            return _TileOutput(rect, pixels)

        start, end = pairs.tile_range(tile_id)
        positions = pairs.values[start:end]
        fine = grid.fine_tile_size

        pixels = np.empty((rect.height, rect.width, 3))
        samples = overflows = 0
        for sub in grid.subtile_pixels(tile_id):
            sub_class = fine_classes[sub.y0 // fine, sub.x0 // fine]
            stream = subtile_recull(positions, sub, splats, cam, self.settings.resort)

            if sub_class == TileClass.LOW_RES:
                points = group_centers(sub)
                colors, sub_samples, sub_overflows = self._blend_points(points, stream, splats, cam)
                groups = colors.reshape((sub.height + 1) // 2, (sub.width + 1) // 2, 3)
                block = np.repeat(np.repeat(groups, 2, axis=0), 2, axis=1)[: sub.height, : sub.width]
            else:
                points = cam.pixel_centers(sub.x0, sub.y0, sub.x1, sub.y1)
                colors, sub_samples, sub_overflows = self._blend_points(points, stream, splats, cam)
                block = colors.reshape(sub.height, sub.width, 3)
                if sub_class == TileClass.HYBRID:
                    weights = partition.weights[sub.y0 : sub.y1, sub.x0 : sub.x1, None]
                    block = weights * block + (1.0 - weights) * group_average(block)

            pixels[sub.y0 - rect.y0 : sub.y1 - rect.y0, sub.x0 - rect.x0 : sub.x1 - rect.x0] = block
            samples += sub_samples
            overflows += sub_overflows
        return _TileOutput(rect, pixels, samples, overflows)

    def _blend_points(
        self,
        points: np.ndarray,
        stream: List[StreamEntry],
        splats: Sequence[Splat2D],
        cam: CameraModel,
    ):
        """
        Blend the stream at every sample position.

        :return: (colors (P, 3), evaluated samples, overflow events)
        """
        settings = self.settings
        background = np.asarray(settings.background, dtype=np.float64)
        count = points.shape[0]
        if not stream:
            return np.tile(background, (count, 1)), 0, 0

        alphas = np.empty((len(stream), count))
        depths = np.empty((len(stream), count))
        directions = cam.pixel_directions(points)
        for row, entry in enumerate(stream):
            splat = splats[entry.position]
            alphas[row] = splat_alphas(splat, points, cam)
            if settings.resort:
                depths[row] = pixel_ray_depths(splat, directions, cam)
            else:
                depths[row] = entry.depth

        colors = np.empty((count, 3))
        overflows = 0
        for column in range(count):
            rows = np.flatnonzero(alphas[:, column] >= ALPHA_THRESHOLD)
            fragments = [
                Fragment(
                    float(depths[row, column]),
                    stream[row].index,
                    float(alphas[row, column]),
                    splats[stream[row].position].color,
                )
                for row in rows
            ]
            blend = resorted_blend(fragments, settings.resort_k, settings.resort, settings.t_min)
            colors[column] = blend.composite(background)
            overflows += blend.overflows
        return colors, len(stream) * count, overflows


def upsample_bilinear(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize of an (h, w, 3) float image, one Pillow "F" plane per channel."""
    channels = []
    for channel in range(image.shape[2]):
        plane = Image.fromarray(np.ascontiguousarray(image[..., channel], dtype=np.float32))
        resized = plane.resize((width, height), Image.BILINEAR)
        channels.append(np.asarray(resized, dtype=np.float64))
    return np.stack(channels, axis=-1)
