# -*- coding: utf-8 -*-
import numpy as np
from scipy import ndimage

from src.core.domain.models import (
    CameraModel,
    FoveaConfig,
    PixelRect,
    TileClass,
    TileGrid,
    TilePartition,
    VisibilityIndex,
)

PERIPHERY_KERNEL = np.outer([1.0, 2.0, 1.0], [1.0, 2.0, 1.0]) / 16.0


def _ramp(distance: np.ndarray, padding: float) -> np.ndarray:
    if padding <= 0.0:
        return np.where(distance > 0.0, np.inf, 0.0)
    return distance / padding


def blend_weights(cfg: FoveaConfig, width: int, height: int) -> np.ndarray:
    """
    Per-pixel blend weight w, shape (H, W): 1 inside the inner rectangle,
    0 outside the padded rectangle, linear in the max-norm distance between.
    """
    gaze_x, gaze_y = cfg.gaze_for(width, height)
    half_w = 0.5 * cfg.center_fraction * width
    half_h = 0.5 * cfg.center_fraction * height
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5
    dx = np.maximum(np.abs(xs - gaze_x) - half_w, 0.0)
    dy = np.maximum(np.abs(ys - gaze_y) - half_h, 0.0)
    ratio = np.maximum(
        _ramp(dx, cfg.padding_fraction * width)[None, :],
        _ramp(dy, cfg.padding_fraction * height)[:, None],
    )
    return 1.0 - np.clip(ratio, 0.0, 1.0)


def tile_weight_extrema(weights: np.ndarray, grid: TileGrid, size: int = None):
    """Per-block (min, max) of the weights over square blocks of ``size`` px (coarse tiles by default)."""
    size = size or grid.coarse_tile_size
    gx = -(-grid.width // size)
    gy = -(-grid.height // size)
    padded = np.full((gy * size, gx * size), np.nan)
    padded[: grid.height, : grid.width] = weights
    blocks = padded.reshape(gy, size, gx, size)
    return np.nanmin(blocks, axis=(1, 3)), np.nanmax(blocks, axis=(1, 3))


def build_partition(cfg: FoveaConfig, vi: VisibilityIndex, grid: TileGrid) -> TilePartition:
    """
    Classify every coarse tile.

    :param cfg: Foveation layout.
    :param vi: Visibility index of the render resolution.
    :param grid: Tile grid.
    :return: TilePartition with classes [ty, tx] and weights [y, x].
    """
    weights = blend_weights(cfg, grid.width, grid.height)
    lowest, highest = tile_weight_extrema(weights, grid)

    classes = np.full(lowest.shape, int(TileClass.HYBRID), dtype=np.int8)
    classes[lowest >= 1.0] = TileClass.HIGH_RES
    classes[highest <= 0.0] = TileClass.LOW_RES
    if cfg.enable_visibility_cull:
        classes[~vi.bitfield] = TileClass.INVISIBLE
    return TilePartition(classes=classes, weights=weights)


def uniform_partition(grid: TileGrid, vi: VisibilityIndex = None) -> TilePartition:
    """Every tile HighRes (Invisible where ``vi`` has a zero bit)."""
    gx, gy = grid.grid_dims
    classes = np.full((gy, gx), int(TileClass.HIGH_RES), dtype=np.int8)
    if vi is not None:
        classes[~vi.bitfield] = TileClass.INVISIBLE
    return TilePartition(classes=classes, weights=np.ones((grid.height, grid.width)))


def subtile_classes(partition: TilePartition, grid: TileGrid) -> np.ndarray:
    """
    Render class of every 16-px subtile, indexed [sy, sx].

    Subtiles inherit the class of their coarse tile, except inside Hybrid
    tiles: there a subtile whose weights are all 1 renders at full resolution,
    one whose weights are all 0 renders at low resolution, and only the rest
    blend the two.
    """
    ratio = grid.coarse_tile_size // grid.fine_tile_size
    lowest, highest = tile_weight_extrema(partition.weights, grid, grid.fine_tile_size)
    inherited = np.repeat(np.repeat(partition.classes, ratio, axis=0), ratio, axis=1)
    inherited = inherited[: lowest.shape[0], : lowest.shape[1]]

    classes = inherited.copy()
    hybrid = inherited == TileClass.HYBRID
    classes[hybrid & (lowest >= 1.0)] = TileClass.HIGH_RES
    classes[hybrid & (highest <= 0.0)] = TileClass.LOW_RES
    return classes


def pixel_classes(partition: TilePartition, grid: TileGrid) -> np.ndarray:
    """Per-pixel render class (H, W) at subtile granularity."""
    size = grid.fine_tile_size
    classes = subtile_classes(partition, grid)
    expanded = np.repeat(np.repeat(classes, size, axis=0), size, axis=1)
    return expanded[: grid.height, : grid.width]


def periphery_postprocess(image: np.ndarray, partition: TilePartition, grid: TileGrid) -> np.ndarray:
    """
    Blur the low-resolution region (LowRes tiles and the all-zero-weight
    subtiles of Hybrid tiles) with (1 2 1)⊗(1 2 1)/16. The kernel footprint is
    restricted to that region and its weights renormalized.
    """
    region = pixel_classes(partition, grid) == TileClass.LOW_RES
    if not region.any():
        return image

    support = region.astype(np.float64)
    weight_sum = ndimage.correlate(support, PERIPHERY_KERNEL, mode="constant", cval=0.0)
    blurred = ndimage.correlate(
        image * support[..., None],
        PERIPHERY_KERNEL[..., None],
        mode="constant",
        cval=0.0,
    )
    result = image.copy()
    result[region] = blurred[region] / weight_sum[region][:, None]
    return result


def group_average(pixels: np.ndarray) -> np.ndarray:
    """Replace every 2×2 pixel group of an (h, w, 3) block by its mean."""
    h, w = pixels.shape[:2]
    sums = np.add.reduceat(np.add.reduceat(pixels, np.arange(0, h, 2), axis=0), np.arange(0, w, 2), axis=1)
    counts = np.add.reduceat(
        np.add.reduceat(np.ones((h, w)), np.arange(0, h, 2), axis=0), np.arange(0, w, 2), axis=1
    )
    means = sums / counts[..., None]
    return np.repeat(np.repeat(means, 2, axis=0), 2, axis=1)[:h, :w]


def group_centers(rect: PixelRect) -> np.ndarray:
    """Sample position of every 2×2 group of ``rect`` (mean of its pixel centers), row-major."""
    xs = np.arange(rect.x0, rect.x1, 2)
    ys = np.arange(rect.y0, rect.y1, 2)
    cx = (xs + np.minimum(xs + 2, rect.x1)) / 2.0
    cy = (ys + np.minimum(ys + 2, rect.y1)) / 2.0
    grid_x, grid_y = np.meshgrid(cx, cy)
    return np.stack([grid_x.ravel(), grid_y.ravel()], axis=-1)


def crop_frustum(cam: CameraModel, rect: PixelRect) -> CameraModel:
    """Sub-camera whose pixel (i, j) casts the parent's ray through (rect.x0+i, rect.y0+j)."""
    return CameraModel(
        cam.position,
        cam.orientation,
        cam.focal,
        cam.principal_point - np.array([rect.x0, rect.y0], dtype=np.float64),
        (rect.width, rect.height),
        cam.near_plane,
    )


def half_resolution_camera(cam: CameraModel) -> CameraModel:
    return CameraModel(
        cam.position,
        cam.orientation,
        cam.focal / 2.0,
        cam.principal_point / 2.0,
        ((cam.width + 1) // 2, (cam.height + 1) // 2),
        cam.near_plane,
    )


def reduce_mask(mask: np.ndarray) -> np.ndarray:
    """2×2 any-visible reduction of a (H, W) mask."""
    mask = np.asarray(mask) > 0
    h, w = mask.shape
    padded = np.zeros((h + h % 2, w + w % 2), dtype=bool)
    padded[:h, :w] = mask
    return padded.reshape(padded.shape[0] // 2, 2, padded.shape[1] // 2, 2).any(axis=(1, 3))


def weighted_bounds(weights: np.ndarray):
    """Bounding PixelRect of all pixels with w > 0, or None."""
    rows = np.flatnonzero((weights > 0).any(axis=1))
    cols = np.flatnonzero((weights > 0).any(axis=0))
    if rows.size == 0:
        return None
    return PixelRect(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)
