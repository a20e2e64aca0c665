# -*- coding: utf-8 -*-
"""
Turns projected splats into sorted per-tile work lists.

Stage 1 counts, for every splat, the visible coarse tiles under its
conservative extent (summed-area table lookup) and reserves that many slots.
Stage 2 walks the extent again, runs the exact per-tile contribution test and
writes a (key, splat) pair for every survivor. Unused slots are compacted away.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.application.gaussian_ops import (
    ALPHA_CLAMP,
    ALPHA_THRESHOLD,
    eval_density,
    optimal_plane_to_screen,
    plane_to_screen_jacobian,
    ray_depths,
    rays_to_optimal_plane,
)
from src.core.domain.errors import (
    BehindCameraError,
    InvariantViolation,
    ResolutionMismatchError,
)
from src.core.domain.models import (
    CameraModel,
    Frame,
    PairList,
    PixelRect,
    Splat2D,
    TileGrid,
    TileRect,
    VisibilityIndex,
)

logger = logging.getLogger(__name__)

POLYGON_SIDES = 64


@dataclass(frozen=True)
class TileContribution:
    """
    Maximum contribution of one splat over one pixel rectangle.

    ``point_screen`` is where the maximum is reached, in pixels. ``degenerate``
    marks an OptimalPlane pair whose corner rays miss the plane; such pairs are
    kept with alpha_max = min(0.99, opacity).
    """

    point_screen: np.ndarray
    alpha_max: float
    culled: bool
    degenerate: bool = False


@dataclass(frozen=True)
class InstantiationReport:
    splats_in: int
    reserved: int
    emitted: int
    without_visibility: int


def extent_sigma(opacity: float) -> float:
    """Mahalanobis radius beyond which opacity·G stays below 1/255 (at least 3)."""
    ratio = 255.0 * opacity
    if ratio <= 1.0:
        return 3.0
    return max(3.0, math.sqrt(2.0 * math.log(ratio)))


def _max_eigenvalue(cov: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (cov + cov.T))[-1])


def splat_screen_bounds(splat: Splat2D, cam: CameraModel) -> Optional[Tuple[float, float, float, float]]:
    """
    Continuous screen-space box (x0, y0, x1, y1) that contains every point where
    the splat can reach α ≥ 1/255. None means the box is unbounded.
    """
    k = extent_sigma(splat.opacity)

    if splat.frame == Frame.SCREEN_AFFINE:
        radius = k * math.sqrt(_max_eigenvalue(splat.cov2d))
        cx, cy = splat.mean2d
        return cx - radius, cy - radius, cx + radius, cy + radius

    jacobian = plane_to_screen_jacobian(splat, cam)
    screen_cov = jacobian @ splat.cov2d @ jacobian.T
    radius = k * math.sqrt(_max_eigenvalue(screen_cov))
    cx, cy = splat.screen_mean
    x0, y0, x1, y1 = cx - radius, cy - radius, cx + radius, cy + radius

    # circumscribed polygon of the k-sigma ellipse on the plane
    chol = np.linalg.cholesky(splat.cov2d)
    angles = np.arange(POLYGON_SIDES) * (2.0 * math.pi / POLYGON_SIDES)
    ring = k / math.cos(math.pi / POLYGON_SIDES) * np.stack([np.cos(angles), np.sin(angles)])
    vertices = (chol @ ring).T + splat.mean2d
    try:
        projected = np.array([optimal_plane_to_screen(v, splat, cam) for v in vertices])
    except BehindCameraError:
        return None

    return (
        min(x0, float(projected[:, 0].min())),
        min(y0, float(projected[:, 1].min())),
        max(x1, float(projected[:, 0].max())),
        max(y1, float(projected[:, 1].max())),
    )


def splat_tile_rect(splat: Splat2D, grid: TileGrid, cam: CameraModel) -> Optional[TileRect]:
    """
    Inclusive coarse-tile range whose tiles have a pixel center inside the
    splat's screen bounds.

    :return: TileRect, or None when the clamped rectangle is empty.
    """
    bounds = splat_screen_bounds(splat, cam)
    if bounds is None:
        return grid.full_rect()

    x0, y0, x1, y1 = bounds
    px_lo = max(0, math.ceil(x0 - 0.5))
    py_lo = max(0, math.ceil(y0 - 0.5))
    px_hi = min(grid.width - 1, math.floor(x1 - 0.5))
    py_hi = min(grid.height - 1, math.floor(y1 - 0.5))
    if px_lo > px_hi or py_lo > py_hi:
        return None

    size = grid.coarse_tile_size
    return TileRect(px_lo // size, py_lo // size, px_hi // size, py_hi // size)


def segment_maximizer(start, direction, mean, cov_inv) -> np.ndarray:
    """
    Point of maximum density on the segment start + t·direction, t in [0, 1]:
    t = dᵀΣ⁻¹(μ-p) / dᵀΣ⁻¹d, clamped.
    """
    start = np.asarray(start, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    weighted = np.asarray(cov_inv) @ direction
    denom = float(direction @ weighted)
    if denom <= 0.0:
        return start
    t = float(weighted @ (np.asarray(mean) - start)) / denom
    return start + min(1.0, max(0.0, t)) * direction


def _cross(a: np.ndarray, b: np.ndarray) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _polygon_maximizer(corners: np.ndarray, mean: np.ndarray, cov_inv: np.ndarray) -> np.ndarray:
    """Maximum-density point of a convex polygon (corners in order)."""
    count = len(corners)
    edges = [(corners[i], corners[(i + 1) % count] - corners[i]) for i in range(count)]
    area = sum(_cross(p, d) for p, d in edges)
    orientation = 1.0 if area >= 0.0 else -1.0
    sides = [orientation * _cross(d, mean - p) for p, d in edges]

    if all(side >= 0.0 for side in sides):
        return mean.copy()

    reachable = [edge for edge, side in zip(edges, sides) if side < 0.0] or edges
    best_point, best_density = None, -1.0
    for start, direction in reachable:
        point = segment_maximizer(start, direction, mean, cov_inv)
        density = float(eval_density(point, mean, cov_inv))
        if density > best_density:
            best_point, best_density = point, density
    return best_point


def _contribution(point_screen: np.ndarray, density: float, opacity: float) -> TileContribution:
    alpha_max = min(ALPHA_CLAMP, opacity * density)
    return TileContribution(point_screen, alpha_max, alpha_max < ALPHA_THRESHOLD)


def _rect_corners(rect: PixelRect) -> np.ndarray:
    return np.array(
        [
            [rect.x0, rect.y0],
            [rect.x1, rect.y0],
            [rect.x1, rect.y1],
            [rect.x0, rect.y1],
        ],
        dtype=np.float64,
    )


def max_contrib_screen(splat: Splat2D, rect: PixelRect) -> TileContribution:
    """
    Maximum contribution of a ScreenAffine splat over the continuous rectangle
    [x0, x1] × [y0, y1].

    :param splat: ScreenAffine splat.
    :param rect: Pixel rectangle.
    :return: TileContribution; culled when alpha_max < 1/255.
    """
    point = _polygon_maximizer(_rect_corners(rect), splat.mean2d, splat.cov2d_inv)
    density = float(eval_density(point, splat.mean2d, splat.cov2d_inv))
    return _contribution(point, density, splat.opacity)


def max_contrib_optimal(splat: Splat2D, rect: PixelRect, cam: CameraModel) -> TileContribution:
    """
    Maximum contribution of an OptimalPlane splat over a screen rectangle.

    The rectangle corners are mapped onto the splat's plane, where the tile is
    a convex quadrilateral; the maximum is searched there and mapped back.

    :param splat: OptimalPlane splat.
    :param rect: Pixel rectangle.
    :param cam: Camera.
    :return: TileContribution; degenerate (kept) when a corner ray misses the plane.
    """
    corners_px = _rect_corners(rect)
    corners, hit = rays_to_optimal_plane(corners_px, cam, splat)

    if not hit.all():
        if hit.any():
            valid = corners_px[hit]
            nearest = np.argmin(np.linalg.norm(valid - splat.screen_mean, axis=1))
            point = valid[nearest]
        else:
            point = corners_px.mean(axis=0)
        return TileContribution(point, min(ALPHA_CLAMP, splat.opacity), False, True)

    point = _polygon_maximizer(corners, splat.mean2d, splat.cov2d_inv)
    density = float(eval_density(point, splat.mean2d, splat.cov2d_inv))
    contribution = _contribution(point, density, splat.opacity)
    if contribution.culled:
        return contribution
    if np.array_equal(point, splat.mean2d):
        point_screen = splat.screen_mean.copy()
    else:
        point_screen = optimal_plane_to_screen(point, splat, cam)
    return TileContribution(point_screen, contribution.alpha_max, False)


def max_contrib(splat: Splat2D, rect: PixelRect, cam: CameraModel) -> TileContribution:
    if splat.frame == Frame.SCREEN_AFFINE:
        return max_contrib_screen(splat, rect)
    return max_contrib_optimal(splat, rect, cam)


def build_visibility_index(mask, grid: TileGrid) -> VisibilityIndex:
    """
    Per-tile visibility bits and their summed-area table.

    :param mask: (H, W) raster; values > 0 are visible.
    :param grid: Tile grid of the render resolution.
    :return: VisibilityIndex.
    :raises ResolutionMismatchError: If the mask size differs from the grid.
    """
    mask = np.asarray(mask)
    if mask.shape != (grid.height, grid.width):
        raise ResolutionMismatchError(
            f"mask is {mask.shape[1]}x{mask.shape[0]}, render is {grid.width}x{grid.height}"
        )

    gx, gy = grid.grid_dims
    size = grid.coarse_tile_size
    padded = np.zeros((gy * size, gx * size), dtype=bool)
    padded[: grid.height, : grid.width] = mask > 0
    bitfield = padded.reshape(gy, size, gx, size).any(axis=(1, 3))

    sat = np.zeros((gy + 1, gx + 1), dtype=np.int64)
    sat[1:, 1:] = bitfield.astype(np.int64).cumsum(axis=0).cumsum(axis=1)
    return VisibilityIndex(bitfield=bitfield, sat=sat)


def full_visibility(grid: TileGrid) -> VisibilityIndex:
    return build_visibility_index(np.ones((grid.height, grid.width), dtype=bool), grid)


def count_visible_tiles(vi: VisibilityIndex, rect: Optional[TileRect]) -> int:
    """Exact count of set bits inside an inclusive tile rectangle."""
    if rect is None or rect.tx1 < rect.tx0 or rect.ty1 < rect.ty0:
        return 0
    sat = vi.sat
    return int(
        sat[rect.ty1 + 1, rect.tx1 + 1]
        - sat[rect.ty0, rect.tx1 + 1]
        - sat[rect.ty1 + 1, rect.tx0]
        + sat[rect.ty0, rect.tx0]
    )


def encode_depth(depth) -> np.ndarray:
    """Order-preserving uint32 encoding of non-negative depths (float32 bits)."""
    # + 0.0 turns -0.0 into +0.0
    return np.ascontiguousarray(np.maximum(depth, 0.0) + 0.0, dtype=np.float32).view(np.uint32)


def decode_depth(bits) -> np.ndarray:
    return np.ascontiguousarray(bits, dtype=np.uint32).view(np.float32).astype(np.float64)


def make_keys(tile_ids, depths) -> np.ndarray:
    tile_ids = np.asarray(tile_ids, dtype=np.uint64)
    return (tile_ids << np.uint64(32)) | encode_depth(depths).astype(np.uint64)


def key_tiles(keys) -> np.ndarray:
    return (np.asarray(keys, dtype=np.uint64) >> np.uint64(32)).astype(np.int64)


def key_depths(keys) -> np.ndarray:
    return decode_depth((np.asarray(keys, dtype=np.uint64) & np.uint64(0xFFFFFFFF)).astype(np.uint32))


def contribution_depth(splat: Splat2D, point_screen, cam: CameraModel) -> float:
    """Depth of the splat's density maximum along the ray through ``point_screen``."""
    direction = cam.pixel_directions(np.asarray(point_screen, dtype=np.float64))
    return float(ray_depths(splat.mean3d, splat.cov3d_inv, cam.position, direction, cam.near_plane))


def instantiate_pairs(
    splats: Sequence[Splat2D],
    grid: TileGrid,
    vi: VisibilityIndex,
    cam: CameraModel,
    per_tile_depth: bool = True,
) -> Tuple[PairList, InstantiationReport]:
    """
    Two-stage (key, splat) pair instantiation.

    :param splats: Projected splats; pair values index into this sequence.
    :param grid: Coarse tile grid.
    :param vi: Visibility index; tiles with a zero bit never receive pairs.
    :param cam: Camera used for the projection.
    :param per_tile_depth: Key depth is the ray depth at the tile's maximum
        contribution point when set, the splat's depth_hint otherwise.
    :return: Unsorted PairList and an InstantiationReport.
    :raises InvariantViolation: If stage 2 walks a different number of visible
        tiles than stage 1 reserved.
    """
    rects: List[Optional[TileRect]] = [splat_tile_rect(s, grid, cam) for s in splats]
    counts = np.array([count_visible_tiles(vi, rect) for rect in rects], dtype=np.int64)
    without_visibility = sum(rect.area for rect in rects if rect is not None)
    offsets = np.zeros(len(splats) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    reserved = int(offsets[-1])

    keys = np.zeros(reserved, dtype=np.uint64)
    values = np.zeros(reserved, dtype=np.int64)
    valid = np.zeros(reserved, dtype=bool)

    for position, (splat, rect) in enumerate(zip(splats, rects)):
        if rect is None:
            continue
        cursor = int(offsets[position])
        for ty in range(rect.ty0, rect.ty1 + 1):
            for tx in range(rect.tx0, rect.tx1 + 1):
                if not vi.bitfield[ty, tx]:
                    continue
                tile_id = grid.tile_id(tx, ty)
                contribution = max_contrib(splat, grid.tile_pixels(tile_id), cam)
                if not contribution.culled:
                    if per_tile_depth:
                        depth = contribution_depth(splat, contribution.point_screen, cam)
                    else:
                        depth = splat.depth_hint
                    keys[cursor] = make_keys([tile_id], [depth])[0]
                    values[cursor] = position
                    valid[cursor] = True
                cursor += 1
        if cursor != offsets[position + 1]:
            raise InvariantViolation(
                f"splat {splat.index}: reserved {counts[position]} slots, walked {cursor - offsets[position]}"
            )

    pairs = PairList(keys=keys[valid], values=values[valid], tile_count=grid.tile_count)
    report = InstantiationReport(
        splats_in=len(splats),
        reserved=reserved,
        emitted=len(pairs),
        without_visibility=without_visibility,
    )
    logger.debug(
        "Instantiated %d of %d reserved pairs for %d splats",
        report.emitted,
        report.reserved,
        report.splats_in,
    )
    return pairs, report


def sort_pairs(pairs: PairList) -> PairList:
    """
    Sort by key, ties broken by splat index, and compute per-tile ranges.

    :param pairs: PairList to sort.
    :return: A new, sorted PairList with ``ranges`` filled in.
    """
    order = np.lexsort((pairs.values, pairs.keys))
    keys = pairs.keys[order]
    values = pairs.values[order]
    tiles = key_tiles(keys)
    tile_ids = np.arange(pairs.tile_count)
    ranges = np.stack(
        [
            np.searchsorted(tiles, tile_ids, side="left"),
            np.searchsorted(tiles, tile_ids, side="right"),
        ],
        axis=1,
    )
    return PairList(keys=keys, values=values, tile_count=pairs.tile_count, ranges=ranges)
