# -*- coding: utf-8 -*-
import numpy as np
import pytest
from src.core.application.foveation import (
    PERIPHERY_KERNEL,
    blend_weights,
    build_partition,
    crop_frustum,
    group_average,
    group_centers,
    half_resolution_camera,
    periphery_postprocess,
    pixel_classes,
    reduce_mask,
    subtile_classes,
    uniform_partition,
    weighted_bounds,
)
from src.core.application.synthetic_scenes import default_camera, hmd_mask
from src.core.application.tile_pipeline import build_visibility_index, full_visibility
from src.core.domain.models import FoveaConfig, PixelRect, TileClass, TileGrid


def test_blend_weights_ramp():
    """
    Test the per-pixel blend weights of a centered fovea.

    This test checks:
    - If the inner rectangle has weight 1 and the far corner weight 0.
    - If the ramp is linear in the distance outside the inner rectangle.
    - If a whole-image fovea has weight 1 everywhere.
    """
    weights = blend_weights(FoveaConfig(center_fraction=0.5, padding_fraction=0.1), 64, 64)

    assert weights[32, 32] == 1.0
    assert weights[0, 0] == 0.0
    assert weights[32, 12] == pytest.approx(1.0 - 3.5 / 6.4)
    assert np.all(np.diff(weights[32, :32]) >= 0.0)
    np.testing.assert_array_equal(blend_weights(FoveaConfig(center_fraction=1.0), 50, 30), 1.0)


def test_partition_matches_naive_classification():
    """
    Test tile classification against classifying each tile from its own pixels.

    This test checks:
    - If every tile is HighRes, LowRes, Hybrid or Invisible exactly as its weights and mask dictate.
    - If the class counts add up to the tile count.
    """
    grid = TileGrid(128, 112)
    cfg = FoveaConfig(center_fraction=0.5, padding_fraction=0.1, gaze_center=(50.0, 60.0))
    vi = build_visibility_index(hmd_mask(128, 112), grid)

    partition = build_partition(cfg, vi, grid)

    weights = blend_weights(cfg, 128, 112)
    for tile in range(grid.tile_count):
        tx, ty = grid.tile_coords(tile)
        rect = grid.tile_pixels(tile)
        block = weights[rect.y0 : rect.y1, rect.x0 : rect.x1]
        if not vi.is_visible(tx, ty):
            expected = TileClass.INVISIBLE
        elif block.min() >= 1.0:
            expected = TileClass.HIGH_RES
        elif block.max() <= 0.0:
            expected = TileClass.LOW_RES
        else:
            expected = TileClass.HYBRID
        assert partition.tile_class(tx, ty) == expected
    assert sum(partition.class_counts().values()) == grid.tile_count


def test_partition_with_a_hard_edge():
    grid = TileGrid(128, 128)
    cfg = FoveaConfig(center_fraction=0.5, padding_fraction=0.0)

    counts = build_partition(cfg, full_visibility(grid), grid).class_counts()

    assert counts == {"high_res": 4, "low_res": 12, "hybrid": 0, "invisible": 0}


def test_visibility_cull_can_be_disabled():
    grid = TileGrid(160, 160)
    vi = build_visibility_index(hmd_mask(160, 160), grid)

    culled = build_partition(FoveaConfig(), vi, grid)
    kept = build_partition(FoveaConfig(enable_visibility_cull=False), vi, grid)

    assert culled.tile_class(0, 0) == TileClass.INVISIBLE
    assert kept.class_counts()["invisible"] == 0


def test_subtile_classes_split_hybrid_tiles():
    """
    Test the per-subtile classes of the default ramp at 128x128.

    This test checks:
    - If the coarse tiles touching the ramp stay Hybrid in the tile counts.
    - If their subtiles with all-zero weights render at low resolution.
    - If their subtiles with all-one weights render at full resolution.
    - If the per-pixel classes follow the subtile classes.
    """
    grid = TileGrid(128, 128)
    partition = build_partition(FoveaConfig(), full_visibility(grid), grid)

    classes = subtile_classes(partition, grid)

    assert partition.class_counts() == {"high_res": 4, "low_res": 0, "hybrid": 12, "invisible": 0}
    assert classes.shape == (8, 8)
    ring = np.ones((8, 8), dtype=bool)
    ring[1:7, 1:7] = False
    assert np.all(classes[ring] == TileClass.LOW_RES)
    assert np.all(classes[2:6, 2:6] == TileClass.HIGH_RES)
    assert int(np.sum(classes == TileClass.HYBRID)) == 20
    pixels = pixel_classes(partition, grid)
    assert pixels[0, 70] == TileClass.LOW_RES
    assert pixels[20, 70] == TileClass.HYBRID
    assert pixels[40, 70] == TileClass.HIGH_RES


def test_subtile_classes_keep_explicit_tile_classes():
    grid = TileGrid(70, 40)
    partition = uniform_partition(grid)
    partition.classes = np.array([[1, 0, 1], [1, 2, 3]], dtype=np.int8)

    classes = subtile_classes(partition, grid)

    assert classes.shape == (3, 5)
    np.testing.assert_array_equal(classes[:2, :2], TileClass.LOW_RES)
    np.testing.assert_array_equal(classes[:2, 2:4], TileClass.HIGH_RES)
    assert classes[2, 2] == TileClass.HIGH_RES
    assert classes[2, 4] == TileClass.INVISIBLE


def test_periphery_blur_matches_naive_convolution():
    """
    Test the LowRes blur against a per-pixel loop.

    This test checks:
    - If each LowRes pixel is the kernel-weighted mean of its LowRes neighbours.
    - If pixels of other classes are left untouched.
    """
    grid = TileGrid(70, 40)
    classes = np.array([[1, 0, 1], [1, 2, 3]], dtype=np.int8)
    partition = uniform_partition(grid)
    partition.classes = classes
    image = np.random.default_rng(5).random((40, 70, 3))

    result = periphery_postprocess(image, partition, grid)

    region = pixel_classes(partition, grid) == TileClass.LOW_RES
    expected = image.copy()
    for y, x in zip(*np.nonzero(region)):
        total = np.zeros(3)
        weight = 0.0
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < 40 and 0 <= nx < 70 and region[ny, nx]:
                    total += PERIPHERY_KERNEL[dy + 1, dx + 1] * image[ny, nx]
                    weight += PERIPHERY_KERNEL[dy + 1, dx + 1]
        expected[y, x] = total / weight
    np.testing.assert_allclose(result, expected, atol=1e-12)
    np.testing.assert_array_equal(result[~region], image[~region])


def test_periphery_blur_reaches_zero_weight_subtiles_of_hybrid_tiles():
    """
    Test the blur region of the default ramp at 128x128, where no coarse tile is LowRes.

    This test checks:
    - If the all-zero-weight subtiles of Hybrid tiles are blurred.
    - If Hybrid-blend and full-resolution pixels keep their values.
    """
    grid = TileGrid(128, 128)
    partition = build_partition(FoveaConfig(), full_visibility(grid), grid)
    image = np.random.default_rng(11).random((128, 128, 3))

    result = periphery_postprocess(image, partition, grid)

    assert partition.class_counts()["low_res"] == 0
    assert not np.allclose(result[:16, :], image[:16, :])
    np.testing.assert_array_equal(result[16:112, 16:112], image[16:112, 16:112])


def test_group_average_and_centers():
    pixels = np.arange(27, dtype=np.float64).reshape(3, 3, 3)

    averaged = group_average(pixels)

    np.testing.assert_allclose(averaged[0, 0], pixels[:2, :2].mean(axis=(0, 1)))
    np.testing.assert_allclose(averaged[1, 1], averaged[0, 0])
    np.testing.assert_allclose(averaged[2, 2], pixels[2, 2])
    np.testing.assert_allclose(
        group_centers(PixelRect(0, 0, 3, 3)),
        [[1.0, 1.0], [2.5, 1.0], [1.0, 2.5], [2.5, 2.5]],
    )


def test_crop_frustum_keeps_the_rays():
    """
    Test the sub-camera of a pixel rectangle.

    This test checks:
    - If pixel (i, j) of the crop casts the parent's ray through (x0 + i, y0 + j).
    """
    parent = default_camera(64, 48)
    rect = PixelRect(10, 6, 40, 30)

    crop = crop_frustum(parent, rect)

    assert crop.resolution == (30, 24)
    np.testing.assert_allclose(
        crop.pixel_directions(crop.pixel_centers(0, 0, 30, 24)),
        parent.pixel_directions(parent.pixel_centers(10, 6, 40, 30)),
    )


def test_half_resolution_helpers():
    cam = half_resolution_camera(default_camera(65, 64))
    mask = np.zeros((5, 5), dtype=bool)
    mask[4, 4] = True

    assert cam.resolution == (33, 32)
    np.testing.assert_allclose(cam.focal, [32.5, 32.5])
    np.testing.assert_array_equal(reduce_mask(mask), [[False] * 3, [False] * 3, [False, False, True]])


def test_weighted_bounds():
    weights = np.zeros((10, 12))
    assert weighted_bounds(weights) is None

    weights[2:5, 3:9] = 0.5
    assert weighted_bounds(weights) == PixelRect(3, 2, 9, 5)
