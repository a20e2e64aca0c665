# -*- coding: utf-8 -*-
from dataclasses import replace

import numpy as np
import pytest
from src.core.application.oracle_service import OracleService, collect_stats, wide_fov_camera
from src.core.application.raster_service import RasterService, RenderResult
from src.core.application.synthetic_scenes import default_camera, offaxis_scene
from src.core.domain.errors import ConfigError, InvariantViolation
from src.core.domain.models import FrameStats, ProjectionMode, Scene


@pytest.fixture
def oracle_service(exact_settings):
    """
    Fixture for providing an OracleService.

    :return: OracleService instance.
    """
    return OracleService(exact_settings)


def test_reference_render_of_empty_scene(exact_settings):
    service = OracleService(replace(exact_settings, background=(0.2, 0.4, 0.6)))

    image = service.reference_render(Scene(), default_camera(8, 6))

    assert image.shape == (6, 8, 3)
    np.testing.assert_allclose(image, np.broadcast_to([0.2, 0.4, 0.6], (6, 8, 3)))


def test_wide_fov_camera_geometry():
    """
    Test the widened camera of the large-FOV protocol.

    This test checks:
    - If the focal length is kept and the resolution multiplied.
    - If the crop rectangle reproduces the original rays.
    - If an even factor is rejected.
    """
    cam = default_camera(32, 24)

    wide, crop = wide_fov_camera(cam, 3)

    assert wide.resolution == (96, 72)
    np.testing.assert_array_equal(wide.focal, cam.focal)
    assert tuple(crop) == (32, 24, 64, 48)
    np.testing.assert_allclose(
        wide.pixel_directions(wide.pixel_centers(*crop)),
        cam.pixel_directions(cam.pixel_centers(0, 0, 32, 24)),
    )
    with pytest.raises(ConfigError, match="odd"):
        wide_fov_camera(cam, 2)


def test_large_fov_protocol_with_optimal_projection(oracle_service, exact_settings):
    """
    Test the large-FOV crop protocol on a scene with a far off-axis splat.

    This test checks:
    - If the crop of the widened render matches the normal render (quantized PSNR of at least 45 dB).
    - If the report holds images of the expected sizes.
    """
    cam = default_camera(32, 32)
    service = RasterService(exact_settings)

    report = oracle_service.large_fov_protocol(offaxis_scene(), cam, service.render_full, 3)

    assert report.wide_image.shape == (96, 96, 3)
    assert report.cropped_image.shape == report.normal_image.shape == (32, 32, 3)
    assert report.psnr >= 45.0


def test_large_fov_protocol_penalizes_affine_projection(oracle_service, exact_settings):
    """
    Test the large-FOV crop protocol with both projections on the off-axis scene.

    This test checks:
    - If the affine crop scores a strictly lower PSNR than the optimal-plane crop.
    """
    cam = default_camera(32, 32)
    optimal = RasterService(exact_settings)
    affine = RasterService(replace(exact_settings, projection_mode=ProjectionMode.AFFINE))

    optimal_report = oracle_service.large_fov_protocol(offaxis_scene(), cam, optimal.render_full, 3)
    affine_report = oracle_service.large_fov_protocol(offaxis_scene(), cam, affine.render_full, 3)

    assert affine_report.psnr < optimal_report.psnr


def test_collect_stats_validates_counters():
    """
    Test the consistency checks on frame counters.

    This test checks:
    - If tile classes that do not add up to the tile count raise `InvariantViolation`.
    - If visibility culling that adds pairs raises `InvariantViolation`.
    """
    image = np.zeros((1, 1, 3))
    broken_tiles = FrameStats(
        total_tiles=2,
        tiles_by_class={"high_res": 1, "low_res": 0, "hybrid": 0, "invisible": 0},
    )
    broken_pairs = FrameStats(
        pairs_instantiated=5,
        pairs_without_visibility=3,
        total_tiles=1,
        tiles_by_class={"high_res": 1, "low_res": 0, "hybrid": 0, "invisible": 0},
    )

    with pytest.raises(InvariantViolation, match="tile classes"):
        collect_stats(RenderResult(image, broken_tiles))
    with pytest.raises(InvariantViolation, match="added pairs"):
        collect_stats(RenderResult(image, broken_pairs))
