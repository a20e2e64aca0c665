# -*- coding: utf-8 -*-
import numpy as np
import pytest
from src.core.domain.models import (
    CameraModel,
    FoveaConfig,
    FrameStats,
    Gaussian3D,
    PairList,
    RenderSettings,
    Scene,
    TileClass,
    TileGrid,
    TilePartition,
)


@pytest.fixture
def camera():
    return CameraModel(
        position=np.zeros(3),
        orientation=np.eye(3),
        focal=(64.0, 64.0),
        principal_point=(32.0, 32.0),
        resolution=(64, 64),
    )


def valid_gaussian(**overrides):
    values = dict(
        mean=(0.0, 0.0, 4.0),
        rotation=(1.0, 0.0, 0.0, 0.0),
        scale=(0.1, 0.1, 0.1),
        opacity=0.5,
        sh_coeffs=np.zeros((1, 3)),
    )
    values.update(overrides)
    return Gaussian3D(**values)


# Tests for the Gaussian3D model
def test_gaussian_rejects_non_unit_quaternion():
    """
    Test the validation of `rotation` in the `Gaussian3D` model.

    This test checks:
    - If a quaternion whose norm differs from 1 raises a `ValueError`.
    """
    with pytest.raises(ValueError, match="unit quaternion"):
        valid_gaussian(rotation=(2.0, 0.0, 0.0, 0.0))


@pytest.mark.parametrize("scale", [(0.0, 0.1, 0.1), (0.1, -0.1, 0.1)])
def test_gaussian_rejects_non_positive_scale(scale):
    with pytest.raises(ValueError, match="scale"):
        valid_gaussian(scale=scale)


@pytest.mark.parametrize("opacity", [0.0, 1.0, 1.5])
def test_gaussian_rejects_opacity_outside_open_interval(opacity):
    with pytest.raises(ValueError, match="opacity"):
        valid_gaussian(opacity=opacity)


def test_gaussian_sh_degree():
    """
    Test the SH degree derived from the coefficient count.

    This test checks:
    - If 1, 4, 9 and 16 coefficients map to degrees 0..3.
    - If any other count raises a `ValueError`.
    """
    for degree in range(4):
        g = valid_gaussian(sh_coeffs=np.zeros(((degree + 1) ** 2, 3)))
        assert g.sh_degree == degree

    with pytest.raises(ValueError, match="sh_coeffs"):
        valid_gaussian(sh_coeffs=np.zeros((5, 3)))


def test_scene_preserves_order():
    first = valid_gaussian(mean=(0.0, 0.0, 1.0))
    second = valid_gaussian(mean=(0.0, 0.0, 2.0))
    scene = Scene.from_list([first, second])

    assert len(scene) == 2
    assert scene[0] is first
    assert list(scene) == [first, second]


# Tests for the CameraModel model
def test_camera_rejects_non_orthonormal_orientation():
    """
    Test the validation of `orientation` in the `CameraModel` model.

    This test checks:
    - If a scaled rotation matrix raises a `ValueError`.
    - If a non-positive focal length raises a `ValueError`.
    """
    with pytest.raises(ValueError, match="orthonormal"):
        CameraModel(np.zeros(3), 1.1 * np.eye(3), (64.0, 64.0), (32.0, 32.0), (64, 64))
    with pytest.raises(ValueError, match="focal"):
        CameraModel(np.zeros(3), np.eye(3), (0.0, 64.0), (32.0, 32.0), (64, 64))


def test_camera_pixel_centers_are_row_major(camera):
    centers = camera.pixel_centers(2, 5, 4, 7)

    np.testing.assert_array_equal(centers, [[2.5, 5.5], [3.5, 5.5], [2.5, 6.5], [3.5, 6.5]])


def test_camera_pixel_directions(camera):
    """
    Test the ray directions through continuous pixel positions.

    This test checks:
    - If the principal point looks straight down +z.
    - If every direction has unit length.
    """
    directions = camera.pixel_directions(np.array([[32.0, 32.0], [0.5, 63.5], [96.0, 32.0]]))

    np.testing.assert_allclose(directions[0], [0.0, 0.0, 1.0])
    np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0)
    np.testing.assert_allclose(directions[2], np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0))


def test_camera_projects_view_points(camera):
    np.testing.assert_allclose(camera.view_to_pixel([1.0, -0.5, 2.0]), [64.0, 16.0])
    np.testing.assert_allclose(camera.tan_fov, [0.5, 0.5])


# Tests for the TileGrid model
def test_tile_grid_edge_tiles():
    """
    Test partial coarse tiles at the right and bottom image border.

    This test checks:
    - If the grid dimensions round up.
    - If the last tile is clipped to the image.
    - If subtiles that fall outside the image are left out.
    """
    grid = TileGrid(100, 70)

    assert grid.grid_dims == (4, 3)
    assert grid.tile_count == 12
    last = grid.tile_id(3, 2)
    assert grid.tile_coords(last) == (3, 2)
    assert tuple(grid.tile_pixels(last)) == (96, 64, 100, 70)
    assert [tuple(r) for r in grid.subtile_pixels(last)] == [(96, 64, 100, 70)]
    assert len(grid.subtile_pixels(grid.tile_id(1, 1))) == 4
    assert tuple(grid.full_rect()) == (0, 0, 3, 2)


def test_tile_grid_headset_resolution():
    grid = TileGrid(2064, 2272)

    assert grid.grid_dims == (65, 71)
    assert grid.tile_count == 4615


# Tests for FoveaConfig and RenderSettings
@pytest.mark.parametrize(
    "center, padding",
    [(0.0, 0.0), (1.2, 0.1), (0.5, 0.5), (0.5, -0.1)],
)
def test_fovea_config_validation(center, padding):
    with pytest.raises(ValueError):
        FoveaConfig(center_fraction=center, padding_fraction=padding)


def test_fovea_config_default_gaze():
    assert FoveaConfig().gaze_for(64, 32) == (32.0, 16.0)
    assert FoveaConfig(gaze_center=(10.0, 12.0)).gaze_for(64, 32) == (10.0, 12.0)


def test_render_settings_validation():
    with pytest.raises(ValueError, match="resort_k"):
        RenderSettings(resort_k=0)
    with pytest.raises(ValueError, match="threads"):
        RenderSettings(threads=-1)


# Tests for FrameStats
def test_frame_stats_validation():
    """
    Test the validation of counters in the `FrameStats` model.

    This test checks:
    - If a negative counter raises a `ValueError`.
    - If more culled pairs than reserved pairs raise a `ValueError`.
    """
    with pytest.raises(ValueError, match="non-negative"):
        FrameStats(per_pixel_samples=-1)
    with pytest.raises(ValueError, match="exceed"):
        FrameStats(pairs_instantiated=3, pairs_after_exact_cull=4)


def test_frame_stats_reductions_and_merge():
    """
    Test derived reductions and merging of two passes.

    This test checks:
    - If tile and pair reductions follow from the visible counts.
    - If merging sums the pair and sample counters and keeps the tile classes of the first pass.
    """
    first = FrameStats(
        pairs_instantiated=30,
        pairs_after_exact_cull=20,
        per_pixel_samples=100,
        total_tiles=20,
        visible_tiles=15,
        pairs_without_visibility=40,
        tiles_by_class={"high_res": 20, "low_res": 0, "hybrid": 0, "invisible": 0},
    )
    second = FrameStats(pairs_instantiated=5, pairs_after_exact_cull=5, per_pixel_samples=7)

    assert first.tile_reduction == pytest.approx(0.25)
    assert first.pair_reduction == pytest.approx(0.25)

    merged = first.merged(second)
    assert merged.pairs_instantiated == 35
    assert merged.pairs_after_exact_cull == 25
    assert merged.per_pixel_samples == 107
    assert merged.tiles_by_class["high_res"] == 20
    assert merged.as_dict()["tile_reduction"] == 0.25


def test_pair_list_requires_sorting():
    pairs = PairList(keys=np.zeros(0, dtype=np.uint64), values=np.zeros(0, dtype=np.int64), tile_count=1)

    with pytest.raises(ValueError, match="not sorted"):
        pairs.tile_range(0)


def test_partition_class_counts():
    classes = np.array([[0, 1], [2, 3]], dtype=np.int8)
    partition = TilePartition(classes=classes, weights=np.ones((64, 64)))

    assert partition.class_counts() == {"high_res": 1, "low_res": 1, "hybrid": 1, "invisible": 1}
    assert partition.tile_class(1, 1) == TileClass.INVISIBLE
