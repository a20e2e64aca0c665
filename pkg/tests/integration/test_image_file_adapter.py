# -*- coding: utf-8 -*-
import json

import numpy as np
import pytest
from src.adapters.image_file_adapter import ImageFileAdapter
from src.adapters.stats_file_adapter import StatsFileAdapter
from src.core.domain.errors import ConfigError, OutputError
from src.core.domain.models import FrameStats


@pytest.fixture
def image_file_adapter():
    """
    Fixture for providing an ImageFileAdapter.

    :return: ImageFileAdapter instance.
    """
    return ImageFileAdapter()


@pytest.fixture
def stats_file_adapter():
    """
    Fixture for providing a StatsFileAdapter.

    :return: StatsFileAdapter instance.
    """
    return StatsFileAdapter()


@pytest.mark.parametrize("extension", [".png", ".ppm"])
def test_save_and_load_image(image_file_adapter, tmp_path, extension):
    """
    Test writing an image at 8 bits per channel.

    This test checks:
    - If values are quantized and clamped to [0, 255].
    - If the stored image reads back at the same size.
    """
    image = np.zeros((3, 5, 3))
    image[0, 0] = [1.0, 0.5, 0.0]
    image[2, 4] = [2.0, -1.0, 0.2]
    path = str(tmp_path / f"frame{extension}")

    image_file_adapter.save_image(path, image)
    loaded = image_file_adapter.load_image(path)

    assert loaded.shape == (3, 5, 3)
    np.testing.assert_allclose(loaded[0, 0] * 255.0, [255.0, 128.0, 0.0])
    np.testing.assert_allclose(loaded[2, 4] * 255.0, [255.0, 0.0, 51.0])


def test_save_image_rejects_unknown_extension(image_file_adapter, tmp_path):
    with pytest.raises(ConfigError, match="jpg"):
        image_file_adapter.save_image(str(tmp_path / "frame.jpg"), np.zeros((2, 2, 3)))


def test_save_and_load_stats(stats_file_adapter, tmp_path):
    """
    Test the JSON stats document.

    This test checks:
    - If the document carries the format version, the counters and extra keys.
    - If a document of another version is refused.
    """
    stats = FrameStats(
        pairs_instantiated=7,
        pairs_after_exact_cull=5,
        total_tiles=4,
        visible_tiles=4,
        pairs_without_visibility=7,
        tiles_by_class={"high_res": 4, "low_res": 0, "hybrid": 0, "invisible": 0},
    )
    path = tmp_path / "stats.json"

    stats_file_adapter.save_stats(str(path), stats, {"config": {"threads": 1}})
    document = stats_file_adapter.load_stats(str(path))

    assert document["format_version"] == 1
    assert document["stats"]["pairs_instantiated"] == 7
    assert document["stats"]["tiles_by_class"]["high_res"] == 4
    assert document["config"] == {"threads": 1}

    path.write_text(json.dumps({"format_version": 99, "stats": {}}), encoding="utf-8")
    with pytest.raises(ValueError, match="99"):
        stats_file_adapter.load_stats(str(path))


def test_format_stats_flattens_tile_classes(stats_file_adapter):
    lines = stats_file_adapter.format_stats(FrameStats()).splitlines()

    assert "pairs_instantiated: 0" in lines
    assert "tiles_by_class.high_res: 0" in lines
    assert "tiles_by_class.invisible: 0" in lines


def test_save_into_missing_directory_raises_output_error(image_file_adapter, stats_file_adapter, tmp_path):
    """
    Test writing results below a directory that does not exist.

    This test checks:
    - If both the image and the stats adapter raise `OutputError`, which maps to exit code 3.
    """
    missing = tmp_path / "missing_dir"

    with pytest.raises(OutputError, match="Failed to save image"):
        image_file_adapter.save_image(str(missing / "frame.png"), np.zeros((2, 2, 3)))
    with pytest.raises(OutputError, match="Failed to save stats"):
        stats_file_adapter.save_stats(str(missing / "stats.json"), FrameStats())
    assert OutputError.exit_code == 3
