# -*- coding: utf-8 -*-
import pytest
from click.testing import CliRunner
from src.adapters import PlySceneAdapter
from src.adapters.camera_file_adapter import CameraFileAdapter
from src.adapters.mask_image_adapter import MaskImageAdapter
from src.core.application.synthetic_scenes import BUNDLED_SCENES, hmd_mask, orbit_cameras
from src.core.domain.models import RenderSettings
from src.main import create_app


@pytest.fixture
def app():
    """
    Fixture for setting up the application with test configuration.

    Single-threaded rendering and a generous resort window, so that renders
    are reproducible and comparable with the reference renderer.

    :return: Application instance.
    """
    test_config = {
        "THREADS": 1,
        "RESORT_K": 64,
        "LOG_LEVEL": "WARNING",
    }

    return create_app(test_config)


@pytest.fixture
def runner():
    """
    Fixture for providing a click test runner.

    :return: CliRunner instance.
    """
    return CliRunner()


@pytest.fixture
def exact_settings():
    """
    Fixture for render settings whose resort window is longer than any test stream.

    :return: RenderSettings instance.
    """
    return RenderSettings(resort_k=256, threads=1)


@pytest.fixture
def scene_dir(tmp_path):
    """
    Fixture writing the bundled scenes, three 32x32 cameras and a matching mask.

    :return: Directory containing `<scene>.ply`, `cameras.txt` and `mask.png`.
    """
    scenes = PlySceneAdapter()
    for name, factory in BUNDLED_SCENES.items():
        scenes.save_scene(str(tmp_path / f"{name}.ply"), factory())
    CameraFileAdapter().save_cameras(str(tmp_path / "cameras.txt"), orbit_cameras(3, 32, 32))
    MaskImageAdapter().save_mask(str(tmp_path / "mask.png"), hmd_mask(32, 32))
    return tmp_path
