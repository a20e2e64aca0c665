# -*- coding: utf-8 -*-
import json

import pytest
from src.core.application.commands import cli


@pytest.fixture
def invoke(runner, app):
    """
    Fixture for running the command line against the test application.

    :return: Function taking the argument list and returning the click Result.
    """

    def run(*args):
        return runner.invoke(cli, [str(arg) for arg in args], obj=app)

    return run


def test_init_scenes_writes_inputs(invoke, tmp_path):
    out_dir = tmp_path / "scenes"

    result = invoke("init-scenes", out_dir, "--size", 16)

    assert result.exit_code == 0
    assert f"Wrote 4 scenes to {out_dir}" in result.output
    for name in ("cluster", "layers", "offaxis", "backdrop"):
        assert (out_dir / f"{name}.ply").is_file()
    assert (out_dir / "cameras.txt").is_file()
    assert (out_dir / "mask.png").is_file()


def test_render_writes_image_and_counters(invoke, scene_dir):
    """
    Test rendering one frame.

    This test checks:
    - If the command succeeds and writes the image.
    - If the frame counters are printed.
    """
    out = scene_dir / "frame.png"

    result = invoke("render", "--scene", scene_dir / "layers.ply", "--camera", "32,32,32", "--out", out)

    assert result.exit_code == 0, result.output
    assert out.is_file()
    assert "tiles_by_class.high_res: 1" in result.output
    assert "resort_overflows: 0" in result.output


def test_render_is_independent_of_thread_count(invoke, scene_dir):
    images = []
    for threads in (1, 3):
        out = scene_dir / f"frame_{threads}.ppm"
        result = invoke(
            "render",
            "--scene",
            scene_dir / "cluster.ply",
            "--cameras",
            scene_dir / "cameras.txt",
            "--camera-index",
            1,
            "--threads",
            threads,
            "--out",
            out,
        )
        assert result.exit_code == 0, result.output
        images.append(out.read_bytes())

    assert images[0] == images[1]


def test_whole_image_fovea_renders_the_same_bytes(invoke, scene_dir):
    """
    Test a fovea covering the whole image through the command line.

    This test checks:
    - If the single-pass foveated image file is identical to the unfoveated one.
    """
    common = ["--scene", scene_dir / "cluster.ply", "--cameras", scene_dir / "cameras.txt"]
    plain = scene_dir / "plain.png"
    foveated = scene_dir / "foveated.png"

    first = invoke("render", *common, "--out", plain)
    second = invoke(
        "render", *common, "--fovea", "single", "--center-frac", 1, "--padding-frac", 0, "--out", foveated
    )

    assert first.exit_code == 0, first.output
    assert second.exit_code == 0, second.output
    assert plain.read_bytes() == foveated.read_bytes()


def test_render_reports_ingest_errors(invoke, scene_dir):
    """
    Test exit code 2 for unreadable inputs.

    This test checks:
    - If a missing scene file exits with 2.
    - If a mask whose size differs from the camera exits with 2.
    """
    missing = invoke(
        "render", "--scene", scene_dir / "absent.ply", "--camera", "32,32,32", "--out", scene_dir / "a.png"
    )
    mismatch = invoke(
        "render",
        "--scene",
        scene_dir / "layers.ply",
        "--camera",
        "48,48,48",
        "--fovea",
        "single",
        "--mask",
        scene_dir / "mask.png",
        "--out",
        scene_dir / "b.png",
    )

    assert missing.exit_code == 2
    assert "scene file not found" in missing.output
    assert mismatch.exit_code == 2


@pytest.mark.parametrize(
    "flags",
    [
        ["--camera", "32,32,32", "--cameras", "cameras.txt"],
        [],
        ["--camera", "32,32,32", "--resort", "off", "--resort-k", "8"],
        ["--camera", "32,32,32", "--center-frac", "0.4"],
        ["--camera", "32,32,32", "--mask", "mask.png"],
        ["--camera", "32,32,32", "--projection", "perspective"],
        ["--camera", "32,32,32", "--bg", "1,0"],
        ["--camera", "32,32"],
        ["--camera", "32,32,32", "--fovea", "single", "--center-frac", "1.5"],
        ["--cameras", "cameras.txt", "--camera-index", "7"],
    ],
)
def test_render_reports_config_errors(invoke, scene_dir, flags):
    """
    Test exit code 3 for invalid or conflicting flags.

    This test checks:
    - If conflicting camera, resort and fovea flags exit with 3.
    - If malformed values and invalid choices exit with 3.
    """
    flags = [str(scene_dir / flag) if flag in ("cameras.txt", "mask.png") else flag for flag in flags]

    result = invoke("render", "--scene", scene_dir / "layers.ply", *flags, "--out", scene_dir / "c.png")

    assert result.exit_code == 3, result.output


def test_compare_against_itself(invoke, scene_dir):
    scene = scene_dir / "layers.ply"

    result = invoke("compare", "--scene", scene, "--camera", "32,32,32", "--against", "self")

    assert result.exit_code == 0, result.output
    assert "psnr: inf" in result.output
    assert "max_channel_diff: 0.000000" in result.output
    assert "delta_pairs_instantiated: 0" in result.output


def test_compare_against_reference_renderer(invoke, scene_dir):
    """
    Test comparing a foveated render with the reference renderer.

    This test checks:
    - If the image metrics are printed.
    - If the center and periphery are reported separately.
    """
    result = invoke(
        "compare",
        "--scene",
        scene_dir / "layers.ply",
        "--cameras",
        scene_dir / "cameras.txt",
        "--fovea",
        "single",
        "--against",
        "oracle",
    )

    assert result.exit_code == 0, result.output
    for key in ("psnr", "ssim", "max_channel_diff", "center_max_diff", "periphery_psnr"):
        assert f"{key}: " in result.output


def test_compare_large_fov(invoke, scene_dir):
    result = invoke(
        "compare",
        "--scene",
        scene_dir / "offaxis.ply",
        "--camera",
        "16,16,16",
        "--large-fov",
        "--b-projection",
        "affine",
    )

    assert result.exit_code == 0, result.output
    assert "a_large_fov_psnr: " in result.output
    assert "b_large_fov_psnr: " in result.output


def test_stats_writes_json(invoke, scene_dir):
    """
    Test the stats command.

    This test checks:
    - If the counters are printed.
    - If the JSON document carries the format version, counters and configuration.
    """
    out = scene_dir / "stats.json"

    result = invoke(
        "stats",
        "--scene",
        scene_dir / "backdrop.ply",
        "--cameras",
        scene_dir / "cameras.txt",
        "--fovea",
        "single",
        "--mask",
        scene_dir / "mask.png",
        "--out",
        out,
    )

    assert result.exit_code == 0, result.output
    assert "tiles_by_class.invisible: 0" in result.output
    document = json.loads(out.read_text(encoding="utf-8"))
    assert document["format_version"] == 1
    assert document["config"]["fovea"] == "single"
    assert document["config"]["resolution"] == [32, 32]
    assert document["stats"]["total_tiles"] == 1


def test_bench_renders_stereo_path(invoke, scene_dir):
    """
    Test the benchmark over an interpolated stereo camera path.

    This test checks:
    - If every pose is rendered once per eye.
    - If per-stage timings are reported.
    """
    result = invoke(
        "bench",
        "--scene",
        scene_dir / "layers.ply",
        "--cameras",
        scene_dir / "cameras.txt",
        "--samples",
        2,
        "--stereo",
    )

    assert result.exit_code == 0, result.output
    assert "frames: 6" in result.output
    assert "poses: 3" in result.output
    assert "rasterize_mean_ms: " in result.output


def test_bench_rejects_single_camera(invoke, scene_dir):
    result = invoke("bench", "--scene", scene_dir / "layers.ply", "--camera", "32,32,32")

    assert result.exit_code == 3
    assert "at least 2 poses" in result.output


@pytest.mark.parametrize(
    "command, out_name, message",
    [
        ("render", "missing_dir/frame.png", "output directory does not exist"),
        ("render", "frame.jpg", "unsupported output extension"),
        ("stats", "missing_dir/stats.json", "output directory does not exist"),
    ],
)
def test_unwritable_output_is_a_config_error(invoke, scene_dir, command, out_name, message):
    """
    Test output paths that cannot be written.

    This test checks:
    - If the command exits with 3 and a one-line diagnostic instead of a traceback.
    - If nothing is written.
    """
    out = scene_dir / out_name

    result = invoke(command, "--scene", scene_dir / "layers.ply", "--camera", "32,32,32", "--out", out)

    assert result.exit_code == 3, result.output
    assert message in result.output
    assert not out.exists()


def test_init_scenes_into_a_file_path(invoke, tmp_path):
    blocker = tmp_path / "taken"
    blocker.write_text("x", encoding="utf-8")

    result = invoke("init-scenes", blocker / "scenes")

    assert result.exit_code == 3
    assert "Failed to create" in result.output
