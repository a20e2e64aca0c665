# -*- coding: utf-8 -*-
import logging
import math
import os
from dataclasses import dataclass, replace
from functools import wraps
from typing import Any, Dict, Optional, Tuple

import click
import numpy as np

from src.core.application.camera_path import interpolate_path, stereo_pair
from src.core.application.foveation import blend_weights
from src.core.application.metrics import format_db, max_channel_diff, psnr, ssim
from src.core.application.oracle_service import OracleService, collect_stats
from src.core.application.raster_service import RasterService, RenderResult
from src.core.application.synthetic_scenes import BUNDLED_SCENES, hmd_mask, orbit_cameras
from src.core.domain.errors import EXIT_CONFIG, ConfigError, IngestError, OutputError, RasterError
from src.core.domain.models import (
    CameraModel,
    DepthMode,
    FoveaConfig,
    FoveaMode,
    ProjectionMode,
    RenderSettings,
    RunConfig,
    Scene,
)
from src.core.ports.camera_port import CameraPort
from src.core.ports.image_port import ImagePort
from src.core.ports.mask_port import MaskPort
from src.core.ports.scene_port import ScenePort
from src.core.ports.stats_port import StatsPort

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = (".png", ".ppm")


@dataclass
class Application:
    """Configuration and adapters shared by every command."""

    config: Dict[str, Any]
    scenes: ScenePort
    cameras: CameraPort
    masks: MaskPort
    images: ImagePort
    stats: StatsPort


class CommandFailure(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class RasterGroup(click.Group):
    """Command group reporting usage errors with the configuration exit code."""

    def parse_args(self, ctx, args):
        try:
            return super().parse_args(ctx, args)
        except click.UsageError as e:
            e.exit_code = EXIT_CONFIG
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_CONFIG
            raise


def handle_errors(f):
    """
    Map domain errors onto exit codes.

    Ingest errors exit with 2, configuration errors (including invalid domain
    values) with 3 and invariant violations with 4, each with a one-line
    diagnostic.
    """

    @wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except RasterError as e:
            raise CommandFailure(str(e), e.exit_code)
        except ValueError as e:
            raise CommandFailure(str(e), EXIT_CONFIG)

    return wrapper


# Validation functions
def validate_numbers(text: Optional[str], count: int, name: str) -> Optional[Tuple[float, ...]]:
    """
    Parse a comma-separated list of ``count`` numbers.

    :param text: Raw flag value, or None.
    :param count: Expected number of values.
    :param name: Flag name used in the error message.
    :return: Tuple of floats, or None when ``text`` is None.
    :raises ConfigError: If the value is malformed.
    """
    if text is None:
        return None
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"{name} must be {count} comma-separated numbers")
    if len(values) != count or not all(math.isfinite(v) for v in values):
        raise ConfigError(f"{name} must be {count} comma-separated numbers")
    return values


def validate_inline_camera(text: Optional[str]) -> Optional[Tuple[int, int, float, float]]:
    """
    Parse ``W,H,F`` into (width, height, fx, fy).

    :raises ConfigError: If sizes are not positive integers or F is not positive.
    """
    values = validate_numbers(text, 3, "--camera")
    if values is None:
        return None
    width, height, focal = values
    if width <= 0 or height <= 0 or focal <= 0 or width != int(width) or height != int(height):
        raise ConfigError("--camera needs positive integer W,H and a positive focal length")
    return int(width), int(height), focal, focal


def validate_conflicts(
    cameras: Optional[str],
    camera: Optional[str],
    resort: str,
    resort_k: Optional[int],
    fovea: str,
    fovea_flags: Dict[str, Any],
) -> None:
    """
    Reject flag combinations that contradict each other.

    :raises ConfigError: On the first conflict found.
    """
    if cameras and camera:
        raise ConfigError("--cameras and --camera are mutually exclusive")
    if not cameras and not camera:
        raise ConfigError("one of --cameras or --camera is required")
    if resort == "off" and resort_k is not None:
        raise ConfigError("--resort-k has no effect with --resort off")
    if fovea == "off":
        given = [flag for flag, value in fovea_flags.items() if value is not None]
        if given:
            raise ConfigError(f"{', '.join(given)} require --fovea single or two")


def validate_scene_path(path: Optional[str]) -> str:
    if not path:
        raise ConfigError("--scene is required")
    if not os.path.isfile(path):
        raise IngestError(f"scene file not found: {path}")
    return path


def validate_output_path(path: Optional[str], extensions: Tuple[str, ...] = ()) -> Optional[str]:
    """
    Check that a result file can be created before any work starts.

    :param path: Output file path, or None.
    :param extensions: Accepted extensions; empty accepts any.
    :return: The path unchanged.
    :raises ConfigError: If the extension is not accepted or the parent directory
        is missing or not writable.
    """
    if path is None:
        return None
    extension = os.path.splitext(path)[1].lower()
    if extensions and extension not in extensions:
        raise ConfigError(f"unsupported output extension '{extension}', use {' or '.join(extensions)}")
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        raise ConfigError(f"output directory does not exist: {directory}")
    if not os.access(directory, os.W_OK):
        raise ConfigError(f"output directory is not writable: {directory}")
    return path


def render_options(f):
    """Flags shared by every rendering command."""
    options = [
        click.option("--scene", "scene_path", type=str, help="Gaussian point-cloud file (.ply)."),
        click.option("--cameras", "camera_path", type=str, help="Key-value camera file."),
        click.option("--camera", "inline_camera", type=str, help="Inline camera W,H,F at the origin."),
        click.option("--camera-index", type=int, default=0, show_default=True),
        click.option("--mask", "mask_path", type=str, help="8-bit grayscale visibility mask."),
        click.option(
            "--projection",
            type=click.Choice([m.value for m in ProjectionMode]),
            default=ProjectionMode.OPTIMAL.value,
            show_default=True,
        ),
        click.option(
            "--sort",
            "sort_mode",
            type=click.Choice([m.value for m in DepthMode]),
            default=DepthMode.VIEW_Z.value,
            show_default=True,
        ),
        click.option("--resort", type=click.Choice(["on", "off"]), default="on", show_default=True),
        click.option("--resort-k", type=int, default=None, help="Per-pixel resort window size."),
        click.option(
            "--fovea",
            type=click.Choice([m.value for m in FoveaMode]),
            default=FoveaMode.OFF.value,
            show_default=True,
        ),
        click.option("--center-frac", type=float, default=None),
        click.option("--padding-frac", type=float, default=None),
        click.option("--gaze", type=str, default=None, help="Gaze point X,Y in pixels."),
        click.option("--bg", type=str, default=None, help="Background color R,G,B in [0, 1]."),
        click.option("--threads", type=int, default=None, help="Worker threads, 0 = auto."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def build_run_config(
    app: Application,
    subcommand: str,
    output_path: Optional[str] = None,
    output_extensions: Tuple[str, ...] = (),
    **flags,
) -> RunConfig:
    """
    Validate the flags of one invocation into a RunConfig.

    :raises ConfigError: If flags are malformed or conflict, or the output path cannot be written.
    :raises IngestError: If the scene file does not exist.
    """
    validate_conflicts(
        flags["camera_path"],
        flags["inline_camera"],
        flags["resort"],
        flags["resort_k"],
        flags["fovea"],
        {
            "--center-frac": flags["center_frac"],
            "--padding-frac": flags["padding_frac"],
            "--gaze": flags["gaze"],
            "--mask": flags["mask_path"],
        },
    )
    scene_path = validate_scene_path(flags["scene_path"])
    validate_output_path(output_path, output_extensions)
    background = validate_numbers(flags["bg"], 3, "--bg") or tuple(app.config["BACKGROUND"])
    gaze = validate_numbers(flags["gaze"], 2, "--gaze")
    threads = flags["threads"] if flags["threads"] is not None else app.config["THREADS"]
    resort_k = flags["resort_k"] if flags["resort_k"] is not None else app.config["RESORT_K"]

    defaults = FoveaConfig()
    center = flags["center_frac"] if flags["center_frac"] is not None else defaults.center_fraction
    padding = flags["padding_frac"] if flags["padding_frac"] is not None else defaults.padding_fraction
    try:
        fovea = FoveaConfig(center_fraction=center, padding_fraction=padding, gaze_center=gaze)
        render = RenderSettings(
            projection_mode=ProjectionMode(flags["projection"]),
            depth_mode=DepthMode(flags["sort_mode"]),
            resort=flags["resort"] == "on",
            resort_k=resort_k,
            background=background,
            threads=threads,
            t_min=app.config["T_MIN"],
        )
    except ValueError as e:
        raise ConfigError(str(e))

    return RunConfig(
        subcommand=subcommand,
        scene_path=scene_path,
        camera_path=flags["camera_path"],
        inline_camera=validate_inline_camera(flags["inline_camera"]),
        camera_index=flags["camera_index"],
        mask_path=flags["mask_path"],
        fovea_mode=FoveaMode(flags["fovea"]),
        fovea=fovea,
        render=render,
        output_path=output_path,
    )


def load_cameras(app: Application, run: RunConfig):
    if run.inline_camera is not None:
        width, height, fx, fy = run.inline_camera
        return [
            CameraModel(
                position=np.zeros(3),
                orientation=np.eye(3),
                focal=(fx, fy),
                principal_point=(width / 2.0, height / 2.0),
                resolution=(width, height),
            )
        ]
    if run.camera_path.lower().endswith(".json"):
        return app.cameras.load_cameras_json(run.camera_path)
    return app.cameras.load_cameras(run.camera_path)


def select_camera(app: Application, run: RunConfig) -> CameraModel:
    cameras = load_cameras(app, run)
    if not 0 <= run.camera_index < len(cameras):
        raise ConfigError(f"--camera-index {run.camera_index} out of range (0..{len(cameras) - 1})")
    return cameras[run.camera_index]


def load_inputs(app: Application, run: RunConfig):
    scene, report = app.scenes.load_scene(run.scene_path)
    logger.info(
        "Loaded %d Gaussians (degree %d) from %s", report.gaussian_count, report.sh_degree, run.scene_path
    )
    cam = select_camera(app, run)
    mask = app.masks.load_mask(run.mask_path, cam.resolution) if run.mask_path else None
    return scene, cam, mask


def render_frame(
    run: RunConfig,
    scene: Scene,
    cam: CameraModel,
    mask: Optional[np.ndarray],
    fovea_mode: FoveaMode = None,
    render: RenderSettings = None,
) -> RenderResult:
    service = RasterService(render or run.render)
    fovea_mode = fovea_mode or run.fovea_mode
    if fovea_mode == FoveaMode.SINGLE:
        return service.render_foveated_single_pass(scene, cam, run.fovea, mask)
    if fovea_mode == FoveaMode.TWO:
        return service.render_foveated_two_pass(scene, cam, run.fovea, mask)
    return service.render_full(scene, cam)


def echo_lines(values: Dict[str, Any]) -> None:
    for key, value in values.items():
        click.echo(f"{key}: {value}")


@click.group(cls=RasterGroup)
@click.option("--log-level", default=None, help="Logging level (DEBUG, INFO, WARNING, ...).")
@click.pass_context
def cli(ctx, log_level):
    """Tile-based Gaussian scene rasterizer."""
    if ctx.obj is None:
        from src.main import create_app

        ctx.obj = create_app()
    if log_level:
        logging.getLogger().setLevel(log_level.upper())


@cli.command("render")
@render_options
@click.option("--out", "output_path", type=str, required=True, help="Output image (.png or .ppm).")
@click.pass_obj
@handle_errors
def cmd_render(app: Application, output_path, **flags):
    """Render one frame to an image file and print its counters."""
    run = build_run_config(app, "render", output_path, IMAGE_EXTENSIONS, **flags)
    scene, cam, mask = load_inputs(app, run)
    result = render_frame(run, scene, cam, mask)
    app.images.save_image(output_path, result.image)
    click.echo(app.stats.format_stats(collect_stats(result)))


@cli.command("compare")
@render_options
@click.option(
    "--against",
    type=click.Choice(["oracle", "full", "self"]),
    default="oracle",
    show_default=True,
)
@click.option("--b-projection", type=click.Choice([m.value for m in ProjectionMode]), default=None)
@click.option("--b-fovea", type=click.Choice([m.value for m in FoveaMode]), default=None)
@click.option("--large-fov", is_flag=True, help="Run the widened-FOV crop protocol instead.")
@click.pass_obj
@handle_errors
def cmd_compare(app: Application, against, b_projection, b_fovea, large_fov, **flags):
    """Render two configurations (or one and the reference renderer) and compare them."""
    run = build_run_config(app, "compare", **flags)
    scene, cam, mask = load_inputs(app, run)
    b_render = run.render
    if b_projection:
        b_render = replace(b_render, projection_mode=ProjectionMode(b_projection))
    b_mode = FoveaMode(b_fovea) if b_fovea else run.fovea_mode

    if large_fov:
        oracle = OracleService(run.render)
        report = {}
        configurations = [("a", run.render, run.fovea_mode)]
        if b_projection or b_fovea:
            configurations.append(("b", b_render, b_mode))
        for label, settings, mode in configurations:
            protocol = oracle.large_fov_protocol(
                scene,
                cam,
                lambda s, c, settings=settings, mode=mode: render_frame(run, s, c, None, mode, settings),
                app.config["LARGE_FOV_FACTOR"],
            )
            report[f"{label}_large_fov_psnr"] = format_db(protocol.psnr)
        echo_lines(report)
        return

    result_a = render_frame(run, scene, cam, mask)
    if against == "oracle":
        image_b = OracleService(b_render).reference_render(scene, cam)
        result_b = None
    elif against == "full":
        result_b = RasterService(b_render).render_full(scene, cam)
        image_b = result_b.image
    else:
        result_b = render_frame(run, scene, cam, mask, b_mode, b_render)
        image_b = result_b.image

    report = {
        "psnr": format_db(psnr(result_a.image, image_b)),
        "ssim": f"{ssim(result_a.image, image_b):.6f}",
        "max_channel_diff": f"{max_channel_diff(result_a.image, image_b):.6f}",
    }
    if run.fovea_mode != FoveaMode.OFF:
        weights = blend_weights(run.fovea, cam.width, cam.height)
        center = weights >= 1.0
        report["center_max_diff"] = f"{max_channel_diff(result_a.image, image_b, center):.6f}"
        report["periphery_psnr"] = format_db(psnr(result_a.image, image_b, ~center))
    if result_b is not None:
        for key in ("pairs_instantiated", "per_pixel_samples", "gaussians_preprocessed"):
            delta = getattr(result_a.stats, key) - getattr(result_b.stats, key)
            report[f"delta_{key}"] = delta
    echo_lines(report)


@cli.command("bench")
@render_options
@click.option("--repeat", type=int, default=1, show_default=True)
@click.option("--samples", type=int, default=None, help="Poses per camera pair.")
@click.option("--stereo", is_flag=True, help="Render every pose once per eye.")
@click.option("--eye-offset", type=float, default=None, help="Half the eye distance, world units.")
@click.pass_obj
@handle_errors
def cmd_bench(app: Application, repeat, samples, stereo, eye_offset, **flags):
    """Render an interpolated camera path and report per-stage timings."""
    if repeat < 1:
        raise ConfigError("--repeat must be at least 1")
    run = build_run_config(app, "bench", **flags)
    scene, _, mask = load_inputs(app, run)
    path = interpolate_path(load_cameras(app, run), samples or app.config["BENCH_SAMPLES"])
    offset = eye_offset if eye_offset is not None else app.config["EYE_OFFSET"]

    timings: Dict[str, list] = {}
    frames = 0
    last_stats = None
    for _ in range(repeat):
        for pose in path:
            eyes = stereo_pair(pose, offset) if stereo else (pose,)
            for eye in eyes:
                result = render_frame(run, scene, eye, mask)
                for stage, seconds in result.timings.items():
                    timings.setdefault(stage, []).append(seconds)
                frames += 1
                last_stats = collect_stats(result)

    report = {"frames": frames, "poses": len(path)}
    for stage, values in timings.items():
        report[f"{stage}_mean_ms"] = f"{1000.0 * float(np.mean(values)):.3f}"
        report[f"{stage}_min_ms"] = f"{1000.0 * float(np.min(values)):.3f}"
    echo_lines(report)
    click.echo(app.stats.format_stats(last_stats))


@cli.command("stats")
@render_options
@click.option("--out", "output_path", type=str, default=None, help="Write the counters as JSON.")
@click.pass_obj
@handle_errors
def cmd_stats(app: Application, output_path, **flags):
    """Render without writing an image and report the frame counters."""
    run = build_run_config(app, "stats", output_path, **flags)
    scene, cam, mask = load_inputs(app, run)
    stats = collect_stats(render_frame(run, scene, cam, mask))
    click.echo(app.stats.format_stats(stats))
    if output_path:
        extra = {
            "config": {
                "resolution": list(cam.resolution),
                "projection": run.render.projection_mode.value,
                "sort": run.render.depth_mode.value,
                "resort": run.render.resort,
                "resort_k": run.render.resort_k,
                "fovea": run.fovea_mode.value,
                "center_fraction": run.fovea.center_fraction,
                "padding_fraction": run.fovea.padding_fraction,
            }
        }
        app.stats.save_stats(output_path, stats, extra)


@cli.command("init-scenes")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--size", type=int, default=64, show_default=True, help="Camera and mask resolution.")
@click.pass_obj
@handle_errors
def cmd_init_scenes(app: Application, out_dir, size):
    """Write the bundled synthetic scenes, a camera file and an oval mask."""
    if size < 1:
        raise ConfigError("--size must be positive")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Failed to create {out_dir}: {e}")
    for name, factory in BUNDLED_SCENES.items():
        app.scenes.save_scene(os.path.join(out_dir, f"{name}.ply"), factory())
    app.cameras.save_cameras(os.path.join(out_dir, "cameras.txt"), orbit_cameras(3, size, size))
    app.masks.save_mask(os.path.join(out_dir, "mask.png"), hmd_mask(size, size))
    click.echo(f"Wrote {len(BUNDLED_SCENES)} scenes to {out_dir}")
