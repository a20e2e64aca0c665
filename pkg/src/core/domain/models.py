# -*- coding: utf-8 -*-
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

ROTATION_TOLERANCE = 1e-6


class ProjectionMode(str, enum.Enum):
    AFFINE = "affine"
    OPTIMAL = "optimal"


class DepthMode(str, enum.Enum):
    VIEW_Z = "viewz"
    EUCLIDEAN_DIST = "dist"


class FoveaMode(str, enum.Enum):
    OFF = "off"
    SINGLE = "single"
    TWO = "two"


class Frame(enum.Enum):
    SCREEN_AFFINE = "screen_affine"
    OPTIMAL_PLANE = "optimal_plane"


class RejectReason(enum.Enum):
    BEHIND_CAMERA = "behind camera"
    DEGENERATE_MEAN = "degenerate mean"


class TileClass(enum.IntEnum):
    HIGH_RES = 0
    LOW_RES = 1
    HYBRID = 2
    INVISIBLE = 3


class Gaussian3D:
    """
    One scene primitive with activated parameters.

    Attributes:
    ----------
    mean : ndarray (3,)
        World-space center.
    rotation : ndarray (4,)
        Unit quaternion, (w, x, y, z) order.
    scale : ndarray (3,)
        Per-axis standard deviations, strictly positive.
    opacity : float
        Activated opacity in the open interval (0, 1).
    sh_coeffs : ndarray (K, 3)
        Spherical-harmonics coefficients, K = (L+1)^2 with L in 0..3.

    Raises:
    ------
    ValueError:
        If any of the invariants above does not hold.
    """

    __slots__ = ("mean", "rotation", "scale", "opacity", "sh_coeffs")

    def __init__(self, mean, rotation, scale, opacity, sh_coeffs):
        self.mean = np.asarray(mean, dtype=np.float64).reshape(3)
        self.rotation = np.asarray(rotation, dtype=np.float64).reshape(4)
        self.scale = np.asarray(scale, dtype=np.float64).reshape(3)
        self.opacity = float(opacity)
        self.sh_coeffs = np.asarray(sh_coeffs, dtype=np.float64).reshape(-1, 3)

        if abs(np.linalg.norm(self.rotation) - 1.0) > ROTATION_TOLERANCE:
            raise ValueError("rotation must be a unit quaternion")
        if np.any(self.scale <= 0):
            raise ValueError("scale must be greater than zero")
        if not 0.0 < self.opacity < 1.0:
            raise ValueError("opacity must lie in (0, 1)")
        if self.sh_coeffs.shape[0] not in (1, 4, 9, 16):
            raise ValueError("sh_coeffs must hold (L+1)^2 coefficients, L in 0..3")

    @property
    def sh_degree(self) -> int:
        return int(math.isqrt(self.sh_coeffs.shape[0])) - 1

    def __repr__(self):
        return (
            f"Gaussian3D(mean={self.mean.tolist()}, scale={self.scale.tolist()}, "
            f"opacity={self.opacity:.4f}, sh_degree={self.sh_degree})"
        )


@dataclass(frozen=True, eq=False)
class Scene:
    """Immutable, order-preserving collection of Gaussians."""

    gaussians: Tuple[Gaussian3D, ...] = ()

    def __len__(self) -> int:
        return len(self.gaussians)

    def __iter__(self) -> Iterator[Gaussian3D]:
        return iter(self.gaussians)

    def __getitem__(self, index: int) -> Gaussian3D:
        return self.gaussians[index]

    @classmethod
    def from_list(cls, gaussians: Sequence[Gaussian3D]) -> "Scene":
        return cls(tuple(gaussians))


class CameraModel:
    """
    Pinhole camera. Continuous pixel coordinates place the center of pixel
    (i, j) at (i + 0.5, j + 0.5).

    Attributes:
    ----------
    position : ndarray (3,)
        Camera center o in world units.
    orientation : ndarray (3, 3)
        World-to-camera rotation W (view = W @ (x - o)); +z looks forward,
        +x right, +y down.
    focal : ndarray (2,)
        Focal lengths in pixels.
    principal_point : ndarray (2,)
        Principal point in continuous pixel coordinates.
    resolution : (int, int)
        Width and height in pixels.
    near_plane : float
        View-space z below which points are rejected.

    Raises:
    ------
    ValueError:
        If the orientation is not orthonormal, or focal / near plane are not positive.
    """

    __slots__ = (
        "position",
        "orientation",
        "focal",
        "principal_point",
        "resolution",
        "near_plane",
    )

    def __init__(
        self,
        position,
        orientation,
        focal,
        principal_point,
        resolution,
        near_plane: float = 0.01,
    ):
        self.position = np.asarray(position, dtype=np.float64).reshape(3)
        self.orientation = np.asarray(orientation, dtype=np.float64).reshape(3, 3)
        self.focal = np.asarray(focal, dtype=np.float64).reshape(2)
        self.principal_point = np.asarray(principal_point, dtype=np.float64).reshape(2)
        self.resolution = (int(resolution[0]), int(resolution[1]))
        self.near_plane = float(near_plane)

        gram = self.orientation @ self.orientation.T
        if not np.allclose(gram, np.eye(3), atol=ROTATION_TOLERANCE):
            raise ValueError("orientation must be orthonormal")
        if np.any(self.focal <= 0):
            raise ValueError("focal must be greater than zero")
        if self.near_plane <= 0:
            raise ValueError("near_plane must be greater than zero")
        if self.resolution[0] <= 0 or self.resolution[1] <= 0:
            raise ValueError("resolution must be positive")

    @property
    def width(self) -> int:
        return self.resolution[0]

    @property
    def height(self) -> int:
        return self.resolution[1]

    @property
    def tan_fov(self) -> np.ndarray:
        """Tangent of the half field of view per axis."""
        return np.array(self.resolution, dtype=np.float64) / (2.0 * self.focal)

    def world_to_view(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.position) @ self.orientation.T

    def view_to_pixel(self, view_points) -> np.ndarray:
        view_points = np.asarray(view_points, dtype=np.float64)
        return view_points[..., :2] / view_points[..., 2:3] * self.focal + self.principal_point

    def pixel_directions(self, points_px) -> np.ndarray:
        """Unit world-space ray directions through continuous pixel coordinates."""
        points_px = np.asarray(points_px, dtype=np.float64)
        xy = (points_px - self.principal_point) / self.focal
        view = np.concatenate([xy, np.ones(xy.shape[:-1] + (1,))], axis=-1)
        world = view @ self.orientation
        return world / np.linalg.norm(world, axis=-1, keepdims=True)

    def pixel_centers(self, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
        """Centers of the pixels in [x0, x1) x [y0, y1), row-major, shape (P, 2)."""
        xs = np.arange(x0, x1, dtype=np.float64) + 0.5
        ys = np.arange(y0, y1, dtype=np.float64) + 0.5
        grid_x, grid_y = np.meshgrid(xs, ys)
        return np.stack([grid_x.ravel(), grid_y.ravel()], axis=-1)

    def with_pose(self, position, orientation) -> "CameraModel":
        return CameraModel(
            position,
            orientation,
            self.focal,
            self.principal_point,
            self.resolution,
            self.near_plane,
        )

    def __repr__(self):
        return (
            f"CameraModel(position={self.position.tolist()}, focal={self.focal.tolist()}, "
            f"principal_point={self.principal_point.tolist()}, resolution={self.resolution})"
        )


@dataclass(frozen=True)
class Rejected:
    reason: RejectReason


@dataclass(eq=False)
class Splat2D:
    """
    A projected Gaussian.

    For ScreenAffine frames mean2d / cov2d are in pixels. For OptimalPlane frames
    they live on the plane tangent to the unit sphere around o at the direction
    of the mean; ``basis`` holds its world-space rows (e1, e2, n).
    """

    index: int
    frame: Frame
    mean2d: np.ndarray
    cov2d: np.ndarray
    cov2d_inv: np.ndarray
    color: np.ndarray
    opacity: float
    depth_hint: float
    screen_mean: np.ndarray
    mean3d: np.ndarray
    cov3d_inv: np.ndarray
    basis: Optional[np.ndarray] = None

    @property
    def alpha_peak(self) -> float:
        return min(0.99, self.opacity)


class TileRect(NamedTuple):
    """Inclusive coarse-tile range."""

    tx0: int
    ty0: int
    tx1: int
    ty1: int

    @property
    def area(self) -> int:
        return (self.tx1 - self.tx0 + 1) * (self.ty1 - self.ty0 + 1)


class PixelRect(NamedTuple):
    """Half-open pixel rectangle [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0


@dataclass(frozen=True)
class TileGrid:
    """
    Coarse 32-px tiles, each split into (up to) four 16-px subtiles.

    Tile ids are row-major over coarse tiles.
    """

    width: int
    height: int
    coarse_tile_size: int = 32
    fine_tile_size: int = 16

    @property
    def grid_dims(self) -> Tuple[int, int]:
        return (
            -(-self.width // self.coarse_tile_size),
            -(-self.height // self.coarse_tile_size),
        )

    @property
    def tile_count(self) -> int:
        gx, gy = self.grid_dims
        return gx * gy

    def tile_id(self, tx: int, ty: int) -> int:
        return ty * self.grid_dims[0] + tx

    def tile_coords(self, tile_id: int) -> Tuple[int, int]:
        gx = self.grid_dims[0]
        return tile_id % gx, tile_id // gx

    def tile_pixels(self, tile_id: int) -> PixelRect:
        tx, ty = self.tile_coords(tile_id)
        size = self.coarse_tile_size
        return PixelRect(
            tx * size,
            ty * size,
            min((tx + 1) * size, self.width),
            min((ty + 1) * size, self.height),
        )

    def subtile_pixels(self, tile_id: int) -> List[PixelRect]:
        parent = self.tile_pixels(tile_id)
        size = self.fine_tile_size
        subtiles = []
        for y0 in (parent.y0, parent.y0 + size):
            for x0 in (parent.x0, parent.x0 + size):
                rect = PixelRect(x0, y0, min(x0 + size, parent.x1), min(y0 + size, parent.y1))
                if rect.width > 0 and rect.height > 0:
                    subtiles.append(rect)
        return subtiles

    def full_rect(self) -> TileRect:
        gx, gy = self.grid_dims
        return TileRect(0, 0, gx - 1, gy - 1)


@dataclass(frozen=True, eq=False)
class VisibilityIndex:
    """
    Per-tile visibility bits, indexed [ty, tx], and their summed-area table.

    ``sat[j, i]`` counts set bits in rows [0, j) and columns [0, i).
    """

    bitfield: np.ndarray
    sat: np.ndarray

    def is_visible(self, tx: int, ty: int) -> bool:
        return bool(self.bitfield[ty, tx])

    @property
    def visible_count(self) -> int:
        return int(self.sat[-1, -1])


@dataclass(eq=False)
class PairList:
    """
    (key, splat index) pairs; the high 32 key bits hold the tile id and the
    low 32 bits the float32 bit pattern of the depth. ``ranges`` is filled in by
    sorting and holds one half-open (start, end) row per tile.
    """

    keys: np.ndarray
    values: np.ndarray
    tile_count: int
    ranges: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.keys.shape[0])

    def tile_range(self, tile_id: int) -> Tuple[int, int]:
        if self.ranges is None:
            raise ValueError("pair list is not sorted")
        start, end = self.ranges[tile_id]
        return int(start), int(end)


@dataclass(frozen=True)
class FoveaConfig:
    """
    Foveation layout. ``center_fraction`` sizes the full-resolution rectangle
    around the gaze; ``padding_fraction`` is the width of the linear blend ramp
    outside it, both as fractions of the image size.
    """

    center_fraction: float = 0.5
    padding_fraction: float = 0.10
    gaze_center: Optional[Tuple[float, float]] = None
    enable_visibility_cull: bool = True

    def __post_init__(self):
        if not 0.0 < self.center_fraction <= 1.0:
            raise ValueError("center_fraction must lie in (0, 1]")
        if not 0.0 <= self.padding_fraction < self.center_fraction:
            raise ValueError("padding_fraction must lie in [0, center_fraction)")

    def gaze_for(self, width: int, height: int) -> Tuple[float, float]:
        if self.gaze_center is None:
            return width / 2.0, height / 2.0
        return self.gaze_center


@dataclass(eq=False)
class TilePartition:
    """Coarse-tile classes, indexed [ty, tx], and per-pixel blend weights [y, x]."""

    classes: np.ndarray
    weights: np.ndarray

    def tile_class(self, tx: int, ty: int) -> TileClass:
        return TileClass(int(self.classes[ty, tx]))

    def class_counts(self) -> Dict[str, int]:
        return {
            tile_class.name.lower(): int(np.count_nonzero(self.classes == tile_class))
            for tile_class in TileClass
        }


@dataclass
class SceneFileReport:
    gaussian_count: int = 0
    normalized_quaternions: int = 0
    rejected_records: int = 0
    rejection_reasons: Dict[str, int] = field(default_factory=dict)
    sh_degree: int = 0

    def reject(self, reason: str) -> None:
        self.rejected_records += 1
        self.rejection_reasons[reason] = self.rejection_reasons.get(reason, 0) + 1


@dataclass
class FrameStats:
    """
    Workload counters of one rendered frame (or the sum over passes).

    Raises:
    ------
    ValueError:
        If a counter is negative or more pairs survive culling than were reserved.
    """

    pairs_instantiated: int = 0
    pairs_after_exact_cull: int = 0
    tiles_by_class: Dict[str, int] = field(
        default_factory=lambda: {tile_class.name.lower(): 0 for tile_class in TileClass}
    )
    per_pixel_samples: int = 0
    resort_overflows: int = 0
    gaussians_preprocessed: int = 0
    total_tiles: int = 0
    visible_tiles: int = 0
    pairs_without_visibility: int = 0

    def __post_init__(self):
        counters = (
            self.pairs_instantiated,
            self.pairs_after_exact_cull,
            self.per_pixel_samples,
            self.resort_overflows,
            self.gaussians_preprocessed,
            self.total_tiles,
            self.visible_tiles,
            self.pairs_without_visibility,
        )
        if any(value < 0 for value in counters) or any(
            value < 0 for value in self.tiles_by_class.values()
        ):
            raise ValueError("counters must be non-negative")
        if self.pairs_after_exact_cull > self.pairs_instantiated:
            raise ValueError("pairs_after_exact_cull cannot exceed pairs_instantiated")

    @property
    def tile_reduction(self) -> float:
        if self.total_tiles == 0:
            return 0.0
        return 1.0 - self.visible_tiles / self.total_tiles

    @property
    def pair_reduction(self) -> float:
        if self.pairs_without_visibility == 0:
            return 0.0
        return 1.0 - self.pairs_instantiated / self.pairs_without_visibility

    def merged(self, other: "FrameStats") -> "FrameStats":
        """Sum of two passes; tile classes are taken from ``self``."""
        return replace(
            self,
            pairs_instantiated=self.pairs_instantiated + other.pairs_instantiated,
            pairs_after_exact_cull=self.pairs_after_exact_cull + other.pairs_after_exact_cull,
            per_pixel_samples=self.per_pixel_samples + other.per_pixel_samples,
            resort_overflows=self.resort_overflows + other.resort_overflows,
            gaussians_preprocessed=self.gaussians_preprocessed + other.gaussians_preprocessed,
            pairs_without_visibility=self.pairs_without_visibility
            + other.pairs_without_visibility,
            tiles_by_class=dict(self.tiles_by_class),
        )

    def as_dict(self) -> Dict[str, object]:
        return {
            "pairs_instantiated": self.pairs_instantiated,
            "pairs_after_exact_cull": self.pairs_after_exact_cull,
            "tiles_by_class": dict(self.tiles_by_class),
            "per_pixel_samples": self.per_pixel_samples,
            "resort_overflows": self.resort_overflows,
            "gaussians_preprocessed": self.gaussians_preprocessed,
            "total_tiles": self.total_tiles,
            "visible_tiles": self.visible_tiles,
            "pairs_without_visibility": self.pairs_without_visibility,
            "tile_reduction": round(self.tile_reduction, 6),
            "pair_reduction": round(self.pair_reduction, 6),
        }


@dataclass(frozen=True)
class RenderSettings:
    projection_mode: ProjectionMode = ProjectionMode.OPTIMAL
    depth_mode: DepthMode = DepthMode.VIEW_Z
    resort: bool = True
    resort_k: int = 16
    background: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    threads: int = 1
    t_min: float = 1e-4

    def __post_init__(self):
        if self.resort_k < 1:
            raise ValueError("resort_k must be at least 1")
        if self.threads < 0:
            raise ValueError("threads must be non-negative")
        if len(self.background) != 3:
            raise ValueError("background must have three channels")


@dataclass(frozen=True)
class RunConfig:
    """Validated settings of one CLI invocation (flags only)."""

    subcommand: str
    scene_path: str
    camera_path: Optional[str] = None
    inline_camera: Optional[Tuple[int, int, float, float]] = None
    camera_index: int = 0
    mask_path: Optional[str] = None
    fovea_mode: FoveaMode = FoveaMode.OFF
    fovea: FoveaConfig = field(default_factory=FoveaConfig)
    render: RenderSettings = field(default_factory=RenderSettings)
    output_path: Optional[str] = None
