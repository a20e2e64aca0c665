# -*- coding: utf-8 -*-
"""
Popping-free ordering.

Pairs arrive per tile sorted by the depth of each splat's density maximum
along the ray through its tile maximum. Every pixel then reorders that stream
with a bounded window keyed on the depth along its own ray, which depends on
the ray only and not on how the camera is oriented.
"""
import heapq
from dataclasses import dataclass
from typing import Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.application.gaussian_ops import ALPHA_THRESHOLD, build_covariance, ray_depths
from src.core.application.tile_pipeline import contribution_depth, encode_depth, max_contrib
from src.core.domain.models import CameraModel, Gaussian3D, PixelRect, Splat2D

DEFAULT_T_MIN = 1e-4


class StreamEntry(NamedTuple):
    """One surviving pair of a subtile stream; ``position`` indexes the splat list."""

    depth: float
    index: int
    position: int


class Fragment(NamedTuple):
    """One splat evaluated at one pixel."""

    ray_depth: float
    index: int
    alpha: float
    color: np.ndarray

    @property
    def key(self) -> Tuple[float, int]:
        return self.ray_depth, self.index


def per_tile_depth(splat: Splat2D, point_screen, cam: CameraModel) -> float:
    """
    Depth of the splat's maximum 3D density along the camera ray through
    ``point_screen``, clamped below at the near plane.
    """
    return contribution_depth(splat, point_screen, cam)


def per_pixel_ray_depth(
    splat: Union[Gaussian3D, Splat2D], pixel, cam: CameraModel
) -> float:
    """
    Per-ray depth for the ray through a pixel position.

    :param splat: Gaussian (or its projected splat, which carries μ and Σ⁻¹).
    :param pixel: Continuous pixel coordinates, usually a pixel center.
    :param cam: Camera.
    :return: t* along the unit ray direction.
    """
    if isinstance(splat, Gaussian3D):
        mean3d = splat.mean
        cov3d_inv = np.linalg.inv(build_covariance(splat.rotation, splat.scale))
    else:
        mean3d, cov3d_inv = splat.mean3d, splat.cov3d_inv
    direction = cam.pixel_directions(np.asarray(pixel, dtype=np.float64))
    return float(ray_depths(mean3d, cov3d_inv, cam.position, direction, cam.near_plane))


def pixel_ray_depths(splat: Splat2D, directions: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Vectorized per-ray depths for precomputed unit ray directions (P, 3)."""
    return ray_depths(splat.mean3d, splat.cov3d_inv, cam.position, directions, cam.near_plane)


def subtile_recull(
    positions: Sequence[int],
    rect: PixelRect,
    splats: Sequence[Splat2D],
    cam: CameraModel,
    per_tile_depth_keys: bool = True,
) -> List[StreamEntry]:
    """
    Re-run the exact contribution test of a parent tile's pairs against one
    subtile and re-key the survivors.

    :param positions: Splat positions of the parent tile, in sorted order.
    :param rect: Subtile pixel rectangle.
    :param splats: Splat list the positions index into.
    :param cam: Camera.
    :param per_tile_depth_keys: Depth is re-evaluated at the subtile maximum
        when set; depth_hint is used otherwise.
    :return: Survivors ordered by (float32 depth, splat index).
    """
    survivors = []
    for position in positions:
        splat = splats[position]
        contribution = max_contrib(splat, rect, cam)
        if contribution.culled:
            continue
        if per_tile_depth_keys:
            depth = per_tile_depth(splat, contribution.point_screen, cam)
        else:
            depth = splat.depth_hint
        survivors.append(StreamEntry(depth, splat.index, int(position)))

    if not survivors:
        return survivors
    encoded = encode_depth([entry.depth for entry in survivors])
    order = sorted(range(len(survivors)), key=lambda i: (int(encoded[i]), survivors[i].index))
    return [survivors[i] for i in order]


class ResortWindow:
    """
    Per-pixel reorder buffer of at most ``capacity`` fragments, kept as a heap
    on (ray depth, splat index).
    """

    def __init__(self, capacity: int = 16):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self._heap: List[Tuple[float, int, int, Fragment]] = []
        self._sequence = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, fragment: Fragment) -> Optional[Fragment]:
        """Insert a fragment; returns the nearest entry when the window overflows."""
        heapq.heappush(self._heap, (fragment.ray_depth, fragment.index, self._sequence, fragment))
        self._sequence += 1
        if len(self._heap) > self.capacity:
            return heapq.heappop(self._heap)[3]
        return None

    def minimum(self) -> Optional[Fragment]:
        return self._heap[0][3] if self._heap else None

    def drain(self) -> Iterator[Fragment]:
        while self._heap:
            yield heapq.heappop(self._heap)[3]


class FrontToBackAccumulator:
    """Product-transmittance compositing with early termination below ``t_min``."""

    def __init__(self, t_min: float = DEFAULT_T_MIN):
        self.t_min = t_min
        self.color = np.zeros(3)
        self.transmittance = 1.0
        self.blended = 0

    @property
    def done(self) -> bool:
        return self.transmittance < self.t_min

    def blend(self, alpha: float, color) -> None:
        self.color = self.color + self.transmittance * alpha * np.asarray(color)
        self.transmittance *= 1.0 - alpha
        self.blended += 1


@dataclass
class PixelBlend:
    color: np.ndarray
    transmittance: float
    overflows: int
    blended: int

    def composite(self, background) -> np.ndarray:
        return self.color + self.transmittance * np.asarray(background, dtype=np.float64)


def resorted_blend(
    fragments: Iterable[Fragment],
    capacity: int = 16,
    resort: bool = True,
    t_min: float = DEFAULT_T_MIN,
) -> PixelBlend:
    """
    Blend one pixel's tile-ordered fragment stream front to back.

    With ``resort`` the stream passes through a ResortWindow of ``capacity``
    entries; an arriving fragment that sorts before the last blended one is
    counted as an overflow. Zero overflows means the result equals blending
    the fully sorted stream. Without ``resort`` fragments blend in stream order.

    The window releases its minimum only when a push exceeds ``capacity`` and
    drains at the end of the stream. It never releases early because the
    incoming tile depth has passed the window minimum.

    :param fragments: Fragments in tile order.
    :param capacity: Window size K.
    :param resort: Enable per-pixel resorting.
    :param t_min: Early-termination transmittance.
    :return: PixelBlend with the premultiplied color and remaining transmittance.
    """
    accumulator = FrontToBackAccumulator(t_min)
    window = ResortWindow(capacity)
    last_key = None
    overflows = 0

    for fragment in fragments:
        if fragment.alpha < ALPHA_THRESHOLD:
            continue
        if not resort:
            if accumulator.done:
                break
            accumulator.blend(fragment.alpha, fragment.color)
            continue
        # arrivals after termination are still checked against the blended order
        if last_key is not None and fragment.key < last_key:
            overflows += 1
        if accumulator.done:
            continue
        released = window.push(fragment)
        if released is not None:
            accumulator.blend(released.alpha, released.color)
            last_key = released.key

    for fragment in window.drain():
        if accumulator.done:
            break
        accumulator.blend(fragment.alpha, fragment.color)

    return PixelBlend(accumulator.color, accumulator.transmittance, overflows, accumulator.blended)


def full_sort_blend(fragments: Iterable[Fragment], t_min: float = DEFAULT_T_MIN) -> PixelBlend:
    """Blend after a complete per-ray sort (the reference ordering)."""
    accumulator = FrontToBackAccumulator(t_min)
    for fragment in sorted(fragments, key=lambda f: f.key):
        if accumulator.done:
            break
        if fragment.alpha < ALPHA_THRESHOLD:
            continue
        accumulator.blend(fragment.alpha, fragment.color)
    return PixelBlend(accumulator.color, accumulator.transmittance, 0, accumulator.blended)
