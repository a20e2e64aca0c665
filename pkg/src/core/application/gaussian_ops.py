# -*- coding: utf-8 -*-
"""
Per-Gaussian math: covariance construction, density evaluation,
view-dependent color and the two projection models.

Projections return either a ``Splat2D`` or a ``Rejected`` value. An
OptimalPlane splat lives on the plane tangent to the unit sphere around the
camera center at the direction of its mean; the helpers at the bottom map
pixels onto that plane and back.
"""
import logging
from typing import List, Optional, Tuple, Union

import numpy as np

from src.core.domain.errors import BehindCameraError
from src.core.domain.models import (
    CameraModel,
    DepthMode,
    Frame,
    Gaussian3D,
    ProjectionMode,
    Rejected,
    RejectReason,
    Scene,
    Splat2D,
)

logger = logging.getLogger(__name__)

SCREEN_DILATION = 0.3
DEGENERATE_MEAN_EPSILON = 1e-6
GUARD_BAND = 1.3
ALPHA_CLAMP = 0.99
ALPHA_THRESHOLD = 1.0 / 255.0
PARALLEL_EPSILON = 1e-12

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = [
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
]
SH_C3 = [
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.4453057213202769,
    -0.5900435899266435,
]


def quat_to_rotmat(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion stored as (w, x, y, z)."""
    w, x, y, z = np.asarray(q, dtype=np.float64) / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def build_covariance(rotation, scale) -> np.ndarray:
    """
    Build the 3D covariance R S Sᵀ Rᵀ.

    :param rotation: Unit quaternion (w, x, y, z).
    :param scale: Per-axis standard deviations.
    :return: Symmetric positive definite 3×3 matrix.
    """
    m = quat_to_rotmat(rotation) * np.asarray(scale, dtype=np.float64)[None, :]
    cov = m @ m.T
    return 0.5 * (cov + cov.T)


def eval_density(x, mean, cov_inv) -> np.ndarray:
    """
    Unnormalized Gaussian density exp(-½ (x-μ)ᵀ Σ⁻¹ (x-μ)).

    ``x`` may carry leading batch dimensions; the last axis is the point.
    """
    delta = np.asarray(x, dtype=np.float64) - np.asarray(mean, dtype=np.float64)
    quad = np.einsum("...i,ij,...j->...", delta, np.asarray(cov_inv), delta)
    return np.exp(-0.5 * quad)


def sh_to_color(sh_coeffs, view_dir) -> np.ndarray:
    """
    Evaluate real spherical harmonics up to the degree held by ``sh_coeffs``.

    :param sh_coeffs: (K, 3) coefficients, K in {1, 4, 9, 16}.
    :param view_dir: Unit direction from the camera toward the Gaussian.
    :return: RGB color with the +0.5 offset, floored at zero.
    """
    sh = np.asarray(sh_coeffs, dtype=np.float64).reshape(-1, 3)
    degree = int(np.sqrt(sh.shape[0])) - 1
    result = SH_C0 * sh[0]

    if degree >= 1:
        x, y, z = np.asarray(view_dir, dtype=np.float64)
        result = result - SH_C1 * y * sh[1] + SH_C1 * z * sh[2] - SH_C1 * x * sh[3]

        if degree >= 2:
            xx, yy, zz = x * x, y * y, z * z
            xy, yz, xz = x * y, y * z, x * z
            result = (
                result
                + SH_C2[0] * xy * sh[4]
                + SH_C2[1] * yz * sh[5]
                + SH_C2[2] * (2.0 * zz - xx - yy) * sh[6]
                + SH_C2[3] * xz * sh[7]
                + SH_C2[4] * (xx - yy) * sh[8]
            )

            if degree >= 3:
                result = (
                    result
                    + SH_C3[0] * y * (3.0 * xx - yy) * sh[9]
                    + SH_C3[1] * xy * z * sh[10]
                    + SH_C3[2] * y * (4.0 * zz - xx - yy) * sh[11]
                    + SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * sh[12]
                    + SH_C3[4] * x * (4.0 * zz - xx - yy) * sh[13]
                    + SH_C3[5] * z * (xx - yy) * sh[14]
                    + SH_C3[6] * x * (xx - 3.0 * yy) * sh[15]
                )

    return np.maximum(result + 0.5, 0.0)


def _depth_hint(view_mean: np.ndarray, depth_mode: DepthMode) -> float:
    if depth_mode == DepthMode.EUCLIDEAN_DIST:
        return float(np.linalg.norm(view_mean))
    return float(view_mean[2])


def _common_fields(g: Gaussian3D, cam: CameraModel):
    cov3d = build_covariance(g.rotation, g.scale)
    offset = g.mean - cam.position
    color = sh_to_color(g.sh_coeffs, offset / np.linalg.norm(offset))
    return cov3d, np.linalg.inv(cov3d), color


def project_affine(
    g: Gaussian3D,
    cam: CameraModel,
    depth_mode: DepthMode = DepthMode.VIEW_Z,
    index: int = 0,
) -> Union[Splat2D, Rejected]:
    """
    Project with the local affine approximation of the perspective transform.

    The Jacobian is evaluated with x/z and y/z clamped to the guard band
    ±1.3·tan(half fov); the screen mean uses the unclamped position.

    :param g: Gaussian to project.
    :param cam: Camera.
    :param depth_mode: Quantity stored as depth_hint.
    :param index: Scene index recorded on the splat.
    :return: ScreenAffine splat, or Rejected(BEHIND_CAMERA).
    """
    view_mean = cam.world_to_view(g.mean)
    z = view_mean[2]
    if z < cam.near_plane:
        return Rejected(RejectReason.BEHIND_CAMERA)

    limits = GUARD_BAND * cam.tan_fov
    tx = np.clip(view_mean[0] / z, -limits[0], limits[0]) * z
    ty = np.clip(view_mean[1] / z, -limits[1], limits[1]) * z
    fx, fy = cam.focal
    jacobian = np.array(
        [
            [fx / z, 0.0, -fx * tx / (z * z)],
            [0.0, fy / z, -fy * ty / (z * z)],
        ]
    )

    cov3d, cov3d_inv, color = _common_fields(g, cam)
    t = jacobian @ cam.orientation
    cov2d = t @ cov3d @ t.T + SCREEN_DILATION * np.eye(2)
    cov2d = 0.5 * (cov2d + cov2d.T)
    screen_mean = cam.view_to_pixel(view_mean)

    return Splat2D(
        index=index,
        frame=Frame.SCREEN_AFFINE,
        mean2d=screen_mean.copy(),
        cov2d=cov2d,
        cov2d_inv=np.linalg.inv(cov2d),
        color=color,
        opacity=g.opacity,
        depth_hint=_depth_hint(view_mean, depth_mode),
        screen_mean=screen_mean,
        mean3d=g.mean.copy(),
        cov3d_inv=cov3d_inv,
    )


def _tangent_basis(view_normal: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # camera x axis orthogonalised against the normal; y axis when degenerate
    for axis in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
        e1 = axis - np.dot(axis, view_normal) * view_normal
        length = np.linalg.norm(e1)
        if length > 1e-9:
            e1 = e1 / length
            return e1, np.cross(view_normal, e1)
    raise ValueError("normal has no orthogonal camera axis")


def project_optimal(
    g: Gaussian3D,
    cam: CameraModel,
    depth_mode: DepthMode = DepthMode.VIEW_Z,
    index: int = 0,
) -> Union[Splat2D, Rejected]:
    """
    Project onto the plane tangent to the unit sphere around the camera
    center, perpendicular to the direction of the mean.

    :param g: Gaussian to project.
    :param cam: Camera.
    :param depth_mode: Quantity stored as depth_hint.
    :param index: Scene index recorded on the splat.
    :return: OptimalPlane splat, or Rejected(DEGENERATE_MEAN / BEHIND_CAMERA).
    """
    view_mean = cam.world_to_view(g.mean)
    distance = float(np.linalg.norm(view_mean))
    if distance <= DEGENERATE_MEAN_EPSILON:
        return Rejected(RejectReason.DEGENERATE_MEAN)
    if view_mean[2] < cam.near_plane:
        return Rejected(RejectReason.BEHIND_CAMERA)

    normal_v = view_mean / distance
    e1_v, e2_v = _tangent_basis(normal_v)
    # rows e1, e2, n in world space
    basis = np.stack([e1_v, e2_v, normal_v]) @ cam.orientation

    cov3d, cov3d_inv, color = _common_fields(g, cam)
    t = basis[:2] / distance
    cov_plane = t @ cov3d @ t.T

    splat = Splat2D(
        index=index,
        frame=Frame.OPTIMAL_PLANE,
        mean2d=np.zeros(2),
        cov2d=cov_plane,
        cov2d_inv=np.eye(2),
        color=color,
        opacity=g.opacity,
        depth_hint=_depth_hint(view_mean, depth_mode),
        screen_mean=cam.view_to_pixel(view_mean),
        mean3d=g.mean.copy(),
        cov3d_inv=cov3d_inv,
        basis=basis,
    )

    dilation = SCREEN_DILATION / abs(np.linalg.det(plane_to_screen_jacobian(splat, cam)))
    cov_plane = cov_plane + dilation * np.eye(2)
    splat.cov2d = 0.5 * (cov_plane + cov_plane.T)
    splat.cov2d_inv = np.linalg.inv(splat.cov2d)
    return splat


def project(
    g: Gaussian3D,
    cam: CameraModel,
    projection_mode: ProjectionMode = ProjectionMode.OPTIMAL,
    depth_mode: DepthMode = DepthMode.VIEW_Z,
    index: int = 0,
) -> Union[Splat2D, Rejected]:
    if projection_mode == ProjectionMode.AFFINE:
        return project_affine(g, cam, depth_mode, index)
    return project_optimal(g, cam, depth_mode, index)


def project_scene(
    scene: Scene,
    cam: CameraModel,
    projection_mode: ProjectionMode = ProjectionMode.OPTIMAL,
    depth_mode: DepthMode = DepthMode.VIEW_Z,
) -> List[Splat2D]:
    """Project every Gaussian of ``scene``; rejected ones are left out."""
    splats = []
    rejected = 0
    for index, g in enumerate(scene):
        result = project(g, cam, projection_mode, depth_mode, index)
        if isinstance(result, Rejected):
            rejected += 1
            continue
        splats.append(result)
    if rejected:
        logger.debug("Rejected %d of %d Gaussians during projection", rejected, len(scene))
    return splats


def rays_to_optimal_plane(
    points_px, cam: CameraModel, splat: Splat2D
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized ray_to_optimal_plane.

    :return: (coords (P, 2), hit (P,)); coords of missed rays are zero.
    """
    points_px = np.asarray(points_px, dtype=np.float64).reshape(-1, 2)
    xy = (points_px - cam.principal_point) / cam.focal
    directions = np.concatenate([xy, np.ones((xy.shape[0], 1))], axis=1) @ cam.orientation
    projected = directions @ splat.basis.T
    denom = projected[:, 2]
    hit = denom > PARALLEL_EPSILON
    coords = np.zeros((points_px.shape[0], 2))
    coords[hit] = projected[hit, :2] / denom[hit, None]
    return coords, hit


def ray_to_optimal_plane(pixel, cam: CameraModel, splat: Splat2D) -> Optional[np.ndarray]:
    """
    Intersect the camera ray through ``pixel`` with the splat's optimal plane.

    :param pixel: Continuous pixel coordinates.
    :param cam: Camera.
    :param splat: OptimalPlane splat.
    :return: Plane coordinates in the splat's tangent basis, or None (no hit).
    """
    coords, hit = rays_to_optimal_plane(pixel, cam, splat)
    if not hit[0]:
        return None
    return coords[0]


def optimal_plane_to_screen(point, splat: Splat2D, cam: CameraModel) -> np.ndarray:
    """
    Lift a plane point to 3D and project it through the camera.

    :raises BehindCameraError: If the lifted point lies behind the camera.
    """
    a, b = np.asarray(point, dtype=np.float64)
    lifted = splat.basis[2] + a * splat.basis[0] + b * splat.basis[1]
    view = cam.orientation @ lifted
    if view[2] <= PARALLEL_EPSILON:
        raise BehindCameraError(f"plane point ({a:.4g}, {b:.4g}) projects behind the camera")
    return cam.view_to_pixel(view)


def plane_to_screen_jacobian(splat: Splat2D, cam: CameraModel, point=(0.0, 0.0)) -> np.ndarray:
    """Jacobian of optimal_plane_to_screen at ``point`` (2×2, columns d/da, d/db)."""
    a, b = point
    view_basis = splat.basis @ cam.orientation.T
    view = view_basis[2] + a * view_basis[0] + b * view_basis[1]
    z = view[2]
    jacobian = np.empty((2, 2))
    for column in range(2):
        dv = view_basis[column]
        jacobian[:, column] = cam.focal * (dv[:2] / z - view[:2] * dv[2] / (z * z))
    return jacobian


def ray_depths(mean3d, cov3d_inv, origin, directions, near_plane: float) -> np.ndarray:
    """
    Parameter of maximum 3D density along each ray o + t·d (d unit length):
    t* = dᵀΣ⁻¹(μ-o) / dᵀΣ⁻¹d, clamped below at ``near_plane``.
    """
    directions = np.asarray(directions, dtype=np.float64)
    offset = np.asarray(mean3d, dtype=np.float64) - np.asarray(origin, dtype=np.float64)
    weighted = directions @ np.asarray(cov3d_inv)
    t = (weighted @ offset) / np.einsum("...i,...i->...", weighted, directions)
    return np.maximum(t, near_plane)


def splat_densities(splat: Splat2D, points_px, cam: CameraModel) -> np.ndarray:
    """Density G of the splat at each pixel position; missed rays give 0."""
    points_px = np.asarray(points_px, dtype=np.float64).reshape(-1, 2)
    if splat.frame == Frame.SCREEN_AFFINE:
        return eval_density(points_px, splat.mean2d, splat.cov2d_inv)
    coords, hit = rays_to_optimal_plane(points_px, cam, splat)
    return np.where(hit, eval_density(coords, splat.mean2d, splat.cov2d_inv), 0.0)


def splat_alphas(splat: Splat2D, points_px, cam: CameraModel) -> np.ndarray:
    """α = min(0.99, opacity · G) at each pixel position."""
    return np.minimum(ALPHA_CLAMP, splat.opacity * splat_densities(splat, points_px, cam))
