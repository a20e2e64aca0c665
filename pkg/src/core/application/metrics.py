# -*- coding: utf-8 -*-
import math
from typing import Optional

import numpy as np
from skimage.metrics import structural_similarity

from src.core.domain.errors import DimensionMismatchError


def _check_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"image shapes differ: {a.shape} vs {b.shape}")


def quantize(image) -> np.ndarray:
    """8-bit values, rounding half away from zero after clamping to [0, 1]."""
    clamped = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return np.floor(255.0 * clamped + 0.5).astype(np.uint8)


def dequantize(image) -> np.ndarray:
    return np.asarray(image, dtype=np.float64) / 255.0


def psnr(a, b, mask: Optional[np.ndarray] = None) -> float:
    """
    Peak signal-to-noise ratio over linear [0, 1] channels.

    :param a: First image (H, W, C).
    :param b: Second image of the same shape.
    :param mask: Optional (H, W) boolean raster restricting the pixels compared.
    :return: PSNR in dB; math.inf for identical images (or an empty mask).
    :raises DimensionMismatchError: If the shapes differ.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_shapes(a, b)
    squared = (a - b) ** 2
    if mask is not None:
        squared = squared[np.asarray(mask, dtype=bool)]
    if squared.size == 0:
        return math.inf
    mse = float(np.mean(squared))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def ssim(a, b) -> float:
    """SSIM with an 11×11 Gaussian window (σ = 1.5), data range 1."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_shapes(a, b)
    return float(
        structural_similarity(
            a,
            b,
            data_range=1.0,
            channel_axis=-1,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
        )
    )


def max_channel_diff(a, b, region: Optional[np.ndarray] = None) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_shapes(a, b)
    diff = np.abs(a - b)
    if region is not None:
        diff = diff[np.asarray(region, dtype=bool)]
    return float(diff.max()) if diff.size else 0.0


def format_db(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.3f}"
