# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest
from src.core.application.metrics import (
    dequantize,
    format_db,
    max_channel_diff,
    psnr,
    quantize,
    ssim,
)
from src.core.domain.errors import DimensionMismatchError


def test_quantize_rounds_half_up_and_clamps():
    values = np.array([-0.2, 0.0, 0.6 / 255.0, 0.4 / 255.0, 1.0, 3.0])

    np.testing.assert_array_equal(quantize(values), [0, 0, 1, 0, 255, 255])
    assert quantize(values).dtype == np.uint8
    np.testing.assert_allclose(dequantize(quantize([1.0])), [1.0])


def test_psnr_known_values():
    """
    Test PSNR on linear [0, 1] images.

    This test checks:
    - If identical images give infinity.
    - If a uniform error of 0.1 gives 20 dB.
    - If a mask restricts the compared pixels, and an empty mask gives infinity.
    """
    a = np.zeros((4, 4, 3))
    b = np.full((4, 4, 3), 0.1)
    mask = np.zeros((4, 4), dtype=bool)

    assert psnr(a, a) == math.inf
    assert psnr(a, b) == pytest.approx(20.0)
    assert psnr(a, b, mask) == math.inf
    mask[0, 0] = True
    b[1:, :] = 0.0
    assert psnr(a, b, ~mask) == pytest.approx(10.0 * math.log10(1.0 / (0.01 * 3 / 15)))


def test_metrics_reject_mismatched_shapes():
    with pytest.raises(DimensionMismatchError):
        psnr(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))
    with pytest.raises(DimensionMismatchError):
        max_channel_diff(np.zeros((4, 4, 3)), np.zeros((3, 4, 3)))


def test_ssim_of_identical_and_different_images():
    image = np.random.default_rng(1).random((32, 32, 3))

    assert ssim(image, image) == pytest.approx(1.0)
    assert ssim(image, 1.0 - image) < 0.5


def test_max_channel_diff_with_region():
    a = np.zeros((2, 2, 3))
    b = np.zeros((2, 2, 3))
    b[0, 0, 1] = 0.75
    b[1, 1, 2] = 0.25
    region = np.array([[False, False], [False, True]])

    assert max_channel_diff(a, b) == 0.75
    assert max_channel_diff(a, b, region) == 0.25


def test_format_db():
    assert format_db(math.inf) == "inf"
    assert format_db(31.23456) == "31.235"
