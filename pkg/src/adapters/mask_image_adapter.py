# -*- coding: utf-8 -*-
from typing import Optional, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.core.domain.errors import (
    IngestError,
    OutputError,
    ResolutionMismatchError,
    UnsupportedFormatError,
)
from src.core.ports.mask_port import MaskPort


class MaskImageAdapter(MaskPort):
    def load_mask(self, path: str, resolution: Optional[Tuple[int, int]] = None) -> np.ndarray:
        """
        Load an 8-bit grayscale visibility mask (PNG or PGM).

        :param path: Path of the mask image.
        :param resolution: Expected (width, height); not checked when None.
        :return: Boolean raster (H, W), True where the value is > 0.
        :raises UnsupportedFormatError: If the image is not 8-bit grayscale.
        :raises ResolutionMismatchError: If the size differs from ``resolution``.
        """
        try:
            with Image.open(path) as image:
                image.load()
                mode, size = image.mode, image.size
                pixels = np.asarray(image)
        except UnidentifiedImageError as e:
            raise UnsupportedFormatError(f"Failed to identify mask {path}: {e}")
        except OSError as e:
            raise IngestError(f"Failed to read mask {path}: {e}")

        if mode != "L":
            raise UnsupportedFormatError(f"mask {path} has mode {mode}, expected 8-bit grayscale")
        if resolution is not None and tuple(size) != tuple(resolution):
            raise ResolutionMismatchError(
                f"mask {path} is {size[0]}x{size[1]}, render is {resolution[0]}x{resolution[1]}"
            )
        return pixels > 0

    def save_mask(self, path: str, mask: np.ndarray) -> None:
        """
        Write a boolean raster as an 8-bit grayscale image (0 / 255).

        :param path: Destination path (.png or .pgm).
        :param mask: Boolean raster (H, W).
        """
        pixels = np.where(np.asarray(mask) > 0, 255, 0).astype(np.uint8)
        try:
            Image.fromarray(pixels).save(path)
        except Exception as e:
            raise OutputError(f"Failed to save mask: {e}")
