# -*- coding: utf-8 -*-
from abc import ABC, abstractmethod
from typing import Optional, Tuple
import numpy as np


class MaskPort(ABC):
    @abstractmethod
    def load_mask(self, path: str, resolution: Optional[Tuple[int, int]] = None) -> np.ndarray:
        """
        Load a visibility mask.

        :param path: Path of an 8-bit grayscale image.
        :param resolution: Expected (width, height); not checked when None.
        :return: Boolean raster (H, W), True where the value is > 0.
        :raises UnsupportedFormatError: If the image is not 8-bit grayscale.
        :raises ResolutionMismatchError: If the size differs from ``resolution``.
        """
        pass

    @abstractmethod
    def save_mask(self, path: str, mask: np.ndarray) -> None:
        """
        Write a boolean raster as an 8-bit grayscale image (0 / 255).

        :param path: Destination path.
        :param mask: Boolean raster (H, W).
        """
        pass
