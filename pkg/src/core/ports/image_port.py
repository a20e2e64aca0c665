# -*- coding: utf-8 -*-
from abc import ABC, abstractmethod
import numpy as np


class ImagePort(ABC):
    @abstractmethod
    def save_image(self, path: str, image: np.ndarray) -> None:
        """
        Write a linear RGB image as 8 bits per channel.

        The format follows the file extension (.png or .ppm).

        :param path: Destination path.
        :param image: Float image (H, W, 3).
        :raises ValueError: If the extension is not supported.
        """
        pass

    @abstractmethod
    def load_image(self, path: str) -> np.ndarray:
        """
        Read an 8-bit RGB image back into [0, 1] floats.

        :param path: Path of the image.
        :return: Float image (H, W, 3).
        """
        pass
