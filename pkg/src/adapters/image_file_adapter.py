# -*- coding: utf-8 -*-
import os

import numpy as np
from PIL import Image

from src.core.application.metrics import quantize
from src.core.domain.errors import ConfigError, IngestError, OutputError
from src.core.ports.image_port import ImagePort

FORMATS = {".png": "PNG", ".ppm": "PPM"}


class ImageFileAdapter(ImagePort):
    def save_image(self, path: str, image: np.ndarray) -> None:
        """
        Write a linear RGB image as 8 bits per channel (PNG or binary PPM).

        :param path: Destination path; the extension selects the format.
        :param image: Float image (H, W, 3).
        :raises ConfigError: If the extension is neither .png nor .ppm.
        """
        extension = os.path.splitext(path)[1].lower()
        if extension not in FORMATS:
            raise ConfigError(f"Unsupported image extension '{extension}', use .png or .ppm")
        try:
            Image.fromarray(quantize(image)).save(path, format=FORMATS[extension])
        except Exception as e:
            raise OutputError(f"Failed to save image: {e}")

    def load_image(self, path: str) -> np.ndarray:
        try:
            with Image.open(path) as image:
                pixels = np.asarray(image.convert("RGB"), dtype=np.float64)
        except OSError as e:
            raise IngestError(f"Failed to read image {path}: {e}")
        return pixels / 255.0
