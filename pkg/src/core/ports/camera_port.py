# -*- coding: utf-8 -*-
from abc import ABC, abstractmethod
from typing import List, Sequence
from src.core.domain.models import CameraModel


class CameraPort(ABC):
    @abstractmethod
    def load_cameras(self, path: str) -> List[CameraModel]:
        """
        Load the cameras of a key-value camera file.

        :param path: Path of the camera file.
        :return: Cameras in file order.
        :raises MissingFieldError: If a camera block lacks a required key.
        :raises NonOrthonormalRotationError: If a rotation is not a proper
            rotation within 1e-4.
        """
        pass

    @abstractmethod
    def save_cameras(self, path: str, cameras: Sequence[CameraModel]) -> None:
        """
        Write cameras in the key-value camera format.

        :param path: Destination path.
        :param cameras: Cameras to write.
        """
        pass

    @abstractmethod
    def load_cameras_json(self, path: str) -> List[CameraModel]:
        """
        Convert a 3DGS ``cameras.json`` file.

        :param path: Path of the JSON file.
        :return: Cameras in file order.
        :raises MissingFieldError: If an entry lacks a required key.
        """
        pass
