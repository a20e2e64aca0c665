# -*- coding: utf-8 -*-
from abc import ABC, abstractmethod
from typing import Tuple
from src.core.domain.models import Scene, SceneFileReport


class ScenePort(ABC):
    @abstractmethod
    def load_scene(self, path: str) -> Tuple[Scene, SceneFileReport]:
        """
        Load a Gaussian point-cloud file.

        :param path: Path of the scene file.
        :return: The scene (record order preserved) and its load report.
        :raises MalformedHeaderError: If the header cannot be parsed.
        :raises UnsupportedFieldLayoutError: If required fields are missing or
            the spherical-harmonics field count matches no supported degree.
        :raises TruncatedFileError: If the body is shorter than the header declares.
        """
        pass

    @abstractmethod
    def save_scene(self, path: str, scene: Scene) -> None:
        """
        Write a scene in the layout load_scene reads.

        :param path: Destination path.
        :param scene: Scene to write.
        """
        pass
