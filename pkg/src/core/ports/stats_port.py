# -*- coding: utf-8 -*-
from abc import ABC, abstractmethod
from typing import Any, Dict
from src.core.domain.models import FrameStats


class StatsPort(ABC):
    @abstractmethod
    def save_stats(self, path: str, stats: FrameStats, extra: Dict[str, Any] = None) -> None:
        """
        Write frame counters as a versioned JSON document.

        :param path: Destination path.
        :param stats: Counters to write.
        :param extra: Additional top-level keys (configuration echo).
        """
        pass

    @abstractmethod
    def format_stats(self, stats: FrameStats) -> str:
        """
        Render frame counters as ``key: value`` lines.

        :param stats: Counters to format.
        :return: Text with one key per line.
        """
        pass

    @abstractmethod
    def load_stats(self, path: str) -> Dict[str, Any]:
        """
        Read a stats document written by save_stats.

        :param path: Path of the JSON file.
        :return: Parsed document.
        :raises ValueError: If the format version is not supported.
        """
        pass
