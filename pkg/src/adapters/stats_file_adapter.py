# -*- coding: utf-8 -*-
import json
from typing import Any, Dict

from src.core.domain.errors import OutputError
from src.core.domain.models import FrameStats
from src.core.ports.stats_port import StatsPort

FORMAT_VERSION = 1


class StatsFileAdapter(StatsPort):
    def __init__(self, format_version: int = FORMAT_VERSION):
        self.format_version = format_version

    def save_stats(self, path: str, stats: FrameStats, extra: Dict[str, Any] = None) -> None:
        """
        Write frame counters as JSON (sorted keys, stable across runs).

        :param path: Destination path.
        :param stats: Counters to write.
        :param extra: Additional top-level keys (configuration echo).
        """
        document = {"format_version": self.format_version, "stats": stats.as_dict()}
        document.update(extra or {})
        try:
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(document, handle, indent=2, sort_keys=True)
                handle.write("\n")
        except OSError as e:
            raise OutputError(f"Failed to save stats: {e}")

    def format_stats(self, stats: FrameStats) -> str:
        lines = []
        for key, value in stats.as_dict().items():
            if isinstance(value, dict):
                lines += [f"{key}.{name}: {count}" for name, count in value.items()]
            else:
                lines.append(f"{key}: {value}")
        return "\n".join(lines)

    def load_stats(self, path: str) -> Dict[str, Any]:
        """
        Read a stats document written by save_stats.

        :param path: Path of the JSON file.
        :return: Parsed document.
        :raises ValueError: If the format version is not supported.
        """
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
        if document.get("format_version") != self.format_version:
            raise ValueError(f"Unsupported stats format version: {document.get('format_version')}")
        return document
