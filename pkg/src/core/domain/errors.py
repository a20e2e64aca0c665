# -*- coding: utf-8 -*-
"""
Error hierarchy shared by the domain, the services and the adapters.

Every error that can end a command carries the exit code the CLI reports
for it, so the mapping lives next to the error instead of in the caller.
"""

EXIT_OK = 0
EXIT_INGEST = 2
EXIT_CONFIG = 3
EXIT_INVARIANT = 4


class RasterError(Exception):
    exit_code = EXIT_INVARIANT


class IngestError(RasterError):
    """Raised when an input file (scene, cameras, mask) cannot be used."""

    exit_code = EXIT_INGEST


class MalformedHeaderError(IngestError):
    pass


class UnsupportedFieldLayoutError(IngestError):
    pass


class TruncatedFileError(IngestError):
    pass


class MissingFieldError(IngestError):
    pass


class NonOrthonormalRotationError(IngestError):
    pass


class UnsupportedFormatError(IngestError):
    pass


class ResolutionMismatchError(IngestError):
    pass


class ConfigError(RasterError, ValueError):
    """Raised when flags or configuration values are invalid or conflict."""

    exit_code = EXIT_CONFIG


class InvariantViolation(RasterError):
    """Raised when an internal consistency check fails during a frame."""

    exit_code = EXIT_INVARIANT


class BehindCameraError(RasterError):
    pass


class DimensionMismatchError(RasterError, ValueError):
    pass


class OutputError(RasterError):
    """Raised when a result file (image, stats, scene, cameras, mask) cannot be written."""

    exit_code = EXIT_CONFIG
