"""Adapter error types."""


class AdapterError(Exception):
    """Base class for adapter failures."""


class ManifestError(AdapterError, ValueError):
    """The media manifest is malformed or references missing files."""


class MediaDecodeError(AdapterError, ValueError):
    """A media file could not be decoded. Export skips the clip."""


class EncoderDimensionError(AdapterError, ValueError):
    """An encoder produced a vector of the wrong width. Export aborts."""
