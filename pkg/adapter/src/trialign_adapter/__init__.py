"""Offline export of real media and captions into the trialign dataset
directory format, via pluggable pretrained (or stub) encoders."""

from .encoders import (AUDIO_DIM, TEXT_DIM, VISUAL_DIM, EncoderSet,
                       load_pretrained_encoders, stub_encoders)
from .errors import (AdapterError, EncoderDimensionError, ManifestError,
                     MediaDecodeError)
from .export import ExportSummary, extract_and_export
from .manifest import ClipMedia, load_media_manifest
from .media import chunk_audio, load_audio, sample_frames

__version__ = "0.1.0"

__all__ = [
    "AUDIO_DIM", "AdapterError", "ClipMedia", "EncoderDimensionError",
    "EncoderSet", "ExportSummary", "ManifestError", "MediaDecodeError",
    "TEXT_DIM", "VISUAL_DIM", "chunk_audio", "extract_and_export",
    "load_audio", "load_media_manifest", "load_pretrained_encoders",
    "sample_frames", "stub_encoders",
]
