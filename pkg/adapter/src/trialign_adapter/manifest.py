"""Input media manifest: one entry per clip with media paths and captions.

JSON layout:

    [
      {"clip_id": "clip_0001",
       "video": "media/clip_0001.mp4",
       "audio": "media/clip_0001.wav",
       "captions": {"audio": ["..."], "visual": ["..."],
                    "audio_visual": ["..."]}},
      ...
    ]

Relative media paths resolve against the manifest's directory. The video
path may also be a directory of image frames. Every referenced media file
must exist before export begins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError

CAPTION_TYPES = ("audio", "visual", "audio_visual")


@dataclass(frozen=True)
class ClipMedia:
    clip_id: str
    video: Path
    audio: Path
    captions: dict[str, list[str]] = field(default_factory=dict)


def load_media_manifest(path) -> list[ClipMedia]:
    """Parse and validate a media manifest file."""
    manifest_path = Path(path)
    try:
        entries = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{manifest_path}: cannot read manifest: {exc}")
    if not isinstance(entries, list) or not entries:
        raise ManifestError(f"{manifest_path}: expected a non-empty list")

    base = manifest_path.parent
    clips: list[ClipMedia] = []
    seen: set[str] = set()
    missing: list[str] = []
    for index, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ManifestError(f"{manifest_path}: entry {index} is not an object")
        try:
            clip_id = entry["clip_id"]
            video = base / entry["video"]
            audio = base / entry["audio"]
        except KeyError as exc:
            raise ManifestError(
                f"{manifest_path}: entry {index} lacks required key {exc}")
        if clip_id in seen:
            raise ManifestError(f"{manifest_path}: duplicate clip_id {clip_id!r}")
        seen.add(clip_id)
        captions = entry.get("captions", {})
        for caption_type in captions:
            if caption_type not in CAPTION_TYPES:
                raise ManifestError(
                    f"{manifest_path}: clip {clip_id!r} has unknown caption "
                    f"type {caption_type!r}")
        for label, media in (("video", video), ("audio", audio)):
            if not media.exists():
                missing.append(f"{clip_id}: {label} {media}")
        clips.append(ClipMedia(
            clip_id=clip_id, video=video, audio=audio,
            captions={ct: list(captions.get(ct, [])) for ct in CAPTION_TYPES}))
    if missing:
        raise ManifestError(
            "media missing before export: " + "; ".join(missing))
    return clips
