"""Run encoders over manifest media and write a dataset directory.

The output is the alignment engine's dataset format, produced here
directly so the adapter stays a pure producer of the interface:

    meta.json        format_version 1 plus the three embedding widths
    manifest.jsonl   one JSON object per record (audio, visual, caption)
    embeddings.f32   raw little-endian float32, row-major

Undecodable media skips the clip with a logged reason; an encoder
returning the wrong width aborts the export.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoders import AUDIO_DIM, TEXT_DIM, VISUAL_DIM, EncoderSet
from .errors import EncoderDimensionError, ManifestError, MediaDecodeError
from .manifest import CAPTION_TYPES, ClipMedia
from .media import chunk_audio, load_audio, sample_frames

logger = logging.getLogger("trialign_adapter")

FORMAT_VERSION = 1
BLOB_NAME = "embeddings.f32"


@dataclass
class ExportSummary:
    clips_exported: int = 0
    clips_skipped: list[tuple[str, str]] = field(default_factory=list)
    captions_skipped: int = 0

    def log(self) -> None:
        logger.info("exported %d clips (%d skipped, %d empty captions "
                    "dropped)", self.clips_exported, len(self.clips_skipped),
                    self.captions_skipped)


def _checked(vector: np.ndarray, dim: int, what: str) -> np.ndarray:
    vector = np.asarray(vector, dtype=np.float64).reshape(-1)
    if vector.shape != (dim,):
        raise EncoderDimensionError(
            f"{what}: encoder produced shape {vector.shape}, expected ({dim},)")
    return vector


def _embed_clip(clip: ClipMedia, encoders: EncoderSet, frame_rate: float,
                chunk_seconds: float, summary: ExportSummary):
    samples, rate = load_audio(clip.audio)
    audio_rows = np.stack([
        _checked(encoders.audio.embed_chunk(chunk, rate), AUDIO_DIM,
                 f"{clip.clip_id} audio chunk {i}")
        for i, chunk in enumerate(chunk_audio(samples, rate, chunk_seconds))])
    frames = sample_frames(clip.video, frame_rate)
    visual_rows = np.stack([
        _checked(encoders.visual.embed_image(frame), VISUAL_DIM,
                 f"{clip.clip_id} frame {i}")
        for i, frame in enumerate(frames)])
    captions = []
    for caption_type in CAPTION_TYPES:
        index = 0
        for text in clip.captions.get(caption_type, []):
            if not text.strip():
                logger.warning("clip %s: dropping empty %s caption",
                               clip.clip_id, caption_type)
                summary.captions_skipped += 1
                continue
            embedding = _checked(encoders.text.embed_text(text), TEXT_DIM,
                                 f"{clip.clip_id} {caption_type} caption")
            captions.append((caption_type, index, embedding))
            index += 1
    return audio_rows, visual_rows, captions


def extract_and_export(clips: list[ClipMedia], out_dir, encoders: EncoderSet,
                       frame_rate: float = 1.0,
                       chunk_seconds: float = 10.0) -> ExportSummary:
    """Embed every clip's media and captions and write the dataset
    directory. Returns the per-clip skip summary."""
    if not clips:
        raise ManifestError("no clips to export")
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    if (root / "manifest.jsonl").exists():
        raise ManifestError(f"{root}: refusing to overwrite existing dataset")

    summary = ExportSummary()
    lines: list[str] = []
    offset = 0
    with open(root / BLOB_NAME, "wb") as blob:
        def emit(clip_id: str, kind: str, rows: np.ndarray, extra: dict):
            nonlocal offset
            data = np.ascontiguousarray(rows, dtype="<f4").tobytes()
            entry = {"clip_id": clip_id, "kind": kind,
                     "rows": int(rows.shape[0]), "cols": int(rows.shape[1]),
                     "blob": BLOB_NAME, "offset": offset,
                     "byte_len": len(data)}
            entry.update(extra)
            blob.write(data)
            offset += len(data)
            lines.append(json.dumps(entry, sort_keys=True))

        for clip in clips:
            try:
                audio_rows, visual_rows, captions = _embed_clip(
                    clip, encoders, frame_rate, chunk_seconds, summary)
            except MediaDecodeError as exc:
                logger.warning("skipping clip %s: %s", clip.clip_id, exc)
                summary.clips_skipped.append((clip.clip_id, str(exc)))
                continue
            emit(clip.clip_id, "audio", audio_rows, {})
            emit(clip.clip_id, "visual", visual_rows, {})
            for caption_type, index, embedding in captions:
                emit(clip.clip_id, "caption", embedding[None, :],
                     {"caption_type": caption_type, "caption_index": index})
            summary.clips_exported += 1

    meta = {"format_version": FORMAT_VERSION, "audio_dim": AUDIO_DIM,
            "visual_dim": VISUAL_DIM, "text_dim": TEXT_DIM}
    (root / "meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n")
    (root / "manifest.jsonl").write_text(
        "".join(line + "\n" for line in lines))
    summary.log()
    return summary
