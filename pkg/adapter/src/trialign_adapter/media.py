"""Media decoding: WAV audio into fixed-length chunks, video (or an image
directory) into sampled frames."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import MediaDecodeError

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}


def load_audio(path) -> tuple[np.ndarray, int]:
    """Read a WAV file as mono float64 in [-1, 1]. Returns (samples, rate)."""
    from scipy.io import wavfile
    try:
        rate, samples = wavfile.read(Path(path))
    except Exception as exc:
        raise MediaDecodeError(f"{path}: cannot decode audio: {exc}")
    samples = np.asarray(samples)
    if samples.size == 0:
        raise MediaDecodeError(f"{path}: audio stream is empty")
    if np.issubdtype(samples.dtype, np.integer):
        samples = samples / float(np.iinfo(samples.dtype).max)
    samples = samples.astype(np.float64)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return samples, int(rate)


def chunk_audio(samples: np.ndarray, rate: int,
                chunk_seconds: float = 10.0) -> list[np.ndarray]:
    """Split into ceil(duration / chunk_seconds) chunks; the last chunk is
    zero-padded to the full chunk length."""
    if chunk_seconds <= 0:
        raise MediaDecodeError(f"chunk_seconds must be positive, got {chunk_seconds}")
    chunk_len = int(round(chunk_seconds * rate))
    n_chunks = max(1, math.ceil(samples.size / chunk_len))
    chunks = []
    for i in range(n_chunks):
        piece = samples[i * chunk_len:(i + 1) * chunk_len]
        if piece.size < chunk_len:
            piece = np.concatenate([piece, np.zeros(chunk_len - piece.size)])
        chunks.append(piece)
    return chunks


def _frames_from_directory(path: Path) -> list[np.ndarray]:
    from PIL import Image
    files = sorted(p for p in path.iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise MediaDecodeError(f"{path}: no image frames in directory")
    frames = []
    for file in files:
        try:
            with Image.open(file) as img:
                frames.append(np.asarray(img.convert("RGB")))
        except Exception as exc:
            raise MediaDecodeError(f"{file}: cannot decode frame: {exc}")
    return frames


def _frames_from_video(path: Path, frame_rate: float) -> list[np.ndarray]:
    try:
        import cv2
    except ImportError as exc:
        raise MediaDecodeError(
            f"{path}: video decoding needs opencv-python ({exc})")
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise MediaDecodeError(f"{path}: cannot open video")
    try:
        fps = capture.get(cv2.CAP_PROP_FPS) or 0.0
        frame_count = int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
        if fps <= 0 or frame_count <= 0:
            raise MediaDecodeError(
                f"{path}: video reports no frames (fps={fps}, "
                f"count={frame_count})")
        duration = frame_count / fps
        n_samples = max(1, math.ceil(duration * frame_rate))
        frames = []
        for k in range(n_samples):
            target = min(int(round(k / frame_rate * fps)), frame_count - 1)
            capture.set(cv2.CAP_PROP_POS_FRAMES, target)
            ok, frame = capture.read()
            if not ok:
                raise MediaDecodeError(f"{path}: failed to read frame {target}")
            frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
        return frames
    finally:
        capture.release()


def sample_frames(path, frame_rate: float = 1.0) -> list[np.ndarray]:
    """Sample video frames at frame_rate frames per second (at least one).
    A directory of images is treated as an already-sampled frame sequence."""
    if frame_rate <= 0:
        raise MediaDecodeError(f"frame_rate must be positive, got {frame_rate}")
    path = Path(path)
    if path.is_dir():
        return _frames_from_directory(path)
    return _frames_from_video(path, frame_rate)
