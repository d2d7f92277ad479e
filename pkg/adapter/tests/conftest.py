"""Shared fixtures: tiny real media files and manifest builders."""

import json

import numpy as np
import pytest
from scipy.io import wavfile


def make_wav(path, seconds, rate=8000, freq=220.0, stereo=False, seed=0):
    t = np.arange(int(seconds * rate)) / rate
    rng = np.random.default_rng(seed)
    wave = 0.4 * np.sin(2 * np.pi * freq * t) + 0.05 * rng.standard_normal(t.size)
    data = (wave * 32000).astype(np.int16)
    if stereo:
        data = np.stack([data, data // 2], axis=1)
    wavfile.write(path, rate, data)
    return path


def make_video(path, seconds, fps=5, size=(32, 24), seed=0):
    import cv2
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"),
                             fps, size)
    assert writer.isOpened()
    rng = np.random.default_rng(seed)
    for _ in range(int(seconds * fps)):
        frame = rng.integers(0, 255, size=(size[1], size[0], 3),
                             dtype=np.uint8)
        writer.write(frame)
    writer.release()
    return path


def make_frames_dir(path, n, seed=0):
    from PIL import Image
    path.mkdir()
    rng = np.random.default_rng(seed)
    for i in range(n):
        arr = rng.integers(0, 255, size=(24, 32, 3), dtype=np.uint8)
        Image.fromarray(arr).save(path / f"frame_{i:03d}.png")
    return path


def write_manifest(root, entries):
    path = root / "media_manifest.json"
    path.write_text(json.dumps(entries, indent=2))
    return path


@pytest.fixture
def media_root(tmp_path):
    """Two complete clips: one 25 s audio + video file, one 7 s audio +
    frame directory."""
    make_wav(tmp_path / "a.wav", seconds=25, seed=1)
    make_video(tmp_path / "a.avi", seconds=4, fps=5, seed=1)
    make_wav(tmp_path / "b.wav", seconds=7, stereo=True, seed=2)
    make_frames_dir(tmp_path / "b_frames", n=3, seed=2)
    manifest = write_manifest(tmp_path, [
        {"clip_id": "clip_a", "video": "a.avi", "audio": "a.wav",
         "captions": {"audio": ["a low hum and rattling"],
                      "visual": ["colorful static noise"],
                      "audio_visual": ["noisy static with a hum"]}},
        {"clip_id": "clip_b", "video": "b_frames", "audio": "b.wav",
         "captions": {"audio": ["a pure tone"],
                      "visual": ["three random frames"],
                      "audio_visual": ["tone over random frames"]}},
    ])
    return tmp_path, manifest
