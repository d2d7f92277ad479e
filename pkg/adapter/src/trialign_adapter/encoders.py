"""Encoder interfaces, deterministic stubs, and optional pretrained wiring.

The exporter only needs three callables with declared output widths. The
stub encoders hash their input content into a seeded random vector, so
export runs are fully deterministic and test the pipeline without model
weights. The pretrained set wires CLIP image/text encoders and a CLAP
audio encoder through the transformers library; it requires torch and
locally available weights.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

AUDIO_DIM = 768
VISUAL_DIM = 768
TEXT_DIM = 512


class VisualEncoder(Protocol):
    output_dim: int

    def embed_image(self, image: np.ndarray) -> np.ndarray: ...


class AudioEncoder(Protocol):
    output_dim: int

    def embed_chunk(self, samples: np.ndarray, rate: int) -> np.ndarray: ...


class TextEncoder(Protocol):
    output_dim: int

    def embed_text(self, text: str) -> np.ndarray: ...


@dataclass(frozen=True)
class EncoderSet:
    visual: VisualEncoder
    audio: AudioEncoder
    text: TextEncoder


def _hash_vector(payload: bytes, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")
    return np.random.default_rng(seed).standard_normal(dim)


class StubVisualEncoder:
    output_dim = VISUAL_DIM

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        payload = image.tobytes() + repr(image.shape).encode()
        return _hash_vector(b"visual:" + payload, self.output_dim)


class StubAudioEncoder:
    output_dim = AUDIO_DIM

    def embed_chunk(self, samples: np.ndarray, rate: int) -> np.ndarray:
        payload = samples.astype("<f4").tobytes() + str(rate).encode()
        return _hash_vector(b"audio:" + payload, self.output_dim)


class StubTextEncoder:
    output_dim = TEXT_DIM

    def embed_text(self, text: str) -> np.ndarray:
        return _hash_vector(b"text:" + text.encode(), self.output_dim)


def stub_encoders() -> EncoderSet:
    """Content-deterministic encoders for tests and pipeline dry runs."""
    return EncoderSet(StubVisualEncoder(), StubAudioEncoder(),
                      StubTextEncoder())


class _FnVisualEncoder:
    def __init__(self, fn: Callable, output_dim: int):
        self._fn = fn
        self.output_dim = output_dim

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        return self._fn(image)


class _FnAudioEncoder:
    def __init__(self, fn: Callable, output_dim: int):
        self._fn = fn
        self.output_dim = output_dim

    def embed_chunk(self, samples: np.ndarray, rate: int) -> np.ndarray:
        return self._fn(samples, rate)


class _FnTextEncoder:
    def __init__(self, fn: Callable, output_dim: int):
        self._fn = fn
        self.output_dim = output_dim

    def embed_text(self, text: str) -> np.ndarray:
        return self._fn(text)


def load_pretrained_encoders(clip_model: str = "openai/clip-vit-base-patch32",
                             clap_model: str = "laion/clap-htsat-unfused",
                             device: str = "cpu") -> EncoderSet:
    """CLIP image/text plus CLAP audio encoders (pre-projection widths:
    768 / 512 / 768). Weights must be available locally; evaluation runs
    without gradients on the given device."""
    try:
        import torch
        from transformers import (AutoProcessor, ClapAudioModel, ClapProcessor,
                                  CLIPTextModel, CLIPVisionModel)
    except ImportError as exc:
        raise ImportError(
            "pretrained encoders need torch and transformers installed "
            f"(pip install 'trialign-adapter[pretrained]'): {exc}")

    vision = CLIPVisionModel.from_pretrained(clip_model).to(device).eval()
    text = CLIPTextModel.from_pretrained(clip_model).to(device).eval()
    clip_processor = AutoProcessor.from_pretrained(clip_model)
    clap = ClapAudioModel.from_pretrained(clap_model).to(device).eval()
    clap_processor = ClapProcessor.from_pretrained(clap_model)

    @torch.no_grad()
    def embed_image(image: np.ndarray) -> np.ndarray:
        inputs = clip_processor(images=image, return_tensors="pt").to(device)
        return vision(**inputs).pooler_output[0].cpu().numpy().astype(np.float64)

    @torch.no_grad()
    def embed_text(caption: str) -> np.ndarray:
        inputs = clip_processor(text=[caption], return_tensors="pt",
                                padding=True, truncation=True).to(device)
        return text(**inputs).pooler_output[0].cpu().numpy().astype(np.float64)

    @torch.no_grad()
    def embed_chunk(samples: np.ndarray, rate: int) -> np.ndarray:
        inputs = clap_processor(audios=samples, sampling_rate=rate,
                                return_tensors="pt").to(device)
        return clap(**inputs).pooler_output[0].cpu().numpy().astype(np.float64)

    return EncoderSet(
        visual=_FnVisualEncoder(embed_image, VISUAL_DIM),
        audio=_FnAudioEncoder(embed_chunk, AUDIO_DIM),
        text=_FnTextEncoder(embed_text, TEXT_DIM))
