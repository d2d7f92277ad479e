"""Trainable state: three projection heads, a temperature, and the
project -> pool -> normalize embedding pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .data import RawBatch, TriBatch
from .errors import ParameterError, ShapeError

OUTPUT_DIM = 512


@dataclass
class ProjectionHead:
    """Linear map from an encoder's output space to the shared space.

    The bias vector is always allocated; use_bias controls whether it is
    applied and trained. A head with trainable=False is never touched by
    the optimizer.
    """
    weight: np.ndarray
    bias: np.ndarray
    use_bias: bool = False
    trainable: bool = True

    def __post_init__(self):
        if self.weight.ndim != 2:
            raise ShapeError(f"weight must be 2-D, got {self.weight.shape}")
        if self.bias.shape != (self.weight.shape[1],):
            raise ShapeError(
                f"bias shape {self.bias.shape} does not match weight "
                f"{self.weight.shape}")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]

    def copy(self) -> "ProjectionHead":
        return ProjectionHead(self.weight.copy(), self.bias.copy(),
                              self.use_bias, self.trainable)


@dataclass(frozen=True)
class AlignerConfig:
    """Head widths plus the bias flag. Defaults match the standard encoder
    dims (768-d visual/audio, 512-d text, 512-d shared space); smaller dims
    are useful for gradient checks."""
    visual_in: int = 768
    audio_in: int = 768
    text_in: int = OUTPUT_DIM
    out_dim: int = OUTPUT_DIM
    bias_enabled: bool = False

    def in_dim(self, head: str) -> int:
        return {"visual": self.visual_in, "audio": self.audio_in,
                "text": self.text_in}[head]


@dataclass
class TrimodalAligner:
    """The full trainable state: three heads and the similarity temperature."""
    visual_head: ProjectionHead
    audio_head: ProjectionHead
    text_head: ProjectionHead
    temperature: float = 0.07

    def __post_init__(self):
        if self.temperature <= 0:
            raise ParameterError(
                f"temperature must be positive, got {self.temperature}")

    def head(self, name: str) -> ProjectionHead:
        return {"visual": self.visual_head, "audio": self.audio_head,
                "text": self.text_head}[name]

    @property
    def out_dim(self) -> int:
        return self.visual_head.out_dim

    def copy(self) -> "TrimodalAligner":
        return TrimodalAligner(self.visual_head.copy(), self.audio_head.copy(),
                               self.text_head.copy(), self.temperature)


def init_aligner(seed: int, config: AlignerConfig = AlignerConfig(),
                 temperature: float = 0.07) -> TrimodalAligner:
    """Seeded aligner initialization.

    Weights are uniform in +-1/sqrt(in_dim), drawn in fixed head order
    (visual, audio, text) from one PCG64 stream, so a given seed always
    yields a bit-identical aligner. Biases start at zero.
    """
    rng = np.random.default_rng(seed)
    heads = {}
    for name in ("visual", "audio", "text"):
        in_dim = config.in_dim(name)
        bound = 1.0 / np.sqrt(in_dim)
        weight = rng.uniform(-bound, bound, size=(in_dim, config.out_dim))
        heads[name] = ProjectionHead(weight, np.zeros(config.out_dim),
                                     use_bias=config.bias_enabled)
    return TrimodalAligner(heads["visual"], heads["audio"], heads["text"],
                           temperature)


@dataclass(frozen=True)
class ForwardCache:
    """Per-batch intermediates needed to backpropagate through the pipeline.

    input_means are the row means of each clip's raw features (enough for
    the projection-weight gradient because pooling is linear), pooled_norms
    the pre-normalization norms, unit the final embeddings.
    """
    input_means: np.ndarray
    pooled_norms: np.ndarray
    unit: np.ndarray
    degenerate: np.ndarray


def embed_stack(head: ProjectionHead, xs: Sequence[np.ndarray]
                ) -> tuple[np.ndarray, ForwardCache]:
    """Project each clip's rows, mean-pool over rows, L2-normalize.

    xs is one raw feature matrix per clip (row counts may differ). Returns
    the B x out_dim unit-row matrix plus the backward cache. Degenerate
    (near-zero pooled norm) clips yield zero rows, flagged in the cache.
    """
    for i, x in enumerate(xs):
        if x.ndim != 2 or x.shape[1] != head.in_dim:
            raise ShapeError(
                f"input {i} has shape {x.shape}; head expects M x {head.in_dim}")
    counts = np.array([x.shape[0] for x in xs])
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    stacked = np.concatenate(xs, axis=0) if len(xs) > 1 else np.asarray(xs[0], dtype=np.float64)
    projected = linalg.matmul(stacked, head.weight)
    if head.use_bias:
        projected = projected + head.bias
    pooled = linalg.segment_mean(projected, offsets, counts)
    norms = np.sqrt(np.einsum("ij,ij->i", pooled, pooled))
    unit, degenerate = linalg.l2_normalize_rows(pooled)
    cache = ForwardCache(
        input_means=linalg.segment_mean(stacked, offsets, counts),
        pooled_norms=norms, unit=unit, degenerate=degenerate)
    return unit, cache


def embed_modality(head: ProjectionHead, x: np.ndarray
                   ) -> tuple[np.ndarray, bool]:
    """Embed one clip: unit-norm vector in the shared space plus a flag that
    is True when the pooled projection was degenerate (zero vector out)."""
    x = linalg.as_matrix(x, "x")
    if x.shape[0] < 1:
        raise ShapeError("embed_modality: input needs at least one row")
    unit, cache = embed_stack(head, [x])
    return unit[0], bool(cache.degenerate[0])


def embed_batch(aligner: TrimodalAligner, batch: RawBatch
                ) -> tuple[TriBatch, dict[str, ForwardCache]]:
    """Embed a raw batch through all three heads.

    Returns the TriBatch of unit-row matrices plus per-modality caches for
    the training backward pass.
    """
    audio, audio_cache = embed_stack(aligner.audio_head, batch.audio)
    visual, visual_cache = embed_stack(aligner.visual_head, batch.visual)
    text_rows = [batch.text[i:i + 1] for i in range(batch.text.shape[0])]
    text, text_cache = embed_stack(aligner.text_head, text_rows)
    tri = TriBatch(clip_ids=batch.clip_ids, audio=audio, visual=visual,
                   text=text, caption_type=batch.caption_type)
    return tri, {"audio": audio_cache, "visual": visual_cache,
                 "text": text_cache}
