"""Finite-difference verification of the analytic gradients.

Central differences with h=1e-5 in float64 against (1) the InfoNCE
embedding-level gradients, checked at every coordinate, and (2) the full
end-to-end chain from the regime loss to the projection weights and biases,
checked at a seeded random sample of coordinates per tensor (each sampled
derivative crosses the entire normalize/pool/project chain). The numeric
side evaluates a value-only forward that never touches the gradient code.
Errors are ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-12)
over the checked coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import RawBatch
from .loss import (PAIR_MODALITIES, info_nce, info_nce_grad,
                   similarity_logits)
from .model import AlignerConfig, TrimodalAligner, init_aligner
from .regimes import (AudioClipStyle, COMPONENT_ORDER, HEAD_NAMES, Regime,
                      SlavaAvCaptions, SlavaMixed, TwoStage, loss_components)
from .train import loss_gradients

FD_STEP = 1e-5

# Coordinates sampled per tensor in the end-to-end check; keeps the full
# 100-instance sweep under the 5 s budget.
SAMPLE_COORDS = 20


def central_difference(f, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Elementwise central difference of a scalar function of an array."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = f(x)
        flat[i] = keep - h
        down = f(x)
        flat[i] = keep
        out[i] = (up - down) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(analytic)),
                float(np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric)) / scale


def _unit_rows(rng: np.random.Generator, b: int, d: int) -> np.ndarray:
    m = rng.standard_normal((b, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def check_info_nce_gradients(trials: int, seed: int) -> float:
    """Max relative error of info_nce_grad vs central differences over
    random instances with B <= 8 and dim <= 16."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        b = int(rng.integers(1, 9))
        d = int(rng.integers(2, 17))
        tau = float(rng.uniform(0.05, 1.0))
        a = _unit_rows(rng, b, d)
        bb = _unit_rows(rng, b, d)
        pair = info_nce_grad(a, bb, tau)
        fd_a = central_difference(
            lambda m: info_nce(similarity_logits(m, bb, tau)), a.copy())
        fd_b = central_difference(
            lambda m: info_nce(similarity_logits(a, m, tau)), bb.copy())
        if b == 1:
            # Loss is identically zero; errors are absolute here.
            worst = max(worst, float(np.abs(pair.grad_a).max()),
                        float(np.abs(pair.grad_b).max()),
                        float(np.abs(fd_a).max()), float(np.abs(fd_b).max()))
            continue
        worst = max(worst, relative_error(pair.grad_a, fd_a),
                    relative_error(pair.grad_b, fd_b))
    return worst


def _toy_batch(rng: np.random.Generator, b: int, feat_dim: int, text_dim: int,
               caption_type: str) -> RawBatch:
    clip_ids = tuple(f"toy_{i}" for i in range(b))
    return RawBatch(
        clip_ids=clip_ids,
        audio=[rng.standard_normal((int(rng.integers(1, 4)), feat_dim))
               for _ in range(b)],
        visual=[rng.standard_normal((int(rng.integers(1, 4)), feat_dim))
                for _ in range(b)],
        text=rng.standard_normal((b, text_dim)),
        caption_type=caption_type)


_REGIME_CYCLE: tuple[tuple[Regime, int | None, str], ...] = (
    (SlavaAvCaptions(use_av_loss=True), None, "audio_visual"),
    (SlavaAvCaptions(use_av_loss=False), None, "audio_visual"),
    (AudioClipStyle(), None, "audio"),
    (SlavaMixed(), None, "visual"),
    (TwoStage(frozen_text=True), 1, "visual"),
    (TwoStage(frozen_text=True), 2, "audio"),
)


def forward_total(aligner: TrimodalAligner, batch: RawBatch, regime: Regime,
                  stage: int | None = None) -> float:
    """Value-only forward used as the numeric side of the end-to-end check.

    Recomposes project -> pool -> normalize and the active info_nce terms
    from the primitive kernels, independently of the gradient code.
    """
    stacks = _prestack(batch)
    return _stacked_total(aligner, stacks, batch.caption_type, regime, stage)


def _prestack(batch: RawBatch) -> dict:
    stacks = {}
    for modality in ("audio", "visual"):
        xs = getattr(batch, modality)
        counts = np.array([x.shape[0] for x in xs])
        offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
        stacks[modality] = (np.concatenate(xs, axis=0), offsets, counts)
    b = batch.text.shape[0]
    stacks["text"] = (batch.text, np.arange(b), np.ones(b, dtype=int))
    return stacks


def _stacked_total(aligner: TrimodalAligner, stacks: dict, caption_type: str,
                   regime: Regime, stage: int | None) -> float:
    embeddings = {}
    for modality, (stacked, offsets, counts) in stacks.items():
        head = aligner.head(modality)
        projected = stacked @ head.weight
        if head.use_bias:
            projected = projected + head.bias
        pooled = np.add.reduceat(projected, offsets, axis=0) / counts[:, None]
        norms = np.sqrt(np.einsum("ij,ij->i", pooled, pooled))
        embeddings[modality] = pooled / norms[:, None]
    active = loss_components(regime, caption_type, stage)
    total = 0.0
    for name in COMPONENT_ORDER:
        if name in active:
            first, second = PAIR_MODALITIES[name]
            total += info_nce(similarity_logits(
                embeddings[first], embeddings[second], aligner.temperature))
    return total


def _sampled_central_difference(f, x: np.ndarray, coords: np.ndarray,
                                h: float = FD_STEP) -> np.ndarray:
    flat = x.reshape(-1)
    out = np.zeros(len(coords))
    for slot, i in enumerate(coords):
        keep = flat[i]
        flat[i] = keep + h
        up = f()
        flat[i] = keep - h
        down = f()
        flat[i] = keep
        out[slot] = (up - down) / (2.0 * h)
    return out


def check_train_step_gradients(trials: int, seed: int,
                               coords_per_tensor: int = SAMPLE_COORDS
                               ) -> float:
    """Max relative error of the full loss-to-weights chain vs central
    differences, on toy aligners (dims <= 16, B <= 8), cycling regimes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(trials):
        b = int(rng.integers(2, 9))
        feat_dim = int(rng.integers(3, 17))
        text_dim = int(rng.integers(3, 17))
        out_dim = int(rng.integers(2, 17))
        config = AlignerConfig(visual_in=feat_dim, audio_in=feat_dim,
                               text_in=text_dim, out_dim=out_dim,
                               bias_enabled=bool(rng.integers(2)))
        aligner = init_aligner(int(rng.integers(1 << 31)), config,
                               temperature=float(rng.uniform(0.05, 1.0)))
        regime, stage, caption_type = _REGIME_CYCLE[trial % len(_REGIME_CYCLE)]
        batch = _toy_batch(rng, b, feat_dim, text_dim, caption_type)
        _, grads = loss_gradients(aligner, batch, regime, stage)
        stacks = _prestack(batch)

        def value():
            return _stacked_total(aligner, stacks, caption_type, regime,
                                  stage)

        for name in HEAD_NAMES:
            head = aligner.head(name)
            dw, db = grads[name]
            tensors = [(head.weight, dw)]
            if head.use_bias:
                tensors.append((head.bias, db))
            for tensor, analytic in tensors:
                size = tensor.size
                count = min(size, coords_per_tensor)
                coords = rng.choice(size, size=count, replace=False)
                numeric = _sampled_central_difference(value, tensor, coords)
                worst = max(worst, relative_error(
                    analytic.reshape(-1)[coords], numeric))
    return worst


@dataclass(frozen=True)
class GradCheckReport:
    trials: int
    seed: int
    info_nce_max_error: float
    train_step_max_error: float
    tolerance: float = 1e-4

    @property
    def passed(self) -> bool:
        return (self.info_nce_max_error < self.tolerance
                and self.train_step_max_error < self.tolerance)


def run_gradcheck(trials: int = 100, seed: int = 0,
                  tolerance: float = 1e-4) -> GradCheckReport:
    """Run both gradient checks with `trials` random instances each."""
    return GradCheckReport(
        trials=trials, seed=seed,
        info_nce_max_error=check_info_nce_gradients(trials, seed),
        train_step_max_error=check_train_step_gradients(trials, seed + 1),
        tolerance=tolerance)
