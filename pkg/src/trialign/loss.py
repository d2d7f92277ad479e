"""Symmetric InfoNCE contrastive loss with analytic gradients, plus the
regime-specific loss compositions.

The loss on a batch of paired unit-row embeddings a, b (both B x d) is the
two-direction cross-entropy over scaled similarities S = a b^T / tau:

    L = 1/2 [ mean_i ( logsumexp_j S_ij - S_ii )      row direction
            + mean_j ( logsumexp_i S_ij - S_jj ) ]    column direction

Diagonal entries are the positives. With P the row softmax of S and Q the
column softmax, the gradient with respect to S is (P + Q - 2I) / (2B),
which chains to the embeddings as

    dL/da = G b / tau,    dL/db = G^T a / tau,    G = (P + Q - 2I) / (2B).

Gradients here are with respect to the post-normalization embeddings; the
train module chains them through normalization, pooling, and projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .data import TriBatch
from .errors import EmptyInputError, ParameterError, ShapeError
from .regimes import COMPONENT_ORDER, Regime, loss_components

# Component name -> the (first, second) embedding pair it contrasts.
PAIR_MODALITIES = {"av": ("audio", "visual"),
                   "at": ("audio", "text"),
                   "vt": ("visual", "text")}


@dataclass(frozen=True)
class PairLoss:
    """One contrastive term: its value and the embedding-level gradients."""
    value: float
    grad_a: np.ndarray
    grad_b: np.ndarray


@dataclass(frozen=True)
class RegimeLoss:
    """Total loss plus the per-component terms, keyed av / at / vt."""
    total: float
    components: dict[str, PairLoss]
    caption_type: str = ""


def similarity_logits(a, b, tau: float) -> np.ndarray:
    """Scaled similarity matrix: logits[i, j] = (a_i . b_j) / tau."""
    a = linalg.as_matrix(a, "a")
    b = linalg.as_matrix(b, "b")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptyInputError("similarity_logits: empty batch")
    if a.shape != b.shape:
        raise ShapeError(
            f"similarity_logits expects matching shapes, got {a.shape} "
            f"and {b.shape}")
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    with np.errstate(over="ignore"):
        return linalg.matmul(a, b.T) / tau


def _log_softmax(logits: np.ndarray, axis: int) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    lse = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    return shifted - lse


def info_nce(logits) -> float:
    """Symmetric InfoNCE over a square logit matrix with diagonal positives."""
    logits = linalg.as_matrix(logits, "logits")
    b = logits.shape[0]
    if b == 0:
        raise EmptyInputError("info_nce: empty batch")
    if logits.shape[0] != logits.shape[1]:
        raise ShapeError(f"info_nce expects a square matrix, got {logits.shape}")
    diag = np.arange(b)
    row = -_log_softmax(logits, axis=1)[diag, diag].mean()
    col = -_log_softmax(logits, axis=0)[diag, diag].mean()
    return float(0.5 * (row + col))


def info_nce_grad(a, b, tau: float) -> PairLoss:
    """InfoNCE value and exact gradients w.r.t. the unit-row embeddings."""
    a = linalg.as_matrix(a, "a")
    b = linalg.as_matrix(b, "b")
    logits = similarity_logits(a, b, tau)
    value = info_nce(logits)
    n = logits.shape[0]
    p = np.exp(_log_softmax(logits, axis=1))
    q = np.exp(_log_softmax(logits, axis=0))
    g = (p + q - 2.0 * np.eye(n)) / (2.0 * n)
    with np.errstate(over="ignore"):
        return PairLoss(value=value,
                        grad_a=linalg.matmul(g, b) / tau,
                        grad_b=linalg.matmul(g.T, a) / tau)


def regime_loss(batch: TriBatch, aligner, regime: Regime,
                stage: int | None = None) -> RegimeLoss:
    """Compose the regime's contrastive terms on an embedded batch.

    aligner supplies the temperature. Components appear in the fixed order
    av, at, vt (those that are active), and the total is their left-to-right
    sum. Raises RegimeMismatchError when the batch's caption type is
    incompatible with the regime.
    """
    tau = aligner.temperature
    active = loss_components(regime, batch.caption_type, stage)
    embeddings = {"audio": batch.audio, "visual": batch.visual,
                  "text": batch.text}
    components: dict[str, PairLoss] = {}
    total = 0.0
    for name in COMPONENT_ORDER:
        if name not in active:
            continue
        first, second = PAIR_MODALITIES[name]
        pair = info_nce_grad(embeddings[first], embeddings[second], tau)
        components[name] = pair
        total += pair.value
    return RegimeLoss(total=total, components=components,
                      caption_type=batch.caption_type)
