"""Training orchestration: gradient chaining, epoch loops for the single-
and two-stage regimes, and checkpoint I/O.

The backward pass chains the embedding-level loss gradients through

    normalization   dL/dp = (dL/du - u (u . dL/du)) / ||p||
    mean pooling    spreads dL/dp uniformly over a clip's rows, so the
                    weight gradient only needs each clip's row mean
    projection      dL/dW = xbar^T dL/dp summed over the batch,
                    dL/db = sum over the batch of dL/dp

with u the unit embedding and p the pooled pre-normalization vector.

Checkpoint layout (little-endian): magic "TMAL", u32 format version,
u32 meta length, meta JSON (dims, tau, bias flag, regime tag, config hash),
then per head in the fixed order visual, audio, text a u32 rows, u32 cols
header and the float32 weight blob; when biases are enabled each weight
blob is followed by the head's bias as a 1-row blob.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, RawBatch, make_batches
from .errors import CheckpointFormatError, DivergenceError, ParameterError
from .loss import PAIR_MODALITIES, RegimeLoss, regime_loss
from .model import (AlignerConfig, ForwardCache, ProjectionHead,
                    TrimodalAligner, embed_batch, init_aligner)
from .optim import AdamWState, adamw_step, init_adamw
from .regimes import (HEAD_NAMES, Regime, TwoStage, is_two_stage,
                      trainable_heads)

CHECKPOINT_MAGIC = b"TMAL"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; the defaults are the reference settings."""
    epochs: int = 20
    lr: float = 1e-5
    weight_decay: float = 0.1
    batch_size: int = 32
    tau: float = 0.07
    seed: int = 0
    bias_enabled: bool = False


def config_fingerprint(config: TrainConfig) -> str:
    payload = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class TraceRow:
    """One training step's losses. stage is 0 for single-stage regimes."""
    stage: int
    epoch: int
    batch: int
    caption_type: str
    components: dict[str, float]
    total: float


@dataclass
class TrainResult:
    aligner: TrimodalAligner
    trace: list[TraceRow]
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int | None = None


def epoch_mean(trace: list[TraceRow], stage: int, epoch: int,
               component: str | None = None) -> float:
    """Mean loss over one epoch's rows; component None means the total."""
    values = [row.total if component is None else row.components[component]
              for row in trace
              if row.stage == stage and row.epoch == epoch
              and (component is None or component in row.components)]
    return float(np.mean(values))


def loss_gradients(aligner: TrimodalAligner, batch: RawBatch, regime: Regime,
                   stage: int | None = None
                   ) -> tuple[RegimeLoss, dict[str, tuple[np.ndarray, np.ndarray]]]:
    """Forward plus full analytic backward for one batch.

    Returns the regime loss and, per head name, (dL/dW, dL/db). Gradients
    are computed for every head; the caller decides which to apply.
    """
    tri, caches = embed_batch(aligner, batch)
    result = regime_loss(tri, aligner, regime, stage)
    if not np.isfinite(result.total):
        raise DivergenceError(
            f"non-finite loss on batch of clips {', '.join(batch.clip_ids)}")

    unit_grads = {name: np.zeros_like(tri.audio) for name in HEAD_NAMES}
    for name, pair in result.components.items():
        first, second = PAIR_MODALITIES[name]
        unit_grads[first] = unit_grads[first] + pair.grad_a
        unit_grads[second] = unit_grads[second] + pair.grad_b

    grads: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name in HEAD_NAMES:
        cache: ForwardCache = caches[name]
        du = unit_grads[name]
        inner = np.sum(cache.unit * du, axis=1, keepdims=True)
        norms = np.where(cache.degenerate, 1.0, cache.pooled_norms)
        dp = (du - cache.unit * inner) / norms[:, None]
        dp[cache.degenerate] = 0.0
        dw = cache.input_means.T @ dp
        db = dp.sum(axis=0)
        grads[name] = (dw, db)
    return result, grads


OptStates = dict[str, dict[str, AdamWState]]


def init_opt_states(aligner: TrimodalAligner, config: TrainConfig,
                    head_names) -> OptStates:
    states: OptStates = {}
    for name in head_names:
        head = aligner.head(name)
        states[name] = {"weight": init_adamw(
            head.weight.shape, lr=config.lr,
            weight_decay=config.weight_decay, name=f"{name}.weight")}
        if head.use_bias:
            states[name]["bias"] = init_adamw(
                head.bias.shape, lr=config.lr,
                weight_decay=config.weight_decay, name=f"{name}.bias")
    return states


def train_step(aligner: TrimodalAligner, batch: RawBatch, regime: Regime,
               opt_states: OptStates, stage: int | None = None) -> RegimeLoss:
    """One optimization step. Only heads that the regime marks trainable and
    whose trainable flag is set are updated; others are bit-untouched."""
    result, grads = loss_gradients(aligner, batch, regime, stage)
    active = trainable_heads(regime, stage)
    for name in HEAD_NAMES:
        head = aligner.head(name)
        if name not in active or not head.trainable or name not in opt_states:
            continue
        dw, db = grads[name]
        head.weight = adamw_step(opt_states[name]["weight"], head.weight, dw)
        if head.use_bias:
            head.bias = adamw_step(opt_states[name]["bias"], head.bias, db)
    return result


def validation_loss(aligner: TrimodalAligner, dataset: Dataset,
                    config: TrainConfig, regime: Regime,
                    stage: int | None = None) -> float:
    """Mean regime loss over a fixed batching of the validation split.

    Uses epoch 0 batching so successive epochs are scored on identical
    batches (and identical caption coin flips).
    """
    batches = make_batches(dataset, config.batch_size, regime, config.seed,
                           epoch=0, stage=stage)
    totals = []
    for batch in batches:
        tri, _ = embed_batch(aligner, batch)
        totals.append(regime_loss(tri, aligner, regime, stage).total)
    return float(np.mean(totals))


def _run_stage(aligner: TrimodalAligner, dataset: Dataset, config: TrainConfig,
               regime: Regime, stage: int | None, trace: list[TraceRow],
               val_dataset: Dataset | None
               ) -> tuple[TrimodalAligner, list[float], int | None]:
    active = trainable_heads(regime, stage)
    for name in HEAD_NAMES:
        aligner.head(name).trainable = name in active
    opt_states = init_opt_states(aligner, config, sorted(active))

    best_loss, best_epoch, best_snapshot = np.inf, None, None
    val_losses: list[float] = []
    for epoch in range(config.epochs):
        batches = make_batches(dataset, config.batch_size, regime,
                               config.seed, epoch=epoch, stage=stage)
        for batch_index, batch in enumerate(batches):
            result = train_step(aligner, batch, regime, opt_states, stage)
            trace.append(TraceRow(
                stage=stage or 0, epoch=epoch, batch=batch_index,
                caption_type=result.caption_type,
                components={k: v.value for k, v in result.components.items()},
                total=result.total))
        if val_dataset is not None:
            vl = validation_loss(aligner, val_dataset, config, regime, stage)
            val_losses.append(vl)
            if vl < best_loss:
                best_loss, best_epoch, best_snapshot = vl, epoch, aligner.copy()
    if best_snapshot is not None:
        return best_snapshot, val_losses, best_epoch
    return aligner, val_losses, None


def train_single_stage(dataset: Dataset, config: TrainConfig, regime: Regime,
                       val_dataset: Dataset | None = None) -> TrainResult:
    """Train all three heads jointly. With a validation split, the returned
    aligner is the best epoch's snapshot by validation total loss."""
    if is_two_stage(regime):
        raise ParameterError("use train_two_stage for two-stage regimes")
    aligner = init_aligner(
        config.seed, AlignerConfig(bias_enabled=config.bias_enabled),
        temperature=config.tau)
    trace: list[TraceRow] = []
    aligner, val_losses, best_epoch = _run_stage(
        aligner, dataset, config, regime, None, trace, val_dataset)
    return TrainResult(aligner, trace, val_losses, best_epoch)


def train_two_stage(dataset: Dataset, config: TrainConfig, frozen_text: bool,
                    val_dataset: Dataset | None = None) -> TrainResult:
    """Visual-text alignment first, then audio alignment.

    Stage 1 trains the visual and text heads on visual captions; stage 2
    trains the audio head (plus the text head unless frozen_text) on audio
    captions. Each stage runs the full epoch budget with fresh optimizer
    state. The audio head is untouched by stage 1.
    """
    regime = TwoStage(frozen_text=frozen_text)
    aligner = init_aligner(
        config.seed, AlignerConfig(bias_enabled=config.bias_enabled),
        temperature=config.tau)
    trace: list[TraceRow] = []
    aligner, _, _ = _run_stage(aligner, dataset, config, regime, 1, trace,
                               val_dataset)
    aligner, val_losses, best_epoch = _run_stage(
        aligner, dataset, config, regime, 2, trace, val_dataset)
    return TrainResult(aligner, trace, val_losses, best_epoch)


def train(dataset: Dataset, config: TrainConfig, regime: Regime,
          val_dataset: Dataset | None = None) -> TrainResult:
    """Dispatch to the two-stage or single-stage loop for the regime."""
    if is_two_stage(regime):
        return train_two_stage(dataset, config, regime.frozen_text,
                               val_dataset)
    return train_single_stage(dataset, config, regime, val_dataset)


def write_loss_trace(trace: list[TraceRow], path) -> None:
    """CSV loss trace: stage, epoch, batch, caption type, components, total."""
    lines = ["stage,epoch,batch,caption_type,loss_av,loss_at,loss_vt,total"]
    for row in trace:
        parts = [str(row.stage), str(row.epoch), str(row.batch),
                 row.caption_type]
        for name in ("av", "at", "vt"):
            value = row.components.get(name)
            parts.append("" if value is None else repr(value))
        parts.append(repr(row.total))
        lines.append(",".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# Checkpoints
# --------------------------------------------------------------------------

def save_checkpoint(aligner: TrimodalAligner, path, regime_tag: str = "",
                    config: TrainConfig | None = None) -> None:
    """Write the aligner to a checkpoint file (weights stored as float32)."""
    meta = {
        "visual_in": aligner.visual_head.in_dim,
        "audio_in": aligner.audio_head.in_dim,
        "text_in": aligner.text_head.in_dim,
        "out_dim": aligner.out_dim,
        "tau": aligner.temperature,
        "bias_enabled": bool(aligner.visual_head.use_bias),
        "regime": regime_tag,
        "config_hash": config_fingerprint(config) if config else "",
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode()
    chunks = [CHECKPOINT_MAGIC,
              struct.pack("<I", CHECKPOINT_VERSION),
              struct.pack("<I", len(meta_bytes)),
              meta_bytes]
    for name in HEAD_NAMES:
        head = aligner.head(name)
        blobs = [head.weight]
        if meta["bias_enabled"]:
            blobs.append(head.bias[None, :])
        for blob in blobs:
            chunks.append(struct.pack("<II", blob.shape[0], blob.shape[1]))
            chunks.append(np.ascontiguousarray(blob, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path) -> tuple[TrimodalAligner, dict]:
    """Read a checkpoint; returns the aligner (weights upcast to float64)
    and the meta dict (regime tag, config hash, dims)."""
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(
            f"{path}: bad magic {raw[:4]!r}, expected {CHECKPOINT_MAGIC!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(
            f"{path}: unsupported checkpoint version {version}, "
            f"expected {CHECKPOINT_VERSION}")
    (meta_len,) = struct.unpack_from("<I", raw, 8)
    try:
        meta = json.loads(raw[12:12 + meta_len])
    except json.JSONDecodeError as exc:
        raise CheckpointFormatError(f"{path}: invalid meta JSON: {exc}")
    cursor = 12 + meta_len

    def read_blob() -> np.ndarray:
        nonlocal cursor
        if cursor + 8 > len(raw):
            raise CheckpointFormatError(f"{path}: truncated blob header")
        rows, cols = struct.unpack_from("<II", raw, cursor)
        cursor += 8
        nbytes = rows * cols * 4
        if cursor + nbytes > len(raw):
            raise CheckpointFormatError(
                f"{path}: truncated blob, need {nbytes} bytes at {cursor}")
        arr = np.frombuffer(raw, dtype="<f4", count=rows * cols,
                            offset=cursor).astype(np.float64)
        cursor += nbytes
        return arr.reshape(rows, cols)

    expected_in = {"visual": meta.get("visual_in"),
                   "audio": meta.get("audio_in"),
                   "text": meta.get("text_in")}
    heads = {}
    for name in HEAD_NAMES:
        weight = read_blob()
        if weight.shape != (expected_in[name], meta.get("out_dim")):
            raise CheckpointFormatError(
                f"{path}: {name} weight shape {weight.shape} does not match "
                f"meta dims ({expected_in[name]}, {meta.get('out_dim')})")
        if meta.get("bias_enabled"):
            bias = read_blob()[0]
        else:
            bias = np.zeros(weight.shape[1])
        heads[name] = ProjectionHead(weight, bias,
                                     use_bias=bool(meta.get("bias_enabled")))
    if cursor != len(raw):
        raise CheckpointFormatError(
            f"{path}: {len(raw) - cursor} trailing bytes after blobs")
    aligner = TrimodalAligner(heads["visual"], heads["audio"], heads["text"],
                              temperature=float(meta["tau"]))
    return aligner, meta
