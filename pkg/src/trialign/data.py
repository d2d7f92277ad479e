"""Dataset model, on-disk format, deterministic batching, synthetic generator.

On-disk layout of a dataset directory:

    meta.json        {"format_version": 1, "audio_dim": 768,
                      "visual_dim": 768, "text_dim": 512}
    manifest.jsonl   one JSON object per record:
                     {"clip_id", "kind": "audio"|"visual"|"caption",
                      "caption_type", "caption_index"   (captions only),
                      "rows", "cols", "blob", "offset", "byte_len"}
    *.f32            raw little-endian IEEE-754 float32, row-major, no header

byte_len must equal rows * cols * 4 and the per-kind dims must match
meta.json; read_dataset rejects anything else with a located error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DatasetFormatError, EmptyInputError, ParameterError,
                     RegimeMismatchError, ShapeError)
from .regimes import (CAPTION_TYPES, Regime, SlavaMixed, batch_caption_type,
                      check_stage, required_caption_types)

FORMAT_VERSION = 1
AUDIO_DIM = 768
VISUAL_DIM = 768
TEXT_DIM = 512

MODALITIES = ("audio", "visual")

# Stream tags keep the shuffle and per-batch RNG streams disjoint.
_SHUFFLE_TAG = 0x5F
_BATCH_TAG = 0xB7


@dataclass(frozen=True)
class EmbeddingRecord:
    """Raw encoder output for one clip and modality: rows x encoder_dim."""
    clip_id: str
    modality: str
    features: np.ndarray

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ParameterError(f"unknown modality {self.modality!r}")
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ShapeError(
                f"features for {self.clip_id!r} must be M x D with M >= 1, "
                f"got {self.features.shape}")


@dataclass(frozen=True)
class CaptionRecord:
    """One caption's text-encoder embedding. A clip may carry several per type."""
    clip_id: str
    caption_type: str
    text_embedding: np.ndarray
    caption_index: int = 0

    def __post_init__(self):
        if self.caption_type not in CAPTION_TYPES:
            raise ParameterError(f"unknown caption type {self.caption_type!r}")
        if self.text_embedding.shape != (TEXT_DIM,):
            raise ShapeError(
                f"caption embedding for {self.clip_id!r} must have length "
                f"{TEXT_DIM}, got {self.text_embedding.shape}")


@dataclass
class Dataset:
    """Immutable-by-convention collection of records plus lookup indices."""
    records: list[EmbeddingRecord]
    captions: list[CaptionRecord]
    audio_dim: int = AUDIO_DIM
    visual_dim: int = VISUAL_DIM
    text_dim: int = TEXT_DIM
    clip_ids: tuple[str, ...] = field(init=False)
    _features: dict[tuple[str, str], np.ndarray] = field(init=False, repr=False)
    _captions: dict[tuple[str, str], list[CaptionRecord]] = field(init=False, repr=False)

    def __post_init__(self):
        order: list[str] = []
        feats: dict[tuple[str, str], np.ndarray] = {}
        for rec in self.records:
            dim = self.audio_dim if rec.modality == "audio" else self.visual_dim
            if rec.features.shape[1] != dim:
                raise ShapeError(
                    f"{rec.modality} features for {rec.clip_id!r} must have "
                    f"{dim} columns, got {rec.features.shape}")
            key = (rec.clip_id, rec.modality)
            if key in feats:
                raise DatasetFormatError(
                    f"duplicate {rec.modality} record for clip {rec.clip_id!r}")
            if rec.clip_id not in feats and all(
                    (rec.clip_id, m) not in feats for m in MODALITIES):
                order.append(rec.clip_id)
            feats[key] = rec.features
        caps: dict[tuple[str, str], list[CaptionRecord]] = {}
        known = {cid for cid, _ in feats}
        for cap in self.captions:
            if cap.clip_id not in known:
                raise DatasetFormatError(
                    f"caption references unknown clip {cap.clip_id!r}")
            caps.setdefault((cap.clip_id, cap.caption_type), []).append(cap)
        for group in caps.values():
            group.sort(key=lambda c: c.caption_index)
        object.__setattr__(self, "clip_ids", tuple(order))
        object.__setattr__(self, "_features", feats)
        object.__setattr__(self, "_captions", caps)

    def __len__(self) -> int:
        return len(self.clip_ids)

    def features(self, clip_id: str, modality: str) -> np.ndarray:
        return self._features[(clip_id, modality)]

    def has_features(self, clip_id: str, modality: str) -> bool:
        return (clip_id, modality) in self._features

    def captions_for(self, clip_id: str, caption_type: str) -> list[CaptionRecord]:
        return self._captions.get((clip_id, caption_type), [])

    def caption_type_present(self, caption_type: str) -> bool:
        return any(ct == caption_type for _, ct in self._captions)

    def clips_missing(self, caption_type: str) -> list[str]:
        return [cid for cid in self.clip_ids
                if not self.captions_for(cid, caption_type)]

    def subset(self, clip_ids) -> "Dataset":
        keep = set(clip_ids)
        return Dataset(
            records=[r for r in self.records if r.clip_id in keep],
            captions=[c for c in self.captions if c.clip_id in keep],
            audio_dim=self.audio_dim, visual_dim=self.visual_dim,
            text_dim=self.text_dim)

    def split(self, val_fraction: float, seed: int) -> tuple["Dataset", "Dataset"]:
        """Deterministic train/validation split by clip."""
        if not 0.0 < val_fraction < 1.0:
            raise ParameterError(f"val_fraction must be in (0, 1), got {val_fraction}")
        rng = np.random.default_rng([seed, 0xA5])
        order = rng.permutation(len(self.clip_ids))
        n_val = max(1, int(round(val_fraction * len(self.clip_ids))))
        val_ids = {self.clip_ids[i] for i in order[:n_val]}
        train_ids = [c for c in self.clip_ids if c not in val_ids]
        return self.subset(train_ids), self.subset(sorted(val_ids))


@dataclass(frozen=True)
class RawBatch:
    """One minibatch before projection: raw features plus chosen captions."""
    clip_ids: tuple[str, ...]
    audio: list[np.ndarray]
    visual: list[np.ndarray]
    text: np.ndarray
    caption_type: str

    def __len__(self) -> int:
        return len(self.clip_ids)


@dataclass(frozen=True)
class TriBatch:
    """One minibatch after projection: B x 512 unit rows per modality."""
    clip_ids: tuple[str, ...]
    audio: np.ndarray
    visual: np.ndarray
    text: np.ndarray
    caption_type: str

    def __post_init__(self):
        b = len(self.clip_ids)
        for name in ("audio", "visual", "text"):
            m = getattr(self, name)
            if m.shape[0] != b:
                raise ShapeError(
                    f"TriBatch {name} has {m.shape[0]} rows for {b} clips")
        if len(set(self.clip_ids)) != b:
            raise ParameterError("TriBatch clip_ids must be distinct")

    def __len__(self) -> int:
        return len(self.clip_ids)


# --------------------------------------------------------------------------
# On-disk format
# --------------------------------------------------------------------------

def write_dataset(dataset: Dataset, path) -> None:
    """Write a dataset directory (meta.json, manifest.jsonl, embeddings.f32).

    Storage is float32; reading back reproduces the dataset at 32-bit
    precision. Refuses to overwrite an existing manifest.
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest_path = root / "manifest.jsonl"
    if manifest_path.exists():
        raise DatasetFormatError(
            "refusing to overwrite existing dataset", path=str(manifest_path))
    meta = {
        "format_version": FORMAT_VERSION,
        "audio_dim": dataset.audio_dim,
        "visual_dim": dataset.visual_dim,
        "text_dim": dataset.text_dim,
    }
    (root / "meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n")

    blob_name = "embeddings.f32"
    lines: list[str] = []
    offset = 0
    with open(root / blob_name, "wb") as blob:
        def emit(clip_id: str, kind: str, arr: np.ndarray, extra: dict) -> None:
            nonlocal offset
            data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
            entry = {"clip_id": clip_id, "kind": kind,
                     "rows": int(arr.shape[0]), "cols": int(arr.shape[1]),
                     "blob": blob_name, "offset": offset,
                     "byte_len": len(data)}
            entry.update(extra)
            blob.write(data)
            offset += len(data)
            lines.append(json.dumps(entry, sort_keys=True))

        for clip_id in dataset.clip_ids:
            for modality in MODALITIES:
                if dataset.has_features(clip_id, modality):
                    emit(clip_id, modality,
                         dataset.features(clip_id, modality), {})
            for caption_type in CAPTION_TYPES:
                for cap in dataset.captions_for(clip_id, caption_type):
                    emit(clip_id, "caption", cap.text_embedding[None, :],
                         {"caption_type": caption_type,
                          "caption_index": cap.caption_index})
    manifest_path.write_text("".join(line + "\n" for line in lines))


def _load_meta(root: Path) -> dict:
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise DatasetFormatError("meta.json not found", path=str(meta_path))
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"invalid JSON: {exc}", path=str(meta_path))
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise DatasetFormatError(
            f"format_version mismatch: expected {FORMAT_VERSION}, got {version}",
            path=str(meta_path))
    for key in ("audio_dim", "visual_dim", "text_dim"):
        if not isinstance(meta.get(key), int):
            raise DatasetFormatError(f"missing or non-integer {key}",
                                     path=str(meta_path))
    return meta


def read_dataset(path) -> Dataset:
    """Load and validate a dataset directory written by write_dataset."""
    root = Path(path)
    meta = _load_meta(root)
    manifest_path = root / "manifest.jsonl"
    if not manifest_path.exists():
        raise DatasetFormatError("manifest.jsonl not found",
                                 path=str(manifest_path))
    blobs: dict[str, bytes] = {}
    records: list[EmbeddingRecord] = []
    captions: list[CaptionRecord] = []
    dims = {"audio": meta["audio_dim"], "visual": meta["visual_dim"],
            "caption": meta["text_dim"]}
    for lineno, line in enumerate(manifest_path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"invalid JSON: {exc}",
                                     path=str(manifest_path), line=lineno)

        def want(key, typ):
            value = entry.get(key)
            if not isinstance(value, typ):
                raise DatasetFormatError(
                    f"missing or invalid {key!r}",
                    path=str(manifest_path), line=lineno)
            return value

        clip_id = want("clip_id", str)
        kind = want("kind", str)
        rows, cols = want("rows", int), want("cols", int)
        blob_name = want("blob", str)
        offset, byte_len = want("offset", int), want("byte_len", int)
        if kind not in dims:
            raise DatasetFormatError(f"unknown kind {kind!r}",
                                     path=str(manifest_path), line=lineno)
        if cols != dims[kind]:
            raise DatasetFormatError(
                f"{kind} record declares {cols} columns but meta.json "
                f"requires {dims[kind]}",
                path=str(manifest_path), line=lineno)
        if byte_len != rows * cols * 4:
            raise DatasetFormatError(
                f"byte_len {byte_len} != rows*cols*4 = {rows * cols * 4}",
                path=str(manifest_path), line=lineno)
        if blob_name not in blobs:
            blob_path = root / blob_name
            if not blob_path.exists():
                raise DatasetFormatError(f"blob {blob_name!r} not found",
                                         path=str(manifest_path), line=lineno)
            blobs[blob_name] = blob_path.read_bytes()
        blob = blobs[blob_name]
        if offset + byte_len > len(blob):
            raise DatasetFormatError(
                f"blob {blob_name!r} too short: need bytes "
                f"[{offset}, {offset + byte_len}) but file has {len(blob)}",
                path=str(root / blob_name), offset=offset)
        arr = np.frombuffer(blob, dtype="<f4", count=rows * cols,
                            offset=offset).astype(np.float64)
        arr = arr.reshape(rows, cols)
        if kind == "caption":
            caption_type = want("caption_type", str)
            caption_index = want("caption_index", int)
            if rows != 1:
                raise DatasetFormatError(
                    f"caption record must have rows=1, got {rows}",
                    path=str(manifest_path), line=lineno)
            captions.append(CaptionRecord(clip_id, caption_type, arr[0],
                                          caption_index))
        else:
            records.append(EmbeddingRecord(clip_id, kind, arr))
    try:
        return Dataset(records=records, captions=captions,
                       audio_dim=meta["audio_dim"],
                       visual_dim=meta["visual_dim"],
                       text_dim=meta["text_dim"])
    except DatasetFormatError as exc:
        raise DatasetFormatError(str(exc), path=str(manifest_path))


# --------------------------------------------------------------------------
# Batching
# --------------------------------------------------------------------------

def make_batches(dataset: Dataset, batch_size: int, regime: Regime, seed: int,
                 epoch: int = 0, stage: int | None = None) -> list[RawBatch]:
    """Deterministic epoch batching.

    Clips are shuffled by a stream keyed on (seed, epoch). Each batch's
    caption choices come from a stream keyed on (seed, epoch, batch_index),
    so for slava-mixed the per-batch coin flip does not depend on
    batch_size. A short final batch is kept at >= 2 clips, dropped at 1.
    """
    check_stage(regime, stage)
    if len(dataset) == 0:
        raise EmptyInputError("make_batches: dataset has no clips")
    if batch_size < 1:
        raise ParameterError(f"batch_size must be >= 1, got {batch_size}")

    needed = required_caption_types(regime)
    missing = {ct: dataset.clips_missing(ct) for ct in sorted(needed)}
    missing = {ct: clips for ct, clips in missing.items() if clips}
    if missing:
        detail = "; ".join(f"{ct}: {', '.join(clips[:8])}"
                           + ("..." if len(clips) > 8 else "")
                           for ct, clips in missing.items())
        raise RegimeMismatchError(
            f"clips lack captions required by the regime ({detail})")
    for clip_id in dataset.clip_ids:
        for modality in MODALITIES:
            if not dataset.has_features(clip_id, modality):
                raise RegimeMismatchError(
                    f"clip {clip_id!r} has no {modality} features")

    fixed_type = batch_caption_type(regime, stage)
    shuffle_rng = np.random.default_rng([seed, epoch, _SHUFFLE_TAG])
    order = shuffle_rng.permutation(len(dataset))

    batches: list[RawBatch] = []
    for batch_index, start in enumerate(range(0, len(order), batch_size)):
        idx = order[start:start + batch_size]
        if len(idx) < 2:
            continue
        batch_rng = np.random.default_rng([seed, epoch, batch_index, _BATCH_TAG])
        if isinstance(regime, SlavaMixed):
            caption_type = "audio" if batch_rng.random() < 0.5 else "visual"
        else:
            caption_type = fixed_type
        clip_ids = tuple(dataset.clip_ids[i] for i in idx)
        text_rows = []
        for clip_id in clip_ids:
            group = dataset.captions_for(clip_id, caption_type)
            choice = 0 if len(group) == 1 else int(batch_rng.integers(len(group)))
            text_rows.append(group[choice].text_embedding)
        batches.append(RawBatch(
            clip_ids=clip_ids,
            audio=[dataset.features(c, "audio") for c in clip_ids],
            visual=[dataset.features(c, "visual") for c in clip_ids],
            text=np.array(text_rows),
            caption_type=caption_type))
    return batches


# --------------------------------------------------------------------------
# Synthetic generator
# --------------------------------------------------------------------------

# Caption structure: all caption types view the shared latent through one
# common map, so training on any type transfers to the others. Audio
# captions weight modality-private content more heavily and are much
# noisier views (sound descriptions pin down less of a scene than visual
# ones); audio-visual captions combine the two type maps.
_PRIVATE_WEIGHT = {"audio": 3.0, "visual": math.sqrt(3.0)}
_CAPTION_NOISE_SCALE = {"audio": 20.0, "visual": 2.0, "audio_visual": 11.0}


def gen_synthetic(n_clips: int, k_shared: int, k_audio: int, k_visual: int,
                  noise_sigma: float, rows_per_clip: int, seed: int,
                  captions_per_type: int = 1) -> Dataset:
    """Generate a synthetic dataset with controllable latent structure.

    Each clip draws a latent z = [z_s, z_a, z_v] with i.i.d. standard normal
    entries. Audio feature rows mix [z_s, z_a], visual rows [z_s, z_v], and
    the three caption types mix the corresponding latent slices, all through
    maps drawn once from the seed. Audio captions carry no visual-only
    information. noise_sigma scales every additive noise draw; at zero the
    dataset is an exact function of the latents.
    """
    for name, value in (("n_clips", n_clips), ("k_shared", k_shared),
                        ("k_audio", k_audio), ("k_visual", k_visual),
                        ("rows_per_clip", rows_per_clip),
                        ("captions_per_type", captions_per_type)):
        if value < 1:
            raise ParameterError(f"{name} must be >= 1, got {value}")
    if noise_sigma < 0:
        raise ParameterError(f"noise_sigma must be >= 0, got {noise_sigma}")

    rng = np.random.default_rng(seed)
    k_a_in, k_v_in = k_shared + k_audio, k_shared + k_visual

    w_audio = rng.standard_normal((k_a_in, AUDIO_DIM)) / np.sqrt(k_a_in)
    w_visual = rng.standard_normal((k_v_in, VISUAL_DIM)) / np.sqrt(k_v_in)

    u_shared = rng.standard_normal((k_shared, TEXT_DIM))
    u_audio_priv = rng.standard_normal((k_audio, TEXT_DIM))
    u_visual_priv = rng.standard_normal((k_visual, TEXT_DIM))
    wpa, wpv = _PRIVATE_WEIGHT["audio"], _PRIVATE_WEIGHT["visual"]
    u_a = np.vstack([u_shared, wpa * u_audio_priv]) \
        / np.sqrt(k_shared + wpa ** 2 * k_audio)
    u_v = np.vstack([u_shared, wpv * u_visual_priv]) \
        / np.sqrt(k_shared + wpv ** 2 * k_visual)
    u_av = np.vstack([(u_a[:k_shared] + u_v[:k_shared]) / np.sqrt(2.0),
                      u_a[k_shared:] / np.sqrt(2.0),
                      u_v[k_shared:] / np.sqrt(2.0)])

    width = len(str(max(n_clips - 1, 1)))
    records: list[EmbeddingRecord] = []
    captions: list[CaptionRecord] = []
    for i in range(n_clips):
        clip_id = f"clip_{i:0{width}d}"
        z_s = rng.standard_normal(k_shared)
        z_a = rng.standard_normal(k_audio)
        z_v = rng.standard_normal(k_visual)
        z_sa = np.concatenate([z_s, z_a])
        z_sv = np.concatenate([z_s, z_v])
        z = np.concatenate([z_s, z_a, z_v])

        audio_rows = np.tile(z_sa @ w_audio, (rows_per_clip, 1)) \
            + noise_sigma * rng.standard_normal((rows_per_clip, AUDIO_DIM))
        visual_rows = np.tile(z_sv @ w_visual, (rows_per_clip, 1)) \
            + noise_sigma * rng.standard_normal((rows_per_clip, VISUAL_DIM))
        records.append(EmbeddingRecord(clip_id, "audio", audio_rows))
        records.append(EmbeddingRecord(clip_id, "visual", visual_rows))

        means = {"audio": z_sa @ u_a, "visual": z_sv @ u_v,
                 "audio_visual": z @ u_av}
        for caption_type in CAPTION_TYPES:
            scale = noise_sigma * _CAPTION_NOISE_SCALE[caption_type]
            for index in range(captions_per_type):
                emb = means[caption_type] \
                    + scale * rng.standard_normal(TEXT_DIM)
                captions.append(CaptionRecord(clip_id, caption_type, emb, index))
    return Dataset(records=records, captions=captions)
