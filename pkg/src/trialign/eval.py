"""Crossmodal retrieval evaluation: similarity ranking, recall@k, and the
seven-task suite.

The seven tasks, in report order:

    retrieve visual  based on visual captions
    retrieve visual  based on audio captions
    retrieve visual  based on audio-visual captions
    retrieve audio   based on audio captions
    retrieve audio   based on visual captions
    retrieve audio   based on audio-visual captions
    retrieve visual  based on audio          (no text mediation)

recall@k is the fraction of queries whose ground-truth clip appears among
the k highest-similarity database items, with ties broken by ascending
database index.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .data import CAPTION_TYPES, Dataset
from .errors import EmptyInputError, MappingError, ParameterError, ShapeError
from .model import TrimodalAligner, embed_stack

TASKS = (
    ("visual", "visual_captions"),
    ("visual", "audio_captions"),
    ("visual", "audio_visual_captions"),
    ("audio", "audio_captions"),
    ("audio", "visual_captions"),
    ("audio", "audio_visual_captions"),
    ("visual", "audio"),
)

_BASED_ON_LABELS = {
    "visual_captions": "Visual Captions",
    "audio_captions": "Audio Captions",
    "audio_visual_captions": "Audio-Visual Captions",
    "audio": "Audio",
}


@dataclass(frozen=True)
class TaskResult:
    retrieve: str
    based_on: str
    recall: float | None
    n_queries: int
    n_database: int
    skipped: bool = False


@dataclass(frozen=True)
class RetrievalReport:
    k: int
    model_tag: str
    dataset_fingerprint: str
    n_clips: int
    query_mode: str
    tasks: tuple[TaskResult, ...]

    def task(self, retrieve: str, based_on: str) -> TaskResult:
        for t in self.tasks:
            if t.retrieve == retrieve and t.based_on == based_on:
                return t
        raise KeyError(f"no task ({retrieve}, {based_on})")

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "model_tag": self.model_tag,
            "dataset_fingerprint": self.dataset_fingerprint,
            "n_clips": self.n_clips,
            "query_mode": self.query_mode,
            "tasks": [{"retrieve": t.retrieve, "based_on": t.based_on,
                       "recall": t.recall, "n_queries": t.n_queries,
                       "n_database": t.n_database, "skipped": t.skipped}
                      for t in self.tasks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def rank_database(query: np.ndarray, database) -> np.ndarray:
    """Database indices sorted by descending cosine similarity to the query,
    ties broken by ascending index. Inputs are unit-normalized rows."""
    database = linalg.as_matrix(database, "database")
    if database.shape[0] == 0:
        raise EmptyInputError("rank_database: empty database")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (database.shape[1],):
        raise ShapeError(
            f"query shape {query.shape} does not match database "
            f"{database.shape}")
    sims = database @ query
    return np.argsort(-sims, kind="stable")


def recall_at_k(queries, database, ground_truth, k: int) -> float:
    """Fraction of queries whose ground-truth database row ranks in the
    top k. ground_truth holds one database index per query."""
    queries = linalg.as_matrix(queries, "queries")
    database = linalg.as_matrix(database, "database")
    if queries.shape[0] == 0:
        raise EmptyInputError("recall_at_k: no queries")
    if database.shape[0] == 0:
        raise EmptyInputError("recall_at_k: empty database")
    if queries.shape[1] != database.shape[1]:
        raise ShapeError(
            f"queries {queries.shape} and database {database.shape} "
            f"disagree on dimension")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    truth = np.asarray(ground_truth)
    if truth.shape != (queries.shape[0],):
        raise MappingError(
            f"ground_truth must map each of {queries.shape[0]} queries to "
            f"one database index, got shape {truth.shape}")
    if truth.min() < 0 or truth.max() >= database.shape[0]:
        raise MappingError(
            "ground_truth references indices outside the database "
            f"[0, {database.shape[0]})")
    sims = queries @ database.T
    order = np.argsort(-sims, axis=1, kind="stable")[:, :k]
    hits = (order == truth[:, None]).any(axis=1)
    return float(hits.mean())


def dataset_fingerprint(dataset: Dataset) -> str:
    """Content hash over the dataset at storage (float32) precision."""
    digest = hashlib.sha256()
    digest.update(json.dumps({
        "audio_dim": dataset.audio_dim, "visual_dim": dataset.visual_dim,
        "text_dim": dataset.text_dim, "clips": list(dataset.clip_ids),
    }, sort_keys=True).encode())
    for clip_id in dataset.clip_ids:
        for modality in ("audio", "visual"):
            if dataset.has_features(clip_id, modality):
                digest.update(np.ascontiguousarray(
                    dataset.features(clip_id, modality), dtype="<f4").tobytes())
        for caption_type in CAPTION_TYPES:
            for cap in dataset.captions_for(clip_id, caption_type):
                digest.update(np.ascontiguousarray(
                    cap.text_embedding, dtype="<f4").tobytes())
    return digest.hexdigest()[:16]


def _embed_clips(aligner: TrimodalAligner, dataset: Dataset,
                 modality: str) -> np.ndarray:
    head = aligner.head(modality)
    xs = [dataset.features(clip_id, modality) for clip_id in dataset.clip_ids]
    unit, _ = embed_stack(head, xs)
    return unit


def run_task_suite(aligner: TrimodalAligner, dataset: Dataset, k: int = 10,
                   model_tag: str = "", all_captions: bool = True
                   ) -> RetrievalReport:
    """Evaluate all seven retrieval tasks.

    Caption-based tasks embed captions through the text head as queries
    (every caption of the type when all_captions, else the first per clip);
    the audio-based task queries visual items with audio embeddings. A
    caption type absent from the whole dataset marks its tasks skipped
    rather than scoring zero.
    """
    if len(dataset) == 0:
        raise EmptyInputError("run_task_suite: dataset has no clips")
    databases = {m: _embed_clips(aligner, dataset, m)
                 for m in ("audio", "visual")}
    clip_index = {clip_id: i for i, clip_id in enumerate(dataset.clip_ids)}
    n = len(dataset.clip_ids)

    results: list[TaskResult] = []
    for retrieve, based_on in TASKS:
        database = databases[retrieve]
        if based_on == "audio":
            queries = databases["audio"]
            truth = np.arange(n)
        else:
            caption_type = based_on.removesuffix("_captions")
            rows, truth_list = [], []
            for clip_id in dataset.clip_ids:
                group = dataset.captions_for(clip_id, caption_type)
                if not all_captions:
                    group = group[:1]
                for cap in group:
                    rows.append(cap.text_embedding[None, :])
                    truth_list.append(clip_index[clip_id])
            if not rows:
                results.append(TaskResult(retrieve, based_on, None, 0, n,
                                          skipped=True))
                continue
            queries, _ = embed_stack(aligner.text_head, rows)
            truth = np.array(truth_list)
        recall = recall_at_k(queries, database, truth, k)
        results.append(TaskResult(retrieve, based_on, recall,
                                  queries.shape[0], n))
    return RetrievalReport(
        k=k, model_tag=model_tag,
        dataset_fingerprint=dataset_fingerprint(dataset), n_clips=n,
        query_mode="all_captions" if all_captions else "first_caption",
        tasks=tuple(results))


def format_report_table(reports: list[RetrievalReport]) -> str:
    """Aligned text table; one recall column per report, rows per task."""
    if not reports:
        raise EmptyInputError("format_report_table: no reports")
    tags = [r.model_tag or f"model_{i}" for i, r in enumerate(reports)]
    header = ["Retrieve", "Based On"] + tags
    rows = [header]
    for retrieve, based_on in TASKS:
        row = [retrieve.capitalize(), _BASED_ON_LABELS[based_on]]
        for report in reports:
            t = report.task(retrieve, based_on)
            row.append("skipped" if t.skipped else f"{t.recall:.3f}")
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def merged_report_dict(reports: list[RetrievalReport]) -> dict:
    """Machine-readable comparison across several models on one dataset."""
    if not reports:
        raise EmptyInputError("merged_report_dict: no reports")
    fingerprints = {r.dataset_fingerprint for r in reports}
    if len(fingerprints) != 1:
        raise ParameterError(
            "cannot merge reports computed on different datasets: "
            + ", ".join(sorted(fingerprints)))
    return {
        "k": reports[0].k,
        "dataset_fingerprint": reports[0].dataset_fingerprint,
        "n_clips": reports[0].n_clips,
        "models": [r.model_tag for r in reports],
        "rows": [{
            "retrieve": retrieve,
            "based_on": based_on,
            "recalls": [r.task(retrieve, based_on).recall for r in reports],
        } for retrieve, based_on in TASKS],
    }
