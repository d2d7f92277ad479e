"""Trimodal contrastive alignment over precomputed audio, visual, and text
embeddings: linear projection heads trained with symmetric InfoNCE under six
training regimes, evaluated by crossmodal retrieval recall@k."""

from .data import (CaptionRecord, Dataset, EmbeddingRecord, RawBatch,
                   TriBatch, gen_synthetic, make_batches, read_dataset,
                   write_dataset)
from .errors import (CheckpointFormatError, DatasetFormatError,
                     DivergenceError, EmptyInputError, MappingError,
                     NonFiniteError, ParameterError, RegimeMismatchError,
                     ShapeError, TrialignError)
from .eval import (RetrievalReport, TaskResult, format_report_table,
                   merged_report_dict, rank_database, recall_at_k,
                   run_task_suite)
from .gradcheck import GradCheckReport, run_gradcheck
from .loss import (PairLoss, RegimeLoss, info_nce, info_nce_grad, regime_loss,
                   similarity_logits)
from .model import (AlignerConfig, ProjectionHead, TrimodalAligner,
                    embed_batch, embed_modality, init_aligner)
from .optim import AdamWState, adamw_step, init_adamw
from .regimes import (AudioClipStyle, Regime, SlavaAvCaptions, SlavaMixed,
                      TwoStage, regime_from_name, regime_name)
from .train import (TrainConfig, TrainResult, load_checkpoint,
                    save_checkpoint, train, train_single_stage, train_step,
                    train_two_stage)

__version__ = "0.1.0"

__all__ = [
    "AdamWState", "AlignerConfig", "AudioClipStyle", "CaptionRecord",
    "CheckpointFormatError", "DatasetFormatError", "Dataset",
    "DivergenceError", "EmbeddingRecord", "EmptyInputError",
    "GradCheckReport", "MappingError", "NonFiniteError", "PairLoss",
    "ParameterError", "ProjectionHead", "RawBatch", "Regime",
    "RegimeLoss", "RegimeMismatchError", "RetrievalReport", "ShapeError",
    "SlavaAvCaptions", "SlavaMixed", "TaskResult", "TrainConfig",
    "TrainResult", "TriBatch", "TrialignError", "TrimodalAligner",
    "TwoStage", "adamw_step", "embed_batch", "embed_modality",
    "format_report_table", "gen_synthetic", "info_nce", "info_nce_grad",
    "init_adamw", "init_aligner", "load_checkpoint", "make_batches",
    "merged_report_dict", "rank_database", "read_dataset", "recall_at_k",
    "regime_from_name", "regime_loss", "regime_name", "run_gradcheck",
    "run_task_suite", "save_checkpoint", "similarity_logits", "train",
    "train_single_stage", "train_step", "train_two_stage", "write_dataset",
]
