"""Training regime definitions and their static properties.

A regime fixes three things: which caption type each minibatch carries,
which projection heads are trainable, and which contrastive terms compose
the loss. The six named regimes:

    two-stage-frozen     stage 1: vt on visual captions; stage 2: at, text frozen
    two-stage-trainable  stage 1: vt on visual captions; stage 2: at, text trained
    audioclip            single stage, audio captions, av + at + vt
    slava-mixed          single stage, per-batch coin flip between audio and
                         visual captions, av + (at or vt)
    slava-av-2loss       single stage, audio-visual captions, at + vt
    slava-av-3loss       single stage, audio-visual captions, av + at + vt
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import ParameterError, RegimeMismatchError

HEAD_NAMES = ("visual", "audio", "text")
CAPTION_TYPES = ("audio", "visual", "audio_visual")

# Fixed composition order for loss terms; totals are summed left to right.
COMPONENT_ORDER = ("av", "at", "vt")


@dataclass(frozen=True)
class TwoStage:
    """Sequential vt-then-at training. frozen_text freezes the text head in stage 2."""
    frozen_text: bool = True


@dataclass(frozen=True)
class AudioClipStyle:
    """Single stage on audio captions with all three pairwise losses."""


@dataclass(frozen=True)
class SlavaMixed:
    """Single stage alternating audio/visual captions per minibatch."""


@dataclass(frozen=True)
class SlavaAvCaptions:
    """Single stage on audio-visual captions; use_av_loss adds the av term."""
    use_av_loss: bool = True


Regime = Union[TwoStage, AudioClipStyle, SlavaMixed, SlavaAvCaptions]

_NAMED = {
    "two-stage-frozen": TwoStage(frozen_text=True),
    "two-stage-trainable": TwoStage(frozen_text=False),
    "audioclip": AudioClipStyle(),
    "slava-mixed": SlavaMixed(),
    "slava-av-2loss": SlavaAvCaptions(use_av_loss=False),
    "slava-av-3loss": SlavaAvCaptions(use_av_loss=True),
}

REGIME_NAMES = tuple(_NAMED)


def regime_from_name(name: str) -> Regime:
    try:
        return _NAMED[name]
    except KeyError:
        raise ParameterError(
            f"unknown regime {name!r}; expected one of {', '.join(_NAMED)}")


def regime_name(regime: Regime) -> str:
    for name, value in _NAMED.items():
        if value == regime:
            return name
    raise ParameterError(f"unnamed regime {regime!r}")


def is_two_stage(regime: Regime) -> bool:
    return isinstance(regime, TwoStage)


def check_stage(regime: Regime, stage: int | None) -> None:
    """Two-stage regimes require stage 1 or 2; single-stage regimes forbid it."""
    if is_two_stage(regime):
        if stage not in (1, 2):
            raise ParameterError(
                f"two-stage regime requires stage 1 or 2, got {stage!r}")
    elif stage is not None:
        raise ParameterError(
            f"stage is only meaningful for two-stage regimes, got {stage!r}")


def batch_caption_type(regime: Regime, stage: int | None = None) -> str | None:
    """Caption type every batch carries, or None when it is a per-batch coin flip."""
    check_stage(regime, stage)
    if isinstance(regime, TwoStage):
        return "visual" if stage == 1 else "audio"
    if isinstance(regime, AudioClipStyle):
        return "audio"
    if isinstance(regime, SlavaMixed):
        return None
    return "audio_visual"


def allowed_caption_types(regime: Regime, stage: int | None = None) -> frozenset[str]:
    fixed = batch_caption_type(regime, stage)
    if fixed is None:
        return frozenset({"audio", "visual"})
    return frozenset({fixed})


def required_caption_types(regime: Regime) -> frozenset[str]:
    """Caption types every clip must provide for the regime to train at all."""
    if isinstance(regime, (TwoStage, SlavaMixed)):
        return frozenset({"audio", "visual"})
    if isinstance(regime, AudioClipStyle):
        return frozenset({"audio"})
    return frozenset({"audio_visual"})


def loss_components(regime: Regime, caption_type: str,
                    stage: int | None = None) -> tuple[str, ...]:
    """Active contrastive terms, in COMPONENT_ORDER, for one batch."""
    if caption_type not in allowed_caption_types(regime, stage):
        raise RegimeMismatchError(
            f"{caption_type!r} captions are incompatible with regime "
            f"{regime_name(regime)!r}"
            + (f" stage {stage}" if is_two_stage(regime) else ""))
    if isinstance(regime, TwoStage):
        return ("vt",) if stage == 1 else ("at",)
    if isinstance(regime, AudioClipStyle):
        return ("av", "at", "vt")
    if isinstance(regime, SlavaMixed):
        return ("av", "at") if caption_type == "audio" else ("av", "vt")
    if regime.use_av_loss:
        return ("av", "at", "vt")
    return ("at", "vt")


def trainable_heads(regime: Regime, stage: int | None = None) -> frozenset[str]:
    check_stage(regime, stage)
    if isinstance(regime, TwoStage):
        if stage == 1:
            return frozenset({"visual", "text"})
        if regime.frozen_text:
            return frozenset({"audio"})
        return frozenset({"audio", "text"})
    return frozenset(HEAD_NAMES)
