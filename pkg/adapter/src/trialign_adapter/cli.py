"""Command-line entry: export a media manifest to a dataset directory."""

from __future__ import annotations

import argparse
import logging
import sys

from .encoders import load_pretrained_encoders, stub_encoders
from .errors import AdapterError
from .export import extract_and_export
from .manifest import load_media_manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trialign-adapter",
        description="Embed media and captions into a trialign dataset "
                    "directory")
    parser.add_argument("--manifest", required=True,
                        help="JSON media manifest")
    parser.add_argument("--out", required=True,
                        help="output dataset directory")
    parser.add_argument("--frame-rate", type=float, default=1.0,
                        help="video frames sampled per second")
    parser.add_argument("--chunk-seconds", type=float, default=10.0,
                        help="audio chunk length in seconds")
    parser.add_argument("--encoders", choices=("stub", "clip-clap"),
                        default="clip-clap",
                        help="stub encoders are deterministic hash features "
                             "for pipeline testing")
    parser.add_argument("--clip-model", default="openai/clip-vit-base-patch32")
    parser.add_argument("--clap-model", default="laion/clap-htsat-unfused")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        clips = load_media_manifest(args.manifest)
        if args.encoders == "stub":
            encoders = stub_encoders()
        else:
            encoders = load_pretrained_encoders(
                clip_model=args.clip_model, clap_model=args.clap_model,
                device=args.device)
        summary = extract_and_export(
            clips, args.out, encoders, frame_rate=args.frame_rate,
            chunk_seconds=args.chunk_seconds)
    except (AdapterError, ImportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0 if summary.clips_exported > 0 else 1


def entry_point() -> None:
    raise SystemExit(main())
