"""Command-line interface.

Commands:
    synth      generate a synthetic dataset directory
    train      train one regime and write a checkpoint plus a loss-trace CSV
    eval       run the retrieval task suite against a checkpoint
    gradcheck  verify analytic gradients against finite differences
    compare    merge retrieval reports for several checkpoints

Config resolution for train: defaults, then --config file entries, then
explicit flags. The resolved config is logged before the run starts. Exit
codes: 0 success, 1 validation or runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

from .data import gen_synthetic, read_dataset, write_dataset
from .errors import ParameterError, TrialignError
from .eval import format_report_table, merged_report_dict, run_task_suite
from .gradcheck import run_gradcheck
from .regimes import REGIME_NAMES, regime_from_name
from .train import (TrainConfig, load_checkpoint, save_checkpoint, train,
                    write_loss_trace)

_CONFIG_FIELDS = {f.name: f.type for f in fields(TrainConfig)}


def _parse_config_file(path: str) -> dict:
    """Flat key = value file mirroring TrainConfig; # starts a comment."""
    values: dict = {}
    text = Path(path).read_text()
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(
                f"{path}:line {lineno}: expected key = value, got {raw_line!r}")
        key, _, raw_value = line.partition("=")
        key, raw_value = key.strip(), raw_value.strip()
        if key not in _CONFIG_FIELDS:
            raise ParameterError(
                f"{path}:line {lineno}: unknown config key {key!r}; "
                f"expected one of {', '.join(_CONFIG_FIELDS)}")
        if key in ("epochs", "batch_size", "seed"):
            values[key] = int(raw_value)
        elif key == "bias_enabled":
            if raw_value.lower() not in ("true", "false", "0", "1"):
                raise ParameterError(
                    f"{path}:line {lineno}: bias_enabled must be boolean, "
                    f"got {raw_value!r}")
            values[key] = raw_value.lower() in ("true", "1")
        else:
            values[key] = float(raw_value)
    return values


def _resolve_config(args) -> TrainConfig:
    values = asdict(TrainConfig())
    if args.config:
        values.update(_parse_config_file(args.config))
    overrides = {"epochs": args.epochs, "lr": args.lr,
                 "weight_decay": args.weight_decay,
                 "batch_size": args.batch_size, "tau": args.tau,
                 "seed": args.seed}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


def _log(message: str) -> None:
    print(message, flush=True)


def _cmd_synth(args) -> int:
    dataset = gen_synthetic(
        n_clips=args.clips, k_shared=args.shared_dim, k_audio=args.audio_dim,
        k_visual=args.visual_dim, noise_sigma=args.noise,
        rows_per_clip=args.rows, seed=args.seed,
        captions_per_type=args.captions_per_type)
    write_dataset(dataset, args.out)
    _log(f"wrote {len(dataset)} clips to {args.out}")
    return 0


def _cmd_train(args) -> int:
    config = _resolve_config(args)
    _log("resolved config: " + json.dumps(asdict(config), sort_keys=True))
    regime = regime_from_name(args.regime)
    dataset = read_dataset(args.data)
    result = train(dataset, config, regime)
    save_checkpoint(result.aligner, args.out, regime_tag=args.regime,
                    config=config)
    trace_path = str(args.out) + ".losses.csv"
    write_loss_trace(result.trace, trace_path)
    _log(f"wrote checkpoint {args.out} and loss trace {trace_path}")
    return 0


def _cmd_eval(args) -> int:
    dataset = read_dataset(args.data)
    aligner, meta = load_checkpoint(args.ckpt)
    report = run_task_suite(aligner, dataset, k=args.k,
                            model_tag=meta.get("regime", ""))
    Path(args.out).write_text(report.to_json())
    _log(format_report_table([report]))
    _log(f"wrote report {args.out}")
    return 0


def _cmd_gradcheck(args) -> int:
    report = run_gradcheck(trials=args.trials, seed=args.seed)
    _log(f"info_nce gradients:   max relative error "
         f"{report.info_nce_max_error:.3e}")
    _log(f"train-step gradients: max relative error "
         f"{report.train_step_max_error:.3e}")
    _log(f"tolerance {report.tolerance:.0e}: "
         + ("PASS" if report.passed else "FAIL"))
    return 0 if report.passed else 1


def _cmd_compare(args) -> int:
    dataset = read_dataset(args.data)
    reports = []
    for ckpt in args.ckpt:
        aligner, meta = load_checkpoint(ckpt)
        tag = meta.get("regime") or Path(ckpt).stem
        reports.append(run_task_suite(aligner, dataset, k=args.k,
                                      model_tag=tag))
    merged = merged_report_dict(reports)
    Path(args.out).write_text(json.dumps(merged, sort_keys=True, indent=2)
                              + "\n")
    _log(format_report_table(reports))
    _log(f"wrote comparison {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trialign",
        description="Trimodal contrastive alignment over precomputed "
                    "embeddings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--clips", type=int, default=512)
    p.add_argument("--shared-dim", type=int, default=8)
    p.add_argument("--audio-dim", type=int, default=4)
    p.add_argument("--visual-dim", type=int, default=4)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--captions-per-type", type=int, default=1)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train one regime")
    p.add_argument("--data", required=True)
    p.add_argument("--regime", required=True, choices=REGIME_NAMES)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="run the retrieval task suite")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("compare", help="compare several checkpoints")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True, nargs="+")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    _log(f"{args.command} flags: " + json.dumps(resolved, sort_keys=True))
    try:
        return args.func(args)
    except (TrialignError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    raise SystemExit(main())
