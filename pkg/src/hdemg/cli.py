"""Command-line harness.

Commands:
    synth      generate the synthetic benchmark dataset
    train      train an associative-memory model from a trial directory
    merge      merge two gesture-only models element-wise
    classify   classify trials with a saved model
    eval       run an experiment (ctx-pair | all-ctx | effort-classes)
    report     render a machine report file as a human-readable table

Exit codes: 0 success, 2 data error, 3 config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import am as am_mod
from .am import (
    EFFORTS,
    GESTURES,
    AssociativeMemory,
    ClassLabel,
    ModelFormatError,
    Prototype,
    classify_trial,
    load_model,
    merge_models,
    save_model,
    train_class,
    train_multicontext,
)
from .data import DataFormatError, SynthConfig, load_trials, save_trials, synth_generate
from .encoder import EncoderConfig, EncoderConfigError
from .experiments import (
    ExperimentReport,
    emit_report,
    experiment_all_contexts,
    experiment_context_pair,
    experiment_effort_classes,
    hold_mav_matrix,
    parse_report,
)
from .hdcore import Hypervector, Seed

EXIT_OK = 0
EXIT_DATA = 2
EXIT_CONFIG = 3


def _encoder_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dim", type=int, default=10_000, help="hypervector dimension")
    parser.add_argument("--levels", type=int, default=21, help="quantization levels")
    parser.add_argument("--ngram", type=int, default=5, help="temporal n-gram depth")
    parser.add_argument("--seed", type=int, default=1, help="master seed")


def _build_config(args: argparse.Namespace, channels: int = 64) -> EncoderConfig:
    return EncoderConfig(
        dim=args.dim, levels=args.levels, n_gram=args.ngram, channel_count=channels
    )


def _cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        seed=args.seed, noise_std=args.noise, fs=args.fs, channel_count=args.channels
    )
    records = synth_generate(config)
    save_trials(records, args.out)
    print(f"wrote {len(records)} trials to {args.out}")
    return EXIT_OK


def _encode_all(records, config, seed):
    """Encode hold-segment windows of every record with a fresh encoder."""
    from .experiments import _FastEncoder

    enc = _FastEncoder(config, seed)
    return enc, {id(r): enc.encode(hold_mav_matrix(r), config) for r in records}


def _cmd_train(args: argparse.Namespace) -> int:
    records = load_trials(args.data)
    if not records:
        raise DataFormatError(f"no trials found under {args.data}")
    channels = records[0].samples.shape[0]
    config = _build_config(args, channels)
    frames = np.concatenate([hold_mav_matrix(r) for r in records])
    config = config.with_bounds(frames.min(axis=0), frames.max(axis=0))
    root = Seed(args.seed)
    enc, encoded = _encode_all(records, config, root)

    def vectors_of(recs) -> list[Hypervector]:
        return [
            Hypervector.from_signs(s) for r in recs for s in encoded[id(r)]
        ]

    if args.mode == "gesture+effort":
        model = AssociativeMemory(
            config=config, seed=root, mode=am_mod.GESTURE_EFFORT, tiebreak=enc.tiebreak
        )
        protos = []
        for g in GESTURES:
            for e in EFFORTS:
                recs = [r for r in records if r.gesture == g and r.effort == e]
                if recs:
                    protos.append(
                        train_class(vectors_of(recs), ClassLabel(g, e), enc.tiebreak)
                    )
        model = am_mod.add_effort_classes(model, protos)
    else:
        model = AssociativeMemory(config=config, seed=root, tiebreak=enc.tiebreak)
        for g in GESTURES:
            if args.context == "all":
                per_context = {
                    e: vectors_of([r for r in records if r.gesture == g and r.effort == e])
                    for e in EFFORTS
                    if any(r.gesture == g and r.effort == e for r in records)
                }
                if not per_context:
                    continue
                if len(per_context) == 1:
                    (vecs,) = per_context.values()
                    model.add(train_class(vecs, ClassLabel(g), enc.tiebreak))
                else:
                    model.add(train_multicontext(per_context, g, enc.tiebreak))
            else:
                recs = [r for r in records if r.gesture == g and r.effort == args.context]
                if recs:
                    model.add(train_class(vectors_of(recs), ClassLabel(g), enc.tiebreak))
    if not model.prototypes:
        raise DataFormatError("no trials matched the requested context")
    save_model(model, args.model)
    print(f"trained {len(model.prototypes)} prototypes -> {args.model}")
    return EXIT_OK


def _cmd_merge(args: argparse.Namespace) -> int:
    merged = merge_models(
        load_model(args.models[0]), load_model(args.models[1]), Seed(args.seed, "merge")
    )
    save_model(merged, args.out)
    print(f"merged model -> {args.out}")
    return EXIT_OK


def _cmd_classify(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    path = Path(args.data)
    if path.is_dir():
        records = load_trials(path)
    else:
        from .data import _parse_trial_file

        records = [_parse_trial_file(path)]
    if not records:
        raise DataFormatError(f"no trials found under {args.data}")
    im, cim = model.item_memories()
    from .encoder import encode_stream_signs

    n_correct = 0
    for rec in records:
        signs = encode_stream_signs(
            hold_mav_matrix(rec), im, cim, model.config, model.tiebreak
        )
        queries = [Hypervector.from_signs(s) for s in signs]
        result = classify_trial(model, queries, aggregation=args.aggregation)
        predicted = result.majority_label
        truth = ClassLabel(
            rec.gesture, rec.effort if model.mode == am_mod.GESTURE_EFFORT else None
        )
        ok = predicted == truth
        n_correct += ok
        print(f"{rec.filename()}  predicted={predicted}  true={truth}  {'ok' if ok else 'MISS'}")
    print(f"{n_correct}/{len(records)} trials correct (majority vote)")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    records = load_trials(args.data)
    config = _build_config(args, records[0].samples.shape[0] if records else 64)
    if args.experiment == "ctx-pair":
        pair = tuple(args.pair.split(","))
        if len(pair) != 2 or any(p not in EFFORTS for p in pair):
            raise EncoderConfigError(f"--pair must be two of {EFFORTS}, got {args.pair!r}")
        report = experiment_context_pair(records, pair, args.seed, config)
    elif args.experiment == "all-ctx":
        report = experiment_all_contexts(records, args.seed, config)
    else:
        report = experiment_effort_classes(records, args.seed, config)
    if args.out:
        Path(args.out).write_bytes(emit_report(report, "machine"))
    sys.stdout.write(emit_report(report, "human").decode())
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    raw = Path(args.infile).read_bytes()
    for record in parse_report(raw):
        report = ExperimentReport(
            experiment=record["experiment"],
            seed=record["seed"],
            config=record["config"],
            per_subject=record["per_subject"],
            mean=record["mean"],
            notes=tuple(record.get("notes", ())),
        )
        sys.stdout.write(emit_report(report, "human").decode())
        sys.stdout.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdemg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic benchmark dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--noise", type=float, default=SynthConfig().noise_std)
    p.add_argument("--fs", type=int, default=SynthConfig().fs, help="sampling rate (Hz)")
    p.add_argument("--channels", type=int, default=SynthConfig().channel_count)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a model from a trial directory")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--context", default="all", choices=[*EFFORTS, "all"])
    p.add_argument("--mode", default="gesture", choices=["gesture", "gesture+effort"])
    _encoder_args(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("merge", help="merge two gesture-only models")
    p.add_argument("models", nargs=2, help="two model files")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=_cmd_merge)

    p = sub.add_parser("classify", help="classify trials with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="trial file or directory")
    p.add_argument("--aggregation", default="majority", choices=["per-window", "majority"])
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("eval", help="run an experiment")
    p.add_argument("experiment", choices=["ctx-pair", "all-ctx", "effort-classes"])
    p.add_argument("--data", required=True)
    p.add_argument("--pair", default="low,high", help="effort pair for ctx-pair (e.g. low,high)")
    p.add_argument("--out", help="write machine report (JSON lines) here")
    _encoder_args(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="render a machine report as a table")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, ModelFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EncoderConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
