"""Experiment harness: cross-validation and the effort-variation studies.

Protocol, per subject: 5 folds, each training on one trial per class and
testing on the remaining four. Quantization bounds are always fitted on
the fold's training trials only. Experiments:

    crossval                 within-context accuracy for one effort level
    experiment_context_pair  train on each level of a pair, test within and
                             across, then merge the two models and retest
    experiment_all_contexts  one model accumulating all three effort levels
    experiment_effort_classes
                             27-class gesture+effort model, scored jointly
                             and with the winner projected to its gesture

Accuracies are percentages and are reported under both aggregations:
per-window (each encoded window scored independently) and majority
(modal label across a trial's windows).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .am import (
    EFFORTS,
    GESTURES,
    AssociativeMemory,
    ClassLabel,
    Prototype,
    merge_models,
)
from .data import DataFormatError, TrialRecord
from .encoder import EncoderConfig, build_item_memories
from .hdcore import Hypervector, Seed, random_hypervector
from .sigproc import mav_frames, segment

__all__ = [
    "ExperimentReport",
    "crossval",
    "emit_report",
    "experiment_all_contexts",
    "experiment_context_pair",
    "experiment_effort_classes",
    "parse_report",
]

N_FOLDS = 5


@dataclass(frozen=True)
class ExperimentReport:
    experiment: str
    seed: int
    config: dict
    per_subject: dict
    mean: dict
    notes: tuple[str, ...] = (
        "headline numbers use per-window aggregation; majority also reported",
    )


class _FastEncoder:
    """Vectorized spatiotemporal encoding, bit-exact with encoder.encode_stream.

    Precomputes the per-(channel, level) bound sign vectors once, so each
    trial encoding is a gather-and-accumulate instead of 64 multiplies.
    """

    def __init__(self, config: EncoderConfig, seed: Seed):
        self.config = config
        im, cim = build_item_memories(seed.child("encoder"), config)
        self.tiebreak = random_hypervector(seed.child("tiebreak"), config.dim)
        self._tb_signs = self.tiebreak.signs()
        im_s = im.sign_matrix()
        cim_s = cim.sign_matrix()
        # (channels, levels, D) int8
        self._bound = (im_s[:, None, :] * cim_s[None, :, :]).astype(np.int8)

    def encode(self, values: np.ndarray, cfg: EncoderConfig) -> np.ndarray:
        """Encode a (frames, channels) MAV matrix into (frames-N+1, D) signs."""
        mins, maxs = cfg.require_bounds()
        scaled = (np.clip(values, mins, maxs) - mins) / (maxs - mins) * cfg.levels
        levels = np.minimum(scaled.astype(np.int64), cfg.levels - 1)
        n_frames, n_ch = values.shape
        acc = np.zeros((n_frames, cfg.dim), dtype=np.int16)
        for c in range(n_ch):
            acc += self._bound[c][levels[:, c]]
        spatial = np.where(
            acc > 0, np.int8(1), np.where(acc < 0, np.int8(-1), self._tb_signs)
        ).astype(np.int8)
        n = cfg.n_gram
        if n_frames < n:
            return np.empty((0, cfg.dim), dtype=np.int8)
        w = n_frames - n + 1
        out = np.roll(spatial[:w], n - 1, axis=1)
        for j in range(1, n):
            out = out * np.roll(spatial[j : j + n_frames - n + 1], n - 1 - j, axis=1)
        return out.astype(np.int8)


def hold_mav_matrix(rec: TrialRecord) -> np.ndarray:
    """Hold-segment MAV features of a trial as a (frames, channels) matrix."""
    _, (lo, hi), _ = segment(rec.samples, rec.fs)
    frames = mav_frames(rec.samples[:, lo:hi])
    return np.stack([f.values for f in frames])


def _index_dataset(
    records: list[TrialRecord], contexts: tuple[str, ...]
) -> dict[int, dict[tuple[str, str, int], TrialRecord]]:
    by_subject: dict[int, dict[tuple[str, str, int], TrialRecord]] = {}
    for rec in records:
        by_subject.setdefault(rec.subject, {})[(rec.gesture, rec.effort, rec.trial)] = rec
    for subject, idx in by_subject.items():
        for g in GESTURES:
            for e in contexts:
                for t in range(1, N_FOLDS + 1):
                    if (g, e, t) not in idx:
                        raise DataFormatError(
                            f"subject {subject}: missing trial {g}/{e}/{t}"
                        )
    return by_subject


def _bipolarize_sum(signs: np.ndarray, tb: np.ndarray) -> np.ndarray:
    s = signs.sum(axis=0, dtype=np.int64)
    return np.where(s > 0, np.int8(1), np.where(s < 0, np.int8(-1), tb)).astype(np.int8)


@dataclass
class _Scorer:
    """Accumulates per-window and majority-vote accuracy."""

    window_correct: int = 0
    window_total: int = 0
    trial_correct: int = 0
    trial_total: int = 0

    def add(self, predicted: np.ndarray, truth: int, class_map: np.ndarray | None = None):
        if class_map is not None:
            predicted = class_map[predicted]
        self.window_correct += int((predicted == truth).sum())
        self.window_total += predicted.shape[0]
        modal = int(np.argmax(np.bincount(predicted)))
        self.trial_correct += int(modal == truth)
        self.trial_total += 1

    def result(self) -> dict:
        return {
            "per_window": 100.0 * self.window_correct / self.window_total,
            "majority": 100.0 * self.trial_correct / self.trial_total,
        }


def _predict(queries: np.ndarray, protos: np.ndarray) -> np.ndarray:
    """Argmax class index per query row; ties go to the lowest index."""
    scores = queries.astype(np.float32) @ protos.astype(np.float32).T
    return np.argmax(scores, axis=1)


def _mean_metrics(per_fold: list[dict]) -> dict:
    keys = per_fold[0].keys()
    return {
        k: {
            agg: float(np.mean([f[k][agg] for f in per_fold]))
            for agg in ("per_window", "majority")
        }
        for k in keys
    }


def _mean_over_subjects(per_subject: dict) -> dict:
    return _mean_metrics(list(per_subject.values()))


def _fit_bounds(config: EncoderConfig, train_values: list[np.ndarray]) -> EncoderConfig:
    stacked = np.concatenate(train_values, axis=0)
    return config.with_bounds(stacked.min(axis=0), stacked.max(axis=0))


def _train_am(
    enc: _FastEncoder,
    cfg: EncoderConfig,
    root: Seed,
    encoded: dict,
    context: str,
    fold: int,
) -> AssociativeMemory:
    am = AssociativeMemory(config=cfg, seed=root, tiebreak=enc.tiebreak)
    for g in GESTURES:
        vecs = encoded[(g, context, fold)]
        proto = _bipolarize_sum(vecs, enc.tiebreak.signs())
        am.add(
            Prototype(
                label=ClassLabel(g), vector=Hypervector.from_signs(proto), n_trained=len(vecs)
            )
        )
    return am


def _config_snapshot(config: EncoderConfig, extra: dict | None = None) -> dict:
    snap = {
        "dim": config.dim,
        "levels": config.levels,
        "n_gram": config.n_gram,
        "channels": config.channel_count,
        "folds": N_FOLDS,
    }
    if extra:
        snap.update(extra)
    return snap


def crossval(
    records: list[TrialRecord],
    context: str,
    seed: int,
    config: EncoderConfig | None = None,
) -> ExperimentReport:
    """Within-context 5-fold cross-validation for one effort level."""
    config = config or EncoderConfig()
    root = Seed(seed)
    enc = _FastEncoder(config, root)
    by_subject = _index_dataset(records, (context,))
    per_subject = {}
    for subject in sorted(by_subject):
        idx = by_subject[subject]
        values = {k: hold_mav_matrix(rec) for k, rec in idx.items()}
        folds = []
        for fold in range(1, N_FOLDS + 1):
            cfg = _fit_bounds(config, [values[(g, context, fold)] for g in GESTURES])
            encoded = {
                k: enc.encode(v, cfg) for k, v in values.items()
            }
            am = _train_am(enc, cfg, root, encoded, context, fold)
            protos = am.prototype_sign_matrix()
            scorer = _Scorer()
            for gi, g in enumerate(GESTURES):
                for t in range(1, N_FOLDS + 1):
                    if t == fold:
                        continue
                    scorer.add(_predict(encoded[(g, context, t)], protos), gi)
            folds.append({"within": scorer.result()})
        per_subject[str(subject)] = _mean_metrics(folds)
    return ExperimentReport(
        experiment=f"crossval[{context}]",
        seed=seed,
        config=_config_snapshot(config, {"context": context}),
        per_subject=per_subject,
        mean=_mean_over_subjects(per_subject),
    )


def experiment_context_pair(
    records: list[TrialRecord],
    levels: tuple[str, str],
    seed: int,
    config: EncoderConfig | None = None,
) -> ExperimentReport:
    """Train on each level of a pair, test within and across, merge, retest.

    Emits six accuracies per subject: A-on-A, A-on-B, B-on-B, B-on-A,
    merged-on-A, merged-on-B. Both training trials (one per level) feed the
    fold's quantization bounds, mirroring the one-trial-per-context budget.
    """
    ctx_a, ctx_b = levels
    for lvl in levels:
        if lvl not in EFFORTS:
            raise ValueError(f"unknown effort level {lvl!r}")
    config = config or EncoderConfig()
    root = Seed(seed)
    enc = _FastEncoder(config, root)
    contexts = tuple(dict.fromkeys(levels))  # dedupe when A == B
    by_subject = _index_dataset(records, contexts)
    per_subject = {}
    for subject in sorted(by_subject):
        idx = by_subject[subject]
        values = {
            (g, e, t): hold_mav_matrix(idx[(g, e, t)])
            for g in GESTURES
            for e in contexts
            for t in range(1, N_FOLDS + 1)
        }
        folds = []
        for fold in range(1, N_FOLDS + 1):
            cfg = _fit_bounds(
                config, [values[(g, e, fold)] for g in GESTURES for e in contexts]
            )
            encoded = {k: enc.encode(v, cfg) for k, v in values.items()}
            am_a = _train_am(enc, cfg, root, encoded, ctx_a, fold)
            am_b = _train_am(enc, cfg, root, encoded, ctx_b, fold)
            merged = merge_models(am_a, am_b, root.child("merge-fold", fold))
            fold_metrics = {}
            for name, am in (
                (f"{ctx_a}_model", am_a),
                (f"{ctx_b}_model", am_b),
                ("merged_model", merged),
            ):
                protos = am.prototype_sign_matrix()
                for test_ctx in (ctx_a, ctx_b):
                    scorer = _Scorer()
                    for gi, g in enumerate(GESTURES):
                        for t in range(1, N_FOLDS + 1):
                            if t == fold:
                                continue
                            scorer.add(_predict(encoded[(g, test_ctx, t)], protos), gi)
                    fold_metrics[f"{name}_on_{test_ctx}"] = scorer.result()
            folds.append(fold_metrics)
        per_subject[str(subject)] = _mean_metrics(folds)
    return ExperimentReport(
        experiment=f"context-pair[{ctx_a},{ctx_b}]",
        seed=seed,
        config=_config_snapshot(config, {"levels": list(levels)}),
        per_subject=per_subject,
        mean=_mean_over_subjects(per_subject),
    )


def experiment_all_contexts(
    records: list[TrialRecord],
    seed: int,
    config: EncoderConfig | None = None,
) -> ExperimentReport:
    """One gesture model per fold accumulating all three effort contexts."""
    config = config or EncoderConfig()
    root = Seed(seed)
    enc = _FastEncoder(config, root)
    by_subject = _index_dataset(records, EFFORTS)
    per_subject = {}
    for subject in sorted(by_subject):
        idx = by_subject[subject]
        values = {k: hold_mav_matrix(rec) for k, rec in idx.items()}
        folds = []
        for fold in range(1, N_FOLDS + 1):
            cfg = _fit_bounds(
                config, [values[(g, e, fold)] for g in GESTURES for e in EFFORTS]
            )
            encoded = {k: enc.encode(v, cfg) for k, v in values.items()}
            am = AssociativeMemory(config=cfg, seed=root, tiebreak=enc.tiebreak)
            for g in GESTURES:
                stacked = np.concatenate([encoded[(g, e, fold)] for e in EFFORTS])
                proto = _bipolarize_sum(stacked, enc.tiebreak.signs())
                am.add(
                    Prototype(
                        label=ClassLabel(g),
                        vector=Hypervector.from_signs(proto),
                        n_trained=stacked.shape[0],
                    )
                )
            protos = am.prototype_sign_matrix()
            fold_metrics = {}
            for test_ctx in EFFORTS:
                scorer = _Scorer()
                for gi, g in enumerate(GESTURES):
                    for t in range(1, N_FOLDS + 1):
                        if t == fold:
                            continue
                        scorer.add(_predict(encoded[(g, test_ctx, t)], protos), gi)
                fold_metrics[f"all_model_on_{test_ctx}"] = scorer.result()
            folds.append(fold_metrics)
        per_subject[str(subject)] = _mean_metrics(folds)
    return ExperimentReport(
        experiment="all-contexts",
        seed=seed,
        config=_config_snapshot(config),
        per_subject=per_subject,
        mean=_mean_over_subjects(per_subject),
    )


def experiment_effort_classes(
    records: list[TrialRecord],
    seed: int,
    config: EncoderConfig | None = None,
) -> ExperimentReport:
    """27-class gesture+effort model: joint and gesture-projected accuracy."""
    config = config or EncoderConfig()
    root = Seed(seed)
    enc = _FastEncoder(config, root)
    by_subject = _index_dataset(records, EFFORTS)
    # class index = label ordinal = gesture * 3 + effort
    gesture_of_class = np.repeat(np.arange(len(GESTURES)), len(EFFORTS))
    per_subject = {}
    for subject in sorted(by_subject):
        idx = by_subject[subject]
        values = {k: hold_mav_matrix(rec) for k, rec in idx.items()}
        folds = []
        for fold in range(1, N_FOLDS + 1):
            cfg = _fit_bounds(
                config, [values[(g, e, fold)] for g in GESTURES for e in EFFORTS]
            )
            encoded = {k: enc.encode(v, cfg) for k, v in values.items()}
            protos = np.stack(
                [
                    _bipolarize_sum(encoded[(g, e, fold)], enc.tiebreak.signs())
                    for g in GESTURES
                    for e in EFFORTS
                ]
            )
            joint = _Scorer()
            projected = _Scorer()
            for gi, g in enumerate(GESTURES):
                for ei, e in enumerate(EFFORTS):
                    truth_joint = gi * len(EFFORTS) + ei
                    for t in range(1, N_FOLDS + 1):
                        if t == fold:
                            continue
                        pred = _predict(encoded[(g, e, t)], protos)
                        joint.add(pred, truth_joint)
                        projected.add(pred, gi, class_map=gesture_of_class)
            folds.append({"joint": joint.result(), "gesture_only": projected.result()})
        per_subject[str(subject)] = _mean_metrics(folds)
    return ExperimentReport(
        experiment="effort-classes",
        seed=seed,
        config=_config_snapshot(config),
        per_subject=per_subject,
        mean=_mean_over_subjects(per_subject),
    )


# --- report emission ---------------------------------------------------------


def _report_record(report: ExperimentReport) -> dict:
    return {
        "experiment": report.experiment,
        "seed": report.seed,
        "config": report.config,
        "per_subject": report.per_subject,
        "mean": report.mean,
        "notes": list(report.notes),
    }


def emit_report(report: ExperimentReport, fmt: str = "machine") -> bytes:
    """machine: one JSON record per line; human: an aligned text table."""
    if fmt == "machine":
        return (json.dumps(_report_record(report), sort_keys=True) + "\n").encode()
    if fmt != "human":
        raise ValueError(f"unknown report format {fmt!r}")
    subjects = sorted(report.per_subject)
    header = ["metric", "aggregation", *[f"subject {s}" for s in subjects], "mean"]
    rows = [header]
    for metric in report.mean:
        for agg in ("per_window", "majority"):
            rows.append(
                [
                    metric,
                    agg,
                    *[f"{report.per_subject[s][metric][agg]:.2f}" for s in subjects],
                    f"{report.mean[metric][agg]:.2f}",
                ]
            )
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = [
        f"experiment: {report.experiment}  seed: {report.seed}",
        f"config: {report.config}",
        *report.notes,
        "",
    ]
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return ("\n".join(lines) + "\n").encode()


def parse_report(raw: bytes) -> list[dict]:
    """Parse machine-format (line-delimited JSON) report bytes."""
    return [json.loads(line) for line in raw.decode().splitlines() if line.strip()]
