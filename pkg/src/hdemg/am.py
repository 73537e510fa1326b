"""Associative memory: prototype training, merging, and cosine-similarity inference.

A model holds one bipolar prototype hypervector per class. In gesture-only
mode classes are the 9 gestures; in gesture+effort mode classes are
(gesture, effort) pairs, up to 27. Two strategies handle effort variation:
merging two single-context models element-wise (half the elements from
each), or adding per-effort prototypes as new classes and optionally
projecting the winning label back to its gesture at decision time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoder import EncoderConfig, build_item_memories
from .hdcore import (
    Accumulator,
    DimensionMismatchError,
    Hypervector,
    Seed,
    bipolarize,
    bundle,
    cosine,
    merge_half,
    random_hypervector,
)

__all__ = [
    "AssociativeMemory",
    "ClassLabel",
    "Classification",
    "EFFORTS",
    "GESTURES",
    "ModelFormatError",
    "Prototype",
    "TrialClassification",
    "add_effort_classes",
    "classify",
    "classify_gesture_only",
    "classify_trial",
    "load_model",
    "merge_models",
    "save_model",
    "train_class",
    "train_multicontext",
]

GESTURES = (
    "index_flexion",
    "index_extension",
    "middle_flexion",
    "middle_extension",
    "thumb_flexion",
    "thumb_extension",
    "one",
    "two",
    "fist",
)
EFFORTS = ("low", "medium", "high")

GESTURE_ONLY = "gesture"
GESTURE_EFFORT = "gesture+effort"

MAGIC = b"HDAM"
FORMAT_VERSION = 1
_NO_EFFORT = 0xFF


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class ClassLabel:
    gesture: str
    effort: str | None = None

    def __post_init__(self) -> None:
        if self.gesture not in GESTURES:
            raise ValueError(f"unknown gesture {self.gesture!r}")
        if self.effort is not None and self.effort not in EFFORTS:
            raise ValueError(f"unknown effort {self.effort!r}")

    @property
    def ordinal(self) -> int:
        g = GESTURES.index(self.gesture)
        return g if self.effort is None else g * len(EFFORTS) + EFFORTS.index(self.effort)

    def gesture_only(self) -> "ClassLabel":
        return ClassLabel(self.gesture)

    def __str__(self) -> str:
        return self.gesture if self.effort is None else f"{self.gesture}/{self.effort}"


@dataclass(frozen=True)
class Prototype:
    label: ClassLabel
    vector: Hypervector
    n_trained: int


@dataclass(frozen=True)
class Classification:
    label: ClassLabel
    similarity: float
    all_scores: dict[ClassLabel, float]


@dataclass(frozen=True)
class TrialClassification:
    window_labels: list[ClassLabel]
    majority_label: ClassLabel
    aggregation: str


@dataclass
class AssociativeMemory:
    """Labeled prototype store queried by maximum cosine similarity.

    The model seed derives the encoder item memories, the bipolarization
    tiebreak vector, and any merge selections, so a saved model regenerates
    its item memories bit-exactly instead of storing them.
    """

    config: EncoderConfig
    seed: Seed
    mode: str = GESTURE_ONLY
    prototypes: list[Prototype] = field(default_factory=list)
    tiebreak: Hypervector | None = None
    _im_cache: tuple | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.mode not in (GESTURE_ONLY, GESTURE_EFFORT):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.tiebreak is None:
            self.tiebreak = random_hypervector(self.seed.child("tiebreak"), self.config.dim)

    def item_memories(self):
        if self._im_cache is None:
            self._im_cache = build_item_memories(self.seed.child("encoder"), self.config)
        return self._im_cache

    def labels(self) -> list[ClassLabel]:
        return [p.label for p in self.prototypes]

    def add(self, prototype: Prototype) -> None:
        if (self.mode == GESTURE_EFFORT) != (prototype.label.effort is not None):
            raise ValueError(f"label {prototype.label} does not match mode {self.mode}")
        if prototype.label in self.labels():
            raise ValueError(f"duplicate class {prototype.label}")
        if prototype.vector.dim != self.config.dim:
            raise DimensionMismatchError("prototype dimension does not match model")
        self.prototypes.append(prototype)

    def prototype_sign_matrix(self) -> np.ndarray:
        return np.stack([p.vector.signs() for p in self.prototypes])


def train_class(
    vectors: list[Hypervector], label: ClassLabel, tiebreak: Hypervector
) -> Prototype:
    """Bundle all training vectors of one class and bipolarize into a prototype."""
    if not vectors:
        raise ValueError("cannot train a prototype from zero vectors")
    acc = Accumulator(vectors[0].dim)
    for v in vectors:
        bundle(acc, v)
    return Prototype(label=label, vector=bipolarize(acc, tiebreak), n_trained=len(vectors))


def train_multicontext(
    per_context_vectors: dict[str, list[Hypervector]],
    gesture: str,
    tiebreak: Hypervector,
) -> Prototype:
    """Accumulate vectors from several effort contexts, then bipolarize once.

    The single accumulation weights the prototype toward whichever contexts
    contribute more vectors; the label carries the gesture only.
    """
    if len(per_context_vectors) < 2:
        raise ValueError("need at least 2 contexts")
    if any(not vs for vs in per_context_vectors.values()):
        raise ValueError("every context must contribute at least one vector")
    flat = [v for vs in per_context_vectors.values() for v in vs]
    return train_class(flat, ClassLabel(gesture), tiebreak)


def merge_models(a: AssociativeMemory, b: AssociativeMemory, seed: Seed) -> AssociativeMemory:
    """Merge two gesture-only models: per gesture, take a seeded random half
    of the prototype elements from each parent."""
    if a.mode != GESTURE_ONLY or b.mode != GESTURE_ONLY:
        raise ValueError("merge requires two gesture-only models")
    if set(a.labels()) != set(b.labels()):
        raise ValueError("gesture sets differ")
    if a.config != b.config or a.seed != b.seed:
        raise ValueError("encoder seeds/config differ; models are not mergeable")
    by_label_b = {p.label: p for p in b.prototypes}
    merged = AssociativeMemory(config=a.config, seed=a.seed, mode=GESTURE_ONLY, tiebreak=a.tiebreak)
    for pa in a.prototypes:
        pb = by_label_b[pa.label]
        vec = merge_half(pa.vector, pb.vector, seed.child("merge", pa.label.ordinal))
        merged.add(Prototype(label=pa.label, vector=vec, n_trained=pa.n_trained + pb.n_trained))
    return merged


def add_effort_classes(am: AssociativeMemory, prototypes: list[Prototype]) -> AssociativeMemory:
    """Add per-effort prototypes as new classes, leaving existing entries untouched."""
    if am.mode != GESTURE_EFFORT and am.prototypes:
        raise ValueError("cannot add effort classes to a non-empty gesture-only model")
    out = AssociativeMemory(
        config=am.config,
        seed=am.seed,
        mode=GESTURE_EFFORT,
        prototypes=list(am.prototypes),
        tiebreak=am.tiebreak,
    )
    for p in prototypes:
        if p.label.effort is None:
            raise ValueError(f"label {p.label} carries no effort level")
        out.add(p)
    return out


def classify(am: AssociativeMemory, query: Hypervector) -> Classification:
    """Return the argmax-similarity label; ties break to the lowest label ordinal."""
    if not am.prototypes:
        raise ValueError("associative memory is empty")
    scores = {p.label: cosine(p.vector, query) for p in am.prototypes}
    best = min(scores, key=lambda lbl: (-scores[lbl], lbl.ordinal))
    return Classification(label=best, similarity=scores[best], all_scores=scores)


def classify_gesture_only(am: AssociativeMemory, query: Hypervector) -> Classification:
    """Classify with a gesture+effort model, then drop the effort from the winner."""
    if am.mode != GESTURE_EFFORT:
        raise ValueError("gesture-only projection requires a gesture+effort model")
    result = classify(am, query)
    return Classification(
        label=result.label.gesture_only(),
        similarity=result.similarity,
        all_scores=result.all_scores,
    )


def classify_trial(
    am: AssociativeMemory, queries: list[Hypervector], aggregation: str = "majority"
) -> TrialClassification:
    """Classify every window of a trial; majority aggregation takes the modal label."""
    if aggregation not in ("per-window", "majority"):
        raise ValueError(f"unknown aggregation {aggregation!r}")
    if not queries:
        raise ValueError("no query vectors")
    window_labels = [classify(am, q).label for q in queries]
    counts: dict[ClassLabel, int] = {}
    for lbl in window_labels:
        counts[lbl] = counts.get(lbl, 0) + 1
    majority = min(counts, key=lambda lbl: (-counts[lbl], lbl.ordinal))
    return TrialClassification(
        window_labels=window_labels, majority_label=majority, aggregation=aggregation
    )


# --- model file format ------------------------------------------------------
#
# magic "HDAM", version byte, then little-endian fields:
#   u32 dim, u32 levels, u32 n_gram, u32 channels, u8 mode
#   u64 seed value, u16 namespace length, namespace bytes (utf-8)
#   u8 has_bounds; if set, channels f64 mins then channels f64 maxs
#   tiebreak packed bits (ceil(dim/8) bytes)
#   u32 prototype count; per prototype:
#     u8 gesture index, u8 effort index (0xFF = none), u32 n_trained, packed bits


def model_to_bytes(am: AssociativeMemory) -> bytes:
    cfg = am.config
    out = bytearray()
    out += MAGIC
    out += struct.pack("<B", FORMAT_VERSION)
    out += struct.pack("<IIII", cfg.dim, cfg.levels, cfg.n_gram, cfg.channel_count)
    out += struct.pack("<B", 0 if am.mode == GESTURE_ONLY else 1)
    ns = am.seed.namespace.encode()
    out += struct.pack("<QH", am.seed.value, len(ns)) + ns
    if cfg.channel_mins is not None:
        out += struct.pack("<B", 1)
        out += np.asarray(cfg.channel_mins, dtype="<f8").tobytes()
        out += np.asarray(cfg.channel_maxs, dtype="<f8").tobytes()
    else:
        out += struct.pack("<B", 0)
    out += am.tiebreak.bits.tobytes()
    out += struct.pack("<I", len(am.prototypes))
    for p in am.prototypes:
        effort_idx = _NO_EFFORT if p.label.effort is None else EFFORTS.index(p.label.effort)
        out += struct.pack("<BBI", GESTURES.index(p.label.gesture), effort_idx, p.n_trained)
        out += p.vector.bits.tobytes()
    return bytes(out)


def model_from_bytes(raw: bytes) -> AssociativeMemory:
    view = memoryview(raw)
    pos = 0

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise ModelFormatError("truncated model file")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if bytes(take(4)) != MAGIC:
        raise ModelFormatError("bad magic; not a model file")
    (version,) = struct.unpack("<B", take(1))
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    dim, levels, n_gram, channels = struct.unpack("<IIII", take(16))
    (mode_byte,) = struct.unpack("<B", take(1))
    seed_value, ns_len = struct.unpack("<QH", take(10))
    namespace = bytes(take(ns_len)).decode()
    (has_bounds,) = struct.unpack("<B", take(1))
    config = EncoderConfig(dim=dim, levels=levels, n_gram=n_gram, channel_count=channels)
    if has_bounds:
        mins = np.frombuffer(take(8 * channels), dtype="<f8").copy()
        maxs = np.frombuffer(take(8 * channels), dtype="<f8").copy()
        config = config.with_bounds(mins, maxs)
    n_bytes = (dim + 7) // 8
    tiebreak = Hypervector(dim, np.frombuffer(take(n_bytes), dtype=np.uint8).copy())
    am = AssociativeMemory(
        config=config,
        seed=Seed(seed_value, namespace),
        mode=GESTURE_ONLY if mode_byte == 0 else GESTURE_EFFORT,
        tiebreak=tiebreak,
    )
    (n_protos,) = struct.unpack("<I", take(4))
    for _ in range(n_protos):
        g_idx, e_idx, n_trained = struct.unpack("<BBI", take(6))
        if g_idx >= len(GESTURES) or (e_idx != _NO_EFFORT and e_idx >= len(EFFORTS)):
            raise ModelFormatError("label index out of range")
        label = ClassLabel(
            GESTURES[g_idx], None if e_idx == _NO_EFFORT else EFFORTS[e_idx]
        )
        vec = Hypervector(dim, np.frombuffer(take(n_bytes), dtype=np.uint8).copy())
        am.add(Prototype(label=label, vector=vec, n_trained=n_trained))
    if pos != len(view):
        raise ModelFormatError("trailing bytes after model payload")
    return am


def save_model(am: AssociativeMemory, path: str | Path) -> None:
    Path(path).write_bytes(model_to_bytes(am))


def load_model(path: str | Path) -> AssociativeMemory:
    return model_from_bytes(Path(path).read_bytes())
