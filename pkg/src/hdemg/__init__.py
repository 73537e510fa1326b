"""Hyperdimensional-computing toolkit for EMG gesture classification
under varying muscle contraction effort."""

from .am import (
    EFFORTS,
    GESTURES,
    AssociativeMemory,
    ClassLabel,
    Classification,
    Prototype,
    add_effort_classes,
    classify,
    classify_gesture_only,
    classify_trial,
    load_model,
    merge_models,
    save_model,
    train_class,
    train_multicontext,
)
from .data import SynthConfig, TrialRecord, load_trials, save_trials, synth_generate
from .encoder import (
    ContinuousItemMemory,
    EncoderConfig,
    FeatureFrame,
    ItemMemory,
    build_item_memories,
    encode_spatial,
    encode_stream,
    encode_temporal,
    quantize,
)
from .experiments import (
    ExperimentReport,
    crossval,
    emit_report,
    experiment_all_contexts,
    experiment_context_pair,
    experiment_effort_classes,
)
from .hdcore import (
    Accumulator,
    Hypervector,
    Seed,
    bind,
    bipolarize,
    bundle,
    cosine,
    hamming,
    merge_half,
    permute,
    random_hypervector,
)
from .sigproc import calibrate, mav_frames, mean_energy, segment, windowed_rms

__version__ = "0.1.0"
