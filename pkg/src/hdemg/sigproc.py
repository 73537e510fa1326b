"""Raw EMG feature extraction, effort measurement, calibration, segmentation.

Trials are 8 s at 1 kS/s: a 2 s transition in, a 4 s steady-state hold,
and a 2 s transition out. Features are per-channel MAV over non-overlapping
50-sample windows; contraction effort is measured as mean signal energy
across channels and mapped to a 0-100 scale by an affine calibration
anchored at rest and at maximum voluntary contraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import FeatureFrame

__all__ = [
    "CalibrationError",
    "EffortCalibration",
    "SegmentationError",
    "calibrate",
    "mav_frames",
    "mean_energy",
    "segment",
    "windowed_rms",
]

MAV_WINDOW_SAMPLES = 50
TRIAL_SECONDS = 8
TRANSITION_SECONDS = 2
HOLD_SECONDS = 4


class CalibrationError(ValueError):
    pass


class SegmentationError(ValueError):
    pass


@dataclass(frozen=True)
class EffortCalibration:
    """Affine map from mean signal energy to the 0-100 effort scale."""

    gain: float
    offset: float

    def __call__(self, energy: float) -> float:
        return self.gain * energy + self.offset


def mav_frames(samples: np.ndarray, window: int = MAV_WINDOW_SAMPLES) -> list[FeatureFrame]:
    """Mean absolute value per channel over non-overlapping windows.

    samples is channel-major (channels, n_samples); a trailing partial
    window is discarded. 8000 samples at the 50-sample default yield
    160 frames.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] < window:
        raise ValueError(f"need at least {window} samples per channel")
    n_frames = samples.shape[1] // window
    trimmed = np.abs(samples[:, : n_frames * window])
    mav = trimmed.reshape(samples.shape[0], n_frames, window).mean(axis=2)
    window_ms = window  # 1 kS/s: one sample per millisecond
    return [
        FeatureFrame(values=mav[:, i].copy(), timestamp_ms=float(i * window_ms))
        for i in range(n_frames)
    ]


def windowed_rms(
    signal: np.ndarray, fs: int = 1000, window_ms: int = 200, overlap_ms: int = 150
) -> np.ndarray:
    """RMS of one channel over sliding windows (defaults: 200 ms, 150 ms overlap)."""
    signal = np.asarray(signal, dtype=np.float64)
    win = int(window_ms * fs / 1000)
    stride = int((window_ms - overlap_ms) * fs / 1000)
    if signal.shape[0] < win:
        return np.empty(0)
    n = (signal.shape[0] - win) // stride + 1
    starts = np.arange(n) * stride
    return np.sqrt(
        np.stack([np.square(signal[s : s + win]).mean() for s in starts])
    )


def mean_energy(samples: np.ndarray, span: tuple[int, int] | None = None) -> float:
    """Mean squared amplitude over a sample span, averaged across channels."""
    samples = np.asarray(samples, dtype=np.float64)
    if span is not None:
        lo, hi = span
        if not (0 <= lo < hi <= samples.shape[1]):
            raise ValueError(f"span {span} outside trial of {samples.shape[1]} samples")
        samples = samples[:, lo:hi]
    if samples.shape[1] == 0:
        raise ValueError("empty span")
    return float(np.square(samples).mean())


def calibrate(rest_energy: float, mvc_energy: float) -> EffortCalibration:
    """Affine calibration mapping rest energy to 0 and MVC energy to 100."""
    if mvc_energy <= rest_energy:
        raise CalibrationError(
            f"MVC energy ({mvc_energy}) must exceed rest energy ({rest_energy})"
        )
    gain = 100.0 / (mvc_energy - rest_energy)
    return EffortCalibration(gain=gain, offset=-gain * rest_energy)


def segment(samples: np.ndarray, fs: int = 1000) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
    """Split an 8 s trial into (transition_in, hold, transition_out) sample ranges."""
    samples = np.asarray(samples)
    expected = TRIAL_SECONDS * fs
    if samples.shape[-1] != expected:
        raise SegmentationError(
            f"expected {expected} samples ({TRIAL_SECONDS} s at {fs} S/s), got {samples.shape[-1]}"
        )
    t = TRANSITION_SECONDS * fs
    h = HOLD_SECONDS * fs
    return (0, t), (t, t + h), (t + h, t + h + t)
