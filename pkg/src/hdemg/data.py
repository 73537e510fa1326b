"""Trial persistence and synthetic EMG generation.

Trials live one per file in a plain text format: `# key: value` header
lines (subject, gesture, effort, trial, fs, channels) followed by one
whitespace-separated row of integer samples per time step, one column per
channel. Files are UTF-8 with LF line endings, named
`subject<k>/<gesture>_<effort>_<trial>.emg`.

The synthetic generator produces a full 9-gesture x 3-effort x 5-trial
dataset from a seeded sparse channel-activation pattern per gesture, with
amplitude scaled by the effort multiplier and shaped by a ramp/hold/ramp
envelope. It serves as the desk-scale oracle for the experiment harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .am import EFFORTS, GESTURES
from .hdcore import Seed

__all__ = [
    "DataFormatError",
    "EFFORT_TARGETS",
    "SynthConfig",
    "TrialRecord",
    "load_trials",
    "save_trials",
    "synth_generate",
]

EFFORT_TARGETS = {"low": 25, "medium": 50, "high": 75}  # % of MVC

_HEADER_KEYS = ("subject", "gesture", "effort", "trial", "fs", "channels")


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TrialRecord:
    subject: int
    gesture: str
    effort: str
    trial: int
    fs: int
    samples: np.ndarray  # channel-major (channels, n_samples), integer amplitudes

    def __post_init__(self) -> None:
        if self.gesture not in GESTURES:
            raise DataFormatError(f"unknown gesture {self.gesture!r}")
        if self.effort not in EFFORTS:
            raise DataFormatError(f"unknown effort {self.effort!r}")
        if not 1 <= self.trial <= 5:
            raise DataFormatError(f"trial index must be 1..5, got {self.trial}")

    @property
    def effort_target(self) -> int:
        return EFFORT_TARGETS[self.effort]

    def filename(self) -> str:
        return f"subject{self.subject}/{self.gesture}_{self.effort}_{self.trial}.emg"


def save_trials(records: list[TrialRecord], path: str | Path) -> None:
    """Write one .emg file per trial under path, deterministic byte-for-byte."""
    root = Path(path)
    for rec in records:
        target = root / rec.filename()
        target.parent.mkdir(parents=True, exist_ok=True)
        lines = [
            f"# subject: {rec.subject}",
            f"# gesture: {rec.gesture}",
            f"# effort: {rec.effort}",
            f"# trial: {rec.trial}",
            f"# fs: {rec.fs}",
            f"# channels: {rec.samples.shape[0]}",
        ]
        body = rec.samples.T  # one row per sample
        lines.extend(" ".join(str(int(v)) for v in row) for row in body)
        target.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _parse_trial_file(path: Path) -> TrialRecord:
    header: dict[str, str] = {}
    rows: list[list[int]] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                try:
                    key, value = line[1:].split(":", 1)
                except ValueError:
                    raise DataFormatError(f"{path}:{lineno}: malformed header line")
                header[key.strip()] = value.strip()
                continue
            try:
                rows.append([int(tok) for tok in line.split()])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-numeric sample")
            if len(rows[-1]) != len(rows[0]):
                raise DataFormatError(f"{path}:{lineno}: inconsistent column count")
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise DataFormatError(f"{path}: missing header keys: {', '.join(missing)}")
    channels = int(header["channels"])
    if not rows:
        raise DataFormatError(f"{path}: no sample rows")
    if len(rows[0]) != channels:
        raise DataFormatError(
            f"{path}: header declares {channels} channels but rows have {len(rows[0])}"
        )
    samples = np.array(rows, dtype=np.int32).T
    try:
        return TrialRecord(
            subject=int(header["subject"]),
            gesture=header["gesture"],
            effort=header["effort"],
            trial=int(header["trial"]),
            fs=int(header["fs"]),
            samples=samples,
        )
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def load_trials(path: str | Path) -> list[TrialRecord]:
    """Load every .emg file under path (recursively), sorted by filename."""
    root = Path(path)
    if not root.exists():
        raise DataFormatError(f"no such dataset directory: {root}")
    return [_parse_trial_file(p) for p in sorted(root.rglob("*.emg"))]


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic dataset parameters.

    Effort multipliers default to the 25/50/75% MVC targets. The defaults
    (pattern pool, noise, jitter) are tuned so that within-context accuracy
    stays high while low-vs-high cross-context testing degrades visibly and
    merged models recover most of the loss.
    """

    seed: int = 7
    subject: int = 1
    channel_count: int = 64
    fs: int = 1000
    duration_s: int = 8
    pattern_density: float = 0.2
    pattern_pool: int = 24
    effort_multipliers: tuple[float, float, float] = (0.25, 0.50, 0.75)
    mvc_amplitude: float = 400.0
    noise_std: float = 15.0
    ramp_s: float = 2.0
    trials_per_class: int = 5
    trial_jitter: float = 0.03
    channel_jitter: float = 0.15

    def __post_init__(self) -> None:
        lo, med, hi = self.effort_multipliers
        all_zero = lo == med == hi == 0.0
        if not all_zero and not (0.0 <= lo < med < hi):
            raise ValueError("effort multipliers must be strictly increasing (or all zero)")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if not 0 < self.pattern_density <= 1:
            raise ValueError("pattern_density must be in (0, 1]")


def _gesture_patterns(config: SynthConfig, root: Seed) -> np.ndarray:
    """Per-gesture channel weight vectors: sparse, with bounded pairwise overlap.

    Active channels are drawn from a shared pool so gestures overlap the
    way neighboring forearm muscles do; the weight profile over the shared
    channels is what distinguishes gestures. Pairwise overlap stays below
    the pattern size (never two identical channel sets), so zero-noise data
    remains separable through the distinct weights.
    """
    n_active = max(1, round(config.pattern_density * config.channel_count))
    pool = min(max(config.pattern_pool, n_active + 1), config.channel_count)
    pool_channels = root.child("pool").rng().choice(
        config.channel_count, size=pool, replace=False
    )
    chosen: list[np.ndarray] = []
    weights = np.zeros((len(GESTURES), config.channel_count))
    for gi in range(len(GESTURES)):
        for attempt in range(200):
            rng = root.child("pattern", gi * 1000 + attempt).rng()
            channels = pool_channels[rng.choice(pool, size=n_active, replace=False)]
            if all(len(np.intersect1d(channels, prev)) < n_active for prev in chosen):
                break
        else:
            raise ValueError("could not draw gesture patterns with bounded overlap")
        chosen.append(channels)
        weights[gi, channels] = rng.uniform(0.2, 1.0, size=n_active)
    return weights


def synth_generate(config: SynthConfig) -> list[TrialRecord]:
    """Generate the full synthetic dataset: 9 gestures x 3 efforts x 5 trials."""
    root = Seed(config.seed, "synth")
    weights = _gesture_patterns(config, root)
    n_samples = config.fs * config.duration_s
    t = np.arange(n_samples)
    ramp = config.ramp_s * config.fs
    envelope = np.clip(np.minimum(t / ramp, (n_samples - t) / ramp), 0.0, 1.0)

    records = []
    for gi, gesture in enumerate(GESTURES):
        for ei, effort in enumerate(EFFORTS):
            mult = config.effort_multipliers[ei]
            for trial in range(1, config.trials_per_class + 1):
                rng = root.child("trial", (gi * len(EFFORTS) + ei) * 10 + trial).rng()
                jitter = 1.0 + rng.normal(0.0, config.trial_jitter)
                # per-trial wobble of the channel weight profile (electrode and
                # motor-unit variability between repetitions of the same gesture)
                wobble = np.clip(
                    1.0 + rng.normal(0.0, config.channel_jitter, config.channel_count),
                    0.0,
                    None,
                )
                std = (
                    config.mvc_amplitude
                    * mult
                    * jitter
                    * (weights[gi] * wobble)[:, None]
                    * envelope[None, :]
                )
                signal = rng.normal(size=(config.channel_count, n_samples)) * std
                if config.noise_std > 0:
                    signal += rng.normal(
                        0.0, config.noise_std, size=(config.channel_count, n_samples)
                    )
                records.append(
                    TrialRecord(
                        subject=config.subject,
                        gesture=gesture,
                        effort=effort,
                        trial=trial,
                        fs=config.fs,
                        samples=np.rint(signal).astype(np.int32),
                    )
                )
    return records
