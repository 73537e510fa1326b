"""Spatiotemporal hypervector encoding of multichannel feature frames.

Each feature frame (one MAV value per electrode channel) is encoded
spatially by binding a per-channel random hypervector (item memory) with
a quantized-magnitude hypervector (continuous item memory), bundling
across channels, and bipolarizing. Consecutive spatial vectors are then
combined temporally as a permuted n-gram: the most recent frame is
unpermuted, the frame j steps back is rotated by j positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .hdcore import (
    DimensionMismatchError,
    Hypervector,
    Seed,
    bind,
    permute,
    random_hypervector,
)

__all__ = [
    "ContinuousItemMemory",
    "EncoderConfig",
    "FeatureFrame",
    "ItemMemory",
    "bounds_from_frames",
    "build_item_memories",
    "encode_spatial",
    "encode_stream",
    "encode_stream_signs",
    "encode_temporal",
    "quantize",
]


class EncoderConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureFrame:
    """One feature vector: MAV per channel, plus the frame timestamp."""

    values: np.ndarray  # nonnegative reals, one per channel
    timestamp_ms: float = 0.0


@dataclass(frozen=True, eq=False)
class EncoderConfig:
    """Encoding parameters. Defaults: D=10,000, 21 levels, 5-gram, 64 channels.

    At the default 50 ms feature frames, n_gram=5 spans a 250 ms temporal
    window. channel_mins/channel_maxs are the per-channel quantization
    bounds, fitted on training data only; None until fitted.
    """

    dim: int = 10_000
    levels: int = 21
    n_gram: int = 5
    channel_count: int = 64
    channel_mins: np.ndarray | None = None
    channel_maxs: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.dim < 2 or self.dim % 2 != 0:
            raise EncoderConfigError(f"dim must be even and >= 2, got {self.dim}")
        if self.levels < 2:
            raise EncoderConfigError(f"levels must be >= 2, got {self.levels}")
        if self.channel_count < 1:
            raise EncoderConfigError(f"channel_count must be >= 1, got {self.channel_count}")
        if self.n_gram < 1:
            raise EncoderConfigError(f"n_gram must be >= 1, got {self.n_gram}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EncoderConfig):
            return NotImplemented

        def same(x, y):
            if (x is None) != (y is None):
                return False
            return x is None or bool(np.array_equal(x, y))

        return (
            (self.dim, self.levels, self.n_gram, self.channel_count)
            == (other.dim, other.levels, other.n_gram, other.channel_count)
            and same(self.channel_mins, other.channel_mins)
            and same(self.channel_maxs, other.channel_maxs)
        )

    def __hash__(self) -> int:
        return hash((self.dim, self.levels, self.n_gram, self.channel_count))

    def with_bounds(self, mins: np.ndarray, maxs: np.ndarray) -> "EncoderConfig":
        mins = np.asarray(mins, dtype=np.float64)
        maxs = np.asarray(maxs, dtype=np.float64)
        if mins.shape != (self.channel_count,) or maxs.shape != (self.channel_count,):
            raise EncoderConfigError("bounds length must equal channel_count")
        # Degenerate (constant) channels get a hair of width so quantize stays valid.
        maxs = np.where(maxs > mins, maxs, mins + 1e-9)
        return replace(self, channel_mins=mins, channel_maxs=maxs)

    def require_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.channel_mins is None or self.channel_maxs is None:
            raise EncoderConfigError("normalization bounds not fitted")
        return self.channel_mins, self.channel_maxs


@dataclass
class ItemMemory:
    """One seeded random hypervector per channel."""

    vectors: list[Hypervector]
    seed: Seed
    _signs: np.ndarray | None = field(default=None, repr=False)

    def sign_matrix(self) -> np.ndarray:
        if self._signs is None:
            self._signs = np.stack([v.signs() for v in self.vectors])
        return self._signs


@dataclass
class ContinuousItemMemory:
    """Level-indexed hypervectors with similarity decaying linearly in level distance."""

    vectors: list[Hypervector]
    seed: Seed
    _signs: np.ndarray | None = field(default=None, repr=False)

    def sign_matrix(self) -> np.ndarray:
        if self._signs is None:
            self._signs = np.stack([v.signs() for v in self.vectors])
        return self._signs


def build_item_memories(seed: Seed, config: EncoderConfig) -> tuple[ItemMemory, ContinuousItemMemory]:
    """Construct the channel item memory and the level continuous item memory.

    The CiM starts from a random level-0 vector and flips a fresh slice of a
    seeded index permutation at each step, D/2 flips in total, so that
    cosine(level_i, level_j) decays linearly to 0 at |i-j| = levels-1.
    """
    im_seed = seed.child("im")
    im = ItemMemory(
        vectors=[
            random_hypervector(im_seed.child("channel", c), config.dim)
            for c in range(config.channel_count)
        ],
        seed=im_seed,
    )

    cim_seed = seed.child("cim")
    base = random_hypervector(cim_seed.child("base"), config.dim).signs()
    flip_order = cim_seed.child("flips").rng().permutation(config.dim)
    steps = config.levels - 1
    levels = []
    for i in range(config.levels):
        boundary = int(round(i * (config.dim / 2) / steps))
        signs = base.copy()
        signs[flip_order[:boundary]] *= -1
        levels.append(Hypervector.from_signs(signs))
    cim = ContinuousItemMemory(vectors=levels, seed=cim_seed)
    return im, cim


def quantize(value: float, vmin: float, vmax: float, levels: int) -> int:
    """Clamp value to [vmin, vmax] and map linearly onto {0, ..., levels-1}."""
    if vmin >= vmax:
        raise EncoderConfigError(f"invalid quantization bounds: [{vmin}, {vmax}]")
    v = min(max(value, vmin), vmax)
    return min(int(((v - vmin) / (vmax - vmin)) * levels), levels - 1)


def _quantize_matrix(values: np.ndarray, config: EncoderConfig) -> np.ndarray:
    """Vectorized quantize over a (frames, channels) value matrix."""
    mins, maxs = config.require_bounds()
    scaled = (np.clip(values, mins, maxs) - mins) / (maxs - mins) * config.levels
    return np.minimum(scaled.astype(np.int64), config.levels - 1)


def bounds_from_frames(frames: list[FeatureFrame]) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel (min, max) over a set of frames. Fit on training data only."""
    values = np.stack([f.values for f in frames])
    return values.min(axis=0), values.max(axis=0)


def _spatial_signs(
    values: np.ndarray,
    im: ItemMemory,
    cim: ContinuousItemMemory,
    config: EncoderConfig,
    tiebreak: Hypervector,
) -> np.ndarray:
    """Spatial encodings of a (frames, channels) matrix as a (frames, D) int8 matrix."""
    levels = _quantize_matrix(values, config)
    im_signs = im.sign_matrix()
    cim_signs = cim.sign_matrix()
    acc = np.zeros((values.shape[0], config.dim), dtype=np.int32)
    for c in range(config.channel_count):
        acc += im_signs[c] * cim_signs[levels[:, c]]
    tb = tiebreak.signs()
    return np.where(acc > 0, np.int8(1), np.where(acc < 0, np.int8(-1), tb)).astype(np.int8)


def encode_spatial(
    frame: FeatureFrame,
    im: ItemMemory,
    cim: ContinuousItemMemory,
    config: EncoderConfig,
    tiebreak: Hypervector,
) -> Hypervector:
    """Bundle bind(im[ch], cim[level(ch)]) over all channels and bipolarize."""
    values = np.asarray(frame.values, dtype=np.float64)
    if values.shape != (config.channel_count,):
        raise DimensionMismatchError(
            f"frame has {values.shape[0]} channels, expected {config.channel_count}"
        )
    signs = _spatial_signs(values[None, :], im, cim, config, tiebreak)[0]
    return Hypervector.from_signs(signs)


def encode_temporal(spatials: list[Hypervector], config: EncoderConfig) -> Hypervector:
    """Permuted n-gram: bind permute(spatials[j], N-1-j) over j; newest unpermuted."""
    if len(spatials) != config.n_gram:
        raise ValueError(f"expected {config.n_gram} spatial vectors, got {len(spatials)}")
    n = config.n_gram
    out = permute(spatials[0], n - 1)
    for j in range(1, n):
        out = bind(out, permute(spatials[j], n - 1 - j))
    return out


def encode_stream_signs(
    values: np.ndarray,
    im: ItemMemory,
    cim: ContinuousItemMemory,
    config: EncoderConfig,
    tiebreak: Hypervector,
) -> np.ndarray:
    """Spatiotemporal encodings of a (frames, channels) matrix.

    Returns a (frames - N + 1, D) int8 sign matrix; empty when there are
    fewer than N frames. This is the vectorized hot path; it is bit-exact
    with composing encode_spatial and encode_temporal window by window.
    """
    n = config.n_gram
    n_frames = values.shape[0]
    if n_frames < n:
        return np.empty((0, config.dim), dtype=np.int8)
    spatial = _spatial_signs(values, im, cim, config, tiebreak)
    n_windows = n_frames - n + 1
    out = np.roll(spatial[:n_windows], n - 1, axis=1)
    for j in range(1, n):
        out = out * np.roll(spatial[j : j + n_windows], n - 1 - j, axis=1)
    return out.astype(np.int8)


@dataclass(frozen=True)
class EncodedStream:
    vectors: list[Hypervector]
    insufficient_frames: bool


def encode_stream(
    frames: list[FeatureFrame],
    im: ItemMemory,
    cim: ContinuousItemMemory,
    config: EncoderConfig,
    tiebreak: Hypervector,
) -> EncodedStream:
    """Sliding-window (stride 1) spatiotemporal encoding of a frame sequence."""
    values = np.stack([np.asarray(f.values, dtype=np.float64) for f in frames]) if frames else np.empty(
        (0, config.channel_count)
    )
    signs = encode_stream_signs(values, im, cim, config, tiebreak)
    return EncodedStream(
        vectors=[Hypervector.from_signs(s) for s in signs],
        insufficient_frames=len(frames) < config.n_gram,
    )
