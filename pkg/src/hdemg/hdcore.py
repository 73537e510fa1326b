"""Bipolar hypervector algebra on bit-packed storage.

Hypervectors are D-dimensional vectors with elements in {-1, +1}, stored
bit-packed (+1 <-> bit 1, little-endian bit order within each byte).
Operations provided:

    random_hypervector  seeded balanced random vector (exactly D/2 ones)
    bind                element-wise product (XNOR on packed bits)
    bundle              element-wise sum into an integer accumulator
    bipolarize          sign threshold with a seeded tiebreak vector
    permute             circular shift by k positions
    cosine / hamming    similarity / distance
    merge_half          seeded half-and-half element selection

All seeded operations are bit-reproducible: the same Seed always yields
the same output, on any platform.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Accumulator",
    "DimensionMismatchError",
    "Hypervector",
    "InvalidDimensionError",
    "Seed",
    "bind",
    "bipolarize",
    "bundle",
    "cosine",
    "hamming",
    "merge_half",
    "permute",
    "random_hypervector",
]


class InvalidDimensionError(ValueError):
    """Raised for dimensions that are zero, negative, or odd where evenness is required."""


class DimensionMismatchError(ValueError):
    """Raised when two operands have different dimensions."""


@dataclass(frozen=True)
class Seed:
    """Namespaced 64-bit seed with deterministic child derivation.

    Child seeds are derived by hashing (parent value, namespace, index),
    so distinct (namespace, index) pairs never collide in practice.
    """

    value: int
    namespace: str = "root"

    def child(self, namespace: str, index: int = 0) -> "Seed":
        digest = hashlib.sha256(
            f"{self.value}:{self.namespace}:{namespace}:{index}".encode()
        ).digest()
        return Seed(
            value=int.from_bytes(digest[:8], "little"),
            namespace=f"{self.namespace}/{namespace}[{index}]",
        )

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.value)


def _n_bytes(dim: int) -> int:
    return (dim + 7) // 8


def _tail_mask(dim: int) -> np.ndarray:
    """Byte mask that zeroes the unused trailing bits of the last byte."""
    mask = np.full(_n_bytes(dim), 0xFF, dtype=np.uint8)
    rem = dim % 8
    if rem:
        mask[-1] = (1 << rem) - 1
    return mask


@dataclass(frozen=True)
class Hypervector:
    """Bit-packed bipolar vector. +1 <-> bit 1; unused trailing bits are zero."""

    dim: int
    bits: np.ndarray  # uint8, ceil(dim/8) bytes, little-endian bit order

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise InvalidDimensionError(f"dimension must be positive, got {self.dim}")
        if self.bits.dtype != np.uint8 or self.bits.shape != (_n_bytes(self.dim),):
            raise ValueError("bits must be a uint8 array of ceil(dim/8) bytes")
        self.bits.setflags(write=False)

    @classmethod
    def from_signs(cls, signs: np.ndarray) -> "Hypervector":
        signs = np.asarray(signs)
        if not np.all(np.abs(signs) == 1):
            raise ValueError("elements must be exactly -1 or +1")
        bits = np.packbits(signs > 0, bitorder="little")
        return cls(dim=signs.shape[0], bits=bits)

    def signs(self) -> np.ndarray:
        """Unpack to an int8 array of {-1, +1}."""
        u = np.unpackbits(self.bits, count=self.dim, bitorder="little")
        return (u.astype(np.int8) << 1) - 1

    def popcount(self) -> int:
        """Number of +1 elements."""
        return int(np.bitwise_count(self.bits).sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypervector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash((self.dim, self.bits.tobytes()))


@dataclass
class Accumulator:
    """Integer accumulator for bundling hypervectors before bipolarization."""

    dim: int
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    n_bundled: int = 0

    def __post_init__(self) -> None:
        if self.counts is None:
            self.counts = np.zeros(self.dim, dtype=np.int64)
        elif self.counts.shape != (self.dim,):
            raise DimensionMismatchError("counts length must equal dim")

    def copy(self) -> "Accumulator":
        return Accumulator(self.dim, self.counts.copy(), self.n_bundled)


def _check_dims(a: Hypervector, b: Hypervector) -> None:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def random_hypervector(seed: Seed, dim: int) -> Hypervector:
    """Balanced seeded random hypervector: exactly dim/2 elements are +1.

    Positions of the +1 elements come from a seeded uniform shuffle, so the
    same (seed, dim) always produces bit-identical output.
    """
    if dim < 2 or dim % 2 != 0:
        raise InvalidDimensionError(f"dimension must be even and >= 2, got {dim}")
    perm = seed.rng().permutation(dim)
    signs = np.full(dim, -1, dtype=np.int8)
    signs[perm[: dim // 2]] = 1
    return Hypervector.from_signs(signs)


def bind(a: Hypervector, b: Hypervector) -> Hypervector:
    """Element-wise product. On packed bits this is XNOR (equal bits -> +1)."""
    _check_dims(a, b)
    bits = np.bitwise_and(np.bitwise_not(np.bitwise_xor(a.bits, b.bits)), _tail_mask(a.dim))
    return Hypervector(a.dim, bits)


def bundle(acc: Accumulator, v: Hypervector) -> Accumulator:
    """Add v element-wise into the accumulator (mutates and returns acc)."""
    if acc.dim != v.dim:
        raise DimensionMismatchError(f"dimension mismatch: {acc.dim} vs {v.dim}")
    acc.counts += v.signs()
    acc.n_bundled += 1
    return acc


def bipolarize(acc: Accumulator, tiebreak: Hypervector) -> Hypervector:
    """Sign-threshold the accumulator; zero counts take the tiebreak element."""
    if acc.dim != tiebreak.dim:
        raise DimensionMismatchError(f"dimension mismatch: {acc.dim} vs {tiebreak.dim}")
    signs = np.where(
        acc.counts > 0, np.int8(1), np.where(acc.counts < 0, np.int8(-1), tiebreak.signs())
    ).astype(np.int8)
    return Hypervector.from_signs(signs)


def permute(a: Hypervector, k: int) -> Hypervector:
    """Circular shift by k positions: out[i] = a[(i - k) mod D]."""
    k = k % a.dim
    if k == 0:
        return a
    u = np.unpackbits(a.bits, count=a.dim, bitorder="little")
    return Hypervector(a.dim, np.packbits(np.roll(u, k), bitorder="little"))


def hamming(a: Hypervector, b: Hypervector) -> int:
    """Number of positions where a and b differ."""
    _check_dims(a, b)
    return int(np.bitwise_count(np.bitwise_xor(a.bits, b.bits)).sum())


def cosine(a: Hypervector, b: Hypervector) -> float:
    """Normalized dot product, in [-1, +1]. Equals (D - 2*hamming) / D."""
    return (a.dim - 2 * hamming(a, b)) / a.dim


def merge_half(a: Hypervector, b: Hypervector, seed: Seed) -> Hypervector:
    """Take a seeded random half of the elements from a, the rest from b.

    Exactly D/2 indices, chosen by a seeded shuffle, come from a; the
    complement comes from b. Deterministic given the seed.
    """
    _check_dims(a, b)
    if a.dim % 2 != 0:
        raise InvalidDimensionError(f"dimension must be even, got {a.dim}")
    take_a = np.zeros(a.dim, dtype=bool)
    take_a[seed.rng().permutation(a.dim)[: a.dim // 2]] = True
    mask = np.packbits(take_a, bitorder="little")
    bits = np.bitwise_or(
        np.bitwise_and(a.bits, mask),
        np.bitwise_and(b.bits, np.bitwise_and(np.bitwise_not(mask), _tail_mask(a.dim))),
    )
    return Hypervector(a.dim, bits)
