"""Naive array-of-integers reference implementation.

Deliberately dumb: plain Python lists of -1/+1, no packing, no vectorized
shortcuts. Used as the independent oracle for the bit-packed kernels and
the encoder fast paths.
"""

from __future__ import annotations


def bind(a: list[int], b: list[int]) -> list[int]:
    assert len(a) == len(b)
    return [x * y for x, y in zip(a, b)]


def bundle(vectors: list[list[int]]) -> list[int]:
    out = [0] * len(vectors[0])
    for v in vectors:
        for i, x in enumerate(v):
            out[i] += x
    return out


def bipolarize(counts: list[int], tiebreak: list[int]) -> list[int]:
    return [
        1 if c > 0 else (-1 if c < 0 else t) for c, t in zip(counts, tiebreak)
    ]


def permute(a: list[int], k: int) -> list[int]:
    d = len(a)
    k = k % d
    return [a[(i - k) % d] for i in range(d)]


def cosine(a: list[int], b: list[int]) -> float:
    return sum(x * y for x, y in zip(a, b)) / len(a)


def hamming(a: list[int], b: list[int]) -> int:
    return sum(1 for x, y in zip(a, b) if x != y)


def merge_half(a: list[int], b: list[int], take_a_indices: set[int]) -> list[int]:
    return [a[i] if i in take_a_indices else b[i] for i in range(len(a))]


def quantize(value: float, vmin: float, vmax: float, levels: int) -> int:
    v = min(max(value, vmin), vmax)
    level = int(((v - vmin) / (vmax - vmin)) * levels)
    return min(level, levels - 1)


def encode_spatial(
    values: list[float],
    im: list[list[int]],
    cim: list[list[int]],
    mins: list[float],
    maxs: list[float],
    levels: int,
    tiebreak: list[int],
) -> list[int]:
    bound = [
        bind(im[c], cim[quantize(values[c], mins[c], maxs[c], levels)])
        for c in range(len(values))
    ]
    return bipolarize(bundle(bound), tiebreak)


def encode_temporal(spatials: list[list[int]]) -> list[int]:
    n = len(spatials)
    out = permute(spatials[0], n - 1)
    for j in range(1, n):
        out = bind(out, permute(spatials[j], n - 1 - j))
    return out


def encode_stream(
    frames: list[list[float]],
    im: list[list[int]],
    cim: list[list[int]],
    mins: list[float],
    maxs: list[float],
    levels: int,
    n_gram: int,
    tiebreak: list[int],
) -> list[list[int]]:
    spatials = [
        encode_spatial(f, im, cim, mins, maxs, levels, tiebreak) for f in frames
    ]
    return [
        encode_temporal(spatials[i : i + n_gram])
        for i in range(len(frames) - n_gram + 1)
    ]


def signs_list(hv) -> list[int]:
    """Convert a packed Hypervector to a plain list of ints."""
    return [int(x) for x in hv.signs()]


def take_a_indices(seed, dim: int) -> set[int]:
    """The index half that merge_half takes from its first argument."""
    return set(int(i) for i in seed.rng().permutation(dim)[: dim // 2])
