"""Blind, key-seeded invisible watermark codec.

Embeds a d-bit payload into the luma plane of an image through per-block
2D DCT-II coefficient differentials. A secret 64-bit key derives a
pseudo-random assignment of (block, coefficient) slots and modulation signs
to payload bits; each bit is carried redundantly by several slots. Each
slot pairs one mid-band coefficient with a dedicated reference coefficient
from just above the band, and the bit is encoded in the sign of their
difference:

    sign * (c_band - c_ref) >= +alpha   encodes 1
    sign * (c_band - c_ref) <= -alpha   encodes 0

Embedding adjusts each pair symmetrically by the minimum amount that
satisfies its constraint, so a clean roundtrip recovers the payload exactly
regardless of image content, while unwatermarked images decode to
near-chance bits. Decoding sums the signed differentials per bit and
thresholds at zero.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.fft import dctn, idctn

from .errors import CapacityError, ConfigError, DimensionError
from .image import ImageBuffer

# Smallest image side the codec accepts.
MIN_SIDE = 32


class BitPayload:
    """An ordered sequence of d payload bits.

    On disk: a text file of d characters in {0,1} plus a trailing newline.
    """

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("payload must be a non-empty 1-D bit sequence")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("payload bits must be 0 or 1")
        self.bits = arr

    @property
    def d(self) -> int:
        return int(self.bits.size)

    @classmethod
    def random(cls, d: int, rng: np.random.Generator) -> "BitPayload":
        return cls(rng.integers(0, 2, size=d, dtype=np.uint8))

    @classmethod
    def from_text(cls, text: str) -> "BitPayload":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ValueError("payload text must be a string of 0/1 characters")
        return cls(np.frombuffer(text.encode(), dtype=np.uint8) - ord("0"))

    def to_text(self) -> str:
        return "".join("1" if b else "0" for b in self.bits) + "\n"

    @classmethod
    def load(cls, path) -> "BitPayload":
        return cls.from_text(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitPayload):
            return NotImplemented
        return bool(np.array_equal(self.bits, other.bits))

    def __hash__(self):  # pragma: no cover
        raise TypeError("BitPayload is unhashable")

    def __len__(self) -> int:
        return self.d

    def __repr__(self) -> str:
        return f"BitPayload(d={self.d})"


@dataclass(frozen=True)
class WatermarkKey:
    """Secret seed deriving the slot assignment. Same seed, same slots."""

    seed: int

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise ConfigError("key seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class CodecConfig:
    """Embedding parameters.

    band holds zig-zag coefficient indices (of the block_size x block_size
    zig-zag order) that carry payload slots. Each band index i is paired
    with reference index max(band)+1+rank(i), so the band plus its
    references must fit inside the block.
    """

    d: int = 100
    block_size: int = 8
    alpha: float = 6.0
    band: tuple[int, ...] = tuple(range(3, 21))
    redundancy: int = 8

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("d must be positive")
        if self.block_size < 4:
            raise ConfigError("block_size must be at least 4")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if self.redundancy < 1:
            raise ConfigError("redundancy must be at least 1")
        band = tuple(sorted(set(int(z) for z in self.band)))
        if band != tuple(self.band):
            raise ConfigError("band indices must be sorted and unique")
        if not band:
            raise ConfigError("band must not be empty")
        n_coeff = self.block_size * self.block_size
        if band[0] < 1:
            raise ConfigError("band must not include the DC coefficient")
        if band[-1] + len(band) >= n_coeff:
            raise ConfigError(
                "band too wide: no room for reference coefficients above it"
            )

    def fingerprint(self) -> str:
        """Short stable hash identifying this configuration."""
        text = (
            f"d={self.d};bs={self.block_size};alpha={self.alpha!r};"
            f"band={','.join(map(str, self.band))};red={self.redundancy}"
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


DEFAULT_CONFIG = CodecConfig()


@dataclass
class SoftDecode:
    """Per-bit correlation scores and their sign-threshold hard decisions."""

    scores: np.ndarray
    bits: BitPayload


@dataclass
class SlotAssignment:
    """Key-derived slot ownership: arrays of shape (d, redundancy).

    blocks[j, r]   index of the block carrying slot r of bit j
    band_pos[j, r] zig-zag index (within the band) of the adjusted coefficient
    ref_pos[j, r]  zig-zag index of the paired read-only reference coefficient
    signs[j, r]    modulation sign in {-1, +1}
    """

    n_blocks: int
    blocks: np.ndarray
    band_pos: np.ndarray
    ref_pos: np.ndarray
    signs: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SlotAssignment):
            return NotImplemented
        return (
            self.n_blocks == other.n_blocks
            and bool(np.array_equal(self.blocks, other.blocks))
            and bool(np.array_equal(self.band_pos, other.band_pos))
            and bool(np.array_equal(self.ref_pos, other.ref_pos))
            and bool(np.array_equal(self.signs, other.signs))
        )


@lru_cache(maxsize=8)
def zigzag_order(block_size: int) -> np.ndarray:
    """Flat (row-major) coefficient indices in zig-zag scan order."""
    order = []
    for diag in range(2 * block_size - 1):
        rows = range(max(0, diag - block_size + 1), min(diag, block_size - 1) + 1)
        if diag % 2 == 0:
            rows = reversed(rows)  # even diagonals run bottom-left to top-right
        for r in rows:
            order.append(r * block_size + (diag - r))
    return np.array(order, dtype=np.int64)


def validate_dims(width: int, height: int, config: CodecConfig) -> None:
    bs = config.block_size
    if width < MIN_SIDE or height < MIN_SIDE:
        raise DimensionError(
            f"image {width}x{height} below the minimum side of {MIN_SIDE}"
        )
    if width % bs or height % bs:
        raise DimensionError(
            f"image {width}x{height} is not a multiple of the block size {bs}"
        )


def derive_slots(
    key: WatermarkKey, width: int, height: int, config: CodecConfig = DEFAULT_CONFIG
) -> SlotAssignment:
    """Deterministically assign disjoint coefficient slots to payload bits.

    Capacity: every block contributes len(band) slots, and each payload bit
    needs `redundancy` of them, so n_blocks * len(band) must reach
    d * redundancy. Slots are disjoint across bits; re-calling with equal
    inputs returns an identical assignment.
    """
    validate_dims(width, height, config)
    bs = config.block_size
    n_blocks = (width // bs) * (height // bs)
    m = len(config.band)
    needed = config.d * config.redundancy
    if n_blocks * m < needed:
        raise CapacityError(
            f"capacity {n_blocks} blocks x {m} band coefficients = {n_blocks * m} "
            f"slots < d*redundancy = {needed}"
        )
    rng = np.random.default_rng(np.random.SeedSequence(key.seed))
    perm = rng.permutation(n_blocks * m)[:needed]
    rng_signs = rng.integers(0, 2, size=needed, dtype=np.int8) * 2 - 1

    band = np.asarray(config.band, dtype=np.int64)
    refs = band[-1] + 1 + np.arange(m, dtype=np.int64)
    shape = (config.d, config.redundancy)
    return SlotAssignment(
        n_blocks=n_blocks,
        blocks=(perm // m).reshape(shape),
        band_pos=band[perm % m].reshape(shape),
        ref_pos=refs[perm % m].reshape(shape),
        signs=rng_signs.reshape(shape),
    )


def _as_blocks(plane: np.ndarray, bs: int) -> np.ndarray:
    h, w = plane.shape
    return (
        plane.reshape(h // bs, bs, w // bs, bs)
        .transpose(0, 2, 1, 3)
        .reshape(-1, bs, bs)
    )


def _from_blocks(blocks: np.ndarray, h: int, w: int, bs: int) -> np.ndarray:
    return (
        blocks.reshape(h // bs, w // bs, bs, bs)
        .transpose(0, 2, 1, 3)
        .reshape(h, w)
    )


def _block_dct_flat(luma: np.ndarray, bs: int) -> np.ndarray:
    coeffs = dctn(_as_blocks(luma, bs), axes=(1, 2), norm="ortho")
    return coeffs.reshape(coeffs.shape[0], bs * bs)


def _slot_flat_indices(slots: SlotAssignment, bs: int):
    zz = zigzag_order(bs)
    return zz[slots.band_pos], zz[slots.ref_pos]


# Bounded adjust -> clamp -> round passes; residual error after the last
# pass is accepted (covered by slot redundancy).
_EMBED_PASSES = 3


def embed(
    image: ImageBuffer,
    payload: BitPayload,
    key: WatermarkKey,
    config: CodecConfig = DEFAULT_CONFIG,
) -> ImageBuffer:
    """Embed the payload; output has identical dimensions and channels."""
    if payload.d != config.d:
        raise ConfigError(f"payload length {payload.d} != config.d {config.d}")
    slots = derive_slots(key, image.width, image.height, config)
    bs = config.block_size
    pos1, pos2 = _slot_flat_indices(slots, bs)
    # Modulation target: +1 pushes the differential to +alpha, -1 to -alpha.
    targets = slots.signs.astype(np.float64) * (
        2.0 * payload.bits.astype(np.float64)[:, None] - 1.0
    )

    current = image
    for _ in range(_EMBED_PASSES):
        coeffs = _block_dct_flat(current.luma(), bs)
        c1 = coeffs[slots.blocks, pos1]
        c2 = coeffs[slots.blocks, pos2]
        shortfall = config.alpha - targets * (c1 - c2)
        if np.all(shortfall <= 1e-9):
            break
        step = targets * np.maximum(shortfall, 0.0) / 2.0
        coeffs[slots.blocks, pos1] = c1 + step
        coeffs[slots.blocks, pos2] = c2 - step
        blocks = idctn(coeffs.reshape(-1, bs, bs), axes=(1, 2), norm="ortho")
        new_luma = _from_blocks(blocks, image.height, image.width, bs)
        current = image.with_luma(new_luma)
    return current


def decode(
    image: ImageBuffer, key: WatermarkKey, config: CodecConfig = DEFAULT_CONFIG
) -> SoftDecode:
    """Recover per-bit scores and hard bits; near-chance on unmarked images."""
    slots = derive_slots(key, image.width, image.height, config)
    bs = config.block_size
    pos1, pos2 = _slot_flat_indices(slots, bs)
    coeffs = _block_dct_flat(image.luma(), bs)
    diffs = coeffs[slots.blocks, pos1] - coeffs[slots.blocks, pos2]
    scores = np.sum(slots.signs * diffs, axis=1)
    bits = BitPayload((scores > 0).astype(np.uint8))
    return SoftDecode(scores=scores, bits=bits)
