"""Tagging primitives: Carter-Wegman MAC (polynomial universal hash fed
into a keyed PRF), a tiny-width toy MAC for exhaustive experiments, and
the legacy blockwise-hash pieces (expandable digest plus one-time pad).

All operations are pure functions; none of them aims for constant-time
behaviour, this is a protocol-analysis artifact.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .core import PRF_TAG_MAX_BITS, TOY_TAG_MAX_BITS

POLY1305_PRIME = (1 << 130) - 5
# Standard clamp applied to the 128-bit evaluation point.
POLY1305_CLAMP = 0x0FFFFFFC0FFFFFFC0FFFFFFC0FFFFFFF

SPLIT_DIRECT = "direct"   # 256-bit block: low 128 -> point, high 128 -> PRF key
SPLIT_EXPAND = "expand"   # any width: PRF in counter mode stretches the block


class KeyTooShort(ValueError):
    """Key block too short for the configured split rule."""


class ToyTagTooWide(ValueError):
    """Toy tag width above the exhaustive-search limit."""


class LengthMismatch(ValueError):
    """One-time pad operands differ in length."""


class PadRule(str, Enum):
    APPEND_ONE = "append-one"  # add 2**(8*len(chunk)) to every chunk
    NONE = "none"


@dataclass(frozen=True)
class UhfParams:
    """Universal-hash layer: chunked polynomial evaluation mod a prime."""

    prime: int = POLY1305_PRIME
    chunk_bits: int = 128
    pad_rule: PadRule = PadRule.APPEND_ONE

    def __post_init__(self):
        if self.chunk_bits % 8 or self.chunk_bits <= 0:
            raise ValueError("chunk_bits must be a positive multiple of 8")
        if self.chunk_bits >= self.prime.bit_length():
            raise ValueError("chunk_bits must be below the prime's bit length")


UHF_DEFAULT = UhfParams()


@dataclass(frozen=True)
class MacConfig:
    """Full tag suite: UHF layer, PRF id, tag width, and key-split rule."""

    uhf: UhfParams = UHF_DEFAULT
    prf_id: str = "prf128"
    tag_len: int = 128
    key_split: str = SPLIT_EXPAND

    def __post_init__(self):
        if self.tag_len % 8 or not 8 <= self.tag_len <= PRF_TAG_MAX_BITS:
            raise ValueError(f"tag_len must be a multiple of 8 in [8, {PRF_TAG_MAX_BITS}]")
        if self.key_split not in (SPLIT_DIRECT, SPLIT_EXPAND):
            raise ValueError(f"unknown key split rule {self.key_split!r}")

    @property
    def suite(self) -> str:
        return f"poly1305-{self.prf_id}/t{self.tag_len}"

    @classmethod
    def for_block_bits(cls, r: int, tag_len: int = 128) -> "MacConfig":
        split = SPLIT_DIRECT if r == 256 else SPLIT_EXPAND
        return cls(tag_len=tag_len, key_split=split)


def uhf_eval(message: bytes, secret_point: int, params: UhfParams = UHF_DEFAULT) -> int:
    """Evaluate the message polynomial at the secret point.

    Chunks are read little-endian in order; with APPEND_ONE each chunk
    gains a high marker bit. Horner form: h <- (h + chunk) * point mod p.
    The empty message evaluates to 0.
    """
    if not 0 <= secret_point < params.prime:
        raise ValueError("secret point outside the field")
    p = params.prime
    step = params.chunk_bits // 8
    pad = params.pad_rule is PadRule.APPEND_ONE
    h = 0
    for i in range(0, len(message), step):
        chunk = message[i:i + step]
        c = int.from_bytes(chunk, "little")
        if pad:
            c += 1 << (8 * len(chunk))
        h = (h + c) * secret_point % p
    return h


def _prf(key: bytes, data: bytes, out_bytes: int) -> bytes:
    """Keyed PRF: BLAKE2b truncated to out_bytes ("prf128" at 16)."""
    return hashlib.blake2b(data, key=key, digest_size=out_bytes).digest()


@lru_cache(maxsize=1 << 15)
def _split_key(key_block: int, r: int, rule: str) -> tuple[int, bytes]:
    """Derive (clamped evaluation point, 16-byte PRF key) from one block."""
    if rule == SPLIT_DIRECT:
        if r < 256:
            raise KeyTooShort(f"direct split needs a 256-bit block, got r={r}")
        point = (key_block & ((1 << 128) - 1)) & POLY1305_CLAMP
        prf_key = ((key_block >> 128) & ((1 << 128) - 1)).to_bytes(16, "little")
        return point, prf_key
    key_bytes = key_block.to_bytes((r + 7) // 8, "big")
    if len(key_bytes) > 64:
        key_bytes = hashlib.blake2b(key_bytes, digest_size=32).digest()
    stream = b"".join(
        _prf(key_bytes, b"key-split" + bytes([ctr]), 16) for ctr in range(2)
    )
    point = int.from_bytes(stream[:16], "little") & POLY1305_CLAMP
    return point, stream[16:32]


@lru_cache(maxsize=1 << 12)
def _poly_chunks(message: bytes, chunk_bytes: int, pad: bool) -> tuple[int, ...]:
    out = []
    for i in range(0, len(message), chunk_bytes):
        chunk = message[i:i + chunk_bytes]
        c = int.from_bytes(chunk, "little")
        if pad:
            c += 1 << (8 * len(chunk))
        out.append(c)
    return tuple(out)


@lru_cache(maxsize=1 << 15)
def _cw_tag(message: bytes, key_block: int, r: int, tag_len: int, rule: str) -> int:
    point, prf_key = _split_key(key_block, r, rule)
    h = 0
    for c in _poly_chunks(message, 16, True):
        h = (h + c) * point % POLY1305_PRIME
    digest = _prf(prf_key, h.to_bytes(17, "little"), tag_len // 8)
    return int.from_bytes(digest, "big")


def mac_int(message: bytes, key_block: int, r: int, tag_len: int = 128,
            rule: str | None = None) -> int:
    """Carter-Wegman tag as an integer, default suite (fast path)."""
    if rule is None:
        rule = SPLIT_DIRECT if r == 256 else SPLIT_EXPAND
    return _cw_tag(bytes(message), key_block, r, tag_len, rule)


def mac(message: bytes, key_block: int, r: int, cfg: MacConfig | None = None) -> bytes:
    """Tag = truncated PRF(prf_key, UHF(message, point)); deterministic.

    The (point, prf_key) pair comes from the block via cfg.key_split;
    KeyTooShort if the rule cannot produce both from an r-bit block.
    """
    if cfg is None:
        cfg = MacConfig.for_block_bits(r)
    if cfg.uhf == UHF_DEFAULT:
        value = mac_int(message, key_block, r, cfg.tag_len, cfg.key_split)
        return value.to_bytes(cfg.tag_len // 8, "big")
    point, prf_key = _split_key(key_block, r, cfg.key_split)
    h = uhf_eval(message, point % cfg.uhf.prime, cfg.uhf)
    nbytes = (cfg.uhf.prime.bit_length() + 7) // 8
    return _prf(prf_key, h.to_bytes(nbytes, "little"), cfg.tag_len // 8)


def toy_mac(message: bytes, key_block: int, width: int) -> int:
    """Keyed tag of `width` bits (width <= 20), for exhaustive-search
    experiments over the full 2**width key space. Uniform-looking but not
    collision-free across keys."""
    if width > TOY_TAG_MAX_BITS:
        raise ToyTagTooWide(f"toy tags support at most {TOY_TAG_MAX_BITS} bits")
    if width < 1:
        raise ValueError("width must be positive")
    key = key_block.to_bytes(3, "big") + bytes([width])
    digest = hashlib.blake2b(message, key=key, digest_size=8).digest()
    return int.from_bytes(digest, "big") & ((1 << width) - 1)


def legacy_digest(message: bytes, out_bits: int) -> int:
    """Expandable-output digest of exactly out_bits (a multiple of 8)."""
    if out_bits <= 0 or out_bits % 8:
        raise ValueError("out_bits must be a positive multiple of 8")
    return int.from_bytes(hashlib.shake_256(message).digest(out_bits // 8), "big")


def legacy_block_tag(block: int, r: int, out_bits: int) -> int:
    """Per-block hash used by the legacy blockwise signature."""
    return legacy_digest(block.to_bytes((r + 7) // 8, "big"), out_bits)


def otp(data: bytes, key: bytes) -> bytes:
    """Bitwise exclusive-or of equal-length strings; an involution."""
    if len(data) != len(key):
        raise LengthMismatch(f"{len(data)} vs {len(key)} bytes")
    return bytes(a ^ b for a, b in zip(data, key))
