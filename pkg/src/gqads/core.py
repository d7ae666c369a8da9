"""Core domain types for the QKD-assisted digital signature toolkit.

Defines the protocol parameter tuple and its validation, block-structured
key material, signatures, verification reports, deterministic seed
derivation, and the on-disk key format. Everything here is an immutable
value type, safe to share across threads.
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

SEED_BYTES = 32
KEY_FILE_MAGIC = b"GQADSKEY"
WIRE_VERSION = "GQADS1"
TOY_SUITE = "toy"

PRF_TAG_MAX_BITS = 128  # output width of the tagging PRF
TOY_TAG_MAX_BITS = 20


class Mode(str, Enum):
    """Signing mode."""

    LEGACY = "legacy"                # blockwise hash over an OTP-encrypted digest
    GENERALIZED = "gqads"            # one Carter-Wegman MAC per key block
    DETERMINISTIC = "deterministic"  # MAC variant; first verifier defers to second


class Role(str, Enum):
    ALICE = "alice"      # signer
    BOB = "bob"          # first verifier (forwarding, hard threshold)
    CHARLIE = "charlie"  # second verifier (arbiter, soft threshold)


class Outcome(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    PENDING = "pending"  # deterministic mode while the peer verdict is unknown


class ParameterError(ValueError):
    """Parameter tuple violates a structural constraint."""


class InvalidShare(ParameterError):
    """Share count outside [0, n]."""


class InvalidThreshold(ParameterError):
    """Threshold outside its feasible range."""


class InvalidMode(ParameterError):
    """Mode incompatible with the remaining parameters."""


@dataclass(frozen=True)
class ProtocolParams:
    """Raw protocol parameter tuple, as supplied by a caller.

    n      -- number of blocks per key
    r      -- bits per block
    s      -- blocks shared each way between the two verifiers
    v_b    -- first verifier's acceptance threshold (out of n + s checkable)
    v_c    -- second verifier's acceptance threshold (out of n + s checkable)
    tag_len -- MAC tag width in bits (ignored in legacy mode)
    suite  -- None for the mode default, or "toy" for r-bit toy tags
    """

    n: int
    r: int
    s: int
    v_b: int
    v_c: int
    mode: Mode = Mode.GENERALIZED
    tag_len: Optional[int] = 128
    suite: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "s": self.s,
            "v_b": self.v_b,
            "v_c": self.v_c,
            "mode": self.mode.value,
            "tag_len": self.tag_len,
            "suite": self.suite,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProtocolParams":
        return cls(
            n=data["n"],
            r=data["r"],
            s=data["s"],
            v_b=data["v_b"],
            v_c=data["v_c"],
            mode=Mode(data.get("mode", Mode.GENERALIZED.value)),
            tag_len=data.get("tag_len"),
            suite=data.get("suite"),
        )


@dataclass(frozen=True)
class ValidatedParams:
    """Parameter tuple that passed :func:`validate_params`, plus derived
    quantities. ``beta`` and ``gamma`` are exact rationals so threshold
    logic never suffers float drift."""

    n: int
    r: int
    s: int
    v_b: int
    v_c: int
    mode: Mode
    suite: str
    tag_bits: int       # width of one signature tag
    key_bits: int       # n * r, one key's length
    beta: Fraction      # s / n
    gamma: Fraction     # (v_c - 2s) / (n - s)
    fingerprint: str

    @property
    def block_count(self) -> int:
        return 2 * self.n

    @property
    def checkable_count(self) -> int:
        return self.n + self.s

    @property
    def sig_bits(self) -> int:
        return 2 * self.n * self.tag_bits

    @property
    def header_line(self) -> str:
        return (
            f"{WIRE_VERSION} {self.mode.value} {self.n} {self.r} "
            f"{self.s} {self.v_b} {self.v_c} {self.suite}"
        )

    def raw(self) -> ProtocolParams:
        tag_len = None if self.mode is Mode.LEGACY else self.tag_bits
        suite = TOY_SUITE if self.suite.startswith(TOY_SUITE) else None
        return ProtocolParams(
            self.n, self.r, self.s, self.v_b, self.v_c, self.mode, tag_len, suite
        )

    def to_dict(self) -> dict:
        return self.raw().to_dict()

    @classmethod
    def from_dict(cls, data: dict) -> "ValidatedParams":
        return validate_params(ProtocolParams.from_dict(data))


def _suite_string(p: ProtocolParams, key_bits: int) -> tuple[str, int]:
    """Resolve (suite id, per-tag bits) for a parameter tuple."""
    if p.mode is Mode.LEGACY:
        return f"xof{2 * key_bits}", 2 * key_bits
    if p.suite == TOY_SUITE:
        if p.r > TOY_TAG_MAX_BITS:
            raise InvalidMode(f"toy suite needs r <= {TOY_TAG_MAX_BITS}, got r={p.r}")
        return f"toy/t{p.r}", p.r
    if p.suite is not None:
        raise InvalidMode(f"unknown suite {p.suite!r}")
    tag_len = p.tag_len
    if tag_len is None or tag_len < 8 or tag_len > PRF_TAG_MAX_BITS or tag_len % 8:
        raise ParameterError(
            f"tag_len must be a multiple of 8 in [8, {PRF_TAG_MAX_BITS}], got {tag_len}"
        )
    return f"poly1305-prf128/t{tag_len}", tag_len


def validate_params(p: ProtocolParams) -> ValidatedParams:
    """Check a parameter tuple and derive key length, beta and gamma.

    Raises InvalidShare (s outside [0, n]), InvalidThreshold (v_c <= 2s,
    where forging becomes trivial, or either threshold above n + s), or
    InvalidMode (deterministic mode with n != 2, unknown suite, legacy
    digest not byte-aligned).
    """
    if p.n < 1 or p.r < 1:
        raise ParameterError(f"n and r must be positive, got n={p.n}, r={p.r}")
    if not 0 <= p.s <= p.n:
        raise InvalidShare(f"s must lie in [0, n], got s={p.s}, n={p.n}")
    if p.mode is Mode.DETERMINISTIC and p.n != 2:
        raise InvalidMode(f"deterministic mode requires n=2, got n={p.n}")
    if p.v_c <= 2 * p.s:
        raise InvalidThreshold(
            f"v_c={p.v_c} <= 2s={2 * p.s}: the second verifier would accept on "
            "shared blocks alone and forging succeeds with certainty"
        )
    if p.v_c > p.n + p.s:
        raise InvalidThreshold(
            f"v_c={p.v_c} exceeds the {p.n + p.s} blocks the second verifier can check"
        )
    if not 0 <= p.v_b <= p.n + p.s:
        raise InvalidThreshold(
            f"v_b={p.v_b} outside [0, {p.n + p.s}]"
        )
    key_bits = p.n * p.r
    if p.mode is Mode.LEGACY and (2 * key_bits) % 8:
        raise InvalidMode(
            f"legacy mode needs a byte-aligned 2*n*r digest, got {2 * key_bits} bits"
        )
    suite, tag_bits = _suite_string(p, key_bits)
    header = (
        f"{WIRE_VERSION} {p.mode.value} {p.n} {p.r} {p.s} {p.v_b} {p.v_c} {suite}"
    )
    return ValidatedParams(
        n=p.n,
        r=p.r,
        s=p.s,
        v_b=p.v_b,
        v_c=p.v_c,
        mode=p.mode,
        suite=suite,
        tag_bits=tag_bits,
        key_bits=key_bits,
        beta=Fraction(p.s, p.n),
        gamma=Fraction(p.v_c - 2 * p.s, p.n - p.s),
        fingerprint=hashlib.blake2b(header.encode(), digest_size=16).hexdigest(),
    )


# --------------------------------------------------------------------------
# Seeds and deterministic randomness. Keys are simulated QKD output: every
# random choice in the toolkit flows from an explicit 32-byte seed through
# the derivations below, so any run is reproducible from its seed.
# --------------------------------------------------------------------------

def normalize_seed(seed) -> bytes:
    """Coerce bytes / hex string / int to a canonical 32-byte seed."""
    if isinstance(seed, (bytes, bytearray)):
        raw = bytes(seed)
        if len(raw) == SEED_BYTES:
            return raw
        return hashlib.blake2b(raw, digest_size=SEED_BYTES).digest()
    if isinstance(seed, int):
        return (seed % (1 << (8 * SEED_BYTES))).to_bytes(SEED_BYTES, "big")
    if isinstance(seed, str):
        text = seed[2:] if seed.startswith(("0x", "0X")) else seed
        try:
            value = int(text, 16)
        except ValueError:
            return hashlib.blake2b(seed.encode(), digest_size=SEED_BYTES).digest()
        return normalize_seed(value)
    raise TypeError(f"cannot use {type(seed).__name__} as a seed")


def derive_seed(seed: bytes, label: str) -> bytes:
    """Domain-separated subseed for a named purpose."""
    return hashlib.blake2b(
        label.encode(), key=seed, digest_size=SEED_BYTES, person=b"gqads-label"
    ).digest()


def derive_trial_seed(seed: bytes, index: int) -> bytes:
    """Per-trial seed; injective over 2**64 trial indices."""
    if not 0 <= index < 1 << 64:
        raise ValueError(f"trial index out of range: {index}")
    return hashlib.blake2b(
        index.to_bytes(8, "big"), key=seed, digest_size=SEED_BYTES, person=b"gqads-trial"
    ).digest()


def keystream_bits(seed: bytes, nbits: int) -> int:
    """First nbits of the seed's expandable keystream, as an integer."""
    if nbits <= 0:
        raise ValueError("nbits must be positive")
    nbytes = (nbits + 7) // 8
    value = int.from_bytes(hashlib.shake_256(seed).digest(nbytes), "big")
    return value >> (8 * nbytes - nbits)


def rng_from(seed: bytes) -> random.Random:
    """Deterministic general-purpose RNG for selections and shuffles."""
    return random.Random(int.from_bytes(seed, "big"))


# --------------------------------------------------------------------------
# Key material
# --------------------------------------------------------------------------

def int_to_blocks(value: int, n: int, r: int) -> tuple[int, ...]:
    """Split an n*r-bit integer into n blocks, block 0 most significant."""
    mask = (1 << r) - 1
    return tuple((value >> ((n - 1 - i) * r)) & mask for i in range(n))


def blocks_to_int(blocks: tuple[int, ...], r: int) -> int:
    value = 0
    for b in blocks:
        value = (value << r) | b
    return value


@dataclass(frozen=True)
class KeyMaterial:
    """One party's view of the block-structured keys.

    The signer owns both keys and receives nothing; each verifier owns one
    key and holds the s blocks its peer disclosed, indexed by position in
    the peer's key.
    """

    role: Role
    own_keys: tuple[tuple[int, ...], ...]
    received_blocks: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        indices = [i for i, _ in self.received_blocks]
        if len(set(indices)) != len(indices) or any(i < 0 for i in indices):
            raise ParameterError("received block indices must be distinct and >= 0")

    @property
    def received(self) -> dict[int, int]:
        return dict(self.received_blocks)

    def concatenated(self, n: int) -> "ConcatenatedKey":
        """Local 2n-block key view; blocks this party cannot know are None."""
        blocks: list[Optional[int]] = [None] * (2 * n)
        if self.role is Role.ALICE:
            k1, k2 = self.own_keys
            blocks[:n] = k1
            blocks[n:] = k2
        elif self.role is Role.BOB:
            blocks[:n] = self.own_keys[0]
            for j, b in self.received_blocks:
                blocks[n + j] = b
        else:
            blocks[n:] = self.own_keys[0]
            for j, b in self.received_blocks:
                blocks[j] = b
        return ConcatenatedKey(tuple(blocks))

    def to_dict(self) -> dict:
        return {
            "role": self.role.value,
            "own_keys": [[hex(b) for b in key] for key in self.own_keys],
            "received_blocks": [[i, hex(b)] for i, b in self.received_blocks],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KeyMaterial":
        return cls(
            role=Role(data["role"]),
            own_keys=tuple(tuple(int(b, 16) for b in key) for key in data["own_keys"]),
            received_blocks=tuple((i, int(b, 16)) for i, b in data["received_blocks"]),
        )


@dataclass(frozen=True)
class ConcatenatedKey:
    """Ordered 2n-block key view with unknown positions marked None."""

    blocks: tuple[Optional[int], ...]

    @property
    def known_indices(self) -> frozenset[int]:
        return frozenset(i for i, b in enumerate(self.blocks) if b is not None)


# --------------------------------------------------------------------------
# Signatures and verification reports
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Signature:
    """Ordered per-block tags. Total length is len(tags) * tag_bits."""

    tags: tuple[int, ...]
    tag_bits: int
    mode: Mode

    @property
    def bit_length(self) -> int:
        return len(self.tags) * self.tag_bits

    def to_hex(self) -> str:
        total = self.bit_length
        acc = 0
        for t in self.tags:
            acc = (acc << self.tag_bits) | t
        nbytes = (total + 7) // 8
        acc <<= 8 * nbytes - total
        return acc.to_bytes(nbytes, "big").hex()

    @classmethod
    def from_hex(cls, text: str, count: int, tag_bits: int, mode: Mode) -> "Signature":
        total = count * tag_bits
        nbytes = (total + 7) // 8
        raw = bytes.fromhex(text)
        if len(raw) != nbytes:
            raise ValueError(f"expected {nbytes} signature bytes, got {len(raw)}")
        acc = int.from_bytes(raw, "big") >> (8 * nbytes - total)
        mask = (1 << tag_bits) - 1
        tags = tuple(
            (acc >> ((count - 1 - i) * tag_bits)) & mask for i in range(count)
        )
        return cls(tags, tag_bits, mode)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "tag_bits": self.tag_bits,
            "count": len(self.tags),
            "tags_hex": self.to_hex(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Signature":
        return cls.from_hex(
            data["tags_hex"], data["count"], data["tag_bits"], Mode(data["mode"])
        )


@dataclass(frozen=True)
class VerificationReport:
    """Per-block match vector plus the threshold comparison."""

    checkable: frozenset[int]
    matches: tuple[tuple[int, bool], ...]
    match_count: int
    threshold: int
    outcome: Outcome

    @classmethod
    def build(cls, matches: dict[int, bool], threshold: int) -> "VerificationReport":
        count = sum(1 for ok in matches.values() if ok)
        return cls(
            checkable=frozenset(matches),
            matches=tuple(sorted(matches.items())),
            match_count=count,
            threshold=threshold,
            outcome=Outcome.ACCEPT if count >= threshold else Outcome.REJECT,
        )

    @property
    def matches_map(self) -> dict[int, bool]:
        return dict(self.matches)

    def to_dict(self) -> dict:
        return {
            "matches": [[i, ok] for i, ok in self.matches],
            "match_count": self.match_count,
            "threshold": self.threshold,
            "outcome": self.outcome.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VerificationReport":
        matches = {i: bool(ok) for i, ok in data["matches"]}
        report = cls.build(matches, data["threshold"])
        if report.match_count != data["match_count"] or report.outcome.value != data["outcome"]:
            raise ValueError("inconsistent verification report")
        return report


# --------------------------------------------------------------------------
# Key files: 8-byte magic, u32 n, u32 r (little-endian), then n*r key bits
# padded with zero bits to a byte boundary. A hex-text rendering of the same
# bytes is also accepted on read.
# --------------------------------------------------------------------------

def encode_key_file(blocks: tuple[int, ...], r: int) -> bytes:
    n = len(blocks)
    nbits = n * r
    nbytes = (nbits + 7) // 8
    payload = blocks_to_int(blocks, r) << (8 * nbytes - nbits)
    return KEY_FILE_MAGIC + struct.pack("<II", n, r) + payload.to_bytes(nbytes, "big")


def decode_key_file(raw: bytes) -> tuple[int, int, tuple[int, ...]]:
    if not raw.startswith(KEY_FILE_MAGIC):
        text = bytes(raw).decode("ascii", errors="replace")
        stripped = "".join(text.split())
        try:
            raw = bytes.fromhex(stripped)
        except ValueError:
            raise ValueError("not a key file: bad magic and not hex text") from None
        if not raw.startswith(KEY_FILE_MAGIC):
            raise ValueError("hex text does not decode to a key file")
    n, r = struct.unpack("<II", raw[8:16])
    nbits = n * r
    nbytes = (nbits + 7) // 8
    body = raw[16:16 + nbytes]
    if len(body) != nbytes:
        raise ValueError("truncated key file")
    value = int.from_bytes(body, "big") >> (8 * nbytes - nbits)
    return n, r, int_to_blocks(value, n, r)


def write_key_file(path, blocks: tuple[int, ...], r: int, hex_text: bool = False) -> None:
    data = encode_key_file(blocks, r)
    if hex_text:
        data = data.hex().encode("ascii") + b"\n"
    with open(path, "wb") as fh:
        fh.write(data)


def read_key_file(path) -> tuple[int, int, tuple[int, ...]]:
    with open(path, "rb") as fh:
        return decode_key_file(fh.read())
