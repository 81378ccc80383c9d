"""Non-cryptographic 32-bit string hashes used by every filter in the kit.

Eight routines behind one dispatch function: the rotate-and-xor variant
``mmurmur`` (multiply-free inner loop), classic Murmur2, SuperFastHash,
xxHash32, CRC-32, FastHash (64-bit state folded to 32), and FNV-1/1a.
All of them consume raw bytes little-endian and return an unsigned
32-bit integer, so digests are identical across platforms.

Routines without a native seed parameter (CRC-32, FNV-1, FNV-1a) fold
the seed into the initial state by XOR; seed 0 therefore reproduces the
published check values of each algorithm.

Every call routed through :func:`hash_bytes` bumps a per-thread call
counter, which benchmark code samples via :func:`reset_call_counter`
to report probe counts. The raw routines below do not touch the
counter, so helper hashing (e.g. precomputed tables) stays invisible
to probe statistics.
"""

from __future__ import annotations

import enum
import threading
from pathlib import Path
from typing import Callable, Iterable

_M32 = 0xFFFFFFFF


class HashFunction(enum.Enum):
    """Identifies one of the eight hash routines."""

    MMURMUR = "mmurmur"
    MURMUR2 = "murmur2"
    SUPERFASTHASH = "superfasthash"
    XXHASH32 = "xxhash32"
    CRC32 = "crc32"
    FASTHASH = "fasthash"
    FNV1 = "fnv1"
    FNV1A = "fnv1a"

    @classmethod
    def from_name(cls, name: str) -> "HashFunction":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown hash function {name!r} (expected one of: {valid})") from None


# Byte ids are frozen: they appear in filter snapshots.
HASH_FUNCTION_IDS = {
    HashFunction.MMURMUR: 0,
    HashFunction.MURMUR2: 1,
    HashFunction.SUPERFASTHASH: 2,
    HashFunction.XXHASH32: 3,
    HashFunction.CRC32: 4,
    HashFunction.FASTHASH: 5,
    HashFunction.FNV1: 6,
    HashFunction.FNV1A: 7,
}
HASH_FUNCTIONS_BY_ID = {v: k for k, v in HASH_FUNCTION_IDS.items()}


def _rotl32(x: int, r: int) -> int:
    return ((x << r) & _M32) | (x >> (32 - r))


def mmurmur(data: bytes, seed: int = 0) -> int:
    """Rotate-and-xor hash with a multiply-free inner loop.

    State: h = seed XOR len. Each full little-endian 4-byte block k does
    h = rotl(h ^ k, 13); h ^= h >> 7. Tail bytes are XORed in at byte
    offsets, then an xorshift cascade (16/11/5) finalizes.
    """
    h = (seed ^ len(data)) & _M32
    nblocks = len(data) >> 2
    for b in range(nblocks):
        k = int.from_bytes(data[b * 4 : b * 4 + 4], "little")
        h = _rotl32(h ^ k, 13)
        h ^= h >> 7
    for i, byte in enumerate(data[nblocks * 4 :]):
        h ^= (byte << (8 * i)) & _M32
    h ^= h >> 16
    h = (h ^ (h << 11)) & _M32
    h ^= h >> 5
    return h


_MUR_M = 0x5BD1E995
_MUR_R = 24


def murmur2(data: bytes, seed: int = 0) -> int:
    """MurmurHash2, 32-bit variant (Austin Appleby's reference algorithm)."""
    length = len(data)
    h = (seed ^ length) & _M32
    nblocks = length >> 2
    for b in range(nblocks):
        k = int.from_bytes(data[b * 4 : b * 4 + 4], "little")
        k = (k * _MUR_M) & _M32
        k ^= k >> _MUR_R
        k = (k * _MUR_M) & _M32
        h = (h * _MUR_M) & _M32
        h ^= k
    base = nblocks * 4
    tail = length & 3
    if tail >= 3:
        h ^= data[base + 2] << 16
    if tail >= 2:
        h ^= data[base + 1] << 8
    if tail >= 1:
        h ^= data[base]
        h = (h * _MUR_M) & _M32
    h ^= h >> 13
    h = (h * _MUR_M) & _M32
    h ^= h >> 15
    return h


def superfasthash(data: bytes, seed: int = 0) -> int:
    """Paul Hsieh's SuperFastHash over 16-bit fragments.

    The reference seeds the state with the input length; the seed is
    folded in by XOR. The 3-byte tail reproduces the reference's signed
    char shift, so bytes >= 0x80 sign-extend before the << 18.
    """
    length = len(data)
    h = (length ^ seed) & _M32
    i = 0
    for _ in range(length >> 2):
        h = (h + (data[i] | (data[i + 1] << 8))) & _M32
        tmp = (((data[i + 2] | (data[i + 3] << 8)) << 11) ^ h) & _M32
        h = (((h << 16) & _M32) ^ tmp) & _M32
        h = (h + (h >> 11)) & _M32
        i += 4
    rem = length & 3
    if rem == 3:
        h = (h + (data[i] | (data[i + 1] << 8))) & _M32
        h ^= (h << 16) & _M32
        signed = data[i + 2] - 256 if data[i + 2] > 127 else data[i + 2]
        h ^= (signed << 18) & _M32
        h = (h + (h >> 11)) & _M32
    elif rem == 2:
        h = (h + (data[i] | (data[i + 1] << 8))) & _M32
        h ^= (h << 11) & _M32
        h = (h + (h >> 17)) & _M32
    elif rem == 1:
        h = (h + data[i]) & _M32
        h ^= (h << 10) & _M32
        h = (h + (h >> 1)) & _M32
    h ^= (h << 3) & _M32
    h = (h + (h >> 5)) & _M32
    h ^= (h << 4) & _M32
    h = (h + (h >> 17)) & _M32
    h ^= (h << 25) & _M32
    h = (h + (h >> 6)) & _M32
    return h


_XXP1 = 2654435761
_XXP2 = 2246822519
_XXP3 = 3266489917
_XXP4 = 668265263
_XXP5 = 374761393


def xxhash32(data: bytes, seed: int = 0) -> int:
    """xxHash, 32-bit variant (XXH32)."""
    length = len(data)
    i = 0
    if length >= 16:
        v1 = (seed + _XXP1 + _XXP2) & _M32
        v2 = (seed + _XXP2) & _M32
        v3 = seed & _M32
        v4 = (seed - _XXP1) & _M32
        while i <= length - 16:
            v1 = (_rotl32((v1 + int.from_bytes(data[i : i + 4], "little") * _XXP2) & _M32, 13) * _XXP1) & _M32
            v2 = (_rotl32((v2 + int.from_bytes(data[i + 4 : i + 8], "little") * _XXP2) & _M32, 13) * _XXP1) & _M32
            v3 = (_rotl32((v3 + int.from_bytes(data[i + 8 : i + 12], "little") * _XXP2) & _M32, 13) * _XXP1) & _M32
            v4 = (_rotl32((v4 + int.from_bytes(data[i + 12 : i + 16], "little") * _XXP2) & _M32, 13) * _XXP1) & _M32
            i += 16
        h = (_rotl32(v1, 1) + _rotl32(v2, 7) + _rotl32(v3, 12) + _rotl32(v4, 18)) & _M32
    else:
        h = (seed + _XXP5) & _M32
    h = (h + length) & _M32
    while i + 4 <= length:
        h = (_rotl32((h + int.from_bytes(data[i : i + 4], "little") * _XXP3) & _M32, 17) * _XXP4) & _M32
        i += 4
    while i < length:
        h = (_rotl32((h + data[i] * _XXP5) & _M32, 11) * _XXP1) & _M32
        i += 1
    h ^= h >> 15
    h = (h * _XXP2) & _M32
    h ^= h >> 13
    h = (h * _XXP3) & _M32
    h ^= h >> 16
    return h


def _build_crc_table() -> tuple:
    table = []
    for n in range(256):
        c = n
        for _ in range(8):
            c = (c >> 1) ^ 0xEDB88320 if c & 1 else c >> 1
        table.append(c)
    return tuple(table)


CRC_TABLE = _build_crc_table()


def crc32(data: bytes, seed: int = 0) -> int:
    """Reflected CRC-32 (polynomial 0xEDB88320, the ISO-HDLC check).

    The seed is XORed into the 0xFFFFFFFF preset, matching the resume
    semantics of zlib.crc32(data, seed). Seed 0 yields the standard
    check value 0xCBF43926 for b"123456789".
    """
    crc = (seed & _M32) ^ 0xFFFFFFFF
    for byte in data:
        crc = CRC_TABLE[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFF


_M64 = 0xFFFFFFFFFFFFFFFF
_FH_M = 0x880355F21E6D1965
_FH_MIX = 0x2127599BF4325C37


def _fh_mix(h: int) -> int:
    h ^= h >> 23
    h = (h * _FH_MIX) & _M64
    h ^= h >> 47
    return h


def fasthash64(data: bytes, seed: int = 0) -> int:
    """FastHash with full 64-bit state (Zilong Tan's algorithm)."""
    length = len(data)
    h = (seed ^ ((length * _FH_M) & _M64)) & _M64
    nblocks = length >> 3
    for b in range(nblocks):
        w = int.from_bytes(data[b * 8 : b * 8 + 8], "little")
        h ^= _fh_mix(w)
        h = (h * _FH_M) & _M64
    tail = data[nblocks * 8 :]
    if tail:
        v = 0
        for i, byte in enumerate(tail):
            v |= byte << (8 * i)
        h ^= _fh_mix(v)
        h = (h * _FH_M) & _M64
    return _fh_mix(h)


def fasthash32(data: bytes, seed: int = 0) -> int:
    """32-bit FastHash: the documented h - (h >> 32) fold of the 64-bit code."""
    h = fasthash64(data, seed)
    return (h - (h >> 32)) & _M32


_FNV_BASIS = 0x811C9DC5
_FNV_PRIME = 0x01000193


def fnv1_32(data: bytes, seed: int = 0) -> int:
    """FNV-1: multiply then XOR each byte."""
    h = (_FNV_BASIS ^ seed) & _M32
    for byte in data:
        h = ((h * _FNV_PRIME) & _M32) ^ byte
    return h


def fnv1a_32(data: bytes, seed: int = 0) -> int:
    """FNV-1a: XOR each byte then multiply."""
    h = (_FNV_BASIS ^ seed) & _M32
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _M32
    return h


_DISPATCH: dict[HashFunction, Callable[[bytes, int], int]] = {
    HashFunction.MMURMUR: mmurmur,
    HashFunction.MURMUR2: murmur2,
    HashFunction.SUPERFASTHASH: superfasthash,
    HashFunction.XXHASH32: xxhash32,
    HashFunction.CRC32: crc32,
    HashFunction.FASTHASH: fasthash32,
    HashFunction.FNV1: fnv1_32,
    HashFunction.FNV1A: fnv1a_32,
}


# ---------------------------------------------------------------------------
# Instrumented dispatch.
#
# The counter is thread-local so concurrent benchmark cells each see their
# own probe counts; within a thread it is a plain accumulator.
# ---------------------------------------------------------------------------

_local = threading.local()


def hash_bytes(fn: HashFunction, data: bytes, seed: int = 0) -> int:
    """Dispatch to the named routine and count the call."""
    _local.calls = getattr(_local, "calls", 0) + 1
    return _DISPATCH[fn](data, seed)


def note_hash_calls(count: int) -> None:
    """Credit ``count`` calls to the counter (used by batch hashing)."""
    _local.calls = getattr(_local, "calls", 0) + count


def reset_call_counter() -> int:
    """Return calls made since the last reset and zero the counter."""
    count = getattr(_local, "calls", 0)
    _local.calls = 0
    return count


# ---------------------------------------------------------------------------
# Golden-vector file: one record per line,
#   function,hex-key-bytes,seed-hex,digest-hex
# ---------------------------------------------------------------------------

GoldenVector = tuple[HashFunction, bytes, int, int]


def write_golden_vectors(path: str | Path, vectors: Iterable[GoldenVector]) -> None:
    lines = []
    for fn, key, seed, digest in vectors:
        lines.append(f"{fn.value},{key.hex()},{seed:08x},{digest:08x}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_golden_vectors(path: str | Path) -> list[GoldenVector]:
    vectors: list[GoldenVector] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 comma-separated fields")
        fn, keyhex, seedhex, digesthex = parts
        vectors.append((HashFunction.from_name(fn), bytes.fromhex(keyhex), int(seedhex, 16), int(digesthex, 16)))
    return vectors


def default_golden_path() -> Path:
    return Path(__file__).parent / "data" / "hash_golden.txt"
