"""Comparison filters: double-hashing Bloom, counting Bloom, and cuckoo.

All three consume Murmur2 digests (via the instrumented dispatch) so
probe counts and timings are comparable with the 2-D filter. They are
benchmark-only structures: no persistence format, and ``memory_bytes``
reports the modeled footprint used in memory tables (bit array for
Kirsch, 4-bit counters for the CBF, 16-bit slots for the cuckoo
filter), not Python object overhead.

Threading contract matches the 2-D filter: one writer, concurrent
readers only while quiescent, synchronization left to the caller.
"""

from __future__ import annotations

import math
import random
import struct
from typing import Sequence

import numpy as np

from .filter2d import derive_seeds
from .hashes import HashFunction, hash_bytes, murmur2
from .hashvec import PackedKeys, as_packed, hash_many

_MURMUR2 = HashFunction.MURMUR2


def _bloom_bits(n: int, epsilon: float) -> int:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    return math.ceil(-n * math.log(epsilon) / math.log(2) ** 2)


def _bloom_lambda(m: int, n: int) -> int:
    return max(1, round(m / n * math.log(2)))


class KirschBF:
    """Flat Bloom filter probing (h1 + i*h2) mod m for i < lambda.

    Exactly two digest computations per operation regardless of lambda,
    after Kirsch & Mitzenmacher's double-hashing construction.
    """

    name = "kirsch"

    def __init__(self, n: int, epsilon: float):
        self.n = n
        self.epsilon = epsilon
        self.m = _bloom_bits(n, epsilon)
        self.lam = _bloom_lambda(self.m, n)
        self.seeds = derive_seeds(2)
        self._bits = np.zeros(self.m, dtype=bool)
        self._inserted = 0

    @property
    def inserted_count(self) -> int:
        return self._inserted

    def _digests(self, key: bytes) -> tuple[int, int]:
        return hash_bytes(_MURMUR2, key, self.seeds[0]), hash_bytes(_MURMUR2, key, self.seeds[1])

    def insert(self, key: bytes) -> None:
        h1, h2 = self._digests(key)
        bits = self._bits
        for i in range(self.lam):
            bits[(h1 + i * h2) % self.m] = True
        self._inserted += 1

    def query(self, key: bytes) -> bool:
        h1, h2 = self._digests(key)
        bits = self._bits
        return all(bits[(h1 + i * h2) % self.m] for i in range(self.lam))

    def insert_batch(self, keys: PackedKeys | Sequence[bytes]) -> None:
        packed = as_packed(keys)
        h1 = hash_many(_MURMUR2, packed, self.seeds[0]).astype(np.int64)
        h2 = hash_many(_MURMUR2, packed, self.seeds[1]).astype(np.int64)
        for i in range(self.lam):
            self._bits[(h1 + i * h2) % self.m] = True
        self._inserted += len(packed)

    def query_batch(self, keys: PackedKeys | Sequence[bytes]) -> np.ndarray:
        packed = as_packed(keys)
        h1 = hash_many(_MURMUR2, packed, self.seeds[0]).astype(np.int64)
        h2 = hash_many(_MURMUR2, packed, self.seeds[1]).astype(np.int64)
        idx = np.arange(len(packed))
        for i in range(self.lam):
            if not idx.size:
                break
            hit = self._bits[(h1 + i * h2) % self.m]
            idx, h1, h2 = idx[hit], h1[hit], h2[hit]
        result = np.zeros(len(packed), dtype=bool)
        result[idx] = True
        return result

    def memory_bytes(self) -> int:
        return self.memory_model(self.n, self.epsilon)

    @staticmethod
    def memory_model(n: int, epsilon: float) -> int:
        """Modeled footprint: m bits packed eight to a byte."""
        return -(-_bloom_bits(n, epsilon) // 8)


COUNTER_MAX = 15  # 4-bit saturating counters


class CountingBF:
    """Counting Bloom filter: m 4-bit counters, lambda seeded digests.

    Increment saturates at 15 and never wraps; delete decrements only
    counters above zero. Deleting a key that was never inserted is
    legal Bloom-semantics damage, but any probe that finds a zero
    counter flags the delete in ``unbacked_deletes``.
    """

    name = "cbf"

    def __init__(self, n: int, epsilon: float):
        self.n = n
        self.epsilon = epsilon
        self.m = _bloom_bits(n, epsilon)
        self.lam = _bloom_lambda(self.m, n)
        self.seeds = derive_seeds(self.lam)
        self._counters = np.zeros(self.m, dtype=np.int16)
        self._inserted = 0
        self.unbacked_deletes = 0

    @property
    def inserted_count(self) -> int:
        return self._inserted

    def _positions(self, key: bytes) -> list[int]:
        return [hash_bytes(_MURMUR2, key, seed) % self.m for seed in self.seeds]

    def insert(self, key: bytes) -> None:
        counters = self._counters
        for pos in self._positions(key):
            if counters[pos] < COUNTER_MAX:
                counters[pos] += 1
        self._inserted += 1

    def delete(self, key: bytes) -> None:
        counters = self._counters
        positions = self._positions(key)
        if any(counters[pos] == 0 for pos in positions):
            self.unbacked_deletes += 1
        for pos in positions:
            if counters[pos] > 0:
                counters[pos] -= 1

    def query(self, key: bytes) -> bool:
        counters = self._counters
        for seed in self.seeds:
            if counters[hash_bytes(_MURMUR2, key, seed) % self.m] == 0:
                return False
        return True

    def insert_batch(self, keys: PackedKeys | Sequence[bytes]) -> None:
        packed = as_packed(keys)
        # Saturation commutes with insert-only batches: counts only grow,
        # so clipping the summed increments equals per-op saturation.
        total = np.zeros(self.m, dtype=np.int64)
        for seed in self.seeds:
            pos = hash_many(_MURMUR2, packed, seed).astype(np.int64) % self.m
            total += np.bincount(pos, minlength=self.m)
        merged = np.minimum(self._counters.astype(np.int64) + total, COUNTER_MAX)
        self._counters = merged.astype(np.int16)
        self._inserted += len(packed)

    def query_batch(self, keys: PackedKeys | Sequence[bytes]) -> np.ndarray:
        packed = as_packed(keys)
        result = np.zeros(len(packed), dtype=bool)
        alive = np.arange(len(packed), dtype=np.int64)
        sub = packed
        for seed in self.seeds:
            if not alive.size:
                return result
            pos = hash_many(_MURMUR2, sub, seed).astype(np.int64) % self.m
            hit = self._counters[pos] > 0
            alive = alive[hit]
            sub = sub.take(hit)
        result[alive] = True
        return result

    def memory_bytes(self) -> int:
        return self.memory_model(self.n, self.epsilon)

    @staticmethod
    def memory_model(n: int, epsilon: float) -> int:
        """Modeled footprint: every bit of the plain filter becomes a
        4-bit counter, so exactly 4x the packed bit-array bytes."""
        return 4 * KirschBF.memory_model(n, epsilon)


_CF_INDEX_SEED = 0x2545F491
_CF_FP_SEED = 0x4F6CDD1D
_CF_ALT_SEED = 0x1B873593

_fp_mix_cache: np.ndarray | None = None


def _fp_mix_table() -> np.ndarray:
    """murmur2 of each possible fingerprint, for partial-key alt indexing."""
    global _fp_mix_cache
    if _fp_mix_cache is None:
        table = np.empty(1 << 16, dtype=np.uint32)
        for fp in range(1 << 16):
            table[fp] = murmur2(struct.pack("<H", fp), _CF_ALT_SEED)
        _fp_mix_cache = table
    return _fp_mix_cache


class CuckooFilter:
    """Cuckoo filter with 4-slot buckets and 16-bit fingerprints.

    An item lives in bucket i1 = h(key) mod 2^k or i2 = i1 XOR h(fp);
    slot value 0 means empty, so fingerprints are remapped to avoid 0.
    Inserts evict (kick) up to ``max_kicks`` times and report failure
    by returning False, rolling the eviction chain back so a failed
    insert leaves the table unchanged. Lookups never mutate the table.
    """

    name = "cuckoo"

    BUCKET_SIZE = 4
    FINGERPRINT_BITS = 16
    MAX_KICKS = 500
    MAX_LOAD = 0.95

    def __init__(self, capacity: int, *, kick_seed: int = 0x5EED):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.num_buckets = self._bucket_count(capacity)
        self._mask = self.num_buckets - 1
        self._table = np.zeros((self.num_buckets, self.BUCKET_SIZE), dtype=np.uint16)
        self._count = 0
        self._rng = random.Random(kick_seed)

    @classmethod
    def _bucket_count(cls, capacity: int) -> int:
        need = math.ceil(capacity / (cls.BUCKET_SIZE * cls.MAX_LOAD))
        return 1 << max(1, (need - 1).bit_length())

    @property
    def inserted_count(self) -> int:
        return self._count

    @property
    def load_factor(self) -> float:
        return self._count / (self.num_buckets * self.BUCKET_SIZE)

    def _fingerprint_and_index(self, key: bytes) -> tuple[int, int]:
        fp = hash_bytes(_MURMUR2, key, _CF_FP_SEED) & 0xFFFF
        if fp == 0:
            fp = 1
        i1 = hash_bytes(_MURMUR2, key, _CF_INDEX_SEED) & self._mask
        return fp, i1

    def _alt_index(self, index: int, fp: int) -> int:
        return (index ^ int(_fp_mix_table()[fp])) & self._mask

    def _try_slot(self, bucket: int, fp: int) -> bool:
        row = self._table[bucket]
        for s in range(self.BUCKET_SIZE):
            if row[s] == 0:
                row[s] = fp
                return True
        return False

    def _place(self, fp: int, i1: int) -> bool:
        i2 = self._alt_index(i1, fp)
        if self._try_slot(i1, fp) or self._try_slot(i2, fp):
            self._count += 1
            return True
        bucket = self._rng.choice((i1, i2))
        trail: list[tuple[int, int, int]] = []
        cur = fp
        table = self._table
        for _ in range(self.MAX_KICKS):
            slot = self._rng.randrange(self.BUCKET_SIZE)
            victim = int(table[bucket, slot])
            table[bucket, slot] = cur
            trail.append((bucket, slot, victim))
            cur = victim
            bucket = self._alt_index(bucket, cur)
            if self._try_slot(bucket, cur):
                self._count += 1
                return True
        for b, s, victim in reversed(trail):
            table[b, s] = victim
        return False

    def insert(self, key: bytes) -> bool:
        """Place the key's fingerprint; False means the table is full."""
        fp, i1 = self._fingerprint_and_index(key)
        return self._place(fp, i1)

    def query(self, key: bytes) -> bool:
        fp, i1 = self._fingerprint_and_index(key)
        i2 = self._alt_index(i1, fp)
        table = self._table
        return bool((table[i1] == fp).any() or (table[i2] == fp).any())

    def delete(self, key: bytes) -> bool:
        """Remove one copy of the fingerprint if present."""
        fp, i1 = self._fingerprint_and_index(key)
        for bucket in (i1, self._alt_index(i1, fp)):
            row = self._table[bucket]
            hits = np.flatnonzero(row == fp)
            if hits.size:
                row[hits[0]] = 0
                self._count -= 1
                return True
        return False

    def _batch_addresses(self, packed: PackedKeys) -> tuple[np.ndarray, np.ndarray]:
        fp = (hash_many(_MURMUR2, packed, _CF_FP_SEED) & np.uint32(0xFFFF)).astype(np.uint16)
        fp[fp == 0] = 1
        i1 = (hash_many(_MURMUR2, packed, _CF_INDEX_SEED) & np.uint32(self._mask)).astype(np.int64)
        return fp, i1

    def insert_batch(self, keys: PackedKeys | Sequence[bytes]) -> int:
        """Insert every key; returns how many placements succeeded."""
        packed = as_packed(keys)
        fp, i1 = self._batch_addresses(packed)
        ok = 0
        for k in range(len(packed)):
            ok += self._place(int(fp[k]), int(i1[k]))
        return ok

    def query_batch(self, keys: PackedKeys | Sequence[bytes]) -> np.ndarray:
        packed = as_packed(keys)
        fp, i1 = self._batch_addresses(packed)
        i2 = (i1 ^ _fp_mix_table()[fp].astype(np.int64)) & self._mask
        table = self._table
        want = fp[:, None]
        return ((table[i1] == want) | (table[i2] == want)).any(axis=1)

    def memory_bytes(self) -> int:
        return self._table.nbytes

    @classmethod
    def memory_model(cls, n: int) -> int:
        """Modeled footprint: buckets * 4 slots * 16-bit fingerprints."""
        return cls._bucket_count(n) * cls.BUCKET_SIZE * cls.FINGERPRINT_BITS // 8
