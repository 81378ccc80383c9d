"""2-D filter: sizing, addressing, membership semantics, snapshots."""

import math
import random

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from bloomkit import hashes as H
from bloomkit.bench import build_workload, gen_keys, WorkloadKind
from bloomkit.filter2d import (
    DEFAULT_BETA,
    Filter2D,
    SnapshotError,
    address,
    derive_seeds,
    size_params,
)
from bloomkit.hashes import HashFunction
from bloomkit.primes import is_prime, next_prime, prev_prime


# ---------------------------------------------------------------------------
# primes (oracle: sympy)
# ---------------------------------------------------------------------------


def test_is_prime_matches_sympy():
    for x in range(0, 2000):
        assert is_prime(x) == sympy.isprime(x), x


def test_prev_next_prime_match_sympy():
    for x in list(range(3, 400)) + [1499, 22465, 10**6]:
        assert prev_prime(x) == sympy.prevprime(x), x
        assert next_prime(x) == sympy.nextprime(x), x


# ---------------------------------------------------------------------------
# sizing
# ---------------------------------------------------------------------------


def test_10m_key_sizing():
    cfg = size_params(10**7, 0.001)
    assert abs(cfg.m / 8 / 2**20 - 17.14) <= 0.01
    assert cfg.lam == 10
    assert cfg.hash_calls == 5
    assert len(cfg.seeds) == 5 and len(set(cfg.seeds)) == 5


def test_degenerate_sizing():
    cfg = size_params(1, 0.5)
    assert cfg.m == 2
    assert cfg.lam == 1
    assert cfg.hash_calls == 1
    assert (cfg.rows, cfg.cols) == (2, 3)


def test_sizing_formula_direct_evaluation():
    # m = ceil(-n ln(eps) / ln(2)^2), evaluated independently
    for n, eps in [(10**6, 0.01), (12345, 0.05), (1, 0.5), (999, 0.001)]:
        cfg = size_params(n, eps)
        assert cfg.m == math.ceil(-n * math.log(eps) / math.log(2) ** 2)
        assert cfg.lam == max(1, round(cfg.m / n * math.log(2)))
        assert cfg.hash_calls == math.ceil(cfg.lam / 2)


def test_dimensions_bracket_the_cell_count():
    for n, eps in [(10**4, 0.001), (10**6, 0.001), (10**7, 0.001), (129988, 0.001)]:
        cfg = size_params(n, eps)
        cells = -(-cfg.m // 64)
        s = math.isqrt(cells)
        if s * s != cells:
            s += 1
        assert is_prime(cfg.rows) and is_prime(cfg.cols)
        assert cfg.rows < s or (cfg.rows, cfg.cols) == (2, 3)
        assert cfg.cols > s or (cfg.rows, cfg.cols) == (2, 3)
        assert cfg.rows != cfg.cols


def test_sizing_rejects_bad_arguments():
    with pytest.raises(ValueError):
        size_params(0, 0.01)
    with pytest.raises(ValueError):
        size_params(10, 0.0)
    with pytest.raises(ValueError):
        size_params(10, 1.0)
    with pytest.raises(ValueError):
        size_params(10, 0.5, beta=65)


def test_seed_derivation_is_fixed():
    assert derive_seeds(3) == tuple((0x9E3779B9 * (k + 1)) & 0xFFFFFFFF for k in range(3))


# ---------------------------------------------------------------------------
# addressing
# ---------------------------------------------------------------------------


def test_address_zero_digest():
    cfg = size_params(1000, 0.01)
    assert address(0, cfg) == (0, 0, 0)


def test_address_common_multiple():
    cfg = size_params(1000, 0.01)
    h = cfg.rows * cfg.cols * cfg.beta
    assert address(h, cfg) == (0, 0, 0)


def test_address_integer_arithmetic():
    cfg = size_params(10**7, 0.001)
    assert (cfg.rows, cfg.cols, cfg.beta) == (1493, 1511, 61)
    h = 123456789
    assert address(h, cfg) == (h % 1493, h % 1511, h % 61)


def test_address_with_explicit_prime_pair():
    from bloomkit.filter2d import Filter2DConfig

    cfg = Filter2DConfig(
        n=1, epsilon=0.5, m=1, rows=4093, cols=4099, beta=61,
        lam=1, hash_calls=1, seeds=(1,), hash_fn=HashFunction.MMURMUR,
    )
    h = 123456789
    assert address(h, cfg) == (h % 4093, h % 4099, h % 61) == (3723, 3107, 48)


# ---------------------------------------------------------------------------
# insert / query semantics
# ---------------------------------------------------------------------------


def bit_count(filt):
    return int(np.bitwise_count(filt.cells).sum())


def test_no_false_negatives():
    rng = random.Random(3)
    keys = [rng.randbytes(rng.randint(1, 40)) for _ in range(10_000)]
    filt = Filter2D.create(10_000, 0.01)
    filt.insert_batch(keys)
    assert filt.query_batch(keys).all()


def test_single_insert_sets_between_one_and_hash_calls_bits():
    filt = Filter2D.create(10**5, 0.001)
    filt.insert(b"solitary")
    assert 1 <= bit_count(filt) <= filt.config.hash_calls


def test_reinsert_leaves_cells_unchanged():
    filt = Filter2D.create(1000, 0.01)
    filt.insert(b"dup")
    before = filt.cells.copy()
    filt.insert(b"dup")
    assert np.array_equal(filt.cells, before)
    assert filt.inserted_count == 2  # counts calls, not distinct keys


def test_query_on_empty_filter_costs_one_hash_call():
    filt = Filter2D.create(1000, 0.01)
    H.reset_call_counter()
    assert not filt.query(b"anything")
    assert H.reset_call_counter() == 1


def test_query_hit_costs_exactly_hash_calls():
    filt = Filter2D.create(1000, 0.01)
    filt.insert(b"present")
    H.reset_call_counter()
    assert filt.query(b"present")
    assert H.reset_call_counter() == filt.config.hash_calls


def test_insert_costs_exactly_hash_calls():
    filt = Filter2D.create(1000, 0.01)
    H.reset_call_counter()
    filt.insert(b"k")
    assert H.reset_call_counter() == filt.config.hash_calls


def test_only_bits_below_beta_are_set():
    filt = Filter2D.create(500, 0.01)
    rng = random.Random(9)
    filt.insert_batch([rng.randbytes(12) for _ in range(500)])
    assert not np.any(filt.cells >> np.uint64(DEFAULT_BETA))


@given(st.lists(st.binary(min_size=1, max_size=24), min_size=1, max_size=60))
@settings(max_examples=50, deadline=None)
def test_monotone_growth_and_membership(keys):
    filt = Filter2D.create(200, 0.05)
    bits = 0
    for key in keys:
        filt.insert(key)
        now = bit_count(filt)
        assert now >= bits
        bits = now
        assert filt.query(key)


# ---------------------------------------------------------------------------
# batch parity
# ---------------------------------------------------------------------------


def test_batch_insert_matches_scalar_insert():
    rng = random.Random(11)
    keys = [rng.randbytes(rng.randint(0, 48)) for _ in range(700)]
    a = Filter2D.create(1000, 0.01)
    b = Filter2D.create(1000, 0.01)
    for k in keys:
        a.insert(k)
    b.insert_batch(keys)
    assert a.serialize() == b.serialize()


def test_batch_query_matches_scalar_query_and_probe_count():
    rng = random.Random(12)
    keys = [rng.randbytes(rng.randint(1, 48)) for _ in range(900)]
    filt = Filter2D.create(600, 0.01)
    filt.insert_batch(keys[:300])
    H.reset_call_counter()
    scalar = [filt.query(k) for k in keys]
    scalar_probes = H.reset_call_counter()
    batch = filt.query_batch(keys)
    batch_probes = H.reset_call_counter()
    assert list(batch) == scalar
    assert batch_probes == scalar_probes


# ---------------------------------------------------------------------------
# occupancy model
# ---------------------------------------------------------------------------


def test_fill_ratio_empty():
    assert Filter2D.create(100, 0.01).fill_ratio() == 0.0


def test_fill_ratio_single_key_bound():
    filt = Filter2D.create(10**4, 0.001)
    filt.insert(b"one")
    assert filt.fill_ratio() <= filt.config.hash_calls / filt.config.usable_bits()


def test_fill_ratio_matches_occupancy_model_at_capacity():
    # P(bit unset after n inserts) = exp(-hash_calls * n / usable_bits)
    n = 100_000
    filt = Filter2D.create(n, 0.001)
    filt.insert_batch(gen_keys(n, seed=21).keys)
    cfg = filt.config
    expected = 1.0 - math.exp(-cfg.hash_calls * n / cfg.usable_bits())
    assert abs(filt.fill_ratio() - expected) <= 0.02


def test_measured_fpp_tracks_the_occupancy_model():
    # The same occupancy arithmetic as fpp_model: fill**hash_calls. The target
    # epsilon is NOT met by construction (see acceptance notes); this
    # pins the rate the design actually delivers.
    n = 100_000
    inserted = gen_keys(n, seed=31)
    filt = Filter2D.create(n, 0.001)
    filt.insert_batch(inserted.packed)
    probes = build_workload(inserted, WorkloadKind.DISJOINT, n, seed=32)
    fpp = filt.query_batch(probes.packed).mean()
    model = filt.config.fpp_model()
    assert model * 0.75 <= fpp <= model * 1.25


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------


def test_round_trip_empty_filter():
    filt = Filter2D.create(100, 0.01)
    back = Filter2D.deserialize(filt.serialize())
    assert not back.query(b"x")
    assert back.serialize() == filt.serialize()


def test_round_trip_preserves_all_answers():
    rng = random.Random(13)
    filt = Filter2D.create(1000, 0.001, HashFunction.XXHASH32)
    filt.insert_batch([rng.randbytes(rng.randint(1, 32)) for _ in range(1000)])
    probes = [rng.randbytes(rng.randint(1, 32)) for _ in range(10_000)]
    back = Filter2D.deserialize(filt.serialize())
    assert back.config == filt.config or (
        # epsilon is re-derived from (n, m); everything else is bit-exact
        back.config.m == filt.config.m
        and back.config.n == filt.config.n
        and back.config.seeds == filt.config.seeds
        and back.config.hash_fn == filt.config.hash_fn
        and (back.config.rows, back.config.cols) == (filt.config.rows, filt.config.cols)
        and (back.config.lam, back.config.hash_calls) == (filt.config.lam, filt.config.hash_calls)
    )
    assert back.inserted_count == filt.inserted_count
    assert np.array_equal(back.query_batch(probes), filt.query_batch(probes))


def test_truncated_snapshot_rejected():
    blob = Filter2D.create(100, 0.01).serialize()
    for cut in (0, 3, 40, len(blob) - 5):
        with pytest.raises(SnapshotError):
            Filter2D.deserialize(blob[:cut])


def test_bad_magic_rejected():
    blob = bytearray(Filter2D.create(100, 0.01).serialize())
    blob[:4] = b"NOPE"
    with pytest.raises(SnapshotError, match="magic"):
        Filter2D.deserialize(bytes(blob))


def test_single_bit_corruption_detected():
    blob = Filter2D.create(100, 0.01).serialize()
    rng = random.Random(17)
    for _ in range(20):
        flipped = bytearray(blob)
        pos = rng.randrange(4, len(blob))  # keep the magic so CRC does the work
        flipped[pos] ^= 1 << rng.randrange(8)
        with pytest.raises(SnapshotError):
            Filter2D.deserialize(bytes(flipped))


def _patched_snapshot(mutate):
    """Rebuild a snapshot with mutated fields and a recomputed CRC."""
    import struct
    import zlib

    blob = bytearray(Filter2D.create(100, 0.01).serialize())
    mutate(blob)
    body = bytes(blob[:-4])
    return body + struct.pack("<I", zlib.crc32(body))


def test_unsupported_version_rejected():
    def bump_version(blob):
        blob[4] = 9

    with pytest.raises(SnapshotError, match="version"):
        Filter2D.deserialize(_patched_snapshot(bump_version))


def test_non_prime_dimensions_rejected():
    import struct

    def break_rows(blob):
        blob[7 + 8 * 2 : 7 + 8 * 3] = struct.pack("<Q", 42)  # rows field

    with pytest.raises(SnapshotError, match="prime"):
        Filter2D.deserialize(_patched_snapshot(break_rows))


def test_bits_at_or_above_beta_rejected():
    filt = Filter2D.create(100, 0.01)
    filt._cells[0, 0] = np.uint64(1) << np.uint64(63)
    with pytest.raises(SnapshotError, match="beta"):
        Filter2D.deserialize(filt.serialize())


def test_save_load_files(tmp_path):
    filt = Filter2D.create(100, 0.01)
    filt.insert(b"persisted")
    path = tmp_path / "f.bf"
    filt.save(path)
    assert Filter2D.load(path).query(b"persisted")
