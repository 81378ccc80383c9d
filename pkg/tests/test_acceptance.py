"""Acceptance gate: one test (or parametrized family) per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to get one
``CRITERION nn: ...`` line per check.

Two checks are marked xfail(strict) rather than weakened, because the
bound they state is unattainable by construction, not by implementation
quality. The filter makes hash_calls = ceil(lambda/2) single-bit probes
but is sized by the classic lambda-hash formula m = -n ln(eps)/ln(2)^2.
With k = 5 probes into B = M*N*61 usable bits, the steady-state rate is

    fpp = (1 - exp(-k*n/B))**k  ~=  2.7e-3   at eps = 0.001 sizing,

confirmed empirically to three digits for all eight hash functions
(ideal uniform digests give the same number, so no hash can close the
gap; even lifting B to the full m-bit budget only reaches 2.2e-3).
Meeting 1.5e-3 would need either k = lambda probes (contradicting the
halved-call design pinned by criteria 1 and 6) or ~15% more memory
(contradicting criterion 2's allocation bracket). The affected checks
are criterion 5's 2-D-filter clause and criterion 8.
"""

import os
import random

import numpy as np
import pytest

from bloomkit.baselines import CountingBF, CuckooFilter, KirschBF
from bloomkit.bench import (
    WorkloadKind,
    build_workload,
    gen_keys,
    run_lookup_bench,
)
from bloomkit.filter2d import Filter2D, SnapshotError, size_params
from bloomkit.hashes import HashFunction
from bloomkit.pipeline import (
    Gateway,
    Label,
    UrlRecord,
    Verdict,
    dedup,
    ingest_csv,
    malignant_benign_experiment,
    pad_to_square,
    split_counts,
    train_baseline,
)

MIB = 2**20
EPS = 0.001
FPP_BOUND = 0.0015  # 1.5 * epsilon headroom, per the criteria
CF_FPP_BOUND = 2.4e-4  # 2 * (2*4/2^16) for 4-slot buckets, 16-bit prints


def announce(num, text):
    print(f"\nCRITERION {num:02d}: {text}")


# ---------------------------------------------------------------------------
# 1. sizing reproduction
# ---------------------------------------------------------------------------


def test_criterion_01_sizing_reproduction():
    cfg = size_params(10**7, EPS)
    mib = cfg.m / 8 / MIB
    assert abs(mib - 17.14) <= 0.01
    assert cfg.lam == 10
    assert cfg.hash_calls == 5
    announce(1, f"PASS sizing(1e7, 0.001) -> {mib:.4f} MiB, lambda=10, hash_calls=5")


# ---------------------------------------------------------------------------
# 2. memory table (computed, not allocated)
# ---------------------------------------------------------------------------


def test_criterion_02_memory_table():
    kirsch = KirschBF.memory_model(10**7, EPS) / MIB
    cbf = CountingBF.memory_model(10**7, EPS) / MIB
    f2d = size_params(10**7, EPS).memory_bytes() / MIB
    assert abs(kirsch - 17.14) <= 0.01
    assert abs(cbf - 68.56) <= 0.04
    assert abs(cbf / kirsch - 4.0) < 1e-9
    assert 17.14 <= f2d <= 17.6
    announce(2, f"PASS kirsch={kirsch:.4f} MiB, cbf={cbf:.4f} MiB (4x), 2dbf alloc={f2d:.4f} MiB")


# ---------------------------------------------------------------------------
# 3. zero false negatives
# ---------------------------------------------------------------------------


N3 = 10**5


@pytest.fixture(scope="module")
def corpus_100k():
    return gen_keys(N3, seed=42)


@pytest.mark.parametrize("name", ["2dbf", "kirsch", "cbf", "cuckoo"])
def test_criterion_03_zero_false_negatives(name, corpus_100k):
    filt = {
        "2dbf": lambda: Filter2D.create(N3, EPS),
        "kirsch": lambda: KirschBF(N3, EPS),
        "cbf": lambda: CountingBF(N3, EPS),
        "cuckoo": lambda: CuckooFilter(N3),
    }[name]()
    filt.insert_batch(corpus_100k.packed)
    hits = filt.query_batch(corpus_100k.packed)
    assert int(hits.sum()) == N3  # 100% true positives, fn = 0, exact
    announce(3, f"PASS {name}: {N3} inserts, {N3}/{N3} true positives, fn=0")


# ---------------------------------------------------------------------------
# 4. same-set FPP is exactly zero everywhere
# ---------------------------------------------------------------------------


def test_criterion_04_same_set_fpp_zero(corpus_100k):
    same = build_workload(corpus_100k, WorkloadKind.SAME)
    checked = []
    for fn in HashFunction:
        filt = Filter2D.create(N3, EPS, fn)
        filt.insert_batch(corpus_100k.packed)
        report = run_lookup_bench(filt, same, workload_name="same", epsilon=EPS)
        assert report.fpp == 0.0 and report.fn == 0, fn
        checked.append(filt.name)
    for factory in (lambda: KirschBF(N3, EPS), lambda: CountingBF(N3, EPS), lambda: CuckooFilter(N3)):
        filt = factory()
        filt.insert_batch(corpus_100k.packed)
        report = run_lookup_bench(filt, same, workload_name="same", epsilon=EPS)
        assert report.fpp == 0.0 and report.fn == 0, filt.name
        checked.append(filt.name)
    announce(4, f"PASS same-set fpp == 0 for {len(checked)} filters ({N3} keys each)")


# ---------------------------------------------------------------------------
# 5. FPP bound at desk scale (n = 1e6, 1e6 disjoint probes)
# ---------------------------------------------------------------------------


N5 = 10**6


@pytest.fixture(scope="module")
def desk_scale():
    inserted = gen_keys(N5, seed=42)
    probes = build_workload(inserted, WorkloadKind.DISJOINT, N5, seed=43)
    return inserted, probes


def _measure_fpp(filt, inserted, probes) -> float:
    filt.insert_batch(inserted.packed)
    return float(filt.query_batch(probes.packed).mean())


@pytest.mark.parametrize(
    "factory,bound",
    [
        (lambda: KirschBF(N5, EPS), FPP_BOUND),
        (lambda: CountingBF(N5, EPS), FPP_BOUND),
        (lambda: CuckooFilter(N5), CF_FPP_BOUND),
    ],
    ids=["kirsch", "cbf", "cuckoo"],
)
def test_criterion_05_fpp_bound_baselines(factory, bound, desk_scale):
    filt = factory()
    fpp = _measure_fpp(filt, *desk_scale)
    assert fpp <= bound, f"{filt.name}: {fpp} > {bound}"
    announce(5, f"PASS {filt.name}: disjoint fpp {fpp:.6f} <= {bound}")


@pytest.mark.parametrize("fn", list(HashFunction), ids=[f.value for f in HashFunction])
@pytest.mark.xfail(
    strict=True,
    reason="unattainable by construction: ceil(lambda/2)=5 single-bit probes "
    "under the lambda=10 sizing give fpp = (1-exp(-5n/(M*N*61)))**5 ~= 2.7e-3 "
    "> 1.5e-3 for every hash function (ideal uniform digests included); "
    "see module docstring and the decisions ledger",
)
def test_criterion_05_fpp_bound_filter2d(fn, desk_scale):
    filt = Filter2D.create(N5, EPS, fn)
    fpp = _measure_fpp(filt, *desk_scale)
    announce(5, f"{filt.name}: disjoint fpp {fpp:.6f} vs stated bound {FPP_BOUND}")
    assert fpp <= FPP_BOUND


# ---------------------------------------------------------------------------
# 6. probe-count ordering: disjoint < mixed < same = hash_calls
# ---------------------------------------------------------------------------


def test_criterion_06_probe_count_ordering():
    n = 10**5
    for seed in range(5):
        inserted = gen_keys(n, seed=100 + seed)
        filt = Filter2D.create(n, EPS)
        filt.insert_batch(inserted.packed)
        means = {}
        for kind in (WorkloadKind.DISJOINT, WorkloadKind.MIXED, WorkloadKind.SAME):
            qc = None if kind is WorkloadKind.SAME else n
            corpus = build_workload(inserted, kind, qc, seed=200 + seed)
            means[kind] = run_lookup_bench(filt, corpus, workload_name=kind.value).mean_probes
        assert means[WorkloadKind.DISJOINT] < means[WorkloadKind.MIXED] < means[WorkloadKind.SAME]
        assert means[WorkloadKind.SAME] == filt.config.hash_calls
        announce(
            6,
            f"seed {seed}: disjoint {means[WorkloadKind.DISJOINT]:.3f} < "
            f"mixed {means[WorkloadKind.MIXED]:.3f} < same {means[WorkloadKind.SAME]:.1f}"
            f" = hash_calls",
        )
    announce(6, "PASS strict probe ordering held for 5 seeds")


# ---------------------------------------------------------------------------
# 7. dedup property
# ---------------------------------------------------------------------------


def test_criterion_07_dedup_property():
    uniques = gen_keys(10**4, seed=77).keys
    stream = uniques * 3
    random.Random(78).shuffle(stream)
    result = dedup(stream, epsilon=EPS, capacity=len(uniques))
    out = set(result.unique)
    suppressed = set(uniques) - out  # exact-set oracle recovers the FP losses
    assert len(result.unique) >= 10**4 * (1 - FPP_BOUND)
    assert out | suppressed == set(uniques)
    assert len(out) + len(suppressed) == 10**4
    announce(
        7,
        f"PASS dedup 3x10^4 stream: {len(result.unique)} uniques out, "
        f"{len(suppressed)} fp-suppressed, union == exact set",
    )


@pytest.mark.skipif(
    "BLOOMKIT_URL_CORPUS" not in os.environ,
    reason="real malicious-URL corpus not supplied (set BLOOMKIT_URL_CORPUS)",
)
def test_criterion_07_dedup_real_corpus():
    urls = [
        line.rstrip("\n").encode()
        for line in open(os.environ["BLOOMKIT_URL_CORPUS"], encoding="utf-8", errors="replace")
        if line.strip()
    ]
    result = dedup(urls, epsilon=EPS, capacity=len(urls))
    assert result.report.accuracy_pct >= 99.7
    announce(7, f"PASS real corpus dedup accuracy {result.report.accuracy_pct:.4f} >= 99.7")


# ---------------------------------------------------------------------------
# 8. malignant/benign experiment (xfail: same root cause as criterion 5)
# ---------------------------------------------------------------------------


@pytest.mark.xfail(
    strict=True,
    reason="unattainable by construction: the filter's steady-state fpp at "
    "eps=0.001 sizing is ~2.7e-3 (see criterion 5 / module docstring), so "
    "accuracy lands near 99.73, short of the stated 99.85",
)
def test_criterion_08_malignant_benign_property():
    mal = gen_keys(10**5, seed=81).keys
    ben = gen_keys(10**5, seed=82).keys
    mal_set = set(mal)
    ben = [b for b in ben if b not in mal_set]
    result = malignant_benign_experiment(mal, ben, epsilon=EPS)
    r = result.lookup_report
    announce(8, f"measured fpp {r.fpp:.6f}, accuracy {r.accuracy_pct:.4f} vs stated 99.85")
    assert r.fpp <= FPP_BOUND
    assert r.accuracy_pct >= 99.85


# ---------------------------------------------------------------------------
# 9. gateway self-adjustment
# ---------------------------------------------------------------------------


class CountingStub:
    def __init__(self):
        self.calls = 0

    def classify(self, record):
        self.calls += 1
        malignant = record.url[-1] % 2 == 0
        return (Label.MALIGNANT if malignant else Label.BENIGN), float(malignant)


def test_criterion_09_gateway_self_adjustment():
    rng = random.Random(90)
    urls = [f"http://{rng.getrandbits(64):016x}.example/{i}".encode() for i in range(10**4)]
    stub = CountingStub()
    gw = Gateway.create(stub, capacity=10**5, epsilon=EPS)
    for u in urls:
        gw.check_url(u)
    assert stub.calls == 10**4  # exact: one classification per distinct URL
    pass_two = [gw.check_url(u) for u in urls]
    assert stub.calls == 10**4  # exact: zero additional classifications
    assert all(v in (Verdict.BLOCKED_BY_FILTER, Verdict.ALLOWED_BY_FILTER) for v in pass_two)
    announce(9, "PASS 10^4 URLs x2: classifier calls 10000 then +0; pass two all filter verdicts")


# ---------------------------------------------------------------------------
# 10. serialization
# ---------------------------------------------------------------------------


def test_criterion_10_serialization():
    rng = random.Random(101)
    filt = Filter2D.create(10**4, EPS)
    filt.insert_batch([rng.randbytes(rng.randint(8, 40)) for _ in range(10**4)])
    probes = [rng.randbytes(rng.randint(8, 40)) for _ in range(10**4)]
    blob = filt.serialize()
    back = Filter2D.deserialize(blob)
    assert np.array_equal(back.query_batch(probes), filt.query_batch(probes))

    corrupt = bytearray(blob)
    pos = rng.randrange(4, len(blob))
    corrupt[pos] ^= 1 << rng.randrange(8)
    with pytest.raises(SnapshotError):
        Filter2D.deserialize(bytes(corrupt))
    announce(10, "PASS round-trip identical on 10^4 probes; CRC catches single-bit corruption")


# ---------------------------------------------------------------------------
# 11. preprocessing
# ---------------------------------------------------------------------------


def test_criterion_11_preprocessing():
    assert list(pad_to_square([3, 5, 0, 1, 6, 2, 4])) == [3, 5, 0, 1, 6, 2, 4, 0, 0]

    import io

    rec = ingest_csv(io.StringIO("f1,f2,f3,label\n1,NaN,nan,benign\n")).records[0]
    assert rec.features[1] == 0.0 and rec.features[2] == 0.0

    n_train, n_val, n_test = split_counts(14479)
    assert abs(n_train - 8687) <= 1
    assert abs(n_val - 4923) <= 1
    assert abs(n_test - 869) <= 1
    announce(11, f"PASS pad 7->9 with two zeros; NaN -> 0.0; 14479 -> {n_train}/{n_val}/{n_test}")


# ---------------------------------------------------------------------------
# 12. baseline classifier sanity
# ---------------------------------------------------------------------------


def test_criterion_12_classifier_on_separable_data():
    rng = np.random.default_rng(120)
    records = []
    for _ in range(5000):
        records.append(UrlRecord(b"", pad_to_square(rng.normal(3.0, 1.0, 2)), Label.MALIGNANT, 2))
    for _ in range(5000):
        records.append(UrlRecord(b"", pad_to_square(rng.normal(-3.0, 1.0, 2)), Label.BENIGN, 2))
    result = train_baseline(records, seed=121)
    assert result.test_accuracy >= 99.0
    announce(12, f"PASS separable 10^4 points: test accuracy {result.test_accuracy:.2f}% >= 99%")


@pytest.mark.skipif(
    "BLOOMKIT_URL_DATASET" not in os.environ,
    reason="real URL dataset not supplied (set BLOOMKIT_URL_DATASET to the CSV)",
)
def test_criterion_12_classifier_on_real_dataset():
    result_ingest = ingest_csv(os.environ["BLOOMKIT_URL_DATASET"])
    result = train_baseline(result_ingest.records)
    # reported without a hard bound: the baseline is a stand-in, not a CNN
    announce(12, f"real dataset baseline: test accuracy {result.test_accuracy:.2f}% (reported only)")


# ---------------------------------------------------------------------------
# 13. documented-only divergences
# ---------------------------------------------------------------------------


def test_criterion_13_documented_divergences():
    readme = open(os.path.join(os.path.dirname(__file__), "..", "README.md"), encoding="utf-8").read()
    assert "wall-clock" in readme.lower()
    assert "mutating" in readme.lower()  # the reference cuckoo lookup defect
    announce(13, "PASS divergences documented in README (wall-clock figures; cuckoo lookup defect)")
