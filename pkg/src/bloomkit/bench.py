"""Workload generation and the four-workload benchmark harness.

A benchmark inserts one key corpus into a filter and then replays a
query corpus of one of four kinds against it:

    same      query set == inserted set
    mixed     exactly half the queries drawn from the inserted set,
              half guaranteed absent
    disjoint  no query overlaps the inserted set
    random    fresh random keys; residual overlap is not prevented,
              ground-truth labels are computed after generation

Every query outcome is classified against the ground truth (true/false
positive/negative); with no deletions false negatives cannot occur.
Throughput is reported as MOPS = ops / (elapsed * 1e6), and the mean
number of instrumented hash calls per lookup comes from the hash-call
counter, which is what makes the short-circuit behavior of negative
queries visible.

Each benchmark cell is single-threaded (timings and probe counts mean
nothing otherwise); compare_filters can still run cells in parallel
because every cell owns its filter and the counter is per-thread.
"""

from __future__ import annotations

import enum
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .baselines import CountingBF, CuckooFilter, KirschBF
from .filter2d import Filter2D
from .hashes import HashFunction, reset_call_counter
from .hashvec import PackedKeys

DEFAULT_LENGTH_RANGE = (16, 64)

# printable ASCII without whitespace, so corpora survive line-based files
_ALPHABET = np.frombuffer(bytes(range(33, 127)), dtype=np.uint8)


class WorkloadKind(enum.Enum):
    SAME = "same"
    MIXED = "mixed"
    DISJOINT = "disjoint"
    RANDOM = "random"

    @classmethod
    def from_name(cls, name: str) -> "WorkloadKind":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown workload {name!r} (expected one of: {valid})") from None


@dataclass
class KeyCorpus:
    """Ordered keys plus per-key ground-truth membership labels."""

    keys: list[bytes]
    labels: np.ndarray

    def __post_init__(self):
        self._packed: PackedKeys | None = None

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def packed(self) -> PackedKeys:
        packed = self._packed
        if packed is None:
            packed = PackedKeys.from_keys(self.keys)
            self._packed = packed
        return packed


def _random_keys(
    count: int,
    length_range: tuple[int, int],
    rng: np.random.Generator,
    exclude: set[bytes] | None = None,
) -> list[bytes]:
    """Distinct random printable keys, none of them in ``exclude``."""
    lo, hi = length_range
    if not 1 <= lo <= hi:
        raise ValueError(f"bad length range {length_range}")
    seen: set[bytes] = set()
    out: list[bytes] = []
    while len(out) < count:
        need = count - len(out)
        lengths = rng.integers(lo, hi + 1, size=need)
        flat = _ALPHABET[rng.integers(0, len(_ALPHABET), size=int(lengths.sum()))].tobytes()
        pos = 0
        for ln in lengths:
            key = flat[pos : pos + int(ln)]
            pos += int(ln)
            if key in seen or (exclude is not None and key in exclude):
                continue
            seen.add(key)
            out.append(key)
    return out


def gen_keys(
    count: int,
    length_range: tuple[int, int] = DEFAULT_LENGTH_RANGE,
    seed: int = 0,
) -> KeyCorpus:
    """Generate ``count`` pairwise-distinct keys, deterministically."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    keys = _random_keys(count, length_range, rng)
    return KeyCorpus(keys, np.ones(count, dtype=bool))


def build_workload(
    inserted: KeyCorpus,
    kind: WorkloadKind,
    query_count: int | None = None,
    seed: int = 1,
    length_range: tuple[int, int] = DEFAULT_LENGTH_RANGE,
) -> KeyCorpus:
    """Build a query corpus of the given kind over the inserted corpus."""
    if not len(inserted):
        raise ValueError("inserted corpus is empty")
    rng = np.random.default_rng(seed)

    if kind is WorkloadKind.SAME:
        if query_count is not None and query_count != len(inserted):
            raise ValueError("same-set workload queries exactly the inserted corpus")
        return KeyCorpus(list(inserted.keys), np.ones(len(inserted), dtype=bool))

    count = len(inserted) if query_count is None else query_count
    if count < 1:
        raise ValueError(f"query_count must be >= 1, got {count}")

    if kind is WorkloadKind.MIXED:
        if count % 2:
            raise ValueError(f"mixed workload needs an even query count, got {count}")
        half = count // 2
        if half > len(inserted):
            raise ValueError("mixed workload needs query_count/2 <= inserted size")
        inserted_set = set(inserted.keys)
        members = [inserted.keys[i] for i in rng.choice(len(inserted), size=half, replace=False)]
        outsiders = _random_keys(half, length_range, rng, exclude=inserted_set)
        keys = members + outsiders
        labels = np.zeros(count, dtype=bool)
        labels[:half] = True
        order = rng.permutation(count)
        return KeyCorpus([keys[i] for i in order], labels[order])

    if kind is WorkloadKind.DISJOINT:
        inserted_set = set(inserted.keys)
        keys = _random_keys(count, length_range, rng, exclude=inserted_set)
        return KeyCorpus(keys, np.zeros(count, dtype=bool))

    if kind is WorkloadKind.RANDOM:
        # generated independently; overlap is allowed and labeled post hoc
        keys = _random_keys(count, length_range, rng)
        inserted_set = set(inserted.keys)
        labels = np.fromiter((k in inserted_set for k in keys), dtype=bool, count=count)
        return KeyCorpus(keys, labels)

    raise ValueError(f"unhandled workload kind {kind}")


def mops(op_count: int, elapsed_s: float) -> float:
    """Million operations per second; 0 for degenerate runs."""
    if elapsed_s <= 0.0 or op_count == 0:
        return 0.0
    return op_count / (elapsed_s * 1e6)


@dataclass
class MetricsReport:
    filter_name: str
    workload: str
    n: int
    epsilon: float | None
    elapsed_s: float
    mops: float
    tp: int
    fp: int
    tn: int
    fn: int
    fpp: float
    accuracy_pct: float
    mean_probes: float
    memory_bytes: int

    def to_dict(self) -> dict:
        out = asdict(self)
        out["filter"] = out.pop("filter_name")  # wire name in report documents
        return out


def _classify(hits: np.ndarray, labels: np.ndarray) -> tuple[int, int, int, int]:
    tp = int(np.sum(hits & labels))
    fp = int(np.sum(hits & ~labels))
    tn = int(np.sum(~hits & ~labels))
    fn = int(np.sum(~hits & labels))
    return tp, fp, tn, fn


def run_lookup_bench(
    filt,
    workload: KeyCorpus,
    *,
    workload_name: str | None = None,
    epsilon: float | None = None,
) -> MetricsReport:
    """Query every workload key and score the outcomes."""
    packed = workload.packed  # built outside the timed region
    reset_call_counter()
    t0 = time.perf_counter()
    if hasattr(filt, "query_batch"):
        hits = np.asarray(filt.query_batch(packed), dtype=bool)
    else:
        hits = np.fromiter((filt.query(k) for k in workload.keys), dtype=bool, count=len(workload))
    elapsed = time.perf_counter() - t0
    probes = reset_call_counter()

    tp, fp, tn, fn = _classify(hits, workload.labels)
    fpp = fp / (fp + tn) if fp + tn else 0.0
    count = len(workload)
    return MetricsReport(
        filter_name=getattr(filt, "name", type(filt).__name__),
        workload=workload_name or "lookup",
        n=count,
        epsilon=epsilon,
        elapsed_s=elapsed,
        mops=mops(count, elapsed),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        fpp=fpp,
        accuracy_pct=100.0 * (1.0 - fpp),
        mean_probes=probes / count if count else 0.0,
        memory_bytes=filt.memory_bytes() if hasattr(filt, "memory_bytes") else 0,
    )


def run_insert_bench(factory: Callable[[], object], inserted: KeyCorpus, *, epsilon: float | None = None):
    """Build a fresh filter and insert the corpus; returns (report, filter)."""
    filt = factory()
    packed = inserted.packed if len(inserted) else None
    reset_call_counter()
    t0 = time.perf_counter()
    if packed is not None:
        if hasattr(filt, "insert_batch"):
            filt.insert_batch(packed)
        else:
            for k in inserted.keys:
                filt.insert(k)
    elapsed = time.perf_counter() - t0
    probes = reset_call_counter()
    count = len(inserted)
    report = MetricsReport(
        filter_name=getattr(filt, "name", type(filt).__name__),
        workload="insert",
        n=count,
        epsilon=epsilon,
        elapsed_s=elapsed,
        mops=mops(count, elapsed),
        tp=0,
        fp=0,
        tn=0,
        fn=0,
        fpp=0.0,
        accuracy_pct=100.0,
        mean_probes=probes / count if count else 0.0,
        memory_bytes=filt.memory_bytes() if hasattr(filt, "memory_bytes") else 0,
    )
    return report, filt


BASELINE_BUILDERS: dict[str, Callable[..., object]] = {
    "kirsch": lambda n, epsilon, hash_fn: KirschBF(n, epsilon),
    "cbf": lambda n, epsilon, hash_fn: CountingBF(n, epsilon),
    "cuckoo": lambda n, epsilon, hash_fn: CuckooFilter(n),
}


def make_filter(name: str, n: int, epsilon: float, hash_fn: HashFunction = HashFunction.MMURMUR):
    if name == "2dbf":
        return Filter2D.create(n, epsilon, hash_fn)
    if name in BASELINE_BUILDERS:
        return BASELINE_BUILDERS[name](n, epsilon, hash_fn)
    valid = ", ".join(["2dbf", *BASELINE_BUILDERS])
    raise ValueError(f"unknown filter {name!r} (expected one of: {valid})")


DEFAULT_FILTERS = ("2dbf", "kirsch", "cbf", "cuckoo")


def compare_filters(
    n: int,
    epsilon: float,
    *,
    filters: Sequence[str] = DEFAULT_FILTERS,
    workloads: Sequence[WorkloadKind] = tuple(WorkloadKind),
    query_count: int | None = None,
    seed: int = 42,
    hash_fn: HashFunction = HashFunction.MMURMUR,
    jobs: int = 1,
) -> list[MetricsReport]:
    """One insert report plus one lookup report per (filter, workload)."""
    inserted = gen_keys(n, seed=seed)
    corpora: list[tuple[WorkloadKind, KeyCorpus]] = []
    for k, kind in enumerate(workloads):
        qc = len(inserted) if kind is WorkloadKind.SAME else query_count
        corpora.append((kind, build_workload(inserted, kind, qc, seed=seed + 1000 * (k + 1))))
    # pack (and length-group) the shared corpora before any worker threads start
    inserted.packed.groups()
    for _, corpus in corpora:
        corpus.packed.groups()

    def bench_one(name: str) -> list[MetricsReport]:
        insert_report, filt = run_insert_bench(
            lambda: make_filter(name, n, epsilon, hash_fn), inserted, epsilon=epsilon
        )
        reports = [insert_report]
        for kind, corpus in corpora:
            reports.append(run_lookup_bench(filt, corpus, workload_name=kind.value, epsilon=epsilon))
        return reports

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(bench_one, filters))
    else:
        chunks = [bench_one(name) for name in filters]
    return [report for chunk in chunks for report in chunk]


def render_table(reports: Iterable[MetricsReport]) -> str:
    """Aligned human-readable table of benchmark cells."""
    headers = [
        "filter", "workload", "n", "elapsed_s", "mops",
        "tp", "fp", "tn", "fn", "fpp", "acc_pct", "probes", "mem_bytes",
    ]
    rows = [headers]
    for r in reports:
        rows.append([
            r.filter_name, r.workload, str(r.n),
            f"{r.elapsed_s:.6f}", f"{r.mops:.4f}",
            str(r.tp), str(r.fp), str(r.tn), str(r.fn),
            f"{r.fpp:.6f}", f"{r.accuracy_pct:.4f}",
            f"{r.mean_probes:.3f}", str(r.memory_bytes),
        ])
    widths = [max(len(row[c]) for row in rows) for c in range(len(headers))]
    lines = ["  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def write_report(reports: Iterable[MetricsReport], path) -> None:
    """Machine-readable report: one JSON object per benchmark cell."""
    payload = {"cells": [r.to_dict() for r in reports]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
