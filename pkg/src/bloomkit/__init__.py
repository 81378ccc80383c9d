"""bloomkit: membership filters, hash suite, benchmarks, and a URL gateway."""

from .baselines import CountingBF, CuckooFilter, KirschBF
from .bench import (
    KeyCorpus,
    MetricsReport,
    WorkloadKind,
    build_workload,
    compare_filters,
    gen_keys,
    make_filter,
    mops,
    render_table,
    run_insert_bench,
    run_lookup_bench,
    write_report,
)
from .filter2d import (
    BitAddress,
    Filter2D,
    Filter2DConfig,
    SnapshotError,
    address,
    size_params,
)
from .hashes import HashFunction, hash_bytes, reset_call_counter
from .hashvec import PackedKeys, hash_many
from .pipeline import (
    Classifier,
    ClassifierError,
    Gateway,
    IngestError,
    IngestResult,
    Label,
    LinearClassifier,
    PredictionFileClassifier,
    TrainResult,
    UrlRecord,
    Verdict,
    dedup,
    ingest_csv,
    malignant_benign_experiment,
    pad_to_square,
    split_counts,
    train_baseline,
)

__version__ = "0.1.0"

__all__ = [
    "BitAddress",
    "Classifier",
    "ClassifierError",
    "CountingBF",
    "CuckooFilter",
    "Filter2D",
    "Filter2DConfig",
    "Gateway",
    "HashFunction",
    "IngestError",
    "IngestResult",
    "KeyCorpus",
    "KirschBF",
    "Label",
    "LinearClassifier",
    "MetricsReport",
    "PackedKeys",
    "PredictionFileClassifier",
    "SnapshotError",
    "TrainResult",
    "UrlRecord",
    "Verdict",
    "WorkloadKind",
    "address",
    "build_workload",
    "compare_filters",
    "dedup",
    "gen_keys",
    "hash_bytes",
    "hash_many",
    "ingest_csv",
    "make_filter",
    "malignant_benign_experiment",
    "mops",
    "pad_to_square",
    "render_table",
    "reset_call_counter",
    "run_insert_bench",
    "run_lookup_bench",
    "size_params",
    "split_counts",
    "train_baseline",
    "write_report",
]
