"""Malicious-URL gateway: two self-adjusting filters ahead of a classifier.

A URL is first checked against the malignant filter (hit -> blocked),
then the benign filter (hit -> allowed). Only URLs unknown to both
reach the classifier, whose verdict is written back into the matching
filter, so each distinct URL costs at most one classification over the
gateway's lifetime; repeats are answered by the filters alone. Since
filters never clear bits, a blocked URL stays blocked. The flip side is
inherited from Bloom semantics: a false positive in the malignant
filter blocks a valid URL at the configured false-positive rate.

The module also hosts the corpus experiments built on one filter
(stream deduplication; insert-malignant / probe-benign), the dataset
CSV ingestion with its NaN scrub and square zero-padding, and a
logistic-regression baseline standing in for any heavier model. A
file-of-predictions classifier adapter lets externally computed scores
drive the gateway.

check_url mutates filters and counters, so calls must be serialized by
the caller; statistics may be read between calls.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .bench import MetricsReport, mops
from .filter2d import Filter2D
from .hashes import HashFunction, reset_call_counter
from .hashvec import PackedKeys


class Label(enum.Enum):
    MALIGNANT = "malignant"
    BENIGN = "benign"


# every non-benign dataset category collapses to malignant
_LABEL_MAP = {
    "benign": Label.BENIGN,
    "spam": Label.MALIGNANT,
    "defacement": Label.MALIGNANT,
    "malware": Label.MALIGNANT,
    "phishing": Label.MALIGNANT,
}

_NAN_TOKENS = {"", "nan", "na", "null", "none"}


class Verdict(enum.Enum):
    BLOCKED_BY_FILTER = ("BLOCKED", "filter")
    ALLOWED_BY_FILTER = ("ALLOWED", "filter")
    BLOCKED_BY_CLASSIFIER = ("BLOCKED", "classifier")
    ALLOWED_BY_CLASSIFIER = ("ALLOWED", "classifier")

    @property
    def blocked(self) -> bool:
        return self.value[0] == "BLOCKED"

    @property
    def source(self) -> str:
        return self.value[1]


@dataclass
class UrlRecord:
    """One dataset row: raw URL bytes, padded feature vector, label.

    ``n_features`` is the pre-padding feature count; positions from
    there to the end of ``features`` are the appended zeros.
    """

    url: bytes
    features: np.ndarray
    label: Label | None = None
    n_features: int = 0


class Classifier(Protocol):
    def classify(self, record: UrlRecord) -> tuple[Label, float]: ...


class ClassifierError(LookupError):
    """The classifier cannot produce a verdict for this record."""


def pad_to_square(values: Sequence[float]) -> np.ndarray:
    """Zero-pad a vector to the next length with an integer square root.

    [3,5,0,1,6,2,4] (7 values) pads to 9 = 3x3; 79 features pad to 81.
    """
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError("expected a 1-D feature vector")
    side = math.isqrt(len(vec))
    if side * side < len(vec):
        side += 1
    return np.pad(vec, (0, side * side - len(vec)))


def split_counts(total: int, split: tuple[float, float, float] = (0.60, 0.25, 0.15)) -> tuple[int, int, int]:
    """Record counts for (train, validation, test).

    The train bucket takes floor(split[0] * total); the test bucket
    takes ceil(split[2] * holdout) of the remaining records and
    validation absorbs the rest. Exact rational arithmetic keeps the
    counts stable against float noise.
    """
    if total < 0:
        raise ValueError("total must be >= 0")
    train_frac = Fraction(split[0]).limit_denominator(10**6)
    test_frac = Fraction(split[2]).limit_denominator(10**6)
    n_train = math.floor(train_frac * total)
    holdout = total - n_train
    n_test = math.ceil(test_frac * holdout)
    n_val = holdout - n_test
    return n_train, n_val, n_test


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


class IngestError(ValueError):
    pass


@dataclass
class IngestResult:
    records: list[UrlRecord]
    rejected: int


def ingest_csv(source) -> IngestResult:
    """Parse a dataset CSV into records; malformed rows are counted, not fatal.

    Header required. A column named ``url`` is optional, a column named
    ``label`` is mandatory; every other column is a numeric feature, in
    order. NaN-ish or empty numeric fields read as 0.0; rows with the
    wrong column count, an unknown label, or a non-numeric feature
    token are rejected. Feature vectors come out zero-padded to the
    next square length.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return ingest_csv(fh)

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty input: no header row") from None
    names = [h.strip().lower() for h in header]
    if "label" not in names:
        raise IngestError("header has no 'label' column")
    label_col = names.index("label")
    url_col = names.index("url") if "url" in names else None
    feature_cols = [i for i in range(len(names)) if i not in (label_col, url_col)]

    records: list[UrlRecord] = []
    rejected = 0
    for row in reader:
        if len(row) != len(names):
            rejected += 1
            continue
        label = _LABEL_MAP.get(row[label_col].strip().lower())
        if label is None:
            rejected += 1
            continue
        values = []
        ok = True
        for col in feature_cols:
            token = row[col].strip()
            if token.lower() in _NAN_TOKENS:
                values.append(0.0)
                continue
            try:
                x = float(token)
            except ValueError:
                ok = False
                break
            values.append(0.0 if math.isnan(x) else x)
        if not ok:
            rejected += 1
            continue
        url = row[url_col].encode("utf-8") if url_col is not None else b""
        records.append(UrlRecord(url, pad_to_square(values), label, len(values)))
    return IngestResult(records, rejected)


# ---------------------------------------------------------------------------
# Classifiers
# ---------------------------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LinearClassifier:
    """Logistic regression over padded feature vectors.

    The weight vector spans the padded width plus the bias: the bias
    input rides in the first zero-pad slot (appended if the vector is
    already square), so for the 79-feature URL schema the weights hold
    81 entries: 79 feature weights, a bias, and one inert pad slot.
    Raw features are standardized with the training split's moments.
    Malignant iff sigmoid(w . x) >= 0.5.
    """

    def __init__(
        self,
        weights: np.ndarray,
        n_features: int,
        mu: np.ndarray,
        sigma: np.ndarray,
        learning_rate: float,
        epochs: int,
    ):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.n_features = n_features
        self.mu = np.asarray(mu, dtype=np.float64)
        self.sigma = np.asarray(sigma, dtype=np.float64)
        self.learning_rate = learning_rate
        self.epochs = epochs

    @staticmethod
    def _design(x_padded: np.ndarray, n_features: int, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        width = max(x_padded.shape[1], n_features + 1)
        design = np.zeros((x_padded.shape[0], width), dtype=np.float64)
        design[:, : x_padded.shape[1]] = x_padded
        design[:, :n_features] = (x_padded[:, :n_features] - mu) / sigma
        design[:, n_features] = 1.0  # bias input in the first pad slot
        return design

    @classmethod
    def fit(
        cls,
        x_padded: np.ndarray,
        y: np.ndarray,
        n_features: int,
        *,
        learning_rate: float = 0.5,
        epochs: int = 300,
    ) -> "LinearClassifier":
        """Full-batch gradient descent on the cross-entropy loss."""
        x_padded = np.asarray(x_padded, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        mu = x_padded[:, :n_features].mean(axis=0)
        sigma = x_padded[:, :n_features].std(axis=0)
        sigma[sigma == 0.0] = 1.0
        design = cls._design(x_padded, n_features, mu, sigma)
        w = np.zeros(design.shape[1], dtype=np.float64)
        rows = len(y)
        for _ in range(epochs):
            grad = design.T @ (_sigmoid(design @ w) - y) / rows
            w -= learning_rate * grad
        return cls(w, n_features, mu, sigma, learning_rate, epochs)

    def scores(self, x_padded: np.ndarray) -> np.ndarray:
        design = self._design(np.atleast_2d(x_padded), self.n_features, self.mu, self.sigma)
        return _sigmoid(design @ self.weights)

    def classify(self, record: UrlRecord) -> tuple[Label, float]:
        score = float(self.scores(record.features)[0])
        return (Label.MALIGNANT if score >= 0.5 else Label.BENIGN), score

    def save(self, path) -> None:
        np.savez(
            path,
            weights=self.weights,
            n_features=np.int64(self.n_features),
            mu=self.mu,
            sigma=self.sigma,
            learning_rate=np.float64(self.learning_rate),
            epochs=np.int64(self.epochs),
        )

    @classmethod
    def load(cls, path) -> "LinearClassifier":
        blob = np.load(path)
        return cls(
            blob["weights"],
            int(blob["n_features"]),
            blob["mu"],
            blob["sigma"],
            float(blob["learning_rate"]),
            int(blob["epochs"]),
        )


class PredictionFileClassifier:
    """Adapter that reads precomputed scores: one ``url,score`` per line.

    Lets any external model (including a CNN) drive the gateway without
    being linked in. Unknown URLs raise ClassifierError.
    """

    def __init__(self, scores: dict[bytes, float]):
        self.scores = scores

    @classmethod
    def load(cls, path) -> "PredictionFileClassifier":
        scores: dict[bytes, float] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                url, _, score = line.rpartition(",")
                if not url:
                    raise ValueError(f"{path}:{lineno}: expected 'url,score'")
                scores[url.encode("utf-8")] = float(score)
        return cls(scores)

    def classify(self, record: UrlRecord) -> tuple[Label, float]:
        score = self.scores.get(record.url)
        if score is None:
            raise ClassifierError(f"no prediction for url {record.url!r}")
        return (Label.MALIGNANT if score >= 0.5 else Label.BENIGN), score


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    classifier: LinearClassifier
    n_train: int
    n_val: int
    n_test: int
    train_accuracy: float
    val_accuracy: float
    test_accuracy: float
    train_loss: float
    val_loss: float
    test_loss: float


def _accuracy_and_loss(clf: LinearClassifier, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if len(y) == 0:
        return 100.0, 0.0
    p = clf.scores(x)
    predicted = p >= 0.5
    accuracy = 100.0 * float(np.mean(predicted == (y > 0.5)))
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    loss = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    return accuracy, loss


def train_baseline(
    records: Sequence[UrlRecord],
    split: tuple[float, float, float] = (0.60, 0.25, 0.15),
    seed: int = 42,
    *,
    learning_rate: float = 0.5,
    epochs: int = 300,
) -> TrainResult:
    """Shuffle, split, and fit the logistic baseline; deterministic per seed."""
    labeled = [r for r in records if r.label is not None]
    if not labeled:
        raise ValueError("no labeled records")
    classes = {r.label for r in labeled}
    if len(classes) < 2:
        raise ValueError("training needs both classes present")
    n_features = labeled[0].n_features
    if any(r.n_features != n_features or len(r.features) != len(labeled[0].features) for r in labeled):
        raise ValueError("records have inconsistent feature shapes")

    x = np.stack([r.features for r in labeled])
    y = np.fromiter((1.0 if r.label is Label.MALIGNANT else 0.0 for r in labeled), np.float64, len(labeled))
    order = np.random.default_rng(seed).permutation(len(labeled))
    x, y = x[order], y[order]

    n_train, n_val, n_test = split_counts(len(labeled), split)
    xs = np.split(x, [n_train, n_train + n_val])
    ys = np.split(y, [n_train, n_train + n_val])
    clf = LinearClassifier.fit(xs[0], ys[0], n_features, learning_rate=learning_rate, epochs=epochs)
    (tr_acc, tr_loss), (va_acc, va_loss), (te_acc, te_loss) = (
        _accuracy_and_loss(clf, xs[i], ys[i]) for i in range(3)
    )
    return TrainResult(clf, n_train, n_val, n_test, tr_acc, va_acc, te_acc, tr_loss, va_loss, te_loss)


# ---------------------------------------------------------------------------
# Gateway
# ---------------------------------------------------------------------------


@dataclass
class GatewayCounters:
    queries: int = 0
    mu_hits: int = 0
    beta_hits: int = 0
    classifier_calls: int = 0


MU_SNAPSHOT = "malignant.bf"
BETA_SNAPSHOT = "benign.bf"
HEADER_FILE = "gateway.json"


class Gateway:
    """Two self-adjusting filters in front of a pluggable classifier."""

    def __init__(self, malignant_filter: Filter2D, benign_filter: Filter2D, classifier: Classifier):
        self.mu = malignant_filter
        self.beta = benign_filter
        self.classifier = classifier
        self.counters = GatewayCounters()

    @classmethod
    def create(
        cls,
        classifier: Classifier,
        *,
        capacity: int = 10**6,
        epsilon: float = 0.001,
        hash_fn: HashFunction = HashFunction.MMURMUR,
    ) -> "Gateway":
        return cls(
            Filter2D.create(capacity, epsilon, hash_fn),
            Filter2D.create(capacity, epsilon, hash_fn),
            classifier,
        )

    def check_url(self, record: UrlRecord | bytes | str) -> Verdict:
        """Route one URL through the filter pair and, if new, the classifier.

        A classifier exception propagates without touching either
        filter, so the URL is retried from scratch next time.
        """
        if isinstance(record, (bytes, str)):
            record = UrlRecord(record.encode("utf-8") if isinstance(record, str) else record, np.zeros(0))
        url = record.url
        self.counters.queries += 1
        if self.mu.query(url):
            self.counters.mu_hits += 1
            return Verdict.BLOCKED_BY_FILTER
        if self.beta.query(url):
            self.counters.beta_hits += 1
            return Verdict.ALLOWED_BY_FILTER
        self.counters.classifier_calls += 1
        label, _score = self.classifier.classify(record)
        if label is Label.MALIGNANT:
            self.mu.insert(url)
            return Verdict.BLOCKED_BY_CLASSIFIER
        self.beta.insert(url)
        return Verdict.ALLOWED_BY_CLASSIFIER

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.mu.save(directory / MU_SNAPSHOT)
        self.beta.save(directory / BETA_SNAPSHOT)
        header = {
            "classifier": type(self.classifier).__name__,
            "counters": {
                "queries": self.counters.queries,
                "mu_hits": self.counters.mu_hits,
                "beta_hits": self.counters.beta_hits,
                "classifier_calls": self.counters.classifier_calls,
            },
        }
        (directory / HEADER_FILE).write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory, classifier: Classifier) -> "Gateway":
        directory = Path(directory)
        gw = cls(
            Filter2D.load(directory / MU_SNAPSHOT),
            Filter2D.load(directory / BETA_SNAPSHOT),
            classifier,
        )
        header_path = directory / HEADER_FILE
        if header_path.exists():
            counters = json.loads(header_path.read_text(encoding="utf-8")).get("counters", {})
            gw.counters = GatewayCounters(
                queries=counters.get("queries", 0),
                mu_hits=counters.get("mu_hits", 0),
                beta_hits=counters.get("beta_hits", 0),
                classifier_calls=counters.get("classifier_calls", 0),
            )
        return gw


# ---------------------------------------------------------------------------
# Corpus experiments
# ---------------------------------------------------------------------------


def _as_url_bytes(urls: Iterable[bytes | str]) -> list[bytes]:
    return [u.encode("utf-8") if isinstance(u, str) else u for u in urls]


@dataclass
class DedupResult:
    unique: list[bytes]
    report: MetricsReport


def dedup(
    urls: Iterable[bytes | str],
    *,
    epsilon: float = 0.001,
    capacity: int | None = None,
    hash_fn: HashFunction = HashFunction.MMURMUR,
) -> DedupResult:
    """Stream URLs through one filter, emitting each first sighting.

    A repeat (filter hit) is suppressed; a filter false positive
    wrongly suppresses a first sighting. The report scores suppression
    against an exact seen-set: fp counts uniques lost to false
    positives, tn uniques emitted, tp true duplicates dropped, and
    fpp = fp / uniques.
    """
    stream = _as_url_bytes(urls)
    filt = Filter2D.create(max(1, capacity if capacity is not None else len(stream)), epsilon, hash_fn)
    unique: list[bytes] = []
    seen: set[bytes] = set()
    fp_suppressed = 0
    dup_suppressed = 0
    reset_call_counter()
    t0 = time.perf_counter()
    for url in stream:
        if filt.query(url):
            if url in seen:
                dup_suppressed += 1
            else:
                fp_suppressed += 1
                seen.add(url)
        else:
            filt.insert(url)
            seen.add(url)
            unique.append(url)
    elapsed = time.perf_counter() - t0
    probes = reset_call_counter()
    uniques_seen = len(seen)
    fpp = fp_suppressed / uniques_seen if uniques_seen else 0.0
    report = MetricsReport(
        filter_name=filt.name,
        workload="dedup",
        n=len(stream),
        epsilon=epsilon,
        elapsed_s=elapsed,
        mops=mops(len(stream), elapsed),
        tp=dup_suppressed,
        fp=fp_suppressed,
        tn=len(unique),
        fn=0,
        fpp=fpp,
        accuracy_pct=100.0 * (1.0 - fpp),
        mean_probes=probes / len(stream) if stream else 0.0,
        memory_bytes=filt.memory_bytes(),
    )
    return DedupResult(unique, report)


@dataclass
class MalignantBenignResult:
    insert_report: MetricsReport
    lookup_report: MetricsReport


def malignant_benign_experiment(
    malignant: Iterable[bytes | str],
    benign: Iterable[bytes | str],
    *,
    epsilon: float = 0.001,
    hash_fn: HashFunction = HashFunction.MMURMUR,
) -> MalignantBenignResult:
    """Insert every malignant URL, probe with benign: each hit is a FP."""
    mal = _as_url_bytes(malignant)
    ben = _as_url_bytes(benign)
    if not mal:
        raise ValueError("malignant set is empty")
    mal_set = set(mal)
    if any(b in mal_set for b in ben):
        raise ValueError("malignant and benign sets must be disjoint")

    filt = Filter2D.create(len(mal_set), epsilon, hash_fn)
    packed_mal = PackedKeys.from_keys(mal)
    reset_call_counter()
    t0 = time.perf_counter()
    filt.insert_batch(packed_mal)
    insert_elapsed = time.perf_counter() - t0
    insert_probes = reset_call_counter()
    insert_report = MetricsReport(
        filter_name=filt.name,
        workload="insert",
        n=len(mal),
        epsilon=epsilon,
        elapsed_s=insert_elapsed,
        mops=mops(len(mal), insert_elapsed),
        tp=0, fp=0, tn=0, fn=0,
        fpp=0.0,
        accuracy_pct=100.0,
        mean_probes=insert_probes / len(mal),
        memory_bytes=filt.memory_bytes(),
    )

    packed_ben = PackedKeys.from_keys(ben)
    reset_call_counter()
    t0 = time.perf_counter()
    hits = filt.query_batch(packed_ben) if ben else np.zeros(0, dtype=bool)
    lookup_elapsed = time.perf_counter() - t0
    lookup_probes = reset_call_counter()
    fp = int(hits.sum())
    tn = len(ben) - fp
    fpp = fp / (fp + tn) if fp + tn else 0.0
    lookup_report = MetricsReport(
        filter_name=filt.name,
        workload="malignant-benign",
        n=len(ben),
        epsilon=epsilon,
        elapsed_s=lookup_elapsed,
        mops=mops(len(ben), lookup_elapsed),
        tp=0, fp=fp, tn=tn, fn=0,
        fpp=fpp,
        accuracy_pct=100.0 * (1.0 - fpp),
        mean_probes=lookup_probes / len(ben) if ben else 0.0,
        memory_bytes=filt.memory_bytes(),
    )
    return MalignantBenignResult(insert_report, lookup_report)
