"""Command-line front end.

One binary, subcommand style. All randomness sits behind --seed, so
every command is reproducible except for wall-clock fields. Human
output goes to stdout; --report writes the machine-readable JSON
document. Exit codes: 0 success, 1 I/O failure, 2 usage error,
3 corrupt snapshot.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench, pipeline
from .filter2d import Filter2D, SnapshotError, size_params
from .hashes import HashFunction

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_CORRUPT = 3


def _hash_fn(name: str) -> HashFunction:
    try:
        return HashFunction.from_name(name)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _epsilon(value: str) -> float:
    eps = float(value)
    if not 0.0 < eps < 1.0:
        raise argparse.ArgumentTypeError(f"epsilon must be in (0, 1), got {value}")
    return eps


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def _workloads(value: str) -> list[bench.WorkloadKind]:
    try:
        return [bench.WorkloadKind.from_name(w) for w in value.split(",") if w]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _print_config(cfg) -> None:
    print(f"n            {cfg.n}")
    print(f"epsilon      {cfg.epsilon}")
    print(f"m_bits       {cfg.m}")
    print(f"m_mib        {cfg.m / 8 / 2**20:.4f}")
    print(f"rows_M       {cfg.rows}")
    print(f"cols_N       {cfg.cols}")
    print(f"beta         {cfg.beta}")
    print(f"lambda       {cfg.lam}")
    print(f"hash_calls   {cfg.hash_calls}")
    print(f"hash_fn      {cfg.hash_fn.value}")
    print(f"alloc_bytes  {cfg.memory_bytes()}")
    print(f"alloc_mib    {cfg.memory_bytes() / 2**20:.4f}")


def _cmd_sizing(args) -> int:
    _print_config(size_params(args.n, args.epsilon, args.hash_fn))
    return EXIT_OK


def _maybe_write_report(args, reports) -> None:
    if getattr(args, "report", None):
        bench.write_report(reports, args.report)


def _cmd_hash_race(args) -> int:
    inserted = bench.gen_keys(args.n, seed=args.seed)
    corpora = []
    for k, kind in enumerate(args.workloads):
        qc = len(inserted) if kind is bench.WorkloadKind.SAME else args.queries
        corpora.append((kind, bench.build_workload(inserted, kind, qc, seed=args.seed + 1000 * (k + 1))))
    reports = []
    for fn in HashFunction:
        insert_report, filt = bench.run_insert_bench(
            lambda: Filter2D.create(args.n, args.epsilon, fn), inserted, epsilon=args.epsilon
        )
        reports.append(insert_report)
        for kind, corpus in corpora:
            reports.append(
                bench.run_lookup_bench(filt, corpus, workload_name=kind.value, epsilon=args.epsilon)
            )
    print(bench.render_table(reports))
    _maybe_write_report(args, reports)
    return EXIT_OK


def _cmd_compare(args) -> int:
    reports = bench.compare_filters(
        args.n,
        args.epsilon,
        filters=args.filters.split(","),
        workloads=args.workloads,
        query_count=args.queries,
        seed=args.seed,
        hash_fn=args.hash_fn,
        jobs=args.jobs,
    )
    print(bench.render_table(reports))
    _maybe_write_report(args, reports)
    return EXIT_OK


def _read_url_lines(path: str):
    stream = sys.stdin if path == "-" else open(path, "r", encoding="utf-8")
    try:
        return [line.rstrip("\n") for line in stream if line.strip()]
    finally:
        if stream is not sys.stdin:
            stream.close()


def _cmd_dedup(args) -> int:
    urls = _read_url_lines(args.input)
    result = pipeline.dedup(urls, epsilon=args.epsilon, capacity=args.capacity)
    out = sys.stdout if args.output is None else open(args.output, "w", encoding="utf-8")
    try:
        for url in result.unique:
            out.write(url.decode("utf-8", errors="replace") + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    r = result.report
    print(
        f"# in={r.n} unique_out={r.tn} dup_suppressed={r.tp} fp_suppressed={r.fp} "
        f"fpp={r.fpp:.6f} accuracy={r.accuracy_pct:.4f} elapsed={r.elapsed_s:.6f}s "
        f"memory={r.memory_bytes}B",
        file=sys.stderr,
    )
    _maybe_write_report(args, [r])
    return EXIT_OK


def _load_classifier(args):
    if args.predictions:
        return pipeline.PredictionFileClassifier.load(args.predictions)
    if args.model:
        return pipeline.LinearClassifier.load(args.model)
    return None


def _cmd_gateway(args) -> int:
    classifier = _load_classifier(args)
    if classifier is None:
        print("gateway: need --predictions or --model for unknown URLs", file=sys.stderr)
        return EXIT_USAGE
    if args.mal_snapshot or args.ben_snapshot:
        if not (args.mal_snapshot and args.ben_snapshot):
            print("gateway: --mal-snapshot and --ben-snapshot go together", file=sys.stderr)
            return EXIT_USAGE
        gw = pipeline.Gateway(
            Filter2D.load(args.mal_snapshot), Filter2D.load(args.ben_snapshot), classifier
        )
    else:
        gw = pipeline.Gateway.create(classifier, capacity=args.capacity, epsilon=args.epsilon)
    for url in _read_url_lines(args.input):
        verdict = gw.check_url(url)
        print(f"{verdict.value[0]}\t{verdict.source}\t{url}")
    c = gw.counters
    print(
        f"# queries={c.queries} mu_hits={c.mu_hits} beta_hits={c.beta_hits} "
        f"classifier_calls={c.classifier_calls}",
        file=sys.stderr,
    )
    if args.save_dir:
        gw.save(args.save_dir)
    return EXIT_OK


def _cmd_train(args) -> int:
    result_ingest = pipeline.ingest_csv(args.input)
    if not result_ingest.records:
        print("train: no valid records in input", file=sys.stderr)
        return EXIT_IO
    result = pipeline.train_baseline(
        result_ingest.records,
        seed=args.seed,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
    )
    print(f"records      {len(result_ingest.records)} (rejected {result_ingest.rejected})")
    print(f"split        {result.n_train}/{result.n_val}/{result.n_test}")
    print(f"train_acc    {result.train_accuracy:.4f}%   loss {result.train_loss:.6f}")
    print(f"val_acc      {result.val_accuracy:.4f}%   loss {result.val_loss:.6f}")
    print(f"test_acc     {result.test_accuracy:.4f}%   loss {result.test_loss:.6f}")
    if args.save_model:
        result.classifier.save(args.save_model)
    return EXIT_OK


def _cmd_gen_data(args) -> int:
    corpus = bench.gen_keys(args.count, (args.min_len, args.max_len), seed=args.seed)
    out = sys.stdout if args.output is None else open(args.output, "w", encoding="ascii")
    try:
        for key in corpus.keys:
            out.write(key.decode("ascii") + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _cmd_snapshot(args) -> int:
    data = Path(args.path).read_bytes()
    filt = Filter2D.deserialize(data)  # validates magic, layout, and CRC
    print(f"snapshot     {args.path}")
    print(f"inserted     {filt.inserted_count}")
    print(f"fill_ratio   {filt.fill_ratio():.6f}")
    print("crc          ok")
    _print_config(filt.config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bloomkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, queries=False):
        p.add_argument("--n", type=_positive, default=1_000_000, help="inserted key count")
        p.add_argument("--epsilon", type=_epsilon, default=0.001, help="target false-positive probability")
        p.add_argument("--seed", type=int, default=42, help="master RNG seed")
        if queries:
            p.add_argument("--queries", type=_positive, default=None, help="query count (default: n)")
            p.add_argument(
                "--workloads",
                type=_workloads,
                default=list(bench.WorkloadKind),
                help="comma list: same,mixed,disjoint,random",
            )
            p.add_argument("--report", help="write JSON report here")

    p = sub.add_parser("sizing", help="print the 2-D filter configuration for (n, epsilon)")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--epsilon", type=_epsilon, required=True)
    p.add_argument("--hash-fn", type=_hash_fn, default=HashFunction.MMURMUR)
    p.set_defaults(func=_cmd_sizing)

    p = sub.add_parser("hash-race", help="run every hash function through the 2-D filter")
    common(p, queries=True)
    p.set_defaults(func=_cmd_hash_race)

    p = sub.add_parser("compare", help="benchmark the 2-D filter against the baselines")
    common(p, queries=True)
    p.add_argument("--filters", default=",".join(bench.DEFAULT_FILTERS))
    p.add_argument("--hash-fn", type=_hash_fn, default=HashFunction.MMURMUR)
    p.add_argument("--jobs", type=_positive, default=1, help="parallel filter cells")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("dedup", help="deduplicate a URL stream through one filter")
    p.add_argument("--input", required=True, help="newline-delimited URLs ('-' for stdin)")
    p.add_argument("--output", help="write unique URLs here (default stdout)")
    p.add_argument("--epsilon", type=_epsilon, default=0.001)
    p.add_argument("--capacity", type=_positive, default=None, help="expected unique count")
    p.add_argument("--report", help="write JSON report here")
    p.set_defaults(func=_cmd_dedup)

    p = sub.add_parser("gateway", help="stream URLs through the two-filter gateway")
    p.add_argument("--input", default="-", help="newline-delimited URLs ('-' for stdin)")
    p.add_argument("--mal-snapshot", help="warm-start malignant filter snapshot")
    p.add_argument("--ben-snapshot", help="warm-start benign filter snapshot")
    p.add_argument("--predictions", help="url,score file backing the classifier")
    p.add_argument("--model", help="trained baseline model (.npz)")
    p.add_argument("--capacity", type=_positive, default=10**6, help="cold-start filter capacity")
    p.add_argument("--epsilon", type=_epsilon, default=0.001)
    p.add_argument("--save-dir", help="persist filter snapshots and counters here")
    p.set_defaults(func=_cmd_gateway)

    p = sub.add_parser("train", help="train the logistic baseline on a dataset CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--epochs", type=_positive, default=300)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--save-model", help="write the trained model (.npz) here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("gen-data", help="generate a deterministic key corpus")
    p.add_argument("--count", type=_positive, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--min-len", type=_positive, default=16)
    p.add_argument("--max-len", type=_positive, default=64)
    p.add_argument("--output", help="write keys here (default stdout)")
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("snapshot", help="verify a filter snapshot and print its configuration")
    p.add_argument("path")
    p.set_defaults(func=_cmd_snapshot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SnapshotError as exc:
        print(f"bloomkit: corrupt snapshot: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except (OSError, pipeline.IngestError, pipeline.ClassifierError, ValueError) as exc:
        print(f"bloomkit: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
