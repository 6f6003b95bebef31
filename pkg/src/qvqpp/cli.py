"""Command-line pipeline: index, qv, predict, evaluate, tune, sweep.

All commands read one YAML configuration file (see ``config_template``
in the README) plus optional ``--set dotted.key=value`` overrides. Every
run with the same configuration and seed produces byte-identical output
files. Exit code is 0 on success and 1 on any validation or processing
error; validation runs before any output file is touched.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .corpus_io import (
    Qrels,
    Query,
    RankedList,
    parse_collection,
    parse_qrels,
    parse_queries,
    parse_run,
    parse_score_tsv,
    write_score_tsv,
)
from .dense_index import load_vectors
from .evaluation import (
    EvalPair,
    FoldSpec,
    ap_at_k,
    fisher_z_compare,
    kendall_tau,
    ndcg_at_k,
    sweep_grid,
    tune_2fold,
)
from .predictors import PredictorContext, PredictorParams
from .rank_sim import RboParams
from .text_index import build_index, load_index, save_index, tokenize
from .variants import (
    PipelineResources,
    QppConfig,
    build_qv_set,
    predict_query,
    smooth_qpp,
)

logger = logging.getLogger(__name__)

AP_REL_THRESHOLD = 2
TARGET_METRICS = ("ap@100", "ndcg@10")

DOC_INDEX_FILE = "documents.idx"
QUERY_INDEX_FILE = "queries.idx"

DEFAULT_LAMBDAS = [round(i / 10, 1) for i in range(11)]
DEFAULT_KS = list(range(1, 11))


@dataclass
class PipelineConfig:
    collection: Path
    train_queries: Path
    train_qrels: Path
    test_queries: Path
    test_qrels: Path
    target_run: Path
    index_dir: Path
    output_dir: Path
    embeddings: Path | None
    seed: int
    qpp: QppConfig
    predictor: PredictorParams
    target_metric: str
    fold_a: list[str]
    lambdas: list[float]
    ks: list[int]
    run_depth: int = 100
    run_tag: str = "qvqpp"


def _get(section: Mapping, key: str, default):
    value = section.get(key, default)
    if value is None:
        return default
    return value


def load_config(path, overrides: Sequence[str] = ()) -> PipelineConfig:
    """Parse the YAML config and apply ``dotted.key=value`` overrides."""
    with open(path, "r", encoding="utf-8") as handle:
        raw = yaml.safe_load(handle) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config root must be a mapping")
    for override in overrides:
        if "=" not in override:
            raise ValueError(f"override {override!r} must look like dotted.key=value")
        dotted, value_text = override.split("=", 1)
        keys = dotted.split(".")
        node = raw
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ValueError(f"override {dotted!r} does not address a mapping")
        node[keys[-1]] = yaml.safe_load(value_text)

    base_dir = Path(path).parent
    paths = raw.get("paths", {}) or {}

    def resolve(key: str, required: bool = True) -> Path | None:
        value = paths.get(key)
        if value is None:
            if required:
                raise ValueError(f"config is missing paths.{key}")
            return None
        return (base_dir / value).resolve() if not Path(value).is_absolute() else Path(value)

    qpp_raw = raw.get("qpp", {}) or {}
    rbo = RboParams(
        p=float(_get(qpp_raw, "rbo_p", 0.9)),
        eval_depth=int(_get(qpp_raw, "rbo_depth", 100)),
    )
    qpp = QppConfig(
        lam=float(_get(qpp_raw, "lambda", 0.5)),
        k=int(_get(qpp_raw, "k", 1)),
        n=int(_get(qpp_raw, "n", 100)),
        query_retriever=str(_get(qpp_raw, "query_retriever", "bm25")),
        use_2hop=bool(_get(qpp_raw, "use_2hop", True)),
        pseudo_query_m=int(_get(qpp_raw, "pseudo_query_m", 20)),
        rbo_params=rbo,
        base=str(_get(qpp_raw, "base", "nqc")),
        internal_depth=int(_get(qpp_raw, "internal_depth", 100)),
    )
    pred_raw = raw.get("predictor", {}) or {}
    bm25_raw = raw.get("bm25", {}) or {}
    predictor = PredictorParams(
        top_k=int(_get(pred_raw, "top_k", 100)),
        uef_samples=int(_get(pred_raw, "uef_samples", 20)),
        uef_sample_size=int(_get(pred_raw, "uef_sample_size", 25)),
        mu=float(_get(pred_raw, "mu", 1000.0)),
        k1=float(_get(bm25_raw, "k1", 0.9)),
        b=float(_get(bm25_raw, "b", 0.4)),
    )
    eval_raw = raw.get("evaluation", {}) or {}
    metric = str(_get(eval_raw, "target_metric", "ap@100"))
    if metric not in TARGET_METRICS:
        raise ValueError(f"target_metric must be one of {TARGET_METRICS}, got {metric!r}")
    fold_a = _get(eval_raw, "fold_a", [])
    if isinstance(fold_a, str):
        fold_path = (base_dir / fold_a) if not Path(fold_a).is_absolute() else Path(fold_a)
        if not fold_path.exists():
            raise ValueError(f"fold_a file {fold_path} does not exist")
        fold_a = [line.strip() for line in fold_path.read_text(encoding="utf-8").splitlines() if line.strip()]
    lambdas = [float(v) for v in _get(eval_raw, "lambdas", DEFAULT_LAMBDAS)]
    ks = [int(v) for v in _get(eval_raw, "ks", DEFAULT_KS)]

    return PipelineConfig(
        collection=resolve("collection"),
        train_queries=resolve("train_queries"),
        train_qrels=resolve("train_qrels"),
        test_queries=resolve("test_queries"),
        test_qrels=resolve("test_qrels"),
        target_run=resolve("target_run"),
        index_dir=resolve("index_dir"),
        output_dir=resolve("output_dir"),
        embeddings=resolve("embeddings", required=False),
        seed=int(raw.get("seed", 0)),
        qpp=qpp,
        predictor=predictor,
        target_metric=metric,
        fold_a=[str(v) for v in fold_a],
        lambdas=lambdas,
        ks=ks,
        run_depth=int(_get(qpp_raw, "run_depth", 100)),
        run_tag=str(raw.get("run_tag", "qvqpp")),
    )


def _require_files(*paths: Path | None) -> None:
    missing = [str(p) for p in paths if p is not None and not p.exists()]
    if missing:
        raise ValueError("missing input file(s): " + ", ".join(missing))


def _load_resources(cfg: PipelineConfig) -> PipelineResources:
    doc_index_path = cfg.index_dir / DOC_INDEX_FILE
    query_index_path = cfg.index_dir / QUERY_INDEX_FILE
    _require_files(doc_index_path, query_index_path, cfg.collection, cfg.train_queries, cfg.train_qrels)
    store = None
    if cfg.qpp.query_retriever == "dense":
        if cfg.embeddings is None:
            raise ValueError("dense query retriever configured but paths.embeddings is not set")
        _require_files(cfg.embeddings)
        store = load_vectors(cfg.embeddings)
    collection = {d.id: d for d in parse_collection(cfg.collection)}
    training_queries = {q.id: q for q in parse_queries(cfg.train_queries)}
    return PipelineResources(
        doc_index=load_index(doc_index_path),
        query_index=load_index(query_index_path),
        training_queries=training_queries,
        training_qrels=parse_qrels(cfg.train_qrels),
        collection=collection,
        embedding_store=store,
        k1=cfg.predictor.k1,
        b=cfg.predictor.b,
    )


def _make_context(cfg: PipelineConfig, res: PipelineResources) -> PredictorContext:
    return PredictorContext(
        index=res.doc_index,
        params=cfg.predictor,
        rbo_params=cfg.qpp.rbo_params,
        seed=cfg.seed,
    )


def _load_targets(cfg: PipelineConfig) -> dict[str, Query]:
    _require_files(cfg.test_queries)
    return {q.id: q for q in parse_queries(cfg.test_queries)}


def _load_target_run(cfg: PipelineConfig, targets: Mapping[str, Query]) -> dict[str, RankedList]:
    _require_files(cfg.target_run)
    run_map = parse_run(cfg.target_run, depth=cfg.run_depth)
    unknown = sorted(set(run_map) - set(targets))
    if unknown:
        raise ValueError(f"run file contains queries with no text: {', '.join(unknown)}")
    return run_map


def _actual_metric(cfg: PipelineConfig, run_map: Mapping[str, RankedList], qrels: Qrels) -> dict[str, float]:
    values = {}
    for qid in sorted(run_map):
        if cfg.target_metric == "ap@100":
            values[qid] = ap_at_k(run_map[qid], qrels, 100, AP_REL_THRESHOLD)
        else:
            values[qid] = ndcg_at_k(run_map[qid], qrels, 10)
    return values


def cmd_index(cfg: PipelineConfig) -> int:
    """Build and persist the document index and the training-query index."""
    _require_files(cfg.collection, cfg.train_queries)
    cfg.index_dir.mkdir(parents=True, exist_ok=True)
    documents = parse_collection(cfg.collection)
    queries = parse_queries(cfg.train_queries)
    doc_index = build_index((d.id, d.text) for d in documents)
    query_index = build_index((q.id, q.text) for q in queries)
    save_index(doc_index, cfg.index_dir / DOC_INDEX_FILE)
    save_index(query_index, cfg.index_dir / QUERY_INDEX_FILE)
    logger.info(
        "indexed %d documents (%d terms) and %d queries (%d terms)",
        doc_index.size, len(doc_index.postings), query_index.size, len(query_index.postings),
    )
    return 0


def cmd_qv(cfg: PipelineConfig, out_path: Path | None = None) -> int:
    """Write the re-ranked variant report: qid, variant_qid, hop, rbo, variant_text."""
    res = _load_resources(cfg)
    targets = _load_targets(cfg)
    out = out_path or cfg.output_dir / "qv_report.tsv"
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["qid\tvariant_qid\thop\trbo\tvariant_text\n"]
    for qid in sorted(targets):
        qv_set = build_qv_set(targets[qid], cfg.qpp, res)
        if not qv_set.candidates:
            print(f"note: no query variants found for {qid}", file=sys.stderr)
        for cand in qv_set.candidates:
            lines.append(f"{qid}\t{cand.query.id}\t{cand.hop}\t{cand.rbo:.6f}\t{cand.query.text}\n")
    out.write_text("".join(lines), encoding="utf-8")
    logger.info("wrote %s", out)
    return 0


def cmd_predict(cfg: PipelineConfig, out_path: Path | None = None) -> int:
    """Write one smoothed prediction per query in the target run file."""
    res = _load_resources(cfg)
    targets = _load_targets(cfg)
    run_map = _load_target_run(cfg, targets)
    context = _make_context(cfg, res)
    out = out_path or cfg.output_dir / "predictions.tsv"
    out.parent.mkdir(parents=True, exist_ok=True)
    predictions = {
        qid: predict_query(targets[qid], run_map[qid], cfg.qpp, res, context)
        for qid in sorted(run_map)
    }
    write_score_tsv(predictions, out)
    logger.info("wrote %s (%d queries)", out, len(predictions))
    return 0


def cmd_evaluate(
    cfg: PipelineConfig,
    predictions_path: Path,
    baseline_path: Path | None = None,
    out_path: Path | None = None,
    metrics_out: Path | None = None,
) -> int:
    """Correlate a predictions file with the target metric; optional baseline comparison."""
    _require_files(predictions_path, cfg.test_qrels, cfg.target_run)
    if baseline_path is not None:
        _require_files(baseline_path)
    targets = _load_targets(cfg)
    run_map = _load_target_run(cfg, targets)
    qrels = parse_qrels(cfg.test_qrels)
    actual = _actual_metric(cfg, run_map, qrels)
    if metrics_out is not None:
        metrics_out.parent.mkdir(parents=True, exist_ok=True)
        write_score_tsv(actual, metrics_out)
    predictions = parse_score_tsv(predictions_path)
    if set(predictions) != set(run_map):
        raise ValueError("prediction file and run file must cover the same query ids")
    ids = sorted(run_map)
    pairs = [EvalPair(qid, predictions[qid], actual[qid]) for qid in ids]
    tau = kendall_tau(pairs)
    report = [
        f"target_metric: {cfg.target_metric}",
        f"n_queries: {len(ids)}",
        f"tau: {tau:.6f}",
    ]
    if baseline_path is not None:
        baseline = parse_score_tsv(baseline_path)
        if set(baseline) != set(run_map):
            raise ValueError("baseline file and run file must cover the same query ids")
        baseline_tau = kendall_tau([EvalPair(qid, baseline[qid], actual[qid]) for qid in ids])
        fisher = fisher_z_compare(tau, baseline_tau, len(ids))
        report += [
            f"baseline_tau: {baseline_tau:.6f}",
            f"fisher_z: {fisher.z:.6f}",
            f"significant_at_0.99: {str(fisher.significant).lower()}",
        ]
    out = out_path or cfg.output_dir / "eval_report.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(report) + "\n", encoding="utf-8")
    print("\n".join(report))
    return 0


def _prediction_engine(cfg: PipelineConfig, res, targets, run_map, context, k_max: int):
    """Precompute per-query variant sets once; sweeping lambda/k is then cheap."""
    qpp_kmax = replace(cfg.qpp, k=k_max)
    qv_sets = {}
    terms = {}
    for qid in sorted(run_map):
        qv_sets[qid] = build_qv_set(targets[qid], qpp_kmax, res)
        terms[qid] = tokenize(targets[qid].text)

    def predict_fn(lam: float, k: int, ids: Sequence[str]) -> dict[str, float]:
        qpp = replace(cfg.qpp, lam=lam, k=k)
        return {
            qid: smooth_qpp(run_map[qid], qv_sets[qid].top(k), qpp, context, terms[qid])
            for qid in ids
        }

    return predict_fn


def _check_grid(cfg: PipelineConfig) -> None:
    if not cfg.lambdas or not cfg.ks:
        raise ValueError("evaluation.lambdas and evaluation.ks must be non-empty")
    if max(cfg.ks) >= cfg.qpp.n:
        raise ValueError(f"largest grid k ({max(cfg.ks)}) must stay below candidate pool n ({cfg.qpp.n})")


def cmd_tune(cfg: PipelineConfig, baseline_path: Path | None = None, out_path: Path | None = None) -> int:
    """2-fold tuning: fit (lambda, k) on each fold's train split, report test tau."""
    _check_grid(cfg)
    _require_files(cfg.test_qrels, cfg.target_run)
    res = _load_resources(cfg)
    targets = _load_targets(cfg)
    run_map = _load_target_run(cfg, targets)
    qrels = parse_qrels(cfg.test_qrels)
    actual = _actual_metric(cfg, run_map, qrels)
    fold_a = frozenset(cfg.fold_a)
    if not fold_a:
        raise ValueError("evaluation.fold_a must list the query ids of the first fold")
    unknown = sorted(fold_a - set(run_map))
    if unknown:
        raise ValueError(f"fold_a contains queries absent from the run: {', '.join(unknown)}")
    fold_b = frozenset(set(run_map) - fold_a)
    if not fold_b:
        raise ValueError("fold_a covers every run query; the second fold is empty")
    folds = (FoldSpec(fold_a, fold_b), FoldSpec(fold_b, fold_a))
    context = _make_context(cfg, res)
    predict_fn = _prediction_engine(cfg, res, targets, run_map, context, max(cfg.ks))
    report_data = tune_2fold(folds, cfg.lambdas, cfg.ks, predict_fn, actual)
    lines = [f"target_metric: {cfg.target_metric}", f"base: {cfg.qpp.base}"]
    for number, (fold, outcome) in enumerate(zip(folds, report_data.folds), start=1):
        lines += [
            f"fold_{number}_train_size: {len(fold.train_ids)}",
            f"fold_{number}_test_size: {len(fold.test_ids)}",
            f"fold_{number}_chosen_lambda: {outcome.chosen_lambda:g}",
            f"fold_{number}_chosen_k: {outcome.chosen_k}",
            f"fold_{number}_train_tau: {outcome.train_tau:.6f}",
            f"fold_{number}_test_tau: {outcome.test_tau:.6f}",
        ]
    lines.append(f"mean_test_tau: {report_data.mean_test_tau:.6f}")
    if baseline_path is not None:
        _require_files(baseline_path)
        baseline = parse_score_tsv(baseline_path)
        missing = sorted(set(run_map) - set(baseline))
        if missing:
            raise ValueError(f"baseline predictions missing queries: {', '.join(missing)}")
        for number, (fold, outcome) in enumerate(zip(folds, report_data.folds), start=1):
            ids = sorted(fold.test_ids)
            base_tau = kendall_tau([EvalPair(q, baseline[q], actual[q]) for q in ids])
            fisher = fisher_z_compare(outcome.test_tau, base_tau, len(ids))
            lines += [
                f"fold_{number}_baseline_test_tau: {base_tau:.6f}",
                f"fold_{number}_fisher_z: {fisher.z:.6f}",
                f"fold_{number}_significant_at_0.99: {str(fisher.significant).lower()}",
            ]
    out = out_path or cfg.output_dir / "tune_report.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return 0


def cmd_sweep(cfg: PipelineConfig, out_path: Path | None = None) -> int:
    """Evaluate tau for the full (lambda, k) grid on all run queries; emit CSV."""
    _check_grid(cfg)
    _require_files(cfg.test_qrels, cfg.target_run)
    res = _load_resources(cfg)
    targets = _load_targets(cfg)
    run_map = _load_target_run(cfg, targets)
    qrels = parse_qrels(cfg.test_qrels)
    actual = _actual_metric(cfg, run_map, qrels)
    context = _make_context(cfg, res)
    predict_fn = _prediction_engine(cfg, res, targets, run_map, context, max(cfg.ks))
    rows = sweep_grid(cfg.lambdas, cfg.ks, predict_fn, actual)
    out = out_path or cfg.output_dir / "sweep.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["lambda,k,tau\n"]
    lines += [f"{lam:g},{k},{tau:.6f}\n" for lam, k, tau in rows]
    out.write_text("".join(lines), encoding="utf-8")
    logger.info("wrote %s (%d cells)", out, len(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qvqpp",
        description="Query performance prediction smoothed over retrieved query variants.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the YAML pipeline config")
        cmd.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
            help="override a config entry, e.g. --set qpp.lambda=0.3",
        )
        return cmd

    add("index", "build and persist the document and query indexes")
    qv = add("qv", "write the per-target variant report")
    qv.add_argument("--out", type=Path, default=None)
    predict = add("predict", "write smoothed predictions for the target run")
    predict.add_argument("--out", type=Path, default=None)
    evaluate = add("evaluate", "correlate predictions with the target metric")
    evaluate.add_argument("--predictions", type=Path, required=True)
    evaluate.add_argument("--baseline", type=Path, default=None)
    evaluate.add_argument("--out", type=Path, default=None)
    evaluate.add_argument(
        "--metrics-out", type=Path, default=None,
        help="also write the per-query ground-truth metric values as id<TAB>value",
    )
    tune = add("tune", "2-fold hyper-parameter tuning")
    tune.add_argument("--baseline", type=Path, default=None)
    tune.add_argument("--out", type=Path, default=None)
    sweep = add("sweep", "full (lambda, k) grid sweep as CSV")
    sweep.add_argument("--out", type=Path, default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config, args.overrides)
        if args.command == "index":
            return cmd_index(cfg)
        if args.command == "qv":
            return cmd_qv(cfg, args.out)
        if args.command == "predict":
            return cmd_predict(cfg, args.out)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.predictions, args.baseline, args.out, args.metrics_out)
        if args.command == "tune":
            return cmd_tune(cfg, args.baseline, args.out)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out)
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
