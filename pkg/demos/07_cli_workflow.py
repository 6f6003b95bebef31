#!/usr/bin/env python3
"""The whole command-line pipeline in a temporary workspace.

Writes a small corpus, training queries with judgments, target queries,
a synthetic target run and a config file, then drives
index -> qv -> predict -> evaluate -> tune -> sweep and prints every
artifact it produced.
"""

import tempfile
from pathlib import Path

from qvqpp import RankedList, bm25_retrieve, build_index, tokenize, write_run
from qvqpp.cli import main as qvqpp_main

DOCS = {
    "p01": "brewing coffee with water at the right temperature improves the cup",
    "p02": "a french press steeps coffee and the plunger controls steeping heat level",
    "p03": "espresso needs a fine grind and stable pressure for crema",
    "p04": "cold brew steeps coffee grounds overnight in cold water",
    "p05": "a humpback whale sings during the long migration",
    "p06": "krill swarms feed whale pods in cold ocean water",
    "p07": "a breaching humpback slaps the ocean surface",
    "p08": "solar panel wattage depends on sunlight and efficiency",
    "p09": "an inverter converts rooftop solar output for the grid",
    "p10": "silicon cell efficiency keeps improving every year",
}

TRAIN_QUERIES = {
    "t1": "coffee brewing water temperature",
    "t2": "french press plunger steeping heat level",
    "t3": "espresso grind crema",
    "t4": "humpback whale migration",
    "t5": "krill whale ocean",
    "t6": "solar panel efficiency",
    "t7": "rooftop inverter grid",
}

TRAIN_QRELS = {"t1": ["p01", "p02"], "t2": ["p02"], "t3": ["p03"],
               "t4": ["p05"], "t5": ["p06"], "t6": ["p08"], "t7": ["p09"]}

TARGETS = {
    "dlA": "best water temperature for brewing coffee",
    "dlB": "whale migration and krill",
    "dlC": "solar panel rooftop efficiency",
    "dlD": "espresso crema pressure",
}

TEST_QRELS = {
    "dlA": {"p01": 3, "p02": 2, "p04": 1, "p03": 0},
    "dlB": {"p05": 3, "p06": 2, "p07": 2},
    "dlC": {"p08": 1, "p09": 2, "p10": 2},
    "dlD": {"p03": 3, "p02": 2},
}

CONFIG = """\
seed: 7
paths:
  collection: data/collection.tsv
  train_queries: data/train_queries.tsv
  train_qrels: data/train_qrels.txt
  test_queries: data/test_queries.tsv
  test_qrels: data/test_qrels.txt
  target_run: data/target_run.txt
  index_dir: work/index
  output_dir: work/out
qpp:
  lambda: 0.5
  k: 2
  n: 6
  query_retriever: bm25
  use_2hop: true
  base: nqc
predictor:
  uef_samples: 5
  uef_sample_size: 2
evaluation:
  target_metric: ap@100
  fold_a: [dlA, dlB]
  lambdas: [0.0, 0.5, 1.0]
  ks: [1, 2]
"""


def build_workspace(root: Path) -> Path:
    data = root / "data"
    data.mkdir(parents=True)
    (data / "collection.tsv").write_text(
        "".join(f"{d}\t{t}\n" for d, t in DOCS.items()), encoding="utf-8")
    (data / "train_queries.tsv").write_text(
        "".join(f"{q}\t{t}\n" for q, t in TRAIN_QUERIES.items()), encoding="utf-8")
    (data / "test_queries.tsv").write_text(
        "".join(f"{q}\t{t}\n" for q, t in TARGETS.items()), encoding="utf-8")
    (data / "train_qrels.txt").write_text(
        "".join(f"{q} 0 {d} 1\n" for q, docs in TRAIN_QRELS.items() for d in docs),
        encoding="utf-8")
    (data / "test_qrels.txt").write_text(
        "".join(f"{q} 0 {d} {g}\n" for q, judged in TEST_QRELS.items() for d, g in judged.items()),
        encoding="utf-8")

    # synthesize the "external" target run with the bundled BM25 stack
    index = build_index(DOCS.items())
    run_map = {}
    for qid, text in TARGETS.items():
        ranked = bm25_retrieve(index, tokenize(text), depth=100, query_id=qid)
        rescaled = [(d, round(0.1 + 0.08 * s, 6)) for d, s in ranked.entries]
        run_map[qid] = RankedList.from_scores(qid, rescaled)
    write_run(run_map, "demo", data / "target_run.txt")

    config = root / "config.yaml"
    config.write_text(CONFIG, encoding="utf-8")
    return config


def run(label, argv):
    print(f"\n$ qvqpp {' '.join(argv)}")
    code = qvqpp_main(argv)
    print(f"  -> exit {code}")
    assert code == 0, label


def main():
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        config = build_workspace(root)
        out = root / "work" / "out"

        run("index", ["index", "--config", str(config)])
        run("qv", ["qv", "--config", str(config)])
        run("predict", ["predict", "--config", str(config)])
        run("evaluate", [
            "evaluate", "--config", str(config),
            "--predictions", str(out / "predictions.tsv"),
            "--metrics-out", str(out / "metric_values.tsv"),
        ])
        run("tune", ["tune", "--config", str(config)])
        run("sweep", ["sweep", "--config", str(config)])

        for name in ("qv_report.tsv", "predictions.tsv", "metric_values.tsv",
                     "eval_report.txt", "tune_report.txt", "sweep.csv"):
            print(f"\n--- work/out/{name} ---")
            print((out / name).read_text(encoding="utf-8").rstrip())


if __name__ == "__main__":
    main()
