from __future__ import annotations

import logging

import pytest

import oracles
from qvqpp import (
    Document,
    Query,
    QppConfig,
    QVCandidate,
    QVSet,
    RankedList,
    RboParams,
    build_index,
    build_qv_set,
    expand_2hop,
    merge_one_hop_only,
    rbo_ext,
    rerank_by_rbo,
    retrieve_1hop,
    smooth_qpp,
    store_from_arrays,
    tokenize,
)
from qvqpp.text_index import bm25_retrieve
from qvqpp.variants import STAGE_MERGED, STAGE_ONE_HOP, STAGE_RERANKED


class TestQppConfig:
    def test_lambda_bounds(self):
        with pytest.raises(ValueError, match="lambda"):
            QppConfig(lam=1.5)

    def test_pool_must_exceed_k(self):
        with pytest.raises(ValueError, match="exceed"):
            QppConfig(k=10, n=10)

    def test_unknown_retriever(self):
        with pytest.raises(ValueError, match="query retriever"):
            QppConfig(query_retriever="neural")

    def test_unknown_base(self):
        with pytest.raises(ValueError, match="base predictor"):
            QppConfig(base="wig")


class TestRetrieve1Hop:
    def test_matches_bm25_oracle(self, corpus, query_index):
        config = QppConfig(k=2, n=5)
        training = corpus.training_query_map()
        for target in corpus.test_queries:
            got = retrieve_1hop(target, config, query_index, training)
            items = [(q.id, q.text) for q in corpus.train_queries]
            expected = oracles.bm25_rank_all(items, tokenize(target.text))
            expected = [
                (qid, score)
                for qid, score in expected
                if tokenize(training[qid].text) != tokenize(target.text)
            ][:5]
            assert [(c.query.id, c.retrieval_score) for c in got.candidates] == pytest.approx(expected)
            assert got.stage == STAGE_ONE_HOP
            assert all(c.hop == 1 for c in got.candidates)

    def test_verbatim_copy_excluded(self, corpus):
        target = corpus.test_queries[0]
        training = dict(corpus.training_query_map())
        copy = Query("copycat", target.text.upper())  # same tokenization
        training[copy.id] = copy
        index = build_index((q.id, q.text) for q in training.values())
        got = retrieve_1hop(target, QppConfig(k=1, n=3), index, training)
        assert "copycat" not in got.query_ids()
        assert "t01" in got.query_ids()

    def test_no_vocabulary_overlap_gives_empty_set(self, query_index, corpus):
        target = Query("weird", "xylophone zygote")
        got = retrieve_1hop(target, QppConfig(), query_index, corpus.training_query_map())
        assert got.candidates == []

    def test_dense_matches_cosine_oracle(self, corpus, embedding_store):
        config = QppConfig(k=2, n=4, query_retriever="dense")
        training = corpus.training_query_map()
        target = corpus.test_queries[1]
        got = retrieve_1hop(target, config, embedding_store, training)
        vectors = {qid: corpus.embeddings[qid] for qid in training}
        expected = oracles.cosine_rank_all(vectors, corpus.embeddings[target.id])[:4]
        assert [c.query.id for c in got.candidates] == [qid for qid, _ in expected]
        assert [c.retrieval_score for c in got.candidates] == pytest.approx(
            [score for _, score in expected], abs=1e-12
        )

    def test_dense_excludes_non_training_ids(self, corpus, embedding_store):
        config = QppConfig(k=2, n=100, query_retriever="dense")
        got = retrieve_1hop(
            corpus.test_queries[0], config, embedding_store, corpus.training_query_map()
        )
        assert not set(got.query_ids()) & {q.id for q in corpus.test_queries}

    def test_dense_missing_target_embedding(self, corpus, embedding_store):
        config = QppConfig(query_retriever="dense")
        with pytest.raises(ValueError, match="no embedding"):
            retrieve_1hop(Query("ghost", "some text"), config, embedding_store, corpus.training_query_map())


class Test2Hop:
    def test_empty_qrels_keeps_one_hop_exactly(self, corpus, query_index):
        config = QppConfig(k=2, n=10)
        target = corpus.test_queries[1]
        one_hop = retrieve_1hop(target, config, query_index, corpus.training_query_map())
        merged = expand_2hop(
            one_hop, {}, config, query_index, corpus.collection_map(), corpus.training_query_map()
        )
        assert merged.stage == STAGE_MERGED
        assert [(c.query.id, c.hop) for c in merged.candidates] == [
            (c.query.id, c.hop) for c in one_hop.candidates
        ]

    def test_paraphrase_reached_through_relevant_doc(self, corpus, query_index):
        # t03 shares no tokens with dl01 but is linked through document d003
        config = QppConfig(k=2, n=100)
        target = corpus.test_queries[0]
        one_hop = retrieve_1hop(target, config, query_index, corpus.training_query_map())
        assert "t03" not in one_hop.query_ids()
        merged = expand_2hop(
            one_hop, corpus.train_qrels, config, query_index,
            corpus.collection_map(), corpus.training_query_map(),
        )
        hops = {c.query.id: c.hop for c in merged.candidates}
        assert hops["t03"] == 2
        assert set(one_hop.query_ids()) < set(merged.query_ids())

    def test_dedupe_keeps_hop_one(self, corpus, query_index):
        # pseudo-queries from coffee documents retrieve t01 again; it stays hop 1
        config = QppConfig(k=2, n=100)
        target = corpus.test_queries[0]
        one_hop = retrieve_1hop(target, config, query_index, corpus.training_query_map())
        merged = expand_2hop(
            one_hop, corpus.train_qrels, config, query_index,
            corpus.collection_map(), corpus.training_query_map(),
        )
        t01 = [c for c in merged.candidates if c.query.id == "t01"]
        assert len(t01) == 1 and t01[0].hop == 1

    def test_missing_relevant_doc_warns_and_continues(self, corpus, query_index, caplog):
        config = QppConfig(k=2, n=10)
        target = corpus.test_queries[0]
        one_hop = retrieve_1hop(target, config, query_index, corpus.training_query_map())
        qrels = {"t01": {"not-a-doc": 1}}
        with caplog.at_level(logging.WARNING):
            merged = expand_2hop(
                one_hop, qrels, config, query_index,
                corpus.collection_map(), corpus.training_query_map(),
            )
        assert "not-a-doc" in caplog.text
        assert merged.query_ids() == one_hop.query_ids()

    def test_matches_scripted_oracle(self):
        training = {
            "tq1": Query("tq1", "alpha beta"),
            "tq2": Query("tq2", "alpha gamma"),
            "tq3": Query("tq3", "delta epsilon"),
            "tq4": Query("tq4", "epsilon zeta"),
            "tq5": Query("tq5", "rho sigma"),
        }
        collection = {
            "docX": Document("docX", "delta epsilon delta"),
            "docY": Document("docY", "rho sigma rho sigma"),
        }
        qrels = {"tq1": {"docX": 1}, "tq2": {"docY": 1}}
        query_index = build_index((q.id, q.text) for q in training.values())
        config = QppConfig(k=1, n=5, pseudo_query_m=20)
        target = Query("T", "alpha")
        one_hop = retrieve_1hop(target, config, query_index, training)
        merged = expand_2hop(one_hop, qrels, config, query_index, collection, training)

        # script the same protocol with the brute-force retriever
        query_items = [(q.id, q.text) for q in training.values()]
        expected = [(qid, 1) for qid, _ in oracles.bm25_rank_all(query_items, ["alpha"])][:5]
        seen = {qid for qid, _ in expected}
        for one_hop_qid, _ in list(expected):
            for doc_id in sorted(d for d, g in qrels.get(one_hop_qid, {}).items() if g >= 1):
                terms = oracles.top_frequency_terms(collection[doc_id].text, 20)
                for qid, _ in oracles.bm25_rank_all(query_items, terms)[:5]:
                    if qid != "T" and qid not in seen:
                        seen.add(qid)
                        expected.append((qid, 2))
        assert [(c.query.id, c.hop) for c in merged.candidates] == expected

    def test_requires_one_hop_stage(self, corpus, query_index):
        merged = QVSet("dl01", [], STAGE_MERGED)
        with pytest.raises(ValueError, match="one-hop"):
            expand_2hop(merged, {}, QppConfig(), query_index, {}, {})


class TestRerankByRbo:
    def test_identical_retrieval_gets_rbo_one(self, corpus, resources):
        # t01 retrieves exactly the same documents as dl01 under the
        # internal retriever, so its overlap is 1.0 and it ranks first
        config = QppConfig(k=2, n=100)
        qv_set = build_qv_set(corpus.test_queries[0], config, resources)
        assert qv_set.candidates[0].query.id == "t01"
        assert qv_set.candidates[0].rbo == pytest.approx(1.0, abs=1e-12)
        assert qv_set.stage == STAGE_RERANKED

    def test_all_zero_rbo_falls_back_to_hop_then_id(self, query_index, corpus):
        candidates = [
            QVCandidate(query=corpus.train_queries[4], hop=2, retrieval_score=1.0),
            QVCandidate(query=corpus.train_queries[3], hop=1, retrieval_score=1.0),
            QVCandidate(query=corpus.train_queries[5], hop=1, retrieval_score=1.0),
        ]
        merged = QVSet("zz", candidates, STAGE_MERGED)
        doc_index = build_index([("lone", "completely unrelated contents")])
        empty_target_run = RankedList("zz", [])
        config = QppConfig(k=2, n=100)
        got = rerank_by_rbo(merged, empty_target_run, doc_index, config)
        ids_sorted = sorted([candidates[1], candidates[2]], key=lambda c: c.query.id)
        assert got.query_ids() == [c.query.id for c in ids_sorted]
        assert all(c.rbo == 0.0 for c in got.candidates)

    def test_matches_brute_force_selection(self, corpus, resources, doc_index):
        config = QppConfig(k=2, n=100)
        target = corpus.test_queries[1]
        training = corpus.training_query_map()
        one_hop = retrieve_1hop(target, config, resources.query_index, training)
        merged = expand_2hop(
            one_hop, corpus.train_qrels, config, resources.query_index,
            corpus.collection_map(), training,
        )
        target_run = bm25_retrieve(doc_index, tokenize(target.text), 100, query_id=target.id)
        got = rerank_by_rbo(merged, target_run, doc_index, config)

        scored = []
        for cand in merged.candidates:
            run = bm25_retrieve(doc_index, tokenize(cand.query.text), 100, query_id=cand.query.id)
            scored.append((cand.query.id, cand.hop, rbo_ext(target_run, run, config.rbo_params)))
        scored.sort(key=lambda row: (-row[2], row[1], row[0]))
        assert [(c.query.id, c.hop) for c in got.candidates] == [(i, h) for i, h, _ in scored[:2]]
        assert [c.rbo for c in got.candidates] == pytest.approx([s for _, _, s in scored[:2]])

    def test_requires_merged_stage(self, doc_index):
        one = QVSet("q", [], STAGE_ONE_HOP)
        with pytest.raises(ValueError, match="merged"):
            rerank_by_rbo(one, RankedList("q", []), doc_index, QppConfig())


class StubContext:
    """Returns preset predictor values keyed by query id."""

    def __init__(self, values):
        self.values = values

    def evaluate(self, base, run, terms, query_id):
        return self.values[query_id]


def reranked_set(target_id, *cands):
    return QVSet(target_id, list(cands), STAGE_RERANKED)


def candidate(qid, rbo, run_docs=("d1",)):
    return QVCandidate(
        query=Query(qid, f"text of {qid}"),
        hop=1,
        retrieval_score=1.0,
        rbo=rbo,
        internal_run=RankedList.from_scores(qid, [(d, 1.0) for d in run_docs]),
    )


class TestSmoothQpp:
    def test_hand_example(self):
        # 0.5 * 0.4 + 0.5 * (0.5 / 0.5) * 0.8 = 0.6
        target_run = RankedList.from_scores("T", [("d1", 1.0)])
        qv = reranked_set("T", candidate("v1", 0.5))
        ctx = StubContext({"T": 0.4, "v1": 0.8})
        config = QppConfig(lam=0.5, k=1, n=2)
        got = smooth_qpp(target_run, qv, config, ctx, ["term"])
        assert got == pytest.approx(0.6, abs=1e-12)

    def test_lambda_zero_is_exactly_base(self, corpus, resources, context, target_run):
        config = QppConfig(lam=0.0, k=2, n=100)
        target = corpus.test_queries[0]
        qv = build_qv_set(target, config, resources)
        got = smooth_qpp(target_run[target.id], qv, config, context, tokenize(target.text))
        base = context.evaluate("nqc", target_run[target.id], tokenize(target.text), target.id)
        assert got == base

    def test_empty_set_falls_back(self):
        ctx = StubContext({"T": 0.4})
        target_run = RankedList.from_scores("T", [("d1", 1.0)])
        got = smooth_qpp(target_run, reranked_set("T"), QppConfig(lam=0.7), ctx, ["x"])
        assert got == 0.4

    def test_zero_weight_sum_falls_back(self):
        ctx = StubContext({"T": 0.4})
        target_run = RankedList.from_scores("T", [("d1", 1.0)])
        qv = reranked_set("T", candidate("v1", 0.0))
        assert smooth_qpp(target_run, qv, QppConfig(lam=0.7), ctx, ["x"]) == 0.4

    def test_affine_in_lambda(self, corpus, resources, context, target_run):
        for target in corpus.test_queries[:3]:
            config = QppConfig(lam=0.0, k=2, n=100)
            qv = build_qv_set(target, config, resources)
            terms = tokenize(target.text)

            def estimate(lam):
                cfg = QppConfig(lam=lam, k=2, n=100)
                return smooth_qpp(target_run[target.id], qv, cfg, context, terms)

            f0, f_half, f1 = estimate(0.0), estimate(0.5), estimate(1.0)
            assert f_half == pytest.approx((f0 + f1) / 2.0, abs=1e-12)

    def test_weights_sum_to_one(self, corpus, resources):
        qv = build_qv_set(corpus.test_queries[0], QppConfig(k=2, n=100), resources)
        total = sum(c.rbo for c in qv.candidates)
        assert total > 0
        assert sum(c.rbo / total for c in qv.candidates) == pytest.approx(1.0, abs=1e-9)

    def test_convex_combination_bounds(self, corpus, resources, context, target_run):
        config = QppConfig(lam=0.5, k=2, n=100)
        target = corpus.test_queries[1]
        qv = build_qv_set(target, config, resources)
        terms = tokenize(target.text)
        got = smooth_qpp(target_run[target.id], qv, config, context, terms)
        values = [context.evaluate("nqc", target_run[target.id], terms, target.id)]
        for cand in qv.candidates:
            if cand.rbo > 0:
                values.append(
                    context.evaluate("nqc", cand.internal_run, tokenize(cand.query.text), cand.query.id)
                )
        assert min(values) - 1e-12 <= got <= max(values) + 1e-12

    def test_requires_reranked_stage(self):
        with pytest.raises(ValueError, match="reranked"):
            smooth_qpp(
                RankedList("T", []), QVSet("T", [], STAGE_MERGED), QppConfig(),
                StubContext({}), ["x"],
            )


class TestPipelineInvariants:
    def test_one_hop_contained_in_merged_everywhere(self, corpus, resources):
        config = QppConfig(k=2, n=100)
        training = corpus.training_query_map()
        for target in corpus.test_queries:
            one_hop = retrieve_1hop(target, config, resources.query_index, training)
            merged = expand_2hop(
                one_hop, corpus.train_qrels, config, resources.query_index,
                corpus.collection_map(), training,
            )
            assert set(one_hop.query_ids()) <= set(merged.query_ids())

    def test_2hop_toggle_identical_without_qrels(self, corpus, resources):
        training = corpus.training_query_map()
        for target in corpus.test_queries:
            config_on = QppConfig(k=2, n=100, use_2hop=True)
            one_hop = retrieve_1hop(target, config_on, resources.query_index, training)
            via_empty_qrels = expand_2hop(
                one_hop, {}, config_on, resources.query_index, corpus.collection_map(), training
            )
            via_toggle = merge_one_hop_only(one_hop)
            assert [(c.query.id, c.hop) for c in via_empty_qrels.candidates] == [
                (c.query.id, c.hop) for c in via_toggle.candidates
            ]

    def test_target_never_among_candidates(self, corpus, resources):
        config = QppConfig(k=3, n=100)
        for target in corpus.test_queries:
            qv = build_qv_set(target, config, resources)
            assert target.id not in qv.query_ids()

    def test_qvset_rejects_duplicates_and_target(self, corpus):
        q = corpus.train_queries[0]
        with pytest.raises(ValueError, match="duplicate"):
            QVSet("T", [QVCandidate(q, 1, 1.0), QVCandidate(q, 2, 0.5)], STAGE_MERGED)
        with pytest.raises(ValueError, match="target query"):
            QVSet(q.id, [QVCandidate(q, 1, 1.0)], STAGE_MERGED)

    def test_dense_pipeline_runs_end_to_end(self, corpus, resources, context, target_run):
        config = QppConfig(lam=0.4, k=2, n=50, query_retriever="dense", use_2hop=True)
        target = corpus.test_queries[0]
        qv = build_qv_set(target, config, resources)
        assert qv.stage == STAGE_RERANKED and len(qv.candidates) <= 2
        value = smooth_qpp(target_run[target.id], qv, config, context, tokenize(target.text))
        assert value >= 0.0
