"""Query-variant retrieval and predictor smoothing.

The pipeline for one target query:

1. retrieve a candidate pool of similar training queries directly
   (1-hop), via BM25 over the indexed query collection or cosine kNN
   over precomputed query embeddings;
2. optionally expand the pool through the judged relevant documents of
   the 1-hop candidates: each relevant document becomes a pseudo-query
   that retrieves further training queries (2-hop);
3. re-rank the merged pool by the rank-biased overlap between each
   candidate's document ranking and the target's, both produced by the
   internal BM25 retriever, and keep the best k;
4. blend the base predictor's estimate for the target run with the
   overlap-weighted average of the candidates' estimates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .corpus_io import Document, Qrels, Query, RankedList
from .dense_index import EmbeddingStore, knn_cosine
from .predictors import PredictorContext
from .rank_sim import RboParams, rbo_ext
from .text_index import DEFAULT_B, DEFAULT_K1, InvertedIndex, bm25_retrieve, make_pseudo_query, tokenize

logger = logging.getLogger(__name__)

STAGE_ONE_HOP = "one-hop"
STAGE_MERGED = "merged"
STAGE_RERANKED = "reranked-top-k"

RETRIEVER_BM25 = "bm25"
RETRIEVER_DENSE = "dense"

BASE_PREDICTORS = ("nqc", "uef")


@dataclass
class QVCandidate:
    """One retrieved variant of the target query."""

    query: Query
    hop: int
    retrieval_score: float
    rbo: Optional[float] = None
    internal_run: Optional[RankedList] = None


@dataclass
class QVSet:
    """A set of variant candidates for one target query at a given stage."""

    target_query_id: str
    candidates: list[QVCandidate]
    stage: str

    def __post_init__(self) -> None:
        ids = [c.query.id for c in self.candidates]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate variant ids in QV set")
        if self.target_query_id in ids:
            raise ValueError("target query must never appear among its own variants")

    def query_ids(self) -> list[str]:
        return [c.query.id for c in self.candidates]

    def top(self, k: int) -> "QVSet":
        if self.stage != STAGE_RERANKED:
            raise ValueError(f"top() requires a reranked set, got stage {self.stage!r}")
        return QVSet(self.target_query_id, list(self.candidates[:k]), STAGE_RERANKED)


@dataclass
class QppConfig:
    """All tunables of the smoothing estimator and the variant retrieval."""

    lam: float = 0.5
    k: int = 1
    n: int = 100
    query_retriever: str = RETRIEVER_BM25
    use_2hop: bool = True
    pseudo_query_m: int = 20
    rbo_params: RboParams = field(default_factory=RboParams)
    base: str = "nqc"
    internal_depth: int = 100

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.n <= self.k:
            raise ValueError(f"candidate pool n ({self.n}) must exceed k ({self.k})")
        if self.query_retriever not in (RETRIEVER_BM25, RETRIEVER_DENSE):
            raise ValueError(f"unknown query retriever {self.query_retriever!r}")
        if self.base not in BASE_PREDICTORS:
            raise ValueError(f"unknown base predictor {self.base!r}")
        if self.pseudo_query_m < 1:
            raise ValueError(f"pseudo_query_m must be >= 1, got {self.pseudo_query_m}")
        if self.internal_depth < 1:
            raise ValueError(f"internal_depth must be >= 1, got {self.internal_depth}")


def retrieve_1hop(
    target: Query,
    config: QppConfig,
    query_index: InvertedIndex | EmbeddingStore,
    training_queries: Mapping[str, Query],
    *,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> QVSet:
    """Top-n training queries most similar to the target (hop 1).

    Training queries whose tokenization is identical to the target's are
    excluded (a verbatim copy would dominate the overlap re-ranking). In
    dense mode the store must hold a vector for the target id, and only
    ids present in ``training_queries`` are eligible.
    """
    target_tokens = tokenize(target.text)
    if config.query_retriever == RETRIEVER_BM25:
        if not isinstance(query_index, InvertedIndex):
            raise ValueError("bm25 query retriever needs an InvertedIndex over the training queries")
        retrieved = bm25_retrieve(
            query_index, target_tokens, depth=max(config.n, query_index.size, 1),
            k1=k1, b=b, query_id=target.id,
        )
    else:
        if not isinstance(query_index, EmbeddingStore):
            raise ValueError("dense query retriever needs an EmbeddingStore")
        if target.id not in query_index:
            raise ValueError(f"no embedding for target query {target.id!r}")
        exclude = {i for i in query_index.ids if i not in training_queries}
        exclude.add(target.id)
        retrieved = knn_cosine(
            query_index, query_index.vector(target.id), depth=len(query_index),
            exclude=exclude, query_id=target.id,
        )
    candidates: list[QVCandidate] = []
    for qid, score in retrieved.entries:
        if qid == target.id:
            continue
        training_query = training_queries[qid]
        if tokenize(training_query.text) == target_tokens:
            continue
        candidates.append(QVCandidate(query=training_query, hop=1, retrieval_score=score))
        if len(candidates) == config.n:
            break
    return QVSet(target.id, candidates, STAGE_ONE_HOP)


def merge_one_hop_only(one_hop: QVSet) -> QVSet:
    """The merged set when 2-hop expansion is disabled: hop-1 candidates only."""
    if one_hop.stage != STAGE_ONE_HOP:
        raise ValueError(f"expected a one-hop set, got stage {one_hop.stage!r}")
    return QVSet(one_hop.target_query_id, list(one_hop.candidates), STAGE_MERGED)


def expand_2hop(
    one_hop: QVSet,
    qrels: Qrels,
    config: QppConfig,
    query_index: InvertedIndex,
    collection: Mapping[str, Document],
    training_queries: Mapping[str, Query],
    *,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> QVSet:
    """Union the 1-hop set with queries reached through relevant documents.

    For every judged-relevant document (grade >= 1) of every 1-hop
    candidate, a highest-TF pseudo-query retrieves a further top-n
    training queries over the BM25 query index (the 2-hop path is always
    lexical: pseudo-queries have no embeddings). Duplicates keep the
    lowest hop tag; a relevant document missing from the collection is
    skipped with a warning.
    """
    if one_hop.stage != STAGE_ONE_HOP:
        raise ValueError(f"expected a one-hop set, got stage {one_hop.stage!r}")
    merged = list(one_hop.candidates)
    seen = {c.query.id for c in merged}
    for candidate in one_hop.candidates:
        judged = qrels.get(candidate.query.id, {})
        relevant_ids = sorted(doc_id for doc_id, grade in judged.items() if grade >= 1)
        for doc_id in relevant_ids:
            doc = collection.get(doc_id)
            if doc is None:
                logger.warning(
                    "relevant document %r of training query %r missing from collection; skipped",
                    doc_id, candidate.query.id,
                )
                continue
            pseudo = make_pseudo_query(doc, config.pseudo_query_m)
            if not pseudo.terms:
                continue
            retrieved = bm25_retrieve(
                query_index, list(pseudo.terms), depth=config.n, k1=k1, b=b, query_id=doc_id
            )
            for qid, score in retrieved.entries:
                if qid == one_hop.target_query_id or qid in seen:
                    continue
                seen.add(qid)
                merged.append(
                    QVCandidate(query=training_queries[qid], hop=2, retrieval_score=score)
                )
    return QVSet(one_hop.target_query_id, merged, STAGE_MERGED)


def rerank_by_rbo(
    merged: QVSet,
    target_run: RankedList,
    internal_retriever: InvertedIndex,
    config: QppConfig,
    *,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> QVSet:
    """Keep the k candidates whose internal document rankings best overlap the target's.

    ``target_run`` must be the target query's list from the internal
    BM25 retriever at ``internal_depth``. Each candidate retrieves its
    own internal run; candidates with an empty run get overlap 0. Ties
    break by (hop ascending, query id ascending).
    """
    if merged.stage != STAGE_MERGED:
        raise ValueError(f"expected a merged set, got stage {merged.stage!r}")
    scored: list[QVCandidate] = []
    for candidate in merged.candidates:
        internal_run = bm25_retrieve(
            internal_retriever,
            tokenize(candidate.query.text),
            depth=config.internal_depth,
            k1=k1,
            b=b,
            query_id=candidate.query.id,
        )
        overlap = rbo_ext(target_run, internal_run, config.rbo_params)
        scored.append(replace(candidate, rbo=overlap, internal_run=internal_run))
    scored.sort(key=lambda c: (-c.rbo, c.hop, c.query.id))
    return QVSet(merged.target_query_id, scored[: config.k], STAGE_RERANKED)


def smooth_qpp(
    target_run: RankedList,
    qv_set: QVSet,
    config: QppConfig,
    context: PredictorContext,
    target_terms: Sequence[str],
) -> float:
    """(1 - lambda) * phi(target) + lambda * sum_i (rbo_i / sum rbo) * phi(variant_i).

    Falls back to the plain base prediction when the variant set is
    empty or every overlap weight is zero. Zero-weight candidates are
    skipped, so their (possibly empty) runs are never evaluated.
    """
    if qv_set.stage != STAGE_RERANKED:
        raise ValueError(f"expected a reranked set, got stage {qv_set.stage!r}")
    phi_target = context.evaluate(config.base, target_run, target_terms, target_run.query_id)
    weight_sum = sum(c.rbo for c in qv_set.candidates)
    if not qv_set.candidates or weight_sum <= 0.0:
        return phi_target
    if config.lam == 0.0:
        return phi_target
    smoothed = 0.0
    for candidate in qv_set.candidates:
        if candidate.rbo == 0.0:
            continue
        phi_variant = context.evaluate(
            config.base, candidate.internal_run, tokenize(candidate.query.text), candidate.query.id
        )
        smoothed += candidate.rbo / weight_sum * phi_variant
    return (1.0 - config.lam) * phi_target + config.lam * smoothed


@dataclass
class PipelineResources:
    """Read-only shared state for per-query prediction."""

    doc_index: InvertedIndex
    query_index: InvertedIndex
    training_queries: Mapping[str, Query]
    training_qrels: Qrels
    collection: Mapping[str, Document]
    embedding_store: Optional[EmbeddingStore] = None
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B


def build_qv_set(target: Query, config: QppConfig, res: PipelineResources) -> QVSet:
    """Run 1-hop retrieval, optional 2-hop expansion and RBO re-ranking."""
    if config.query_retriever == RETRIEVER_DENSE:
        if res.embedding_store is None:
            raise ValueError("dense query retriever configured but no embedding store loaded")
        hop1_index: InvertedIndex | EmbeddingStore = res.embedding_store
    else:
        hop1_index = res.query_index
    one_hop = retrieve_1hop(target, config, hop1_index, res.training_queries, k1=res.k1, b=res.b)
    if config.use_2hop:
        merged = expand_2hop(
            one_hop, res.training_qrels, config, res.query_index,
            res.collection, res.training_queries, k1=res.k1, b=res.b,
        )
    else:
        merged = merge_one_hop_only(one_hop)
    target_internal = bm25_retrieve(
        res.doc_index, tokenize(target.text), depth=config.internal_depth,
        k1=res.k1, b=res.b, query_id=target.id,
    )
    return rerank_by_rbo(merged, target_internal, res.doc_index, config, k1=res.k1, b=res.b)


def predict_query(
    target: Query,
    target_run: RankedList,
    config: QppConfig,
    res: PipelineResources,
    context: PredictorContext,
) -> float:
    """Full smoothed estimate for one target query and its external run."""
    qv_set = build_qv_set(target, config, res)
    return smooth_qpp(target_run, qv_set, config, context, tokenize(target.text))
