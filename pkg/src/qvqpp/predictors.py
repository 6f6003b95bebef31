"""Post-retrieval quality predictors.

Two base predictors are provided:

- ``nqc``: standard deviation of the top retrieval scores, normalized by
  the score of a whole-corpus pseudo-document for the same terms.
- ``uef``: averages, over seeded random subsets of the top documents,
  the product of (a) the rank overlap between the original head of the
  list and its relevance-model re-ranking and (b) the subset's nqc.

Both are pure given their inputs and a seed; parallel callers derive the
seed from (global seed, query id) via :func:`derive_seed` so scheduling
cannot change outputs.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus_io import RankedList
from .rank_sim import RboParams, rbo_ext
from .text_index import DEFAULT_B, DEFAULT_K1, InvertedIndex, bm25_idf

COLLECTION_SCORE_FLOOR = 1e-6
DEFAULT_MU = 1000.0
UEF_POOL_FLOOR = 50


@dataclass
class PredictorInput:
    """A ranked list plus the per-query normalizer and head size."""

    ranked_list: RankedList
    collection_score: float
    top_k: int = 100


def nqc(inp: PredictorInput) -> float:
    """Std-dev of the top ``top_k`` scores divided by the collection score.

    Zero iff the head scores are all equal; invariant under joint
    positive scaling of the scores and the collection score.
    """
    if not inp.ranked_list.entries:
        raise ValueError("nqc needs a non-empty ranked list")
    if inp.collection_score <= 0.0:
        raise ValueError(f"collection_score must be > 0, got {inp.collection_score}")
    scores = np.asarray(inp.ranked_list.scores()[: inp.top_k], dtype=np.float64)
    return float(np.std(scores) / inp.collection_score)


def collection_score(
    index: InvertedIndex,
    terms: Sequence[str],
    *,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
    floor: float = COLLECTION_SCORE_FLOOR,
) -> float:
    """BM25 score of the corpus treated as one virtual document.

    The virtual document's term frequencies are the corpus totals and
    its length is the total corpus token count; N, df and avgdl are
    those of the real corpus. Queries with no indexed term get the
    configured floor so downstream division stays defined.
    """
    if index.size == 0:
        raise ValueError("collection_score needs a non-empty index")
    total = index.total_tokens
    avgdl = index.avgdl
    score = 0.0
    for term, query_tf in Counter(terms).items():
        cf = index.collection_freqs.get(term, 0)
        if cf == 0:
            continue
        idf = bm25_idf(index, term)
        norm = k1 * (1.0 - b + b * total / avgdl)
        score += query_tf * idf * cf * (k1 + 1.0) / (cf + norm)
    return score if score > 0.0 else floor


@dataclass
class RelevanceModel:
    """Term distribution induced from a scored document sample; weights sum to 1."""

    term_weights: dict[str, float]


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    weights = np.exp(shifted)
    return weights / weights.sum()


def _dirichlet_prob(tf: int, doc_len: int, corpus_prob: float, mu: float) -> float:
    return (tf + mu * corpus_prob) / (doc_len + mu)


def build_relevance_model(
    index: InvertedIndex, sample: RankedList, *, mu: float = DEFAULT_MU
) -> RelevanceModel:
    """Relevance model over the sampled documents' vocabulary.

    term_weight(w) is proportional to the softmax-score-weighted sum of
    Dirichlet-smoothed document language models p(w|D) over the sample.
    """
    if not sample.entries:
        raise ValueError("relevance model needs a non-empty sample")
    ordinals = []
    for doc_id, _ in sample.entries:
        if doc_id not in index.ordinal_of:
            raise ValueError(f"sampled document {doc_id!r} is not in the index")
        ordinals.append(index.ordinal_of[doc_id])
    vocab: set[str] = set()
    for ordinal in ordinals:
        vocab.update(index.term_counts[ordinal])
    if not vocab:
        raise ValueError("all sampled documents are empty")
    doc_weights = _softmax(np.asarray(sample.scores(), dtype=np.float64))
    total_tokens = index.total_tokens
    weights: dict[str, float] = {}
    for term in sorted(vocab):
        corpus_prob = index.collection_freqs[term] / total_tokens
        mass = 0.0
        for weight, ordinal in zip(doc_weights, ordinals):
            tf = index.term_counts[ordinal].get(term, 0)
            mass += weight * _dirichlet_prob(tf, index.item_lengths[ordinal], corpus_prob, mu)
        weights[term] = mass
    normalizer = sum(weights.values())
    return RelevanceModel({term: w / normalizer for term, w in weights.items()})


def rm_rerank(
    model: RelevanceModel,
    ranked: RankedList,
    index: InvertedIndex,
    depth: int,
    *,
    mu: float = DEFAULT_MU,
) -> RankedList:
    """Reorder the top ``depth`` of ``ranked`` by sum_w model(w) * ln p(w|D).

    Ties are broken by doc_id ascending. Every document must be indexed.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    total_tokens = index.total_tokens
    rescored: list[tuple[str, float]] = []
    for doc_id, _ in ranked.entries[:depth]:
        if doc_id not in index.ordinal_of:
            raise ValueError(f"document {doc_id!r} is not in the index")
        ordinal = index.ordinal_of[doc_id]
        counts = index.term_counts[ordinal]
        doc_len = index.item_lengths[ordinal]
        score = 0.0
        for term, weight in model.term_weights.items():
            corpus_prob = index.collection_freqs.get(term, 0) / total_tokens
            prob = _dirichlet_prob(counts.get(term, 0), doc_len, corpus_prob, mu)
            if prob <= 0.0:
                raise ValueError(f"term {term!r} has zero smoothed probability")
            score += weight * math.log(prob)
        rescored.append((doc_id, score))
    return RankedList.from_scores(ranked.query_id, rescored)


def uef(
    inp: PredictorInput,
    index: InvertedIndex,
    rng_seed: int,
    samples: int,
    sample_size: int,
    *,
    rbo_params: RboParams | None = None,
    mu: float = DEFAULT_MU,
) -> float:
    """Average over seeded subsets of (rank-overlap x subset nqc).

    Each subset is drawn uniformly without replacement from the top
    max(top_k, 50) documents; its relevance model re-ranks the original
    top_k head, and the RBO between the original and re-ranked head is
    multiplied by the subset's nqc. Bit-reproducible for a fixed seed.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if sample_size < 1:
        raise ValueError(f"sample_size must be >= 1, got {sample_size}")
    entries = inp.ranked_list.entries
    pool = entries[: max(inp.top_k, UEF_POOL_FLOOR)]
    if sample_size > len(pool):
        raise ValueError(f"sample_size {sample_size} exceeds the {len(pool)} available documents")
    params = rbo_params if rbo_params is not None else RboParams()
    head = inp.ranked_list.top(min(inp.top_k, len(entries)))
    rng = np.random.default_rng(rng_seed)
    total = 0.0
    for _ in range(samples):
        chosen = sorted(rng.choice(len(pool), size=sample_size, replace=False).tolist())
        subset = RankedList(inp.ranked_list.query_id, [pool[i] for i in chosen])
        subset_nqc = nqc(PredictorInput(subset, inp.collection_score, top_k=sample_size))
        model = build_relevance_model(index, subset, mu=mu)
        reranked = rm_rerank(model, head, index, depth=len(head), mu=mu)
        total += rbo_ext(head, reranked, params) * subset_nqc
    return total / samples


def derive_seed(global_seed: int, query_id: str) -> int:
    """Stable per-query seed so parallel scheduling cannot change outputs."""
    digest = hashlib.sha256(f"{global_seed}:{query_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class PredictorParams:
    """Knobs shared by the base predictors."""

    top_k: int = 100
    uef_samples: int = 20
    uef_sample_size: int = 25
    mu: float = DEFAULT_MU
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B


@dataclass
class PredictorContext:
    """Binds an index, predictor knobs and a global seed into one evaluator.

    Results are memoized per (base, query, list) so parameter sweeps do
    not recompute base predictions.
    """

    index: InvertedIndex
    params: PredictorParams = field(default_factory=PredictorParams)
    rbo_params: RboParams = field(default_factory=RboParams)
    seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def evaluate(self, base: str, run: RankedList, terms: Sequence[str], query_id: str) -> float:
        key = (base, query_id, tuple(run.entries), tuple(terms))
        if key in self._cache:
            return self._cache[key]
        cscore = collection_score(self.index, terms, k1=self.params.k1, b=self.params.b)
        inp = PredictorInput(run, cscore, top_k=self.params.top_k)
        if base == "nqc":
            value = nqc(inp)
        elif base == "uef":
            value = uef(
                inp,
                self.index,
                derive_seed(self.seed, query_id),
                self.params.uef_samples,
                self.params.uef_sample_size,
                rbo_params=self.rbo_params,
                mu=self.params.mu,
            )
        else:
            raise ValueError(f"unknown base predictor {base!r}")
        self._cache[key] = value
        return value
