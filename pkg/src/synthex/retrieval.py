"""Demonstration retrieval for few-shot prompting.

Three interchangeable scorers pick the K most relevant gold demonstrations
for a query paragraph: an Okapi-style BM25 over an inverted index, cosine
similarity over vectors from an external embedding provider, and a seeded
random baseline. Ranking is always total: score descending, ties broken by
ascending demonstration id, and the query's own entry can be excluded.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from .records import SynthesisRecord
from .textutil import tokenize


class RetrievalError(Exception):
    pass


class EmbeddingProviderError(RetrievalError):
    pass


@dataclass(frozen=True)
class Demonstration:
    """A gold (paragraph, conditions) pair eligible for few-shot prompting."""

    id: str
    paragraph: str
    gold: SynthesisRecord
    curation_state: str = "Finalized"


@dataclass(frozen=True)
class DemonstrationPool:
    entries: tuple[Demonstration, ...]

    def __post_init__(self) -> None:
        ids = [d.id for d in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("demonstration ids must be unique within a pool")
        not_final = [d.id for d in self.entries if d.curation_state != "Finalized"]
        if not_final:
            raise ValueError(f"pool admits finalized entries only, got {not_final}")

    @property
    def n(self) -> int:
        return len(self.entries)

    def get(self, demo_id: str) -> Demonstration:
        for d in self.entries:
            if d.id == demo_id:
                return d
        raise KeyError(f"no demonstration {demo_id!r} in pool")

    def subset(self, ids: Sequence[str]) -> "DemonstrationPool":
        wanted = set(ids)
        return DemonstrationPool(tuple(d for d in self.entries if d.id in wanted))


@dataclass(frozen=True)
class ScoredDemo:
    demo_id: str
    score: float
    rank: int


# --- BM25 --------------------------------------------------------------------


@dataclass(frozen=True)
class Bm25Index:
    """Inverted index with Okapi BM25 parameters.

    avg_dl is exactly the mean of the indexed document lengths; df(t) <= N.
    """

    doc_ids: tuple[str, ...]
    term_freqs: dict[str, dict[str, int]]  # doc id -> term -> frequency
    doc_lengths: dict[str, int]
    df: dict[str, int]
    avg_dl: float
    n_docs: int
    k1: float = 1.5
    b: float = 0.75

    def __post_init__(self) -> None:
        if self.k1 <= 0:
            raise ValueError("k1 must be > 0")
        if not 0 <= self.b <= 1:
            raise ValueError("b must be in [0, 1]")

    def idf(self, term: str) -> float:
        d = self.df.get(term, 0)
        if d == 0:
            return 0.0
        return math.log(1 + (self.n_docs - d + 0.5) / (d + 0.5))


def build_index(pool: DemonstrationPool, k1: float = 1.5, b: float = 0.75) -> Bm25Index:
    """Index the pool's paragraphs; rebuilding from the same pool is identical."""
    if pool.n == 0:
        raise RetrievalError("cannot build an index over an empty pool")
    term_freqs: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    df: dict[str, int] = {}
    for demo in pool.entries:
        tokens = tokenize(demo.paragraph)
        freqs: dict[str, int] = {}
        for tok in tokens:
            freqs[tok] = freqs.get(tok, 0) + 1
        term_freqs[demo.id] = freqs
        doc_lengths[demo.id] = len(tokens)
        for tok in freqs:
            df[tok] = df.get(tok, 0) + 1
    n = pool.n
    avg_dl = sum(doc_lengths.values()) / n
    return Bm25Index(
        doc_ids=tuple(d.id for d in pool.entries),
        term_freqs=term_freqs,
        doc_lengths=doc_lengths,
        df=df,
        avg_dl=avg_dl,
        n_docs=n,
        k1=k1,
        b=b,
    )


def bm25_score(index: Bm25Index, query_tokens: Sequence[str], doc_id: str) -> float:
    """Sum of per-term saturated tf times idf; unique query terms counted once."""
    if doc_id not in index.term_freqs:
        raise KeyError(f"document {doc_id!r} not in index")
    freqs = index.term_freqs[doc_id]
    dl = index.doc_lengths[doc_id]
    score = 0.0
    for term in sorted(set(query_tokens)):
        f = freqs.get(term, 0)
        if f == 0:
            continue
        denom = f + index.k1 * (1 - index.b + index.b * dl / index.avg_dl)
        score += index.idf(term) * f * (index.k1 + 1) / denom
    return score


# --- dense (external embeddings) ----------------------------------------------


class EmbeddingProvider(Protocol):
    """External embedding endpoint: a batch of texts to equal-dimension vectors."""

    dimension: int

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


@dataclass
class HttpEmbeddingProvider:
    """POSTs {"texts": [...]}; expects {"vectors": [[...], ...]}."""

    url: str
    dimension: int
    timeout: float = 30.0

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        import httpx

        try:
            resp = httpx.post(self.url, json={"texts": list(texts)}, timeout=self.timeout)
            resp.raise_for_status()
            vectors = resp.json()["vectors"]
        except Exception as exc:
            raise EmbeddingProviderError(f"embedding provider failed: {exc}") from exc
        for v in vectors:
            if len(v) != self.dimension:
                raise EmbeddingProviderError(
                    f"provider returned dimension {len(v)}, declared {self.dimension}"
                )
        return vectors


@dataclass
class HashEmbeddingProvider:
    """Deterministic local stand-in: bag-of-token-hash vectors. Test/demo use."""

    dimension: int = 64

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        out = []
        for text in texts:
            vec = [0.0] * self.dimension
            for tok in tokenize(text):
                vec[hash_bucket(tok, self.dimension)] += 1.0
            out.append(vec)
        return out


def hash_bucket(token: str, dim: int) -> int:
    # FNV-1a, stable across processes (unlike builtin hash with PYTHONHASHSEED)
    h = 0xCBF29CE484222325
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h % dim


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(x * x for x in v))
    if nu == 0 or nv == 0:
        raise RetrievalError("cosine similarity undefined for a zero vector")
    return sum(a * b for a, b in zip(u, v)) / (nu * nv)


def dense_score(provider: EmbeddingProvider, query_text: str, doc_text: str) -> float:
    q, d = provider.embed([query_text, doc_text])
    return cosine(q, d)


# --- selection -----------------------------------------------------------------

Scorer = Callable[[str, Demonstration], float]


def bm25_scorer(index: Bm25Index) -> Scorer:
    def score(query_text: str, demo: Demonstration) -> float:
        return bm25_score(index, tokenize(query_text), demo.id)

    return score


def dense_scorer(provider: EmbeddingProvider, pool: DemonstrationPool) -> Scorer:
    # One batch embeds the whole pool up front; query embeddings are memoized
    # so ranking a query costs one provider call.
    vectors = {d.id: v for d, v in zip(pool.entries, provider.embed([d.paragraph for d in pool.entries]))}
    query_cache: dict[str, list[float]] = {}

    def score(query_text: str, demo: Demonstration) -> float:
        if query_text not in query_cache:
            (q,) = provider.embed([query_text])
            query_cache[query_text] = q
        return cosine(query_cache[query_text], vectors[demo.id])

    return score


def top_k(
    scorer: Scorer,
    pool: DemonstrationPool,
    query_text: str,
    k: int,
    exclude_id: str | None = None,
) -> list[ScoredDemo]:
    """Rank eligible demonstrations and keep the first K.

    Total order: score descending, then demonstration id ascending. The
    excluded id never appears. Result length is min(K, eligible pool size).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    eligible = [d for d in pool.entries if d.id != exclude_id]
    scored = sorted(
        ((scorer(query_text, d), d.id) for d in eligible),
        key=lambda pair: (-pair[0], pair[1]),
    )
    return [ScoredDemo(demo_id=i, score=s, rank=r + 1) for r, (s, i) in enumerate(scored[:k])]


def random_select(
    pool: DemonstrationPool,
    k: int,
    seed: int,
    exclude_id: str | None = None,
) -> list[ScoredDemo]:
    """Uniform sample without replacement; deterministic for a given seed."""
    if k < 0:
        raise ValueError("k must be >= 0")
    eligible = [d.id for d in pool.entries if d.id != exclude_id]
    rng = random.Random(seed)
    chosen = rng.sample(eligible, min(k, len(eligible)))
    return [ScoredDemo(demo_id=i, score=0.0, rank=r + 1) for r, i in enumerate(chosen)]
