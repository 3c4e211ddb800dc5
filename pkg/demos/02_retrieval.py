"""
Demonstration retrieval: BM25, dense cosine, and the random baseline
====================================================================

Builds the inverted index over a demonstration pool, scores a query
paragraph, and ranks the top-K shots with leave-one-out self-exclusion.
"""

from synthex.records import SynthesisRecord
from synthex.retrieval import (
    Demonstration,
    DemonstrationPool,
    HashEmbeddingProvider,
    bm25_score,
    bm25_scorer,
    build_index,
    dense_scorer,
    random_select,
    top_k,
)
from synthex.textutil import tokenize

pool = DemonstrationPool(
    tuple(
        Demonstration(id=f"d{i+1}", paragraph=text, gold=SynthesisRecord(solvent_name="DMF"))
        for i, text in enumerate(
            [
                "dmf dmf water",
                "water ethanol",
                "dmf",
                "zinc nitrate dissolved in dmf heated",
                "copper acetate stirred in water",
            ]
        )
    )
)

index = build_index(pool)  # defaults k1=1.5, b=0.75
print(f"N={index.n_docs}  avg_dl={index.avg_dl}  df(dmf)={index.df['dmf']}")

# Per-document scores for the query "dmf": shorter on-topic documents win.
for doc_id in ("d1", "d2", "d3"):
    print(f"  score({doc_id}) = {bm25_score(index, tokenize('dmf'), doc_id):.5f}")

# Top-K selection excludes the query's own entry (leave-one-out).
query = pool.get("d4").paragraph
ranked = top_k(bm25_scorer(index), pool, query, k=3, exclude_id="d4")
print("\nBM25 top-3 for d4's paragraph (d4 excluded):")
for s in ranked:
    print(f"  rank {s.rank}: {s.demo_id}  score={s.score:.4f}")

# Dense retrieval goes through an embedding provider; the hash provider is a
# deterministic local stand-in with the same contract as an HTTP endpoint.
dense = dense_scorer(HashEmbeddingProvider(dimension=64), pool)
print("\ndense top-3:", [s.demo_id for s in top_k(dense, pool, query, 3, exclude_id="d4")])

# The random baseline is seeded and reproducible.
print("random k=2 seed=7:", [s.demo_id for s in random_select(pool, 2, seed=7, exclude_id="d4")])
print("random k=2 seed=7:", [s.demo_id for s in random_select(pool, 2, seed=7, exclude_id="d4")])
