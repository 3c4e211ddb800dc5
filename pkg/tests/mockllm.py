"""A scripted model whose answer quality rises with the BM25 relevance of the
shots it is given. Used to validate sweep mechanics, not any real model."""

from __future__ import annotations

import re

from synthex.promptkit import record_to_completion
from synthex.records import SLOTS, SynthesisRecord
from synthex.retrieval import DemonstrationPool, bm25_scorer, build_index, top_k

_BLOCK_RE = re.compile(r"### (Example \d+|Task)\nParagraph:\n(.*?)\nConditions:", re.DOTALL)

#: Weight of a shot by its BM25 rank for the query: top-2 shots teach the
#: most, the rest of the top-8 a little, anything lower nothing.
def _rank_weight(rank: int) -> int:
    if rank <= 2:
        return 2
    if rank <= 8:
        return 1
    return 0


class GradedMockModel:
    """correct slots = 3 + sum of shot weights, capped at 10."""

    def __init__(self, pool: DemonstrationPool):
        self.pool = pool
        self.by_text = {d.paragraph: d for d in pool.entries}
        self.scorer = bm25_scorer(build_index(pool))

    def _ranks_for(self, query_text: str, query_id: str | None) -> dict[str, int]:
        ranked = top_k(self.scorer, self.pool, query_text, self.pool.n, exclude_id=query_id)
        return {s.demo_id: s.rank for s in ranked}

    def __call__(self, request) -> str:
        blocks = _BLOCK_RE.findall(request.user)
        shots = [text for kind, text in blocks if kind.startswith("Example")]
        query_text = next(text for kind, text in blocks if kind == "Task")
        query = self.by_text.get(query_text)
        if query is None:
            return record_to_completion(SynthesisRecord())
        ranks = self._ranks_for(query_text, query.id)
        weight = 0
        for shot_text in shots:
            shot = self.by_text.get(shot_text)
            if shot is not None and shot.id in ranks:
                weight += _rank_weight(ranks[shot.id])
        n_correct = min(len(SLOTS), 3 + weight)
        values = {}
        for i, slot in enumerate(SLOTS):
            gold_value = query.gold.get(slot)
            values[slot] = gold_value if i < n_correct else f"wrong-{slot}"
        return record_to_completion(SynthesisRecord(**values))


def make_harness_pool(n: int = 10) -> DemonstrationPool:
    """Pool with graded lexical overlap so BM25 rankings are non-trivial."""
    from synthex.retrieval import Demonstration

    themes = ["zinc", "copper"]
    entries = []
    for i in range(n):
        theme = themes[i % 2]
        shared = f"{theme} nitrate dissolved dmf heated"
        specific = f"variant{i} linker{i % 3} temp{i % 4}"
        gold = SynthesisRecord(
            **{slot: f"{theme}-{slot}-{i}" for slot in SLOTS}
        )
        entries.append(
            Demonstration(id=f"q{i:02d}", paragraph=f"{shared} {specific}", gold=gold)
        )
    return DemonstrationPool(tuple(entries))
