"""
Evaluation: confusion matrix, metrics, and experiment sweeps
============================================================

Every (paragraph, slot) pair lands in exactly one confusion cell. The sweeps
vary K (number of shots) and the demonstration-pool size, reporting means
with a 95% confidence interval. A graded mock model, whose answers improve
with the BM25 relevance of its shots, stands in for a live LLM so the
mechanics run offline.
"""

import re

from synthex.evalkit import EvalHarness, classify_slot
from synthex.extractor import Extractor
from synthex.llmgate import Gateway, MockTransport
from synthex.promptkit import default_template, record_to_completion
from synthex.records import SLOTS, SynthesisRecord
from synthex.retrieval import Demonstration, DemonstrationPool, bm25_scorer, build_index, top_k

# Slot scoring: wrong non-empty predictions hit precision (FP), misses hit
# recall (FN), agreed absences are true negatives.
print(classify_slot("water", "water"))       # TP
print(classify_slot("hot water", "water"))   # FP
print(classify_slot(None, "water"))          # FN
print(classify_slot(None, None))             # TN

# A tiny graded mock: 3 slots correct with no shots, plus 2 per relevant shot.
pool = DemonstrationPool(
    tuple(
        Demonstration(
            id=f"q{i}",
            paragraph=f"zinc nitrate dmf heated variant{i} extra{i % 3}",
            gold=SynthesisRecord(**{slot: f"gold-{slot}-{i}" for slot in SLOTS}),
        )
        for i in range(8)
    )
)
by_text = {d.paragraph: d for d in pool.entries}
scorer = bm25_scorer(build_index(pool))
block = re.compile(r"### (Example \d+|Task)\nParagraph:\n(.*?)\nConditions:", re.DOTALL)


def graded_model(request):
    parts = block.findall(request.user)
    shots = [t for kind, t in parts if kind.startswith("Example")]
    query = by_text[next(t for kind, t in parts if kind == "Task")]
    ranks = {s.demo_id: s.rank for s in top_k(scorer, pool, query.paragraph, pool.n, exclude_id=query.id)}
    weight = sum(2 if ranks.get(by_text[s].id, 99) <= 2 else 1 for s in shots if s in by_text)
    n_correct = min(10, 3 + weight)
    values = {
        slot: (query.gold.get(slot) if i < n_correct else f"wrong-{slot}")
        for i, slot in enumerate(SLOTS)
    }
    return record_to_completion(SynthesisRecord(**values))


def make_extractor(active_pool):
    s = bm25_scorer(build_index(active_pool)) if active_pool.n else None
    return Extractor(Gateway(MockTransport(graded_model)), default_template(), pool=active_pool, scorer=s)


harness = EvalHarness(
    make_extractor,
    pool,
    queries=[(d.id, d.paragraph) for d in pool.entries],
    gold={d.id: d.gold for d in pool.entries},
)

print("\nK-shot sweep (relevant shots help):")
for report in harness.sweep_k([0, 1, 2, 4]):
    print(f"  K={report.config['k']}: F1={report.mean['f1']:.3f} ACC={report.mean['acc']:.3f}")

print("\npool-size sweep, 5 trials each (more annotations, less uncertainty):")
for report in harness.sweep_pool_size([0, 2, 4, 8], trials=5, k=2):
    f1 = report.mean["f1"]
    ci = report.ci_half_width["f1"]
    print(f"  size={report.config['size']}: F1={f1:.3f} ± {ci:.3f}")
